"""Scalable selective state space layer: discretization, modulation and scan."""

from .discretize import phi1
from .discretize import zoh_discretize
from .modulation import DiscretizedStep
from .modulation import ModulatedStep
from .modulation import ScaleContext
from .modulation import compute_scale_modulation
from .modulation import discretize_steps
from .modulation import modulate
from .params import SsmParams
from .params import compute_input_projections
from .scan import scan
from .scan import scan_parallel
from .scan import selective_scan

__all__ = [
    "DiscretizedStep",
    "ModulatedStep",
    "ScaleContext",
    "SsmParams",
    "compute_input_projections",
    "compute_scale_modulation",
    "discretize_steps",
    "modulate",
    "phi1",
    "scan",
    "scan_parallel",
    "selective_scan",
    "zoh_discretize",
]
