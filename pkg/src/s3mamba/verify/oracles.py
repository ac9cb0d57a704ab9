"""Independent oracles for the numerical core, run by ``s3mamba verify``.

Each check returns a :class:`CheckResult`; none of them raises on a numerical
mismatch, so a full report is always produced.
"""

import math
import time
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel
from scipy.integrate import quad
from scipy.linalg import expm

from ..autodiff.gradcheck import gradcheck
from ..autodiff.gradcheck import random_projection
from ..autodiff.tensor import Array
from ..autodiff.tensor import Tensor
from ..autodiff.tensor import no_grad
from ..config.logging import get_logger
from ..config.logging import log_check
from ..core.models import BlockConfig
from ..core.models import ModelConfig
from ..data.pipeline import cell_centers
from ..data.resample import bicubic_resample
from ..data.resample import cubic_kernel
from ..data.rng import SplitMix64
from ..metrics.quality import gaussian_window
from ..metrics.quality import psnr
from ..metrics.quality import rgb_to_y
from ..metrics.quality import ssim
from ..nn.block import FeatureMap
from ..nn.block import SequenceSSSM
from ..nn.block import SSSMBlock
from ..nn.model import S3Mamba
from ..nn.module import Module
from ..ssm.discretize import PHI1_TAYLOR
from ..ssm.discretize import phi1
from ..ssm.discretize import zoh_arrays
from ..ssm.discretize import zoh_discretize
from ..ssm.modulation import ScaleContext
from ..ssm.scan import recurrence_blocked
from ..ssm.scan import scan
from ..ssm.scan import scan_discretized
from ..training.loss import l1_loss

logger = get_logger(__name__)

ZOH_SAMPLES = 100_000
ZOH_QUICK_SAMPLES = 2_000


class CheckResult(BaseModel):
    """Outcome of one oracle comparison."""

    name: str
    passed: bool
    seconds: float
    detail: str


def perturb_parameters(module: Module, rng: SplitMix64, scale: float = 0.1) -> None:
    """Add Gaussian noise to every parameter so zero-initialized paths are exercised."""
    for p in module.parameters():
        p.data += scale * rng.normal_array(p.shape)


# ------------------------------------------------------------ discretization


def zoh_oracle(a: float, b: float, delta: float) -> tuple[float, float]:
    """Matrix exponential of the augmented system ``[[a, b], [0, 0]] * delta``."""
    m = expm(np.array([[a, b], [0.0, 0.0]]) * delta)
    return float(m[0, 0]), float(m[0, 1])


def zoh_oracle_batch(a: Array, b: Array, delta: Array) -> tuple[Array, Array]:
    """:func:`zoh_oracle` over stacked ``[N, 2, 2]`` augmented systems."""
    m = np.zeros((a.size, 2, 2))
    m[:, 0, 0] = a * delta
    m[:, 0, 1] = b * delta
    ref = expm(m)
    return ref[:, 0, 0], ref[:, 0, 1]


def zoh_quadrature(a: float, b: float, delta: float) -> float:
    """``b * integral_0^delta exp(a t) dt`` by adaptive quadrature."""
    value, _ = quad(lambda t: math.exp(a * t), 0.0, delta, epsabs=0.0, epsrel=1e-13, limit=200)
    return b * value


def _rel(x: float, y: float) -> float:
    return abs(x - y) / max(abs(y), 1e-300)


def check_zoh(
    samples: int = ZOH_SAMPLES, quad_samples: int = 500, inject_abar_error: float = 0.0
) -> tuple[bool, str]:
    """Random ``(a, b, delta)`` against the matrix exponential and quadrature oracles."""
    rng = SplitMix64(0x2011)
    a = -np.exp(rng.uniform_array(samples, math.log(1e-8), math.log(10.0)))
    b = rng.uniform_array(samples, -5.0, 5.0)
    delta = np.exp(rng.uniform_array(samples, math.log(1e-6), 0.0))
    abar, bbar = zoh_arrays(a, b, delta)
    if inject_abar_error:
        abar = abar + np.where(np.arange(samples) % 2 == 0, inject_abar_error, -inject_abar_error)
    ref_a, ref_b = zoh_oracle_batch(a, b, delta)
    tiny = np.finfo(np.float64).tiny
    worst = 0.0
    if samples:
        worst = max(
            float(np.max(np.abs(abar - ref_a) / np.maximum(np.abs(ref_a), tiny))),
            float(np.max(np.abs(bbar - ref_b) / np.maximum(np.abs(ref_b), tiny))),
        )

    # scalar entry point and quadrature on a prefix
    for i in range(min(quad_samples, samples)):
        s_a, s_b = zoh_discretize(float(a[i]), float(b[i]), float(delta[i]))
        if inject_abar_error:
            s_a += inject_abar_error if i % 2 == 0 else -inject_abar_error
        ref = zoh_oracle(float(a[i]), float(b[i]), float(delta[i]))
        quad_b = zoh_quadrature(float(a[i]), float(b[i]), float(delta[i]))
        worst = max(worst, _rel(s_a, ref[0]), _rel(s_b, ref[1]), _rel(s_b, quad_b))

    # no jump where phi1 switches to its Taylor branch
    jump = 0.0
    for edge in (-PHI1_TAYLOR, PHI1_TAYLOR):
        inside, outside = phi1([edge * (1 - 1e-9), edge * (1 + 1e-9)])
        jump = max(jump, abs(float(inside) - float(outside)))
    passed = worst < 1e-9 and jump < 1e-12
    return passed, f"max rel err {worst:.2e}, taylor jump {jump:.2e}"


# ---------------------------------------------------------------------- scan


def _random_scan_inputs(rng: SplitMix64, groups: int, length: int, d: int, n: int) -> tuple[Array, ...]:
    x = rng.uniform_array((groups, length, d), -1.0, 1.0)
    delta = rng.uniform_array((groups, length, d), 0.01, 1.0)
    a = -rng.uniform_array((d, n), 0.1, 5.0)
    b = rng.normal_array((groups, length, n))
    c = rng.normal_array((groups, length, n))
    dd = rng.normal_array(d)
    return x, delta, a, b, c, dd


def _scan_arrays(inputs: tuple[Array, ...], method: str) -> Array:
    with no_grad():
        tensors = [Tensor(v) for v in inputs]
        return scan(*tensors, method=method).data  # type: ignore[arg-type]


def unrolled_oracle(abar: Array, bbar: Array, c: Array, d: Array, x: Array) -> Array:
    """Dense evaluation ``y_k = sum_j C_k (prod_{j<i<=k} abar_i) bbar_j x_j + D x_k``."""
    groups, length, channels = x.shape
    y = np.zeros_like(x)
    for g in range(groups):
        for k in range(length):
            for ch in range(channels):
                total = d[ch] * x[g, k, ch]
                for j in range(k + 1):
                    decay = np.ones(abar.shape[-1])
                    for i in range(j + 1, k + 1):
                        decay = decay * abar[g, i, ch]
                    total += float(np.dot(c[g, k], decay * bbar[g, j, ch] * x[g, j, ch]))
                y[g, k, ch] = total
    return y


def check_scan_equivalence(instances: int = 100) -> tuple[bool, str]:
    """Sequential vs blocked on random instances, and sequential vs the dense oracle."""
    rng = SplitMix64(0x5CA9)
    worst_parallel = 0.0
    for _ in range(instances):
        length = 1 + rng.randbelow(1024)
        d = 1 + rng.randbelow(8)
        n = 1 + rng.randbelow(8)
        inputs = _random_scan_inputs(rng, 1, length, d, n)
        seq = _scan_arrays(inputs, "sequential")
        par = _scan_arrays(inputs, "blocked")
        worst_parallel = max(worst_parallel, float(np.abs(seq - par).max()))

    worst_dense = 0.0
    for _ in range(10):
        length = 1 + rng.randbelow(16)
        x, delta, a, b, c, dd = _random_scan_inputs(rng, 1, length, 2, 3)
        z = delta[..., None] * a
        abar = np.exp(z)
        bbar = delta[..., None] * b[:, :, None, :] * phi1(z)
        oracle = unrolled_oracle(abar, bbar, c, dd, x)
        worst_dense = max(worst_dense, float(np.abs(scan_discretized(abar, bbar, c, dd, x) - oracle).max()))
        worst_dense = max(worst_dense, float(np.abs(_scan_arrays((x, delta, a, b, c, dd), "sequential") - oracle).max()))

    passed = worst_parallel < 1e-10 and worst_dense < 1e-12
    return passed, f"seq/blocked {worst_parallel:.2e}, seq/dense {worst_dense:.2e}"


def check_blocked_recurrence() -> tuple[bool, str]:
    """Blocked recurrence with every block size against a direct loop."""
    rng = SplitMix64(0xB10C)
    a = rng.uniform_array((2, 37, 3), 0.0, 1.0)
    b = rng.normal_array((2, 37, 3))
    h = np.zeros((2, 3))
    ref = np.empty_like(b)
    for k in range(37):
        h = a[:, k] * h + b[:, k]
        ref[:, k] = h
    worst = max(float(np.abs(recurrence_blocked(a, b, block) - ref).max()) for block in range(1, 40))
    return worst < 1e-12, f"max abs err {worst:.2e}"


# ----------------------------------------------------------------- gradients


def check_scan_gradient() -> tuple[bool, str]:
    """Every scan input, both evaluation orders, on a 2-channel, 2-state, length-5 instance."""
    rng = SplitMix64(0x6AD)
    worst = 0.0
    for method in ("sequential", "blocked"):
        x, delta, a, b, c, dd = _random_scan_inputs(rng, 1, 5, 2, 2)
        x_t = Tensor(x, requires_grad=True)
        delta_t = Tensor(delta, requires_grad=True)
        a_log = Tensor(np.log(-a), requires_grad=True)
        b_t = Tensor(b, requires_grad=True)
        c_t = Tensor(c, requires_grad=True)
        d_t = Tensor(dd, requires_grad=True)
        inputs = [x_t, delta_t, a_log, b_t, c_t, d_t]

        def fn(method: str = method) -> Tensor:
            y = scan(x_t, delta_t, -a_log.exp(), b_t, c_t, d_t, method=method)  # type: ignore[arg-type]
            return random_projection(y)

        result = gradcheck(fn, inputs)
        worst = max(worst, result.max_rel_error)
    return worst < 1e-4, f"max rel err {worst:.2e}"


def _block_gradient() -> float:
    rng = SplitMix64(0xB1)
    block = SSSMBlock(BlockConfig(d_model=4, d_inner=8, n_state=2), rng)
    perturb_parameters(block, rng)
    x = Tensor(rng.normal_array((1, 4, 4, 4)), requires_grad=True)
    ctx = ScaleContext(2.5, cell_centers(4, 4))

    def fn() -> Tensor:
        return random_projection(block(FeatureMap(x), ctx).tensor)

    result = gradcheck(fn, [x, *block.parameters()], max_per_input=6, floor=1e-6)
    return result.pass_rate


def _toy_model(seed: int = 7) -> S3Mamba:
    cfg = ModelConfig(d_model=8, n_state=4, n_resblocks=1, n_sssm_blocks=1, sigma_hidden=4)
    model = S3Mamba(cfg, seed=seed)
    perturb_parameters(model, SplitMix64(seed + 1))
    return model


def model_gradient_pass_rate(max_per_input: int = 3) -> float:
    """Fraction of sampled coordinates whose end-to-end L1 gradient matches finite differences."""
    rng = SplitMix64(0xE2E)
    model = _toy_model()
    lr = Tensor(rng.uniform_array((1, 3, 8, 8)), requires_grad=True)
    picked = np.sort(np.asarray(rng.choice(16 * 16, 16)))
    coords = cell_centers(16, 16)[picked]
    target = Tensor(rng.uniform_array((16, 3)))

    def fn() -> Tensor:
        return l1_loss(model(lr, coords, 2.0), target)

    result = gradcheck(fn, [lr, *model.parameters()], max_per_input=max_per_input, floor=1e-6)
    return result.pass_rate


def check_gradients() -> tuple[bool, str]:
    """SSSM block and end-to-end model gradients against finite differences."""
    block_rate = _block_gradient()
    model_rate = model_gradient_pass_rate()
    passed = block_rate >= 0.99 and model_rate >= 0.99
    return passed, f"block pass {block_rate:.3f}, model pass {model_rate:.3f}"


# ------------------------------------------------------------ identity at init


def check_identity_at_init(trials: int = 100) -> tuple[bool, str]:
    """Fresh scale heads leave block and sequence outputs equal to the scale-blind ones."""
    rng = SplitMix64(0x1D)
    block = SSSMBlock(BlockConfig(d_model=4, d_inner=8, n_state=4), rng)
    seq = SequenceSSSM(4, 8, 4, rng)
    for layer in (block.proj_out, seq.proj_out):
        layer.weight.data[...] = rng.normal_array(layer.weight.shape)
    coords = cell_centers(4, 4)
    worst = 0.0
    with no_grad():
        for _ in range(trials):
            scale = rng.uniform(0.25, 30.0)
            fmap = FeatureMap(Tensor(rng.normal_array((1, 4, 4, 4))))
            aware = block(fmap, ScaleContext(scale, coords)).tensor.data
            blind = block(fmap, None).tensor.data
            worst = max(worst, float(np.abs(aware - blind).max()))

            x = Tensor(rng.normal_array((16, 4)))
            ctx = ScaleContext(scale, coords)
            seq_aware = seq(x, ctx).data
            seq.ssm.scale_aware = False
            seq_blind = seq(x, ctx).data
            seq.ssm.scale_aware = True
            worst = max(worst, float(np.abs(seq_aware - seq_blind).max()))
    return worst <= 1e-12, f"max abs diff {worst:.2e}"


# ------------------------------------------------------------------ resampler


def direct_resample(img: Array, out_h: int, out_w: int) -> Array:
    """Per-pixel evaluation of the separable kernel sum (slow reference)."""
    channels, height, width = img.shape
    out = np.zeros((channels, out_h, out_w))

    def taps(n_in: int, n_out: int, o: int) -> list[tuple[int, float]]:
        stretch = max(n_in / n_out, 1.0)
        src = (o + 0.5) * n_in / n_out - 0.5
        lo = math.floor(src - 2.0 * stretch)
        hi = math.ceil(src + 2.0 * stretch)
        weights = [(j, float(cubic_kernel((src - j) / stretch))) for j in range(lo, hi + 1)]
        total = sum(w for _, w in weights)
        return [(min(max(j, 0), n_in - 1), w / total) for j, w in weights]

    for i in range(out_h):
        row_taps = taps(height, out_h, i)
        for j in range(out_w):
            col_taps = taps(width, out_w, j)
            for r, wr in row_taps:
                for c, wc in col_taps:
                    out[:, i, j] += wr * wc * img[:, r, c]
    return out


def check_resampler() -> tuple[bool, str]:
    """Constant preservation, linear precision and the direct-evaluation oracle."""
    rng = SplitMix64(0x2E5)
    constant = np.full((3, 20, 14), 0.37)
    const_err = max(
        float(np.abs(bicubic_resample(constant, h, w) - 0.37).max())
        for h, w in ((10, 7), (31, 29), (5, 5), (20, 14))
    )

    # f(y, x) = 0.3 y + 0.5 x + 0.1 on pixel centers; mapped sample positions away from the border
    yy, xx = np.mgrid[0:24, 0:24].astype(np.float64)
    plane = np.stack([0.3 * yy + 0.5 * xx + 0.1] * 3) / 20.0
    linear_err = 0.0
    for out in (12, 8, 48, 72):
        res = bicubic_resample(plane, out, out)
        src = (np.arange(out) + 0.5) * 24 / out - 0.5
        expected = (0.3 * src[:, None] + 0.5 * src[None, :] + 0.1) / 20.0
        margin = max(3, math.ceil(4 * out / 24))
        inner = slice(margin, out - margin)
        linear_err = max(linear_err, float(np.abs(res[0, inner, inner] - expected[inner, inner]).max()))

    img = rng.uniform_array((3, 8, 8))
    direct_err = float(np.abs(bicubic_resample(img, 24, 24) - direct_resample(img, 24, 24)).max())
    passed = const_err < 1e-10 and linear_err < 1e-10 and direct_err < 1e-12
    return passed, f"constant {const_err:.1e}, linear {linear_err:.1e}, direct {direct_err:.1e}"


# -------------------------------------------------------------------- metrics


def check_metrics() -> tuple[bool, str]:
    """Analytic PSNR, SSIM identity and the constant-image SSIM closed form."""
    rng = SplitMix64(0x3E7)
    gt = rng.uniform_array((3, 32, 32), 0.1, 0.9)
    offset = psnr(gt + 10.0 / 255.0, gt)
    psnr_err = abs(offset - 20.0 * math.log10(25.5))
    same = ssim(gt, gt)

    v1, v2 = 0.4, 0.4 + 1e-3
    a = np.full((3, 24, 24), v1)
    b = np.full((3, 24, 24), v2)
    y1 = float(rgb_to_y(a)[0, 0])
    y2 = float(rgb_to_y(b)[0, 0])
    c1 = 0.01**2
    closed = (2 * y1 * y2 + c1) / (y1 * y1 + y2 * y2 + c1)
    const_err = abs(ssim(a, b) - closed)
    window_sum = abs(float(gaussian_window().sum()) - 1.0)
    passed = psnr_err < 1e-6 and same == 1.0 and const_err < 1e-9 and window_sum < 1e-12
    return passed, f"psnr err {psnr_err:.1e}, ssim(x,x)={same!r}, constant err {const_err:.1e}"


def run_checks(inject_abar_error: float = 0.0, quick: bool = False) -> list[CheckResult]:
    """Run every oracle and log one ``check_done`` event per check."""
    zoh_samples = ZOH_QUICK_SAMPLES if quick else ZOH_SAMPLES
    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("zoh_oracle", lambda: check_zoh(zoh_samples, inject_abar_error=inject_abar_error)),
        ("scan_equivalence", lambda: check_scan_equivalence(10 if quick else 100)),
        ("blocked_recurrence", check_blocked_recurrence),
        ("scan_gradient", check_scan_gradient),
        ("identity_at_init", lambda: check_identity_at_init(10 if quick else 100)),
        ("resampler", check_resampler),
        ("metrics", check_metrics),
    ]
    if not quick:
        checks.append(("model_gradients", check_gradients))
    results: list[CheckResult] = []
    for name, fn in checks:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as e:  # a crashing oracle is a failed check
            passed, detail = False, f"{type(e).__name__}: {e}"
        seconds = time.perf_counter() - start
        log_check(logger, name, passed, seconds, detail)
        results.append(CheckResult(name=name, passed=passed, seconds=seconds, detail=detail))
    return results
