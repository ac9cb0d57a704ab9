"""Tests for zero-order-hold discretization."""

import math

import numpy as np
import pytest

from s3mamba.core.exceptions import DiscretizationError
from s3mamba.ssm.discretize import DPHI1_TAYLOR
from s3mamba.ssm.discretize import PHI1_TAYLOR
from s3mamba.ssm.discretize import dphi1
from s3mamba.ssm.discretize import phi1
from s3mamba.ssm.discretize import zoh_arrays
from s3mamba.ssm.discretize import zoh_discretize
from s3mamba.verify.oracles import zoh_oracle
from s3mamba.verify.oracles import zoh_quadrature


class TestPhi1:
    """Test the (exp(z) - 1) / z helper and its derivative."""

    def test_zero(self) -> None:
        """Test the removable singularity."""
        assert phi1(0.0) == 1.0
        assert dphi1(0.0) == 0.5

    @pytest.mark.parametrize("z", [-3.0, -0.5, -1e-3, 1e-3, 0.7])
    def test_closed_form(self, z: float) -> None:
        """Test against expm1(z)/z away from zero."""
        assert float(phi1(z)) == pytest.approx(math.expm1(z) / z, rel=1e-14)

    @pytest.mark.parametrize("edge", [PHI1_TAYLOR, -PHI1_TAYLOR])
    def test_continuous_at_switch(self, edge: float) -> None:
        """Test that both branches agree where the Taylor branch takes over."""
        inside, outside = phi1([edge * (1 - 1e-9), edge * (1 + 1e-9)])
        assert abs(inside - outside) < 1e-12

    @pytest.mark.parametrize("edge", [DPHI1_TAYLOR, -DPHI1_TAYLOR])
    def test_derivative_continuous_at_switch(self, edge: float) -> None:
        """Test the derivative's branch switch."""
        inside, outside = dphi1([edge * (1 - 1e-9), edge * (1 + 1e-9)])
        assert abs(inside - outside) < 1e-10

    def test_derivative_matches_finite_difference(self) -> None:
        """Test dphi1 against a central difference of phi1."""
        for z in (-2.0, -0.3, -0.005, 0.004, 0.2):
            h = 1e-6
            numeric = (float(phi1(z + h)) - float(phi1(z - h))) / (2 * h)
            assert float(dphi1(z)) == pytest.approx(numeric, rel=1e-6)


class TestZohDiscretize:
    """Test scalar ZOH discretization."""

    def test_half_life_example(self) -> None:
        """Test (a=-1, b=1, delta=ln 2) -> (0.5, 0.5)."""
        abar, bbar = zoh_discretize(-1.0, 1.0, math.log(2.0))
        assert abar == pytest.approx(0.5, rel=1e-15)
        assert bbar == pytest.approx(0.5, rel=1e-15)

    def test_vanishing_step(self) -> None:
        """Test the delta -> 0 limit."""
        abar, bbar = zoh_discretize(-3.0, 2.0, 1e-12)
        assert abar == pytest.approx(1.0)
        assert abs(bbar) < 1e-11

    def test_taylor_limit(self) -> None:
        """Test a tiny pole: bbar -> delta * b."""
        abar, bbar = zoh_discretize(-1e-9, 2.0, 0.1)
        assert abar == pytest.approx(1.0, abs=1e-9)
        assert bbar == pytest.approx(0.2, rel=1e-9)

    @pytest.mark.parametrize("delta", [0.0, -0.1, math.inf, math.nan])
    def test_invalid_step(self, delta: float) -> None:
        """Test that non-positive or non-finite steps are rejected."""
        with pytest.raises(DiscretizationError):
            zoh_discretize(-1.0, 1.0, delta)

    def test_unstable_pole(self) -> None:
        """Test that a non-negative pole outside the Taylor range is rejected."""
        with pytest.raises(DiscretizationError):
            zoh_discretize(0.5, 1.0, 1.0)

    def test_matches_oracles(self) -> None:
        """Test agreement with the matrix exponential and with quadrature."""
        for a, b, delta in [(-10.0, 3.0, 1.0), (-0.01, -2.0, 0.5), (-1e-6, 1.0, 1e-3), (-4.2, 0.7, 1e-6)]:
            abar, bbar = zoh_discretize(a, b, delta)
            ref_a, ref_b = zoh_oracle(a, b, delta)
            assert abar == pytest.approx(ref_a, rel=1e-9)
            assert bbar == pytest.approx(ref_b, rel=1e-9)
            assert bbar == pytest.approx(zoh_quadrature(a, b, delta), rel=1e-9)

    def test_array_form_broadcasts(self) -> None:
        """Test that the array form agrees with the scalar form."""
        a = np.array([[-1.0, -2.0]])
        delta = np.array([[0.1], [0.2]])
        abar, bbar = zoh_arrays(a, 1.5, delta)
        assert abar.shape == (2, 2)
        assert bbar[1, 1] == pytest.approx(zoh_discretize(-2.0, 1.5, 0.2)[1], rel=1e-15)
