"""Tests for the tensor engine."""

from unittest.mock import patch

import numpy as np
import pytest

from s3mamba.autodiff.gradcheck import gradcheck
from s3mamba.autodiff.tensor import Tensor
from s3mamba.autodiff.tensor import concat
from s3mamba.autodiff.tensor import elementwise
from s3mamba.autodiff.tensor import is_grad_enabled
from s3mamba.autodiff.tensor import matmul
from s3mamba.autodiff.tensor import no_grad
from s3mamba.autodiff.tensor import take
from s3mamba.core.exceptions import NonFiniteError
from s3mamba.core.exceptions import ShapeError
from s3mamba.core.exceptions import ZeroDivisionTensorError
from s3mamba.data.rng import SplitMix64


class TestElementwise:
    """Test elementwise operations and their gradients."""

    def test_forward_values(self) -> None:
        """Test the forward values of the named ops."""
        a = Tensor([1.0, -2.0, 0.5])
        b = Tensor([2.0, 4.0, -1.0])
        assert np.allclose(elementwise("add", a, b).data, [3.0, 2.0, -0.5])
        assert np.allclose(elementwise("sub", a, b).data, [-1.0, -6.0, 1.5])
        assert np.allclose(elementwise("mul", a, b).data, [2.0, -8.0, -0.5])
        assert np.allclose(elementwise("div", a, b).data, [0.5, -0.5, -0.5])
        assert np.allclose(elementwise("abs", a).data, [1.0, 2.0, 0.5])
        assert np.allclose(elementwise("softplus", Tensor(0.0)).data, np.log(2.0))

    def test_unknown_op(self) -> None:
        """Test that an unknown op name is rejected."""
        with pytest.raises(ValueError):
            elementwise("cube", Tensor(1.0))

    def test_arity_checked(self) -> None:
        """Test that binary ops need two operands and unary ops one."""
        with pytest.raises(ShapeError):
            elementwise("add", Tensor(1.0))
        with pytest.raises(ShapeError):
            elementwise("exp", Tensor(1.0), Tensor(2.0))

    def test_broadcast_mismatch(self) -> None:
        """Test that non-broadcastable shapes raise ShapeError."""
        with pytest.raises(ShapeError):
            Tensor(np.ones(3)) + Tensor(np.ones(4))

    def test_second_operand_broadcasts_onto_first(self) -> None:
        """Test that the named op keeps the first operand's shape."""
        a = Tensor(np.ones((2, 3)))
        assert elementwise("mul", a, Tensor([1.0, 2.0, 3.0])).shape == (2, 3)
        assert elementwise("add", a, Tensor(1.0)).shape == (2, 3)
        with pytest.raises(ShapeError):
            elementwise("add", Tensor([1.0, 2.0, 3.0]), a)
        with pytest.raises(ShapeError):
            elementwise("div", Tensor(np.ones((2, 1))), Tensor(np.ones((1, 3))))

    def test_operators_broadcast_both_ways(self) -> None:
        """Test that arithmetic operators follow numpy broadcasting on either side."""
        assert (1.0 - Tensor(np.ones((2, 3)))).shape == (2, 3)
        assert (Tensor(np.ones((2, 1))) * Tensor(np.ones((1, 3)))).shape == (2, 3)

    def test_mul_gradient(self) -> None:
        """Test d(x*y)/dx = y, d(x*y)/dy = x."""
        x = Tensor([2.0, 3.0], requires_grad=True)
        y = Tensor([5.0, 7.0], requires_grad=True)
        (x * y).sum().backward()
        assert np.array_equal(x.grad, [5.0, 7.0])
        assert np.array_equal(y.grad, [2.0, 3.0])

    def test_shared_input_accumulates(self) -> None:
        """Test that a tensor used twice receives the sum of both contributions."""
        x = Tensor(3.0, requires_grad=True)
        (x * x + x).backward()
        assert x.grad == pytest.approx(7.0)

    def test_broadcast_gradient_is_reduced(self) -> None:
        """Test that gradients of broadcast operands are summed back to their shape."""
        x = Tensor(np.ones((4, 3)), requires_grad=True)
        b = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
        (x + b).sum().backward()
        assert b.grad.shape == (3,)
        assert np.array_equal(b.grad, [4.0, 4.0, 4.0])

    def test_unary_gradients_match_finite_differences(self) -> None:
        """Test every smooth unary op against central differences."""
        rng = SplitMix64(3)
        x = Tensor(rng.uniform_array(6, 0.2, 2.0), requires_grad=True)
        for op in ("exp", "log", "silu", "sigmoid", "softplus", "tanh", "neg"):
            result = gradcheck(lambda op=op: elementwise(op, x).sum(), [x])
            assert result.max_rel_error < 1e-6, op

    def test_division_by_zero_in_debug_mode(self) -> None:
        """Test that debug mode rejects a zero divisor."""
        with patch("s3mamba.autodiff.tensor.settings") as mock_settings:
            mock_settings.debug = True
            with pytest.raises(ZeroDivisionTensorError):
                Tensor([1.0]) / Tensor([0.0])

    def test_non_finite_in_debug_mode(self) -> None:
        """Test that debug mode flags NaN outputs."""
        with patch("s3mamba.autodiff.tensor.settings") as mock_settings:
            mock_settings.debug = True
            with pytest.raises(NonFiniteError):
                Tensor([-1.0]).log()


class TestStructuralOps:
    """Test reshape, transpose, slicing, gather and concatenation."""

    def test_matmul(self) -> None:
        """Test matmul values and gradients."""
        a = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
        b = Tensor([[1.0], [1.0]], requires_grad=True)
        out = matmul(a, b)
        assert np.array_equal(out.data, [[3.0], [7.0]])
        out.sum().backward()
        assert np.array_equal(a.grad, np.ones((2, 2)))
        assert np.array_equal(b.grad, [[4.0], [6.0]])

    def test_matmul_shape_error(self) -> None:
        """Test that inner dimensions must agree."""
        with pytest.raises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_reshape_and_transpose_gradients(self) -> None:
        """Test that reshape and transpose route gradients back to the source layout."""
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        w = Tensor(np.arange(6.0).reshape(3, 2))
        (x.transpose(1, 0) * w).sum().backward()
        assert np.array_equal(x.grad, w.data.T)

    def test_bad_transpose_axes(self) -> None:
        """Test that transpose needs a full permutation."""
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 3))).transpose(0, 0)

    def test_slice_gradient(self) -> None:
        """Test that slicing scatters the gradient into zeros."""
        x = Tensor(np.ones(5), requires_grad=True)
        x[1:3].sum().backward()
        assert np.array_equal(x.grad, [0.0, 1.0, 1.0, 0.0, 0.0])

    def test_take_with_repeats(self) -> None:
        """Test that repeated indices accumulate their gradients."""
        x = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
        out = take(x, [2, 2, 0])
        assert np.array_equal(out.data, [3.0, 3.0, 1.0])
        out.sum().backward()
        assert np.array_equal(x.grad, [1.0, 0.0, 2.0])

    def test_concat_splits_gradient(self) -> None:
        """Test that concat backward returns each input's slice."""
        a = Tensor(np.ones((1, 2)), requires_grad=True)
        b = Tensor(np.ones((2, 2)), requires_grad=True)
        weights = Tensor(np.arange(6.0).reshape(3, 2))
        (concat([a, b], axis=0) * weights).sum().backward()
        assert np.array_equal(a.grad, [[0.0, 1.0]])
        assert np.array_equal(b.grad, [[2.0, 3.0], [4.0, 5.0]])

    def test_mean(self) -> None:
        """Test mean over an axis."""
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        m = x.mean(axis=1)
        assert np.allclose(m.data, [1.0, 4.0])
        m.sum().backward()
        assert np.allclose(x.grad, np.full((2, 3), 1.0 / 3.0))


class TestBackward:
    """Test graph recording and the backward sweep."""

    def test_backward_needs_scalar_without_seed(self) -> None:
        """Test that a non-scalar output needs an explicit seed."""
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ShapeError):
            (x * 2.0).backward()

    def test_backward_with_seed(self) -> None:
        """Test backward with an explicit output gradient."""
        x = Tensor(np.ones(3), requires_grad=True)
        (x * 2.0).backward(np.array([1.0, 0.0, -1.0]))
        assert np.array_equal(x.grad, [2.0, 0.0, -2.0])

    def test_backward_on_constant_raises(self) -> None:
        """Test that backward on an untracked tensor is an error."""
        with pytest.raises(ShapeError):
            Tensor(1.0).backward()

    def test_no_grad_disables_recording(self) -> None:
        """Test that no_grad produces untracked outputs and restores state."""
        x = Tensor(1.0, requires_grad=True)
        assert is_grad_enabled()
        with no_grad():
            assert not is_grad_enabled()
            y = x * 2.0
        assert is_grad_enabled()
        assert not y.requires_grad

    def test_deep_chain(self) -> None:
        """Test that long chains do not hit recursion limits."""
        x = Tensor(1.0, requires_grad=True)
        y = x
        for _ in range(5000):
            y = y * 1.0
        y.backward()
        assert x.grad == pytest.approx(1.0)

    def test_item_requires_single_element(self) -> None:
        """Test item() on a vector."""
        with pytest.raises(ShapeError):
            Tensor([1.0, 2.0]).item()
