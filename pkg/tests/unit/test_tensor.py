"""
Unit tests for the autodiff tensor
"""

from typing import Callable

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from autodiff import Tensor, concat, no_grad, where
from utils.errors import GraphError, ShapeMismatchError


def numeric_grad(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up, down = x.copy(), x.copy()
        up[idx] += h
        down[idx] -= h
        grad[idx] = (f(up) - f(down)) / (2 * h)
    return grad


def check_grad(op: Callable[[Tensor], Tensor], x: np.ndarray, rtol: float = 1e-5) -> None:
    t = Tensor(x, requires_grad=True)
    op(t).sum().backward()
    expected = numeric_grad(lambda v: float(op(Tensor(v)).data.sum()), x)
    np.testing.assert_allclose(t.grad, expected, rtol=rtol, atol=1e-7)


ACTIVATIONS = (
    lambda t: t.tanh(),
    lambda t: t.sigmoid(),
    lambda t: t.softplus(),
    lambda t: t.log_sigmoid(),
)
REDUCTIONS = (
    lambda t: t.sum(),
    lambda t: t.mean(),
    lambda t: t.logsumexp(axis=-1).sum(),
)


def random_graph(seed: int) -> tuple[list[np.ndarray], Callable[[list[Tensor]], Tensor]]:
    """Up to 3 affine layers of at most 16 units with random activations and reduction"""
    rng = np.random.default_rng(seed)
    n_layers = int(rng.integers(1, 4))
    widths = [int(w) for w in rng.integers(1, 17, size=n_layers + 1)]
    x = rng.standard_normal((4, widths[0]))
    params: list[np.ndarray] = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        params.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        params.append(0.1 * rng.standard_normal(fan_out))
    acts = [ACTIVATIONS[int(j)] for j in rng.integers(len(ACTIVATIONS), size=n_layers)]
    reduce = REDUCTIONS[int(rng.integers(len(REDUCTIONS)))]

    def forward(values: list[Tensor]) -> Tensor:
        h = Tensor(x)
        for i, act in enumerate(acts):
            h = act(h @ values[2 * i] + values[2 * i + 1])
        return reduce(h)

    return params, forward


@pytest.mark.unit
class TestElementwiseGradients:
    """Test gradients of elementwise operations against finite differences"""

    @pytest.mark.parametrize(
        "op",
        [
            lambda t: t.exp(),
            lambda t: t.tanh(),
            lambda t: t.sigmoid(),
            lambda t: t.log_sigmoid(),
            lambda t: t.softplus(),
            lambda t: t * t * 3.0,
            lambda t: t / (t * t + 1.0),
            lambda t: 2.0 - t,
            lambda t: (t * t + 1.0) ** 1.5,
        ],
    )
    def test_unary_ops(self, op, rng: np.random.Generator):
        """Test smooth unary operations"""
        check_grad(op, rng.standard_normal((3, 4)))

    def test_log(self, rng: np.random.Generator):
        """Test log on positive inputs"""
        check_grad(lambda t: t.log(), rng.uniform(0.5, 2.0, size=(5,)))

    def test_relu_away_from_kink(self):
        """Test relu gradient is the indicator of positive inputs"""
        x = Tensor(np.array([-2.0, -0.5, 0.5, 3.0]), requires_grad=True)
        x.relu().sum().backward()
        np.testing.assert_array_equal(x.grad, [0.0, 0.0, 1.0, 1.0])

    def test_clip_blocks_gradient_outside(self):
        """Test clip passes gradient only strictly inside the bounds"""
        x = Tensor(np.array([-20.0, 0.0, 20.0]), requires_grad=True)
        x.clip(-10.0, 10.0).sum().backward()
        np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])


@pytest.mark.unit
class TestReductionsAndShapes:
    """Test reductions, broadcasting and indexing"""

    def test_broadcast_add_unbroadcasts_gradient(self, rng: np.random.Generator):
        """Test bias-style broadcasting sums the gradient back"""
        a = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
        b = Tensor(rng.standard_normal(3), requires_grad=True)
        (a + b).sum().backward()
        np.testing.assert_allclose(b.grad, np.full(3, 4.0))
        np.testing.assert_allclose(a.grad, np.ones((4, 3)))

    def test_matmul_gradient(self, rng: np.random.Generator):
        """Test matmul gradient with respect to the weight"""
        x = rng.standard_normal((5, 3))
        w0 = rng.standard_normal((3, 2))
        check_grad(lambda w: Tensor(x) @ w, w0)

    def test_batched_matmul_gradient(self, rng: np.random.Generator):
        """Test a 3-D operand against a shared 2-D weight"""
        x = rng.standard_normal((2, 4, 3))
        check_grad(lambda w: (Tensor(x) @ w).tanh(), rng.standard_normal((3, 2)))

    def test_matmul_shape_mismatch(self):
        """Test mismatched inner dimensions raise"""
        with pytest.raises(ShapeMismatchError):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))

    @pytest.mark.parametrize("axis", [0, 1, -1])
    def test_logsumexp_gradient(self, axis: int, rng: np.random.Generator):
        """Test logsumexp gradient is the softmax"""
        check_grad(lambda t: t.logsumexp(axis=axis), rng.standard_normal((3, 4)))

    def test_log_softmax_gradient(self, rng: np.random.Generator):
        """Test log_softmax composed with a weighting"""
        weights = rng.standard_normal((3, 4))
        check_grad(lambda t: t.log_softmax(axis=-1) * weights, rng.standard_normal((3, 4)))

    def test_mean_and_sum_axis(self, rng: np.random.Generator):
        """Test mean over an axis"""
        check_grad(lambda t: t.mean(axis=0), rng.standard_normal((3, 4)))
        check_grad(lambda t: t.sum(axis=1, keepdims=True) * 2.0, rng.standard_normal((3, 4)))

    def test_getitem_and_reshape(self, rng: np.random.Generator):
        """Test slicing, fancy indexing and reshape"""
        check_grad(lambda t: t[:, 1:3].reshape(-1) * 2.0, rng.standard_normal((3, 4)))
        rows = np.array([0, 2, 2])
        cols = np.array([1, 0, 0])
        check_grad(lambda t: t[rows, cols], rng.standard_normal((3, 2)))

    def test_transpose(self, rng: np.random.Generator):
        """Test transpose with explicit axes"""
        weights = rng.standard_normal((4, 2, 3))
        check_grad(lambda t: t.transpose((2, 0, 1)) * weights, rng.standard_normal((2, 3, 4)))

    def test_concat_and_where(self, rng: np.random.Generator):
        """Test concat routes gradient to each part and where to the chosen branch"""
        a = Tensor(rng.standard_normal((2, 2)), requires_grad=True)
        b = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
        cond = np.array([[True, False], [False, True]])
        out = concat([a, b], axis=-1).sum() + where(cond, a, 0.0).sum()
        out.backward()
        np.testing.assert_allclose(a.grad, 1.0 + cond)
        np.testing.assert_allclose(b.grad, np.ones((2, 3)))

    def test_shared_node_accumulates(self):
        """Test a node used twice receives both contributions"""
        x = Tensor(np.array(3.0), requires_grad=True)
        y = x * x + x
        y.backward()
        assert x.grad == pytest.approx(7.0)


@pytest.mark.unit
class TestGraph:
    """Test graph bookkeeping"""

    def test_backward_needs_scalar(self):
        """Test backward on a vector root raises"""
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(GraphError):
            (x * 2.0).backward()

    def test_no_grad_records_nothing(self):
        """Test operations under no_grad do not require gradients"""
        x = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            y = (x * 2.0).sum()
        assert y.requires_grad is False

    def test_backward_resets_previous_gradients(self):
        """Test repeated backward calls do not double gradients"""
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        for _ in range(2):
            (x * x).sum().backward()
        np.testing.assert_allclose(x.grad, [2.0, 4.0])

    def test_item_on_non_scalar(self):
        """Test item() rejects multi-element tensors"""
        with pytest.raises(ShapeMismatchError):
            Tensor(np.ones(2)).item()

    def test_deep_chain_does_not_recurse(self):
        """Test a long chain of operations backpropagates without recursion limits"""
        x = Tensor(np.array(1.0), requires_grad=True)
        y = x
        for _ in range(5000):
            y = y + 0.0
        y.backward()
        assert x.grad == pytest.approx(1.0)


@pytest.mark.unit
class TestComposedGraphs:
    """Test gradients of random composed graphs against finite differences"""

    @pytest.mark.parametrize("seed", range(50))
    def test_every_partial_derivative(self, seed: int):
        """Test each weight and bias gradient of a random small network"""
        params, forward = random_graph(seed)
        tensors = [Tensor(p, requires_grad=True) for p in params]
        forward(tensors).backward()
        for i, (value, tensor) in enumerate(zip(params, tensors)):

            def f(v: np.ndarray, i: int = i) -> float:
                values = [Tensor(p) for p in params]
                values[i] = Tensor(v)
                return forward(values).item()

            expected = numeric_grad(f, value, h=1e-5)
            np.testing.assert_allclose(tensor.grad, expected, rtol=1e-4, atol=1e-7)


@pytest.mark.unit
class TestLogsumexpProperties:
    """Property tests for numerically stable reductions"""

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(
            np.float64,
            (4, 3),
            elements=st.floats(min_value=-700, max_value=700, allow_nan=False),
        )
    )
    def test_logsumexp_is_finite_and_bounded(self, values: np.ndarray):
        """Test max <= logsumexp <= max + log(n) for any spread of inputs"""
        out = Tensor(values).logsumexp(axis=0).data
        top = values.max(axis=0)
        assert np.all(np.isfinite(out))
        assert np.all(out >= top - 1e-9)
        assert np.all(out <= top + np.log(values.shape[0]) + 1e-9)

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(np.float64, (5,), elements=st.floats(min_value=-50, max_value=50, allow_nan=False))
    )
    def test_softmax_sums_to_one(self, values: np.ndarray):
        """Test softmax lies on the simplex"""
        probs = Tensor(values).softmax().data
        assert probs.sum() == pytest.approx(1.0)
        assert np.all(probs >= 0)
