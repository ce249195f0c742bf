import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pottscolor import diffcore as dc


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f(x)
        x[idx] = old - h
        down = f(x)
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def check_op(build, *arrays, rtol=1e-6, atol=1e-8):
    """Compare tape gradients of scalar ``build(*tensors)`` with central differences."""
    tape = dc.Tape()
    params = [tape.parameter(a.copy()) for a in arrays]
    grads = tape.backward(build(*params))
    for k, a in enumerate(arrays):
        def f(x, k=k):
            ts = [dc.Tensor(x if j == k else arrays[j]) for j in range(len(arrays))]
            return float(build(*ts).value)

        num = numeric_grad(f, a.copy())
        np.testing.assert_allclose(grads[k], num, rtol=rtol, atol=atol)


rng = np.random.default_rng(42)


def weights_like(t):
    return rng.standard_normal(t.shape)


def test_affine_matches_naive_matmul():
    x, W, b = rng.standard_normal((4, 3)), rng.standard_normal((5, 3)), rng.standard_normal(5)
    out = dc.affine(dc.Tensor(x), dc.Tensor(W), dc.Tensor(b)).value
    naive = np.array([[sum(x[i, k] * W[j, k] for k in range(3)) + b[j] for j in range(5)] for i in range(4)])
    np.testing.assert_allclose(out, naive, rtol=1e-14)
    with pytest.raises(ValueError):
        dc.affine(dc.Tensor(x), dc.Tensor(W.T), dc.Tensor(b))


def test_affine_grad():
    c = rng.standard_normal((4, 5))
    check_op(lambda x, W, b: dc.inner_const(dc.affine(x, W, b), c),
             rng.standard_normal((4, 3)), rng.standard_normal((5, 3)), rng.standard_normal(5))


def test_relu_softmax_grads():
    c = rng.standard_normal((6, 4))
    check_op(lambda x: dc.inner_const(dc.softmax_rows(x), c), rng.standard_normal((6, 4)))
    x = rng.standard_normal((6, 4))
    x[np.abs(x) < 1e-3] = 0.5
    check_op(lambda x: dc.inner_const(dc.relu(x), c), x)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(1, 8), st.floats(-50, 50))
def test_softmax_rows_stochastic(n, d, shift):
    x = np.random.default_rng(n * 13 + d).standard_normal((n, d)) * 20 + shift
    s = dc.softmax_rows(dc.Tensor(x)).value
    assert np.all(s >= 0)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)


def test_softmax_extreme_logits_finite():
    s = dc.softmax_rows(dc.Tensor(np.array([[1000.0, -1000.0, 0.0]]))).value
    assert np.all(np.isfinite(s)) and s[0, 0] == pytest.approx(1.0)


def test_concat_add_scale_sum_grads():
    c = rng.standard_normal((3, 5))
    check_op(lambda a, b: dc.inner_const(dc.concat_cols(a, b), c), rng.standard_normal((3, 2)),
             rng.standard_normal((3, 3)))
    check_op(lambda a, b: dc.sum_all(dc.scale(dc.add(a, b), 2.5)), rng.standard_normal((3, 2)),
             rng.standard_normal((3, 2)))
    check_op(lambda a, b: dc.linear_combination([(2.0, dc.sum_all(a)), (-0.5, dc.xlogx_sum(b))]),
             rng.standard_normal((2, 2)), rng.uniform(0.1, 1.0, (2, 3)))


def test_segment_ops_against_loops():
    msgs = rng.standard_normal((9, 3))
    targets = np.array([0, 2, 2, 1, 0, 2, 4, 4, 0])
    n = 5
    s = dc.segment_sum(dc.Tensor(msgs), targets, n).value
    m = dc.segment_mean(dc.Tensor(msgs), targets, n).value
    mx = dc.segment_max(dc.Tensor(msgs), targets, n).value
    for i in range(n):
        rows = msgs[targets == i]
        if len(rows):
            np.testing.assert_allclose(s[i], rows.sum(0))
            np.testing.assert_allclose(m[i], rows.mean(0))
            np.testing.assert_allclose(mx[i], rows.max(0))
        else:  # node 3 receives nothing
            assert np.all(s[i] == 0) and np.all(m[i] == 0) and np.all(mx[i] == 0)


@pytest.mark.parametrize("op", [dc.segment_sum, dc.segment_mean, dc.segment_max])
def test_segment_grads(op):
    msgs = rng.standard_normal((9, 3))
    targets = np.array([0, 2, 2, 1, 0, 2, 4, 4, 0])
    c = rng.standard_normal((5, 3))
    check_op(lambda x: dc.inner_const(op(x, targets, 5), c), msgs)


def test_segment_max_ties_split_gradient():
    tape = dc.Tape()
    x = tape.parameter(np.array([[1.0], [1.0], [0.0]]))
    out = dc.sum_all(dc.segment_max(x, [0, 0, 0], 1))
    (g,) = tape.backward(out)
    np.testing.assert_allclose(g, [[0.5], [0.5], [0.0]])


def test_segment_target_range():
    with pytest.raises(IndexError):
        dc.segment_sum(dc.Tensor(np.ones((2, 1))), [0, 3], 2)
    with pytest.raises(IndexError):
        dc.gather_rows(dc.Tensor(np.ones((2, 1))), [2])


def test_gather_and_loss_head_grads():
    y = rng.uniform(0.05, 1.0, (6, 3))
    idx = np.array([0, 5, 5, 2, 1])
    c = rng.standard_normal((5, 3))
    check_op(lambda t: dc.inner_const(dc.gather_rows(t, idx), c), y)
    left, right = np.array([0, 1, 2, 3]), np.array([1, 2, 4, 5])
    check_op(lambda t: dc.edge_inner_sum(t, left, right), y)
    check_op(lambda t: dc.xlogx_sum(t), y)


def test_scatter_add_rows_matches_add_at():
    idx = rng.integers(0, 7, 40)
    vals = rng.standard_normal((40, 4))
    ref = np.zeros((7, 4))
    np.add.at(ref, idx, vals)
    np.testing.assert_allclose(dc.scatter_add_rows(idx, vals, 7), ref, rtol=1e-13)


def test_gradient_linearity():
    x = rng.standard_normal((4, 3))
    c1, c2 = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))

    def grad_of(coefs):
        tape = dc.Tape()
        p = tape.parameter(x)
        s = dc.softmax_rows(p)
        root = dc.linear_combination([(a, dc.inner_const(s, c)) for a, c in zip(coefs, (c1, c2))])
        return tape.backward(root)[0]

    np.testing.assert_allclose(grad_of((2.0, -3.0)), 2.0 * grad_of((1.0, 0.0)) - 3.0 * grad_of((0.0, 1.0)),
                               atol=1e-12)


def test_uniform_point_entropy_gradient_is_uniform():
    # at y = 1/q the entropy gradient is the same in every entry, so through
    # softmax it vanishes
    tape = dc.Tape()
    x = tape.parameter(np.zeros((3, 4)))
    (g,) = tape.backward(dc.xlogx_sum(dc.softmax_rows(x)))
    np.testing.assert_allclose(g, 0.0, atol=1e-14)


def test_backward_errors_and_unused_params():
    tape = dc.Tape()
    p = tape.parameter(np.ones((2, 2)))
    unused = tape.parameter(np.ones(3))
    with pytest.raises(ValueError):
        tape.backward(dc.scale(p, 2.0))
    other = dc.Tape()
    q = other.parameter(np.ones((1, 1)))
    with pytest.raises(ValueError):
        tape.backward(dc.sum_all(q))
    grads = dc.backward(tape, dc.sum_all(p))
    assert np.all(grads[0] == 1) and np.all(grads[1] == 0) and grads[1].shape == unused.shape


def test_repeated_backward_is_idempotent():
    tape = dc.Tape()
    p = tape.parameter(rng.standard_normal((3, 2)))
    root = dc.sum_all(dc.relu(p))
    a = tape.backward(root)[0].copy()
    np.testing.assert_array_equal(tape.backward(root)[0], a)


def test_debug_mode_catches_nonfinite():
    tape = dc.Tape(debug=True)
    p = tape.parameter(np.array([[np.inf]]))
    with pytest.raises(dc.NonFiniteError):
        dc.scale(p, 1.0)
