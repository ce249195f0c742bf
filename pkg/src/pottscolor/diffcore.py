"""Minimal reverse-mode automatic differentiation over 2-d float64 arrays.

Only the operations the message-passing model and its loss need are
provided.  Every op takes :class:`Tensor` arguments; if one of them belongs to
a :class:`Tape` and requires a gradient, the op is recorded on that tape and
:meth:`Tape.backward` later sweeps the records in reverse.  Without a tape the
same functions are a plain forward evaluation.

>>> tape = Tape()
>>> w = tape.parameter(np.ones((1, 2)))
>>> y = sum_all(affine(Tensor(np.ones((3, 2))), w, Tensor(np.zeros(1))))
>>> tape.backward(y)[0]
array([[3., 3.]])
"""
from __future__ import annotations

import math
import os

import numpy as np

DEBUG = os.environ.get("POTTSCOLOR_DEBUG", "") not in ("", "0")

_INV_LN2 = 1.0 / math.log(2.0)


class NonFiniteError(FloatingPointError):
    pass


class Tensor:
    __slots__ = ("value", "grad", "tape", "requires_grad", "_parents", "_backward")

    def __init__(self, value, tape: "Tape | None" = None, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.tape = tape
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Ordered record of differentiable operations.

    Parameters registered with :meth:`parameter` receive gradients on
    :meth:`backward`, returned in registration order.
    """

    def __init__(self, debug: bool | None = None):
        self.nodes: list[Tensor] = []
        self.params: list[Tensor] = []
        self.debug = DEBUG if debug is None else debug

    def parameter(self, array) -> Tensor:
        t = Tensor(array, tape=self, requires_grad=True)
        self.params.append(t)
        return t

    def constant(self, array) -> Tensor:
        return Tensor(array, tape=self)

    def backward(self, root: Tensor) -> list[np.ndarray]:
        if root.value.size != 1:
            raise ValueError(f"backward needs a scalar root, got shape {root.value.shape}")
        if root.tape is not self:
            raise ValueError("root was not recorded on this tape")
        for node in self.nodes:
            node.grad = None
        for p in self.params:
            p.grad = None
        root.grad = np.ones_like(root.value)
        for node in reversed(self.nodes):
            if node.grad is not None:
                node._backward(node.grad)
        return [p.grad if p.grad is not None else np.zeros_like(p.value) for p in self.params]


def backward(tape: Tape, root: Tensor) -> list[np.ndarray]:
    return tape.backward(root)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True).reshape(t.value.shape)
    else:
        t.grad += g.reshape(t.value.shape)


def _result(value, parents, backward_fn) -> Tensor:
    tape = None
    needs = False
    for p in parents:
        if p.tape is not None:
            tape = p.tape
            needs = needs or p.requires_grad
    debug = DEBUG if tape is None else tape.debug
    if debug and not np.all(np.isfinite(value)):
        raise NonFiniteError(f"non-finite value produced ({backward_fn.__qualname__.split('.')[0]})")
    out = Tensor(value, tape=tape, requires_grad=needs)
    if needs:
        out._parents = parents
        out._backward = backward_fn
        tape.nodes.append(out)
    return out


def scatter_add_rows(index: np.ndarray, values: np.ndarray, n_rows: int) -> np.ndarray:
    """``out[index[k]] += values[k]`` for 2-d ``values`` (one flattened bincount)."""
    d = values.shape[1]
    if d == 0 or len(index) == 0:
        return np.zeros((n_rows, d))
    flat = (index[:, None] * d + np.arange(d)).ravel()
    return np.bincount(flat, weights=values.ravel(), minlength=n_rows * d).reshape(n_rows, d)


# -- dense ops ---------------------------------------------------------------

def affine(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """``x @ W.T + b`` with ``W`` of shape (d_out, d_in)."""
    xv, Wv, bv = x.value, W.value, b.value
    if xv.ndim != 2 or Wv.ndim != 2 or xv.shape[1] != Wv.shape[1] or bv.shape != (Wv.shape[0],):
        raise ValueError(f"affine shape mismatch: x{xv.shape} W{Wv.shape} b{bv.shape}")

    def back(g):
        _accum(x, g @ Wv)
        _accum(W, g.T @ xv)
        _accum(b, g.sum(axis=0))

    return _result(xv @ Wv.T + bv, (x, W, b), back)


def relu(x: Tensor) -> Tensor:
    mask = x.value > 0

    def back(g):
        _accum(x, g * mask)

    return _result(x.value * mask, (x,), back)


def softmax_rows(x: Tensor) -> Tensor:
    z = x.value - x.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def back(g):
        _accum(x, s * (g - np.sum(g * s, axis=1, keepdims=True)))

    return _result(s, (x,), back)


def concat_cols(*xs: Tensor) -> Tensor:
    widths = [t.value.shape[1] for t in xs]
    bounds = np.cumsum([0] + widths)

    def back(g):
        for t, lo, hi in zip(xs, bounds[:-1], bounds[1:]):
            _accum(t, g[:, lo:hi])

    return _result(np.concatenate([t.value for t in xs], axis=1), tuple(xs), back)


def add(a: Tensor, b: Tensor) -> Tensor:
    def back(g):
        _accum(a, g)
        _accum(b, g)

    return _result(a.value + b.value, (a, b), back)


def scale(x: Tensor, k: float) -> Tensor:
    def back(g):
        _accum(x, g * k)

    return _result(x.value * k, (x,), back)


def sum_all(x: Tensor) -> Tensor:
    def back(g):
        _accum(x, np.broadcast_to(g.reshape(()), x.value.shape))

    return _result(np.array(x.value.sum()), (x,), back)


def linear_combination(terms) -> Tensor:
    """Scalar ``sum coef * t`` over ``(coef, scalar tensor)`` pairs."""
    terms = [(float(k), t) for k, t in terms]

    def back(g):
        for k, t in terms:
            _accum(t, g * k)

    value = np.array(sum(k * t.value.reshape(()) for k, t in terms), dtype=np.float64)
    return _result(value, tuple(t for _, t in terms), back)


# -- graph ops ---------------------------------------------------------------

def gather_rows(x: Tensor, index) -> Tensor:
    index = np.asarray(index, dtype=np.int64)
    n = x.value.shape[0]

    def back(g):
        _accum(x, scatter_add_rows(index, g, n))

    if index.size and (index.min() < 0 or index.max() >= n):
        raise IndexError(f"row index out of range [0, {n})")
    return _result(x.value[index], (x,), back)


def _check_targets(targets, n_segments):
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size and (targets.min() < 0 or targets.max() >= n_segments):
        raise IndexError(f"segment target out of range [0, {n_segments})")
    return targets


def segment_sum(messages: Tensor, targets, n_segments: int) -> Tensor:
    """Row ``i`` of the result is the sum of message rows whose target is ``i``."""
    targets = _check_targets(targets, n_segments)
    if len(targets) != messages.value.shape[0]:
        raise ValueError("one target per message row required")
    out = scatter_add_rows(targets, messages.value, n_segments)

    def back(g):
        _accum(messages, g[targets])

    return _result(out, (messages,), back)


def segment_mean(messages: Tensor, targets, n_segments: int) -> Tensor:
    targets = _check_targets(targets, n_segments)
    counts = np.bincount(targets, minlength=n_segments).astype(np.float64)
    inv = (1.0 / np.maximum(counts, 1.0))[:, None]
    out = scatter_add_rows(targets, messages.value, n_segments)

    def back(g):
        _accum(messages, (g * inv)[targets])

    return _result(out * inv, (messages,), back)


def segment_max(messages: Tensor, targets, n_segments: int) -> Tensor:
    """Column-wise max per segment; empty segments give 0.  Ties share the gradient."""
    targets = _check_targets(targets, n_segments)
    mv = messages.value
    out = np.full((n_segments, mv.shape[1]), -np.inf)
    np.maximum.at(out, targets, mv)
    hit = (mv == out[targets]).astype(np.float64)
    ties = scatter_add_rows(targets, hit, n_segments)
    out[np.isinf(out)] = 0.0

    def back(g):
        _accum(messages, hit * (g / np.maximum(ties, 1.0))[targets])

    return _result(out, (messages,), back)


# -- loss heads --------------------------------------------------------------

def edge_inner_sum(y: Tensor, left, right) -> Tensor:
    """Scalar ``sum_e <y[left_e], y[right_e]>``."""
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    yl = y.value[left]
    yr = y.value[right]

    def back(g):
        n = y.value.shape[0]
        gs = float(g)
        _accum(y, gs * (scatter_add_rows(left, yr, n) + scatter_add_rows(right, yl, n)))

    return _result(np.array(np.einsum("ij,ij->", yl, yr)), (y,), back)


def xlogx_sum(y: Tensor, clamp: float = 1e-30) -> Tensor:
    """Scalar ``sum y * log2(max(y, clamp))``."""
    yv = y.value
    logs = np.log2(np.maximum(yv, clamp))

    def back(g):
        d = np.where(yv > clamp, logs + _INV_LN2, logs)
        _accum(y, float(g) * d)

    return _result(np.array(np.sum(yv * logs)), (y,), back)


def inner_const(y: Tensor, c) -> Tensor:
    """Scalar ``sum y * c`` for a constant array ``c``."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != y.value.shape:
        raise ValueError(f"shape mismatch {y.value.shape} vs {c.shape}")

    def back(g):
        _accum(y, float(g) * c)

    return _result(np.array(np.sum(y.value * c)), (y,), back)


__all__ = [
    "Tape", "Tensor", "NonFiniteError", "backward", "affine", "relu", "softmax_rows",
    "concat_cols", "add", "scale", "sum_all", "linear_combination", "gather_rows",
    "segment_sum", "segment_mean", "segment_max", "edge_inner_sum", "xlogx_sum",
    "inner_const",
]
