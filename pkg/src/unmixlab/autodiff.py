"""Minimal reverse-mode autodiff over float64 numpy arrays.

A closed primitive set (matmul, add, scale, transpose, concat, split,
softmax, relu, layer_norm, l1_loss, squared_loss, mean) builds an implicit
tape; ``backward`` replays it in reverse topological order exactly once.
Everything is computed in 64-bit so gradients can be certified against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import ConstraintError, DimensionError

LAYER_NORM_EPS = 1e-5


class Tensor:
    """A node of the computation graph holding a float64 array."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backprop")

    def __init__(
        self,
        data: np.ndarray,
        requires_grad: bool = False,
        name: str | None = None,
        _parents: tuple["Tensor", ...] = (),
        _backprop: Callable[[], None] | None = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = _parents
        self._backprop = _backprop

    @staticmethod
    def constant(data) -> "Tensor":
        t = Tensor(data)
        if not np.isfinite(t.data).all():
            raise ConstraintError("tensor values must be finite")
        return t

    @staticmethod
    def parameter(data, name: str) -> "Tensor":
        t = Tensor(np.array(data, dtype=np.float64, copy=True), requires_grad=True, name=name)
        if not np.isfinite(t.data).all():
            raise ConstraintError(f"parameter {name!r} has non-finite values")
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def _accumulate(self, g: np.ndarray) -> None:
        self.grad = g if self.grad is None else self.grad + g

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum gradient over axes that were broadcast to reach g's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(f"matmul expects 2-d operands, got {a.data.shape} and {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out = Tensor(a.data @ b.data, _parents=(a, b))

    def backprop():
        g = out.grad
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    out._backprop = backprop
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        data = a.data + b.data
    except ValueError as e:
        raise DimensionError(f"add shape mismatch: {a.data.shape} + {b.data.shape}") from e
    out = Tensor(data, _parents=(a, b))

    def backprop():
        g = out.grad
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    out._backprop = backprop
    return out


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out = Tensor(a.data * c, _parents=(a,))

    def backprop():
        a._accumulate(out.grad * c)

    out._backprop = backprop
    return out


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose expects a 2-d tensor, got shape {a.data.shape}")
    out = Tensor(a.data.T.copy(), _parents=(a,))

    def backprop():
        a._accumulate(out.grad.T)

    out._backprop = backprop
    return out


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise DimensionError("concat of an empty sequence")
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), _parents=tuple(tensors))
    sizes = [t.data.shape[axis] for t in tensors]

    def backprop():
        start = 0
        for t, size in zip(tensors, sizes):
            sl = [slice(None)] * out.data.ndim
            sl[axis] = slice(start, start + size)
            t._accumulate(out.grad[tuple(sl)])
            start += size

    out._backprop = backprop
    return out


def narrow(a: Tensor, start: int, length: int, axis: int = 0) -> Tensor:
    """Slice ``length`` entries from ``start`` along ``axis``."""
    if not (0 <= start and start + length <= a.data.shape[axis]):
        raise DimensionError(
            f"narrow [{start}:{start + length}] out of range for axis {axis} of {a.data.shape}"
        )
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, start + length)
    out = Tensor(a.data[tuple(sl)].copy(), _parents=(a,))

    def backprop():
        g = np.zeros_like(a.data)
        g[tuple(sl)] = out.grad
        a._accumulate(g)

    out._backprop = backprop
    return out


def split(a: Tensor, sections: int, axis: int = 0) -> tuple[Tensor, ...]:
    """Split into equally sized parts along ``axis`` (inverse of concat)."""
    dim = a.data.shape[axis]
    if sections < 1 or dim % sections != 0:
        raise DimensionError(f"cannot split axis of size {dim} into {sections} equal parts")
    size = dim // sections
    return tuple(narrow(a, i * size, size, axis=axis) for i in range(sections))


def softmax(a: Tensor) -> Tensor:
    """Row-wise softmax over the last axis, stabilized by max subtraction."""
    if a.data.ndim < 1 or a.data.shape[-1] == 0:
        raise DimensionError(f"softmax over empty axis, shape {a.data.shape}")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s, _parents=(a,))

    def backprop():
        g = out.grad
        a._accumulate((g - (g * s).sum(axis=-1, keepdims=True)) * s)

    out._backprop = backprop
    return out


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0), _parents=(a,))
    mask = a.data > 0

    def backprop():
        a._accumulate(out.grad * mask)

    out._backprop = backprop
    return out


def layer_norm(a: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize each row (last axis) to zero mean, unit variance.

    ``eps`` floors the variance so near-constant rows stay finite; rows
    above the floor are normalized exactly.
    """
    if a.data.ndim < 1 or a.data.shape[-1] == 0:
        raise DimensionError(f"layer_norm over empty axis, shape {a.data.shape}")
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    active = var > eps
    inv_std = 1.0 / np.sqrt(np.maximum(var, eps))
    xhat = centered * inv_std
    out = Tensor(xhat, _parents=(a,))

    def backprop():
        g = out.grad
        gx = g - g.mean(axis=-1, keepdims=True) - active * xhat * (g * xhat).mean(axis=-1, keepdims=True)
        a._accumulate(gx * inv_std)

    out._backprop = backprop
    return out


def _pair_rows(pred: Tensor, target: Tensor) -> tuple[np.ndarray, int]:
    if pred.data.shape != target.data.shape:
        raise DimensionError(f"loss shape mismatch: {pred.data.shape} vs {target.data.shape}")
    diff = pred.data - target.data
    n_rows = 1 if diff.ndim <= 1 else int(np.prod(diff.shape[:-1]))
    return diff, n_rows


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean over rows of the row-wise L1 norm of (pred - target)."""
    diff, n_rows = _pair_rows(pred, target)
    out = Tensor(np.abs(diff).sum() / n_rows, _parents=(pred, target))

    def backprop():
        g = out.grad * np.sign(diff) / n_rows
        pred._accumulate(g)
        target._accumulate(-g)

    out._backprop = backprop
    return out


def squared_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean over all entries of (pred - target) squared."""
    diff, _ = _pair_rows(pred, target)
    size = diff.size
    out = Tensor((diff * diff).sum() / size, _parents=(pred, target))

    def backprop():
        g = out.grad * 2.0 * diff / size
        pred._accumulate(g)
        target._accumulate(-g)

    out._backprop = backprop
    return out


def mean(a: Tensor) -> Tensor:
    size = a.data.size
    out = Tensor(a.data.sum() / size, _parents=(a,))

    def backprop():
        a._accumulate(np.full(a.data.shape, out.grad / size))

    out._backprop = backprop
    return out


def _topo_order(loss: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, parameters: Sequence[Tensor] | None = None) -> None:
    """Populate gradients of everything the scalar ``loss`` depends on.

    Parameters the loss does not reach get a zero gradient (when passed in).
    """
    if loss.data.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    loss.grad = np.ones_like(loss.data)
    for node in reversed(_topo_order(loss)):
        if node._backprop is not None:
            node._backprop()
    if parameters is not None:
        for p in parameters:
            if p.grad is None:
                p.grad = np.zeros_like(p.data)


def zero_grads(parameters: Sequence[Tensor]) -> None:
    for p in parameters:
        p.grad = None


@dataclass
class GradCheckReport:
    """Comparison of analytic gradients against central finite differences."""

    max_rel_error: float
    per_param: dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def grad_check(
    f: Callable[[], Tensor],
    parameters: Sequence[Tensor],
    eps: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradCheckReport:
    """Check d f() / d p against central differences for every coordinate.

    ``f`` must rebuild its graph from the current parameter values on each
    call. Relative error per parameter is the max-norm of the difference
    scaled by the larger of the two gradient max-norms (floored at 1e-8 so
    identically zero gradients compare clean).
    """
    zero_grads(parameters)
    loss = f()
    backward(loss, parameters=parameters)
    analytic = [p.grad.copy() for p in parameters]

    per_param: dict[str, float] = {}
    worst = 0.0
    for p, ga in zip(parameters, analytic):
        gn = np.zeros_like(p.data)
        for i in range(p.data.size):
            orig = p.data.flat[i]
            p.data.flat[i] = orig + eps
            f_plus = float(f().data)
            p.data.flat[i] = orig - eps
            f_minus = float(f().data)
            p.data.flat[i] = orig
            gn.flat[i] = (f_plus - f_minus) / (2.0 * eps)
        denom = max(np.abs(ga).max(initial=0.0), np.abs(gn).max(initial=0.0), 1e-8)
        err = float(np.abs(ga - gn).max(initial=0.0) / denom)
        key = p.name or f"param_{len(per_param)}"
        per_param[key] = err
        worst = max(worst, err)
    return GradCheckReport(max_rel_error=worst, per_param=per_param, tolerance=tolerance)
