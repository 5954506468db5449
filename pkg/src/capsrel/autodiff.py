"""Minimal reverse-mode autodiff over dense numpy float64 tensors.

Every differentiable quantity in the model (parameters, activations,
losses) is a :class:`Tensor`. Operations executed while gradients are
enabled record a backward closure; :meth:`Tensor.backward` replays them
in reverse topological order. Inside :func:`no_grad` nothing is recorded
and forward passes are plain numpy.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested op."""


class ContractViolation(ValueError):
    """A documented precondition was violated by the caller."""


class NonFiniteError(FloatingPointError):
    """A tensor that must stay finite contains NaN or Inf."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording (eval mode) inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A dense float64 array node in the computation graph.

    Interior nodes carry their gradient only transiently during a
    backward sweep; after the sweep only leaves retain ``.grad``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    @classmethod
    def _from_op(cls, data: np.ndarray, parents: Sequence["Tensor"],
                 backward: Callable[[np.ndarray], None]) -> "Tensor":
        out = cls(data)
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def assert_finite(self, what: str = "tensor") -> "Tensor":
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteError(f"{what} contains non-finite values")
        return self

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # -- backward -------------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded tape."""
        if self.data.size != 1:
            raise ContractViolation(
                f"backward() needs a scalar loss, got shape {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is None:
                continue
            if node.grad is not None:
                node._backward(node.grad)
            node.grad = None  # interior node; free transient gradient

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        a, b = self, other
        data = a.data + b.data

        def bw(g):
            _send(a, _unbroadcast(g, a.shape))
            _send(b, _unbroadcast(g, b.shape))
        return Tensor._from_op(data, (a, b), bw)

    __radd__ = __add__

    def __neg__(self):
        a = self

        def bw(g):
            _send(a, -g)
        return Tensor._from_op(-a.data, (a,), bw)

    def __sub__(self, other):
        return self + (-_as_tensor(other))

    def __rsub__(self, other):
        return _as_tensor(other) + (-self)

    def __mul__(self, other):
        other = _as_tensor(other)
        a, b = self, other
        data = a.data * b.data

        def bw(g):
            _send(a, _unbroadcast(g * b.data, a.shape))
            _send(b, _unbroadcast(g * a.data, b.shape))
        return Tensor._from_op(data, (a, b), bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other)
        a, b = self, other
        data = a.data / b.data

        def bw(g):
            _send(a, _unbroadcast(g / b.data, a.shape))
            _send(b, _unbroadcast(-g * a.data / (b.data * b.data), b.shape))
        return Tensor._from_op(data, (a, b), bw)

    def __rtruediv__(self, other):
        return _as_tensor(other) / self

    def __pow__(self, exponent: float):
        a = self
        e = float(exponent)
        data = a.data ** e

        def bw(g):
            _send(a, g * e * a.data ** (e - 1.0))
        return Tensor._from_op(data, (a,), bw)

    def __matmul__(self, other):
        other = _as_tensor(other)
        a, b = self, other
        if a.ndim == 0 or b.ndim == 0 or a.shape[-1] != b.shape[0]:
            raise ShapeError(f"matmul shapes do not conform: {a.shape} @ {b.shape}")
        if a.ndim > 2 or b.ndim > 2:
            raise ShapeError(
                f"matmul supports 1-D/2-D operands, got {a.shape} @ {b.shape}")
        data = a.data @ b.data

        def bw(g):
            if a.ndim == 1 and b.ndim == 1:
                _send(a, g * b.data)
                _send(b, g * a.data)
            elif a.ndim == 2 and b.ndim == 2:
                _send(a, g @ b.data.T)
                _send(b, a.data.T @ g)
            elif a.ndim == 2 and b.ndim == 1:
                _send(a, np.outer(g, b.data))
                _send(b, a.data.T @ g)
            else:  # 1-D @ 2-D
                _send(a, g @ b.data.T)
                _send(b, np.outer(a.data, g))
        return Tensor._from_op(data, (a, b), bw)

    def __getitem__(self, idx):
        a = self
        data = a.data[idx]

        def bw(g):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            _send(a, full)
        return Tensor._from_op(np.array(data, dtype=np.float64), (a,), bw)

    # -- shape ops ------------------------------------------------------------

    def reshape(self, shape) -> "Tensor":
        a = self
        data = a.data.reshape(shape)

        def bw(g):
            _send(a, g.reshape(a.shape))
        return Tensor._from_op(data, (a,), bw)

    def transpose(self, axes=None) -> "Tensor":
        a = self
        data = a.data.transpose(axes)
        inv = None if axes is None else tuple(np.argsort(axes))

        def bw(g):
            _send(a, g.transpose(inv))
        return Tensor._from_op(data, (a,), bw)

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    # -- reductions -----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        a = self
        data = a.data.sum(axis=axis, keepdims=keepdims)

        def bw(g):
            if axis is None:
                _send(a, np.broadcast_to(g, a.shape).copy())
                return
            gg = g
            if not keepdims:
                gg = np.expand_dims(gg, axis)
            _send(a, np.broadcast_to(gg, a.shape).copy())
        return Tensor._from_op(data, (a,), bw)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def norm(self, axis=None, keepdims: bool = False) -> "Tensor":
        """Euclidean norm; the gradient at an exact zero vector is zero."""
        a = self
        data = np.sqrt((a.data * a.data).sum(axis=axis, keepdims=keepdims))

        def bw(g):
            n = data
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
                n = np.expand_dims(n, axis)
            safe = np.where(n == 0.0, 1.0, n)
            _send(a, g * a.data / safe)
        return Tensor._from_op(data, (a,), bw)

    # -- nonlinearities -------------------------------------------------------

    def exp(self) -> "Tensor":
        a = self
        data = np.exp(a.data)

        def bw(g):
            _send(a, g * data)
        return Tensor._from_op(data, (a,), bw)

    def log(self) -> "Tensor":
        a = self
        data = np.log(a.data)

        def bw(g):
            _send(a, g / a.data)
        return Tensor._from_op(data, (a,), bw)

    def sqrt(self) -> "Tensor":
        return self ** 0.5

    def tanh(self) -> "Tensor":
        a = self
        data = np.tanh(a.data)

        def bw(g):
            _send(a, g * (1.0 - data * data))
        return Tensor._from_op(data, (a,), bw)

    def sigmoid(self) -> "Tensor":
        a = self
        z = np.abs(a.data)
        e = np.exp(-z)
        data = np.where(a.data >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

        def bw(g):
            _send(a, g * data * (1.0 - data))
        return Tensor._from_op(data, (a,), bw)

    def relu(self) -> "Tensor":
        a = self
        data = np.maximum(a.data, 0.0)

        def bw(g):
            _send(a, g * (a.data > 0.0))
        return Tensor._from_op(data, (a,), bw)

    def softmax(self, axis: int = -1) -> "Tensor":
        a = self
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        data = e / e.sum(axis=axis, keepdims=True)

        def bw(g):
            dot = (g * data).sum(axis=axis, keepdims=True)
            _send(a, data * (g - dot))
        return Tensor._from_op(data, (a,), bw)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _send(node: Tensor, g: np.ndarray) -> None:
    if node.requires_grad:
        node._accumulate(g)


# -- free functions ----------------------------------------------------------


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate along `axis`; backward splits the gradient back apart."""
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise ContractViolation("concat of an empty sequence")
    base = tensors[0].shape
    for t in tensors[1:]:
        other = t.shape
        if len(other) != len(base) or any(
                o != b for i, (o, b) in enumerate(zip(other, base))
                if i != (axis % len(base))):
            raise ShapeError(f"concat shapes do not conform: {base} vs {other}")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for t, part in zip(tensors, np.split(g, splits, axis=axis)):
            _send(t, part)
    return Tensor._from_op(data, tensors, bw)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Stack same-shape tensors along a new axis."""
    tensors = list(tensors)
    if not tensors:
        raise ContractViolation("stack of an empty sequence")
    expanded = []
    for t in tensors:
        shape = list(t.shape)
        shape.insert(axis if axis >= 0 else len(shape) + 1 + axis, 1)
        expanded.append(t.reshape(tuple(shape)))
    return concat(expanded, axis=axis)


def take_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Embedding lookup: rows of `table` at integer `ids` (scatter-add grad)."""
    ids = np.asarray(ids, dtype=np.int64)
    if np.any(ids < 0) or np.any(ids >= table.shape[0]):
        raise ContractViolation(
            f"row index out of range for table with {table.shape[0]} rows")
    return table[ids]


def dropout(x: Tensor, rate: float, rng: np.random.Generator,
            training: bool) -> Tensor:
    """Inverted dropout: identity in eval mode, mask/keep scaling in train."""
    if not training or rate == 0.0:
        return x
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(np.float64) / keep
    return x * Tensor(mask)


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor,
               eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    The relative error denominator is max(1, |numeric|) per coordinate.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ContractViolation(f"eps {eps} outside [1e-7, 1e-3]")
    probe = Tensor(x.data.copy(), requires_grad=True)
    out = f(probe)
    if out.size != 1:
        raise ContractViolation("grad_check target must return a scalar")
    out.assert_finite("grad_check objective")
    out.backward()
    analytic = probe.grad if probe.grad is not None else np.zeros_like(probe.data)

    flat = probe.data.reshape(-1)
    worst = 0.0
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = f(probe).item()
            flat[i] = orig - eps
            lo = f(probe).item()
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise NonFiniteError("objective non-finite during grad_check")
            numeric = (hi - lo) / (2.0 * eps)
            err = abs(analytic.reshape(-1)[i] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst
