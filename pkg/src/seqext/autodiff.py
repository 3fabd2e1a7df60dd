"""A small define-by-run reverse-mode autodiff engine over float64 numpy arrays.

Only the primitives needed by the recurrent mixture model and its baselines
are provided. Operations executed while a :class:`Tape` is active, and with
at least one input that requires a gradient, append a node to that tape;
:meth:`Tape.backward` walks the nodes in reverse.

>>> store = ParamStore()
>>> w = store.add("w", np.array([1.0, 2.0]))
>>> with Tape() as tape:
...     loss = sum_(w * w)
>>> tape.backward(loss)
>>> store.grad("w").tolist()
[2.0, 4.0]
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Tensor", "Tape", "ParamStore", "ShapeError",
    "tensor", "matmul", "matvec", "add", "sub", "mul", "neg", "scale", "square",
    "sigmoid", "tanh", "exp", "log", "clip_min", "softmax", "log_softmax", "logsumexp",
    "sum_", "mean", "slice_", "reshape", "concat", "stack", "grad_check", "no_tape",
]


class ShapeError(ValueError):
    pass


class Tensor:
    """Dense float64 array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def numpy(self) -> np.ndarray:
        return self.data


def tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class _Node:
    op: str
    inputs: tuple
    output: Tensor
    vjp: Callable  # grad_out -> tuple of input grads (None where not needed)


_ACTIVE: list["Tape"] = []


class Tape:
    """Append-only record of operations; use as a context manager."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self._ids: dict[int, int] = {}

    def __enter__(self):
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.remove(self)
        return False

    def record(self, op, inputs, output, vjp):
        # inputs must already be known leaves or outputs of earlier nodes
        self._ids[id(output)] = len(self.nodes)
        self.nodes.append(_Node(op, inputs, output, vjp))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that requires it."""
        if loss.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            in_grads = node.vjp(g)
            for t, gi in zip(node.inputs, in_grads):
                if gi is None or not isinstance(t, Tensor) or not t.requires_grad:
                    continue
                if id(t) in self._ids:
                    key = id(t)
                    grads[key] = grads[key] + gi if key in grads else gi
                else:
                    t.grad = gi.copy() if t.grad is None else t.grad + gi


class no_tape:
    """Temporarily suspend recording (inference paths)."""

    def __enter__(self):
        self._saved = list(_ACTIVE)
        _ACTIVE.clear()

    def __exit__(self, *exc):
        _ACTIVE.extend(self._saved)
        return False


def _emit(op, inputs, data, vjp) -> Tensor:
    track = bool(_ACTIVE) and any(isinstance(t, Tensor) and t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=track)
    if track:
        _ACTIVE[-1].record(op, inputs, out, vjp)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    # sum out dimensions numpy broadcasting added; only leading dims and size-1 dims
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _check_broadcast(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# --- primitives -------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """``a @ b`` for 1-D/2-D operands (vector-matrix, matrix-vector, matrix-matrix)."""
    a, b = tensor(a), tensor(b)
    if a.data.ndim > 2 or b.data.ndim > 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    A, B = a.data, b.data

    def vjp(g):
        if A.ndim == 2 and B.ndim == 2:
            return g @ B.T, A.T @ g
        if A.ndim == 2:
            return np.outer(g, B), A.T @ g
        if B.ndim == 2:
            return B @ g, np.outer(A, g)
        return g * B, g * A

    return _emit("matmul", (a, b), A @ B, vjp)


def matvec(W, x) -> Tensor:
    """``W @ x`` with ``W`` of shape (out, in) and ``x`` of shape (in,)."""
    return matmul(W, x)


def add(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    _check_broadcast("add", a, b)
    return _emit("add", (a, b), a.data + b.data,
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    _check_broadcast("sub", a, b)
    return _emit("sub", (a, b), a.data - b.data,
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = tensor(a), tensor(b)
    _check_broadcast("mul", a, b)
    A, B = a.data, b.data
    return _emit("mul", (a, b), A * B,
                 lambda g: (_unbroadcast(g * B, a.shape), _unbroadcast(g * A, b.shape)))


def neg(a) -> Tensor:
    a = tensor(a)
    return _emit("neg", (a,), -a.data, lambda g: (-g,))


def scale(a, c: float) -> Tensor:
    a = tensor(a)
    return _emit("scale", (a,), a.data * c, lambda g: (g * c,))


def square(a) -> Tensor:
    a = tensor(a)
    A = a.data
    return _emit("square", (a,), A * A, lambda g: (2.0 * A * g,))


def sigmoid(a) -> Tensor:
    a = tensor(a)
    # split by sign to avoid overflow in exp
    x = a.data
    e = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _emit("sigmoid", (a,), s, lambda g: (g * s * (1.0 - s),))


def tanh(a) -> Tensor:
    a = tensor(a)
    t = np.tanh(a.data)
    return _emit("tanh", (a,), t, lambda g: (g * (1.0 - t * t),))


def exp(a) -> Tensor:
    a = tensor(a)
    e = np.exp(a.data)
    return _emit("exp", (a,), e, lambda g: (g * e,))


def log(a) -> Tensor:
    a = tensor(a)
    A = a.data
    return _emit("log", (a,), np.log(A), lambda g: (g / A,))


def clip_min(a, floor: float) -> Tensor:
    """``max(a, floor)``; the gradient is zero where the floor is active."""
    a = tensor(a)
    mask = a.data > floor
    return _emit("clip_min", (a,), np.where(mask, a.data, floor), lambda g: (g * mask,))


def softmax(a) -> Tensor:
    """Softmax over the last axis, shifted by the max for stability."""
    a = tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _emit("softmax", (a,), s, vjp)


def log_softmax(a) -> Tensor:
    a = tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    out = z - lse
    s = np.exp(out)
    return _emit("log_softmax", (a,), out,
                 lambda g: (g - s * g.sum(axis=-1, keepdims=True),))


def logsumexp(a) -> Tensor:
    """log-sum-exp over the last axis."""
    a = tensor(a)
    m = a.data.max(axis=-1, keepdims=True)
    e = np.exp(a.data - m)
    ssum = e.sum(axis=-1, keepdims=True)
    out = (m + np.log(ssum))[..., 0]
    w = e / ssum
    return _emit("logsumexp", (a,), out, lambda g: (g[..., None] * w,))


def sum_(a) -> Tensor:
    a = tensor(a)
    shape = a.shape
    return _emit("sum", (a,), np.sum(a.data), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a) -> Tensor:
    a = tensor(a)
    n = a.data.size
    shape = a.shape
    return _emit("mean", (a,), np.mean(a.data),
                 lambda g: (np.broadcast_to(g / n, shape).copy(),))


def slice_(a, index) -> Tensor:
    """Basic (non-fancy) indexing, e.g. ``slice_(x, (slice(None), 0))``."""
    a = tensor(a)
    shape = a.shape

    def vjp(g):
        out = np.zeros(shape)
        out[index] = g
        return (out,)

    return _emit("slice", (a,), a.data[index], vjp)


def reshape(a, shape) -> Tensor:
    a = tensor(a)
    old = a.shape
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {old} as {shape}") from None
    return _emit("reshape", (a,), data, lambda g: (g.reshape(old),))


def concat(tensors, axis: int = -1) -> Tensor:
    ts = [tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]
    try:
        data = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from None
    return _emit("concat", tuple(ts), data, lambda g: tuple(np.split(g, splits, axis=axis)))


def stack(tensors, axis: int = 0) -> Tensor:
    ts = [tensor(t) for t in tensors]
    try:
        data = np.stack([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"stack: incompatible shapes {[t.shape for t in ts]}") from None
    n = len(ts)
    return _emit("stack", tuple(ts), data,
                 lambda g: tuple(np.take(g, i, axis=axis) for i in range(n)))


# --- parameters -------------------------------------------------------------

class ParamStore:
    """Named trainable tensors with gradient buffers of the same shape."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def grad(self, name: str) -> np.ndarray:
        t = self._params[name]
        return np.zeros_like(t.data) if t.grad is None else t.grad

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def flat(self) -> np.ndarray:
        return np.concatenate([t.data.ravel() for t in self._params.values()])

    def state(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._params.items()}

    def load(self, state: dict) -> None:
        for k, v in state.items():
            t = self._params[k]
            v = np.asarray(v, dtype=np.float64)
            if v.shape != t.shape:
                raise ShapeError(f"{k}: expected shape {t.shape}, got {v.shape}")
            t.data = v.copy()


def grad_check(loss_fn: Callable[[], Tensor], params: ParamStore, eps: float = 1e-5,
               names=None) -> float:
    """Worst relative error between tape gradients and central differences.

    ``loss_fn`` must rebuild the loss from the current parameter values on
    every call. Relative error per coordinate is
    ``|g_tape - g_fd| / (|g_tape| + |g_fd| + 1e-8)``.
    """
    if not 0 < eps < 1e-2:
        raise ValueError("eps must lie in (0, 1e-2)")
    names = list(params) if names is None else list(names)
    params.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    worst = 0.0
    for name in names:
        t = params[name]
        analytic = params.grad(name).copy()
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            with no_tape():
                up = float(loss_fn().data)
            flat[i] = orig - eps
            with no_tape():
                down = float(loss_fn().data)
            flat[i] = orig
            fd = (up - down) / (2 * eps)
            a = analytic.reshape(-1)[i]
            worst = max(worst, abs(a - fd) / (abs(a) + abs(fd) + 1e-8))
    return worst
