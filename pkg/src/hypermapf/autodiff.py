"""Dense float64 tensors with reverse-mode differentiation.

Operations record onto the innermost active `Tape`; without an active tape
they are plain forward computations. `backward(tape, loss)` replays the
recorded operations once, in reverse creation order (creation order is a
topological order by construction), and returns gradients keyed by tensor
identity. Ragged attention is served by segment primitives that normalise
within variable-length index groups, so no padding ever distorts a softmax
denominator.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Tensor:
    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(data) -> Tensor:
    return Tensor(data)


_ACTIVE: list["Tape"] = []


class Tape:
    """Ordered record of operations; context manager activates recording."""

    def __init__(self):
        self.records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.pop()
        return False

    def __len__(self):
        return len(self.records)


def _emit(out: Tensor, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    if _ACTIVE:
        _ACTIVE[-1].records.append((out, inputs, backward_fn))
    return out


class Gradients:
    def __init__(self, table: dict[int, np.ndarray]):
        self._table = table

    def wrt(self, t: Tensor) -> np.ndarray:
        g = self._table.get(id(t))
        if g is None:
            return np.zeros_like(t.data)
        return g


def backward(tape: Tape, loss: Tensor) -> Gradients:
    """Reverse-mode gradients of a scalar loss recorded on `tape`.

    Tensors that do not influence the loss receive zero gradients.
    """
    if loss.data.size != 1:
        raise ValueError(f"loss must be scalar, got shape {loss.data.shape}")
    table: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for out, inputs, backward_fn in reversed(tape.records):
        g = table.get(id(out))
        if g is None:
            continue
        parts = backward_fn(g)
        for inp, part in zip(inputs, parts):
            if part is None:
                continue
            key = id(inp)
            if key in table:
                table[key] = table[key] + part
            else:
                table[key] = part
    return Gradients(table)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------- arithmetic

def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data)
    return _emit(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape),
                                         _unbroadcast(g, b.data.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data - b.data)
    return _emit(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape),
                                         _unbroadcast(-g, b.data.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data * b.data)
    return _emit(out, (a, b), lambda g: (_unbroadcast(g * b.data, a.data.shape),
                                         _unbroadcast(g * a.data, b.data.shape)))


def scale(a: Tensor, s: float) -> Tensor:
    out = Tensor(a.data * s)
    return _emit(out, (a,), lambda g: (g * s,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shapes {a.data.shape} x {b.data.shape}")
    out = Tensor(a.data @ b.data)
    return _emit(out, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def exp(a: Tensor) -> Tensor:
    out = Tensor(np.exp(a.data))
    return _emit(out, (a,), lambda g: (g * out.data,))


# ------------------------------------------------------------------- shaping

def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    return _emit(out, (a,), lambda g: (g.reshape(a.data.shape),))


def concat(parts: list[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        return tuple(np.split(g, splits, axis=axis))

    return _emit(out, tuple(parts), back)


def narrow(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = Tensor(a.data[index].copy())

    def back(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return _emit(out, (a,), back)


def take(a: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows along the first axis; scatter-adds on the way back."""
    idx = np.asarray(idx, dtype=int)
    out = Tensor(a.data[idx])

    def back(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        return (full,)

    return _emit(out, (a,), back)


# ---------------------------------------------------------------- reductions

def tsum(a: Tensor, axis: int | None = None) -> Tensor:
    out = Tensor(a.data.sum(axis=axis))

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy(),)

    return _emit(out, (a,), back)


def tmean(a: Tensor, axis: int | None = None) -> Tensor:
    count = a.data.size if axis is None else a.data.shape[axis]
    return scale(tsum(a, axis), 1.0 / count)


def segment_sum(a: Tensor, segments: np.ndarray, num_segments: int) -> Tensor:
    """Sum rows of `a` into `num_segments` bins; empty bins are zero rows."""
    segments = np.asarray(segments, dtype=int)
    data = np.zeros((num_segments,) + a.data.shape[1:])
    np.add.at(data, segments, a.data)
    out = Tensor(data)
    return _emit(out, (a,), lambda g: (g[segments],))


# -------------------------------------------------------------- nonlinearity

# When set to a list, relu/leaky_relu append min |preactivation| per call.
# Gradient checks use this to reject points sitting on a kink, where central
# differences are undefined.
kink_gap_trace: list[float] | None = None


def _trace_kink(data: np.ndarray) -> None:
    if kink_gap_trace is not None and data.size:
        kink_gap_trace.append(float(np.abs(data).min()))


def relu(a: Tensor) -> Tensor:
    _trace_kink(a.data)
    out = Tensor(np.maximum(a.data, 0.0))
    return _emit(out, (a,), lambda g: (g * (a.data > 0),))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    _trace_kink(a.data)
    out = Tensor(np.where(a.data > 0, a.data, slope * a.data))
    return _emit(out, (a,), lambda g: (g * np.where(a.data > 0, 1.0, slope),))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                        np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = Tensor(out_data)
    return _emit(out, (a,), lambda g: (g * out.data * (1.0 - out.data),))


def tanh(a: Tensor) -> Tensor:
    out = Tensor(np.tanh(a.data))
    return _emit(out, (a,), lambda g: (g * (1.0 - out.data ** 2),))


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    out = Tensor(np.clip(a.data, lo, hi))
    inside = (a.data > lo) & (a.data < hi)
    return _emit(out, (a,), lambda g: (g * inside,))


def minimum(a: Tensor, b: Tensor) -> Tensor:
    take_a = a.data <= b.data
    out = Tensor(np.where(take_a, a.data, b.data))
    return _emit(out, (a, b), lambda g: (_unbroadcast(g * take_a, a.data.shape),
                                         _unbroadcast(g * ~take_a, b.data.shape)))


# ------------------------------------------------------------------- softmax

def segment_softmax(a: Tensor, segments: np.ndarray) -> Tensor:
    """Softmax normalised independently within each index segment.

    `a` is a vector of scores and `segments[p]` names the group of entry p;
    groups may have any length and need not be contiguous. A segment id
    with no entries simply contributes no outputs.
    """
    segments = np.asarray(segments, dtype=int)
    if a.data.ndim != 1 or segments.shape != a.data.shape:
        raise ValueError("segment_softmax expects matching 1-D score/segment arrays")
    if a.data.size == 0:
        return _emit(Tensor(np.zeros(0)), (a,), lambda g: (np.zeros(0),))
    num = int(segments.max()) + 1
    peak = np.full(num, -np.inf)
    np.maximum.at(peak, segments, a.data)
    shifted = np.exp(a.data - peak[segments])
    denom = np.bincount(segments, weights=shifted, minlength=num)
    out = Tensor(shifted / denom[segments])

    def back(g):
        inner = np.bincount(segments, weights=g * out.data, minlength=num)
        return (out.data * (g - inner[segments]),)

    return _emit(out, (a,), back)


def log_softmax(a: Tensor) -> Tensor:
    """Log-softmax over the last axis of a 2-D tensor."""
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = Tensor(shifted - logsum)

    def back(g):
        soft = np.exp(out.data)
        return (g - soft * g.sum(axis=-1, keepdims=True),)

    return _emit(out, (a,), back)


def softmax(a: Tensor) -> Tensor:
    return exp(log_softmax(a))


def cross_entropy_with_logits(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy of integer labels under softmax(logits)."""
    labels = np.asarray(labels, dtype=int)
    if logits.data.ndim != 2 or labels.shape != (logits.data.shape[0],):
        raise ValueError("expected (B, K) logits and (B,) labels")
    ls = log_softmax(logits)
    picked = take_rows_at(ls, labels)
    return scale(tsum(picked), -1.0 / labels.size)


def take_rows_at(a: Tensor, cols: np.ndarray) -> Tensor:
    """Select one column per row: out[b] = a[b, cols[b]]."""
    cols = np.asarray(cols, dtype=int)
    rows = np.arange(a.data.shape[0])
    out = Tensor(a.data[rows, cols])

    def back(g):
        full = np.zeros_like(a.data)
        full[rows, cols] = g
        return (full,)

    return _emit(out, (a,), back)


# --------------------------------------------------------------- convolution

def conv2d(x: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """Stride-1, zero-padded ("same") 2-D convolution.

    x: (B, C, H, W); kernel: (O, C, kh, kw) with odd kh, kw; bias: (O,).
    """
    if x.data.ndim != 4 or kernel.data.ndim != 4:
        raise ValueError("conv2d expects (B,C,H,W) input and (O,C,kh,kw) kernel")
    if x.data.shape[1] != kernel.data.shape[1]:
        raise ValueError("conv2d channel mismatch")
    kh, kw = kernel.data.shape[2:]
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("conv2d kernels must have odd spatial sizes")
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    data = np.einsum("bcxyij,ocij->boxy", windows, kernel.data, optimize=True)
    if bias is not None:
        data = data + bias.data[None, :, None, None]
    out = Tensor(data)

    def back(g):
        dk = np.einsum("bcxyij,boxy->ocij", windows, g, optimize=True)
        gp = np.pad(g, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        gw = sliding_window_view(gp, (kh, kw), axis=(2, 3))
        flipped = kernel.data[:, :, ::-1, ::-1]
        dx = np.einsum("boxyij,ocij->bcxy", gw, flipped, optimize=True)
        db = g.sum(axis=(0, 2, 3)) if bias is not None else None
        return (dx, dk, db) if bias is not None else (dx, dk)

    inputs = (x, kernel, bias) if bias is not None else (x, kernel)
    return _emit(out, inputs, back)


# ------------------------------------------------------------- verification

def finite_diff_check(f, points: list[Tensor], h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference
    gradients of scalar `f(*points)`, perturbing every coordinate of every
    point tensor. The error denominator is max(|analytic|, |numeric|, 1e-8).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    with Tape() as tape:
        loss = f(*points)
    grads = backward(tape, loss)
    worst = 0.0
    for p in points:
        analytic = grads.wrt(p).reshape(-1)
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(f(*points).data)
            flat[i] = orig - h
            down = float(f(*points).data)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(analytic[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic[i] - numeric) / denom)
    return worst
