"""Reverse-mode automatic differentiation over dense 2-D float64 tensors.

The tape is define-by-run: every operation returns a fresh `Tensor` holding
its forward value, references to its inputs, and a closure that routes the
output gradient back to them. `backward` walks the tape once in reverse
topological order. Tapes are rebuilt each forward pass and never shared
between workers.

Gradient conventions at kinks: relu uses subgradient 0 at x=0, leaky_relu
uses its negative slope at x=0.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ContractError, DimensionError, NumericError
from .sparse import CsrMatrix
from . import kernels


def _as_value(x) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1, 1)
    elif v.ndim == 1:
        v = v.reshape(1, -1)
    elif v.ndim != 2:
        raise DimensionError(f"tensors are 2-D; got ndim={v.ndim}")
    return v


class Tensor:
    """A node on the tape: forward value plus gradient plumbing."""

    __slots__ = ("value", "grad", "requires", "_parents", "_backward_fn")

    def __init__(self, value, requires: bool = False, _parents=(), _backward_fn=None):
        self.value = _as_value(value)
        self.grad = None
        self.requires = requires or any(p.requires for p in _parents)
        self._parents = _parents
        self._backward_fn = _backward_fn

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        if self.value.size != 1:
            raise ContractError(f"item() on non-scalar shape {self.shape}")
        return float(self.value[0, 0])

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires={self.requires})"


class Parameter(Tensor):
    """Trainable leaf tensor with a name and an optional L2 decay flag."""

    __slots__ = ("name", "trainable", "weight_decay")

    def __init__(self, value, name: str, trainable: bool = True, weight_decay: float = 0.0):
        super().__init__(value, requires=trainable)
        self.name = name
        self.trainable = trainable
        self.weight_decay = float(weight_decay)

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.shape})"


def _node(value, parents, backward_fn):
    return Tensor(value, _parents=tuple(parents), _backward_fn=backward_fn)


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.value)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    out = g
    if shape[0] == 1 and g.shape[0] > 1:
        out = out.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] > 1:
        out = out.sum(axis=1, keepdims=True)
    return out


# ---------------------------------------------------------------------------
# core ops
# ---------------------------------------------------------------------------


def constant(value) -> Tensor:
    return Tensor(value)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul {a.shape} x {b.shape}: inner dimensions differ")
    out_value = a.value @ b.value

    def backward_fn(out):
        g = out.grad
        if a.requires:
            _accumulate(a, g @ b.value.T)
        if b.requires:
            _accumulate(b, a.value.T @ g)

    return _node(out_value, (a, b), backward_fn)


def sparse_dense_matmul(s: CsrMatrix, x: Tensor) -> Tensor:
    """CSR @ dense; the gradient to x routes only through stored nonzeros."""
    if s.shape[1] != x.shape[0]:
        raise DimensionError(f"sparse {s.shape} x dense {x.shape}: inner dimensions differ")
    out_value = s.matmul(x.value)

    def backward_fn(out):
        if x.requires:
            _accumulate(x, s.T.matmul(out.grad))

    return _node(out_value, (x,), backward_fn)


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        out_value = a.value + b.value
    except ValueError as e:
        raise DimensionError(f"add {a.shape} + {b.shape}: {e}") from None

    def backward_fn(out):
        g = out.grad
        if a.requires:
            _accumulate(a, _unbroadcast(g, a.shape))
        if b.requires:
            _accumulate(b, _unbroadcast(g, b.shape))

    return _node(out_value, (a, b), backward_fn)


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        out_value = a.value - b.value
    except ValueError as e:
        raise DimensionError(f"sub {a.shape} - {b.shape}: {e}") from None

    def backward_fn(out):
        g = out.grad
        if a.requires:
            _accumulate(a, _unbroadcast(g, a.shape))
        if b.requires:
            _accumulate(b, _unbroadcast(-g, b.shape))

    return _node(out_value, (a, b), backward_fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    try:
        out_value = a.value * b.value
    except ValueError as e:
        raise DimensionError(f"mul {a.shape} * {b.shape}: {e}") from None

    def backward_fn(out):
        g = out.grad
        if a.requires:
            _accumulate(a, _unbroadcast(g * b.value, a.shape))
        if b.requires:
            _accumulate(b, _unbroadcast(g * a.value, b.shape))

    return _node(out_value, (a, b), backward_fn)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward_fn(out):
        if a.requires:
            _accumulate(a, c * out.grad)

    return _node(c * a.value, (a,), backward_fn)


def transpose(a: Tensor) -> Tensor:
    def backward_fn(out):
        if a.requires:
            _accumulate(a, out.grad.T)

    return _node(a.value.T, (a,), backward_fn)


def sum_all(a: Tensor) -> Tensor:
    def backward_fn(out):
        if a.requires:
            _accumulate(a, np.full_like(a.value, out.grad[0, 0]))

    return _node(a.value.sum(), (a,), backward_fn)


def exp(a: Tensor) -> Tensor:
    out_value = np.exp(a.value)

    def backward_fn(out):
        if a.requires:
            _accumulate(a, out.grad * out_value)

    return _node(out_value, (a,), backward_fn)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def logsigmoid(a: Tensor) -> Tensor:
    """log(sigmoid(x)), computed without overflow for large |x|."""
    x = a.value
    out_value = np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))

    def backward_fn(out):
        if a.requires:
            _accumulate(a, out.grad * _sigmoid(-x))

    return _node(out_value, (a,), backward_fn)


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    out_value = np.where(mask, a.value, 0.0)

    def backward_fn(out):
        if a.requires:
            _accumulate(a, out.grad * mask)

    return _node(out_value, (a,), backward_fn)


def leaky_relu(a: Tensor, slope: float) -> Tensor:
    if not np.isfinite(slope):
        raise ConfigError("leaky_relu slope must be finite")
    deriv = np.where(a.value > 0, 1.0, slope)

    def backward_fn(out):
        if a.requires:
            _accumulate(a, out.grad * deriv)

    return _node(np.where(a.value > 0, a.value, slope * a.value), (a,), backward_fn)


def elu(a: Tensor) -> Tensor:
    x = a.value
    ex = np.exp(np.minimum(x, 0.0))
    out_value = np.where(x > 0, x, ex - 1.0)
    deriv = np.where(x > 0, 1.0, ex)

    def backward_fn(out):
        if a.requires:
            _accumulate(a, out.grad * deriv)

    return _node(out_value, (a,), backward_fn)


def sigmoid(a: Tensor) -> Tensor:
    out_value = _sigmoid(a.value)

    def backward_fn(out):
        if a.requires:
            _accumulate(a, out.grad * out_value * (1.0 - out_value))

    return _node(out_value, (a,), backward_fn)


_ACTIVATIONS = {
    "relu": lambda x, slope: relu(x),
    "elu": lambda x, slope: elu(x),
    "leaky_relu": lambda x, slope: leaky_relu(x, slope),
    "sigmoid": lambda x, slope: sigmoid(x),
}


def activation(x: Tensor, kind: str, slope: float = 0.01) -> Tensor:
    """Elementwise nonlinearity dispatch; kind is one of relu|elu|leaky_relu|sigmoid."""
    if kind not in _ACTIVATIONS:
        raise ConfigError(f"unknown activation {kind!r}")
    return _ACTIVATIONS[kind](x, slope)


# ---------------------------------------------------------------------------
# softmax family
# ---------------------------------------------------------------------------


def rowwise_log_softmax(x: Tensor) -> Tensor:
    """Log-probabilities per row, stabilized by row-max subtraction."""
    if not np.isfinite(x.value).all():
        raise NumericError("rowwise_log_softmax: non-finite input")
    shifted = x.value - x.value.max(axis=1, keepdims=True)
    out_value = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

    def backward_fn(out):
        if x.requires:
            g = out.grad
            _accumulate(x, g - np.exp(out_value) * g.sum(axis=1, keepdims=True))

    return _node(out_value, (x,), backward_fn)


def segment_softmax(scores: Tensor, dst: np.ndarray, n_segments: int) -> Tensor:
    """Softmax of scores within each destination segment.

    scores is (E,1); dst maps each entry to its segment id in [0, n_segments).
    Entries of each segment are positive and sum to 1; empty segments simply
    contribute no entries.
    """
    if scores.shape[1] != 1:
        raise DimensionError(f"segment_softmax expects (E,1) scores, got {scores.shape}")
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    if dst.shape[0] != scores.shape[0]:
        raise DimensionError("one segment id per score row required")
    if dst.size and (dst.min() < 0 or dst.max() >= n_segments):
        raise IndexError("segment id out of range")
    flat = scores.value[:, 0]
    seg_max = kernels.segment_max(flat, dst, n_segments)
    z = np.exp(flat - seg_max[dst])
    denom = kernels.segment_sum(z, dst, n_segments)
    out_flat = z / denom[dst]
    out_value = out_flat[:, None]

    def backward_fn(out):
        if scores.requires:
            g = out.grad[:, 0]
            dot = kernels.segment_sum(out_flat * g, dst, n_segments)
            _accumulate(scores, (out_flat * (g - dot[dst]))[:, None])

    return _node(out_value, (scores,), backward_fn)


# ---------------------------------------------------------------------------
# structural ops
# ---------------------------------------------------------------------------


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows x[idx]; backward scatter-adds back through idx."""
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    out_value = x.value[idx]

    def backward_fn(out):
        if x.requires:
            _accumulate(x, kernels.scatter_add_rows(np.ascontiguousarray(out.grad), idx, x.shape[0]))

    return _node(out_value, (x,), backward_fn)


def scatter_rows(x: Tensor, idx: np.ndarray, n_rows: int) -> Tensor:
    """out[i] = sum of x rows whose idx equals i; inverse adjoint of gather_rows."""
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if idx.shape[0] != x.shape[0]:
        raise DimensionError("one destination per row required")
    if idx.size and (idx.min() < 0 or idx.max() >= n_rows):
        raise IndexError("destination row out of range")
    out_value = kernels.scatter_add_rows(np.ascontiguousarray(x.value), idx, n_rows)

    def backward_fn(out):
        if x.requires:
            _accumulate(x, out.grad[idx])

    return _node(out_value, (x,), backward_fn)


def concat_cols(parts) -> Tensor:
    parts = list(parts)
    rows = parts[0].shape[0]
    if any(p.shape[0] != rows for p in parts):
        raise DimensionError("concat_cols requires equal row counts")
    out_value = np.concatenate([p.value for p in parts], axis=1)
    offsets = np.cumsum([0] + [p.shape[1] for p in parts])

    def backward_fn(out):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires:
                _accumulate(p, out.grad[:, lo:hi])

    return _node(out_value, tuple(parts), backward_fn)


def row_outer(a: Tensor, b: Tensor) -> Tensor:
    """Row-wise outer product: out[e, i*Kb + j] = a[e,i] * b[e,j]."""
    if a.shape[0] != b.shape[0]:
        raise DimensionError("row_outer requires equal row counts")
    e, ka = a.shape
    kb = b.shape[1]
    out_value = (a.value[:, :, None] * b.value[:, None, :]).reshape(e, ka * kb)

    def backward_fn(out):
        g3 = out.grad.reshape(e, ka, kb)
        if a.requires:
            _accumulate(a, np.einsum("eij,ej->ei", g3, b.value))
        if b.requires:
            _accumulate(b, np.einsum("eij,ei->ej", g3, a.value))

    return _node(out_value, (a, b), backward_fn)


def pick_entries(x: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """Select x[rows[i], cols[i]] as an (m,1) column."""
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    if rows.shape != cols.shape:
        raise DimensionError("rows and cols must have equal length")
    out_value = x.value[rows, cols][:, None]

    def backward_fn(out):
        if x.requires:
            g = np.zeros_like(x.value)
            np.add.at(g, (rows, cols), out.grad[:, 0])
            _accumulate(x, g)

    return _node(out_value, (x,), backward_fn)


def replace_rows(x: Tensor, row_mask: np.ndarray, replacement: np.ndarray) -> Tensor:
    """Overwrite masked rows with constant values; no gradient flows to them."""
    row_mask = np.ascontiguousarray(row_mask, dtype=bool)
    if row_mask.shape[0] != x.shape[0]:
        raise DimensionError("row_mask length must match row count")
    out_value = np.where(row_mask[:, None], replacement, x.value)

    def backward_fn(out):
        if x.requires:
            _accumulate(x, out.grad * (~row_mask)[:, None])

    return _node(out_value, (x,), backward_fn)


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero with probability rate, rescale survivors by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0,1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    inv = 1.0 / (1.0 - rate)
    out_value = x.value * keep * inv

    def backward_fn(out):
        if x.requires:
            _accumulate(x, out.grad * keep * inv)

    return _node(out_value, (x,), backward_fn)


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------


def _topo_order(root: Tensor):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor, parameters=None) -> dict:
    """Populate gradients of everything reachable from a scalar loss.

    Returns a table mapping each trainable Parameter to its gradient array.
    When `parameters` is given, parameters the loss does not reach get an
    explicit zero gradient. Calling backward twice on the same root is a
    contract error: the tape is single-use.
    """
    if loss.value.size != 1:
        raise ContractError(f"backward root must be scalar, got shape {loss.shape}")
    if loss._backward_fn is _CONSUMED:
        raise ContractError("backward already ran on this tape; rebuild the graph")

    order = _topo_order(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones((1, 1))
    table = {}
    for node in reversed(order):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn(node)
        if isinstance(node, Parameter) and node.trainable:
            if node.grad is None:
                node.grad = np.zeros_like(node.value)
            table[node] = node.grad
    if parameters is not None:
        for p in parameters:
            if p.trainable and p.grad is None:
                p.grad = np.zeros_like(p.value)
                table[p] = p.grad
    loss._backward_fn = _CONSUMED
    return table


def _CONSUMED(_):
    raise ContractError("backward already ran on this tape")
