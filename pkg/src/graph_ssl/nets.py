"""Prior and posterior networks emitting per-node categorical log-probabilities.

The label prior over classes is a two-layer MLP on features alone; the
approximate posterior is a two-layer GCN or GAT over features and graph.
All forwards return row-normalized log-probabilities (n x K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .data import Dataset
from .errors import ConfigError
from .graphs import SparseGraph
from .sparse import CsrMatrix

GAT_HEADS = 8
GAT_LEAKY_SLOPE = 0.2


def glorot_init(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Uniform Glorot initialization over +-sqrt(6/(fan_in+fan_out))."""
    fan_in, fan_out = shape
    if fan_in <= 0 or fan_out <= 0:
        raise ConfigError(f"glorot_init needs positive dims, got {shape}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class MlpParams:
    w1: Parameter
    b1: Parameter
    w2: Parameter
    b2: Parameter
    dropout: float = 0.5

    @classmethod
    def init(cls, d, hidden, k, rng, prefix="mlp", weight_decay=5e-4, dropout=0.5):
        # decay on the first layer only, matching the usual two-layer baselines
        return cls(
            w1=Parameter(glorot_init((d, hidden), rng), f"{prefix}.w1", weight_decay=weight_decay),
            b1=Parameter(np.zeros((1, hidden)), f"{prefix}.b1"),
            w2=Parameter(glorot_init((hidden, k), rng), f"{prefix}.w2"),
            b2=Parameter(np.zeros((1, k)), f"{prefix}.b2"),
            dropout=dropout,
        )

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]


@dataclass
class GcnParams:
    w1: Parameter
    w2: Parameter
    dropout: float = 0.5

    @classmethod
    def init(cls, d, hidden, k, rng, prefix="gcn", weight_decay=5e-4, dropout=0.5):
        return cls(
            w1=Parameter(glorot_init((d, hidden), rng), f"{prefix}.w1", weight_decay=weight_decay),
            w2=Parameter(glorot_init((hidden, k), rng), f"{prefix}.w2"),
            dropout=dropout,
        )

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.w2]


@dataclass
class GatHead:
    w: Parameter
    att_self: Parameter  # scores the receiving node
    att_neigh: Parameter  # scores the sending node


@dataclass
class GatParams:
    heads: list[GatHead]
    out: GatHead
    dropout: float = 0.6

    @classmethod
    def init(cls, d, per_head, k, rng, prefix="gat", weight_decay=5e-4, dropout=0.6):
        heads = []
        for h in range(GAT_HEADS):
            heads.append(
                GatHead(
                    w=Parameter(glorot_init((d, per_head), rng), f"{prefix}.h{h}.w", weight_decay=weight_decay),
                    att_self=Parameter(glorot_init((per_head, 1), rng), f"{prefix}.h{h}.att_self", weight_decay=weight_decay),
                    att_neigh=Parameter(glorot_init((per_head, 1), rng), f"{prefix}.h{h}.att_neigh", weight_decay=weight_decay),
                )
            )
        hidden_total = GAT_HEADS * per_head
        out = GatHead(
            w=Parameter(glorot_init((hidden_total, k), rng), f"{prefix}.out.w", weight_decay=weight_decay),
            att_self=Parameter(glorot_init((k, 1), rng), f"{prefix}.out.att_self", weight_decay=weight_decay),
            att_neigh=Parameter(glorot_init((k, 1), rng), f"{prefix}.out.att_neigh", weight_decay=weight_decay),
        )
        return cls(heads=heads, out=out, dropout=dropout)

    def parameters(self) -> list[Parameter]:
        ps = []
        for h in self.heads:
            ps.extend([h.w, h.att_self, h.att_neigh])
        ps.extend([self.out.w, self.out.att_self, self.out.att_neigh])
        return ps


def mlp_forward(p: MlpParams, x: Tensor, training: bool = False, rng=None) -> Tensor:
    """log_softmax(relu(X W1 + b1) W2 + b2) with dropout before each layer."""
    rng = rng or np.random.default_rng(0)
    h = ad.dropout(x, p.dropout, training, rng)
    h = ad.relu(ad.add(ad.matmul(h, p.w1), p.b1))
    h = ad.dropout(h, p.dropout, training, rng)
    return ad.rowwise_log_softmax(ad.add(ad.matmul(h, p.w2), p.b2))


def gcn_forward(p: GcnParams, adj: CsrMatrix, x: Tensor, training: bool = False, rng=None) -> Tensor:
    """log_softmax(A relu(A X W1) W2) with dropout on each layer input."""
    rng = rng or np.random.default_rng(0)
    h = ad.dropout(x, p.dropout, training, rng)
    h = ad.relu(ad.sparse_dense_matmul(adj, ad.matmul(h, p.w1)))
    h = ad.dropout(h, p.dropout, training, rng)
    return ad.rowwise_log_softmax(ad.sparse_dense_matmul(adj, ad.matmul(h, p.w2)))


def _gat_layer(head: GatHead, x: Tensor, src, dst, n, training, rng, att_dropout):
    z = ad.matmul(x, head.w)
    score_self = ad.matmul(z, head.att_self)  # (n,1), contribution of the receiver
    score_neigh = ad.matmul(z, head.att_neigh)  # (n,1), contribution of the sender
    scores = ad.add(ad.gather_rows(score_self, dst), ad.gather_rows(score_neigh, src))
    att = ad.segment_softmax(ad.leaky_relu(scores, GAT_LEAKY_SLOPE), dst, n)
    att = ad.dropout(att, att_dropout, training, rng)
    return ad.scatter_rows(ad.mul(ad.gather_rows(z, src), att), dst, n)


def gat_forward(p: GatParams, g: SparseGraph, x: Tensor, training: bool = False, rng=None) -> Tensor:
    """Two-layer multi-head attention network over the graph.

    Layer 1 runs the 8 heads independently (leaky-relu scored attention over
    each node's in-neighborhood including a self-loop), concatenates them and
    applies elu. Layer 2 is a single head into the K classes followed by a
    rowwise log-softmax. Dropout hits layer inputs and attention weights.
    """
    rng = rng or np.random.default_rng(0)
    src, dst = g.directed_with_self_loops()
    h = ad.dropout(x, p.dropout, training, rng)
    parts = [_gat_layer(head, h, src, dst, g.n, training, rng, p.dropout) for head in p.heads]
    h = ad.elu(ad.concat_cols(parts))
    h = ad.dropout(h, p.dropout, training, rng)
    out = _gat_layer(p.out, h, src, dst, g.n, training, rng, p.dropout)
    return ad.rowwise_log_softmax(out)


def beliefs_with_observed(logq: Tensor, ds: Dataset) -> Tensor:
    """Per-node class beliefs: exact one-hot rows for observed nodes,
    exp(logq) elsewhere. Gradient flows only through unobserved rows."""
    one_hot = np.eye(ds.num_classes)[ds.labels]
    return ad.replace_rows(ad.exp(logq), ds.observed_mask, one_hot)
