"""Edge likelihood heads and assembly of the variational training loss.

Both heads score unordered node pairs with a Bernoulli log-likelihood that
depends on the (possibly unknown) endpoint classes. Expectations under the
per-node class beliefs are taken exactly: for a pair (i,j) the K x K table
of log-likelihoods is contracted with the outer product of the two belief
rows, so no label sampling is ever needed.

Loss sign conventions: every component is a non-negative-leaning penalty,
    total = recon + kl + label_prior + eta * supervised
where recon is the negative expected graph log-likelihood over the edge
batch, kl the divergence from the posterior to the feature-only prior over
unobserved nodes, label_prior the negative prior log-likelihood of observed
labels, and supervised the negative posterior log-likelihood of observed
labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .data import Dataset
from .errors import ConfigError, NumericError
from .graphs import EdgeBatch, SparseGraph
from .nets import (
    GatParams,
    GcnParams,
    MlpParams,
    beliefs_with_observed,
    gat_forward,
    gcn_forward,
    glorot_init,
    mlp_forward,
)
from .sparse import CsrMatrix

LSM_LATENT_DIM = 8


class LsmEdgeModel:
    """Logistic edge probability from transformed features and class labels.

    The logit for pair (i,j) with classes (a,b) is the inner product of the
    concatenation [map(x_i); onehot(a); map(x_j); onehot(b)] with a learned
    weight vector, plus a scalar bias. It decomposes as
        c_ij + label_self[a] + label_other[b],
    which is how it is evaluated. Pairs are scored once in canonical (u<v)
    order; `symmetrize` averages the log-likelihood of both orders instead.
    """

    def __init__(self, num_features: int, num_classes: int, rng: np.random.Generator,
                 symmetrize: bool = False):
        self.num_classes = num_classes
        self.symmetrize = symmetrize
        k = num_classes
        self.feature_map = Parameter(
            glorot_init((LSM_LATENT_DIM, num_features), rng), "lsm.feature_map"
        )
        self.pair_weights = Parameter(
            glorot_init((2 * (LSM_LATENT_DIM + k), 1), rng), "lsm.pair_weights"
        )
        self.bias = Parameter(np.zeros((1, 1)), "lsm.bias")
        d8, dk = LSM_LATENT_DIM, k
        self._slices = {
            "feat_self": np.arange(0, d8),
            "label_self": np.arange(d8, d8 + dk),
            "feat_other": np.arange(d8 + dk, 2 * d8 + dk),
            "label_other": np.arange(2 * d8 + dk, 2 * d8 + 2 * dk),
        }

    def parameters(self) -> list[Parameter]:
        return [self.feature_map, self.pair_weights, self.bias]

    def logit_context(self, x: Tensor) -> Tensor:
        """Per-node transformed features (n x latent), shared by all pairs."""
        return ad.matmul(x, ad.transpose(self.feature_map))

    def _label_table(self, first_slot: str, second_slot: str) -> Tensor:
        k = self.num_classes
        w_first = ad.transpose(ad.gather_rows(self.pair_weights, self._slices[first_slot]))
        w_second = ad.transpose(ad.gather_rows(self.pair_weights, self._slices[second_slot]))
        ones = ad.constant(np.ones((1, k)))
        return ad.add(ad.row_outer(w_first, ones), ad.row_outer(ones, w_second))

    def _logits_oriented(self, ctx: Tensor, first: np.ndarray, second: np.ndarray) -> Tensor:
        wf = ad.gather_rows(self.pair_weights, self._slices["feat_self"])
        wg = ad.gather_rows(self.pair_weights, self._slices["feat_other"])
        offset = ad.add(
            ad.add(ad.matmul(ad.gather_rows(ctx, first), wf),
                   ad.matmul(ad.gather_rows(ctx, second), wg)),
            self.bias,
        )
        return ad.add(offset, self._label_table("label_self", "label_other"))

    def pair_log_tables(self, ctx: Tensor, pairs: np.ndarray, present: bool) -> Tensor:
        """(E, K*K) log-likelihood tables; entry (e, a*K+b) is
        log p(edge_e = present | class(first)=a, class(second)=b)."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        logits = self._logits_oriented(ctx, pairs[:, 0], pairs[:, 1])
        if not present:
            logits = ad.scale(logits, -1.0)
        logp = ad.logsigmoid(logits)
        if self.symmetrize:
            k = self.num_classes
            swapped = self._logits_oriented(ctx, pairs[:, 1], pairs[:, 0])
            if not present:
                swapped = ad.scale(swapped, -1.0)
            # transpose each row's K x K table so class axes line up
            perm = (np.arange(k * k).reshape(k, k).T.reshape(-1)).astype(np.int64)
            swapped_t = ad.transpose(ad.gather_rows(ad.transpose(ad.logsigmoid(swapped)), perm))
            logp = ad.scale(ad.add(logp, swapped_t), 0.5)
        return logp


def lsm_pairwise_logits(model: LsmEdgeModel, x: Tensor, i: int, j: int) -> Tensor:
    """K x K logit table for one pair; entry (a,b) follows the decomposition."""
    ctx = model.logit_context(x)
    flat = model._logits_oriented(ctx, np.array([i]), np.array([j]))
    return _reshape_row(flat, model.num_classes)


def _reshape_row(row: Tensor, k: int) -> Tensor:
    """(1, K*K) -> (K, K) without breaking the tape."""

    def backward_fn(out):
        if row.requires:
            ad._accumulate(row, out.grad.reshape(1, k * k))

    return ad._node(row.value.reshape(k, k), (row,), backward_fn)


class SbmEdgeModel:
    """Planted-partition edge probabilities: p0 within class, p1 across.

    The probabilities are fixed hyperparameters, not trained, so the K x K
    log tables are constants; gradients flow only through the beliefs.
    """

    def __init__(self, p0: float, p1: float, num_classes: int):
        if not (0.0 < p0 < 1.0 and 0.0 < p1 < 1.0):
            raise ConfigError(f"SBM probabilities must lie in (0,1), got ({p0}, {p1})")
        self.p0 = float(p0)
        self.p1 = float(p1)
        self.num_classes = num_classes
        k = num_classes
        eye = np.eye(k, dtype=bool).reshape(1, k * k)
        self._table_present = ad.constant(np.where(eye, np.log(p0), np.log(p1)))
        self._table_absent = ad.constant(np.where(eye, np.log1p(-p0), np.log1p(-p1)))

    def parameters(self) -> list[Parameter]:
        return []

    def logit_context(self, x: Tensor) -> Tensor:
        return x  # unused; labels alone decide the probability

    def pair_log_tables(self, ctx: Tensor, pairs: np.ndarray, present: bool) -> Tensor:
        return self._table_present if present else self._table_absent


def sbm_edge_logprob(model: SbmEdgeModel, same_class: bool, edge_present: bool) -> float:
    p = model.p0 if same_class else model.p1
    return float(np.log(p) if edge_present else np.log1p(-p))


# ---------------------------------------------------------------------------
# expectation and loss terms
# ---------------------------------------------------------------------------


def expected_edge_loglik(head, x: Tensor, pair, beliefs: Tensor, edge_present: bool) -> Tensor:
    """Exact E_{a~r_i, b~r_j}[log p(e_ij = edge_present | a, b)] as a scalar."""
    i, j = int(pair[0]), int(pair[1])
    ctx = head.logit_context(x)
    tables = head.pair_log_tables(ctx, np.array([[i, j]]), edge_present)
    weights = ad.row_outer(
        ad.gather_rows(beliefs, np.array([i])), ad.gather_rows(beliefs, np.array([j]))
    )
    return ad.sum_all(ad.mul(weights, tables))


def _batch_expected_loglik(head, ctx, pairs: np.ndarray, beliefs: Tensor, present: bool) -> Tensor:
    if pairs.shape[0] == 0:
        return ad.constant(0.0)
    tables = head.pair_log_tables(ctx, pairs, present)
    weights = ad.row_outer(
        ad.gather_rows(beliefs, pairs[:, 0]), ad.gather_rows(beliefs, pairs[:, 1])
    )
    return ad.sum_all(ad.mul(weights, tables))


def graph_loglik_term(head, x: Tensor, batch: EdgeBatch, beliefs: Tensor) -> Tensor:
    """Expected graph log-likelihood over the batch: positive pairs scored as
    present, sampled negatives as absent, no rescaling of either side."""
    ctx = head.logit_context(x)
    pos = _batch_expected_loglik(head, ctx, batch.positives, beliefs, True)
    neg = _batch_expected_loglik(head, ctx, batch.negatives, beliefs, False)
    return ad.add(pos, neg)


def kl_term(logq: Tensor, logp_prior: Tensor, miss_mask: np.ndarray) -> Tensor:
    """Sum over unobserved nodes of KL(q_i || prior_i), both in log space."""
    idx = np.flatnonzero(miss_mask)
    if idx.size == 0:
        return ad.constant(0.0)
    lq = ad.gather_rows(logq, idx)
    lp = ad.gather_rows(logp_prior, idx)
    return ad.sum_all(ad.mul(ad.exp(lq), ad.sub(lq, lp)))


def _observed_nll(logp: Tensor, ds: Dataset) -> Tensor:
    idx = np.flatnonzero(ds.observed_mask)
    if idx.size == 0:
        return ad.constant(0.0)
    return ad.scale(ad.sum_all(ad.pick_entries(logp, idx, ds.labels[idx])), -1.0)


def observed_prior_term(logp_prior: Tensor, ds: Dataset) -> Tensor:
    """Negative prior log-likelihood of the observed labels."""
    return _observed_nll(logp_prior, ds)


def supervised_term(logq: Tensor, ds: Dataset) -> Tensor:
    """Negative posterior log-likelihood of the observed labels."""
    return _observed_nll(logq, ds)


@dataclass
class LossBreakdown:
    recon: float
    kl: float
    label_prior: float
    supervised: float
    total: float
    node: Tensor = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {
            "recon": self.recon,
            "kl": self.kl,
            "label_prior": self.label_prior,
            "supervised": self.supervised,
            "total": self.total,
        }


# ---------------------------------------------------------------------------
# model bundle
# ---------------------------------------------------------------------------


@dataclass
class ModelBundle:
    """Everything one fit owns: posterior net (phi), prior net and edge head
    (theta), plus the dataset-derived constants the forwards need."""

    posterior_kind: str  # mlp | gcn | gat
    posterior: MlpParams | GcnParams | GatParams
    prior: MlpParams | None
    head: LsmEdgeModel | SbmEdgeModel | None
    x: Tensor
    graph: SparseGraph
    adj: CsrMatrix | None = None

    def posterior_logp(self, training: bool = False, rng=None) -> Tensor:
        if self.posterior_kind == "mlp":
            return mlp_forward(self.posterior, self.x, training, rng)
        if self.posterior_kind == "gcn":
            return gcn_forward(self.posterior, self.adj, self.x, training, rng)
        if self.posterior_kind == "gat":
            return gat_forward(self.posterior, self.graph, self.x, training, rng)
        raise ConfigError(f"unknown posterior kind {self.posterior_kind!r}")

    def prior_logp(self, training: bool = False, rng=None) -> Tensor:
        return mlp_forward(self.prior, self.x, training, rng)

    @property
    def generative(self) -> bool:
        return self.head is not None

    def parameters(self) -> list[Parameter]:
        ps = list(self.posterior.parameters())
        if self.prior is not None:
            ps.extend(self.prior.parameters())
        if self.head is not None:
            ps.extend(self.head.parameters())
        return ps


def loss_terms(logq: Tensor, logp_prior: Tensor, head, x: Tensor, ds: Dataset,
               batch: EdgeBatch) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """The four loss components from explicit posterior/prior log-probabilities.

    Exposed separately from total_loss so oracle beliefs can be plugged in as
    constant tensors.
    """
    beliefs = beliefs_with_observed(logq, ds)
    recon = ad.scale(graph_loglik_term(head, x, batch, beliefs), -1.0)
    kl = kl_term(logq, logp_prior, ~ds.observed_mask)
    label_prior = observed_prior_term(logp_prior, ds)
    supervised = supervised_term(logq, ds)
    return recon, kl, label_prior, supervised


def total_loss(bundle: ModelBundle, ds: Dataset, batch: EdgeBatch, eta: float,
               training: bool = False, rng=None) -> LossBreakdown:
    """Negative ELBO plus eta-weighted supervised loss, with components."""
    if eta < 0:
        raise ConfigError(f"eta must be non-negative, got {eta}")
    if not bundle.generative or bundle.prior is None:
        raise ConfigError("total_loss needs a generative bundle (edge head + prior)")
    logq = bundle.posterior_logp(training, rng)
    logp_prior = bundle.prior_logp(training, rng)
    recon, kl, label_prior, supervised = loss_terms(logq, logp_prior, bundle.head, bundle.x, ds, batch)
    total = ad.add(ad.add(recon, kl), ad.add(label_prior, ad.scale(supervised, eta)))
    breakdown = LossBreakdown(
        recon=recon.item(),
        kl=kl.item(),
        label_prior=label_prior.item(),
        supervised=supervised.item(),
        total=total.item(),
        node=total,
    )
    if not np.isfinite(breakdown.total):
        raise NumericError(f"non-finite loss: {breakdown.as_dict()}")
    return breakdown
