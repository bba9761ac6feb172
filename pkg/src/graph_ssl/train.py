"""Adam optimization, the training loop with early stopping, and grid search."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .data import Dataset
from .errors import ConfigError, NumericError
from .graphs import EdgeBatch, gcn_normalize, negative_sample_edges
from .nets import GAT_HEADS, GatParams, GcnParams, MlpParams
from .objective import LsmEdgeModel, ModelBundle, SbmEdgeModel, total_loss

MODEL_KINDS = ("mlp", "gcn", "gat", "lsm_gcn", "lsm_gat", "sbm_gcn", "sbm_gat")
HIDDEN_GRID = (16, 32, 64)
LR_GRID = (0.001, 0.005, 0.01)
ETA_GRID = (0.5, 1.0, 10.0)
SBM_PROB_GRID = ((0.9, 0.1), (0.5, 0.6))
GAT_UNIT_MODES = ("total", "per_head")


@dataclass(frozen=True)
class TrainConfig:
    model: str = "gcn"
    hidden: int = 16
    lr: float = 0.01
    eta: float = 1.0
    p0: float = 0.9
    p1: float = 0.1
    dropout: float | None = None  # None -> the net's published default
    weight_decay: float = 5e-4
    max_epochs: int = 1000
    patience: int = 100
    seed: int = 0
    gat_units: str = "total"  # interpret `hidden` as total or per-head units
    lsm_symmetrize: bool = False

    @property
    def head_kind(self) -> str | None:
        return self.model.split("_")[0] if "_" in self.model else None

    @property
    def posterior_kind(self) -> str:
        return self.model.split("_")[-1]

    @property
    def generative(self) -> bool:
        return self.head_kind is not None


class Adam:
    """Bias-corrected Adam over a fixed parameter list.

    Per-parameter L2 weight decay is added to the gradient before the moment
    updates. Moment accumulators mirror parameter shapes.
    """

    def __init__(self, params: list[Parameter], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]


def adam_step(state: Adam, gradients: dict | None = None) -> None:
    """One update over all parameters; reads p.grad unless a table is given."""
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for i, p in enumerate(state.params):
        g = gradients[p] if gradients is not None else p.grad
        if g is None:
            g = np.zeros_like(p.value)
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for parameter {p.name!r}")
        if p.weight_decay:
            g = g + p.weight_decay * p.value
        state._m[i] = state.beta1 * state._m[i] + (1.0 - state.beta1) * g
        state._v[i] = state.beta2 * state._v[i] + (1.0 - state.beta2) * g * g
        m_hat = state._m[i] / bc1
        v_hat = state._v[i] / bc2
        p.value -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class EarlyStopState:
    patience: int
    best_metric: float = np.inf
    best_epoch: int = -1
    epochs_since_improvement: int = 0
    snapshot: list[np.ndarray] | None = None

    def update(self, metric: float, epoch: int, params: list[Parameter]) -> bool:
        """Record the epoch; returns True when training should stop."""
        if metric < self.best_metric:
            self.best_metric = metric
            self.best_epoch = epoch
            self.epochs_since_improvement = 0
            self.snapshot = [p.value.copy() for p in params]
            return False
        self.epochs_since_improvement += 1
        return self.epochs_since_improvement > self.patience

    def restore(self, params: list[Parameter]) -> None:
        if self.snapshot is not None:
            for p, v in zip(params, self.snapshot):
                p.value = v.copy()


def build_model(config: TrainConfig, ds: Dataset, rng: np.random.Generator) -> ModelBundle:
    """Instantiate parameters and dataset-derived constants for one fit."""
    d, k = ds.num_features, ds.num_classes
    kind = config.posterior_kind
    x = ad.constant(ds.features)
    adj = None
    if kind == "mlp":
        drop = 0.5 if config.dropout is None else config.dropout
        posterior = MlpParams.init(d, config.hidden, k, rng, prefix="q_mlp",
                                   weight_decay=config.weight_decay, dropout=drop)
    elif kind == "gcn":
        drop = 0.5 if config.dropout is None else config.dropout
        posterior = GcnParams.init(d, config.hidden, k, rng, prefix="q_gcn",
                                   weight_decay=config.weight_decay, dropout=drop)
        adj = gcn_normalize(ds.graph)
    elif kind == "gat":
        drop = 0.6 if config.dropout is None else config.dropout
        if config.gat_units == "per_head":
            per_head = config.hidden
        elif config.gat_units == "total":
            per_head = max(1, config.hidden // GAT_HEADS)
        else:
            raise ConfigError(f"gat_units must be total|per_head, got {config.gat_units!r}")
        posterior = GatParams.init(d, per_head, k, rng, prefix="q_gat",
                                   weight_decay=config.weight_decay, dropout=drop)
    else:
        raise ConfigError(f"unknown posterior kind {kind!r}")

    prior = None
    head = None
    if config.generative:
        prior_drop = 0.5 if config.dropout is None else config.dropout
        prior = MlpParams.init(d, config.hidden, k, rng, prefix="prior_mlp",
                               weight_decay=config.weight_decay, dropout=prior_drop)
        if config.head_kind == "lsm":
            head = LsmEdgeModel(d, k, rng, symmetrize=config.lsm_symmetrize)
        elif config.head_kind == "sbm":
            head = SbmEdgeModel(config.p0, config.p1, k)
        else:
            raise ConfigError(f"unknown edge head {config.head_kind!r}")

    return ModelBundle(posterior_kind=kind, posterior=posterior, prior=prior,
                       head=head, x=x, graph=ds.graph, adj=adj)


def _masked_ce(logp: np.ndarray, ds: Dataset, mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    return float(-logp[idx, ds.labels[idx]].mean())


def _supervised_ce_node(logq: Tensor, ds: Dataset) -> Tensor:
    """Mean train cross-entropy as a differentiable scalar (baseline loss)."""
    idx = np.flatnonzero(ds.train_mask)
    picked = ad.pick_entries(logq, idx, ds.labels[idx])
    return ad.scale(ad.sum_all(picked), -1.0 / idx.size)


@dataclass
class FitResult:
    config: TrainConfig
    bundle: ModelBundle
    log: list[dict]
    best_epoch: int
    best_val_ce: float
    val_accuracy: float
    test_accuracy: float
    wall_time: float

    def predictions(self) -> np.ndarray:
        """Posterior class probabilities (n x K) at the restored parameters."""
        return np.exp(self.bundle.posterior_logp(training=False).value)


def _epoch_rng(seed: int, epoch: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, epoch, stream)))


def fit(config: TrainConfig, ds: Dataset) -> FitResult:
    """Train one model on one dataset.

    Generative models minimize the negative ELBO plus the eta-weighted
    supervised loss, resampling negative edges every epoch from a seed
    derived from (trial seed, epoch). Baselines minimize the mean supervised
    cross-entropy. Early stopping watches the validation cross-entropy of the
    posterior in eval mode and restores the best snapshot.
    """
    t_start = time.perf_counter()
    init_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0xA11)))
    bundle = build_model(config, ds, init_rng)
    params = bundle.parameters()
    adam = Adam(params, lr=config.lr)
    stopper = EarlyStopState(patience=config.patience)
    n_edges = ds.graph.num_edges
    max_negatives = ds.n * (ds.n - 1) // 2 - n_edges
    log: list[dict] = []

    for epoch in range(config.max_epochs):
        drop_rng = _epoch_rng(config.seed, epoch, 0xD0)
        if bundle.generative:
            neg = negative_sample_edges(
                ds.graph, min(n_edges, max_negatives), _epoch_rng(config.seed, epoch, 0x7E6)
            )
            batch = EdgeBatch(positives=ds.graph.edges, negatives=neg, seed=epoch)
            breakdown = total_loss(bundle, ds, batch, config.eta, training=True, rng=drop_rng)
            loss_node = breakdown.node
            entry = breakdown.as_dict()
        else:
            logq = bundle.posterior_logp(training=True, rng=drop_rng)
            loss_node = _supervised_ce_node(logq, ds)
            entry = {"recon": 0.0, "kl": 0.0, "label_prior": 0.0,
                     "supervised": loss_node.item(), "total": loss_node.item()}
        ad.backward(loss_node, params)
        try:
            adam_step(adam)
        except NumericError as e:
            raise NumericError(f"epoch {epoch}: {e}; components {entry}") from None

        eval_logp = bundle.posterior_logp(training=False).value
        val_ce = _masked_ce(eval_logp, ds, ds.val_mask)
        entry.update(epoch=epoch, val_ce=val_ce,
                     val_acc=_masked_accuracy(eval_logp, ds, ds.val_mask))
        log.append(entry)
        if stopper.update(val_ce, epoch, params):
            break

    stopper.restore(params)
    final_logp = bundle.posterior_logp(training=False).value
    return FitResult(
        config=config,
        bundle=bundle,
        log=log,
        best_epoch=stopper.best_epoch,
        best_val_ce=stopper.best_metric,
        val_accuracy=_masked_accuracy(final_logp, ds, ds.val_mask),
        test_accuracy=_masked_accuracy(final_logp, ds, ds.test_mask),
        wall_time=time.perf_counter() - t_start,
    )


def _masked_accuracy(logp: np.ndarray, ds: Dataset, mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    return float((logp[idx].argmax(axis=1) == ds.labels[idx]).mean())


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Search space around a base config; defaults follow the standard grids."""

    base: TrainConfig
    hidden_values: tuple = HIDDEN_GRID
    lr_values: tuple = LR_GRID
    eta_values: tuple = ETA_GRID
    sbm_prob_values: tuple = SBM_PROB_GRID
    gat_unit_values: tuple = GAT_UNIT_MODES

    def cells(self) -> list[TrainConfig]:
        """Deterministic lexicographic enumeration of the applicable grid."""
        base = self.base
        etas = self.eta_values if base.generative else (base.eta,)
        probs = self.sbm_prob_values if base.head_kind == "sbm" else ((base.p0, base.p1),)
        unit_modes = self.gat_unit_values if base.posterior_kind == "gat" else (base.gat_units,)
        out = []
        for hidden in self.hidden_values:
            for lr in self.lr_values:
                for eta in etas:
                    for p0, p1 in probs:
                        for units in unit_modes:
                            out.append(replace(base, hidden=hidden, lr=lr, eta=eta,
                                               p0=p0, p1=p1, gat_units=units))
        return out


@dataclass
class GridResult:
    best: TrainConfig
    best_mean_val_acc: float
    report: list[dict]  # one row per (cell, trial)


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(parts)).generate_state(1)[0])


def grid_search(spec: GridSpec, ds: Dataset, trials_per_cell: int = 1,
                base_seed: int = 0) -> GridResult:
    """Exhaustive search; best cell by mean validation accuracy, ties broken
    by enumeration order. The report keeps every (cell, trial) outcome."""
    cells = spec.cells()
    if not cells:
        raise ConfigError("empty grid")
    report = []
    best_idx, best_mean = 0, -np.inf
    for ci, cell in enumerate(cells):
        accs = []
        for t in range(trials_per_cell):
            res = fit(replace(cell, seed=_derived_seed(base_seed, ci, t)), ds)
            accs.append(res.val_accuracy)
            report.append({
                "cell": ci, "trial": t, "model": cell.model, "hidden": cell.hidden,
                "lr": cell.lr, "eta": cell.eta, "p0": cell.p0, "p1": cell.p1,
                "gat_units": cell.gat_units, "val_acc": res.val_accuracy,
                "test_acc": res.test_accuracy, "best_epoch": res.best_epoch,
            })
        mean = float(np.mean(accs))
        if mean > best_mean:
            best_mean, best_idx = mean, ci
    return GridResult(best=cells[best_idx], best_mean_val_acc=best_mean, report=report)
