"""Shared test utilities: oracles (finite differences, exhaustive likelihoods)
and tiny fixtures. Everything here recomputes from first principles and never
calls the library code paths it is used to check."""

import itertools

import numpy as np

from graph_ssl.data import Dataset
from graph_ssl.graphs import SparseGraph


def finite_diff_grad(f, param, h=1e-5):
    """Central finite differences of scalar f() w.r.t. every entry of param.

    f must rebuild its forward pass on each call and return a float.
    """
    base = param.value.copy()
    grad = np.zeros_like(base)
    it = np.nditer(base, flags=["multi_index"])
    for _ in it:
        ij = it.multi_index
        param.value = base.copy()
        param.value[ij] = base[ij] + h
        up = f()
        param.value[ij] = base[ij] - h
        down = f()
        grad[ij] = (up - down) / (2.0 * h)
    param.value = base
    return grad


def max_rel_err(got, want):
    """Elementwise |got-want| / max(|got|,|want|,1), reduced to the max."""
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(got), np.abs(want)), 1.0)
    return float((np.abs(got - want) / denom).max()) if got.size else 0.0


def toy_dataset(n=6, k=2, d=3, seed=0, edge_prob=0.5, n_observed=None):
    """Small random dataset: every node labeled, first rows observed/train."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                pairs.append((i, j))
    graph = SparseGraph.from_pairs(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
    labels = rng.integers(0, k, size=n).astype(np.int64)
    n_observed = n // 2 if n_observed is None else n_observed
    observed = np.zeros(n, dtype=bool)
    observed[:n_observed] = True
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    rest = np.arange(n_observed, n)
    val[rest[: len(rest) // 2]] = True
    test[rest[len(rest) // 2 :]] = True
    return Dataset(
        features=rng.normal(size=(n, d)),
        labels=labels,
        num_classes=k,
        graph=graph,
        observed_mask=observed,
        train_mask=observed.copy(),
        val_mask=val,
        test_mask=test,
    )


# ---------------------------------------------------------------------------
# independent edge-likelihood oracles
# ---------------------------------------------------------------------------


def naive_edge_logprob(head, features):
    """Reference p(e_ij = present | a, b) evaluator reading raw parameter values.

    For the logistic head the logit is rebuilt by explicit concatenation
    (no decomposition); stable log-sigmoid via logaddexp.
    """
    kind = type(head).__name__

    if kind == "SbmEdgeModel":
        def logprob(i, j, a, b, present):
            p = head.p0 if a == b else head.p1
            return np.log(p) if present else np.log1p(-p)

        return logprob

    u = head.feature_map.value
    w = head.pair_weights.value[:, 0]
    bias = head.bias.value[0, 0]
    k = head.num_classes
    eye = np.eye(k)

    def one_order(i, j, a, b):
        vec = np.concatenate([u @ features[i], eye[a], u @ features[j], eye[b]])
        return float(vec @ w + bias)

    def logprob(i, j, a, b, present):
        logits = [one_order(i, j, a, b)]
        if head.symmetrize:
            logits.append(one_order(j, i, b, a))
        vals = [-np.logaddexp(0.0, -l) if present else -np.logaddexp(0.0, l) for l in logits]
        return float(np.mean(vals))

    return logprob


def brute_force_graph_loglik(head, features, graph, labels):
    """log p(G | X, Y) over every pair, labels fully specified."""
    logprob = naive_edge_logprob(head, features)
    total = 0.0
    for i in range(graph.n):
        for j in range(i + 1, graph.n):
            total += logprob(i, j, labels[i], labels[j], graph.has_edge(i, j))
    return total


def _assignments(miss_idx, k):
    return itertools.product(range(k), repeat=len(miss_idx))


def brute_force_evidence(head, features, ds, prior_logp):
    """log p(Y_obs, G | X) by summing the joint over all missing-label
    assignments; prior_logp is the (n,K) log prior table."""
    miss_idx = np.flatnonzero(~ds.observed_mask)
    obs_idx = np.flatnonzero(ds.observed_mask)
    obs_term = float(prior_logp[obs_idx, ds.labels[obs_idx]].sum())
    log_terms = []
    for assign in _assignments(miss_idx, ds.num_classes):
        labels = ds.labels.copy()
        labels[miss_idx] = assign
        ll = brute_force_graph_loglik(head, features, ds.graph, labels)
        ll += float(prior_logp[miss_idx, list(assign)].sum())
        log_terms.append(ll)
    m = max(log_terms)
    return obs_term + m + np.log(np.sum(np.exp(np.array(log_terms) - m)))


def brute_force_posterior_marginals(head, features, ds, prior_logp):
    """Exact per-node posterior marginals over the missing labels."""
    miss_idx = np.flatnonzero(~ds.observed_mask)
    k = ds.num_classes
    joint = {}
    for assign in _assignments(miss_idx, k):
        labels = ds.labels.copy()
        labels[miss_idx] = assign
        ll = brute_force_graph_loglik(head, features, ds.graph, labels)
        ll += float(prior_logp[miss_idx, list(assign)].sum())
        joint[assign] = ll
    m = max(joint.values())
    weights = {a: np.exp(v - m) for a, v in joint.items()}
    z = sum(weights.values())
    marginals = np.zeros((len(miss_idx), k))
    for assign, wgt in weights.items():
        for slot, cls in enumerate(assign):
            marginals[slot, cls] += wgt / z
    return miss_idx, marginals
