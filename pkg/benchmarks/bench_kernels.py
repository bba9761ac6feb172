"""Benchmark the numba kernels against the pure-numpy fallback.

Times the scatter/segment/CSR hot loops on a Cora-sized random graph and one
full GCN and GAT train step under the active backend. Run with:

    python3 benchmarks/bench_kernels.py
    GRAPH_SSL_BACKEND=numpy python3 benchmarks/bench_kernels.py   # fallback path
"""

import time

import numpy as np

from graph_ssl.kernels import numpy_backend

try:
    from graph_ssl.kernels import numba_backend

    BACKENDS = {"numpy": numpy_backend, "numba": numba_backend}
except ImportError:
    BACKENDS = {"numpy": numpy_backend}

N_NODES = 2708
N_EDGES = 10556
HIDDEN = 64
REPEATS = 20


def bench(fn, *args):
    fn(*args)  # warm-up (includes JIT compile for numba)
    t0 = time.perf_counter()
    for _ in range(REPEATS):
        fn(*args)
    return (time.perf_counter() - t0) / REPEATS


def random_graph_arrays(rng):
    src = rng.integers(0, N_NODES, size=N_EDGES)
    dst = rng.integers(0, N_NODES, size=N_EDGES)
    order = np.lexsort((src, dst))
    src, dst = src[order], dst[order]
    indptr = np.zeros(N_NODES + 1, dtype=np.int64)
    np.add.at(indptr, dst + 1, 1)
    np.cumsum(indptr, out=indptr)
    vals = rng.random(N_EDGES)
    return indptr, src.astype(np.int64), dst.astype(np.int64), vals


def main():
    rng = np.random.default_rng(0)
    indptr, src, dst, vals = random_graph_arrays(rng)
    dense = rng.normal(size=(N_NODES, HIDDEN))
    edge_rows = rng.normal(size=(N_EDGES, HIDDEN))
    edge_vals = rng.normal(size=N_EDGES)

    print(f"{'kernel':<18}" + "".join(f"{name:>12}" for name in BACKENDS) + f"{'speedup':>10}")
    cases = [
        ("csr_matmul", lambda b: bench(b.csr_matmul, indptr, src, vals, dense)),
        ("scatter_add_rows", lambda b: bench(b.scatter_add_rows, edge_rows, dst, N_NODES)),
        ("segment_sum", lambda b: bench(b.segment_sum, edge_vals, dst, N_NODES)),
        ("segment_max", lambda b: bench(b.segment_max, edge_vals, dst, N_NODES)),
    ]
    for name, runner in cases:
        times = {backend: runner(mod) for backend, mod in BACKENDS.items()}
        row = f"{name:<18}" + "".join(f"{times[b] * 1e3:>10.3f}ms" for b in times)
        if len(times) == 2:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)

    # one end-to-end train step under the backend selected by GRAPH_SSL_BACKEND
    from graph_ssl import kernels
    from graph_ssl.data import synth_sbm_generate
    from graph_ssl.train import TrainConfig, fit

    ds = synth_sbm_generate(800, 4, 0.1, 0.01, 64, 1.0, np.random.default_rng(1))
    print(f"\nactive backend: {kernels.active_backend()} (set GRAPH_SSL_BACKEND to compare)")
    for model in ("sbm_gcn", "sbm_gat"):
        config = TrainConfig(model=model, hidden=32, lr=0.01, max_epochs=20, patience=20)
        t0 = time.perf_counter()
        fit(config, ds)
        dt = time.perf_counter() - t0
        print(f"{model}: 20 epochs on n=800 in {dt:.2f}s ({dt / 20 * 1e3:.0f}ms/epoch)")


if __name__ == "__main__":
    main()
