"""Backend selection for the hot numeric kernels.

The environment variable GRAPH_SSL_BACKEND picks the implementation:

    auto   (default) numba if importable, else pure numpy
    numba  require the numba JIT backend
    numpy  force the pure-numpy fallback

Both backends compute bit-identical results for the same inputs up to
floating-point summation order; tests compare them directly.
"""

import os

from . import numpy_backend

_choice = os.environ.get("GRAPH_SSL_BACKEND", "auto").lower()

if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"GRAPH_SSL_BACKEND must be auto|numba|numpy, got {_choice!r}")

if _choice == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl

        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        _impl = numpy_backend
        BACKEND = "numpy"

csr_matmul = _impl.csr_matmul
scatter_add_rows = _impl.scatter_add_rows
segment_sum = _impl.segment_sum
segment_max = _impl.segment_max


def active_backend() -> str:
    """Name of the kernel backend in use ('numba' or 'numpy')."""
    return BACKEND
