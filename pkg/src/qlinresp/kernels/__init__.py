"""Hot-kernel backend selection.

The numba backend is used when numba imports cleanly; set
``QLINRESP_DISABLE_NUMBA=1`` in the environment to force the pure-numpy
fallback.  Both backends implement the same three kernels
(``one_body_triplets``, ``pair_popcount``, ``fejer_accumulate``) and are
cross-checked in the test suite; ``benchmarks/bench_kernels.py`` compares
their throughput.
"""

from __future__ import annotations

import os

from . import _numpy

_DISABLED = os.environ.get("QLINRESP_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on",
)

if not _DISABLED:
    try:
        from . import _numba as _impl
    except ImportError:  # pragma: no cover - numba missing in the env
        _impl = _numpy
else:
    _impl = _numpy

one_body_triplets = _impl.one_body_triplets
pair_popcount = _impl.pair_popcount
fejer_accumulate = _impl.fejer_accumulate


def active_backend() -> str:
    """Name of the backend selected at import time ('numba' or 'numpy')."""
    return _impl.BACKEND
