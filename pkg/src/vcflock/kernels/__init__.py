"""Hot-kernel dispatch.

The numba backend is the default; set VCFLOCK_NUMBA=0 to force the
pure-numpy path (also used automatically when numba is not importable).
Both backends implement the same arithmetic; benchmarks/bench_kernels.py
compares them.
"""

from __future__ import annotations

import os


def _numba_requested() -> bool:
    return os.environ.get("VCFLOCK_NUMBA", "1").strip().lower() not in (
        "0", "false", "off", "no",
    )


BACKEND = "numpy"
if _numba_requested():
    try:
        from . import _numba_impl as _impl
        BACKEND = "numba"
    except ImportError:
        from . import _numpy_impl as _impl
else:
    from . import _numpy_impl as _impl

lagged_step = _impl.lagged_step
pairwise_distances = _impl.pairwise_distances
min_pairwise_distance = _impl.min_pairwise_distance
trace_metrics = _impl.trace_metrics


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs so timed runs stay honest."""
    import numpy as np

    pos = np.zeros((2, 3))
    yaw = np.zeros(2)
    lagged_step(pos, yaw, pos + 1.0, yaw, 1.0, 1.0, 0.01)
    pairwise_distances(pos)
    min_pairwise_distance(pos)
    trace_metrics(
        np.zeros((2, 2, 3)), np.zeros((2, 2, 3)), np.zeros((2, 2, 3)),
        np.ones((2, 2), dtype=np.bool_), np.zeros((2, 3)), np.zeros((2, 3)),
        np.zeros(2),
    )


__all__ = [
    "BACKEND",
    "lagged_step",
    "pairwise_distances",
    "min_pairwise_distance",
    "trace_metrics",
    "warmup",
]
