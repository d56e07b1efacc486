"""Metric-trace kernels: compiled when available, pure numpy otherwise.

Set ``JASS_PURE_PYTHON=1`` to force the numpy implementation. The exact-EVD
trace always uses the numpy path (see ``benchmarks/bench_kernels.py``).
"""

import os

from . import _kernels_py

IMPLEMENTATION = "python"
_impl = _kernels_py
if not os.environ.get("JASS_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        IMPLEMENTATION = "compiled"
    except ImportError:
        _impl = _kernels_py

trace_unnormalized = _impl.trace_unnormalized
trace_unmitigated = _impl.trace_unmitigated
trace_jass = _impl.trace_jass
# batched LAPACK eigh in the numpy path outruns a per-window Jacobi here
trace_jass_evd = _kernels_py.trace_jass_evd
trace_bajass = _impl.trace_bajass

__all__ = [
    "IMPLEMENTATION",
    "trace_unnormalized",
    "trace_unmitigated",
    "trace_jass",
    "trace_jass_evd",
    "trace_bajass",
]
