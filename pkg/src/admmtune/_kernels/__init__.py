"""Iteration-kernel backend selection.

The hot solver loops exist twice: a compiled Cython extension (``ckern``)
and a NumPy fallback (``pykern``).  The backend is chosen once at import
time; set ``ADMMTUNE_KERNELS`` to ``compiled``, ``python``, or ``auto``
(default) to control it.  ``benchmarks/kernel_bench.py`` compares the two.
"""

import os

from . import pykern

_choice = os.environ.get("ADMMTUNE_KERNELS", "auto").lower()
if _choice not in ("auto", "compiled", "c", "python", "py"):
    raise ValueError(f"unrecognized ADMMTUNE_KERNELS={_choice!r}")

_impl = None
if _choice in ("auto", "compiled", "c"):
    try:
        from . import ckern as _impl
    except ImportError:
        if _choice != "auto":
            raise
        _impl = None
if _impl is None:
    _impl = pykern

BACKEND = "compiled" if _impl is not pykern else "python"

CONVERGED = pykern.CONVERGED
MAX_ITER = pykern.MAX_ITER
DIVERGED = pykern.DIVERGED
STAGNATED = pykern.STAGNATED

qp_loop = _impl.qp_loop
fast_loop = _impl.fast_loop
l2_loop = _impl.l2_loop


def backend_name():
    """Name of the active kernel backend ('compiled' or 'python')."""
    return BACKEND
