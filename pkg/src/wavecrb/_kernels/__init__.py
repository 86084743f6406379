"""Backend selection for the batched bound kernel.

The Monte Carlo hot loop is one Hermitian eigendecomposition per draw. The
compiled extension (Cython + LAPACK + OpenMP) handles it when available;
otherwise the NumPy reference path is used. Both produce identical results
up to the LAPACK build; set WAVECRB_BACKEND=python to force the reference
path, WAVECRB_BACKEND=ext to require the extension.
"""
import os

from . import pyref

try:
    from . import _speig

    HAVE_EXT = True
except ImportError:  # pragma: no cover - depends on the build environment
    _speig = None
    HAVE_EXT = False

_choice = os.environ.get("WAVECRB_BACKEND", "auto").lower()
if _choice == "ext" and not HAVE_EXT:
    raise ImportError("WAVECRB_BACKEND=ext but the compiled kernel is unavailable")
_USE_EXT = HAVE_EXT and _choice != "python"

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None


def backend_name() -> str:
    return "ext" if _USE_EXT else "python"


def eig_crb_batch(jstack, sel, rcond_min, threads=None):
    """Dispatch to the active backend.

    When the compiled kernel runs with its own OpenMP threads, BLAS thread
    pools are pinned to one thread for the duration of the call so nested
    parallelism cannot perturb or slow the per-matrix LAPACK work.
    """
    if _USE_EXT:
        if threadpool_limits is not None:
            with threadpool_limits(limits=1, user_api="blas"):
                return _speig.eig_crb_batch(jstack, sel, rcond_min, threads)
        return _speig.eig_crb_batch(jstack, sel, rcond_min, threads)
    return pyref.eig_crb_batch(jstack, sel, rcond_min, threads)
