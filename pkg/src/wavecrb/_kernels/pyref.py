"""Pure-NumPy reference implementation of the batched bound kernel."""
import numpy as np


def eig_crb_batch(jstack, sel, rcond_min, threads=None):
    """Per-matrix eigendecomposition bound evaluation.

    For each real symmetric PSD matrix J in the (T, m, m) stack, computes
    rcond = lambda_min/lambda_max and the selected trace of the inverse
    Tr_sel(J^{-1}) = sum_k (sum_{i in sel} V[i,k]^2) / lambda_k.
    Matrices whose rcond falls below ``rcond_min`` (or with a nonpositive
    spectrum) get NaN instead of a value.

    ``threads`` is accepted for interface parity with the compiled kernel;
    the reference path runs the LAPACK batch serially.
    """
    jstack = np.ascontiguousarray(jstack, dtype=np.float64)
    sel = np.asarray(sel, dtype=np.int64)
    w, v = np.linalg.eigh(jstack)
    lmax = w[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rcond = np.where(lmax > 0, w[:, 0] / lmax, 0.0)
        weights = np.sum(v[:, sel, :] ** 2, axis=1)
        vals = np.sum(weights / w, axis=1)
    bad = (lmax <= 0) | (rcond < rcond_min)
    vals = np.where(bad, np.nan, vals)
    return vals, rcond
