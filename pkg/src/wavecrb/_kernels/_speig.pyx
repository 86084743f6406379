# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batched bound kernel.

One LAPACK dsyevd call per matrix, parallelized over the batch with OpenMP.
Results are written to per-matrix slots, so the thread count never changes
any output value.
"""
from cython.parallel cimport prange, threadid
from libc.stdlib cimport calloc, free
from libc.math cimport NAN
from scipy.linalg.cython_lapack cimport dsyevd

import numpy as np


def eig_crb_batch(jstack, sel, double rcond_min, threads=None):
    """Same contract as the reference kernel: (values, rcond) per matrix."""
    cdef const double[:, :, ::1] js = np.ascontiguousarray(jstack, dtype=np.float64)
    cdef const long long[::1] sel_idx = np.ascontiguousarray(sel, dtype=np.int64)
    cdef Py_ssize_t t_count = js.shape[0]
    cdef int m = <int>js.shape[1]
    cdef int nsel = <int>sel_idx.shape[0]
    cdef int nthreads = int(threads) if threads else 1
    if nthreads < 1:
        nthreads = 1

    vals_arr = np.empty(t_count, dtype=np.float64)
    rcond_arr = np.empty(t_count, dtype=np.float64)
    cdef double[::1] vals = vals_arr
    cdef double[::1] rcond = rcond_arr

    cdef int lwork = 1 + 6 * m + 2 * m * m
    cdef int liwork = 3 + 5 * m
    # Per-thread scratch: matrix copy, eigenvalues, LAPACK work areas.
    cdef double *amat = <double *> calloc(<size_t>nthreads * m * m, sizeof(double))
    cdef double *wvec = <double *> calloc(<size_t>nthreads * m, sizeof(double))
    cdef double *work = <double *> calloc(<size_t>nthreads * lwork, sizeof(double))
    cdef int *iwork = <int *> calloc(<size_t>nthreads * liwork, sizeof(int))
    if amat == NULL or wvec == NULL or work == NULL or iwork == NULL:
        free(amat); free(wvec); free(work); free(iwork)
        raise MemoryError("kernel scratch allocation failed")

    cdef Py_ssize_t t
    cdef int tid, i, k, info
    cdef double lmin, lmax, rc, acc, colsum, e
    cdef double *a
    cdef double *w
    cdef char jobz = b'V'
    cdef char uplo = b'L'

    try:
        for t in prange(t_count, nogil=True, num_threads=nthreads, schedule='static'):
            tid = threadid()
            a = amat + <Py_ssize_t>tid * m * m
            w = wvec + <Py_ssize_t>tid * m
            for i in range(m * m):
                a[i] = js[t, i // m, i % m]
            info = 0
            dsyevd(&jobz, &uplo, &m, a, &m, w, work + <Py_ssize_t>tid * lwork,
                   &lwork, iwork + <Py_ssize_t>tid * liwork, &liwork, &info)
            if info != 0:
                vals[t] = NAN
                rcond[t] = 0.0
                continue
            lmin = w[0]
            lmax = w[m - 1]
            rc = lmin / lmax if lmax > 0 else 0.0
            rcond[t] = rc
            if lmax <= 0 or rc < rcond_min:
                vals[t] = NAN
                continue
            acc = 0.0
            for k in range(m):
                colsum = 0.0
                for i in range(nsel):
                    # Eigenvector k occupies column k in Fortran layout.
                    e = a[k * m + sel_idx[i]]
                    colsum = colsum + e * e
                acc = acc + colsum / w[k]
            vals[t] = acc
    finally:
        free(amat)
        free(wvec)
        free(work)
        free(iwork)
    return vals_arr, rcond_arr
