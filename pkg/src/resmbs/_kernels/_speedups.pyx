# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: the per-document variational E-step and the
penalized-logistic coordinate-descent sweep.

Call signatures and semantics mirror ``resmbs._kernels._pure``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log
from scipy.special.cython_special cimport psi as c_psi

cnp.import_array()

IMPLEMENTATION = "compiled"


cdef inline double _sigmoid(double z) nogil:
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    cdef double e = exp(z)
    return e / (1.0 + e)


def lda_estep(cnp.int32_t[::1] ids, double[::1] cts, cnp.int64_t[::1] offsets,
              double[:, ::1] beta, double alpha, double[:, ::1] gamma,
              int max_inner, double tol):
    """See ``resmbs._kernels._pure.lda_estep``."""
    cdef Py_ssize_t n_docs = offsets.shape[0] - 1
    cdef Py_ssize_t K = beta.shape[0]
    cdef Py_ssize_t W = beta.shape[1]
    sstats_arr = np.zeros((K, W))
    cdef double[:, ::1] sstats = sstats_arr
    cdef double[::1] ee = np.empty(K)
    cdef double[::1] gnew = np.empty(K)
    cdef Py_ssize_t d, k, i, it
    cdef cnp.int64_t lo, hi
    cdef cnp.int32_t w
    cdef double gsum, psisum, phinorm, contrib, change, acc

    for d in range(n_docs):
        lo = offsets[d]
        hi = offsets[d + 1]
        gsum = 0.0
        for k in range(K):
            gsum += gamma[d, k]
        psisum = c_psi(gsum)
        for k in range(K):
            ee[k] = exp(c_psi(gamma[d, k]) - psisum)
        for it in range(max_inner):
            change = 0.0
            # accumulate the gamma update token-by-token (no K*nnz buffer)
            for k in range(K):
                gnew[k] = alpha
            for i in range(lo, hi):
                w = ids[i]
                phinorm = 1e-100
                for k in range(K):
                    phinorm += ee[k] * beta[k, w]
                contrib = cts[i] / phinorm
                for k in range(K):
                    gnew[k] += ee[k] * beta[k, w] * contrib
            gsum = 0.0
            for k in range(K):
                change += fabs(gnew[k] - gamma[d, k])
                gamma[d, k] = gnew[k]
                gsum += gnew[k]
            psisum = c_psi(gsum)
            for k in range(K):
                ee[k] = exp(c_psi(gamma[d, k]) - psisum)
            if change / K < tol:
                break
        for i in range(lo, hi):
            w = ids[i]
            phinorm = 1e-100
            for k in range(K):
                phinorm += ee[k] * beta[k, w]
            contrib = cts[i] / phinorm
            for k in range(K):
                sstats[k, w] += ee[k] * beta[k, w] * contrib
    return sstats_arr


def logistic_cd(double[:, ::1] X, double[::1] y, double[::1] beta,
                double intercept, double lam, double[::1] curv,
                cnp.uint8_t[::1] active, int max_sweeps, double tol):
    """See ``resmbs._kernels._pure.logistic_cd``."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef double[::1] z = np.empty(n)
    cdef double[::1] r = np.empty(n)
    cdef Py_ssize_t i, j, sweeps
    cdef double acc, g, c, u, bj, step, d0, max_step, absu

    for i in range(n):
        acc = intercept
        for j in range(p):
            if beta[j] != 0.0:
                acc += X[i, j] * beta[j]
        z[i] = acc
        r[i] = _sigmoid(acc) - y[i]

    sweeps = 0
    max_step = 1e308
    while sweeps < max_sweeps:
        sweeps += 1
        max_step = 0.0
        acc = 0.0
        for i in range(n):
            acc += r[i]
        d0 = -(acc / n) / 0.25
        if d0 != 0.0:
            intercept += d0
            for i in range(n):
                z[i] += d0
                r[i] = _sigmoid(z[i]) - y[i]
            max_step = fabs(d0)
        for j in range(p):
            if not active[j]:
                continue
            g = 0.0
            for i in range(n):
                g += X[i, j] * r[i]
            g /= n
            c = curv[j]
            u = beta[j] - g / c
            absu = fabs(u) - lam / c
            if absu > 0.0:
                bj = absu if u > 0.0 else -absu
            else:
                bj = 0.0
            step = bj - beta[j]
            if step != 0.0:
                beta[j] = bj
                for i in range(n):
                    z[i] += step * X[i, j]
                    r[i] = _sigmoid(z[i]) - y[i]
                if fabs(step) > max_step:
                    max_step = fabs(step)
        if max_step < tol:
            break
    return intercept, sweeps, max_step
