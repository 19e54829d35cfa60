"""NumPy fallbacks for the compiled kernels.

Same call signatures and semantics as ``resmbs._kernels._speedups``.
Outputs agree with the compiled versions to floating-point tolerance but are
not guaranteed bitwise-identical to them (each implementation is individually
deterministic).
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, psi

IMPLEMENTATION = "pure"


def _dirichlet_expectation(gamma):
    return psi(gamma) - psi(gamma.sum(axis=-1, keepdims=True))


def lda_estep(ids, cts, offsets, beta, alpha, gamma, max_inner, tol):
    """Batch variational E-step over a ragged block of documents.

    Document ``d`` owns tokens ``ids[offsets[d]:offsets[d+1]]`` with counts
    ``cts[...]``. ``beta`` is the (K, W) row-stochastic topic-token matrix and
    ``gamma`` the (D, K) variational Dirichlet parameters, updated in place
    (warm starts keep the full EM objective monotone). Returns the (K, W)
    expected token-count statistics at the per-document fixed points.
    """
    n_docs = len(offsets) - 1
    sstats = np.zeros_like(beta)
    exp_elog_theta = np.exp(_dirichlet_expectation(gamma))
    for d in range(n_docs):
        lo, hi = offsets[d], offsets[d + 1]
        ids_d = ids[lo:hi]
        cts_d = cts[lo:hi]
        beta_d = beta[:, ids_d]
        g = gamma[d]
        ee = exp_elog_theta[d]
        phinorm = ee @ beta_d + 1e-100
        for _ in range(max_inner):
            last = g
            g = alpha + ee * ((cts_d / phinorm) @ beta_d.T)
            ee = np.exp(_dirichlet_expectation(g))
            phinorm = ee @ beta_d + 1e-100
            if np.mean(np.abs(g - last)) < tol:
                break
        gamma[d] = g
        sstats[:, ids_d] += np.outer(ee, cts_d / phinorm)
    # phi_{wk} = ee_k * beta_kw / phinorm_w; the beta factor enters once here.
    sstats *= beta
    return sstats


def logistic_cd(X, y, beta, intercept, lam, curv, active, max_sweeps, tol):
    """Cyclic majorize-minimize coordinate descent for L1 logistic regression.

    Objective: mean Bernoulli negative log-likelihood + lam * ||beta||_1 with
    an unpenalized intercept. ``curv[j]`` must upper-bound the coordinate
    curvature (sum(X[:,j]**2) / (4n)); the intercept uses the 1/4 bound. Each
    coordinate update minimizes a quadratic majorizer, so the penalized
    objective never increases within or across sweeps.

    ``beta`` is updated in place; only columns with ``active[j]`` true are
    swept. Returns (intercept, sweeps_done, last_max_step).
    """
    n = X.shape[0]
    z = X @ beta + intercept
    p = expit(z)
    r = p - y
    cols = np.flatnonzero(active)
    sweeps = 0
    max_step = np.inf
    for _ in range(max_sweeps):
        sweeps += 1
        max_step = 0.0
        d0 = -r.mean() / 0.25
        if d0 != 0.0:
            intercept += d0
            z += d0
            p = expit(z)
            r = p - y
            max_step = abs(d0)
        for j in cols:
            xj = X[:, j]
            g = (xj @ r) / n
            c = curv[j]
            u = beta[j] - g / c
            bj = np.sign(u) * max(abs(u) - lam / c, 0.0)
            step = bj - beta[j]
            if step != 0.0:
                beta[j] = bj
                z += step * xj
                p = expit(z)
                r = p - y
                max_step = max(max_step, abs(step))
        if max_step < tol:
            break
    return intercept, sweeps, max_step
