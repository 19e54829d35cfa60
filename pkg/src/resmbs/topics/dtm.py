"""Dynamic topic model over annual slices.

Topics live in natural-parameter space: for topic k the per-slice vector
``eta[t]`` follows a Gaussian random walk with variance ``chain_var``, and
``beta[t] = softmax(eta[t])``. Fitting alternates a per-slice variational
E-step with a per-topic M-step that maximizes expected token counts against
the random-walk prior. The M-step minorizes the log-normalizer with its
tangent bound, which decouples the words into independent scalar chains
solved by damped Newton steps on their tridiagonal systems (the
forward-backward smoothing pass). A tiny ``chain_var`` pins all slices to a
shared topic (the static limit); a large one lets slices follow their own
token counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._kernels import lda_estep
from ..corpus import TimeSlicedCorpus
from ..errors import EmptyCorpusError
from .common import TopicModelConfig, elbo, floor_normalize, slice_arrays
from .lda import fit_lda


@dataclass
class DtmFit:
    per_slice_topic_word: np.ndarray  # (T, K, W), each [t, k] row-stochastic
    doc_topic: np.ndarray  # (D, K) in corpus document order
    years: list[int]
    log_likelihood_trace: list[float]
    vocabulary: list[tuple[str, str]]
    doc_ids: list[str]
    config: TopicModelConfig
    gamma: np.ndarray = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.per_slice_topic_word.shape[1]

    @property
    def n_slices(self) -> int:
        return self.per_slice_topic_word.shape[0]


def fit_dtm(corpus: TimeSlicedCorpus, config: TopicModelConfig) -> DtmFit:
    slices = slice_arrays(corpus)
    if not slices:
        raise EmptyCorpusError("no slices to fit")
    T, K, W = len(slices), config.k, len(corpus.vocabulary)

    # anchor the chains at the static solution
    static = fit_lda(corpus, config)
    mu0 = np.log(static.topic_word)  # finite: rows are floored
    eta = np.repeat(mu0[None, :, :], T, axis=0)
    sigma0_sq = max(1000.0 * config.chain_var, 1.0)

    gammas = []
    pos = 0
    for _, arr in slices:
        gammas.append(static.gamma[pos : pos + arr.n_docs].copy())
        pos += arr.n_docs

    beta = _beta_from_eta(eta)
    trace: list[float] = []
    for _ in range(config.iterations):
        ss = np.empty((T, K, W))
        for t, (_, arr) in enumerate(slices):
            ss[t] = lda_estep(
                arr.ids, arr.cts, arr.offsets, beta[t], config.alpha, gammas[t],
                config.inner_iterations, config.inner_tol,
            )
        for k in range(K):
            eta[:, k, :] = _chain_smooth(
                eta[:, k, :], ss[:, k, :], config.chain_var, sigma0_sq, mu0[k]
            )
        beta = _beta_from_eta(eta)
        bound = -_prior_penalty(eta, config.chain_var, sigma0_sq, mu0)
        for t, (_, arr) in enumerate(slices):
            bound += elbo(arr, beta[t], gammas[t], config.alpha)
        trace.append(bound)
        if len(trace) >= 2:
            prev = trace[-2]
            if abs(bound - prev) / (abs(prev) + 1e-12) < config.convergence_tol:
                break

    gamma = np.vstack(gammas)
    return DtmFit(
        per_slice_topic_word=beta,
        doc_topic=gamma / gamma.sum(axis=1, keepdims=True),
        years=[year for year, _ in slices],
        log_likelihood_trace=trace,
        vocabulary=list(corpus.vocabulary),
        doc_ids=[d for _, arr in slices for d in arr.doc_ids],
        config=config,
        gamma=gamma,
    )


def _beta_from_eta(eta: np.ndarray) -> np.ndarray:
    shifted = eta - eta.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return floor_normalize(e / e.sum(axis=-1, keepdims=True))


def _prior_penalty(eta, chain_var, sigma0_sq, mu0) -> float:
    head = float(((eta[0] - mu0) ** 2).sum()) / (2 * sigma0_sq)
    if eta.shape[0] == 1:
        return head
    return head + float(((eta[1:] - eta[:-1]) ** 2).sum()) / (2 * chain_var)


def _chain_prior_grad(eta, chain_var, sigma0_sq, mu0) -> np.ndarray:
    T = eta.shape[0]
    g = np.zeros_like(eta)
    g[0] = (eta[0] - mu0) / sigma0_sq
    if T > 1:
        diffs = (eta[1:] - eta[:-1]) / chain_var
        g[1:] += diffs
        g[:-1] -= diffs
    return g


def _chain_prior_hess_diag(T: int, chain_var: float, sigma0_sq: float) -> np.ndarray:
    h = np.zeros(T)
    h[0] = 1.0 / sigma0_sq
    if T > 1:
        h[0] += 1.0 / chain_var
        h[-1] += 1.0 / chain_var
        h[1:-1] += 2.0 / chain_var
    return h


def _tridiag_solve(diag: np.ndarray, off: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (T, T) symmetric tridiagonal systems, vectorized over columns."""
    T = diag.shape[0]
    if T == 1:
        return rhs / diag
    cp = np.empty_like(diag)
    dp = np.empty_like(rhs)
    cp[0] = off / diag[0]
    dp[0] = rhs[0] / diag[0]
    for t in range(1, T):
        m = diag[t] - off * cp[t - 1]
        cp[t] = off / m
        dp[t] = (rhs[t] - off * dp[t - 1]) / m
    x = np.empty_like(rhs)
    x[-1] = dp[-1]
    for t in range(T - 2, -1, -1):
        x[t] = dp[t] - cp[t] * x[t + 1]
    return x


def _surrogate(eta, ss, rate, chain_var, sigma0_sq, mu0) -> float:
    data = float((ss * eta).sum() - (rate * np.exp(eta)).sum())
    return data - _prior_penalty(eta, chain_var, sigma0_sq, mu0)


def _chain_smooth(
    eta: np.ndarray,
    ss: np.ndarray,
    chain_var: float,
    sigma0_sq: float,
    mu0: np.ndarray,
    n_rounds: int = 3,
    newton_iters: int = 8,
    tol: float = 1e-9,
) -> np.ndarray:
    """Ascend one topic's chain objective; never returns a worse point."""
    T = eta.shape[0]
    eta = eta.copy()
    totals = ss.sum(axis=1)  # expected tokens per slice
    prior_diag = _chain_prior_hess_diag(T, chain_var, sigma0_sq)[:, None]
    off = -1.0 / chain_var
    for _ in range(n_rounds):
        zeta = np.exp(eta).sum(axis=1)
        rate = (totals / zeta)[:, None]
        current = _surrogate(eta, ss, rate, chain_var, sigma0_sq, mu0)
        for _ in range(newton_iters):
            expeta = np.exp(eta)
            grad = ss - rate * expeta - _chain_prior_grad(eta, chain_var, sigma0_sq, mu0)
            diag = rate * expeta + prior_diag
            delta = _tridiag_solve(diag, off, grad)
            step = 1.0
            accepted = False
            while step >= 1e-4:
                cand = eta + step * delta
                value = _surrogate(cand, ss, rate, chain_var, sigma0_sq, mu0)
                if value >= current - 1e-12 * (1.0 + abs(current)):
                    eta = cand
                    current = value
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            if float(np.max(np.abs(step * delta))) < tol:
                break
    return eta
