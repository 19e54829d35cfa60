"""Shared machinery for the topic models: configuration, ragged document
arrays, and the variational objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, psi

from ..corpus import TimeSlicedCorpus
from ..errors import ConfigError, EmptyCorpusError

PROB_FLOOR = 1e-12


@dataclass
class TopicModelConfig:
    k: int = 30
    alpha: float = 0.1  # document-topic Dirichlet concentration (held fixed)
    chain_var: float = 0.005  # per-slice evolution variance of topic natural params
    iterations: int = 60
    seed: int = 0
    convergence_tol: float = 1e-5  # relative bound change ending EM
    n_init: int = 1  # seeded restarts; best final bound wins
    inner_iterations: int = 200  # per-document fixed-point cap
    inner_tol: float = 1e-8

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        if self.chain_var <= 0:
            raise ConfigError("chain_var must be > 0")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")


@dataclass
class DocArrays:
    """Ragged token arrays: doc d owns ids[offsets[d]:offsets[d+1]]."""

    ids: np.ndarray  # int32 vocabulary indices
    cts: np.ndarray  # float64 counts
    offsets: np.ndarray  # int64, len n_docs + 1
    doc_ids: list[str]

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def total_tokens(self) -> float:
        return float(self.cts.sum())


def corpus_arrays(corpus: TimeSlicedCorpus) -> DocArrays:
    """Flatten every document (slice order, then document order)."""
    return _to_arrays(corpus.docs(), corpus.vocab_index)


def slice_arrays(corpus: TimeSlicedCorpus) -> list[tuple[int, DocArrays]]:
    out = []
    for year, docs in corpus.slices:
        if not docs:
            raise EmptyCorpusError(f"slice {year} has no documents")
        out.append((year, _to_arrays(docs, corpus.vocab_index)))
    return out


def _to_arrays(docs, vocab_index) -> DocArrays:
    if not docs:
        raise EmptyCorpusError("no documents")
    ids, cts, offsets = [], [], [0]
    for doc in docs:
        items = sorted((vocab_index[pair], count) for pair, count in doc.tokens.items())
        ids.extend(i for i, _ in items)
        cts.extend(c for _, c in items)
        offsets.append(len(ids))
    return DocArrays(
        ids=np.asarray(ids, dtype=np.int32),
        cts=np.asarray(cts, dtype=np.float64),
        offsets=np.asarray(offsets, dtype=np.int64),
        doc_ids=[doc.id for doc in docs],
    )


def floor_normalize(rows: np.ndarray) -> np.ndarray:
    """Row-normalize with a small floor so no probability is exactly zero."""
    rows = np.asarray(rows, dtype=float) + PROB_FLOOR
    return rows / rows.sum(axis=-1, keepdims=True)


def dirichlet_expectation(gamma: np.ndarray) -> np.ndarray:
    return psi(gamma) - psi(gamma.sum(axis=-1, keepdims=True))


def elbo(arrays: DocArrays, beta: np.ndarray, gamma: np.ndarray, alpha: float) -> float:
    """Variational lower bound at the implicit per-token assignment optimum.

    ``beta`` is the point-estimated topic-token matrix; the per-document
    Dirichlet terms use the current ``gamma``.
    """
    K = beta.shape[0]
    elog_theta = dirichlet_expectation(gamma)
    ee = np.exp(elog_theta)
    total = arrays.n_docs * float(gammaln(K * alpha) - K * gammaln(alpha))
    for d in range(arrays.n_docs):
        lo, hi = arrays.offsets[d], arrays.offsets[d + 1]
        s = ee[d] @ beta[:, arrays.ids[lo:hi]] + 1e-100
        total += float(arrays.cts[lo:hi] @ np.log(s))
        total += float(((alpha - gamma[d]) * elog_theta[d]).sum())
        total += float(gammaln(gamma[d]).sum() - gammaln(gamma[d].sum()))
    return total
