"""Inference and reporting on fitted topic models: per-document weights,
dominant topics, cross-model dynamics classification, ranked terms, Sankey
edge lists, and fit persistence."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict
from typing import NamedTuple

import numpy as np

from ..corpus import ProspectusDoc
from ..errors import InferenceError, VocabularyMismatchError
from .common import TopicModelConfig, dirichlet_expectation
from .dtm import DtmFit
from .lda import LdaFit

STRONG_WEIGHT = 0.7


def _beta_for_doc(fit, doc: ProspectusDoc) -> np.ndarray:
    if isinstance(fit, LdaFit):
        return fit.topic_word
    idx = nearest_slice(fit.years, doc.year)
    return fit.per_slice_topic_word[idx]


def nearest_slice(years: list[int], year: int) -> int:
    """Index of the closest slice year; ties resolve to the earlier year."""
    diffs = [(abs(y - year), i) for i, y in enumerate(years)]
    return min(diffs)[1]


def doc_topics(fit, doc: ProspectusDoc) -> np.ndarray:
    """Fold-in variational inference of a document's topic weights.

    Tokens outside the fit vocabulary are ignored (with a warning carrying
    the count); a document with no known tokens is an error.
    """
    beta = _beta_for_doc(fit, doc)
    vocab_index = {pair: i for i, pair in enumerate(fit.vocabulary)}
    items, oov = [], 0
    for pair, count in doc.tokens.items():
        if pair in vocab_index:
            items.append((vocab_index[pair], count))
        else:
            oov += count
    if oov:
        warnings.warn(f"document {doc.id!r}: {oov} out-of-vocabulary tokens ignored")
    if not items:
        raise InferenceError(f"document {doc.id!r} has no tokens in the fit vocabulary")
    items.sort()
    ids = np.array([i for i, _ in items], dtype=np.intp)
    cts = np.array([c for _, c in items], dtype=float)

    alpha = fit.config.alpha
    k = beta.shape[0]
    gamma = np.full(k, alpha + cts.sum() / k)
    beta_d = beta[:, ids]
    ee = np.exp(dirichlet_expectation(gamma))
    phinorm = ee @ beta_d + 1e-100
    for _ in range(500):
        last = gamma
        gamma = alpha + ee * ((cts / phinorm) @ beta_d.T)
        ee = np.exp(dirichlet_expectation(gamma))
        phinorm = ee @ beta_d + 1e-100
        if np.mean(np.abs(gamma - last)) < 1e-10:
            break
    return gamma / gamma.sum()


class DominantTopic(NamedTuple):
    index: int
    weight: float
    strong: bool


def dominant_topic(weights, strong_threshold: float = STRONG_WEIGHT) -> DominantTopic:
    """Argmax topic (ties to the lowest index) and the strong-assignment flag."""
    w = np.asarray(weights, dtype=float)
    idx = int(np.argmax(w))
    weight = float(w[idx])
    return DominantTopic(index=idx, weight=weight, strong=weight >= strong_threshold)


def _time_averaged(fit) -> np.ndarray:
    if isinstance(fit, LdaFit):
        return fit.topic_word
    return fit.per_slice_topic_word.mean(axis=0)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return float(0.5 * np.abs(p - q).sum())


def classify_dynamics(
    dtm_fast: DtmFit,
    lda: LdaFit,
    dtm_slow: DtmFit,
    align_threshold: float = 0.6,
    drift_threshold: float = 0.3,
) -> list[str]:
    """Label each fast-chain topic stable, evolving, or dynamic.

    A topic aligns when its time-averaged distribution has cosine similarity
    at least ``align_threshold`` to some static or slow-chain topic. Aligned
    topics with max consecutive-slice total variation at most
    ``drift_threshold`` are stable; aligned drifters are evolving; topics
    aligning to nothing are dynamic.
    """
    for other in (lda, dtm_slow):
        if list(other.vocabulary) != list(dtm_fast.vocabulary):
            raise VocabularyMismatchError("fits do not share a vocabulary")
        if other.k != dtm_fast.k:
            raise VocabularyMismatchError("fits do not share a topic count")
    refs = np.vstack([lda.topic_word, _time_averaged(dtm_slow)])
    labels = []
    for k in range(dtm_fast.k):
        chain = dtm_fast.per_slice_topic_word[:, k, :]
        centroid = chain.mean(axis=0)
        best_cos = max(_cosine(centroid, ref) for ref in refs)
        drift = 0.0
        for t in range(chain.shape[0] - 1):
            drift = max(drift, total_variation(chain[t], chain[t + 1]))
        if best_cos < align_threshold:
            labels.append("dynamic")
        elif drift <= drift_threshold:
            labels.append("stable")
        else:
            labels.append("evolving")
    return labels


def top_terms(fit, topic: int, slice_index: int | None = None, n: int = 10):
    """Top-``n`` (pair, probability), descending with vocabulary-order ties."""
    if isinstance(fit, LdaFit):
        if slice_index is not None:
            raise IndexError("a static fit has no slices")
        row = fit.topic_word[topic]
    else:
        if slice_index is None:
            raise IndexError("a dynamic fit requires a slice index")
        row = fit.per_slice_topic_word[slice_index][topic]
    order = np.lexsort((np.arange(row.size), -row))
    return [(fit.vocabulary[i], float(row[i])) for i in order[:n]]


def export_sankey(fit: DtmFit, topic: int, n_per_slice: int = 10):
    """Bipartite edge list (year, (role, fi), weight) of per-slice top pairs."""
    edges = []
    for t, year in enumerate(fit.years):
        for pair, weight in top_terms(fit, topic, slice_index=t, n=n_per_slice):
            edges.append((year, pair, weight))
    return edges


def write_sankey_csv(edges, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "role", "fi", "weight"])
        for year, (role, fi), weight in edges:
            writer.writerow([year, role, fi, repr(float(weight))])


# -- persistence ---------------------------------------------------------------

def save_fit(fit, path) -> None:
    payload = {
        "version": 1,
        "kind": "lda" if isinstance(fit, LdaFit) else "dtm",
        "config": asdict(fit.config),
        "vocabulary": [list(p) for p in fit.vocabulary],
        "doc_ids": list(fit.doc_ids),
        "trace": [float(v) for v in fit.log_likelihood_trace],
        "doc_topic": fit.doc_topic.tolist(),
    }
    if isinstance(fit, LdaFit):
        payload["topic_word"] = fit.topic_word.tolist()
    else:
        payload["per_slice_topic_word"] = fit.per_slice_topic_word.tolist()
        payload["years"] = list(fit.years)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_fit(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    config = TopicModelConfig(**payload["config"])
    vocabulary = [tuple(p) for p in payload["vocabulary"]]
    common = dict(
        log_likelihood_trace=payload["trace"],
        vocabulary=vocabulary,
        doc_ids=payload["doc_ids"],
        config=config,
        doc_topic=np.array(payload["doc_topic"], dtype=float),
    )
    if payload["kind"] == "lda":
        return LdaFit(topic_word=np.array(payload["topic_word"], dtype=float), **common)
    return DtmFit(
        per_slice_topic_word=np.array(payload["per_slice_topic_word"], dtype=float),
        years=[int(y) for y in payload["years"]],
        **common,
    )
