"""Document model for prospectus corpora: bags of (role, institution) pairs
grouped into annual slices, with frequency filtering and role-token weighting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .errors import (
    DuplicateDocumentError,
    EmptyCorpusError,
    UnknownRoleError,
    YearOutOfRangeError,
)

#: Seed roles for the extensible registry. Callers may pass a superset.
DEFAULT_ROLES = frozenset(
    {
        "issuer",
        "originator",
        "seller",
        "trustee",
        "servicer",
        "depositor",
        "sponsor",
        "securities administrator",
        "custodian",
        "swap counterparty",
        "cap counterparty",
        "insurer",
        "underwriter",
    }
)

DEFAULT_YEAR_RANGE = (2002, 2007)

Pair = tuple[str, str]  # (role, institution id)


@dataclass(frozen=True)
class FinancialInstitution:
    """A standardized institution: ``id`` is the unique standardized-name key."""

    id: str
    display_name: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("institution id must be non-empty")


@dataclass
class ProspectusDoc:
    """One prospectus as a weighted bag of (role, institution) pairs."""

    id: str
    year: int
    tokens: dict[Pair, int]
    security_ids: list[str] = field(default_factory=list)

    def distinct_pairs(self) -> set[Pair]:
        return set(self.tokens)

    def total_count(self) -> int:
        return sum(self.tokens.values())


@dataclass
class TimeSlicedCorpus:
    """Documents grouped by ascending year with a shared, stable vocabulary.

    ``vocabulary`` is sorted lexicographically so the pair <-> index mapping
    is a bijection independent of input record order. Instances are treated
    as immutable after construction; the transformation functions below
    always return new corpora.
    """

    slices: list[tuple[int, list[ProspectusDoc]]]
    vocabulary: list[Pair]

    def __post_init__(self):
        self.vocab_index: dict[Pair, int] = {p: i for i, p in enumerate(self.vocabulary)}

    def years(self) -> list[int]:
        return [y for y, _ in self.slices]

    def docs(self) -> list[ProspectusDoc]:
        return [d for _, ds in self.slices for d in ds]

    @property
    def n_docs(self) -> int:
        return sum(len(ds) for _, ds in self.slices)

    def total_tokens(self) -> int:
        return sum(d.total_count() for d in self.docs())

    def doc_frequency(self) -> dict[Pair, int]:
        freq: dict[Pair, int] = {p: 0 for p in self.vocabulary}
        for doc in self.docs():
            for pair in doc.tokens:
                freq[pair] += 1
        return freq


def _rebuild(docs: list[ProspectusDoc]) -> TimeSlicedCorpus:
    """Group docs by year (empty years omitted) and recompute the vocabulary."""
    if not docs:
        raise EmptyCorpusError("corpus has no documents")
    by_year: dict[int, list[ProspectusDoc]] = {}
    pairs: set[Pair] = set()
    for doc in docs:
        by_year.setdefault(doc.year, []).append(doc)
        pairs.update(doc.tokens)
    slices = [(y, by_year[y]) for y in sorted(by_year)]
    return TimeSlicedCorpus(slices=slices, vocabulary=sorted(pairs))


def build_corpus(records, year_range=DEFAULT_YEAR_RANGE, roles=None) -> TimeSlicedCorpus:
    """Assemble a time-sliced corpus from document records.

    Each record is a mapping with keys ``id``, ``year`` and ``pairs`` (a list
    of ``{"role", "fi"}`` mappings or ``(role, fi)`` tuples; repeated pairs
    accumulate their counts, and an explicit ``count`` is honored).
    ``security_ids`` is carried through when present.

    Raises on duplicate ids, years outside ``year_range``, records without
    pairs, and roles missing from the registry.
    """
    registry = DEFAULT_ROLES if roles is None else frozenset(roles)
    seen: set[str] = set()
    docs: list[ProspectusDoc] = []
    for rec in records:
        doc_id = str(rec["id"])
        year = int(rec["year"])
        if doc_id in seen:
            raise DuplicateDocumentError(doc_id)
        seen.add(doc_id)
        if not (year_range[0] <= year <= year_range[1]):
            raise YearOutOfRangeError(doc_id, year, year_range)
        tokens: dict[Pair, int] = {}
        for item in rec.get("pairs", ()):
            if isinstance(item, dict):
                role, fi = item["role"], item["fi"]
                count = int(item.get("count", 1))
            else:
                role, fi = item[0], item[1]
                count = int(item[2]) if len(item) > 2 else 1
            if role not in registry:
                raise UnknownRoleError(role)
            if count < 1:
                raise ValueError(f"token count must be >= 1 (doc {doc_id!r})")
            tokens[(role, fi)] = tokens.get((role, fi), 0) + count
        if not tokens:
            raise EmptyCorpusError(f"document {doc_id!r} has no (role, fi) pairs")
        docs.append(
            ProspectusDoc(
                id=doc_id,
                year=year,
                tokens=tokens,
                security_ids=list(rec.get("security_ids", ())),
            )
        )
    return _rebuild(docs)


def filter_corpus(corpus: TimeSlicedCorpus, min_fi_docs: int = 20, min_pairs: int = 5) -> TimeSlicedCorpus:
    """Drop rare institutions and thin documents, iterating to a fixpoint.

    Each round removes tokens of institutions that appear (in any role) in
    fewer than ``min_fi_docs`` retained documents, then drops documents left
    with fewer than ``min_pairs`` distinct pairs. Rounds repeat until nothing
    changes, so running the filter twice is a no-op.
    """
    docs = [ProspectusDoc(d.id, d.year, dict(d.tokens), list(d.security_ids)) for d in corpus.docs()]
    while True:
        fi_docs: dict[str, int] = {}
        for doc in docs:
            for fi in {fi for _, fi in doc.tokens}:
                fi_docs[fi] = fi_docs.get(fi, 0) + 1
        keep_fi = {fi for fi, n in fi_docs.items() if n >= min_fi_docs}
        changed = False
        next_docs: list[ProspectusDoc] = []
        for doc in docs:
            kept = {pair: c for pair, c in doc.tokens.items() if pair[1] in keep_fi}
            if len(kept) < len(doc.tokens):
                changed = True
            if len(kept) >= min_pairs and kept:
                next_docs.append(ProspectusDoc(doc.id, doc.year, kept, doc.security_ids))
            else:
                changed = True
        docs = next_docs
        if not docs:
            raise EmptyCorpusError(
                f"filtering (min_fi_docs={min_fi_docs}, min_pairs={min_pairs}) removed every document"
            )
        if not changed:
            return _rebuild(docs)


def weight_tokens(
    corpus: TimeSlicedCorpus,
    roles: frozenset[str] = frozenset({"issuer", "originator"}),
    multiplier: int = 2,
) -> TimeSlicedCorpus:
    """Multiply the counts of tokens whose role is in ``roles``.

    Document membership and the vocabulary are unchanged; only counts move.
    """
    if multiplier < 1:
        raise ValueError("multiplier must be >= 1")
    if multiplier == 1:
        return corpus
    docs = []
    for doc in corpus.docs():
        tokens = {
            pair: (count * multiplier if pair[0] in roles else count)
            for pair, count in doc.tokens.items()
        }
        docs.append(ProspectusDoc(doc.id, doc.year, tokens, doc.security_ids))
    return _rebuild(docs)


# -- serialization ----------------------------------------------------------

def write_jsonl(corpus: TimeSlicedCorpus, path) -> None:
    """One document per line: {"id", "year", "pairs": [{"role","fi","count"}], "security_ids"}."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.docs():
            rec = {
                "id": doc.id,
                "year": doc.year,
                "pairs": [
                    {"role": role, "fi": fi, "count": count}
                    for (role, fi), count in sorted(doc.tokens.items())
                ],
                "security_ids": doc.security_ids,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path, year_range=DEFAULT_YEAR_RANGE, roles=None) -> TimeSlicedCorpus:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return build_corpus(records, year_range=year_range, roles=roles)


def write_vocabulary_csv(corpus: TimeSlicedCorpus, path) -> None:
    freq = corpus.doc_frequency()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "role", "fi", "doc_frequency"])
        for i, (role, fi) in enumerate(corpus.vocabulary):
            writer.writerow([i, role, fi, freq[(role, fi)]])
