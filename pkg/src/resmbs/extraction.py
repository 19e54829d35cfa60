"""Dictionary-driven extraction of (role, institution) pairs from prospectus
text: root+suffix name matching, entity resolution against standardized
names, role keyword anchors, row-wise pairing, and dual-extractor agreement.
"""

from __future__ import annotations

import bisect
import csv
import re
from dataclasses import dataclass

from .corpus import FinancialInstitution
from .errors import UnresolvedEntityError

#: Surface keyword -> canonical role. Longest surface form wins on overlap.
DEFAULT_ROLE_KEYWORDS: dict[str, str] = {
    "issuing entity": "issuer",
    "issuer": "issuer",
    "issuers": "issuer",
    "originator": "originator",
    "originators": "originator",
    "seller": "seller",
    "sellers": "seller",
    "sponsor": "sponsor",
    "sponsors": "sponsor",
    "depositor": "depositor",
    "depositors": "depositor",
    "master servicer": "servicer",
    "servicer": "servicer",
    "servicers": "servicer",
    "trustee": "trustee",
    "trustees": "trustee",
    "custodian": "custodian",
    "insurer": "insurer",
    "underwriter": "underwriter",
    "underwriters": "underwriter",
    "securities administrator": "securities administrator",
    "swap counterparty": "swap counterparty",
    "cap counterparty": "cap counterparty",
}


def normalize_name(name: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    cleaned = re.sub(r"[^\w\s]", " ", name.lower())
    return re.sub(r"\s+", " ", cleaned).strip()


@dataclass
class RootSuffixDictionary:
    """Root terms (usually unique), suffix terms, and the standardization map
    from normalized root to institution."""

    roots: set[str]
    suffixes: set[str]
    standard_names: dict[str, FinancialInstitution]

    def __post_init__(self):
        if not self.roots or not self.suffixes:
            raise ValueError("root and suffix dictionaries must be non-empty")
        self._root_re = _alternation_regex(self.roots)
        self._suffix_re = _alternation_regex(self.suffixes)
        # normalized roots, longest first, for prefix resolution
        self._roots_by_len = sorted({normalize_name(r) for r in self.roots}, key=len, reverse=True)


def _alternation_regex(terms) -> re.Pattern:
    """Case-insensitive alternation, longest term first, whitespace-flexible,
    bounded so terms never match inside a larger word."""
    parts = []
    for term in sorted(terms, key=len, reverse=True):
        parts.append(re.escape(term).replace(r"\ ", r"\s+"))
    pattern = r"(?<![A-Za-z0-9])(?:" + "|".join(parts) + r")(?![A-Za-z0-9])"
    return re.compile(pattern, re.IGNORECASE)


@dataclass
class MentionSpan:
    """A matched institution mention: root term plus any trailing suffixes."""

    doc_id: str
    start: int
    end: int
    raw_text: str
    matched_root: str
    matched_suffix: str | None = None


@dataclass(frozen=True)
class ExtractedPair:
    role: str
    raw_name: str
    standardized: FinancialInstitution


@dataclass
class ExtractionDiagnostics:
    doc_id: str = ""
    dropped_mentions: int = 0
    unresolved_names: int = 0


_SUFFIX_SEP = re.compile(r"[ \t]*,?[ \t]+")


def ner_match(text: str, dictionary: RootSuffixDictionary, doc_id: str = "") -> list[MentionSpan]:
    """All non-overlapping institution mentions, ordered by start offset.

    A mention is a root term followed by zero or more suffix terms (separated
    by spaces or a comma). Overlaps resolve to the earliest start, then the
    longest root.
    """
    mentions: list[MentionSpan] = []
    pos = 0
    while True:
        m = dictionary._root_re.search(text, pos)
        if m is None:
            break
        start, end = m.start(), m.end()
        root = m.group(0)
        suffix_start = None
        while True:
            sep = _SUFFIX_SEP.match(text, end)
            probe = sep.end() if sep else end
            sm = dictionary._suffix_re.match(text, probe)
            if sm is None:
                break
            if suffix_start is None:
                suffix_start = sm.start()
            end = sm.end()
        mentions.append(
            MentionSpan(
                doc_id=doc_id,
                start=start,
                end=end,
                raw_text=text[start:end],
                matched_root=root,
                matched_suffix=text[suffix_start:end] if suffix_start is not None else None,
            )
        )
        pos = end
    return mentions


def resolve_entity(raw_name: str, dictionary: RootSuffixDictionary) -> FinancialInstitution:
    """Map a raw mention to its standardized institution.

    Lookup is by normalized root: the longest normalized root that equals the
    normalized name or prefixes it at a word boundary.
    """
    norm = normalize_name(raw_name)
    for root in dictionary._roots_by_len:
        if norm == root or norm.startswith(root + " "):
            return dictionary.standard_names[root]
    raise UnresolvedEntityError(raw_name)


def extract_roles(text: str, keyword_map: dict[str, str] | None = None) -> list[tuple[str, int]]:
    """All role-keyword occurrences as (canonical role, start offset)."""
    keywords = DEFAULT_ROLE_KEYWORDS if keyword_map is None else keyword_map
    pattern = _alternation_regex(keywords)
    lowered = {normalize_name(k): v for k, v in keywords.items()}
    anchors = []
    for m in pattern.finditer(text):
        anchors.append((lowered[normalize_name(m.group(0))], m.start()))
    return anchors


def pair_roles(
    mentions: list[MentionSpan],
    role_anchors: list[tuple[str, int]],
    dictionary: RootSuffixDictionary,
    text: str,
    doc_id: str = "",
) -> tuple[list[ExtractedPair], ExtractionDiagnostics]:
    """Pair each mention with the nearest preceding role anchor in the same
    newline-delimited block. One anchor may serve several mentions; mentions
    with no anchor in their block are dropped and tallied.
    """
    diagnostics = ExtractionDiagnostics(doc_id=doc_id)
    line_of = _line_index(text)
    pairs: list[ExtractedPair] = []
    anchors = sorted(role_anchors, key=lambda a: a[1])
    for mention in mentions:
        best = None
        for role, off in anchors:
            if off <= mention.start and line_of(off) == line_of(mention.start):
                best = role
            elif off > mention.start:
                break
        if best is None:
            diagnostics.dropped_mentions += 1
            continue
        try:
            fi = resolve_entity(mention.raw_text, dictionary)
        except UnresolvedEntityError:
            diagnostics.unresolved_names += 1
            continue
        pairs.append(ExtractedPair(role=best, raw_name=mention.raw_text, standardized=fi))
    return pairs, diagnostics


def _line_index(text: str):
    starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            starts.append(i + 1)

    def line_of(offset: int) -> int:
        return bisect.bisect_right(starts, offset) - 1

    return line_of


def extract_pairs(
    text: str,
    dictionary: RootSuffixDictionary,
    keyword_map: dict[str, str] | None = None,
    doc_id: str = "",
) -> tuple[list[ExtractedPair], ExtractionDiagnostics]:
    """Full single-document extraction: mentions, anchors, pairing."""
    mentions = ner_match(text, dictionary, doc_id=doc_id)
    anchors = extract_roles(text, keyword_map)
    return pair_roles(mentions, anchors, dictionary, text, doc_id=doc_id)


def agreement_filter(
    pairs_a: list[ExtractedPair], pairs_b: list[ExtractedPair]
) -> list[ExtractedPair]:
    """Pairs present in both inputs, keyed on (role, standardized id).

    Order follows the first input; duplicates collapse to first occurrence.
    """
    keys_b = {(p.role, p.standardized.id) for p in pairs_b}
    seen: set[tuple[str, str]] = set()
    out = []
    for p in pairs_a:
        key = (p.role, p.standardized.id)
        if key in keys_b and key not in seen:
            seen.add(key)
            out.append(p)
    return out


def capitalized_phrase_extractor(
    text: str,
    dictionary: RootSuffixDictionary,
    keyword_map: dict[str, str] | None = None,
    doc_id: str = "",
) -> list[ExtractedPair]:
    """Naive second pipeline: capitalized-word runs as candidate names.

    Runs that resolve against the standardized-name map are paired with the
    nearest preceding role anchor in the same block; everything else is
    ignored. Deliberately independent of the root/suffix matcher.
    """
    candidate = re.compile(
        r"\b[A-Z][A-Za-z&.']*(?:[ \t]+(?:of|&|[A-Z][A-Za-z&.']*))*"
    )
    anchors = extract_roles(text, keyword_map)
    keywords = DEFAULT_ROLE_KEYWORDS if keyword_map is None else keyword_map
    keyword_norms = {normalize_name(k) for k in keywords}
    line_of = _line_index(text)
    pairs: list[ExtractedPair] = []
    for m in candidate.finditer(text):
        if normalize_name(m.group(0)) in keyword_norms:
            continue
        try:
            fi = resolve_entity(m.group(0), dictionary)
        except UnresolvedEntityError:
            continue
        best = None
        for role, off in anchors:
            if off <= m.start() and line_of(off) == line_of(m.start()):
                best = role
            elif off > m.start():
                break
        if best is not None:
            pairs.append(ExtractedPair(role=best, raw_name=m.group(0), standardized=fi))
    return pairs


# -- dictionary and report files --------------------------------------------

def load_dictionary(roots_csv, suffixes_path) -> RootSuffixDictionary:
    """Roots from CSV rows (root, standardized_id); one suffix per line."""
    roots: set[str] = set()
    standard: dict[str, FinancialInstitution] = {}
    with open(roots_csv, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            root, std_id = row[0].strip(), row[1].strip()
            roots.add(root)
            standard[normalize_name(root)] = FinancialInstitution(id=std_id, display_name=std_id)
    suffixes = set()
    with open(suffixes_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                suffixes.add(line)
    return RootSuffixDictionary(roots=roots, suffixes=suffixes, standard_names=standard)


def write_pairs_jsonl(doc_pairs: dict[str, list[ExtractedPair]], path) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(doc_pairs):
            rec = {
                "id": doc_id,
                "pairs": [
                    {"role": p.role, "raw_name": p.raw_name, "fi": p.standardized.id}
                    for p in doc_pairs[doc_id]
                ],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_diagnostics_csv(diagnostics: list[ExtractionDiagnostics], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "dropped_mentions", "unresolved_names"])
        for d in sorted(diagnostics, key=lambda d: d.doc_id):
            writer.writerow([d.doc_id, d.dropped_mentions, d.unresolved_names])
