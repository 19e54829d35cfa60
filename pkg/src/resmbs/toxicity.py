"""Institution and community toxicity labeling, and the comparison of
community labels against fitted coefficient signs.

An institution is toxic on bankruptcy/fines or an involuntary merger, and
partially toxic on bailout funds or subprime distress. A community is toxic
with two distinct toxic institutions (or one spanning many roles and years),
non-toxic with no toxic or partially toxic institutions at all, and
partially toxic in between. Small communities and communities without a
prominent institution are excluded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .errors import ColumnMismatchError
from .lasso import LassoFit

TOXIC = "toxic"
PARTIAL = "partial"
NONE = "none"
NON_TOXIC = "non_toxic"
EXCLUDED = "excluded"

#: roles whose prominence qualifies an institution for community labeling
KEY_ROLES = frozenset({"issuer", "originator"})

MIN_PROSPECTUSES = 40
MANY_ROLES = 3
MULTI_YEARS = 2


@dataclass(frozen=True)
class InstitutionEvidence:
    fi: str
    bankruptcy_or_fines: bool = False
    involuntary_merger: bool = False
    tarp_funds: bool = False
    subprime_distress: bool = False
    evidence_notes: str = ""


def label_institution(evidence: InstitutionEvidence) -> str:
    if evidence.bankruptcy_or_fines or evidence.involuntary_merger:
        return TOXIC
    if evidence.tarp_funds or evidence.subprime_distress:
        return PARTIAL
    return NONE


def label_institutions(evidence: dict[str, InstitutionEvidence]) -> dict[str, str]:
    return {fi: label_institution(e) for fi, e in evidence.items()}


@dataclass
class CommunityToxicity:
    topic_index: int
    value: str  # toxic | partial | non_toxic | excluded
    supporting: list[str] = field(default_factory=list)


def label_community(
    topic_index: int,
    prominent: list[tuple[str, set[str], set[int]]],
    institution_labels: dict[str, str],
    n_prospectuses: int | None = None,
    min_prospectuses: int = MIN_PROSPECTUSES,
) -> CommunityToxicity:
    """Label one community from its prominent institutions.

    ``prominent`` entries are (institution id, roles played, active years),
    already restricted to institutions prominent in a key role. Unknown
    institutions count as unlabeled ("none").
    """
    if n_prospectuses is not None and n_prospectuses < min_prospectuses:
        return CommunityToxicity(topic_index, EXCLUDED, [f"only {n_prospectuses} prospectuses"])
    if not prominent:
        return CommunityToxicity(topic_index, EXCLUDED, ["no prominent institution"])
    toxic_entries = []
    partial_entries = []
    supporting = []
    for fi, roles, years in prominent:
        label = institution_labels.get(fi, NONE)
        if label == TOXIC:
            toxic_entries.append((fi, roles, years))
            supporting.append(f"{fi}: toxic (roles={len(roles)}, years={len(years)})")
        elif label == PARTIAL:
            partial_entries.append((fi, roles, years))
            supporting.append(f"{fi}: partial")
    if len({fi for fi, _, _ in toxic_entries}) >= 2:
        return CommunityToxicity(topic_index, TOXIC, supporting)
    if len(toxic_entries) == 1:
        _, roles, years = toxic_entries[0]
        if len(roles) >= MANY_ROLES and len(years) >= MULTI_YEARS:
            return CommunityToxicity(topic_index, TOXIC, supporting)
    if toxic_entries or partial_entries:
        return CommunityToxicity(topic_index, PARTIAL, supporting)
    return CommunityToxicity(topic_index, NON_TOXIC, supporting)


def prominent_institutions(fit, topic: int, top_n: int = 10, key_roles=KEY_ROLES):
    """Institutions prominent in a topic's top terms.

    An institution qualifies when one of its pairs in the time-averaged
    top-``top_n`` terms carries a key role; its roles are collected from
    those top terms and its years from the slices where it stays in the
    per-slice top terms.
    """
    from .topics import top_terms

    averaged = fit.per_slice_topic_word.mean(axis=0)
    order = averaged[topic].argsort()[::-1][:top_n]
    top_pairs = [fit.vocabulary[i] for i in order]
    qualified = {fi for role, fi in top_pairs if role in key_roles}
    roles: dict[str, set[str]] = {fi: set() for fi in qualified}
    years: dict[str, set[int]] = {fi: set() for fi in qualified}
    for role, fi in top_pairs:
        if fi in qualified:
            roles[fi].add(role)
    for t, year in enumerate(fit.years):
        for pair, _ in top_terms(fit, topic, slice_index=t, n=top_n):
            role, fi = pair
            if fi in qualified:
                years[fi].add(year)
    return [(fi, roles[fi], years[fi]) for fi in sorted(qualified)]


def label_communities(
    fit,
    institution_labels: dict[str, str],
    prospectus_counts: dict[int, int] | None = None,
    top_n: int = 10,
    min_prospectuses: int = MIN_PROSPECTUSES,
) -> list[CommunityToxicity]:
    out = []
    for topic in range(fit.k):
        n_prosp = prospectus_counts.get(topic, 0) if prospectus_counts is not None else None
        prominent = prominent_institutions(fit, topic, top_n=top_n)
        out.append(
            label_community(
                topic, prominent, institution_labels,
                n_prospectuses=n_prosp, min_prospectuses=min_prospectuses,
            )
        )
    return out


def _sign(fit: LassoFit, column: str) -> str:
    if column not in fit.columns:
        raise ColumnMismatchError(f"fit lacks topic column {column!r}")
    val = fit.coefficients.get(column, 0.0)
    if val > 0:
        return "+"
    if val < 0:
        return "-"
    return "0"


def compare_signs(
    community_labels: list[CommunityToxicity], fe_fit: LassoFit, fne_fit: LassoFit
) -> list[dict]:
    """Per-topic report of toxicity against retained coefficient signs.

    Consistency encodes the directional expectation: non-toxic communities
    should not increase failure risk (signs in {-, 0}), toxic and partially
    toxic ones should not decrease it (signs in {+, 0}).
    """
    rows = []
    for lab in community_labels:
        column = f"Topic{lab.topic_index + 1}"
        fe_sign = _sign(fe_fit, column)
        fne_sign = _sign(fne_fit, column)
        if lab.value == EXCLUDED:
            consistent = ""
        elif lab.value == NON_TOXIC:
            consistent = "yes" if fe_sign in ("-", "0") and fne_sign in ("-", "0") else "no"
        else:
            consistent = "yes" if fe_sign in ("+", "0") and fne_sign in ("+", "0") else "no"
        rows.append(
            {
                "topic": lab.topic_index + 1,  # display numbering matches Topic<N> columns
                "toxicity": lab.value,
                "fe_sign": fe_sign,
                "fne_sign": fne_sign,
                "consistent": consistent,
                "evidence": "; ".join(lab.supporting),
            }
        )
    return rows


# -- evidence file -------------------------------------------------------------

def read_evidence_csv(path) -> dict[str, InstitutionEvidence]:
    """Columns: fi_id, bankruptcy_or_fines, involuntary_merger, tarp_funds,
    subprime_distress, notes (flags as 0/1)."""
    out: dict[str, InstitutionEvidence] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["fi_id"]] = InstitutionEvidence(
                fi=row["fi_id"],
                bankruptcy_or_fines=row["bankruptcy_or_fines"] == "1",
                involuntary_merger=row["involuntary_merger"] == "1",
                tarp_funds=row["tarp_funds"] == "1",
                subprime_distress=row["subprime_distress"] == "1",
                evidence_notes=row.get("notes", ""),
            )
    return out


def write_evidence_csv(evidence: dict[str, InstitutionEvidence], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["fi_id", "bankruptcy_or_fines", "involuntary_merger", "tarp_funds",
             "subprime_distress", "notes"]
        )
        for fi in sorted(evidence):
            e = evidence[fi]
            writer.writerow(
                [fi, int(e.bankruptcy_or_fines), int(e.involuntary_merger),
                 int(e.tarp_funds), int(e.subprime_distress), e.evidence_notes]
            )


def write_community_report_csv(rows: list[dict], path) -> None:
    fields = ["topic", "toxicity", "fe_sign", "fne_sign", "consistent", "evidence"]
    if any("dynamics" in row for row in rows):
        fields.insert(1, "dynamics")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
