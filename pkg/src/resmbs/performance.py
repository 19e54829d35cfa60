"""Security performance labeling from basis-point payment summaries.

A security meets expectations (ME) when neither the principal shortfall nor
the combined other shortfalls and losses exceed the class ME bound, fails
expectations (FE) when either reaches the FE bound, and is NME in between.
FNE groups FE with NME. Bounds are inclusive on both ends: exactly at the ME
bound is ME, exactly at the FE bound is FE.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

SECURITY_CLASSES = ("A", "M", "B")


@dataclass(frozen=True)
class PaymentSummary:
    principal_shortfall_bps: float
    other_shortfall_loss_bps: float

    def __post_init__(self):
        if self.principal_shortfall_bps < 0 or self.other_shortfall_loss_bps < 0:
            raise ValueError("shortfall/loss summaries must be non-negative")

    def worst_bps(self) -> float:
        return max(self.principal_shortfall_bps, self.other_shortfall_loss_bps)


@dataclass(frozen=True)
class ClassThresholds:
    me_max_bps: float
    fe_min_bps: float

    def __post_init__(self):
        if not (0 < self.me_max_bps < self.fe_min_bps):
            raise ValueError("need 0 < me_max_bps < fe_min_bps")


@dataclass(frozen=True)
class PerfThresholds:
    per_class: dict[str, ClassThresholds]

    def for_class(self, security_class: str) -> ClassThresholds:
        if security_class not in self.per_class:
            raise ValueError(f"unknown security class: {security_class!r}")
        return self.per_class[security_class]


@dataclass(frozen=True)
class PerformanceLabel:
    value: str  # ME | NME | FE
    fe: bool
    fne: bool


def default_thresholds() -> PerfThresholds:
    """Senior (A): ME up to 100 bps, FE from 2,500 bps.
    Mezzanine and subordinate (M, B): ME up to 500 bps, FE from 5,000 bps."""
    return PerfThresholds(
        per_class={
            "A": ClassThresholds(me_max_bps=100.0, fe_min_bps=2500.0),
            "M": ClassThresholds(me_max_bps=500.0, fe_min_bps=5000.0),
            "B": ClassThresholds(me_max_bps=500.0, fe_min_bps=5000.0),
        }
    )


def label_security(
    security_class: str, summary: PaymentSummary, thresholds: PerfThresholds | None = None
) -> PerformanceLabel:
    t = (thresholds or default_thresholds()).for_class(security_class)
    worst = summary.worst_bps()
    if worst <= t.me_max_bps:
        value = "ME"
    elif worst >= t.fe_min_bps:
        value = "FE"
    else:
        value = "NME"
    return PerformanceLabel(value=value, fe=value == "FE", fne=value != "ME")


def summarize_rates(labeled, group_keys=("year", "class")) -> list[dict]:
    """FE and FNE rates per group.

    ``labeled``: iterables of mappings with keys ``label`` (a
    PerformanceLabel) plus whichever of ``year`` / ``class`` the grouping
    uses. Returns rows sorted by group key with ``n``, ``fe_rate`` and
    ``fne_rate``.
    """
    group_keys = tuple(group_keys)
    if not group_keys or not set(group_keys) <= {"year", "class"}:
        raise ValueError("group_keys must be a non-empty subset of {'year', 'class'}")
    rows = list(labeled)
    if not rows:
        raise ValueError("no labeled securities to summarize")
    acc: dict[tuple, list[int]] = {}
    for row in rows:
        key = tuple(row[k] for k in group_keys)
        n_fe_fne = acc.setdefault(key, [0, 0, 0])
        n_fe_fne[0] += 1
        n_fe_fne[1] += int(row["label"].fe)
        n_fe_fne[2] += int(row["label"].fne)
    out = []
    for key in sorted(acc, key=lambda k: tuple(str(x) for x in k)):
        n, fe, fne = acc[key]
        rec = dict(zip(group_keys, key))
        rec.update(n=n, fe_rate=fe / n, fne_rate=fne / n)
        out.append(rec)
    return out


def topic_performance(dominant_topics, labels, ssup_flags) -> dict[int, tuple[float, float]]:
    """Per-topic (FE rate, SSUP fraction) over securities.

    ``dominant_topics``: security id -> topic index (every security exactly
    one topic). ``labels``: security id -> PerformanceLabel. ``ssup_flags``:
    security id -> bool. Topics with no securities simply do not appear.
    """
    counts: dict[int, list[int]] = {}
    for sid, topic in dominant_topics.items():
        n_fe_ssup = counts.setdefault(topic, [0, 0, 0])
        n_fe_ssup[0] += 1
        n_fe_ssup[1] += int(labels[sid].fe)
        n_fe_ssup[2] += int(bool(ssup_flags.get(sid, False)))
    return {
        topic: (fe / n, ssup / n) for topic, (n, fe, ssup) in sorted(counts.items())
    }


# -- csv interfaces ----------------------------------------------------------

def read_payments_csv(path) -> dict[str, tuple[str, PaymentSummary]]:
    """Rows of (security_id, class, principal_shortfall_bps, other_shortfall_loss_bps)."""
    out: dict[str, tuple[str, PaymentSummary]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["security_id"]] = (
                row["class"],
                PaymentSummary(
                    principal_shortfall_bps=float(row["principal_shortfall_bps"]),
                    other_shortfall_loss_bps=float(row["other_shortfall_loss_bps"]),
                ),
            )
    return out


def write_labels_csv(labels: dict[str, PerformanceLabel], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["security_id", "label", "fe", "fne"])
        for sid in sorted(labels):
            lab = labels[sid]
            writer.writerow([sid, lab.value, int(lab.fe), int(lab.fne)])


def read_labels_csv(path) -> dict[str, PerformanceLabel]:
    out: dict[str, PerformanceLabel] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["security_id"]] = PerformanceLabel(
                value=row["label"], fe=row["fe"] == "1", fne=row["fne"] == "1"
            )
    return out


def write_rates_csv(rows: list[dict], path) -> None:
    if not rows:
        raise ValueError("no rate rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
