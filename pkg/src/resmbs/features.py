"""Feature construction in three tiers.

Security tier: class indicators (M is the baseline), 11 aggregated
initial-rating one-hots, the tranche-flag registry, annual controls with a
baseline year, and the scaled original principal. Prospectus tier: 13
composition columns shared by every security of a prospectus. Topic tier:
one-hot dominant-community indicators.
"""

from __future__ import annotations

import csv
import json
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import MirParseError

MIR_LEVELS = ("Aaa", "Aa", "A", "Baa", "Ba", "B", "Caa", "Ca", "C", "NR", "null")

_MIR_RE = re.compile(r"^(AAA|AA|A|BAA|BA|B|CAA|CA|C)\s*([1-3])?$")
_MIR_CANON = {level.upper(): level for level in MIR_LEVELS[:9]}
_NR_FORMS = {"NR", "NOT RATED", "WR"}

#: Flag names observed in reported models, in fixed registry order.
_NAMED_FLAGS = (
    "AD", "AFC", "AS", "CMPLX", "CPT", "CSTR", "DGT", "DLY", "EXCH", "EXE",
    "FLT", "FTV", "INV", "IRC", "MEZ", "MR", "NAS", "NTL", "OC", "PAC1",
    "PIP", "PT", "R", "RAKE", "RSTP", "RTL", "SC", "SEQ", "SSNR", "SSUP",
    "STEP", "SUB", "SUP", "TAC.1.22.", "TAC.11.", "TAC.2.22.", "TAC.22.",
    "TAC.33.", "W", "Z",
)
#: Placeholders padding the registry to its fixed width of 73.
DEFAULT_FLAG_REGISTRY: tuple[str, ...] = _NAMED_FLAGS + tuple(
    f"XF{i}" for i in range(len(_NAMED_FLAGS) + 1, 74)
)

DEFAULT_YEARS = (2002, 2003, 2004, 2005, 2006, 2007)
BASELINE_YEAR = 2005
PRINCIPAL_UNIT = 1e8  # USD per feature unit

PROSPECTUS_COLUMNS = (
    "CountA", "CountM", "CountB",
    "FracA", "FracM", "FracB",
    "VolA", "VolM", "VolB",
    "VolFracA", "VolFracM", "VolFracB",
    "HasSSUP",
)


def load_flag_registry(path) -> tuple[str, ...]:
    """One flag name per line; blank lines and '#' comments ignored."""
    names = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                names.append(line)
    if not names:
        raise ValueError(f"flag registry {path} is empty")
    if len(set(names)) != len(names):
        raise ValueError(f"flag registry {path} has duplicate names")
    return tuple(names)


def aggregate_mir(mir_raw: str | None) -> str:
    """Collapse a raw initial rating to its letter level.

    Numeric modifiers are stripped ("Aa2" -> "Aa"); evaluated-but-unrated
    forms map to "NR"; missing/empty values map to "null". Anything else is
    an error naming the value.
    """
    if mir_raw is None:
        return "null"
    text = mir_raw.strip()
    if not text:
        return "null"
    upper = text.upper()
    if upper in _NR_FORMS:
        return "NR"
    m = _MIR_RE.match(upper)
    if not m:
        raise MirParseError(mir_raw)
    return _MIR_CANON[m.group(1)]


@dataclass
class SecurityRecord:
    id: str
    prospectus_id: str
    security_class: str  # A | M | B
    year: int
    mir_raw: str | None
    flags: set[str]
    original_principal: float

    def __post_init__(self):
        if self.security_class not in ("A", "M", "B"):
            raise ValueError(f"security class must be A, M or B: {self.security_class!r}")
        if self.original_principal < 0:
            raise ValueError("original principal must be non-negative")


def build_security_features(
    record: SecurityRecord,
    flag_registry: tuple[str, ...] = DEFAULT_FLAG_REGISTRY,
    years: tuple[int, ...] = DEFAULT_YEARS,
    baseline_year: int = BASELINE_YEAR,
    principal_unit: float = PRINCIPAL_UNIT,
) -> dict[str, float]:
    row: dict[str, float] = {
        "IsA": float(record.security_class == "A"),
        "IsB": float(record.security_class == "B"),
    }
    level = aggregate_mir(record.mir_raw)
    for lv in MIR_LEVELS:
        row[f"MIR_{lv}"] = float(lv == level)
    unknown = record.flags - set(flag_registry)
    if unknown:
        raise ValueError(f"flags not in registry: {sorted(unknown)}")
    for flag in flag_registry:
        row[flag] = float(flag in record.flags)
    for year in years:
        if year != baseline_year:
            row[f"Year{year}"] = float(record.year == year)
    row["MTG.ORIG.AMT"] = record.original_principal / principal_unit
    return row


def build_prospectus_features(
    records: list[SecurityRecord], principal_unit: float = PRINCIPAL_UNIT
) -> dict[str, float]:
    """The 13 composition columns for one prospectus."""
    if not records:
        raise ValueError("a prospectus needs at least one security")
    n = len(records)
    counts = {c: 0 for c in ("A", "M", "B")}
    vols = {c: 0.0 for c in ("A", "M", "B")}
    for rec in records:
        counts[rec.security_class] += 1
        vols[rec.security_class] += rec.original_principal
    total_vol = sum(vols.values())
    if total_vol == 0:
        warnings.warn("prospectus has zero total principal; volume fractions set to 0")
    row: dict[str, float] = {}
    for c in ("A", "M", "B"):
        row[f"Count{c}"] = float(counts[c])
    for c in ("A", "M", "B"):
        row[f"Frac{c}"] = counts[c] / n
    for c in ("A", "M", "B"):
        row[f"Vol{c}"] = vols[c] / principal_unit
    for c in ("A", "M", "B"):
        row[f"VolFrac{c}"] = vols[c] / total_vol if total_vol > 0 else 0.0
    row["HasSSUP"] = float(any("SSUP" in rec.flags for rec in records))
    return row


def attach_topic_indicator(weights, k: int) -> dict[str, float]:
    """One-hot of the largest topic weight; ties go to the lowest index."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ValueError(f"expected {k} weights, got shape {w.shape}")
    best = int(np.argmax(w))
    return {f"Topic{j + 1}": float(j == best) for j in range(k)}


TIERS = ("security", "prospectus", "comprehensive")


@dataclass
class FeatureMatrix:
    row_ids: list[str]
    columns: list[str]
    values: np.ndarray
    manifest: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (len(self.row_ids), len(self.columns)):
            raise ValueError("values shape does not match row/column labels")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column names")

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


def _column_meta(name: str, tier: str) -> dict:
    if name.startswith("MIR_"):
        return {"tier": tier, "type": "binary", "group": "mir"}
    if name.startswith("Year"):
        return {"tier": tier, "type": "binary", "group": "year"}
    if name.startswith("Topic"):
        return {"tier": tier, "type": "binary", "group": "topic"}
    if name in ("IsA", "IsB"):
        return {"tier": tier, "type": "binary", "group": "class"}
    if name == "MTG.ORIG.AMT":
        return {"tier": tier, "type": "continuous", "group": "amount"}
    if name.startswith("Count") or (name.startswith("Vol") and not name.startswith("VolFrac")):
        return {"tier": tier, "type": "continuous", "group": "composition"}
    if name.startswith("VolFrac") or name.startswith("Frac"):
        return {"tier": tier, "type": "fraction", "group": "composition"}
    if name == "HasSSUP":
        return {"tier": tier, "type": "binary", "group": "composition"}
    return {"tier": tier, "type": "binary", "group": "flag"}


def assemble_matrix(
    records: list[SecurityRecord],
    prospectus_fragments: dict[str, dict[str, float]] | None,
    topic_fragments: dict[str, dict[str, float]] | None,
    tier: str,
    flag_registry: tuple[str, ...] = DEFAULT_FLAG_REGISTRY,
    years: tuple[int, ...] = DEFAULT_YEARS,
    baseline_year: int = BASELINE_YEAR,
    principal_unit: float = PRINCIPAL_UNIT,
) -> FeatureMatrix:
    """Stack per-security rows for the requested tier.

    ``prospectus_fragments`` / ``topic_fragments`` are keyed by prospectus
    id and required from the prospectus / comprehensive tier up.
    """
    if tier not in TIERS:
        raise ValueError(f"tier must be one of {TIERS}")
    if not records:
        raise ValueError("no security records")
    rows = []
    for rec in records:
        row = build_security_features(rec, flag_registry, years, baseline_year, principal_unit)
        if tier in ("prospectus", "comprehensive"):
            if not prospectus_fragments or rec.prospectus_id not in prospectus_fragments:
                raise ValueError(f"no prospectus features for {rec.prospectus_id!r}")
            row.update(prospectus_fragments[rec.prospectus_id])
        if tier == "comprehensive":
            if not topic_fragments or rec.prospectus_id not in topic_fragments:
                raise ValueError(f"no topic features for {rec.prospectus_id!r}")
            row.update(topic_fragments[rec.prospectus_id])
        rows.append(row)
    columns = list(rows[0].keys())
    values = np.array([[row[c] for c in columns] for row in rows], dtype=float)
    manifest: dict[str, dict] = {}
    n_sec = len(build_security_features(records[0], flag_registry, years, baseline_year, principal_unit))
    for i, name in enumerate(columns):
        col_tier = "security" if i < n_sec else ("topic" if name.startswith("Topic") else "prospectus")
        manifest[name] = _column_meta(name, col_tier)
    return FeatureMatrix(
        row_ids=[r.id for r in records], columns=columns, values=values, manifest=manifest
    )


# -- csv / manifest interfaces ------------------------------------------------

def write_matrix_csv(matrix: FeatureMatrix, path, manifest_path=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["security_id"] + matrix.columns)
        for rid, row in zip(matrix.row_ids, matrix.values):
            writer.writerow([rid] + [repr(float(v)) for v in row])
    if manifest_path is not None:
        payload = {
            "version": 1,
            "columns": [{"name": c, **matrix.manifest.get(c, {})} for c in matrix.columns],
        }
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_matrix_csv(path, manifest_path=None) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        columns = header[1:]
        row_ids, rows = [], []
        for row in reader:
            row_ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    manifest = {}
    if manifest_path is not None:
        with open(manifest_path, encoding="utf-8") as fh:
            payload = json.load(fh)
        manifest = {c.pop("name"): c for c in payload["columns"]}
    return FeatureMatrix(
        row_ids=row_ids, columns=columns, values=np.array(rows, dtype=float), manifest=manifest
    )


def read_securities_csv(path) -> list[SecurityRecord]:
    """Rows: security_id, prospectus_id, class, year, mir, flags ('|' separated), original_principal."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            flags = {f for f in row.get("flags", "").split("|") if f}
            records.append(
                SecurityRecord(
                    id=row["security_id"],
                    prospectus_id=row["prospectus_id"],
                    security_class=row["class"],
                    year=int(row["year"]),
                    mir_raw=row.get("mir") or None,
                    flags=flags,
                    original_principal=float(row["original_principal"]),
                )
            )
    return records


def write_securities_csv(records: list[SecurityRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["security_id", "prospectus_id", "class", "year", "mir", "flags", "original_principal"]
        )
        for rec in records:
            writer.writerow(
                [
                    rec.id,
                    rec.prospectus_id,
                    rec.security_class,
                    rec.year,
                    rec.mir_raw or "",
                    "|".join(sorted(rec.flags)),
                    repr(float(rec.original_principal)),
                ]
            )
