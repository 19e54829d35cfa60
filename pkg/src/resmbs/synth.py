"""Seeded synthetic data with planted ground truth.

One generator stream produces, in order: community-tagged documents over
annual slices, tranche-structured security records per prospectus, and
payment summaries whose labels follow a planted logistic model. Every
recovery test in the suite reads its truth from here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .corpus import TimeSlicedCorpus, build_corpus, write_jsonl
from .errors import ConfigError
from .features import SecurityRecord, write_securities_csv
from .performance import PaymentSummary, PerfThresholds, default_thresholds
from .toxicity import NON_TOXIC

SUPPORT_ROLES = ("issuer", "originator", "servicer", "trustee", "depositor", "seller")

#: flags sampled as background noise on any security
NOISE_FLAGS = ("OC", "SEQ", "CPT", "FLT", "PT", "SUB", "NAS", "EXE", "SC", "Z", "RTL", "AD")

MIR_POOLS = {
    "A": ("Aaa", "Aa1", "Aa2"),
    "M": ("A2", "Baa2", "Ba1"),
    "B": ("Ba3", "B2", "Caa1"),
}


@dataclass
class SynthConfig:
    seed: int
    n_communities: int = 6
    docs_per_community: int = 40
    years: tuple[int, int] = (2002, 2007)
    pairs_per_community: int = 12
    tokens_per_doc: int = 12
    leakage: float = 0.0
    securities_per_doc: tuple[int, int] = (4, 10)
    ssup_rate: float = 0.3
    flag_noise_rate: float = 0.03
    principal_range: tuple[float, float] = (2e7, 4e8)
    mir_null_rate: float = 0.04
    class_mixes: list[tuple[float, float, float]] | None = None  # per community
    year_profiles: list[list[float]] | None = None  # per community, over years
    intercept: float = -1.0
    beta_class: dict[str, float] = field(
        default_factory=lambda: {"A": -1.0, "M": 0.5, "B": 1.0}
    )
    beta_year: dict[int, float] = field(default_factory=dict)
    beta_ssup: float = 0.0
    beta_has_ssup: float = 0.0  # prospectus-level effect of containing any SSUP security
    beta_topic: dict[int, float] = field(default_factory=dict)
    noise_sd: float = 0.0
    me_split: float = 0.6  # P(ME | not FE)
    community_toxicity: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_communities < 1 or self.docs_per_community < 1:
            raise ConfigError("need at least one community and one document each")
        if self.pairs_per_community < 1:
            raise ConfigError("community support sets must be non-empty")
        if not (0.0 <= self.leakage <= 1.0):
            raise ConfigError("leakage must be in [0, 1]")
        if self.class_mixes is not None:
            for mix in self.class_mixes:
                if abs(sum(mix) - 1.0) > 1e-9 or min(mix) < 0:
                    raise ConfigError(f"class mix must lie on the simplex: {mix}")

    def year_list(self) -> list[int]:
        return list(range(self.years[0], self.years[1] + 1))


@dataclass
class GroundTruth:
    doc_community: dict[str, int] = field(default_factory=dict)
    security_community: dict[str, int] = field(default_factory=dict)
    security_label: dict[str, str] = field(default_factory=dict)
    security_logit: dict[str, float] = field(default_factory=dict)
    community_toxicity: dict[int, str] = field(default_factory=dict)

    def to_json(self, path) -> None:
        payload = {
            "version": 1,
            "doc_community": dict(sorted(self.doc_community.items())),
            "security_community": dict(sorted(self.security_community.items())),
            "security_label": dict(sorted(self.security_label.items())),
            "security_logit": dict(sorted(self.security_logit.items())),
            "community_toxicity": {str(k): v for k, v in sorted(self.community_toxicity.items())},
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "GroundTruth":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            doc_community=payload["doc_community"],
            security_community=payload["security_community"],
            security_label=payload["security_label"],
            security_logit={k: float(v) for k, v in payload["security_logit"].items()},
            community_toxicity={int(k): v for k, v in payload["community_toxicity"].items()},
        )


def community_support(config: SynthConfig, community: int) -> list[tuple[str, str]]:
    """Deterministic disjoint support: institutions are community-scoped."""
    n_fis = max(1, math.ceil(config.pairs_per_community / 3))
    pairs = []
    for j in range(config.pairs_per_community):
        role = SUPPORT_ROLES[j % len(SUPPORT_ROLES)]
        fi = f"C{community:02d}F{j % n_fis:02d}"
        pairs.append((role, fi))
    return sorted(set(pairs))


def _doc_plans(config: SynthConfig, rng: np.random.Generator):
    years = config.year_list()
    supports = [community_support(config, c) for c in range(config.n_communities)]
    mixes = config.class_mixes
    profiles = config.year_profiles
    plans = []
    specs = []
    for c in range(config.n_communities):
        mix = tuple(mixes[c]) if mixes else tuple(rng.dirichlet((5.0, 3.0, 2.0)))
        profile = np.asarray(profiles[c], dtype=float) if profiles else rng.dirichlet(np.ones(len(years)))
        profile = profile / profile.sum()
        specs.append({"mix": mix, "profile": profile, "support": supports[c]})
        for i in range(config.docs_per_community):
            year = int(rng.choice(years, p=profile))
            counts: dict[tuple[str, str], int] = {}
            for _ in range(config.tokens_per_doc):
                if config.leakage > 0 and rng.random() < config.leakage:
                    other = int(rng.integers(config.n_communities - 1))
                    if other >= c:
                        other += 1
                    support = supports[other] if config.n_communities > 1 else supports[c]
                else:
                    support = supports[c]
                pair = support[int(rng.integers(len(support)))]
                counts[pair] = counts.get(pair, 0) + 1
            plans.append(
                {
                    "id": f"P{c:02d}_{i:04d}",
                    "year": year,
                    "pairs": [
                        {"role": r, "fi": f, "count": n}
                        for (r, f), n in sorted(counts.items())
                    ],
                    "community": c,
                }
            )
    return plans, specs


def generate_corpus(config: SynthConfig, rng: np.random.Generator | None = None):
    """Community-planted corpus plus the document -> community truth."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    plans, _ = _doc_plans(config, rng)
    truth = GroundTruth(
        doc_community={p["id"]: p["community"] for p in plans},
        community_toxicity={
            c: config.community_toxicity.get(c, NON_TOXIC)
            for c in range(config.n_communities)
        },
    )
    corpus = build_corpus(
        ({k: p[k] for k in ("id", "year", "pairs")} for p in plans),
        year_range=config.years,
    )
    return corpus, truth


@dataclass
class ProspectusTemplate:
    prospectus_id: str
    year: int
    n_securities: int
    ssup_rate: float = 0.3
    flag_noise_rate: float = 0.03
    principal_range: tuple[float, float] = (2e7, 4e8)
    mir_null_rate: float = 0.04


def largest_remainder_counts(mix, n: int) -> tuple[int, int, int]:
    raw = [m * n for m in mix]
    base = [int(math.floor(r)) for r in raw]
    order = sorted(range(3), key=lambda i: (-(raw[i] - base[i]), i))
    for j in range(n - sum(base)):
        base[order[j % 3]] += 1
    return tuple(base)


def waterfall_compose(
    template: ProspectusTemplate,
    class_mix,
    rng: np.random.Generator | int,
) -> list[SecurityRecord]:
    """Securities for one prospectus, ordered senior (A) to subordinate (B).

    Class counts follow largest-remainder rounding of the mix; the
    senior-subordinated flag can only land on A-class records.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    if abs(sum(class_mix) - 1.0) > 1e-9 or min(class_mix) < 0:
        raise ConfigError(f"class mix must lie on the simplex: {class_mix}")
    counts = largest_remainder_counts(class_mix, template.n_securities)
    records = []
    idx = 0
    for cls, n_cls in zip(("A", "M", "B"), counts):
        for _ in range(n_cls):
            flags = set()
            if cls == "A" and rng.random() < template.ssup_rate:
                flags.add("SSUP")
            for flag in NOISE_FLAGS:
                if rng.random() < template.flag_noise_rate:
                    flags.add(flag)
            mir = (
                ""
                if rng.random() < template.mir_null_rate
                else MIR_POOLS[cls][int(rng.integers(len(MIR_POOLS[cls])))]
            )
            records.append(
                SecurityRecord(
                    id=f"{template.prospectus_id}S{idx:03d}",
                    prospectus_id=template.prospectus_id,
                    security_class=cls,
                    year=template.year,
                    mir_raw=mir or None,
                    flags=flags,
                    original_principal=float(
                        rng.uniform(*template.principal_range)
                    ),
                )
            )
            idx += 1
    return records


def generate_outcomes(
    records: list[SecurityRecord],
    truth: GroundTruth,
    config: SynthConfig,
    rng: np.random.Generator | None = None,
    thresholds: PerfThresholds | None = None,
) -> dict[str, PaymentSummary]:
    """Planted-logit payment summaries; labels land exactly in their band."""
    rng = rng if rng is not None else np.random.default_rng(config.seed + 1)
    thresholds = thresholds or default_thresholds()
    has_ssup: dict[str, bool] = {}
    for rec in records:
        has_ssup[rec.prospectus_id] = has_ssup.get(rec.prospectus_id, False) or (
            "SSUP" in rec.flags
        )
    summaries: dict[str, PaymentSummary] = {}
    for rec in records:
        community = truth.security_community[rec.id]
        logit = (
            config.intercept
            + config.beta_class.get(rec.security_class, 0.0)
            + config.beta_year.get(rec.year, 0.0)
            + config.beta_ssup * ("SSUP" in rec.flags)
            + config.beta_has_ssup * has_ssup[rec.prospectus_id]
            + config.beta_topic.get(community, 0.0)
        )
        if config.noise_sd > 0:
            logit += float(rng.normal(0.0, config.noise_sd))
        fe = bool(rng.random() < expit(logit))
        if fe:
            label = "FE"
        else:
            label = "ME" if rng.random() < config.me_split else "NME"
        t = thresholds.for_class(rec.security_class)
        if label == "FE":
            worst = t.fe_min_bps * (1.0 + rng.random())
        elif label == "ME":
            worst = t.me_max_bps * rng.random()
        else:
            u = max(float(rng.random()), 1e-12)
            worst = t.me_max_bps + (t.fe_min_bps - t.me_max_bps) * u
        other = worst * rng.random()
        if rng.random() < 0.5:
            summary = PaymentSummary(worst, other)
        else:
            summary = PaymentSummary(other, worst)
        summaries[rec.id] = summary
        truth.security_label[rec.id] = label
        truth.security_logit[rec.id] = float(logit)
    return summaries


@dataclass
class SynthDataset:
    corpus: TimeSlicedCorpus
    records: list[SecurityRecord]
    payments: dict[str, PaymentSummary]
    truth: GroundTruth

    def ssup_flags(self) -> dict[str, bool]:
        return {r.id: "SSUP" in r.flags for r in self.records}

    def records_by_prospectus(self) -> dict[str, list[SecurityRecord]]:
        out: dict[str, list[SecurityRecord]] = {}
        for rec in self.records:
            out.setdefault(rec.prospectus_id, []).append(rec)
        return out

    def write_files(self, out_dir) -> dict[str, str]:
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": out / "corpus.jsonl",
            "securities": out / "securities.csv",
            "payments": out / "payments.csv",
            "ground_truth": out / "ground_truth.json",
        }
        write_jsonl(self.corpus, paths["corpus"])
        write_securities_csv(self.records, paths["securities"])
        _write_payments_csv(self.records, self.payments, paths["payments"])
        self.truth.to_json(paths["ground_truth"])
        return {k: str(v) for k, v in paths.items()}


def _write_payments_csv(records, payments, path) -> None:
    import csv

    by_id = {r.id: r for r in records}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["security_id", "class", "principal_shortfall_bps", "other_shortfall_loss_bps"]
        )
        for sid in sorted(payments):
            s = payments[sid]
            writer.writerow(
                [
                    sid,
                    by_id[sid].security_class,
                    repr(float(s.principal_shortfall_bps)),
                    repr(float(s.other_shortfall_loss_bps)),
                ]
            )


def planted_evidence(config: SynthConfig) -> dict:
    """Institution evidence consistent with the planted community toxicity.

    Toxic communities get two failed key-role institutions, partial ones a
    single bailout recipient; everything else stays unflagged (absent).
    """
    from .toxicity import PARTIAL, TOXIC, InstitutionEvidence

    evidence = {}
    for c, tag in config.community_toxicity.items():
        key_fis = sorted(
            {fi for role, fi in community_support(config, c) if role in ("issuer", "originator")}
        )
        if tag == TOXIC:
            for fi in key_fis[:2]:
                evidence[fi] = InstitutionEvidence(
                    fi=fi, bankruptcy_or_fines=True, evidence_notes="planted failure"
                )
        elif tag == PARTIAL:
            for fi in key_fis[:1]:
                evidence[fi] = InstitutionEvidence(
                    fi=fi, tarp_funds=True, evidence_notes="planted bailout"
                )
    return evidence


def generate_dataset(config: SynthConfig) -> SynthDataset:
    """Corpus, securities, and payments from one seeded stream."""
    rng = np.random.default_rng(config.seed)
    plans, specs = _doc_plans(config, rng)
    truth = GroundTruth(
        doc_community={p["id"]: p["community"] for p in plans},
        community_toxicity={
            c: config.community_toxicity.get(c, NON_TOXIC)
            for c in range(config.n_communities)
        },
    )
    records: list[SecurityRecord] = []
    lo, hi = config.securities_per_doc
    doc_records = []
    for plan in plans:
        template = ProspectusTemplate(
            prospectus_id=plan["id"],
            year=plan["year"],
            n_securities=int(rng.integers(lo, hi + 1)),
            ssup_rate=config.ssup_rate,
            flag_noise_rate=config.flag_noise_rate,
            principal_range=config.principal_range,
            mir_null_rate=config.mir_null_rate,
        )
        mix = specs[plan["community"]]["mix"]
        recs = waterfall_compose(template, mix, rng)
        for rec in recs:
            truth.security_community[rec.id] = plan["community"]
        records.extend(recs)
        doc_records.append(
            {
                "id": plan["id"],
                "year": plan["year"],
                "pairs": plan["pairs"],
                "security_ids": [r.id for r in recs],
            }
        )
    corpus = build_corpus(doc_records, year_range=config.years)
    payments = generate_outcomes(records, truth, config, rng=rng)
    return SynthDataset(corpus=corpus, records=records, payments=payments, truth=truth)
