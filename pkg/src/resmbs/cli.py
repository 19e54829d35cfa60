"""Pipeline orchestration and report artifacts.

Stages: synth, extract, corpus, topics, label, features, fit, toxicity,
report, all. Every stage reads/writes files under --out, records a run
manifest, and is byte-reproducible from (inputs, config, seed) — the
manifest itself carries wall-clock durations and is the one artifact
excluded from reproducibility comparisons.

Exit codes: 0 success, 2 configuration error, 3 missing dependency,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import extraction, features, fixtures, lasso, performance, synth, toxicity
from . import topics as topics_mod
from .errors import ConfigError, MissingDependencyError, NumericFailureError, ResmbsError

STAGES = (
    "synth", "extract", "corpus", "topics", "label", "features", "fit",
    "toxicity", "report", "all",
)
ALL_STAGES = ("synth", "corpus", "topics", "label", "features", "fit", "toxicity", "report")

DEFAULT_CONFIG: dict = {
    "version": 1,
    "seed": 7,
    "corpus": {
        "min_fi_docs": 20,
        "min_pairs": 5,
        "weight_roles": ["issuer", "originator"],
        "weight_multiplier": 2,
    },
    "synth": {
        "n_communities": 6,
        "docs_per_community": 40,
        "years": [2002, 2007],
        "pairs_per_community": 12,
        "tokens_per_doc": 12,
        "leakage": 0.0,
        "securities_per_doc": [4, 8],
        "ssup_rate": 0.3,
        "flag_noise_rate": 0.03,
        "intercept": -1.0,
        "beta_class": {"A": -1.0, "M": 0.5, "B": 1.0},
        "beta_ssup": 1.2,
        "beta_topic": {"0": 1.0},
        "beta_year": {"2002": -0.8, "2003": -0.4, "2006": 0.8, "2007": 1.0},
        "noise_sd": 0.3,
        "community_toxicity": {"0": "toxic", "1": "partial"},
    },
    "topics": {
        "k": 6,
        "alpha": 0.1,
        "iterations": 40,
        "chain_var": 0.75,
        "chain_var_slow": 0.005,
        "convergence_tol": 1e-5,
        "n_init": 2,
    },
    "lasso": {
        "n_lambda": 25,
        "lambda_decades": 2.5,
        "n_folds": 10,
        "max_iter": 400,
        "tol": 1e-5,
        "lambda_grid": None,
    },
    "thresholds": {"A": [100.0, 2500.0], "M": [500.0, 5000.0], "B": [500.0, 5000.0]},
    "report": {"sankey_terms": 8},
    "toxicity": {"min_prospectuses": 5, "top_terms": 10, "evidence": None},
    "flag_registry": None,
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    cfg = DEFAULT_CONFIG
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            with open(p, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
        if file_cfg.get("version", 1) != 1:
            raise ConfigError(f"unsupported config version: {file_cfg.get('version')}")
        cfg = _deep_merge(cfg, file_cfg)
    if overrides:
        cfg = _deep_merge(cfg, overrides)
    return cfg


def _synth_config(cfg: dict) -> synth.SynthConfig:
    s = cfg["synth"]
    try:
        return synth.SynthConfig(
            seed=cfg["seed"],
            n_communities=s["n_communities"],
            docs_per_community=s["docs_per_community"],
            years=tuple(s["years"]),
            pairs_per_community=s["pairs_per_community"],
            tokens_per_doc=s["tokens_per_doc"],
            leakage=s["leakage"],
            securities_per_doc=tuple(s["securities_per_doc"]),
            ssup_rate=s["ssup_rate"],
            flag_noise_rate=s["flag_noise_rate"],
            intercept=s["intercept"],
            beta_class={k: float(v) for k, v in s["beta_class"].items()},
            beta_year={int(k): float(v) for k, v in s["beta_year"].items()},
            beta_ssup=s["beta_ssup"],
            beta_topic={int(k): float(v) for k, v in s["beta_topic"].items()},
            noise_sd=s["noise_sd"],
            community_toxicity={int(k): v for k, v in s["community_toxicity"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synth config: {exc}") from exc


def _topics_config(cfg: dict, chain_var: float | None = None) -> topics_mod.TopicModelConfig:
    t = cfg["topics"]
    return topics_mod.TopicModelConfig(
        k=t["k"],
        alpha=t["alpha"],
        chain_var=chain_var if chain_var is not None else t["chain_var"],
        iterations=t["iterations"],
        seed=cfg["seed"],
        convergence_tol=t["convergence_tol"],
        n_init=t.get("n_init", 1),
    )


def _lasso_config(cfg: dict) -> lasso.LassoConfig:
    l = cfg["lasso"]
    return lasso.LassoConfig(
        lambda_grid=l.get("lambda_grid"),
        n_lambda=l["n_lambda"],
        lambda_decades=l["lambda_decades"],
        n_folds=l["n_folds"],
        max_iter=l["max_iter"],
        tol=l["tol"],
        seed=cfg["seed"],
    )


def _thresholds(cfg: dict) -> performance.PerfThresholds:
    try:
        return performance.PerfThresholds(
            per_class={
                cls: performance.ClassThresholds(me_max_bps=float(v[0]), fe_min_bps=float(v[1]))
                for cls, v in cfg["thresholds"].items()
            }
        )
    except (ValueError, IndexError, KeyError) as exc:
        raise ConfigError(f"invalid thresholds: {exc}") from exc


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingDependencyError(path, stage=stage)
    return path


def _out(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- stages -------------------------------------------------------------------

def stage_synth(cfg: dict) -> dict:
    out = _out(cfg)
    dataset = synth.generate_dataset(_synth_config(cfg))
    paths = dataset.write_files(out)
    evidence = synth.planted_evidence(_synth_config(cfg))
    evidence_path = out / "evidence.csv"
    toxicity.write_evidence_csv(evidence, evidence_path)
    paths["evidence"] = str(evidence_path)
    return {"inputs": [], "outputs": sorted(paths.values())}


def stage_extract(cfg: dict) -> dict:
    out = _out(cfg)
    docs_dir = cfg.get("extract", {}).get("docs_dir")
    if docs_dir is None:
        docs_dir = out / "docs"
        if not Path(docs_dir).exists():
            fixtures.write_fixture_documents(docs_dir)
    docs_dir = _require(Path(docs_dir), "extract")
    roots = cfg.get("extract", {}).get("roots_csv")
    suffixes = cfg.get("extract", {}).get("suffixes")
    if roots and suffixes:
        dictionary = extraction.load_dictionary(_require(Path(roots), "extract"),
                                                _require(Path(suffixes), "extract"))
    else:
        dictionary = fixtures.default_dictionary()
    doc_pairs = {}
    diagnostics = []
    inputs = []
    for path in sorted(Path(docs_dir).glob("*.txt")):
        inputs.append(str(path))
        text = path.read_text(encoding="utf-8")
        pairs, diag = extraction.extract_pairs(text, dictionary, doc_id=path.stem)
        doc_pairs[path.stem] = pairs
        diagnostics.append(diag)
    if not doc_pairs:
        raise MissingDependencyError(f"{docs_dir}/*.txt", stage="extract")
    pairs_path = out / "pairs.jsonl"
    diag_path = out / "extraction_diagnostics.csv"
    extraction.write_pairs_jsonl(doc_pairs, pairs_path)
    extraction.write_diagnostics_csv(diagnostics, diag_path)
    return {"inputs": inputs, "outputs": [str(pairs_path), str(diag_path)]}


def stage_corpus(cfg: dict) -> dict:
    out = _out(cfg)
    src = _require(out / "corpus.jsonl", "corpus")
    c = cfg["corpus"]
    years = tuple(cfg["synth"]["years"])
    corpus = corpus_mod.read_jsonl(src, year_range=years)
    corpus = corpus_mod.filter_corpus(
        corpus, min_fi_docs=c["min_fi_docs"], min_pairs=c["min_pairs"]
    )
    corpus = corpus_mod.weight_tokens(
        corpus, roles=frozenset(c["weight_roles"]), multiplier=c["weight_multiplier"]
    )
    prepared = out / "corpus_prepared.jsonl"
    vocab = out / "vocabulary.csv"
    corpus_mod.write_jsonl(corpus, prepared)
    corpus_mod.write_vocabulary_csv(corpus, vocab)
    return {"inputs": [str(src)], "outputs": [str(prepared), str(vocab)]}


def stage_topics(cfg: dict) -> dict:
    out = _out(cfg)
    src = _require(out / "corpus_prepared.jsonl", "topics")
    years = tuple(cfg["synth"]["years"])
    corpus = corpus_mod.read_jsonl(src, year_range=years)
    fast = topics_mod.fit_dtm(corpus, _topics_config(cfg))
    slow = topics_mod.fit_dtm(corpus, _topics_config(cfg, chain_var=cfg["topics"]["chain_var_slow"]))
    static = topics_mod.fit_lda(corpus, _topics_config(cfg))
    outputs = []
    for name, fit in (("dtm_fast", fast), ("dtm_slow", slow), ("lda", static)):
        path = out / f"{name}.json"
        topics_mod.save_fit(fit, path)
        outputs.append(str(path))
    labels = topics_mod.classify_dynamics(fast, static, slow)
    dyn_path = out / "dynamics.csv"
    with open(dyn_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic", "dynamics"])
        for k, label in enumerate(labels):
            writer.writerow([k + 1, label])
    outputs.append(str(dyn_path))
    return {"inputs": [str(src)], "outputs": outputs}


def stage_label(cfg: dict) -> dict:
    out = _out(cfg)
    payments_path = _require(out / "payments.csv", "label")
    securities_path = _require(out / "securities.csv", "label")
    thresholds = _thresholds(cfg)
    payments = performance.read_payments_csv(payments_path)
    records = features.read_securities_csv(securities_path)
    year_of = {r.id: r.year for r in records}
    labels = {
        sid: performance.label_security(cls, summary, thresholds)
        for sid, (cls, summary) in payments.items()
    }
    labels_path = out / "labels.csv"
    performance.write_labels_csv(labels, labels_path)
    rows = [
        {"year": year_of[sid], "class": payments[sid][0], "label": lab}
        for sid, lab in sorted(labels.items())
    ]
    by_both = performance.summarize_rates(rows, group_keys=("year", "class"))
    by_year = performance.summarize_rates(rows, group_keys=("year",))
    rates_path = out / "rates_by_year_class.csv"
    rates_year_path = out / "rates_by_year.csv"
    performance.write_rates_csv(_round_rates(by_both), rates_path)
    performance.write_rates_csv(_round_rates(by_year), rates_year_path)
    return {
        "inputs": [str(payments_path), str(securities_path)],
        "outputs": [str(labels_path), str(rates_path), str(rates_year_path)],
    }


def _round_rates(rows):
    out = []
    for row in rows:
        row = dict(row)
        row["fe_rate"] = repr(round(row["fe_rate"], 6))
        row["fne_rate"] = repr(round(row["fne_rate"], 6))
        out.append(row)
    return out


def _topic_fragments(fit, corpus, k: int):
    """Per-prospectus dominant-topic one-hots from a fitted model."""
    row_of = {doc_id: i for i, doc_id in enumerate(fit.doc_ids)}
    fragments = {}
    for doc in corpus.docs():
        if doc.id in row_of:
            weights = fit.doc_topic[row_of[doc.id]]
        else:
            weights = topics_mod.doc_topics(fit, doc)
        fragments[doc.id] = features.attach_topic_indicator(weights, k)
    return fragments


def stage_features(cfg: dict) -> dict:
    out = _out(cfg)
    securities_path = _require(out / "securities.csv", "features")
    corpus_path = _require(out / "corpus_prepared.jsonl", "features")
    fit_path_ = _require(out / "dtm_fast.json", "features")
    years = tuple(cfg["synth"]["years"])
    registry = features.DEFAULT_FLAG_REGISTRY
    if cfg.get("flag_registry"):
        registry = features.load_flag_registry(_require(Path(cfg["flag_registry"]), "features"))
    records = features.read_securities_csv(securities_path)
    corpus = corpus_mod.read_jsonl(corpus_path, year_range=years)
    fit = topics_mod.load_fit(fit_path_)

    # the modeling universe is the prepared corpus: securities whose
    # prospectus was filtered out are excluded from every tier
    kept_prospectuses = {doc.id for doc in corpus.docs()}
    records = [r for r in records if r.prospectus_id in kept_prospectuses]
    if not records:
        raise NumericFailureError("no securities remain after corpus filtering")

    by_prosp: dict[str, list] = {}
    for rec in records:
        by_prosp.setdefault(rec.prospectus_id, []).append(rec)
    prosp_fragments = {pid: features.build_prospectus_features(rs) for pid, rs in by_prosp.items()}
    topic_fragments = _topic_fragments(fit, corpus, fit.k)

    outputs = []
    for tier in features.TIERS:
        matrix = features.assemble_matrix(
            records,
            prosp_fragments if tier != "security" else None,
            topic_fragments if tier == "comprehensive" else None,
            tier=tier,
            flag_registry=registry,
            years=tuple(range(years[0], years[1] + 1)),
        )
        csv_path = out / f"features_{tier}.csv"
        man_path = out / f"features_{tier}.manifest.json"
        features.write_matrix_csv(matrix, csv_path, man_path)
        outputs += [str(csv_path), str(man_path)]
    return {
        "inputs": [str(securities_path), str(corpus_path), str(fit_path_)],
        "outputs": outputs,
    }


def _fit_one(matrix, y, groups, config) -> tuple[lasso.LassoFit, lasso.CvResult]:
    continuous = np.array(
        [matrix.manifest.get(c, {}).get("type") == "continuous" for c in matrix.columns]
    )
    cv = lasso.cv_select(matrix.values, y, groups, config, columns=matrix.columns,
                         continuous=continuous)
    grid = [l for l in cv.lambda_grid if l >= cv.chosen_lambda]
    path_cfg = lasso.LassoConfig(
        lambda_grid=grid, n_folds=config.n_folds, max_iter=config.max_iter,
        tol=config.tol, seed=config.seed,
    )
    fits = lasso.fit_path(matrix.values, y, path_cfg, columns=matrix.columns,
                          continuous=continuous)
    return fits[-1], cv


def stage_fit(cfg: dict) -> dict:
    out = _out(cfg)
    labels_path = _require(out / "labels.csv", "fit")
    securities_path = _require(out / "securities.csv", "fit")
    inputs = [str(labels_path), str(securities_path)]
    labels = performance.read_labels_csv(labels_path)
    records = {r.id: r for r in features.read_securities_csv(securities_path)}
    config = _lasso_config(cfg)

    outputs = []
    metrics_rows = []
    cv_rows = []
    for tier in features.TIERS:
        csv_path = _require(out / f"features_{tier}.csv", "fit")
        man_path = _require(out / f"features_{tier}.manifest.json", "fit")
        inputs += [str(csv_path), str(man_path)]
        matrix = features.read_matrix_csv(csv_path, man_path)
        groups = [records[sid].prospectus_id for sid in matrix.row_ids]
        classes = np.array([records[sid].security_class for sid in matrix.row_ids])
        fits: dict[str, lasso.LassoFit] = {}
        for outcome in ("fe", "fne"):
            y = np.array(
                [getattr(labels[sid], outcome) for sid in matrix.row_ids], dtype=float
            )
            fit, cv = _fit_one(matrix, y, groups, config)
            fits[outcome] = fit
            cv_rows.append(
                {
                    "tier": tier,
                    "outcome": outcome.upper(),
                    "chosen_lambda": repr(float(cv.chosen_lambda)),
                    "cv_loss": repr(float(cv.mean_loss[cv.chosen_index])),
                    "n_retained": len(fit.coefficients),
                }
            )
            oof_label = (cv.oof_prob[:, cv.chosen_index] >= 0.5).astype(int)
            for scope in ("all", "A", "M", "B"):
                mask = np.ones(len(y), dtype=bool) if scope == "all" else classes == scope
                if not mask.any():
                    continue
                m = lasso.metrics(y[mask].astype(int), oof_label[mask])
                metrics_rows.append(
                    {
                        "scope": scope,
                        "tier": tier,
                        "outcome": outcome.upper(),
                        "accuracy": repr(round(m.accuracy, 6)),
                        "f1": repr(round(m.f1, 6)),
                        "precision": repr(round(m.precision, 6)),
                        "recall": repr(round(m.recall, 6)),
                    }
                )
        fits_path = out / f"fits_{tier}.json"
        lasso.save_fits(fits, fits_path)
        coef_path = out / f"coef_{tier}.csv"
        _write_coef_csv(fits["fe"], fits["fne"], coef_path)
        outputs += [str(fits_path), str(coef_path)]

    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["scope", "tier", "outcome", "accuracy", "f1", "precision", "recall"]
        )
        writer.writeheader()
        for row in metrics_rows:
            writer.writerow(row)
    cv_path = out / "cv_summary.csv"
    with open(cv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["tier", "outcome", "chosen_lambda", "cv_loss", "n_retained"]
        )
        writer.writeheader()
        for row in cv_rows:
            writer.writerow(row)
    outputs += [str(metrics_path), str(cv_path)]
    return {"inputs": inputs, "outputs": outputs}


def _write_coef_csv(fe_fit: lasso.LassoFit, fne_fit: lasso.LassoFit, path) -> None:
    """Variable, FE, FNE; blank cells mark coefficients not retained.

    Values are full precision so parsing the file reconstructs the sparse
    fits exactly; the rendered report rounds for display instead.
    """
    rows = [("Intercept", repr(fe_fit.intercept), repr(fne_fit.intercept))]
    for col in fe_fit.columns:
        fe_v = fe_fit.coefficients.get(col)
        fne_v = fne_fit.coefficients.get(col)
        if fe_v is None and fne_v is None:
            continue
        rows.append((col, "" if fe_v is None else repr(fe_v), "" if fne_v is None else repr(fne_v)))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "fe", "fne"])
        writer.writerows(rows)


def read_coef_csv(path) -> dict[str, dict[str, float]]:
    """Inverse of the coefficient table: {outcome: {variable: value}}."""
    out = {"fe": {}, "fne": {}}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            for outcome in ("fe", "fne"):
                if row[outcome] != "":
                    out[outcome][row["variable"]] = float(row[outcome])
    return out


def stage_toxicity(cfg: dict) -> dict:
    out = _out(cfg)
    fit_path_ = _require(out / "dtm_fast.json", "toxicity")
    fits_path = _require(out / "fits_comprehensive.json", "toxicity")
    evidence_path = cfg["toxicity"].get("evidence")
    if evidence_path is None:
        bundled = out / "evidence.csv"
        evidence_path = bundled if bundled.exists() else fixtures.toxicity_evidence_path()
    evidence_path = _require(Path(evidence_path), "toxicity")

    fit = topics_mod.load_fit(fit_path_)
    fits = lasso.load_fits(fits_path)
    evidence = toxicity.read_evidence_csv(evidence_path)
    inst_labels = toxicity.label_institutions(evidence)

    counts: dict[int, int] = {}
    for row in fit.doc_topic:
        idx = topics_mod.dominant_topic(row).index
        counts[idx] = counts.get(idx, 0) + 1
    community_labels = toxicity.label_communities(
        fit,
        inst_labels,
        prospectus_counts=counts,
        top_n=cfg["toxicity"]["top_terms"],
        min_prospectuses=cfg["toxicity"]["min_prospectuses"],
    )
    rows = toxicity.compare_signs(community_labels, fits["fe"], fits["fne"])
    inputs = [str(fit_path_), str(fits_path), str(evidence_path)]
    dynamics_path = out / "dynamics.csv"
    if dynamics_path.exists():
        inputs.append(str(dynamics_path))
        with open(dynamics_path, newline="", encoding="utf-8") as fh:
            dyn = {int(r["topic"]): r["dynamics"] for r in csv.DictReader(fh)}
        for row in rows:
            row["dynamics"] = dyn.get(row["topic"], "")
    report_path = out / "toxicity.csv"
    toxicity.write_community_report_csv(rows, report_path)
    return {"inputs": inputs, "outputs": [str(report_path)]}


def stage_report(cfg: dict) -> dict:
    out = _out(cfg)
    fit_path_ = _require(out / "dtm_fast.json", "report")
    labels_path = _require(out / "labels.csv", "report")
    securities_path = _require(out / "securities.csv", "report")
    metrics_path = _require(out / "metrics.csv", "report")
    inputs = [str(fit_path_), str(labels_path), str(securities_path), str(metrics_path)]

    fit = topics_mod.load_fit(fit_path_)
    labels = performance.read_labels_csv(labels_path)
    records = features.read_securities_csv(securities_path)

    # per-topic performance over securities of prospectuses in the fit
    doc_topic_of = {
        doc_id: topics_mod.dominant_topic(fit.doc_topic[i]).index
        for i, doc_id in enumerate(fit.doc_ids)
    }
    dominant = {
        r.id: doc_topic_of[r.prospectus_id]
        for r in records
        if r.prospectus_id in doc_topic_of and r.id in labels
    }
    ssup = {r.id: "SSUP" in r.flags for r in records}
    perf = performance.topic_performance(dominant, labels, ssup)
    perf_path = out / "topic_performance.csv"
    with open(perf_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic", "n_securities", "fe_rate", "ssup_fraction"])
        topic_n = {t: sum(1 for v in dominant.values() if v == t) for t in perf}
        for topic, (fe_rate, ssup_frac) in perf.items():
            writer.writerow(
                [topic + 1, topic_n[topic], repr(round(fe_rate, 6)), repr(round(ssup_frac, 6))]
            )

    sankey_dir = out / "sankey"
    sankey_dir.mkdir(exist_ok=True)
    sankey_paths = []
    for k in range(fit.k):
        edges = topics_mod.export_sankey(fit, k, n_per_slice=cfg["report"]["sankey_terms"])
        path = sankey_dir / f"topic_{k + 1:02d}.csv"
        topics_mod.write_sankey_csv(edges, path)
        sankey_paths.append(str(path))

    report_path = out / "report.txt"
    _render_report(out, report_path)
    outputs = [str(perf_path), str(report_path)] + sankey_paths
    return {"inputs": inputs, "outputs": outputs}


def _render_report(out: Path, report_path: Path) -> None:
    """Human-readable summary; numbers at fixed 3-decimal precision."""
    lines = []

    def table(title, rows, headers):
        lines.append(title)
        lines.append("-" * len(title))
        widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
        lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
        for r in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
        lines.append("")

    def fmt(value):
        return f"{float(value):.3f}" if value != "" else ""

    metrics_file = out / "metrics.csv"
    if metrics_file.exists():
        with open(metrics_file, newline="", encoding="utf-8") as fh:
            rows = [
                (r["scope"], r["tier"], r["outcome"], fmt(r["accuracy"]), fmt(r["f1"]))
                for r in csv.DictReader(fh)
            ]
        table("Model metrics (out-of-fold)", rows, ["scope", "tier", "outcome", "accuracy", "f1"])

    for tier in features.TIERS:
        coef_file = out / f"coef_{tier}.csv"
        if coef_file.exists():
            with open(coef_file, newline="", encoding="utf-8") as fh:
                rows = [
                    (r["variable"], fmt(r["fe"]), fmt(r["fne"]))
                    for r in csv.DictReader(fh)
                ]
            table(f"Coefficients: {tier} tier", rows, ["variable", "fe", "fne"])

    for name, title in (
        ("rates_by_year_class.csv", "Failure rates by year and class"),
        ("topic_performance.csv", "Per-topic performance"),
        ("toxicity.csv", "Community toxicity vs model signs"),
        ("dynamics.csv", "Topic dynamics"),
    ):
        f = out / name
        if f.exists():
            with open(f, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                headers = next(reader)
                rows = [tuple(c if not _num(c) else f"{float(c):.3f}" for c in row) for row in reader]
            table(title, rows, headers)

    report_path.write_text("\n".join(lines), encoding="utf-8")


def _num(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return "." in cell or "e" in cell.lower()


STAGE_FUNCS = {
    "synth": stage_synth,
    "extract": stage_extract,
    "corpus": stage_corpus,
    "topics": stage_topics,
    "label": stage_label,
    "features": stage_features,
    "fit": stage_fit,
    "toxicity": stage_toxicity,
    "report": stage_report,
}


def run(stage: str, cfg: dict) -> dict:
    """Run a stage (or the whole pipeline) and write the run manifest."""
    if stage not in STAGES:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")
    names = ALL_STAGES if stage == "all" else (stage,)
    entries = []
    for name in names:
        started = time.perf_counter()
        result = STAGE_FUNCS[name](cfg)
        entries.append(
            {
                "stage": name,
                "inputs": result["inputs"],
                "outputs": result["outputs"],
                "duration_s": round(time.perf_counter() - started, 3),
            }
        )
    manifest = {"version": 1, "stage": stage, "seed": cfg["seed"], "stages": entries}
    out = _out(cfg)
    with open(out / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resmbs",
        description="Supply-chain analytics pipeline for mortgage-backed securities.",
    )
    parser.add_argument("--stage", required=True, choices=STAGES)
    parser.add_argument("--config", help="JSON config file (merged over defaults)")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--seed", type=int, help="seed propagated to all stochastic stages")
    parser.add_argument("--k", type=int, help="topic count")
    parser.add_argument("--alpha", type=float, help="document-topic concentration")
    parser.add_argument("--chain-var", type=float, help="topic evolution variance (fast chain)")
    parser.add_argument("--iterations", type=int, help="topic model EM iterations")
    parser.add_argument("--lambda-grid", help="comma-separated descending penalties")
    parser.add_argument("--folds", type=int, help="cross-validation folds")
    parser.add_argument("--threshold-class-a", help="ME,FE basis-point bounds for class A")
    parser.add_argument("--threshold-class-mb", help="ME,FE basis-point bounds for classes M and B")
    parser.add_argument("--flag-registry", help="file with one tranche-flag name per line")
    parser.add_argument("--docs", help="directory of .txt documents for the extract stage")
    return parser


def _overrides_from_args(args) -> dict:
    o: dict = {"out": args.out}
    if args.seed is not None:
        o["seed"] = args.seed
    topics_over = {}
    for key, val in (
        ("k", args.k), ("alpha", args.alpha), ("chain_var", args.chain_var),
        ("iterations", args.iterations),
    ):
        if val is not None:
            topics_over[key] = val
    if topics_over:
        o["topics"] = topics_over
    lasso_over = {}
    if args.lambda_grid is not None:
        try:
            lasso_over["lambda_grid"] = [float(v) for v in args.lambda_grid.split(",")]
        except ValueError as exc:
            raise ConfigError(f"invalid --lambda-grid: {exc}") from exc
    if args.folds is not None:
        lasso_over["n_folds"] = args.folds
    if lasso_over:
        o["lasso"] = lasso_over
    thresholds = {}
    if args.threshold_class_a:
        thresholds["A"] = _parse_bounds(args.threshold_class_a, "--threshold-class-a")
    if args.threshold_class_mb:
        bounds = _parse_bounds(args.threshold_class_mb, "--threshold-class-mb")
        thresholds["M"] = bounds
        thresholds["B"] = bounds
    if thresholds:
        o["thresholds"] = thresholds
    if args.flag_registry:
        o["flag_registry"] = args.flag_registry
    if args.docs:
        o["extract"] = {"docs_dir": args.docs}
    return o


def _parse_bounds(text: str, flag: str) -> list[float]:
    try:
        me, fe = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"invalid {flag}: expected 'ME,FE' bps, got {text!r}") from exc
    return [me, fe]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides_from_args(args))
        manifest = run(args.stage, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingDependencyError as exc:
        print(f"missing dependency: {exc}", file=sys.stderr)
        return 3
    except (NumericFailureError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except ResmbsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    total = sum(entry["duration_s"] for entry in manifest["stages"])
    print(f"stage {args.stage} finished in {total:.1f}s; artifacts in {cfg['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
