"""Serialisation of analysis results to CSV and JSON.

Every float is written with 6 significant digits so reruns diff cleanly;
missing values become empty CSV cells or JSON ``null``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .behavior import Study2Result
from .composites import DimensionStats, DominanceRow, MetricsTable, PosRow
from .normdata import DIMENSIONS, EMBODIMENT, NormLexicon
from .recovery import RecoveryReport
from .reliability import AlphaReport, CrossNormReport
from .rsa import RsaReport


def num(x):
    """Round to 6 significant digits; NaN/None -> None."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.6g}")


def cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if not math.isfinite(x) else f"{float(x):.6g}"
    return str(x)


def dim_key(d) -> str:
    return d.key


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([cell(v) for v in r])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(subcommand: str, argv: Sequence[str], config: Mapping, inputs: Mapping[str, str],
             outputs: Sequence[str], seed: int | None) -> dict:
    return {
        "artifact": "smnorms",
        "version": __version__,
        "subcommand": subcommand,
        "argv": list(argv),
        "seed": seed,
        "config": dict(config),
        "inputs": {name: {"path": str(p), "sha256": sha256_file(p)} for name, p in inputs.items()},
        "outputs": sorted(outputs),
    }


# ---------------------------------------------------------------------------
# Study 1
# ---------------------------------------------------------------------------

def metrics_rows(metrics: MetricsTable):
    orders = sorted(metrics.minkowski)
    header = (["word", "dominant", "tie_flag", "max_strength", "exclusivity",
               "pse_perceptual", "pse_sensorimotor"]
              + [f"minkowski_{m:g}" for m in orders] + ["pca_score"])
    rows = []
    for i, w in enumerate(metrics.words):
        rows.append([w, DIMENSIONS[metrics.dominant[i]].key, bool(metrics.tie_flag[i]),
                     metrics.max_strength[i], metrics.exclusivity[i],
                     metrics.pse_perceptual[i], metrics.pse_sensorimotor[i]]
                    + [metrics.minkowski[m][i] for m in orders]
                    + [None if metrics.pca_score is None else metrics.pca_score[i]])
    return header, rows


def dimension_stats_json(stats: Sequence[DimensionStats]) -> list:
    return [{"dimension": dim_key(s.dimension), "mean": num(s.mean), "sd": num(s.sd),
             "se": num(s.se), "uniqueness": num(s.uniqueness)} for s in stats]


def dominance_json(rows: Sequence[DominanceRow]) -> list:
    out = []
    for r in rows:
        out.append({
            "dimension": r.dimension.key,
            "n": r.n,
            "share": num(r.share),
            "mean_ratings": None if r.mean_ratings is None else
            {d.key: num(v) for d, v in zip(DIMENSIONS, r.mean_ratings)},
            "mean_exclusivity": num(r.mean_exclusivity),
        })
    return out


def pos_json(rows: Sequence[PosRow]) -> list:
    return [{"pos": r.pos, "n": r.n,
             "dominance": {d.key: num(v) for d, v in r.dominance.items()},
             "mean_exclusivity_perceptual": num(r.mean_exclusivity_perceptual),
             "mean_exclusivity_action": num(r.mean_exclusivity_action)} for r in rows]


def correlation_json(labels, C) -> dict:
    return {"labels": [dim_key(d) for d in labels],
            "matrix": [[num(v) for v in row] for row in C]}


def lexicon_summary(lexicon: NormLexicon) -> dict:
    return {
        "source": lexicon.source,
        "rows": lexicon.n_rows,
        "entries": len(lexicon),
        "rejected": [{"line": r.line, "word": r.word, "reason": r.reason} for r in lexicon.rejected],
        "has_embodiment": lexicon.has_embodiment,
        "has_pos": lexicon.has_pos,
        "has_dispersion": lexicon.has_dispersion,
    }


def alpha_json(reports: Mapping[object, AlphaReport]) -> list:
    return [{"dimension": dim_key(d), "mean_alpha": num(r.mean_alpha),
             "surveys_counted": r.n_surveys, "surveys_skipped": len(r.skipped),
             "per_survey": {k: num(v) for k, v in r.per_survey.items()},
             "skipped": dict(r.skipped)} for d, r in reports.items()]


def crossnorm_json(rep: CrossNormReport) -> dict:
    return {"source": rep.source, "mean_rho": num(rep.mean_rho),
            "dimensions": [{"dimension": dim_key(r.target), "external_column": r.external_column,
                            "rho": num(r.rho), "n": r.n, "p_value": num(r.p_value)}
                           for r in rep.rows]}


# ---------------------------------------------------------------------------
# Study 2
# ---------------------------------------------------------------------------

STUDY2_HEADER = ["outcome", "rank", "composite", "ln_bf10", "beta", "t", "r2", "delta_r2", "r2_null", "n"]


def study2_rows(results: Mapping[str, Study2Result]):
    rows = []
    for outcome, res in results.items():
        rows.append([outcome, 0, "Null model", None, None, None, res.r2_null, None, res.r2_null, res.n])
        for rank, c in enumerate(res.comparisons, start=1):
            rows.append([outcome, rank, c.composite.label, c.ln_bf10, c.beta, c.t, c.r2_alt,
                         c.delta_r2, c.r2_null, c.n])
    return STUDY2_HEADER, rows


def study2_json(results: Mapping[str, Study2Result], r_scale: float) -> dict:
    return {
        "r_scale": num(r_scale),
        "note": "zRT used as supplied (not re-standardised after the join)",
        "outcomes": {
            outcome: {
                "n": res.n,
                "r2_null": num(res.r2_null),
                "comparisons": [{"composite": c.composite.label, "key": c.composite.key,
                                 "ln_bf10": num(c.ln_bf10), "beta": num(c.beta), "t": num(c.t),
                                 "r2_alt": num(c.r2_alt), "delta_r2": num(c.delta_r2)}
                                for c in res.comparisons],
            } for outcome, res in results.items()
        },
    }


# ---------------------------------------------------------------------------
# Study 3
# ---------------------------------------------------------------------------

def predictions_rows(report: RecoveryReport):
    header = ["word"] + [d.key for d in DIMENSIONS]
    return header, [[w] + list(report.predictions[i]) for i, w in enumerate(report.words)]


def recovery_json(report: RecoveryReport) -> dict:
    cfg = report.config
    return {
        "n_words": len(report.words),
        "n_lexicon": report.n_lexicon,
        "coverage": num(report.coverage),
        "config": {"outer_folds": cfg.outer_folds, "inner_folds": cfg.inner_folds,
                   "alpha_grid": [num(a) for a in cfg.alpha_grid], "seed": cfg.seed,
                   "reselect_alpha": cfg.reselect_alpha, "clip": cfg.clip,
                   "n_perm": report.n_perm, "n_boot": report.n_boot,
                   "boot_sample": report.boot_sample},
        "mean_rho": num(report.mean_rho),
        "dimensions": [{
            "dimension": r.dimension.key,
            "r2": num(r.r2), "rho": num(r.rho),
            "p_raw": num(r.p_raw), "p_fdr": num(r.p_fdr),
            "p_raw_fixed_alpha": num(r.p_raw_fixed_alpha),
            "ci_rho": [num(v) for v in r.ci_rho], "ci_r2": [num(v) for v in r.ci_r2],
            "alphas": [num(a) for a in r.alphas],
            "boundary_hits": r.boundary_hits,
            "bootstrap_redraws": r.bootstrap_redraws,
            "var_observed": num(np.var(report.observed[:, int(r.dimension)], ddof=1)),
            "var_predicted": num(np.var(report.predictions[:, int(r.dimension)], ddof=1)),
        } for r in report.dimensions],
    }


def rsa_json(rep: RsaReport) -> dict:
    return {"rho": num(rep.rho), "p": num(rep.p), "n_perm": rep.n_perm, "n_words": rep.n_words,
            "seed": rep.seed, "null_mean": num(rep.null_mean), "null_sd": num(rep.null_sd),
            "zscore": "population sd (n denominator)", "metric": "euclidean"}
