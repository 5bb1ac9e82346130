"""Command-line entry point.

Every subcommand writes its reports plus a ``manifest.json`` (argv, resolved
config, SHA-256 of each input, seed, version) to the output directory, which
defaults to ``$SMNORMS_OUT`` or ``./out``.

Exit status: 0 on success, 1 when input validation or an analysis fails,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, figures, reports
from .behavior import run_study2
from .composites import (
    STUDY2_KINDS, CompositeKind, compute_word_metrics, correlation_matrix, dimension_stats,
    dominance_table, pos_breakdown,
)
from .errors import NormDataError, SmnormsError
from .normdata import (
    DIMENSIONS, EMBODIMENT, N_DIMS, load_embeddings, load_external_norms,
    load_lexical_decision, load_norms, load_raw_responses, load_schema, normalize_word,
    parse_dimension,
)
from .recovery import DEFAULT_ALPHAS, CvConfig, run_study3
from .reliability import alpha_by_dimension, crossnorm_validate
from .rsa import rsa_from_tables
from .statkernel import DEFAULT_SEED, JZS_MEDIUM, make_rng

log = logging.getLogger("smnorms")

SUBCOMMANDS = ("describe", "metrics", "reliability", "validate-crossnorm", "regress-ld",
               "recover", "rsa", "radar")


class _Run:
    """Output bookkeeping for one subcommand invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.formats = set(args.formats.split(","))
        self.outputs: list[str] = []
        self.inputs: dict[str, str] = {}
        self.config: dict = {}

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def finish(self):
        if self.args.schema:
            self.inputs["schema"] = self.args.schema
        man = reports.manifest(self.args.command, self.argv, self.config, self.inputs,
                               self.outputs + ["manifest.json"], self.args.seed)
        reports.write_json(self.out / "manifest.json", man)


def _norms(run: _Run, key="norms"):
    path = getattr(run.args, key)
    run.inputs[key] = path
    schema = load_schema(run.args.schema) if run.args.schema else None
    return load_norms(path, schema)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_describe(run: _Run) -> None:
    lex = _norms(run)
    summary = reports.lexicon_summary(lex)
    if len(lex) >= 2:
        summary["dimension_stats"] = reports.dimension_stats_json(dimension_stats(lex))
    if run.wants("json"):
        reports.write_json(run.path("describe.json"), summary)
    print(f"{lex.source}: {len(lex)} entries from {lex.n_rows} rows "
          f"({len(lex.rejected)} rejected)")
    for s in summary.get("dimension_stats", []):
        print(f"  {s['dimension']:<14} mean={s['mean']:<8} sd={s['sd']}")


def cmd_metrics(run: _Run) -> None:
    lex = _norms(run)
    metrics = compute_word_metrics(lex)
    if run.wants("csv"):
        header, rows = reports.metrics_rows(metrics)
        reports.write_csv(run.path("word_metrics.csv"), header, rows)
    labels, C = correlation_matrix(lex)
    sidecar = {
        "lexicon": reports.lexicon_summary(lex),
        "dimension_stats": reports.dimension_stats_json(dimension_stats(lex)),
        "uniqueness_definition": "1 - R^2 of OLS on the other dimensions",
        "dominance": reports.dominance_json(dominance_table(lex, metrics)),
        "tied_dominance": int(metrics.tie_flag.sum()),
        "pos_breakdown": reports.pos_json(pos_breakdown(lex, metrics)) if lex.has_pos else None,
        "correlation": reports.correlation_json(labels, C),
        "pca_loadings": None if metrics.pca_loadings is None else
        {d.key: reports.num(v) for d, v in zip(DIMENSIONS, metrics.pca_loadings)},
        "pca_error": metrics.pca_error,
    }
    if run.wants("json"):
        reports.write_json(run.path("metrics.json"), sidecar)
    if run.wants("svg"):
        svg = figures.heatmap_svg(C, [d.label for d in labels], "Correlation matrix")
        run.path("correlation_matrix.svg").write_text(svg, encoding="utf-8")


def cmd_reliability(run: _Run) -> None:
    run.inputs["raw"] = run.args.raw
    raw = load_raw_responses(run.args.raw)
    res = alpha_by_dimension(raw)
    body = {"records": len(raw), "dimensions": reports.alpha_json(res)}
    reports.write_json(run.path("reliability.json"), body)
    for d, r in res.items():
        a = r.mean_alpha
        print(f"  {d.key:<14} alpha={'n/a' if a is None else f'{a:.3f}'} "
              f"({r.n_surveys} surveys, {len(r.skipped)} skipped)")


def cmd_crossnorm(run: _Run) -> None:
    lex = _norms(run)
    run.inputs["external"] = run.args.external
    ext = load_external_norms(run.args.external, run.args.name)
    mapping = None
    if run.args.map:
        mapping = {}
        for item in run.args.map:
            col, sep, target = item.partition("=")
            if not sep:
                raise NormDataError(f"--map expects COLUMN=DIMENSION, got {item!r}")
            mapping[col.strip()] = parse_dimension(target)
    run.config["mapping"] = None if mapping is None else {k: v.key for k, v in mapping.items()}
    rep = crossnorm_validate(lex, ext, mapping, source=ext.name)
    reports.write_json(run.path("crossnorm.json"), reports.crossnorm_json(rep))
    print(f"{rep.source}: mean rho = {rep.mean_rho:.3f} over {len(rep.rows)} dimension(s)")


def cmd_regress(run: _Run) -> None:
    lex = _norms(run)
    run.inputs["lexical_decision"] = run.args.ld
    ld = load_lexical_decision(run.args.ld)
    kinds = STUDY2_KINDS
    if run.args.composites:
        kinds = tuple(CompositeKind.parse(t) for t in run.args.composites.split(","))
    if not lex.has_embodiment:
        kinds = tuple(k for k in kinds if k.family != "embodiment")
    metrics = compute_word_metrics(lex)
    run.config.update(r_scale=run.args.r_scale, composites=[k.key for k in kinds])
    res = run_study2(metrics, ld, kinds, r_scale=run.args.r_scale)
    if run.wants("csv"):
        header, rows = reports.study2_rows(res)
        reports.write_csv(run.path("study2.csv"), header, rows)
    if run.wants("json"):
        reports.write_json(run.path("study2.json"), reports.study2_json(res, run.args.r_scale))
    for outcome, r in res.items():
        top = r.comparisons[0]
        print(f"{outcome}: n={r.n} null R2={r.r2_null:.3f}; top {top.composite.label} "
              f"ln(BF10)={top.ln_bf10:.2f}")


def _alpha_grid(args) -> tuple[float, ...]:
    if args.alphas:
        return tuple(sorted(float(a) for a in args.alphas.split(",")))
    return DEFAULT_ALPHAS


def cmd_recover(run: _Run) -> None:
    a = run.args
    lex = _norms(run)
    run.inputs["embeddings"] = a.embeddings
    emb = load_embeddings(a.embeddings)
    cfg = CvConfig(outer_folds=a.folds, alpha_grid=_alpha_grid(a), inner_folds=a.inner_folds,
                   seed=a.seed, reselect_alpha=not a.fixed_alpha_perms, clip=a.clip)
    run.config.update(folds=a.folds, inner_folds=a.inner_folds, alphas=list(cfg.alpha_grid),
                      permutations=a.permutations, bootstrap=a.bootstrap,
                      boot_sample=a.boot_sample, reselect_alpha=cfg.reselect_alpha, clip=a.clip)
    report = run_study3(lex, emb, cfg, a.permutations, a.bootstrap, a.boot_sample,
                        threads=a.threads, both_perm_modes=a.both_perm_modes)
    if run.wants("csv"):
        header, rows = reports.predictions_rows(report)
        reports.write_csv(run.path("predictions.csv"), header, rows)
    if run.wants("json"):
        reports.write_json(run.path("recovery_report.json"), reports.recovery_json(report))
    if run.wants("svg"):
        for r in report.dimensions:
            j = int(r.dimension)
            svg = figures.histogram_svg(report.observed[:, j], report.predictions[:, j],
                                        title=r.dimension.label, annotation=f"rho = {r.rho:.2f}")
            run.path(f"hist_{r.dimension.key}.svg").write_text(svg, encoding="utf-8")
    print(f"{len(report.words)} words ({100 * report.coverage:.1f}% of norms); "
          f"mean rho = {report.mean_rho:.3f}")


def read_predictions(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ["word"] + [d.key for d in DIMENSIONS] if c not in header]
        if missing:
            raise NormDataError(f"{path}: missing column(s) {missing}")
        words, rows = [], []
        for line, row in enumerate(reader, start=2):
            try:
                rows.append([float(row[d.key]) for d in DIMENSIONS])
            except ValueError as exc:
                raise NormDataError(f"{path} line {line}: {exc}") from exc
            words.append(normalize_word(row["word"]))
    return words, np.array(rows, dtype=float).reshape(len(rows), N_DIMS)


def cmd_rsa(run: _Run) -> None:
    a = run.args
    lex = _norms(run)
    run.inputs["predictions"] = a.predictions
    words, pred = read_predictions(a.predictions)
    keep = [i for i, w in enumerate(words) if w in lex]
    if len(keep) < 3:
        raise NormDataError("fewer than 3 predicted words are present in the norms")
    words = [words[i] for i in keep]
    pred = pred[keep]
    human = np.array([lex[w].ratings for w in words])
    run.config.update(permutations=a.permutations, subset=a.subset)
    rep, rdm_h, rdm_p = rsa_from_tables(words, human, pred, a.permutations, a.seed)
    if run.wants("json"):
        reports.write_json(run.path("rsa_report.json"), reports.rsa_json(rep))
    if run.wants("svg") and a.subset:
        k = min(a.subset, len(words))
        pick = np.sort(make_rng(a.seed, 3).choice(len(words), size=k, replace=False))
        for name, rdm in (("human", rdm_h), ("predicted", rdm_p)):
            D = rdm.square()[np.ix_(pick, pick)]
            svg = figures.heatmap_svg(D, [words[i] for i in pick], f"RDM ({name})", symmetric=False)
            run.path(f"rdm_{name}.svg").write_text(svg, encoding="utf-8")
    print(f"RSA rho = {rep.rho:.3f}, p = {rep.p:.4g} ({rep.n_perm} permutations, "
          f"{rep.n_words} words)")


def radar(word: str, lexicon) -> str:
    """12-spoke radar SVG (11 dimensions plus embodiment) for one word."""
    key = normalize_word(word)
    if key not in lexicon:
        near = [w for w in lexicon.words if key and w.startswith(key[0])][:5]
        near += [w for w in difflib.get_close_matches(key, lexicon.words, n=5, cutoff=0.6)
                 if w not in near]
        hint = f"; nearest matches: {', '.join(near)}" if near else ""
        raise NormDataError(f"word {word!r} not in norms{hint}")
    e = lexicon[key]
    labels = [d.label for d in DIMENSIONS] + [EMBODIMENT.label]
    values = list(e.ratings) + [e.embodiment if e.embodiment is not None else 0.0]
    maxes = [5.0] * N_DIMS + [6.0]
    return figures.radar_svg(labels, values, maxes, title=key)


def cmd_radar(run: _Run) -> None:
    lex = _norms(run)
    run.config["word"] = run.args.word
    svg = radar(run.args.word, lex)
    name = run.args.filename or f"radar_{normalize_word(run.args.word)}.svg"
    run.path(name).write_text(svg, encoding="utf-8")


_HANDLERS = {
    "describe": cmd_describe, "metrics": cmd_metrics, "reliability": cmd_reliability,
    "validate-crossnorm": cmd_crossnorm, "regress-ld": cmd_regress, "recover": cmd_recover,
    "rsa": cmd_rsa, "radar": cmd_radar,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=os.environ.get("SMNORMS_OUT", "out"),
                        help="output directory (default: $SMNORMS_OUT or ./out)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--schema", help="JSON column mapping for the norms CSV")
    common.add_argument("--formats", default="csv,json,svg",
                        help="comma-separated subset of csv,json,svg")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for independent analyses (default: all cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="smnorms", description="Sensorimotor norm analytics")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("describe", parents=[common], help="summarise a norms file")
    s.add_argument("--norms", required=True)

    s = sub.add_parser("metrics", parents=[common], help="per-word metrics and lexicon statistics")
    s.add_argument("--norms", required=True)

    s = sub.add_parser("reliability", parents=[common], help="Cronbach's alpha from raw responses")
    s.add_argument("--raw", required=True, help="long-format raw response CSV")

    s = sub.add_parser("validate-crossnorm", parents=[common],
                       help="Spearman validation against an external rating set")
    s.add_argument("--norms", required=True)
    s.add_argument("--external", required=True)
    s.add_argument("--name", help="label for the external source")
    s.add_argument("--map", action="append", metavar="COLUMN=DIMENSION",
                   help="map an external column to a dimension (repeatable)")

    s = sub.add_parser("regress-ld", parents=[common],
                       help="Bayes-factor comparison of composites on lexical decision data")
    s.add_argument("--norms", required=True)
    s.add_argument("--ld", required=True, help="lexical decision CSV")
    s.add_argument("--r-scale", type=float, default=JZS_MEDIUM)
    s.add_argument("--composites", help="comma-separated subset of composites")

    s = sub.add_parser("recover", parents=[common], help="ridge recovery of ratings from embeddings")
    s.add_argument("--norms", required=True)
    s.add_argument("--embeddings", required=True)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--inner-folds", type=int, default=5)
    s.add_argument("--alphas", help="comma-separated ridge penalties (default 13 values 1e-3..1e3)")
    s.add_argument("--permutations", type=int, default=1000)
    s.add_argument("--bootstrap", type=int, default=1000)
    s.add_argument("--boot-sample", type=int, default=1000)
    s.add_argument("--fixed-alpha-perms", action="store_true",
                   help="reuse the observed per-fold alphas inside permutations")
    s.add_argument("--both-perm-modes", action="store_true",
                   help="also report p-values from the other permutation mode")
    s.add_argument("--clip", action="store_true", help="clip predictions to [0, 5]")

    s = sub.add_parser("rsa", parents=[common], help="RSA between human and predicted ratings")
    s.add_argument("--norms", required=True)
    s.add_argument("--predictions", required=True, help="predictions.csv from 'recover'")
    s.add_argument("--permutations", type=int, default=500)
    s.add_argument("--subset", type=int, default=100, help="words in the RDM heatmaps (0: none)")

    s = sub.add_parser("radar", parents=[common], help="radar chart for one word")
    s.add_argument("--norms", required=True)
    s.add_argument("--word", required=True)
    s.add_argument("--filename", help="output file name inside --out")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_help(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    bad = set(args.formats.split(",")) - {"csv", "json", "svg"}
    if bad:
        parser.print_usage(sys.stderr)
        print(f"smnorms: error: unknown format(s) {sorted(bad)}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        r = _Run(args, argv)
        _HANDLERS[args.command](r)
        r.finish()
    except (SmnormsError, ValueError, OSError, KeyError) as exc:
        print(f"smnorms {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
