"""Bayes-factor comparison of composite predictors on lexical decision data.

For each composite the null model regresses the outcome on word length and
log frequency; the alternative adds the composite.  The nested Bayes factor
is the ratio of the two JZS Bayes factors against the intercept-only model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import statkernel
from .composites import STUDY2_KINDS, CompositeKind, MetricsTable
from .errors import DegenerateInputError, RankDeficientError
from .normdata import LexicalDecisionTable

OUTCOMES = ("zRT", "ERRasin")
MAX_CONDITION = 1e10


def arcsine_sqrt(p):
    """``asin(sqrt(p))`` for proportions in [0, 1]; accepts scalars or arrays."""
    a = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(a)) or np.any((a < 0) | (a > 1)):
        raise ValueError("proportions must lie in [0, 1]")
    out = np.arcsin(np.sqrt(a))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelComparison:
    composite: CompositeKind
    outcome: str
    ln_bf10: float
    beta: float
    t: float
    r2_alt: float
    r2_null: float
    n: int

    @property
    def delta_r2(self) -> float:
        return self.r2_alt - self.r2_null


@dataclass(frozen=True)
class Study2Data:
    """Complete-case arrays for one composite joined to the megastudy table."""

    words: tuple[str, ...]
    length: np.ndarray
    log_freq: np.ndarray
    composite: np.ndarray
    outcome: np.ndarray


def outcome_values(ld: LexicalDecisionTable, outcome: str) -> dict[str, float]:
    if outcome == "zRT":
        return {r.word: r.zrt for r in ld.records}
    if outcome == "ERRasin":
        return {r.word: (math.nan if math.isnan(r.err) else arcsine_sqrt(r.err)) for r in ld.records}
    raise ValueError(f"unknown outcome {outcome!r}; expected one of {OUTCOMES}")


def join_study2(ld: LexicalDecisionTable, composite: Mapping[str, float], outcome: str) -> Study2Data:
    """Listwise-complete join in lexical-decision file order."""
    y_by_word = outcome_values(ld, outcome)
    rows = []
    for r in ld.records:
        if r.word not in composite:
            continue
        vals = (float(r.length), r.log_freq, float(composite[r.word]), y_by_word[r.word])
        if all(math.isfinite(v) for v in vals):
            rows.append((r.word,) + vals)
    if not rows:
        raise DegenerateInputError("no complete rows after joining norms and lexical decision data")
    words, length, freq, comp, y = zip(*rows)
    return Study2Data(tuple(words), np.array(length), np.array(freq), np.array(comp), np.array(y))


def _standardize(A: np.ndarray) -> np.ndarray:
    sd = A.std(axis=0)
    if np.any(sd == 0):
        raise RankDeficientError("a predictor is constant")
    return (A - A.mean(axis=0)) / sd


def _check_conditioning(A: np.ndarray, names: Sequence[str]) -> None:
    Z = np.column_stack([np.ones(len(A)), _standardize(A)])
    cond = np.linalg.cond(Z)
    if not cond < MAX_CONDITION:
        raise RankDeficientError(
            f"collinear predictors {', '.join(names)} (condition number {cond:.3g})")


def compare_models(data: Study2Data, kind: CompositeKind, outcome: str,
                   r_scale: float = statkernel.JZS_MEDIUM) -> ModelComparison:
    """Null (length + frequency) vs null + composite.

    Predictors are standardised before the Bayes factor is evaluated; the
    reported beta and t come from the unstandardised alternative OLS fit.
    """
    X_null = np.column_stack([data.length, data.log_freq])
    X_alt = np.column_stack([X_null, data.composite])
    _check_conditioning(X_alt, ["length", "log_freq", kind.label])
    n = len(data.outcome)
    fit_null = statkernel.ols(_standardize(X_null), data.outcome)
    fit_alt_z = statkernel.ols(_standardize(X_alt), data.outcome)
    fit_alt = statkernel.ols(X_alt, data.outcome)
    ln_bf = (statkernel.jzs_bf_vs_intercept(fit_alt_z.r2, n, 3, r_scale)
             - statkernel.jzs_bf_vs_intercept(fit_null.r2, n, 2, r_scale))
    return ModelComparison(
        composite=kind,
        outcome=outcome,
        ln_bf10=ln_bf,
        beta=float(fit_alt.coefficients[2]),
        t=float(fit_alt.t_stats[2]),
        r2_alt=fit_alt.r2,
        r2_null=fit_null.r2,
        n=n,
    )


@dataclass(frozen=True)
class Study2Result:
    outcome: str
    n: int
    r2_null: float
    comparisons: tuple[ModelComparison, ...]   # sorted by ln_bf10, descending


def run_study2(metrics: MetricsTable, ld: LexicalDecisionTable,
               kinds: Sequence[CompositeKind] = STUDY2_KINDS,
               outcomes: Sequence[str] = OUTCOMES,
               r_scale: float = statkernel.JZS_MEDIUM) -> dict[str, Study2Result]:
    """Ranked comparisons for every composite and outcome.

    All composites are evaluated on one common complete-case word set (words
    with every requested composite and every lexical-decision field), so the
    null model is shared within an outcome.
    """
    if len(kinds) < 2:
        raise ValueError("need at least two composites to rank")
    columns = {k: metrics.composite(k) for k in kinds}
    complete = [i for i in range(len(metrics))
                if all(math.isfinite(columns[k][i]) for k in kinds)]
    results = {}
    for outcome in outcomes:
        comps = []
        for k in kinds:
            comp = {metrics.words[i]: float(columns[k][i]) for i in complete}
            data = join_study2(ld, comp, outcome)
            comps.append(compare_models(data, k, outcome, r_scale))
        comps.sort(key=lambda c: -c.ln_bf10)
        results[outcome] = Study2Result(outcome, comps[0].n, comps[0].r2_null, tuple(comps))
    return results
