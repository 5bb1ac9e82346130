"""Per-word derived metrics and lexicon-level descriptive statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import statkernel
from .errors import DegenerateInputError
from .normdata import (
    ACTION, CLASSICAL_SENSES, DIMENSIONS, EMBODIMENT, N_DIMS, POS_TAGS,
    Dimension, NormLexicon,
)

MINKOWSKI_ORDERS = (1, 2, 3, 10)
MIN_WORDS_FOR_PCA = N_DIMS + 1


@dataclass(frozen=True)
class CompositeKind:
    """A composite predictor.

    ``family`` is one of ``max``, ``minkowski``, ``pca``, ``pse_perceptual``,
    ``pse_sensorimotor`` or ``embodiment``; ``m`` is set for Minkowski only, so
    ``minkowski(1)`` *is* summed strength and ``minkowski(2)`` *is* Euclidean.
    """

    family: str
    m: float | None = None

    @classmethod
    def minkowski(cls, m: float) -> "CompositeKind":
        if not m >= 1:
            raise ValueError(f"Minkowski order must be >= 1, got {m}")
        return cls("minkowski", float(m))

    @property
    def label(self) -> str:
        if self.family == "minkowski":
            if self.m == 1:
                return "Summed strength"
            if self.m == 2:
                return "Euclidean"
            return f"Minkowski-{self.m:g}"
        return _FAMILY_LABELS[self.family]

    @property
    def key(self) -> str:
        if self.family == "minkowski":
            return {1.0: "summed_strength", 2.0: "euclidean"}.get(self.m, f"minkowski_{self.m:g}")
        return self.family if self.family != "max" else "max_strength"

    @classmethod
    def parse(cls, token: str) -> "CompositeKind":
        t = token.strip().lower().replace("-", "_").replace(" ", "_")
        for k in STUDY2_KINDS:
            if t in (k.key, k.label.lower().replace("-", "_").replace(" ", "_")):
                return k
        if t.startswith("minkowski_"):
            return cls.minkowski(float(t.split("_", 1)[1]))
        raise ValueError(f"unknown composite {token!r}")


_FAMILY_LABELS = {
    "max": "Maximum strength",
    "pca": "PCA component",
    "pse_perceptual": "PSE-Perceptual",
    "pse_sensorimotor": "PSE-Sensorimotor",
    "embodiment": "Embodiment",
}

MAX_STRENGTH = CompositeKind("max")
SUMMED_STRENGTH = CompositeKind.minkowski(1)
EUCLIDEAN = CompositeKind.minkowski(2)
MINKOWSKI_3 = CompositeKind.minkowski(3)
MINKOWSKI_10 = CompositeKind.minkowski(10)
PCA_COMPONENT = CompositeKind("pca")
PSE_PERCEPTUAL = CompositeKind("pse_perceptual")
PSE_SENSORIMOTOR = CompositeKind("pse_sensorimotor")
EMBODIMENT_KIND = CompositeKind("embodiment")

STUDY2_KINDS = (
    PSE_PERCEPTUAL, PSE_SENSORIMOTOR, MAX_STRENGTH, MINKOWSKI_10, MINKOWSKI_3,
    EUCLIDEAN, SUMMED_STRENGTH, PCA_COMPONENT, EMBODIMENT_KIND,
)


# ---------------------------------------------------------------------------
# scalar metrics
# ---------------------------------------------------------------------------

def _ratings_array(r) -> np.ndarray:
    a = np.asarray(r, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("ratings must be a non-empty 1-d vector")
    return a


def exclusivity(r) -> float:
    """Rating range divided by summed strength; 0 for an all-zero vector."""
    a = _ratings_array(r)
    if np.any(a < 0):
        raise ValueError("ratings must be non-negative")
    total = float(a.sum())
    if total == 0.0:
        return 0.0
    return float(a.max() - a.min()) / total


def dominant(r) -> tuple[Dimension, bool]:
    """Highest-rated dimension; exact ties go to the earliest canonical dimension."""
    a = _ratings_array(r)
    if a.size != N_DIMS:
        raise ValueError(f"expected {N_DIMS} ratings")
    top = a.max()
    hits = np.flatnonzero(a == top)
    return Dimension(int(hits[0])), bool(hits.size > 1)


def minkowski_composite(r, m: float) -> float:
    a = _ratings_array(r)
    if not m >= 1:
        raise ValueError(f"Minkowski order must be >= 1, got {m}")
    if m == 1:
        return float(np.abs(a).sum())
    top = float(np.abs(a).max())
    if top == 0.0:
        return 0.0
    # factor out the maximum so large m cannot overflow
    return top * float(np.sum((np.abs(a) / top) ** m)) ** (1.0 / m)


def pse(r) -> float:
    """Max rating plus max rating scaled by inclusivity: ``M + M (1 - E)``."""
    a = _ratings_array(r)
    top = float(a.max())
    return top + top * (1.0 - exclusivity(a))


# ---------------------------------------------------------------------------
# vectorised per-word table
# ---------------------------------------------------------------------------

def _exclusivity_rows(R: np.ndarray) -> np.ndarray:
    total = R.sum(axis=1)
    rng = R.max(axis=1) - R.min(axis=1)
    return np.divide(rng, total, out=np.zeros_like(total), where=total > 0)


def _pse_rows(R: np.ndarray) -> np.ndarray:
    top = R.max(axis=1)
    return top + top * (1.0 - _exclusivity_rows(R))


def _minkowski_rows(R: np.ndarray, m: float) -> np.ndarray:
    if m == 1:
        return R.sum(axis=1)
    top = R.max(axis=1)
    safe = np.where(top > 0, top, 1.0)
    return np.where(top > 0, top * np.sum((R / safe[:, None]) ** m, axis=1) ** (1.0 / m), 0.0)


def zscore_columns(A: np.ndarray) -> np.ndarray:
    """Column z-scores with the population (n-denominator) sd."""
    A = np.asarray(A, dtype=float)
    sd = A.std(axis=0)
    if np.any(sd == 0):
        raise DegenerateInputError("cannot z-score a constant column")
    return (A - A.mean(axis=0)) / sd


@dataclass(frozen=True)
class WordMetrics:
    word: str
    dominant: Dimension
    tie_flag: bool
    max_strength: float
    exclusivity: float
    pse_perceptual: float
    pse_sensorimotor: float
    minkowski: dict[float, float]
    pca_score: float | None


@dataclass(frozen=True)
class MetricsTable:
    """Column-oriented WordMetrics for a whole lexicon."""

    words: tuple[str, ...]
    dominant: np.ndarray          # int dimension index
    tie_flag: np.ndarray
    max_strength: np.ndarray
    exclusivity: np.ndarray
    pse_perceptual: np.ndarray
    pse_sensorimotor: np.ndarray
    minkowski: dict[float, np.ndarray]
    pca_score: np.ndarray | None
    pca_loadings: np.ndarray | None
    embodiment: np.ndarray
    pca_error: str | None = None

    def __len__(self):
        return len(self.words)

    def row(self, i: int) -> WordMetrics:
        return WordMetrics(
            word=self.words[i],
            dominant=Dimension(int(self.dominant[i])),
            tie_flag=bool(self.tie_flag[i]),
            max_strength=float(self.max_strength[i]),
            exclusivity=float(self.exclusivity[i]),
            pse_perceptual=float(self.pse_perceptual[i]),
            pse_sensorimotor=float(self.pse_sensorimotor[i]),
            minkowski={m: float(v[i]) for m, v in self.minkowski.items()},
            pca_score=None if self.pca_score is None else float(self.pca_score[i]),
        )

    def __iter__(self):
        return (self.row(i) for i in range(len(self)))

    def composite(self, kind: CompositeKind) -> np.ndarray:
        if kind.family == "max":
            return self.max_strength
        if kind.family == "minkowski":
            if kind.m not in self.minkowski:
                raise KeyError(f"Minkowski order {kind.m:g} was not computed")
            return self.minkowski[kind.m]
        if kind.family == "pca":
            if self.pca_score is None:
                raise DegenerateInputError(f"PCA component unavailable: {self.pca_error}")
            return self.pca_score
        if kind.family == "pse_perceptual":
            return self.pse_perceptual
        if kind.family == "pse_sensorimotor":
            return self.pse_sensorimotor
        if kind.family == "embodiment":
            return self.embodiment
        raise ValueError(f"unknown composite family {kind.family!r}")


def compute_word_metrics(lexicon: NormLexicon,
                         minkowski_orders: Sequence[float] = MINKOWSKI_ORDERS) -> MetricsTable:
    """All per-word metrics.

    The PCA composite needs at least 12 words and non-constant dimensions;
    when that fails ``pca_score`` is None and the reason is kept in
    ``pca_error`` while every other metric is still returned.
    """
    R = lexicon.ratings
    n = len(lexicon)
    if n == 0:
        raise DegenerateInputError("empty lexicon")
    top = R.max(axis=1)
    dom = np.argmax(R, axis=1)
    ties = (R == top[:, None]).sum(axis=1) > 1
    senses = R[:, list(CLASSICAL_SENSES)]
    mink = {float(m): _minkowski_rows(R, float(m)) for m in minkowski_orders}

    pca_score = pca_loadings = None
    pca_error = None
    if n < MIN_WORDS_FOR_PCA:
        pca_error = f"PCA needs at least {MIN_WORDS_FOR_PCA} words, lexicon has {n}"
    else:
        try:
            pca_loadings, pca_score = statkernel.pca_first_component(zscore_columns(R))
        except DegenerateInputError as exc:
            pca_error = str(exc)

    return MetricsTable(
        words=lexicon.words,
        dominant=dom,
        tie_flag=ties,
        max_strength=top,
        exclusivity=_exclusivity_rows(R),
        pse_perceptual=_pse_rows(senses),
        pse_sensorimotor=_pse_rows(R),
        minkowski=mink,
        pca_score=pca_score,
        pca_loadings=pca_loadings,
        embodiment=np.asarray(lexicon.embodiment),
        pca_error=pca_error,
    )


# ---------------------------------------------------------------------------
# lexicon-level statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionStats:
    dimension: object
    mean: float
    sd: float
    se: float | None
    uniqueness: float


def _uniqueness(target: np.ndarray, others: np.ndarray) -> float:
    if np.ptp(target) == 0:
        return 0.0
    keep = [j for j in range(others.shape[1]) if np.ptp(others[:, j]) > 0]
    if not keep:
        return 1.0
    fit = statkernel.ols(others[:, keep], target)
    return 1.0 - fit.r2


def dimension_stats(lexicon: NormLexicon) -> list[DimensionStats]:
    """Mean, SD, SE and uniqueness for each dimension (and embodiment, if rated).

    SD uses n-1.  SE is the mean over words of ``sd / sqrt(n_raters)`` and is
    None when per-word dispersion is not in the input.  Uniqueness is
    ``1 - R^2`` of the dimension regressed on the other ten; embodiment is
    regressed on all eleven sensorimotor dimensions.
    """
    R = lexicon.ratings
    n = len(lexicon)
    if n < 2:
        raise DegenerateInputError("need at least 2 words for descriptive statistics")
    se_word = None
    if lexicon.has_dispersion:
        sd = np.array([e.sd for e in lexicon], dtype=float)
        nr = np.array([e.n_raters for e in lexicon], dtype=float)
        se_word = sd / np.sqrt(nr)
    out = []
    for d in DIMENSIONS:
        col = R[:, d]
        others = np.delete(R, int(d), axis=1)
        uniq = _uniqueness(col, others) if n > N_DIMS else math.nan
        out.append(DimensionStats(
            dimension=d,
            mean=float(col.mean()),
            sd=float(col.std(ddof=1)),
            se=None if se_word is None else float(se_word[:, d].mean()),
            uniqueness=uniq,
        ))
    if lexicon.has_embodiment:
        emb = lexicon.embodiment
        out.append(DimensionStats(
            dimension=EMBODIMENT,
            mean=float(emb.mean()),
            sd=float(emb.std(ddof=1)),
            se=None,
            uniqueness=_uniqueness(emb, R) if n > N_DIMS + 1 else math.nan,
        ))
    return out


@dataclass(frozen=True)
class DominanceRow:
    dimension: Dimension
    n: int
    share: float
    mean_ratings: np.ndarray | None
    mean_exclusivity: float | None


def dominance_table(lexicon: NormLexicon, metrics: MetricsTable) -> list[DominanceRow]:
    """Count, share, mean profile and mean exclusivity per dominant class."""
    R = lexicon.ratings
    total = len(lexicon)
    rows = []
    for d in DIMENSIONS:
        mask = metrics.dominant == int(d)
        k = int(mask.sum())
        rows.append(DominanceRow(
            dimension=d,
            n=k,
            share=k / total if total else 0.0,
            mean_ratings=R[mask].mean(axis=0) if k else None,
            mean_exclusivity=float(metrics.exclusivity[mask].mean()) if k else None,
        ))
    return rows


@dataclass(frozen=True)
class PosRow:
    pos: str
    n: int
    dominance: dict[Dimension, float]
    mean_exclusivity_perceptual: float | None
    mean_exclusivity_action: float | None


def pos_breakdown(lexicon: NormLexicon, metrics: MetricsTable) -> list[PosRow]:
    """Dominant-dimension proportions and mean exclusivity per part of speech."""
    if not lexicon.has_pos:
        raise ValueError("lexicon carries no part-of-speech tags")
    tags = np.array([e.pos or "" for e in lexicon])
    action_idx = np.array([int(d) for d in ACTION])
    is_action = np.isin(metrics.dominant, action_idx)
    rows = []
    for tag in POS_TAGS:
        mask = tags == tag
        k = int(mask.sum())
        if k == 0:
            continue
        dom = metrics.dominant[mask]
        counts = np.bincount(dom, minlength=N_DIMS)
        perc = mask & ~is_action
        act = mask & is_action
        rows.append(PosRow(
            pos=tag,
            n=k,
            dominance={d: counts[d] / k for d in DIMENSIONS},
            mean_exclusivity_perceptual=float(metrics.exclusivity[perc].mean()) if perc.any() else None,
            mean_exclusivity_action=float(metrics.exclusivity[act].mean()) if act.any() else None,
        ))
    return rows


def correlation_matrix(lexicon: NormLexicon) -> tuple[list, np.ndarray]:
    """Pearson correlations over word means; embodiment appended when rated.

    Returns ``(labels, matrix)``; the matrix is symmetric bit-for-bit with an
    exact unit diagonal.
    """
    cols = [lexicon.ratings[:, d] for d in DIMENSIONS]
    labels: list = list(DIMENSIONS)
    if lexicon.has_embodiment:
        cols.append(lexicon.embodiment)
        labels.append(EMBODIMENT)
    k = len(cols)
    C = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            try:
                r = statkernel.pearson(cols[i], cols[j])
            except DegenerateInputError as exc:
                bad = labels[i] if np.ptp(cols[i]) == 0 else labels[j]
                raise DegenerateInputError(f"degenerate column {bad.key}: {exc}") from exc
            C[i, j] = C[j, i] = r
    return labels, C
