"""Rating reliability (Cronbach's alpha) and cross-norm validation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats

from . import statkernel
from .errors import DegenerateInputError, NormDataError
from .normdata import (
    DIMENSIONS, EMBODIMENT, ExternalNorms, NormLexicon, RawResponseTable, parse_dimension,
)


def cronbach_alpha(matrix) -> float:
    """Cronbach's alpha for a words x participants matrix (participants as items).

    ``k/(k-1) * (1 - sum(item variances) / variance(row sums))`` with variances
    taken over words.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ValueError("matrix must be 2-d (words x participants)")
    n_words, k = X.shape
    if k < 2 or n_words < 2:
        raise DegenerateInputError(f"need >= 2 words and >= 2 participants, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix has missing cells; apply listwise removal first")
    total_var = X.sum(axis=1).var(ddof=1)
    if total_var == 0:
        raise DegenerateInputError("zero total variance")
    item_var = X.var(axis=0, ddof=1).sum()
    return k / (k - 1) * (1.0 - item_var / total_var)


@dataclass
class AlphaReport:
    dimension: object
    per_survey: dict[str, float] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def mean_alpha(self) -> float | None:
        if not self.per_survey:
            return None
        return float(np.mean(list(self.per_survey.values())))

    @property
    def n_surveys(self) -> int:
        return len(self.per_survey)


def _survey_matrix(cells: dict[tuple[str, str], float]):
    words = sorted({w for w, _ in cells})
    people = sorted({p for _, p in cells})
    X = np.full((len(words), len(people)), np.nan)
    wi = {w: i for i, w in enumerate(words)}
    pi = {p: j for j, p in enumerate(people)}
    for (w, p), v in cells.items():
        X[wi[w], pi[p]] = v
    # listwise removal of words with any missing participant
    return X[np.all(np.isfinite(X), axis=1)]


def alpha_by_dimension(raw: RawResponseTable) -> dict[object, AlphaReport]:
    """Alpha per survey, averaged (unweighted) over surveys within each dimension."""
    grouped: dict[object, dict[str, dict]] = defaultdict(lambda: defaultdict(dict))
    for r in raw.records:
        grouped[r.dimension][r.survey_id][(r.word, r.participant_id)] = r.rating
    reports = {}
    for dim in raw.dimensions():
        rep = AlphaReport(dim)
        for survey in sorted(grouped[dim]):
            X = _survey_matrix(grouped[dim][survey])
            try:
                rep.per_survey[survey] = cronbach_alpha(X)
            except DegenerateInputError as exc:
                rep.skipped[survey] = str(exc)
        reports[dim] = rep
    return reports


@dataclass(frozen=True)
class DimensionValidation:
    target: object        # Dimension or EMBODIMENT in the lexicon
    external_column: str
    rho: float
    n: int
    p_value: float


@dataclass(frozen=True)
class CrossNormReport:
    source: str
    rows: tuple[DimensionValidation, ...]

    @property
    def mean_rho(self) -> float:
        return float(np.mean([r.rho for r in self.rows]))


def _spearman_p(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return float(2 * stats.t.sf(abs(t), n - 2))


def default_mapping(external: ExternalNorms) -> dict[str, object]:
    """Map external columns whose names parse as dimensions onto them."""
    out = {}
    for col in external.columns:
        try:
            out[col] = parse_dimension(col)
        except NormDataError:
            continue
    return out


def _as_external(obj, name="") -> ExternalNorms:
    if isinstance(obj, ExternalNorms):
        return obj
    if isinstance(obj, NormLexicon):
        return ExternalNorms.from_lexicon(obj, name)
    raise TypeError(f"expected NormLexicon or ExternalNorms, got {type(obj).__name__}")


def crossnorm_validate(lexicon, external, mapping: Mapping[str, object] | None = None,
                       *, source: str | None = None) -> CrossNormReport:
    """Spearman rho between our ratings and an external rating set on shared words.

    ``mapping`` sends external column names to our dimensions (a Dimension,
    ``EMBODIMENT`` or a name parsable by :func:`parse_dimension`).  Words with a
    missing value in either source are dropped per dimension.
    """
    ext = _as_external(external)
    ours = _as_external(lexicon)
    if mapping is None:
        mapping = default_mapping(ext)
    resolved = {col: (parse_dimension(t) if isinstance(t, str) else t) for col, t in mapping.items()}
    if not resolved:
        raise NormDataError("no external columns map onto a dimension")
    our_idx = {w: i for i, w in enumerate(ours.words)}
    shared = [(our_idx[w], j) for j, w in enumerate(ext.words) if w in our_idx]
    if not shared:
        raise DegenerateInputError("no overlapping words between the two rating sets")
    oi = np.array([a for a, _ in shared])
    ej = np.array([b for _, b in shared])
    rows = []
    for col, target in resolved.items():
        if col not in ext.columns:
            raise NormDataError(f"external column {col!r} not found")
        if target.key not in ours.columns:
            raise NormDataError(f"lexicon has no {target.key} ratings")
        a = ours.columns[target.key][oi]
        b = ext.columns[col][ej]
        ok = np.isfinite(a) & np.isfinite(b)
        n = int(ok.sum())
        if n < 3:
            raise DegenerateInputError(f"only {n} overlapping rated words for {col}")
        rho = statkernel.spearman(a[ok], b[ok])
        rows.append(DimensionValidation(target, col, rho, n, _spearman_p(rho, n)))
    order = {d: i for i, d in enumerate(list(DIMENSIONS) + [EMBODIMENT])}
    rows.sort(key=lambda r: (order[r.target], r.external_column))
    return CrossNormReport(source or ext.name, tuple(rows))
