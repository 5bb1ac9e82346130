"""Recovery of sensorimotor ratings from word embeddings.

Out-of-fold ridge predictions with inner-CV selection of the penalty,
evaluated by R^2 and Spearman rho, with permutation p-values (FDR-adjusted
across dimensions) and bootstrap confidence intervals.

Fold assignment depends only on the seed, never on the labels, so the SVD of
every training design is computed once and shared by all dimensions and all
permutations; a permutation only changes the right-hand side.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import statkernel
from .errors import DegenerateInputError
from .normdata import DIMENSIONS, Dimension, EmbeddingStore, NormLexicon, intersect

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = tuple(float(a) for a in np.logspace(-3, 3, 13))
PERM_BATCH = 128

# spawn-key namespaces for make_rng
_KEY_FOLDS = 0
_KEY_PERM = 1
_KEY_BOOT = 2


@dataclass(frozen=True)
class CvConfig:
    outer_folds: int = 10
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    inner_folds: int = 5
    seed: int = statkernel.DEFAULT_SEED
    reselect_alpha: bool = True     # rerun inner CV inside every permutation
    clip: bool = False              # clip predictions to the 0-5 rating scale

    def __post_init__(self):
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ValueError("outer_folds and inner_folds must be >= 2")
        grid = tuple(float(a) for a in self.alpha_grid)
        if not grid:
            raise ValueError("alpha_grid is empty")
        if any(not (a > 0 and math.isfinite(a)) for a in grid):
            raise ValueError("alphas must be positive and finite")
        if list(grid) != sorted(grid):
            raise ValueError("alpha_grid must be sorted ascending")
        object.__setattr__(self, "alpha_grid", grid)


# ---------------------------------------------------------------------------
# folds and factorisations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    outer_test: tuple[np.ndarray, ...]
    outer_train: tuple[np.ndarray, ...]
    inner_val: tuple[tuple[np.ndarray, ...], ...]     # global indices
    inner_train: tuple[tuple[np.ndarray, ...], ...]

    @property
    def n(self) -> int:
        return sum(len(t) for t in self.outer_test)


def make_fold_plan(n: int, cfg: CvConfig, rng: np.random.Generator | None = None) -> FoldPlan:
    """Shuffle once, split into near-equal outer folds, then split each
    outer training set the same way for the inner CV."""
    if rng is None:
        rng = statkernel.make_rng(cfg.seed, _KEY_FOLDS)
    if n < cfg.outer_folds:
        raise DegenerateInputError(f"{n} items cannot fill {cfg.outer_folds} folds")
    order = rng.permutation(n)
    outer_test = [np.sort(f) for f in np.array_split(order, cfg.outer_folds)]
    outer_train, inner_val, inner_train = [], [], []
    for test in outer_test:
        train = np.setdiff1d(order, test, assume_unique=True)
        outer_train.append(train)
        if len(train) < 2 * cfg.inner_folds:
            raise DegenerateInputError("inner folds would hold fewer than 2 items")
        inner = [np.sort(f) for f in np.array_split(rng.permutation(train), cfg.inner_folds)]
        inner_val.append(tuple(inner))
        inner_train.append(tuple(np.setdiff1d(train, v, assume_unique=True) for v in inner))
    if min(len(t) for t in outer_test) < 2:
        raise DegenerateInputError("an outer fold holds fewer than 2 items")
    return FoldPlan(tuple(outer_test), tuple(outer_train), tuple(inner_val), tuple(inner_train))


class _RidgeFactor:
    """Thin SVD of a centred training design plus the projected evaluation rows."""

    def __init__(self, X: np.ndarray, train: np.ndarray, evaluate: np.ndarray):
        Xt = X[train]
        mean = Xt.mean(axis=0)
        u, s, vt = np.linalg.svd(Xt - mean, full_matrices=False)
        self.ut = np.ascontiguousarray(u.T)
        self.s = s
        self.eval_proj = (X[evaluate] - mean) @ vt.T
        self.train = train
        self.evaluate = evaluate
        self._tiny = s.max(initial=0.0) * 1e-15

    def shrink(self, alpha: float) -> np.ndarray:
        denom = self.s**2 + alpha
        return np.divide(self.s, denom, out=np.zeros_like(self.s), where=denom > self._tiny)

    def moments(self, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(U^T Y_train, mean(Y_train))`` for the columns of ``Y`` (n x B)."""
        Yt = Y[self.train]
        return self.ut @ Yt, Yt.mean(axis=0)

    def predict(self, uty: np.ndarray, y_mean: np.ndarray, alpha: float) -> np.ndarray:
        """Predictions on the evaluation rows from precomputed moments."""
        # columns of U are orthogonal to the constant vector, so no y-centring is needed
        return self.eval_proj @ (self.shrink(alpha)[:, None] * uty) + y_mean


@dataclass
class CvFactors:
    plan: FoldPlan
    outer: list[_RidgeFactor]
    inner: list[list[_RidgeFactor]]


def build_factors(X: np.ndarray, plan: FoldPlan) -> CvFactors:
    X = np.asarray(X, dtype=float)
    outer = [_RidgeFactor(X, tr, te) for tr, te in zip(plan.outer_train, plan.outer_test)]
    inner = [[_RidgeFactor(X, tr, va) for tr, va in zip(trs, vas)]
             for trs, vas in zip(plan.inner_train, plan.inner_val)]
    return CvFactors(plan, outer, inner)


def _select_alpha(factors: CvFactors, k: int, Y: np.ndarray, alphas: Sequence[float]) -> np.ndarray:
    """Index into ``alphas`` minimising mean inner-validation MSE, per column."""
    mse = np.zeros((len(alphas), Y.shape[1]))
    for f in factors.inner[k]:
        uty, y_mean = f.moments(Y)
        target = Y[f.evaluate]
        for a_i, a in enumerate(alphas):
            err = f.predict(uty, y_mean, a) - target
            mse[a_i] += np.mean(err * err, axis=0)
    mse /= len(factors.inner[k])
    return np.argmin(mse, axis=0)   # first minimum = smaller alpha on ties


def _oof_batch(factors: CvFactors, Y: np.ndarray, alphas: Sequence[float],
               fixed: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Out-of-fold predictions for every column of Y, and the chosen alpha index
    per (outer fold, column)."""
    n, B = Y.shape
    pred = np.empty((n, B))
    chosen = np.empty((len(factors.outer), B), dtype=int)
    for k, f in enumerate(factors.outer):
        if fixed is None:
            idx = _select_alpha(factors, k, Y, alphas)
        else:
            idx = np.full(B, fixed[k], dtype=int)
        chosen[k] = idx
        uty, y_mean = f.moments(Y)
        for a_i in np.unique(idx):
            cols = np.flatnonzero(idx == a_i)
            p = f.predict(uty[:, cols], y_mean[cols], alphas[a_i])
            pred[np.ix_(f.evaluate, cols)] = p
    return pred, chosen


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossValResult:
    predictions: np.ndarray
    alpha_index: np.ndarray      # chosen grid index per outer fold
    alphas: tuple[float, ...]    # chosen alpha per outer fold
    plan: FoldPlan


def crossval_predict(X, y, cfg: CvConfig, factors: CvFactors | None = None) -> CrossValResult:
    """Out-of-fold ridge predictions for one rating vector."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size or X.shape[1] < 1:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if factors is None:
        factors = build_factors(X, make_fold_plan(len(y), cfg))
    pred, chosen = _oof_batch(factors, y[:, None], cfg.alpha_grid)
    idx = chosen[:, 0]
    return CrossValResult(pred[:, 0], idx, tuple(cfg.alpha_grid[i] for i in idx), factors.plan)


def crossval_predict_reference(X, y, cfg: CvConfig, plan: FoldPlan,
                               fixed: Sequence[int] | None = None) -> CrossValResult:
    """Same pipeline refitting every model with :func:`statkernel.ridge`.

    Slow; kept as an independent check on the factor-reuse path.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    alphas = cfg.alpha_grid
    pred = np.empty(len(y))
    chosen = []
    for k, (train, test) in enumerate(zip(plan.outer_train, plan.outer_test)):
        if fixed is None:
            mse = np.zeros(len(alphas))
            for tr, va in zip(plan.inner_train[k], plan.inner_val[k]):
                for a_i, a in enumerate(alphas):
                    fit = statkernel.ridge(X[tr], y[tr], a)
                    mse[a_i] += np.mean((fit.predict(X[va]) - y[va]) ** 2)
            best = int(np.argmin(mse / len(plan.inner_val[k])))
        else:
            best = int(fixed[k])
        chosen.append(best)
        pred[test] = statkernel.ridge(X[train], y[train], alphas[best]).predict(X[test])
    idx = np.array(chosen)
    return CrossValResult(pred, idx, tuple(alphas[i] for i in idx), plan)


def evaluate_dimension(y_true, y_pred) -> tuple[float, float]:
    """``(R^2, Spearman rho)`` of predictions against observed ratings."""
    yt = np.asarray(y_true, dtype=float)
    yp = np.asarray(y_pred, dtype=float)
    if yt.shape != yp.shape:
        raise ValueError("length mismatch")
    dy = yt - yt.mean()
    sst = float(dy @ dy)
    if sst == 0:
        raise DegenerateInputError("observed ratings have zero variance")
    resid = yt - yp
    return 1.0 - float(resid @ resid) / sst, statkernel.spearman(yt, yp)


def _column_spearman(Y: np.ndarray, P: np.ndarray) -> np.ndarray:
    out = np.empty(Y.shape[1])
    for j in range(Y.shape[1]):
        try:
            out[j] = statkernel.spearman(Y[:, j], P[:, j])
        except DegenerateInputError:
            out[j] = 0.0   # constant predictions carry no rank information
    return out


def null_distribution(X, y, n_perm: int, cfg: CvConfig, rng: np.random.Generator,
                      factors: CvFactors | None = None, fixed_alpha: Sequence[int] | None = None,
                      fast: bool = True) -> np.ndarray:
    """Spearman rho of out-of-fold predictions for ``n_perm`` shuffled label vectors.

    With ``fixed_alpha`` (grid index per outer fold) the inner CV is skipped;
    ``fast=False`` refits every model from scratch.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if factors is None:
        factors = build_factors(X, make_fold_plan(len(y), cfg))
    perms = np.stack([rng.permutation(len(y)) for _ in range(n_perm)]) if n_perm else \
        np.empty((0, len(y)), dtype=int)
    fixed = None if fixed_alpha is None else np.asarray(fixed_alpha, dtype=int)
    null = np.empty(n_perm)
    if not fast:
        for i, p in enumerate(perms):
            res = crossval_predict_reference(X, y[p], cfg, factors.plan, fixed)
            null[i] = _column_spearman(y[p][:, None], res.predictions[:, None])[0]
        return null
    for start in range(0, n_perm, PERM_BATCH):
        block = perms[start:start + PERM_BATCH]
        Y = y[block.T]                         # n x B, column j = y shuffled by block[j]
        P, _ = _oof_batch(factors, Y, cfg.alpha_grid, fixed)
        null[start:start + len(block)] = _column_spearman(Y, P)
    return null


def permutation_test_dimension(X, y, observed_rho: float, n_perm: int, cfg: CvConfig,
                               rng: np.random.Generator, factors: CvFactors | None = None,
                               fixed_alpha: Sequence[int] | None = None) -> float:
    """One-sided permutation p-value for an observed out-of-fold rho."""
    null = null_distribution(X, y, n_perm, cfg, rng, factors, fixed_alpha)
    return statkernel.permutation_p(observed_rho, null)


class BootstrapCI(NamedTuple):
    ci_rho: tuple[float, float]
    ci_r2: tuple[float, float]
    redraws: int


def bootstrap_ci(y_true, y_pred, n_boot: int = 1000, sample_size: int = 1000,
                 rng: np.random.Generator | None = None, level: float = 0.95,
                 max_redraws: int = 10000) -> BootstrapCI:
    """Percentile bootstrap intervals for rho and R^2.

    Each replicate draws ``sample_size`` words with replacement from the full
    set; replicates with zero variance in either vector are redrawn.
    """
    yt = np.asarray(y_true, dtype=float)
    yp = np.asarray(y_pred, dtype=float)
    if yt.size < 3 or sample_size < 3:
        raise DegenerateInputError("need at least 3 items and sample_size >= 3")
    if rng is None:
        rng = statkernel.make_rng(statkernel.DEFAULT_SEED, _KEY_BOOT)
    rhos = np.empty(n_boot)
    r2s = np.empty(n_boot)
    redraws = 0
    for b in range(n_boot):
        while True:
            idx = rng.integers(0, yt.size, size=sample_size)
            s_t = yt[idx]
            s_p = yp[idx]
            if np.ptp(s_t) > 0 and np.ptp(s_p) > 0:
                break
            redraws += 1
            if redraws > max_redraws:
                raise DegenerateInputError("bootstrap resamples are persistently degenerate")
        r2s[b], rhos[b] = evaluate_dimension(s_t, s_p)
    tail = 100 * (1 - level) / 2
    lo_r, hi_r = np.percentile(rhos, [tail, 100 - tail])
    lo_2, hi_2 = np.percentile(r2s, [tail, 100 - tail])
    return BootstrapCI((float(lo_r), float(hi_r)), (float(lo_2), float(hi_2)), redraws)


# ---------------------------------------------------------------------------
# full study
# ---------------------------------------------------------------------------

@dataclass
class DimensionRecovery:
    dimension: Dimension
    r2: float
    rho: float
    p_raw: float
    p_fdr: float = math.nan
    ci_rho: tuple[float, float] = (math.nan, math.nan)
    ci_r2: tuple[float, float] = (math.nan, math.nan)
    alphas: tuple[float, ...] = ()
    boundary_hits: int = 0
    bootstrap_redraws: int = 0
    p_raw_fixed_alpha: float | None = None


@dataclass
class RecoveryReport:
    words: tuple[str, ...]
    observed: np.ndarray          # n x 11 human ratings
    predictions: np.ndarray       # n x 11 out-of-fold predictions
    dimensions: list[DimensionRecovery]
    config: CvConfig
    n_perm: int
    n_boot: int
    boot_sample: int
    coverage: float = 1.0
    n_lexicon: int = 0
    notes: list[str] = field(default_factory=list)

    def by_dimension(self, d: Dimension) -> DimensionRecovery:
        return self.dimensions[int(d)]

    @property
    def mean_rho(self) -> float:
        return float(np.mean([d.rho for d in self.dimensions]))


def _recover_one(d: Dimension, X, Y, factors: CvFactors, cfg: CvConfig, n_perm: int,
                 n_boot: int, boot_sample: int, both_modes: bool):
    y = Y[:, int(d)]
    if np.ptp(y) == 0:
        raise DegenerateInputError(f"{d.key} ratings are constant")
    cv = crossval_predict(X, y, cfg, factors)
    pred = np.clip(cv.predictions, 0.0, 5.0) if cfg.clip else cv.predictions
    r2, rho = evaluate_dimension(y, pred)
    fixed = None if cfg.reselect_alpha else cv.alpha_index
    p_raw = 1.0
    p_alt = None
    if n_perm:
        p_raw = permutation_test_dimension(X, y, rho, n_perm, cfg,
                                           statkernel.make_rng(cfg.seed, _KEY_PERM, int(d)),
                                           factors, fixed)
        if both_modes:
            other = cv.alpha_index if cfg.reselect_alpha else None
            p_alt = permutation_test_dimension(X, y, rho, n_perm, cfg,
                                               statkernel.make_rng(cfg.seed, _KEY_PERM, int(d)),
                                               factors, other)
    ci = BootstrapCI((math.nan, math.nan), (math.nan, math.nan), 0)
    if n_boot:
        ci = bootstrap_ci(y, pred, n_boot, boot_sample, statkernel.make_rng(cfg.seed, _KEY_BOOT, int(d)))
    last = len(cfg.alpha_grid) - 1
    hits = int(np.sum((cv.alpha_index == 0) | (cv.alpha_index == last)))
    if hits:
        logger.warning("%s: chosen alpha on the grid boundary in %d of %d folds",
                       d.key, hits, len(cv.alpha_index))
    return pred, DimensionRecovery(
        dimension=d, r2=r2, rho=rho, p_raw=p_raw, ci_rho=ci.ci_rho, ci_r2=ci.ci_r2,
        alphas=cv.alphas, boundary_hits=hits, bootstrap_redraws=ci.redraws,
        p_raw_fixed_alpha=p_alt if cfg.reselect_alpha else p_raw,
    )


def recover_matrix(words: Sequence[str], X, Y, cfg: CvConfig, n_perm: int = 1000,
                   n_boot: int = 1000, boot_sample: int = 1000, threads: int | None = 1,
                   both_perm_modes: bool = False) -> RecoveryReport:
    """Run the recovery pipeline on aligned embeddings ``X`` and ratings ``Y`` (n x 11)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (len(words), len(DIMENSIONS)) or X.shape[0] != len(words):
        raise ValueError(f"shape mismatch: {len(words)} words, X {X.shape}, Y {Y.shape}")
    factors = build_factors(X, make_fold_plan(len(words), cfg))

    def job(d):
        return _recover_one(d, X, Y, factors, cfg, n_perm, n_boot, boot_sample, both_perm_modes)

    if threads is None or threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, DIMENSIONS))
    else:
        results = [job(d) for d in DIMENSIONS]
    pred = np.column_stack([p for p, _ in results])
    dims = [r for _, r in results]
    if n_perm:
        adj = statkernel.benjamini_hochberg([r.p_raw for r in dims])
        for r, q in zip(dims, adj):
            r.p_fdr = float(q)
    return RecoveryReport(tuple(words), Y, pred, dims, cfg, n_perm, n_boot, boot_sample)


def run_study3(lexicon: NormLexicon, embeddings: EmbeddingStore, cfg: CvConfig | None = None,
               n_perm: int = 1000, n_boot: int = 1000, boot_sample: int = 1000,
               threads: int | None = 1, both_perm_modes: bool = False) -> RecoveryReport:
    """Full recovery analysis on the words shared by the norms and the embeddings."""
    cfg = cfg or CvConfig()
    shared = intersect(lexicon, embeddings)
    words = shared.words
    report = recover_matrix(words, embeddings.matrix(words), shared.ratings, cfg, n_perm,
                            n_boot, boot_sample, threads, both_perm_modes)
    report.coverage = len(shared) / len(lexicon)
    report.n_lexicon = len(lexicon)
    return report
