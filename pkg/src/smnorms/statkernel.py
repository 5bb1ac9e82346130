"""Deterministic numerical kernel.

Ranking, correlation, least squares and ridge solvers, first principal
component, the Zellner-Siow (JZS) regression Bayes factor, Benjamini-Hochberg
adjustment and permutation p-values.  Every function here is pure; stochastic
callers pass an explicit :class:`numpy.random.Generator`.

Random streams
--------------
All randomness in the package comes from :func:`make_rng`: numpy's PCG64 bit
generator seeded through :class:`numpy.random.SeedSequence` with
``entropy=seed`` and an integer ``spawn_key``.  PCG64 output for a given seed
sequence is fixed by numpy's stream-compatibility policy, so one
``(seed, key)`` pair always yields the same stream on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import DegenerateInputError, QuadratureError, RankDeficientError

DEFAULT_SEED = 20250101

# BayesFactor / JASP "medium" prior width for continuous covariates: sqrt(2)/4.
JZS_MEDIUM = math.sqrt(2.0) / 4.0


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` and an optional substream key.

    Substreams let independent work units (dimension, permutation block,
    bootstrap) draw from non-overlapping streams regardless of scheduling.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# ranking and correlation
# ---------------------------------------------------------------------------

def _as_finite_vector(x, name="x") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {a.shape}")
    if a.size == 0:
        raise DegenerateInputError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def rank_average_ties(x) -> np.ndarray:
    """Ranks 1..n with tied values sharing the mean of their rank block."""
    a = _as_finite_vector(x)
    n = a.size
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    starts = np.empty(n, dtype=bool)
    starts[0] = True
    np.not_equal(sorted_a[1:], sorted_a[:-1], out=starts[1:])
    block = np.cumsum(starts) - 1
    bounds = np.flatnonzero(np.append(starts, True))
    # block b spans sorted positions bounds[b] .. bounds[b+1]-1
    block_rank = 0.5 * (bounds[:-1] + bounds[1:] + 1)
    ranks = np.empty(n, dtype=float)
    ranks[order] = block_rank[block]
    return ranks


def pearson(x, y) -> float:
    """Pearson product-moment correlation."""
    a = _as_finite_vector(x, "x")
    b = _as_finite_vector(y, "y")
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 3:
        raise DegenerateInputError("degenerate input: need at least 3 observations")
    da = a - a.mean()
    db = b - b.mean()
    ssa = float(da @ da)
    ssb = float(db @ db)
    if ssa == 0.0 or ssb == 0.0:
        raise DegenerateInputError("degenerate input: zero variance")
    r = float(da @ db) / math.sqrt(ssa * ssb)
    return min(1.0, max(-1.0, r))


def spearman(x, y) -> float:
    """Spearman rank correlation: Pearson over average-tie ranks."""
    return pearson(rank_average_ties(x), rank_average_ties(y))


# ---------------------------------------------------------------------------
# linear models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Linear fit.  ``coefficients`` excludes the intercept."""

    coefficients: np.ndarray
    intercept: float
    r2: float
    residuals: np.ndarray
    t_stats: np.ndarray

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return X @ self.coefficients + self.intercept


def _design(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or X.shape[0] != y.size:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in regression input")
    return X, y


def _r2(y, resid) -> float:
    dy = y - y.mean()
    sst = float(dy @ dy)
    if sst == 0.0:
        raise DegenerateInputError("degenerate input: outcome has zero variance")
    return 1.0 - float(resid @ resid) / sst


def ols(X, y) -> FitResult:
    """Ordinary least squares of ``y`` on the columns of ``X`` plus an intercept.

    t-statistics use classical (homoscedastic) standard errors with
    ``n - k - 1`` residual degrees of freedom.
    """
    X, y = _design(X, y)
    n, k = X.shape
    A = np.column_stack([np.ones(n), X])
    if n <= k + 1:
        raise RankDeficientError(f"need more rows than columns: {n} rows, {k + 1} columns")
    q, r = np.linalg.qr(A)
    diag = np.abs(np.diag(r))
    if diag.min() <= diag.max() * max(n, k + 1) * np.finfo(float).eps:
        raise RankDeficientError("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - A @ beta
    sse = float(resid @ resid)
    dof = n - k - 1
    r_inv = np.linalg.inv(r)
    se = np.sqrt(sse / dof * np.sum(r_inv**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    return FitResult(
        coefficients=beta[1:],
        intercept=float(beta[0]),
        r2=_r2(y, resid),
        residuals=resid,
        t_stats=t[1:],
    )


def ridge(X, y, alpha: float) -> FitResult:
    """Ridge regression with an unpenalised intercept.

    Minimises ``||y - X b - b0||^2 + alpha ||b||^2``.  Columns and outcome are
    centred internally and the solve goes through the thin SVD of the centred
    design, so ``alpha = 0`` gives the minimum-norm least-squares solution.
    """
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be finite and non-negative, got {alpha}")
    X, y = _design(X, y)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    u, s, vt = np.linalg.svd(X - x_mean, full_matrices=False)
    denom = s**2 + alpha
    factor = np.divide(s, denom, out=np.zeros_like(s), where=denom > s.max(initial=0) * 1e-15)
    coef = vt.T @ (factor * (u.T @ (y - y_mean)))
    intercept = float(y_mean - x_mean @ coef)
    resid = y - X @ coef - intercept
    return FitResult(
        coefficients=coef,
        intercept=intercept,
        r2=_r2(y, resid),
        residuals=resid,
        t_stats=np.full(coef.shape, np.nan),
    )


def pca_first_component(Z) -> tuple[np.ndarray, np.ndarray]:
    """First principal component of a column-standardised matrix.

    Returns ``(loadings, scores)``: the unit-norm top eigenvector of
    ``Z.T @ Z / n`` and the projections ``Z @ loadings``.  The sign is fixed so
    that scores correlate non-negatively with the row sums of ``Z``.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError("Z must be a 2-d array")
    n, k = Z.shape
    if k < 2 or n <= k:
        raise DegenerateInputError(f"PCA needs k >= 2 columns and n > k rows, got {n}x{k}")
    sd = Z.std(axis=0)
    if not np.allclose(sd, 1.0, atol=1e-6) or not np.allclose(Z.mean(axis=0), 0.0, atol=1e-6):
        raise ValueError("columns of Z must be z-scored (mean 0, population sd 1)")
    c = Z.T @ Z / n
    c = 0.5 * (c + c.T)
    try:
        _, vecs = np.linalg.eigh(c)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ArithmeticError(f"eigen-solver did not converge: {exc}") from exc
    v = vecs[:, -1].copy()
    v /= np.linalg.norm(v)
    scores = Z @ v
    if float(scores @ Z.sum(axis=1)) < 0:
        v = -v
        scores = -scores
    return v, scores


# ---------------------------------------------------------------------------
# JZS Bayes factor
# ---------------------------------------------------------------------------

def _jzs_check(r2, n, p, r_scale):
    if not (0.0 <= r2 < 1.0):
        raise ValueError(f"r2 must lie in [0, 1), got {r2}")
    if n <= p + 1:
        raise ValueError(f"need n > p + 1, got n={n}, p={p}")
    if p < 1:
        raise ValueError("p must be at least 1")
    if not r_scale > 0:
        raise ValueError("r_scale must be positive")


def jzs_log_integrand_g(g, r2, n, p, r_scale):
    """Log of the Zellner-Siow integrand in the mixing variable ``g``.

    ``(1+g)^((n-1-p)/2) (1+g(1-r2))^(-(n-1)/2)`` times the inverse-gamma(1/2,
    n r_scale^2 / 2) density of ``g``.  Exposed for independent checks.
    """
    g = np.asarray(g, dtype=float)
    a = 0.5
    b = n * r_scale**2 / 2.0
    return (
        0.5 * (n - 1 - p) * np.log1p(g)
        - 0.5 * (n - 1) * np.log1p(g * (1.0 - r2))
        + a * math.log(b) - special.gammaln(a) - (a + 1.0) * np.log(g) - b / g
    )


def jzs_bf_vs_intercept(r2: float, n: int, p: int, r_scale: float = JZS_MEDIUM) -> float:
    """Natural-log JZS Bayes factor of a p-predictor model against intercept only.

    The g-integral is mapped to ``t = g / (1 + g)`` on (0, 1) and integrated by
    adaptive Gauss-Kronrod quadrature after shifting the log-integrand by its
    maximum, which keeps ``(1+g)^((n-1-p)/2)`` from overflowing for large n.
    """
    _jzs_check(r2, n, p, r_scale)
    a = 0.5
    b = n * r_scale**2 / 2.0
    const = a * math.log(b) - special.gammaln(a)
    c_log_1mt = 0.5 * (p - 1)
    c_log_rt = -0.5 * (n - 1)

    def log_h(t):
        # (1+g) = 1/(1-t); 1+g(1-r2) = (1 - t r2)/(1-t); dg/dt = (1-t)^-2
        return (
            c_log_1mt * np.log1p(-t)
            + c_log_rt * np.log1p(-t * r2)
            - (a + 1.0) * np.log(t)
            - b * (1.0 - t) / t
            + const
        )

    # locate the mode in log g, where the integrand is close to unimodal
    def neg_log_u(u):
        g = math.exp(u)
        return -float(jzs_log_integrand_g(g, r2, n, p, r_scale)) - u

    res = optimize.minimize_scalar(neg_log_u, bounds=(-40.0, 40.0), method="bounded",
                                   options={"xatol": 1e-10})
    u_mode = float(res.x)
    step = 1e-3
    curv = (neg_log_u(u_mode + step) - 2 * neg_log_u(u_mode) + neg_log_u(u_mode - step)) / step**2
    sigma_u = 1.0 / math.sqrt(curv) if curv > 0 else 1.0
    t_mode = special.expit(u_mode)
    h_max = float(log_h(t_mode))

    breaks = sorted({float(special.expit(u_mode + k * sigma_u)) for k in (-8, -3, 0, 3, 8)})
    breaks = [t for t in breaks if 0.0 < t < 1.0]

    def f(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        return math.exp(float(log_h(t)) - h_max)

    val, abserr = integrate.quad(f, 0.0, 1.0, points=breaks, epsabs=0.0, epsrel=1e-10, limit=500)
    if not val > 0:
        raise QuadratureError("JZS integral evaluated to a non-positive value")
    if abserr / val > 1e-6:
        raise QuadratureError(f"JZS quadrature relative error {abserr / val:.3g} exceeds 1e-6")
    return h_max + math.log(val)


# ---------------------------------------------------------------------------
# inference helpers
# ---------------------------------------------------------------------------

def benjamini_hochberg(p_values) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, clipped to [0, 1]."""
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1:
        raise ValueError("p_values must be one-dimensional")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    if m == 0:
        return p.copy()
    order = np.argsort(p, kind="mergesort")
    scaled = p[order] * m / np.arange(1, m + 1)
    adjusted_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.clip(adjusted_sorted, 0.0, 1.0)
    return out


def permutation_p(observed: float, null_samples) -> float:
    """One-sided (greater) add-one permutation p-value ``(1 + #{null >= obs}) / (1 + N)``."""
    null = np.asarray(null_samples, dtype=float)
    if null.size == 0:
        raise ValueError("null_samples is empty")
    return (1.0 + float(np.count_nonzero(null >= observed))) / (1.0 + null.size)
