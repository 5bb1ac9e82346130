"""Representational similarity analysis over sensorimotor rating spaces.

RDMs are stored condensed (upper triangle, row-major pair order, as
``scipy.spatial.distance.pdist``).  A word relabelling permutes the entries of
the condensed vector without changing their values, so the ranks of a
relabelled RDM are the cached ranks gathered through the same index map; the
permutation test never re-sorts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from . import statkernel
from .errors import DegenerateInputError
from .normdata import DIMENSIONS


def zscore_features(table, labels: Sequence[str] | None = None) -> np.ndarray:
    """Standardise each column to mean 0 and population sd 1."""
    A = np.asarray(table, dtype=float)
    if A.ndim != 2:
        raise ValueError("table must be 2-d")
    sd = A.std(axis=0)
    for j in np.flatnonzero(sd == 0):
        name = labels[j] if labels is not None else (
            DIMENSIONS[j].key if A.shape[1] == len(DIMENSIONS) else f"column {j}")
        raise DegenerateInputError(f"cannot z-score constant column {name}")
    return (A - A.mean(axis=0)) / sd


@dataclass(frozen=True)
class Rdm:
    words: tuple[str, ...]
    condensed: np.ndarray

    def __post_init__(self):
        n = len(self.words)
        if self.condensed.shape != (n * (n - 1) // 2,):
            raise ValueError(f"condensed length {self.condensed.shape} does not match {n} words")

    @property
    def n(self) -> int:
        return len(self.words)

    def square(self) -> np.ndarray:
        return condensed_to_square(self.condensed, self.n)


def condensed_index(i, j, n: int):
    """Position of pair ``(i, j)``, ``i != j``, in the condensed vector."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    return n * lo - lo * (lo + 1) // 2 + (hi - lo - 1)


def condensed_to_square(c: np.ndarray, n: int) -> np.ndarray:
    D = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    D[iu] = c
    D[(iu[1], iu[0])] = c
    return D


def square_to_condensed(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    return D[np.triu_indices(D.shape[0], k=1)].copy()


def build_rdm(matrix, words: Sequence[str] | None = None) -> Rdm:
    """Euclidean RDM over the rows of ``matrix``."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] < 2:
        raise DegenerateInputError("need a 2-d matrix with at least 2 rows")
    if words is None:
        words = [str(i) for i in range(M.shape[0])]
    if len(words) != M.shape[0]:
        raise ValueError("one word label per row is required")
    return Rdm(tuple(words), pdist(M, metric="euclidean"))


def _check_pair(a: Rdm, b: Rdm):
    if a.n != b.n:
        raise ValueError(f"RDM sizes differ: {a.n} vs {b.n}")
    if a.words != b.words:
        raise ValueError("RDM word orders differ; align them explicitly before comparing")


def rsa_compare(a: Rdm, b: Rdm) -> float:
    """Spearman rho between the condensed upper triangles."""
    _check_pair(a, b)
    return statkernel.spearman(a.condensed, b.condensed)


@dataclass(frozen=True)
class RsaReport:
    rho: float
    p: float
    n_perm: int
    n_words: int
    seed: int | None
    null_mean: float
    null_sd: float


def _centered_unit(r: np.ndarray) -> np.ndarray:
    c = r - r.mean()
    norm = math.sqrt(float(c @ c))
    if norm == 0:
        raise DegenerateInputError("RDM has constant distances")
    return c / norm


def rsa_permutation(a: Rdm, b: Rdm, n_perm: int = 500, rng: np.random.Generator | None = None,
                    seed: int | None = None) -> RsaReport:
    """Permutation test relabelling the words of ``b`` (rows and columns together)."""
    _check_pair(a, b)
    if rng is None:
        seed = statkernel.DEFAULT_SEED if seed is None else seed
        rng = statkernel.make_rng(seed)
    n = a.n
    ra = _centered_unit(statkernel.rank_average_ties(a.condensed))
    rb = _centered_unit(statkernel.rank_average_ties(b.condensed))
    observed = min(1.0, max(-1.0, float(ra @ rb)))
    iu, ju = np.triu_indices(n, k=1)
    null = np.empty(n_perm)
    for k in range(n_perm):
        perm = rng.permutation(n)
        idx = condensed_index(perm[iu], perm[ju], n)
        null[k] = float(ra @ rb[idx])
    p = statkernel.permutation_p(observed, null) if n_perm else 1.0
    return RsaReport(
        rho=observed, p=p, n_perm=n_perm, n_words=n, seed=seed,
        null_mean=float(null.mean()) if n_perm else math.nan,
        null_sd=float(null.std(ddof=1)) if n_perm > 1 else math.nan,
    )


def rsa_from_tables(words: Sequence[str], human, predicted, n_perm: int = 500,
                    seed: int = statkernel.DEFAULT_SEED) -> tuple[RsaReport, Rdm, Rdm]:
    """z-score both tables over the full word set, build both RDMs and test them."""
    a = build_rdm(zscore_features(human), words)
    b = build_rdm(zscore_features(predicted), words)
    return rsa_permutation(a, b, n_perm, statkernel.make_rng(seed), seed=seed), a, b
