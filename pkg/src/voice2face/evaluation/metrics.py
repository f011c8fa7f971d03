"""Distance metrics and correlation used by the quantitative analyses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import InvalidInputError

_NORM_FLOOR = 1e-30


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b); 0 for parallel, 1 for orthogonal, 2 for opposite."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError(f"expected equal-length vectors, got {a.shape} and {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < _NORM_FLOOR or nb < _NORM_FLOOR:
        raise InvalidInputError("cosine distance undefined for zero vectors")
    return float(1.0 - (a @ b) / (na * nb))


def cosine_distance_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cosine distance between two [N, D] arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if (na < _NORM_FLOOR).any() or (nb < _NORM_FLOOR).any():
        raise InvalidInputError("cosine distance undefined for zero vectors")
    return 1.0 - np.sum(a * b, axis=1) / (na * nb)


@dataclass
class CorrelationResult:
    r: float | None
    p_value: float | None
    n: int
    defined: bool

    def to_dict(self) -> dict:
        return {"r": self.r, "p_value": self.p_value, "n": self.n, "defined": self.defined}


def pearson_correlation(x, y) -> CorrelationResult:
    """Pearson r with its two-sided p-value; degenerate (zero-variance)
    inputs produce a typed undefined result instead of NaN."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError("pearson_correlation expects two equal-length 1-D arrays")
    n = len(x)
    if n < 3:
        raise InvalidInputError("need at least 3 points for a correlation")
    if np.var(x) == 0.0 or np.var(y) == 0.0:
        return CorrelationResult(r=None, p_value=None, n=n, defined=False)
    r, p = stats.pearsonr(x, y)
    return CorrelationResult(r=float(r), p_value=float(p), n=n, defined=True)


def pairwise_distances(queries: np.ndarray, gallery: np.ndarray, metric: str) -> np.ndarray:
    """[Q, M] distances between query and gallery embedding rows."""
    queries = np.asarray(queries, dtype=np.float64)
    gallery = np.asarray(gallery, dtype=np.float64)
    if metric == "l1":
        return np.abs(queries[:, None, :] - gallery[None, :, :]).sum(axis=2)
    if metric == "l2":
        return np.sqrt(np.square(queries[:, None, :] - gallery[None, :, :]).sum(axis=2))
    if metric == "cd":
        qn = np.linalg.norm(queries, axis=1, keepdims=True)
        gn = np.linalg.norm(gallery, axis=1, keepdims=True)
        if (qn < _NORM_FLOOR).any() or (gn < _NORM_FLOOR).any():
            raise InvalidInputError("cosine distance undefined for zero vectors")
        return 1.0 - (queries / qn) @ (gallery / gn).T
    raise InvalidInputError(f"unknown metric {metric!r}; choose l1, l2, or cd")


def rank_gallery(query: np.ndarray, gallery: np.ndarray, metric: str) -> np.ndarray:
    """Gallery indices sorted by ascending distance to the query; ties
    broken by gallery index (stable sort) for determinism."""
    dists = pairwise_distances(np.asarray(query)[None, :], gallery, metric)[0]
    return np.argsort(dists, kind="stable")
