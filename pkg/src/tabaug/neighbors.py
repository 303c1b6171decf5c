"""Exact Euclidean k-nearest-neighbour queries with index tie-breaking."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

_CHUNK = 256


def pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a, b, "sqeuclidean")


def knn(query: np.ndarray, ref: np.ndarray, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices into ``ref`` of the ``k`` nearest rows for every query row.

    Equal distances resolve to the lower reference index. With
    ``exclude_self`` the query set must be ``ref`` itself and row ``i`` never
    lists itself (duplicates at distance zero still count).
    """
    query = np.asarray(query, dtype=float)
    ref = np.asarray(ref, dtype=float)
    avail = ref.shape[0] - (1 if exclude_self else 0)
    if k > avail:
        raise ValueError(f"k={k} exceeds the {avail} available neighbours")
    out = np.empty((query.shape[0], k), dtype=np.int64)
    for start in range(0, query.shape[0], _CHUNK):
        d = pairwise_sq(query[start:start + _CHUNK], ref)
        if exclude_self:
            rows = np.arange(d.shape[0])
            d[rows, rows + start] = np.inf
        out[start:start + _CHUNK] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out
