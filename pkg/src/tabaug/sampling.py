"""Over-, under- and hybrid sampling of a training split.

Every function takes a training ``TabularDataset`` and returns a new one.
Oversamplers keep the original rows verbatim (in their original order) and
append synthetic rows tagged with the ``synthetic`` group and
``row_id == -1``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import TabularDataset, require_both_classes
from .neighbors import knn, pairwise_sq
from .seeds import as_generator

SAMPLING_TECHNIQUES = (
    "SMOTE", "ADASYN", "BorderlineSMOTE", "KMeansSMOTE", "SMOTE-Tomek",
    "SMOTE-ENN", "RandomOversample", "RandomUndersample", "NearMiss",
)


class SamplingError(ValueError):
    pass


class SamplingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SamplingSpec:
    technique: str
    k_neighbors: int = 5
    enn_neighbors: int = 3
    kmeans_clusters: int = 8
    nearmiss_version: int = 1

    def __post_init__(self):
        if self.technique not in SAMPLING_TECHNIQUES:
            raise SamplingError(f"unknown sampling technique {self.technique!r}")
        for name in ("k_neighbors", "enn_neighbors", "kmeans_clusters"):
            if getattr(self, name) < 1:
                raise SamplingError(f"{name} must be positive")
        if self.nearmiss_version not in (1, 2, 3):
            raise SamplingError("nearmiss_version must be 1, 2 or 3")


def _classes(data: TabularDataset):
    """(minority label, majority label, n_min, n_maj); labels equal if balanced."""
    require_both_classes(data, "training data")
    n0, n1 = data.class_counts()
    if n0 <= n1:
        return 0, 1, n0, n1
    return 1, 0, n1, n0


def largest_remainder(weights, total: int) -> np.ndarray:
    """Integer apportionment of ``total`` proportional to ``weights``.

    Ties in the remainders go to the lower index.
    """
    w = np.asarray(weights, dtype=float)
    exact = w / w.sum() * total
    base = np.floor(exact).astype(np.int64)
    left = total - int(base.sum())
    if left > 0:
        order = np.argsort(-(exact - base), kind="stable")
        base[order[:left]] += 1
    return base


def _interpolate(X_min, nn, bases, gen):
    """x + lam * (neighbour - x) for each base row, neighbour drawn from ``nn``."""
    cols = gen.integers(0, nn.shape[1], size=bases.size)
    lam = gen.random(bases.size)[:, None]
    x = X_min[bases]
    return x + lam * (X_min[nn[bases, cols]] - x)


def _check_k(n_min: int, k: int):
    if n_min <= k:
        raise SamplingError(f"too few minority samples: {n_min} <= k={k}")


def smote(train: TabularDataset, k: int = 5, rng=0) -> TabularDataset:
    mino, majo, n_min, n_maj = _classes(train)
    if n_min == n_maj:
        return train
    _check_k(n_min, k)
    gen = as_generator(rng)
    X_min = train.features[train.labels == mino]
    nn = knn(X_min, X_min, k, exclude_self=True)
    bases = gen.integers(0, n_min, size=n_maj - n_min)
    return train.append(_interpolate(X_min, nn, bases, gen), np.full(bases.size, mino))


def _all_class_neighbours(train: TabularDataset, rows: np.ndarray, k: int) -> np.ndarray:
    d = pairwise_sq(train.features[rows], train.features)
    d[np.arange(rows.size), rows] = np.inf
    return np.argsort(d, axis=1, kind="stable")[:, :k]


def adasyn_quota(train: TabularDataset, k: int = 5) -> np.ndarray:
    """Synthetic rows owed to each minority row (in row order)."""
    mino, majo, n_min, n_maj = _classes(train)
    nn_all = _all_class_neighbours(train, np.flatnonzero(train.labels == mino), k)
    ratio = (train.labels[nn_all] == majo).sum(axis=1) / k
    if ratio.sum() == 0:
        raise SamplingError("ADASYN undefined: classes fully separated")
    return largest_remainder(ratio, n_maj - n_min)


def adasyn(train: TabularDataset, k: int = 5, rng=0) -> TabularDataset:
    mino, majo, n_min, n_maj = _classes(train)
    if n_min == n_maj:
        return train
    _check_k(n_min, k)
    gen = as_generator(rng)
    quota = adasyn_quota(train, k)
    X_min = train.features[train.labels == mino]
    nn = knn(X_min, X_min, k, exclude_self=True)
    bases = np.repeat(np.arange(n_min), quota)
    return train.append(_interpolate(X_min, nn, bases, gen), np.full(bases.size, mino))


def danger_mask(train: TabularDataset, k: int) -> np.ndarray:
    """Minority rows whose k all-class neighbours are mostly, not all, majority."""
    mino, majo, _, _ = _classes(train)
    nn_all = _all_class_neighbours(train, np.flatnonzero(train.labels == mino), k)
    n_maj_nb = (train.labels[nn_all] == majo).sum(axis=1)
    return (n_maj_nb > k / 2) & (n_maj_nb < k)


def borderline_smote(train: TabularDataset, k: int = 5, rng=0) -> TabularDataset:
    mino, majo, n_min, n_maj = _classes(train)
    if n_min == n_maj:
        return train
    _check_k(n_min, k)
    danger = np.flatnonzero(danger_mask(train, k))
    if danger.size == 0:
        warnings.warn("BorderlineSMOTE found no danger points; input returned unchanged",
                      SamplingWarning, stacklevel=2)
        return train
    gen = as_generator(rng)
    X_min = train.features[train.labels == mino]
    nn = knn(X_min, X_min, k, exclude_self=True)
    bases = danger[gen.integers(0, danger.size, size=n_maj - n_min)]
    return train.append(_interpolate(X_min, nn, bases, gen), np.full(bases.size, mino))


def kmeans(X: np.ndarray, n_clusters: int, gen: np.random.Generator,
           max_iter: int = 300, tol: float = 1e-4) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; returns cluster labels."""
    n = X.shape[0]
    n_clusters = min(n_clusters, n)
    centers = np.empty((n_clusters, X.shape[1]))
    centers[0] = X[gen.integers(n)]
    closest = pairwise_sq(X, centers[:1]).ravel()
    for c in range(1, n_clusters):
        total = closest.sum()
        if total == 0:
            centers[c:] = centers[0]
            break
        pick = int(np.searchsorted(np.cumsum(closest), gen.random() * total, side="right"))
        centers[c] = X[min(pick, n - 1)]
        closest = np.minimum(closest, pairwise_sq(X, centers[c:c + 1]).ravel())
    scale = tol * float(np.mean(X.var(axis=0))) if n > 1 else 0.0
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        assign = np.argmin(pairwise_sq(X, centers), axis=1)
        new = centers.copy()
        for c in range(n_clusters):
            members = assign == c
            if members.any():
                new[c] = X[members].mean(axis=0)
        shift = float(((new - centers) ** 2).sum())
        centers = new
        if shift <= scale:
            break
    return np.argmin(pairwise_sq(X, centers), axis=1)


def kmeans_smote(train: TabularDataset, k: int = 5, clusters: int = 8, rng=0) -> TabularDataset:
    """SMOTE restricted to k-means clusters dominated by the minority class.

    Quotas follow cluster sparsity: mean intra-cluster minority distance
    raised to the feature count, divided by the minority count.
    """
    mino, majo, n_min, n_maj = _classes(train)
    if n_min == n_maj:
        return train
    _check_k(n_min, k)
    if clusters < 1:
        raise SamplingError("clusters must be >= 1")
    gen = as_generator(rng)
    assign = kmeans(train.features, clusters, gen)
    eligible, log_sparsity = [], []
    d_exp = train.n_features
    for c in np.unique(assign):
        members = assign == c
        cmin = members & (train.labels == mino)
        n_c = int(cmin.sum())
        if n_c < 2 or n_c / members.sum() <= 0.5:
            continue
        Xc = train.features[cmin]
        mean_dist = np.sqrt(pairwise_sq(Xc, Xc)).sum() / (n_c * (n_c - 1))
        eligible.append(c)
        with np.errstate(divide="ignore"):
            log_sparsity.append(d_exp * np.log(mean_dist) - np.log(n_c))
    if not eligible:
        raise SamplingError("no minority-dense cluster")
    log_sparsity = np.asarray(log_sparsity)
    if np.isneginf(log_sparsity).all():
        # every eligible cluster collapsed to a point
        sparsity = np.ones(len(eligible))
    else:
        sparsity = np.exp(log_sparsity - log_sparsity.max())
    quota = largest_remainder(sparsity, n_maj - n_min)
    new_rows = []
    for c, q in zip(eligible, quota):
        if q == 0:
            continue
        Xc = train.features[(assign == c) & (train.labels == mino)]
        k_c = min(k, Xc.shape[0] - 1)
        nn = knn(Xc, Xc, k_c, exclude_self=True)
        bases = gen.integers(0, Xc.shape[0], size=int(q))
        new_rows.append(_interpolate(Xc, nn, bases, gen))
    synth = np.vstack(new_rows)
    return train.append(synth, np.full(synth.shape[0], mino))


def enn_filter(data: TabularDataset, enn_k: int = 3) -> TabularDataset:
    """Drop rows whose label disagrees with the majority of their enn_k neighbours."""
    if enn_k < 1:
        raise SamplingError("enn_k must be >= 1")
    if data.n_rows <= enn_k:
        raise SamplingError(f"ENN needs more than {enn_k} rows")
    nn = knn(data.features, data.features, enn_k, exclude_self=True)
    same = (data.labels[nn] == data.labels[:, None]).sum(axis=1)
    keep = same >= enn_k - same
    out = data.subset(np.flatnonzero(keep))
    n0, n1 = out.class_counts()
    if n0 == 0 or n1 == 0:
        raise SamplingError("ENN removed a class")
    return out


def tomek_links(data: TabularDataset) -> list[tuple[int, int]]:
    nn = knn(data.features, data.features, 1, exclude_self=True)[:, 0]
    links = []
    for i, j in enumerate(nn):
        if i < j and nn[j] == i and data.labels[i] != data.labels[j]:
            links.append((i, int(j)))
    return links


def tomek_filter(data: TabularDataset, remove_label: int | None = None) -> TabularDataset:
    """Remove the ``remove_label`` member of every Tomek link.

    ``remove_label`` defaults to the majority label of ``data`` (label 1 on
    a tie).
    """
    require_both_classes(data, "data")
    if remove_label is None:
        n0, n1 = data.class_counts()
        remove_label = 0 if n0 > n1 else 1
    drop = {i if data.labels[i] == remove_label else j for i, j in tomek_links(data)}
    if not drop:
        return data
    keep = np.array([i for i in range(data.n_rows) if i not in drop], dtype=np.int64)
    return data.subset(keep)


def smote_enn(train: TabularDataset, spec: SamplingSpec | None = None, rng=0) -> TabularDataset:
    spec = spec or SamplingSpec("SMOTE-ENN")
    return enn_filter(smote(train, spec.k_neighbors, rng), spec.enn_neighbors)


def smote_tomek(train: TabularDataset, spec: SamplingSpec | None = None, rng=0) -> TabularDataset:
    spec = spec or SamplingSpec("SMOTE-Tomek")
    _, majo, _, _ = _classes(train)
    return tomek_filter(smote(train, spec.k_neighbors, rng), remove_label=majo)


def random_resample(train: TabularDataset, mode: str, rng=0) -> TabularDataset:
    mino, majo, n_min, n_maj = _classes(train)
    if mode not in ("over", "under"):
        raise SamplingError("mode must be 'over' or 'under'")
    if n_min == n_maj:
        return train
    gen = as_generator(rng)
    if mode == "over":
        min_idx = np.flatnonzero(train.labels == mino)
        picks = min_idx[gen.integers(0, n_min, size=n_maj - n_min)]
        dup = train.subset(picks)
        return TabularDataset(
            np.vstack([train.features, dup.features]),
            np.concatenate([train.labels, dup.labels]),
            np.concatenate([train.groups, dup.groups]),
            train.feature_names,
            np.concatenate([train.row_ids, dup.row_ids]),
        )
    maj_idx = np.flatnonzero(train.labels == majo)
    kept = gen.choice(maj_idx, size=n_min, replace=False)
    keep = np.sort(np.concatenate([np.flatnonzero(train.labels == mino), kept]))
    return train.subset(keep)


def nearmiss(train: TabularDataset, version: int = 1, k: int = 3,
             k_ver3: int = 3) -> TabularDataset:
    """Keep all minority rows and the n_min majority rows closest by the version rule."""
    mino, majo, n_min, n_maj = _classes(train)
    if version not in (1, 2, 3):
        raise SamplingError("NearMiss version must be 1, 2 or 3")
    if k > n_min:
        raise SamplingError(f"k={k} larger than minority size {n_min}")
    min_idx = np.flatnonzero(train.labels == mino)
    maj_idx = np.flatnonzero(train.labels == majo)
    if n_min == n_maj:
        return train
    X_min, X_maj = train.features[min_idx], train.features[maj_idx]
    d = np.sqrt(pairwise_sq(X_maj, X_min))
    ds = np.sort(d, axis=1)
    if version == 1:
        score = ds[:, :k].mean(axis=1)
        chosen = np.argsort(score, kind="stable")[:n_min]
    elif version == 2:
        score = ds[:, -k:].mean(axis=1)
        chosen = np.argsort(score, kind="stable")[:n_min]
    else:
        # stage 1: majority rows among some minority row's k_ver3 nearest majority rows
        near = knn(X_min, X_maj, min(k_ver3, n_maj))
        cand = np.unique(near.ravel())
        # stage 2: of those, prefer rows far from their k nearest minority rows
        score = ds[cand, :k].mean(axis=1)
        chosen = cand[np.argsort(-score, kind="stable")[:n_min]]
    keep = np.sort(np.concatenate([min_idx, maj_idx[chosen]]))
    return train.subset(keep)


def resample(train: TabularDataset, spec: SamplingSpec, rng=0) -> TabularDataset:
    t = spec.technique
    if t == "SMOTE":
        return smote(train, spec.k_neighbors, rng)
    if t == "ADASYN":
        return adasyn(train, spec.k_neighbors, rng)
    if t == "BorderlineSMOTE":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SamplingWarning)
            return borderline_smote(train, spec.k_neighbors, rng)
    if t == "KMeansSMOTE":
        return kmeans_smote(train, spec.k_neighbors, spec.kmeans_clusters, rng)
    if t == "SMOTE-Tomek":
        return smote_tomek(train, spec, rng)
    if t == "SMOTE-ENN":
        return smote_enn(train, spec, rng)
    if t == "RandomOversample":
        return random_resample(train, "over", rng)
    if t == "RandomUndersample":
        return random_resample(train, "under", rng)
    return nearmiss(train, spec.nearmiss_version, 3)
