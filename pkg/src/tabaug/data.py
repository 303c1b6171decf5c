"""Tabular dataset model, CSV interchange and school-level fold splitting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .seeds import SeedStream, as_generator

SYNTHETIC_GROUP = "synthetic"


class DataError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TabularDataset:
    """Feature matrix, binary labels and group ids.

    ``row_ids`` tracks which original row each entry came from (``-1`` for
    synthetic rows); the harness uses it to audit for test-fold leakage.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: tuple[str, ...]
    row_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.array(self.features, dtype=float, copy=True)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.labels)
        g = np.array([str(v) for v in np.asarray(self.groups).ravel()], dtype=object)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        n = X.shape[0]
        if len(y) != n or len(g) != n:
            raise DataError(
                f"row count mismatch: features {n}, labels {len(y)}, groups {len(g)}"
            )
        if n and not np.all((y == 0) | (y == 1)):
            raise DataError("invalid label: labels must be 0 or 1")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
        rid = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64).copy()
        if len(rid) != n:
            raise DataError("row_ids length mismatch")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y.astype(np.int64)))
        object.__setattr__(self, "groups", _frozen(g))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", _frozen(rid))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.labels.sum())
        return self.n_rows - n1, n1

    def subset(self, idx) -> "TabularDataset":
        idx = np.asarray(idx)
        return TabularDataset(
            self.features[idx], self.labels[idx], self.groups[idx],
            self.feature_names, self.row_ids[idx],
        )

    def with_features(self, features, names=None) -> "TabularDataset":
        names = self.feature_names if names is None else names
        return TabularDataset(features, self.labels, self.groups, names, self.row_ids)

    def append(self, features, labels, group=SYNTHETIC_GROUP) -> "TabularDataset":
        """Append synthetic rows; they get ``row_ids == -1``."""
        features = np.asarray(features, dtype=float).reshape(-1, self.n_features)
        m = features.shape[0]
        return TabularDataset(
            np.vstack([self.features, features]),
            np.concatenate([self.labels, np.asarray(labels, dtype=np.int64)]),
            np.concatenate([self.groups, np.full(m, group, dtype=object)]),
            self.feature_names,
            np.concatenate([self.row_ids, np.full(m, -1, dtype=np.int64)]),
        )

    def same_as(self, other: "TabularDataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.groups, other.groups)
        )


def require_both_classes(data: TabularDataset, what: str = "dataset") -> None:
    n0, n1 = data.class_counts()
    if n0 == 0 or n1 == 0:
        raise DataError(f"{what} must contain both classes (got {n0}/{n1})")


def load_csv(path, label_column: str, group_column: str) -> TabularDataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if not rows:
        raise DataError(f"{path}: empty file (header only)")
    for col in (label_column, group_column):
        if col not in header:
            raise DataError(f"{path}: missing column {col!r}")
    li, gi = header.index(label_column), header.index(group_column)
    feat_idx = [i for i in range(len(header)) if i not in (li, gi)]
    X = np.empty((len(rows), len(feat_idx)))
    y = np.empty(len(rows), dtype=np.int64)
    groups = []
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{r}: expected {len(header)} fields, got {len(row)}")
        lab = row[li].strip()
        try:
            lv = float(lab)
        except ValueError:
            raise DataError(f"{path}:{r}: invalid label {lab!r}") from None
        if lv not in (0.0, 1.0):
            raise DataError(f"{path}:{r}: invalid label {lab!r}")
        y[r - 2] = int(lv)
        groups.append(row[gi])
        for j, i in enumerate(feat_idx):
            try:
                X[r - 2, j] = float(row[i])
            except ValueError:
                raise DataError(
                    f"{path}:{r}: non-numeric value {row[i]!r} in column {header[i]!r}"
                ) from None
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite feature value")
    return TabularDataset(X, y, np.array(groups, dtype=object), [header[i] for i in feat_idx])


def write_csv(data: TabularDataset, path, label_column: str = "label",
              group_column: str = "group") -> None:
    """Write ``data`` so that ``load_csv`` reads it back bit-for-bit."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*data.feature_names, label_column, group_column])
        for x, lab, g in zip(data.features, data.labels, data.groups):
            w.writerow([*(repr(float(v)) for v in x), int(lab), g])


@dataclass(frozen=True)
class GroupedFolds:
    folds: tuple  # of (train_idx, test_idx) pairs
    group_ids: tuple = ()

    def __len__(self):
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def grouped_kfold(data: TabularDataset) -> GroupedFolds:
    """One fold per distinct group; fold i tests on every row of group i."""
    uniq = sorted(set(data.groups.tolist()))
    if len(uniq) < 2:
        raise DataError("grouped CV impossible: need at least 2 distinct groups")
    folds = []
    for gid in uniq:
        test = np.flatnonzero(data.groups == gid)
        train = np.flatnonzero(data.groups != gid)
        tr_labels = data.labels[train]
        if tr_labels.min() == tr_labels.max():
            raise DataError(f"training rows of fold {gid!r} contain a single class")
        folds.append((train, test))
    return GroupedFolds(tuple(folds), tuple(uniq))


def separation_for_auc(auc: float) -> float:
    """Mean-shift length giving Bayes-optimal ``auc`` for unit-variance Gaussians."""
    if not 0.5 <= auc < 1:
        raise ValueError("target AUC must lie in [0.5, 1)")
    return math.sqrt(2.0) * float(norm.ppf(auc))


def make_synthetic(n: int = 1709, n_features: int = 18, bayes_auc: float = 0.69,
                   positive_fraction: float = 1097 / 1709, n_groups: int = 4,
                   rng=0) -> TabularDataset:
    """Two spherical Gaussian classes with a known Bayes-optimal AUC.

    With identity covariance and mean difference of length ``delta`` the
    optimal ranking is a projection on the mean difference, whose AUC is
    ``Phi(delta / sqrt(2))``. Rows are spread over ``n_groups`` pseudo-schools.
    """
    gen = as_generator(rng)
    n1 = int(round(n * positive_fraction))
    n0 = n - n1
    delta = separation_for_auc(bayes_auc)
    shift = np.full(n_features, delta / math.sqrt(n_features))
    X0 = gen.standard_normal((n0, n_features))
    X1 = gen.standard_normal((n1, n_features)) + shift
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    order = gen.permutation(n)
    X, y = X[order], y[order]
    # every school gets both classes so grouped folds are always trainable
    groups = np.empty(n, dtype=object)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        gen.shuffle(idx)
        for k, chunk in enumerate(np.array_split(idx, n_groups)):
            groups[chunk] = f"school{k + 1}"
    names = [f"f{j + 1}" for j in range(n_features)]
    return TabularDataset(X, y, groups, names)
