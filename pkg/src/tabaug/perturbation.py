"""Feature-space transforms fitted on the training split only."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import TabularDataset
from .seeds import as_generator

PERTURBATION_TECHNIQUES = (
    "PolynomialFeatures", "FeatureInteraction", "PCA", "Standardization",
    "MinMaxScaling", "RobustScaling", "LogTransform", "PowerTransform",
    "NoiseAddition",
)

_GOLDEN = (math.sqrt(5) - 1) / 2


class TransformError(ValueError):
    pass


@dataclass(frozen=True)
class FittedTransform:
    kind: str
    n_in: int
    params: dict = field(default_factory=dict)
    # columns passed through untouched because their scale was zero
    passthrough: tuple[int, ...] = ()


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _guarded_scale(scale: np.ndarray):
    flat = ~(scale > 0)
    safe = np.where(flat, 1.0, scale)
    return safe, tuple(int(i) for i in np.flatnonzero(flat))


def yeo_johnson(x: np.ndarray, lam: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    if abs(lam) < 1e-12:
        out[pos] = np.log1p(x[pos])
    else:
        out[pos] = (np.power(x[pos] + 1, lam) - 1) / lam
    if abs(lam - 2) < 1e-12:
        out[~pos] = -np.log1p(-x[~pos])
    else:
        out[~pos] = -(np.power(1 - x[~pos], 2 - lam) - 1) / (2 - lam)
    return out


def yeo_johnson_loglik(x: np.ndarray, lam: float) -> float:
    y = yeo_johnson(x, lam)
    var = y.var()
    if var <= 0 or not np.isfinite(var):
        return -math.inf
    return float(-0.5 * x.size * math.log(var)
                 + (lam - 1) * np.sum(np.sign(x) * np.log1p(np.abs(x))))


def golden_max(f, lo: float, hi: float, tol: float = 1e-5) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def fit_yeo_johnson(x: np.ndarray, lo: float = -5.0, hi: float = 5.0, tol: float = 1e-5) -> float:
    return golden_max(lambda lam: yeo_johnson_loglik(x, lam), lo, hi, tol)


def _fit(kind: str, X: np.ndarray, names, noise_scale: float) -> FittedTransform:
    n, d = X.shape
    if kind in ("PolynomialFeatures", "FeatureInteraction"):
        return FittedTransform(kind, d)
    if kind == "LogTransform":
        shift = np.where(X.min(axis=0) < 0, -X.min(axis=0), 0.0)
        return FittedTransform(kind, d, {"shift": shift})
    if kind == "PCA":
        mean = X.mean(axis=0)
        _, _, vt = np.linalg.svd(X - mean, full_matrices=True)
        R = vt.T.copy()
        # fix the sign of each axis so its largest loading is positive
        flip = np.sign(R[np.argmax(np.abs(R), axis=0), np.arange(d)])
        R *= np.where(flip == 0, 1.0, flip)
        return FittedTransform(kind, d, {"mean": mean, "rotation": R})
    if kind == "Standardization":
        scale, flat = _guarded_scale(X.std(axis=0))
        return FittedTransform(kind, d, {"center": X.mean(axis=0), "scale": scale}, flat)
    if kind == "MinMaxScaling":
        lo = X.min(axis=0)
        scale, flat = _guarded_scale(X.max(axis=0) - lo)
        return FittedTransform(kind, d, {"center": lo, "scale": scale}, flat)
    if kind == "RobustScaling":
        q25, med, q75 = np.percentile(X, [25, 50, 75], axis=0)
        scale, flat = _guarded_scale(q75 - q25)
        return FittedTransform(kind, d, {"center": med, "scale": scale}, flat)
    if kind == "PowerTransform":
        lams = np.ones(d)
        flat = []
        for j in range(d):
            if X[:, j].std() > 0:
                lams[j] = fit_yeo_johnson(X[:, j])
            else:
                flat.append(j)
        Y = np.column_stack([yeo_johnson(X[:, j], lams[j]) for j in range(d)]) if d else X
        scale, flat2 = _guarded_scale(Y.std(axis=0))
        flat = tuple(sorted(set(flat) | set(flat2)))
        return FittedTransform(kind, d, {"lambdas": lams, "center": Y.mean(axis=0),
                                         "scale": scale}, flat)
    if kind == "NoiseAddition":
        if noise_scale < 0:
            raise TransformError("noise scale must be nonnegative")
        return FittedTransform(kind, d, {"sigma": noise_scale * X.std(axis=0)})
    raise TransformError(f"unknown perturbation {kind!r}")


def _names(t: FittedTransform, names):
    if t.kind == "PolynomialFeatures":
        return [*names, *(f"{a}^2" for a in names),
                *(f"{names[i]}*{names[j]}" for i, j in _pairs(len(names)))]
    if t.kind == "FeatureInteraction":
        return [*names, *(f"{names[i]}*{names[j]}" for i, j in _pairs(len(names)))]
    if t.kind == "PCA":
        return [f"pc{j + 1}" for j in range(len(names))]
    return list(names)


def _apply(t: FittedTransform, X: np.ndarray) -> np.ndarray:
    p = t.params
    if t.kind == "PolynomialFeatures":
        prods = [X[:, i] * X[:, j] for i, j in _pairs(X.shape[1])]
        return np.column_stack([X, X ** 2, *prods]) if prods else np.column_stack([X, X ** 2])
    if t.kind == "FeatureInteraction":
        prods = [X[:, i] * X[:, j] for i, j in _pairs(X.shape[1])]
        return np.column_stack([X, *prods]) if prods else X.copy()
    if t.kind == "PCA":
        return (X - p["mean"]) @ p["rotation"]
    if t.kind == "LogTransform":
        # values below the training minimum are floored there
        return np.log1p(np.maximum(X + p["shift"], 0.0))
    if t.kind == "NoiseAddition":
        return X.copy()
    if t.kind == "PowerTransform":
        Y = np.column_stack([yeo_johnson(X[:, j], p["lambdas"][j]) for j in range(X.shape[1])])
        out = (Y - p["center"]) / p["scale"]
    else:
        out = (X - p["center"]) / p["scale"]
    if t.passthrough:
        cols = list(t.passthrough)
        out[:, cols] = X[:, cols]
    return out


def apply_transform(t: FittedTransform, data: TabularDataset) -> TabularDataset:
    """Apply a fitted transform; noise is never added here."""
    if data.n_features != t.n_in:
        raise TransformError(
            f"transform fitted on {t.n_in} columns, data has {data.n_features}"
        )
    return data.with_features(_apply(t, data.features), _names(t, data.feature_names))


def fit_transform(kind: str, train: TabularDataset, rng=0,
                  noise_scale: float = 0.05) -> tuple[FittedTransform, TabularDataset]:
    if train.n_rows == 0:
        raise TransformError("empty training set")
    t = _fit(kind, train.features, train.feature_names, noise_scale)
    out = apply_transform(t, train)
    if kind == "NoiseAddition":
        gen = as_generator(rng)
        noisy = out.features + gen.standard_normal(out.features.shape) * t.params["sigma"]
        out = out.with_features(noisy)
    return t, out


def pca_inverse(t: FittedTransform, Z: np.ndarray) -> np.ndarray:
    return Z @ t.params["rotation"].T + t.params["mean"]
