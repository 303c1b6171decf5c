"""Baseline binary classifiers behind one train/score interface.

LR, SVM and MLP are implemented here; the random forest delegates tree
growing to scikit-learn and aggregates votes itself.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import DataError, TabularDataset, require_both_classes
from .nets import Adam, NetCore, bce_with_logits
from .seeds import as_generator

ARCHITECTURES = ("LR", "SVM", "RF", "MLP")
DETERMINISTIC = {"LR": True, "SVM": True, "RF": False, "MLP": False}

DEFAULTS = {
    "LR": {"C": 1.0, "tol": 1e-6, "max_iter": 1000},
    "SVM": {"C": 1.0, "gamma": "scale", "tol": 1e-3, "max_iter": 1_000_000},
    "RF": {"n_trees": 100},
    "MLP": {"hidden": 100, "alpha": 1e-4, "learning_rate": 1e-3, "batch_size": 200,
            "max_epochs": 200, "plateau_tol": 1e-5, "plateau_epochs": 10},
}


@dataclass(frozen=True)
class ModelSpec:
    architecture: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        unknown = set(self.options) - set(DEFAULTS[self.architecture])
        if unknown:
            raise ValueError(f"unknown {self.architecture} options {sorted(unknown)}")

    @property
    def deterministic(self) -> bool:
        return DETERMINISTIC[self.architecture]

    def opt(self, key):
        return self.options.get(key, DEFAULTS[self.architecture][key])


# ---------------------------------------------------------------- logistic

@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float
    n_iter: int = 0
    architecture: str = "LR"

    @property
    def n_features(self):
        return self.weights.size

    def score(self, X):
        return expit(X @ self.weights + self.intercept)


def _lr_objective(w, X1, y, C):
    z = X1 @ w
    loss = C * np.sum(np.logaddexp(0, z) - y * z) + 0.5 * w[:-1] @ w[:-1]
    return loss


def fit_logistic(X, y, C=1.0, tol=1e-6, max_iter=1000) -> LogisticModel:
    """L2-penalised logistic regression by damped Newton steps.

    Minimises ``0.5 |w|^2 + C * sum(logloss)``; the intercept is not
    penalised.
    """
    n, d = X.shape
    X1 = np.hstack([X, np.ones((n, 1))])
    w = np.zeros(d + 1)
    reg = np.ones(d + 1)
    reg[-1] = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(X1 @ w)
        grad = C * X1.T @ (p - y) + reg * w
        if np.linalg.norm(grad) < tol:
            break
        h = C * p * (1 - p)
        H = (X1 * h[:, None]).T @ X1 + np.diag(reg)
        H[np.diag_indices_from(H)] += 1e-12
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        f0 = _lr_objective(w, X1, y, C)
        t = 1.0
        slope = grad @ step
        # near the optimum the predicted decrease drops below what the objective
        # can resolve in floating point; take the plain Newton step there
        resolvable = slope > 1e-12 * max(1.0, abs(f0))
        w_new = w - step
        while resolvable and t > 1e-10:
            w_new = w - t * step
            if _lr_objective(w_new, X1, y, C) <= f0 - 1e-4 * t * slope:
                break
            t *= 0.5
        w = w_new
    return LogisticModel(w[:-1].copy(), float(w[-1]), it)


# ---------------------------------------------------------------- SVM

def rbf_kernel(A, B, gamma):
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SvmModel:
    support: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for the support rows
    rho: float
    gamma: float
    alpha: np.ndarray  # full dual vector, kept for diagnostics
    y_signed: np.ndarray
    C: float
    n_iter: int
    architecture: str = "SVM"

    @property
    def n_features(self):
        return self.support.shape[1]

    def score(self, X):
        if self.support.shape[0] == 0:
            return np.full(X.shape[0], -self.rho)
        return rbf_kernel(X, self.support, self.gamma) @ self.dual_coef - self.rho


def fit_svm(X, y, C=1.0, gamma="scale", tol=1e-3, max_iter=1_000_000) -> SvmModel:
    """C-SVC dual solved by SMO with second-order working-set selection."""
    n, d = X.shape
    if gamma == "scale":
        var = X.var()
        gamma = 1.0 / (d * var) if var > 0 else 1.0
    ys = np.where(y == 1, 1.0, -1.0)
    K = rbf_kernel(X, X, gamma)
    Q = K * ys[:, None] * ys[None, :]
    QD = np.diag(Q).copy()
    a = np.zeros(n)
    G = -np.ones(n)
    tau = 1e-12
    it = 0
    while it < max_iter:
        up = ((ys > 0) & (a < C)) | ((ys < 0) & (a > 0))
        low = ((ys > 0) & (a > 0)) | ((ys < 0) & (a < C))
        yg = -ys * G
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        gmax = yg[i]
        gmin = np.min(np.where(low, yg, np.inf))
        if gmax - gmin < tol:
            break
        b = gmax - yg
        cand = low & (b > 0)
        quad = QD[i] + QD - 2.0 * ys[i] * ys * Q[i]
        quad = np.where(quad > 0, quad, tau)
        obj = np.where(cand, -(b * b) / quad, np.inf)
        j = int(np.argmin(obj))
        it += 1
        Qi, Qj = Q[i], Q[j]
        ai, aj = a[i], a[j]
        if ys[i] != ys[j]:
            q = QD[i] + QD[j] + 2 * Qi[j]
            q = q if q > 0 else tau
            delta = (-G[i] - G[j]) / q
            diff = ai - aj
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            elif a[j] > C:
                a[j] = C
                a[i] = C + diff
        else:
            q = QD[i] + QD[j] - 2 * Qi[j]
            q = q if q > 0 else tau
            delta = (G[i] - G[j]) / q
            total = ai + aj
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            elif a[j] < 0:
                a[j] = 0.0
                a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = total
        G += Qi * (a[i] - ai) + Qj * (a[j] - aj)
    else:
        warnings.warn(f"SMO stopped at max_iter={max_iter} before reaching tol", RuntimeWarning)
    yG = ys * G
    free = (a > 0) & (a < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = ((a >= C) & (ys < 0)) | ((a <= 0) & (ys > 0))
        lb_mask = ((a >= C) & (ys > 0)) | ((a <= 0) & (ys < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub + lb) else 0.0
    sv = a > 0
    return SvmModel(X[sv].copy(), (a * ys)[sv], rho, float(gamma), a, ys, C, it)


# ---------------------------------------------------------------- forest

@dataclass
class ForestModel:
    trees: list
    n_features: int
    architecture: str = "RF"

    def score(self, X):
        votes = np.zeros(X.shape[0])
        for t in self.trees:
            votes += t.predict(X) == 1
        return votes / len(self.trees)


def fit_forest(X, y, n_trees=100, rng=0) -> ForestModel:
    from sklearn.ensemble import RandomForestClassifier

    gen = as_generator(rng)
    rf = RandomForestClassifier(n_estimators=n_trees, criterion="gini", max_features="sqrt",
                                bootstrap=True, random_state=int(gen.integers(2**31 - 1)),
                                n_jobs=1)
    rf.fit(X, y)
    return ForestModel(list(rf.estimators_), X.shape[1])


# ---------------------------------------------------------------- MLP

@dataclass
class MlpModel:
    net: NetCore
    n_epochs: int
    losses: list
    architecture: str = "MLP"

    @property
    def n_features(self):
        return self.net.sizes[0]

    def score(self, X):
        return expit(self.net(X)[:, 0])


def mlp_loss_grads(net: NetCore, X, y, alpha):
    """Mean log-loss plus ``alpha/2 * |W|^2 / batch`` and its gradients."""
    out, cache = net.forward(X)
    loss, g = bce_with_logits(out, y.reshape(-1, 1).astype(float))
    grads, _ = net.backward(cache, g)
    B = X.shape[0]
    for k in range(0, len(net.params), 2):
        W = net.params[k]
        loss += 0.5 * alpha * float(np.sum(W * W)) / B
        grads[k] = grads[k] + alpha * W / B
    return loss, grads


def fit_mlp(X, y, hidden=100, alpha=1e-4, learning_rate=1e-3, batch_size=200, max_epochs=200,
            plateau_tol=1e-5, plateau_epochs=10, rng=0) -> MlpModel:
    gen = as_generator(rng)
    n = X.shape[0]
    net = NetCore([X.shape[1], hidden, 1], ["relu", "linear"], gen)
    opt = Adam(net.params, learning_rate)
    bs = max(1, min(batch_size, n))
    best = math.inf
    stale = 0
    losses = []
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        perm = gen.permutation(n)
        total = 0.0
        for s in range(0, n, bs):
            idx = perm[s:s + bs]
            loss, grads = mlp_loss_grads(net, X[idx], y[idx], alpha)
            opt.step(grads)
            total += loss * idx.size
        total /= n
        losses.append(total)
        if not np.isfinite(total):
            raise FloatingPointError(f"MLP loss became non-finite at epoch {epoch}")
        if not np.isfinite(best) or total < best - plateau_tol * abs(best):
            best = total
            stale = 0
        else:
            stale += 1
            if stale >= plateau_epochs:
                break
    return MlpModel(net, epoch, losses)


# ---------------------------------------------------------------- interface

def train(spec: ModelSpec, data: TabularDataset, rng=0):
    require_both_classes(data, "training data")
    if data.n_rows < 2:
        raise DataError("need at least 2 training rows")
    X, y = data.features, data.labels
    if not np.all(np.isfinite(X)):
        raise DataError("training features must be finite")
    a = spec.architecture
    if a == "LR":
        return fit_logistic(X, y, spec.opt("C"), spec.opt("tol"), spec.opt("max_iter"))
    if a == "SVM":
        return fit_svm(X, y, spec.opt("C"), spec.opt("gamma"), spec.opt("tol"), spec.opt("max_iter"))
    if a == "RF":
        return fit_forest(X, y, spec.opt("n_trees"), rng)
    return fit_mlp(X, y, **{k: spec.opt(k) for k in DEFAULTS["MLP"]}, rng=rng)


def score(model, data) -> np.ndarray:
    X = data.features if isinstance(data, TabularDataset) else np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, got {X.shape[-1]}")
    return np.asarray(model.score(X), dtype=float)


def forward_feature_selection(spec: ModelSpec, train_data: TabularDataset, folds, rng=0,
                              min_gain: float = 1e-4) -> list[int]:
    """Greedy forward selection on mean cross-fold AUC.

    The best single feature is always kept; further features join while
    they lift the mean AUC by more than ``min_gain``.
    """
    from .stats import auc

    d = train_data.n_features
    if d < 1:
        raise ValueError("need at least one feature")
    if d == 1:
        return [0]
    gen = as_generator(rng)
    seeds = gen.integers(0, 2**31 - 1, size=len(folds))

    def cv_auc(cols):
        vals = []
        for (tr, te), s in zip(folds, seeds):
            sub = train_data.subset(tr).with_features(
                train_data.features[np.ix_(tr, cols)], [train_data.feature_names[c] for c in cols])
            m = train(spec, sub, int(s))
            vals.append(auc(score(m, train_data.features[np.ix_(te, cols)]), train_data.labels[te]))
        return float(np.mean(vals))

    selected: list[int] = []
    current = -math.inf
    while len(selected) < d:
        rest = [f for f in range(d) if f not in selected]
        scores = [cv_auc(selected + [f]) for f in rest]
        k = int(np.argmax(scores))
        if selected and scores[k] - current <= min_gain:
            break
        selected.append(rest[k])
        current = scores[k]
    return selected
