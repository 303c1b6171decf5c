"""AUC, DeLong variance, bootstrap z-comparison, Benjamini-Hochberg, power."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, rankdata

from .seeds import as_generator


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class AucSample:
    auc: float
    fold_id: object = None
    seed: int | None = None
    technique: str = ""
    model: str = ""

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise StatsError(f"AUC {self.auc} outside [0, 1]")


@dataclass
class ComparisonResult:
    z: float
    p_value: float
    baseline_mean: float
    candidate_mean: float
    degenerate: bool = False
    p_adjusted_significant: bool | None = None


def _split(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise StatsError("scores and labels differ in length")
    pos, neg = s[y == 1], s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise StatsError("AUC undefined: labels contain a single class")
    return s, y, pos, neg


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with half credit for ties, via midranks."""
    s, y, pos, neg = _split(scores, labels)
    ranks = rankdata(s)  # midranks
    n1, n0 = pos.size, neg.size
    # integer-valued numerator keeps the result exact for moderate n
    u2 = 2.0 * ranks[y == 1].sum() - n1 * (n1 + 1)
    return float(u2 / (2.0 * n1 * n0))


def placement_values(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """DeLong structural components.

    ``v10[i]`` is the fraction of negatives ranked below positive ``i``
    (ties count half); ``v01[j]`` the fraction of positives ranked above
    negative ``j``.
    """
    _, _, pos, neg = _split(scores, labels)
    n1, n0 = pos.size, neg.size
    r_all = rankdata(np.concatenate([pos, neg]))
    r_pos = rankdata(pos)
    r_neg = rankdata(neg)
    v10 = (r_all[:n1] - r_pos) / n0
    v01 = (n1 - (r_all[n1:] - r_neg)) / n1
    return v10, v01


def delong_variance(scores, labels) -> float:
    v10, v01 = placement_values(scores, labels)
    s10 = v10.var(ddof=1) if v10.size > 1 else 0.0
    s01 = v01.var(ddof=1) if v01.size > 1 else 0.0
    return float(s10 / v10.size + s01 / v01.size)


def delong_paired(scores_a, scores_b, labels) -> tuple[float, float, float]:
    """AUC difference and its DeLong variance for two scorings of the same rows.

    Returns (auc_a - auc_b, var_a + var_b - 2 cov_ab, cov_ab).
    """
    a10, a01 = placement_values(scores_a, labels)
    b10, b01 = placement_values(scores_b, labels)
    n1, n0 = a10.size, a01.size
    va = a10.var(ddof=1) / n1 + a01.var(ddof=1) / n0
    vb = b10.var(ddof=1) / n1 + b01.var(ddof=1) / n0
    cov = np.cov(a10, b10)[0, 1] / n1 + np.cov(a01, b01)[0, 1] / n0
    return float(a10.mean() - b10.mean()), float(va + vb - 2 * cov), float(cov)


def bootstrap_auc_distribution(samples, B: int = 1000, rng=0) -> np.ndarray:
    """Means of ``B`` with-replacement resamples of the AUC values."""
    vals = np.array([s.auc if isinstance(s, AucSample) else float(s) for s in samples])
    if vals.size == 0:
        raise StatsError("empty sample list")
    if vals.size < 2:
        raise StatsError("need at least 2 AUC samples to bootstrap")
    if B < 100:
        raise StatsError("B must be at least 100")
    gen = as_generator(rng)
    idx = gen.integers(0, vals.size, size=(B, vals.size))
    return vals[idx].mean(axis=1)


def two_sided_p(z: float) -> float:
    return float(2.0 * norm.sf(abs(z)))


def compare_distributions(base, cand) -> ComparisonResult:
    base = np.asarray(base, dtype=float)
    cand = np.asarray(cand, dtype=float)
    if base.size < 100 or cand.size < 100:
        raise StatsError("bootstrap vectors must have length >= 100")
    mb, mc = float(base.mean()), float(cand.mean())
    var = float(cand.var(ddof=1) + base.var(ddof=1))
    diff = mc - mb
    # bootstrap means of a constant sample can differ in the last ulp
    if var <= (8 * np.finfo(float).eps * max(1.0, abs(mb), abs(mc))) ** 2:
        if diff == 0.0:
            return ComparisonResult(0.0, 1.0, mb, mc, degenerate=True)
        return ComparisonResult(math.copysign(math.inf, diff), 0.0, mb, mc, degenerate=True)
    z = diff / math.sqrt(var)
    return ComparisonResult(z, two_sided_p(z), mb, mc)


def benjamini_hochberg(p_values, q: float = 0.05) -> np.ndarray:
    """Step-up rejections, reported in the input order."""
    p = np.asarray(p_values, dtype=float).ravel()
    if not 0 < q < 1:
        raise StatsError("q must lie in (0, 1)")
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise StatsError("p-values must lie in [0, 1]")
    m = p.size
    if m == 0:
        return np.zeros(0, dtype=bool)
    sp = np.sort(p)
    below = np.flatnonzero(sp <= q * np.arange(1, m + 1) / m)
    if below.size == 0:
        return np.zeros(m, dtype=bool)
    return p <= sp[below[-1]]


def binormal_shift(target_auc: float) -> float:
    return math.sqrt(2.0) * float(norm.ppf(target_auc))


def power_analysis(delta_auc: float, n: int, base_auc: float = 0.64, reps: int = 2000,
                   rng=0, *, alpha: float = 0.05, positive_fraction: float = 0.64,
                   score_correlation: float = 0.39) -> float:
    """Monte-Carlo power of the paired DeLong test.

    Each replicate draws ``n`` subjects (``positive_fraction`` positive),
    scores them with two equal-variance binormal models whose AUCs are
    ``base_auc`` and ``base_auc + delta_auc`` and whose within-class scores
    correlate at ``score_correlation``, then runs a two-sided DeLong test
    at ``alpha``. Returns the rejection fraction.
    """
    if not (0.5 <= base_auc and base_auc + delta_auc < 1 and base_auc + delta_auc >= 0.5):
        raise StatsError("infeasible AUC targets")
    if n < 20:
        raise StatsError("n must be at least 20")
    if reps < 100:
        raise StatsError("reps must be at least 100")
    if not -1 < score_correlation < 1:
        raise StatsError("score_correlation must lie in (-1, 1)")
    gen = as_generator(rng)
    n1 = int(round(n * positive_fraction))
    n0 = n - n1
    if n1 < 2 or n0 < 2:
        raise StatsError("n too small for the class ratio")
    da, db = binormal_shift(base_auc), binormal_shift(base_auc + delta_auc)
    labels = np.concatenate([np.ones(n1, dtype=np.int64), np.zeros(n0, dtype=np.int64)])
    rho = score_correlation
    crit = float(norm.isf(alpha / 2))
    rejections = 0
    for _ in range(reps):
        z1 = gen.standard_normal(n)
        z2 = gen.standard_normal(n)
        sa = z1 + da * labels
        sb = rho * z1 + math.sqrt(1 - rho * rho) * z2 + db * labels
        diff, var, _ = delong_paired(sb, sa, labels)
        if var <= 0:
            rejections += diff != 0
            continue
        rejections += abs(diff) / math.sqrt(var) > crit
    return rejections / reps
