"""Statistical primitives: chi-square CDF/quantile, ROC/AUC, rank tests,
quantile envelopes.

The chi-square CDF is computed from the regularized lower incomplete gamma
function (series for small arguments, continued fraction otherwise) so the
package carries no special-function dependency on its hot paths; quantiles
invert the CDF by bracketed bisection.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import stdtr

from .core import ValidationError

_MAX_GAMMA_ITER = 500
_GAMMA_EPS = 1e-16


def _gamma_series(a: float, x: float) -> float:
    # lower regularized gamma P(a, x), valid for x < a + 1
    term = 1.0 / a
    total = term
    for n in range(1, _MAX_GAMMA_ITER):
        term *= x / (a + n)
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a: float, x: float) -> float:
    # upper regularized gamma Q(a, x) via Lentz's continued fraction, x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_GAMMA_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValidationError(f"shape parameter must be positive, got {a}")
    if x < 0:
        raise ValidationError(f"argument must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(_gamma_series(a, x), 1.0)
    return max(1.0 - _gamma_contfrac(a, x), 0.0)


def chi2_cdf(x: float, k: int) -> float:
    """CDF of the chi-square distribution with k degrees of freedom."""
    if k < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {k}")
    if x < 0:
        raise ValidationError(f"chi-square argument must be nonnegative, got {x}")
    return gammainc_lower(0.5 * k, 0.5 * x)


@lru_cache(maxsize=4096)
def chi2_quantile(p: float, k: int) -> float:
    """Inverse chi-square CDF by bracketed bisection, accurate to ~1e-12."""
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie strictly between 0 and 1, got {p}")
    if k < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {k}")
    lo = 0.0
    hi = k + 10.0 * math.sqrt(2.0 * k) + 10.0
    while chi2_cdf(hi, k) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if chi2_cdf(mid, k) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Standard normal quantile by bisection on the erfc-based CDF."""
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie strictly between 0 and 1, got {p}")
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bonferroni_threshold(alpha: float, n_tests: int) -> float:
    """Per-test significance level after Bonferroni correction."""
    if n_tests < 1:
        raise ValidationError(f"n_tests must be >= 1, got {n_tests}")
    return alpha / n_tests


def midranks(values) -> np.ndarray:
    """Ranks 1..n with ties assigned the average of their rank range."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=float)
    i = 0
    sv = v[order]
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True, eq=False)
class RocResult:
    """ROC sweep with rank-based AUC and a Youden-J operating point.

    The sweep classifies "score >= threshold" as positive; thresholds run
    from +inf down through the distinct scores, so tpr and fpr are
    nondecreasing and the trapezoidal area under (fpr, tpr) equals `auc`.
    """

    auc: float
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    sensitivity: float
    specificity: float


def roc_auc(pos_scores, neg_scores) -> RocResult:
    """Rank (Mann-Whitney) AUC with midrank tie handling.

    Higher score means more abnormal; `pos_scores` is the positive class.
    """
    pos = np.asarray(pos_scores, dtype=float)
    neg = np.asarray(neg_scores, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise ValidationError("both score sets must be non-empty")
    if not (np.isfinite(pos).all() and np.isfinite(neg).all()):
        raise ValidationError("scores must be finite")
    n_pos, n_neg = pos.size, neg.size
    ranks = midranks(np.concatenate([pos, neg]))
    u = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    auc = u / (n_pos * n_neg)

    cuts = np.unique(np.concatenate([pos, neg]))[::-1]
    thresholds = np.concatenate([[np.inf], cuts])
    tpr = np.empty(thresholds.size)
    fpr = np.empty(thresholds.size)
    for i, t in enumerate(thresholds):
        tpr[i] = np.count_nonzero(pos >= t) / n_pos
        fpr[i] = np.count_nonzero(neg >= t) / n_neg
    best = int(np.argmax(tpr - fpr))
    return RocResult(
        auc=float(auc),
        thresholds=thresholds,
        tpr=tpr,
        fpr=fpr,
        sensitivity=float(tpr[best]),
        specificity=float(1.0 - fpr[best]),
    )


_EXACT_RANKSUM_LIMIT = 12


def wilcoxon_ranksum(a, b) -> float:
    """Two-sided Wilcoxon rank-sum p-value.

    Exact enumeration of all rank assignments when the pooled size is at
    most 12; otherwise a normal approximation with tie-corrected variance
    and a 0.5 continuity correction. When every pooled value is identical
    the statistic carries no information and p = 1 by convention.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValidationError("both samples must be non-empty")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValidationError("samples must be finite")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    n_a, n_total = a.size, pooled.size
    ranks = midranks(pooled)
    w_obs = ranks[:n_a].sum()

    if n_total <= _EXACT_RANKSUM_LIMIT:
        # rank sums are multiples of 0.5, so exact comparisons are safe
        le = ge = count = 0
        for combo in itertools.combinations(range(n_total), n_a):
            w = ranks[list(combo)].sum()
            count += 1
            if w <= w_obs:
                le += 1
            if w >= w_obs:
                ge += 1
        return min(1.0, 2.0 * min(le, ge) / count)

    mean_w = n_a * (n_total + 1) / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = (tie_counts.astype(float) ** 3 - tie_counts).sum() / (n_total * (n_total - 1))
    var_w = n_a * (n_total - n_a) / 12.0 * ((n_total + 1) - tie_term)
    if var_w <= 0:
        return 1.0
    z = max(0.0, abs(w_obs - mean_w) - 0.5) / math.sqrt(var_w)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def spearman(a, b) -> tuple[float, float]:
    """Spearman correlation of midranks with a two-sided t-approximation p.

    Requires at least 3 paired observations and nonconstant ranks on each
    side.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("inputs must be 1-D sequences of equal length")
    n = a.size
    if n < 3:
        raise ValidationError(f"need at least 3 observations, got {n}")
    ra = midranks(a)
    rb = midranks(b)
    da = ra - ra.mean()
    db = rb - rb.mean()
    va = (da * da).sum()
    vb = (db * db).sum()
    if va == 0.0 or vb == 0.0:
        raise ValidationError("zero rank variance: one input is constant")
    rho = float((da * db).sum() / math.sqrt(va * vb))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return rho, min(1.0, p)


def quantile_envelope(curves, coverage: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise central envelope of a family of curves.

    Returns (lower, upper, median): per-column empirical quantiles at
    (1-coverage)/2 and 1-(1-coverage)/2 plus the pointwise median, using
    linear interpolation between order statistics.
    """
    c = np.asarray(curves, dtype=float)
    if c.ndim != 2 or c.shape[0] < 2:
        raise ValidationError("need a matrix with at least 2 curve rows")
    if not (0.0 < coverage <= 1.0):
        raise ValidationError(f"coverage must lie in (0, 1], got {coverage}")
    tail = (1.0 - coverage) / 2.0
    lower, median, upper = np.quantile(c, [tail, 0.5, 1.0 - tail], axis=0, method="linear")
    return lower, upper, median
