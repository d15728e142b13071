"""Evaluation metrics: PEHE, lift and uplift curves, and the Wilcoxon test.

PEHE scores counterfactual prediction against a known ground truth.
The uplift curve is a ranking diagnostic usable without counterfactuals:
within each treatment group, individuals are sorted by predicted effect
and the group lift curves (cumulative positives above the ranked
base-rate expectation) are differenced at matching population fractions.
Its area (AUUC) is reported unnormalized.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, EvaluationError


def pehe(true_ite: np.ndarray, pred_ite: np.ndarray) -> float:
    """Mean squared error between true and predicted individual effects."""
    true_ite = np.asarray(true_ite, dtype=np.float64)
    pred_ite = np.asarray(pred_ite, dtype=np.float64)
    if true_ite.shape != pred_ite.shape:
        raise ConfigurationError(
            f"shape mismatch: {true_ite.shape} vs {pred_ite.shape}"
        )
    if true_ite.size == 0:
        raise ConfigurationError("pehe needs at least one sample")
    diff = true_ite - pred_ite
    return float(np.mean(diff * diff))


def population_accuracy(pred, truth) -> float:
    """Fraction of exactly matching population labels."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ConfigurationError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ConfigurationError("population_accuracy needs at least one sample")
    return float(np.mean(pred == truth))


def group_lift_curve(y: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Lift values of one treatment group at every depth k = 1..size.

    ``order`` is a permutation of the group's indices (best-ranked
    first). The value at depth k is the number of positives among the
    first k minus k times the group's positive rate, so the curve always
    returns to zero at full depth.
    """
    y = np.asarray(y, dtype=np.float64)
    order = np.asarray(order, dtype=np.intp)
    n = y.shape[0]
    if n == 0:
        raise EvaluationError("empty group has no lift curve")
    if sorted(order.tolist()) != list(range(n)):
        raise ConfigurationError("order must be a permutation of the group indices")
    ranked = y[order]
    cum_pos = np.cumsum(ranked)
    k = np.arange(1, n + 1, dtype=np.float64)
    total_pos = float(np.sum(ranked))
    return cum_pos - (k * total_pos) / n


@dataclass(frozen=True)
class UpliftCurve:
    """Uplift values at each fraction of the population treated, plus AUUC."""

    fractions: np.ndarray
    uplifts: np.ndarray
    auuc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fractions.tolist(), self.uplifts.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fraction", "uplift"])
            for frac, up in zip(self.fractions, self.uplifts):
                writer.writerow([repr(float(frac)), repr(float(up))])


def _descending_stable_order(scores: np.ndarray) -> np.ndarray:
    # ties keep their original index order
    return np.argsort(-scores, kind="stable")


def auuc(pred_ite: np.ndarray, y: np.ndarray, t: np.ndarray) -> UpliftCurve:
    """Uplift curve and its area from predicted effects and observed data.

    Each group is ranked separately by predicted effect (descending,
    stable). At every fraction j/n the treated and control lift curves
    are read at depth ceil(fraction * group size) and differenced; the
    AUUC is the mean of these n uplift values.
    """
    pred_ite = np.asarray(pred_ite, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t = np.asarray(t)
    if not (pred_ite.shape == y.shape == t.shape) or pred_ite.ndim != 1:
        raise ConfigurationError("pred_ite, y and t must be equal-length vectors")
    n = pred_ite.shape[0]
    treated = np.flatnonzero(t == 1)
    control = np.flatnonzero(t == 0)
    if len(treated) == 0 or len(control) == 0:
        raise EvaluationError("both treatment groups must be non-empty")

    lifts = {}
    sizes = {}
    for label, idx in (("treated", treated), ("control", control)):
        scores = pred_ite[idx]
        lifts[label] = group_lift_curve(y[idx], _descending_stable_order(scores))
        sizes[label] = len(idx)

    n1, n0 = sizes["treated"], sizes["control"]
    j = np.arange(1, n + 1)
    # integer ceil of j * n_g / n, immune to float rounding
    k1 = (j * n1 + n - 1) // n
    k0 = (j * n0 + n - 1) // n
    up1 = np.where(k1 > 0, lifts["treated"][np.maximum(k1 - 1, 0)], 0.0)
    up0 = np.where(k0 > 0, lifts["control"][np.maximum(k0 - 1, 0)], 0.0)
    uplifts = up1 - up0
    fractions = j / n
    # fsum keeps the area independent of summation order
    return UpliftCurve(fractions=fractions, uplifts=uplifts, auuc=math.fsum(uplifts) / n)


@dataclass(frozen=True)
class WilcoxonResult:
    """Signed-rank statistic, two-sided p-value, and usable pair count."""

    statistic: float
    p_value: float
    n_effective: int


EXACT_ENUMERATION_LIMIT = 20


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(sorted_vals):
        j = i
        while j + 1 < len(sorted_vals) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_min_ranksum_p(ranks: np.ndarray, w_observed: float) -> float:
    """P(min rank-sum <= observed) over all 2^n equiprobable sign patterns.

    Counted by convolving over doubled ranks (always integers, even with
    tied average ranks), which tallies every sign assignment exactly.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for d in doubled:
        d = int(d)
        new = counts.copy()
        new[d:] += counts[: total + 1 - d]
        counts = new
    threshold = int(round(2.0 * w_observed))
    sums = np.arange(total + 1)
    hit = np.minimum(sums, total - sums) <= threshold
    return float(counts[hit].sum() / 2.0 ** len(ranks))


def wilcoxon_signed_rank(a: np.ndarray, b: np.ndarray) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; tied absolute differences share
    average ranks. The statistic is the smaller of the positive and
    negative rank sums. The p-value enumerates all sign assignments
    exactly up to ``EXACT_ENUMERATION_LIMIT`` usable pairs, and uses the
    normal approximation with continuity correction beyond that.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigurationError("paired samples must be equal-length vectors")
    if a.size == 0:
        raise ConfigurationError("wilcoxon_signed_rank needs at least one pair")
    diff = a - b
    diff = diff[diff != 0.0]
    n = len(diff)
    if n == 0:
        return WilcoxonResult(statistic=0.0, p_value=1.0, n_effective=0)
    ranks = _average_ranks(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    w = min(w_plus, w_minus)
    if n <= EXACT_ENUMERATION_LIMIT:
        p = _exact_min_ranksum_p(ranks, w)
    else:
        mean = n * (n + 1) / 4.0
        sd = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0)
        z = (w - mean + 0.5) / sd
        p = math.erfc(-z / math.sqrt(2.0))
    return WilcoxonResult(statistic=w, p_value=min(p, 1.0), n_effective=n)
