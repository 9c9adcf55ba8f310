"""Private mean estimators and the post-processing algebra around them.

Internally every estimator works on data shifted into ``[0, R]`` with
``R = bounds.width()``; the reported ``mean`` is moved back to the original
frame. ``sum_estimate`` is always a sum of shifted values ``x - lower``.

The simplex estimators release the two column sums of ``(x, R - x)`` in one
vector mechanism call. That single release yields the sum and, by
post-processing, either a free count (unknown dataset size) or a second,
independent estimate of the sum (known size) that halves its variance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .mechanisms import NoiseSource, release
from .privacy_core import (
    Bounds,
    EstimateWithVariance,
    NoisyRelease,
    Norm,
    PrivacyBudget,
    PureDP,
    ZCDP,
    budget_to_dict,
    compose,
    shift_to_zero,
    split_budget,
)
from .transforms import (
    Imputation,
    augment_multidim,
    center_transform,
    clamp,
    resize_transform,
    simplex_augment,
)

COUNT_SENSITIVITY = 1.0
RELATIVE_COUNT_FLOOR = 1e-6


class EstimatorId(str, enum.Enum):
    SIMPLEX = "simplex"
    SIMPLEX_KNOWN_N = "simplex-known-n"
    PLUGIN = "plugin"
    CENTER = "center"
    RESIZE = "resize"


@dataclass(frozen=True)
class MeanReleaseReport:
    mean: float
    sum_estimate: EstimateWithVariance
    count_estimate: Optional[EstimateWithVariance]
    budget_charged: PrivacyBudget
    estimator_id: EstimatorId
    releases: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        out = {
            "estimator": self.estimator_id.value,
            "mean": self.mean,
            "sum": self.sum_estimate.to_dict(),
        }
        if self.count_estimate is not None:
            out["count"] = self.count_estimate.to_dict()
        out["budget"] = budget_to_dict(self.budget_charged)
        return out


def count_floor_for(R: float) -> float:
    return max(1.0, RELATIVE_COUNT_FLOOR * R)


def _guarded(denominator: float, floor: float) -> float:
    return denominator if denominator >= floor else floor


def _prepare(data, bounds: Bounds) -> tuple[np.ndarray, float]:
    return shift_to_zero(clamp(data, bounds), bounds)


# -- budget splits ---------------------------------------------------------

def balance_split(sum_sensitivity: float, count_weight: float,
                  budget: PrivacyBudget) -> float:
    """Fraction of ``budget`` for the sum so that
    ``Var(sum noise) == count_weight**2 * Var(count noise)``.

    With count sensitivity 1: zCDP gives ``s^2 / (s^2 + c^2)`` and pure DP
    gives ``s / (s + c)``.
    """
    s, c = float(sum_sensitivity), float(count_weight)
    if s <= 0 or c <= 0:
        raise ValueError("sensitivity and count weight must be positive")
    if isinstance(budget, ZCDP):
        return s * s / (s * s + c * c)
    return s / (s + c)


def equalize_noise_variances(bounds: Bounds, budget: PrivacyBudget) -> float:
    """Split making the sum's and the count's additive noise variances equal."""
    return balance_split(bounds.width(), COUNT_SENSITIVITY, budget)


def default_split(estimator: EstimatorId, bounds: Bounds, budget: PrivacyBudget) -> float:
    """Budget split used by the two-release baselines when none is given.

    Balances the two noise terms of the mean's numerator at the public
    midpoint ``R/2``: the count noise reaches the error scaled by the mean
    (plugin, resize) or by the centering origin (center), and the midpoint
    stands in for both without touching the data.
    """
    R = bounds.width()
    if estimator is EstimatorId.CENTER:
        return balance_split(R / 2, R / 2, budget)
    return balance_split(R, R / 2, budget)


# -- simplex estimators ----------------------------------------------------

def _simplex_columns(data, bounds: Bounds, weights=None, weight_bound=None):
    x, R = _prepare(data, bounds)
    if weights is not None:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != x.shape:
            raise ValueError("data and weights must have the same length")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if weight_bound is not None:
            R = R * float(weight_bound)
        x = np.clip(w * x, 0.0, R)
    rows = simplex_augment(x, R)
    return rows.sum(axis=0), R


def simplex_release(data, bounds: Bounds, budget: PrivacyBudget, source: NoiseSource,
                    *, weights=None, weight_bound: Optional[float] = None,
                    count_floor: Optional[float] = None) -> MeanReleaseReport:
    """Sum, free count and mean from one release of the augmented column sums.

    ``m1`` estimates the sum with the mechanism's full-budget variance;
    ``(m1 + m2) / R`` estimates the count with variance ``2 sigma^2 / R^2``
    (``1/rho`` under zCDP, ``4/eps^2`` under pure DP).

    With ``weights`` the first column holds ``w * (x - lower)`` clipped to
    ``[0, R]``, where ``R`` is the data width times ``weight_bound`` (or just
    the data width when ``weight_bound`` is None).
    """
    sums, R = _simplex_columns(data, bounds, weights, weight_bound)
    rel = release(sums, R, budget, source)
    m1, m2 = rel.values
    var = float(rel.noise_variance[0])
    count = (m1 + m2) / R
    floor = count_floor_for(R) if count_floor is None else count_floor
    mean = bounds.lower + m1 / _guarded(count, floor)
    return MeanReleaseReport(
        mean=mean,
        sum_estimate=EstimateWithVariance(m1, var),
        count_estimate=EstimateWithVariance(count, float(rel.noise_variance.sum()) / R**2),
        budget_charged=rel.budget_charged,
        estimator_id=EstimatorId.SIMPLEX,
        releases=(rel,),
    )


def simplex_known_n_release(data, n: int, bounds: Bounds, budget: PrivacyBudget,
                            source: NoiseSource, *, weights=None,
                            weight_bound: Optional[float] = None) -> MeanReleaseReport:
    """Known dataset size: average ``m1`` with ``nR - m2`` for half the variance."""
    if int(n) != n or n <= 0:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    sums, R = _simplex_columns(data, bounds, weights, weight_bound)
    rel = release(sums, R, budget, source)
    m1, m2 = rel.values
    total = (n * R + m1 - m2) / 2
    var = float(rel.noise_variance.sum()) / 4
    return MeanReleaseReport(
        mean=bounds.lower + total / n,
        sum_estimate=EstimateWithVariance(total, var),
        count_estimate=None,
        budget_charged=rel.budget_charged,
        estimator_id=EstimatorId.SIMPLEX_KNOWN_N,
        releases=(rel,),
    )


# -- baselines -------------------------------------------------------------

def _two_part_budget(split_fraction, estimator, bounds, budget):
    f = default_split(estimator, bounds, budget) if split_fraction is None else split_fraction
    return split_budget(budget, f)


def plugin_release(data, bounds: Bounds, budget: PrivacyBudget,
                   split_fraction: Optional[float] = None,
                   source: NoiseSource = None, *,
                   count_floor: Optional[float] = None) -> MeanReleaseReport:
    """Noisy sum over noisy count, each released separately."""
    sum_budget, count_budget = _two_part_budget(split_fraction, EstimatorId.PLUGIN, bounds, budget)
    x, R = _prepare(data, bounds)
    s = release([x.sum()], R, sum_budget, source)
    c = release([float(x.size)], COUNT_SENSITIVITY, count_budget, source)
    floor = count_floor_for(R) if count_floor is None else count_floor
    mean = bounds.lower + s.values[0] / _guarded(c.values[0], floor)
    return MeanReleaseReport(
        mean=mean,
        sum_estimate=s.coordinate(0),
        count_estimate=c.coordinate(0),
        budget_charged=compose([sum_budget, count_budget]),
        estimator_id=EstimatorId.PLUGIN,
        releases=(s, c),
    )


def center_release(data, bounds: Bounds, budget: PrivacyBudget,
                   split_fraction: Optional[float] = None,
                   source: NoiseSource = None, *,
                   count_floor: Optional[float] = None) -> MeanReleaseReport:
    """Sum of midpoint-centered data (sensitivity ``R/2``) plus a noisy count.

    In the shifted frame the origin is ``R/2`` and the sum estimate is
    ``n_hat * R/2 + m``; the mean is ``origin + m / n_hat``.
    """
    sum_budget, count_budget = _two_part_budget(split_fraction, EstimatorId.CENTER, bounds, budget)
    centered, origin, radius = center_transform(clamp(data, bounds), bounds)
    m = release([centered.sum()], radius, sum_budget, source)
    c = release([float(centered.size)], COUNT_SENSITIVITY, count_budget, source)
    n_hat = c.values[0]
    floor = count_floor_for(bounds.width()) if count_floor is None else count_floor
    mean = origin + m.values[0] / _guarded(n_hat, floor)
    shifted_origin = origin - bounds.lower
    sum_estimate = EstimateWithVariance(
        n_hat * shifted_origin + m.values[0],
        shifted_origin**2 * c.noise_variance[0] + m.noise_variance[0],
    )
    return MeanReleaseReport(
        mean=mean,
        sum_estimate=sum_estimate,
        count_estimate=c.coordinate(0),
        budget_charged=compose([sum_budget, count_budget]),
        estimator_id=EstimatorId.CENTER,
        releases=(m, c),
    )


def resize_release(data, bounds: Bounds, budget: PrivacyBudget,
                   split_fraction: Optional[float] = None,
                   imputation: Imputation = Imputation.UNIFORM,
                   source: NoiseSource = None) -> MeanReleaseReport:
    """Noisy count first, resize the data to it, then a noisy sum over the
    resized rows divided by the resized row count."""
    sum_budget, count_budget = _two_part_budget(split_fraction, EstimatorId.RESIZE, bounds, budget)
    clamped = clamp(data, bounds)
    c = release([float(clamped.size)], COUNT_SENSITIVITY, count_budget, source)
    resized = resize_transform(clamped, float(c.values[0]), bounds, imputation, source)
    x, R = shift_to_zero(resized.data, bounds)
    s = release([x.sum()], R, sum_budget, source)
    return MeanReleaseReport(
        mean=bounds.lower + s.values[0] / resized.target_count,
        sum_estimate=s.coordinate(0),
        count_estimate=c.coordinate(0),
        budget_charged=compose([count_budget, sum_budget]),
        estimator_id=EstimatorId.RESIZE,
        releases=(c, s),
    )


# -- counts ----------------------------------------------------------------

def release_count(n: int, budget: PrivacyBudget, source: NoiseSource) -> NoisyRelease:
    """A direct noisy count (sensitivity 1 under add/remove)."""
    return release([float(n)], COUNT_SENSITIVITY, budget, source)


def inverse_variance_weight(var_a: float, var_b: float) -> float:
    """Weight on estimate ``a`` in the minimum-variance combination with ``b``."""
    if var_a <= 0 or var_b <= 0:
        raise ValueError("variances must be positive")
    return (1 / var_a) / (1 / var_a + 1 / var_b)


def refine_count(free_count: EstimateWithVariance,
                 count_release: Union[NoisyRelease, EstimateWithVariance]) -> EstimateWithVariance:
    """Inverse-variance combination of the free count with an extra count.

    Under zCDP with budgets rho (free) and rho' (extra) the weight on the
    free count is ``rho / (rho + 2 rho')``.
    """
    other = count_release.coordinate(0) if isinstance(count_release, NoisyRelease) else count_release
    w = inverse_variance_weight(free_count.variance, other.variance)
    value = w * free_count.value + (1 - w) * other.value
    variance = 1 / (1 / free_count.variance + 1 / other.variance)
    return EstimateWithVariance(value, variance)


# -- vectors ---------------------------------------------------------------

@dataclass(frozen=True)
class MultidimRelease:
    sums: tuple
    count: EstimateWithVariance
    budget_charged: PrivacyBudget
    release: NoisyRelease = field(repr=False, compare=False)


def multidim_release(rows, R: float, budget: PrivacyBudget,
                     source: NoiseSource) -> MultidimRelease:
    """Column sums of ``d`` nonnegative columns plus a count, in one release.

    The count is ``||m||_1 / R`` over all ``d + 1`` noisy coordinates. Its
    reported variance ``(d + 1) sigma^2 / R^2`` holds while every noisy
    coordinate stays positive; when some column sum is near zero the absolute
    value folds noise and the count is biased upward.
    """
    aug = augment_multidim(rows, R, budget.norm)
    rel = release(aug.sum(axis=0), R, budget, source)
    d = aug.shape[1] - 1
    count = float(np.abs(rel.values).sum()) / R
    count_var = float(rel.noise_variance.sum()) / R**2
    return MultidimRelease(
        sums=tuple(rel.coordinate(j) for j in range(d)),
        count=EstimateWithVariance(count, count_var),
        budget_charged=rel.budget_charged,
        release=rel,
    )


# -- dispatch --------------------------------------------------------------

def run_estimator(estimator: EstimatorId, data, bounds: Bounds, budget: PrivacyBudget,
                  source: NoiseSource, *, split_fraction: Optional[float] = None,
                  imputation: Imputation = Imputation.UNIFORM,
                  known_n: Optional[int] = None) -> MeanReleaseReport:
    estimator = EstimatorId(estimator)
    if estimator is EstimatorId.SIMPLEX:
        return simplex_release(data, bounds, budget, source)
    if estimator is EstimatorId.SIMPLEX_KNOWN_N:
        n = len(data) if known_n is None else known_n
        return simplex_known_n_release(data, n, bounds, budget, source)
    if estimator is EstimatorId.PLUGIN:
        return plugin_release(data, bounds, budget, split_fraction, source)
    if estimator is EstimatorId.CENTER:
        return center_release(data, bounds, budget, split_fraction, source)
    return resize_release(data, bounds, budget, split_fraction, imputation, source)
