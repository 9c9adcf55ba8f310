"""Row-level transformations with sensitivity bookkeeping.

All augmentation maps are 1-stable: output row ``i`` depends on input row
``i`` only. Augmented rows are returned as a 2-d array (one row per record)
rather than a list of objects; :class:`AugmentedRow` wraps a single row when
one is needed on its own.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .mechanisms import NoiseSource
from .privacy_core import Bounds, ContractViolation, InvalidDataError, Norm


@dataclass(frozen=True)
class AugmentedRow:
    coords: tuple
    norm_target: float

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if min(coords) < 0:
            raise ContractViolation(f"augmented row has a negative coordinate: {coords}")
        object.__setattr__(self, "coords", coords)


class Imputation(enum.Enum):
    UNIFORM = "uniform"
    MIDPOINT = "midpoint"


@dataclass(frozen=True)
class ResizedDataset:
    data: np.ndarray
    target_count: int
    imputed_count: int

    def __post_init__(self):
        if len(self.data) != self.target_count:
            raise ValueError("resized data length must equal target_count")
        if not 0 <= self.imputed_count <= self.target_count:
            raise ValueError("imputed_count must lie in [0, target_count]")


def clamp(data, bounds: Bounds) -> np.ndarray:
    data = np.asarray(data, dtype=float).reshape(-1)
    if np.isnan(data).any():
        idx = int(np.flatnonzero(np.isnan(data))[0])
        raise InvalidDataError(f"NaN at position {idx}; refusing to clamp it")
    return np.clip(data, bounds.lower, bounds.upper)


def _check_in_range(values: np.ndarray, R: float, what: str):
    bad = np.flatnonzero((values < 0) | (values > R))
    if bad.size:
        i = int(bad[0])
        raise ContractViolation(f"{what} at row {i} is {values[i]!r}, outside [0, {R}]")


def _augment_scalar(values: np.ndarray, R: float) -> np.ndarray:
    return np.column_stack([values, R - values])


def simplex_augment(data, R: float) -> np.ndarray:
    """Map each ``x`` in ``[0, R]`` to ``(x, R - x)``.

    Every output row has L1 norm ``R``; its L2 norm is at most ``R``.
    """
    data = np.asarray(data, dtype=float).reshape(-1)
    _check_in_range(data, R, "value")
    return _augment_scalar(data, R)


def simplex_augment_weighted(data, weights, R: float) -> np.ndarray:
    """Map each ``x`` with weight ``w`` to ``(w x, R - w x)``.

    ``R`` bounds the product ``w x``; clamping the product is up to the caller.
    """
    data = np.asarray(data, dtype=float).reshape(-1)
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if weights.shape != data.shape:
        raise ValueError("data and weights must have the same length")
    if np.any(weights <= 0):
        raise ContractViolation("weights must be strictly positive")
    products = weights * data
    _check_in_range(products, R, "weighted value")
    return _augment_scalar(products, R)


def augment_multidim(rows, R: float, p_norm: Norm = Norm.L1) -> np.ndarray:
    """Append the slack column ``R - sum_j x_ij`` to a ``(n, d)`` array.

    Rows must be nonnegative with coordinate sum at most ``R`` so the slack is
    nonnegative and every augmented row has L1 norm exactly ``R``. For
    ``p_norm=L2`` the stored row is the same; the caller releases it with L2
    sensitivity ``R`` (the L2 norm never exceeds the L1 norm).
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise InvalidDataError(f"expected a 2-d array of rows, got shape {rows.shape}")
    if rows.shape[0] == 0:
        return np.zeros((0, rows.shape[1] + 1))
    neg = np.flatnonzero((rows < 0).any(axis=1))
    if neg.size:
        raise ContractViolation(f"row {int(neg[0])} has a negative coordinate")
    ord_ = 1 if p_norm is Norm.L1 else 2
    norms = np.linalg.norm(rows, ord=ord_, axis=1)
    over = np.flatnonzero(norms > R)
    if over.size:
        i = int(over[0])
        raise ContractViolation(f"row {i} has {p_norm.name} norm {norms[i]!r} > R = {R}")
    totals = rows.sum(axis=1)
    over = np.flatnonzero(totals > R)
    if over.size:
        i = int(over[0])
        raise ContractViolation(
            f"row {i} sums to {totals[i]!r} > R = {R}; the slack column would go negative"
        )
    return np.column_stack([rows, R - totals])


def center_transform(data, bounds: Bounds) -> tuple[np.ndarray, float, float]:
    """Subtract the bounds' midpoint. Returns ``(centered, origin, radius)``.

    The centered values lie in ``[-radius, radius]``, so a sum over them has
    add/remove sensitivity ``radius`` rather than ``max(|lower|, upper)``.
    """
    data = np.asarray(data, dtype=float).reshape(-1)
    origin = bounds.midpoint
    radius = bounds.width() / 2
    return data - origin, origin, radius


def raw_sum_sensitivity(bounds: Bounds) -> float:
    return max(abs(bounds.lower), abs(bounds.upper))


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def resize_transform(data, noisy_count: float, bounds: Bounds,
                     imputation: Imputation = Imputation.UNIFORM,
                     source: NoiseSource | None = None) -> ResizedDataset:
    """Force the dataset to a (rounded) privatized size.

    Too many rows: keep a uniform random subset. Too few: append imputed
    values, either uniform over the bounds or the bounds' midpoint. The target
    is floored at 1 so downstream divisions stay defined.
    """
    data = np.asarray(data, dtype=float).reshape(-1)
    if not math.isfinite(noisy_count):
        raise ValueError(f"noisy_count must be finite, got {noisy_count}")
    target = max(1, _round_half_away(noisy_count))
    n = data.size
    if target == n:
        return ResizedDataset(data.copy(), target, 0)
    if source is None:
        raise ValueError("resizing needs a noise source")
    if target < n:
        return ResizedDataset(data[source.subsample_indices(n, target)], target, 0)
    extra = target - n
    if imputation is Imputation.MIDPOINT:
        fill = np.full(extra, bounds.midpoint)
    else:
        fill = source.uniform(bounds.lower, bounds.upper, extra)
    return ResizedDataset(np.concatenate([data, fill]), target, extra)
