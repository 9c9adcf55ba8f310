"""Shared vocabulary: bounds, privacy budgets, sensitivity norms and releases
that carry their own noise variance.

Everything here is an immutable value. Arrays stored on releases are marked
read-only so a release can be handed to post-processing code without copying.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np


class ContractViolation(ValueError):
    """A caller broke a documented precondition (e.g. unclamped data)."""


class InvalidDataError(ValueError):
    """Input data cannot be processed (NaN values, wrong shapes)."""


class Norm(enum.Enum):
    L1 = "l1"
    L2 = "l2"


def _check_positive_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Bounds:
    """Clamping interval ``[lower, upper]`` of a raw variable."""

    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"bounds must be finite, got [{lo}, {hi}]")
        if not lo < hi:
            raise ValueError(f"bounds need lower < upper, got [{lo}, {hi}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    @classmethod
    def parse(cls, text: str) -> "Bounds":
        """Parse ``"L,U"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 2:
            raise ValueError(f"expected 'L,U', got {text!r}")
        return cls(float(parts[0]), float(parts[1]))


@dataclass(frozen=True)
class PureDP:
    """epsilon-DP; paired with the L1 norm and the Laplace mechanism."""

    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "epsilon", _check_positive_finite("epsilon", self.epsilon))

    norm = Norm.L1
    kind = "pure_dp"

    @property
    def value(self) -> float:
        return self.epsilon

    def scaled(self, fraction: float) -> "PureDP":
        return PureDP(self.epsilon * fraction)

    def remainder(self, part: "PureDP") -> "PureDP":
        return PureDP(self.epsilon - part.epsilon)

    def __add__(self, other: "PureDP") -> "PureDP":
        if not isinstance(other, PureDP):
            raise ContractViolation("cannot compose pure DP with zCDP budgets")
        return PureDP(self.epsilon + other.epsilon)


@dataclass(frozen=True)
class ZCDP:
    """rho-zCDP; paired with the L2 norm and the Gaussian mechanism."""

    rho: float

    def __post_init__(self):
        object.__setattr__(self, "rho", _check_positive_finite("rho", self.rho))

    norm = Norm.L2
    kind = "zcdp"

    @property
    def value(self) -> float:
        return self.rho

    def scaled(self, fraction: float) -> "ZCDP":
        return ZCDP(self.rho * fraction)

    def remainder(self, part: "ZCDP") -> "ZCDP":
        return ZCDP(self.rho - part.rho)

    def __add__(self, other: "ZCDP") -> "ZCDP":
        if not isinstance(other, ZCDP):
            raise ContractViolation("cannot compose zCDP with pure DP budgets")
        return ZCDP(self.rho + other.rho)


PrivacyBudget = Union[PureDP, ZCDP]


def compose(budgets: Iterable[PrivacyBudget]) -> PrivacyBudget:
    """Sequential composition: epsilons (or rhos) add."""
    budgets = list(budgets)
    if not budgets:
        raise ValueError("nothing to compose")
    total = budgets[0]
    for b in budgets[1:]:
        total = total + b
    return total


def split_budget(budget: PrivacyBudget, fraction: float) -> tuple[PrivacyBudget, PrivacyBudget]:
    """Split ``budget`` into ``(fraction * budget, rest)``.

    The second part is computed as a difference so the two parts compose back
    to a value within one rounding of the original.
    """
    fraction = float(fraction)
    if not 0 < fraction < 1:
        raise ValueError(f"split fraction must lie in (0, 1), got {fraction}")
    first = budget.scaled(fraction)
    return first, budget.remainder(first)


def budget_to_dict(budget: PrivacyBudget) -> dict:
    return {"kind": budget.kind, "value": budget.value}


def noise_variance_for(budget: PrivacyBudget, sensitivity: float, norm: Norm) -> float:
    """Per-coordinate variance of the noise the matching mechanism adds.

    zCDP(rho) with L2 sensitivity ``s`` -> ``s**2 / (2 rho)``;
    pure DP(eps) with L1 sensitivity ``s`` -> ``2 (s / eps)**2``.
    """
    if not (isinstance(sensitivity, (int, float, np.floating, np.integer))
            and math.isfinite(sensitivity) and sensitivity > 0):
        raise ValueError(f"sensitivity must be positive and finite, got {sensitivity!r}")
    if budget.norm is not norm:
        raise ContractViolation(
            f"{type(budget).__name__} budgets pair with the {budget.norm.name} norm, not {norm.name}"
        )
    if isinstance(budget, ZCDP):
        return sensitivity**2 / (2 * budget.rho)
    return 2 * (sensitivity / budget.epsilon) ** 2


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NoisyRelease:
    """Output of one mechanism call, with its per-coordinate noise variance."""

    values: np.ndarray
    noise_variance: np.ndarray
    budget_charged: PrivacyBudget

    def __post_init__(self):
        values = _frozen_array(self.values)
        var = _frozen_array(self.noise_variance)
        if values.size < 1:
            raise ValueError("a release needs at least one coordinate")
        if var.shape != values.shape:
            raise ValueError("values and noise_variance must have equal length")
        if not np.all(np.isfinite(var)) or np.any(var < 0):
            raise ValueError("noise variances must be finite and nonnegative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "noise_variance", var)

    def __len__(self) -> int:
        return self.values.size

    def coordinate(self, i: int) -> "EstimateWithVariance":
        return EstimateWithVariance(float(self.values[i]), float(self.noise_variance[i]))


@dataclass(frozen=True)
class EstimateWithVariance:
    """A post-processed scalar estimate and its (analytic) variance."""

    value: float
    variance: float

    def __post_init__(self):
        var = float(self.variance)
        if not math.isfinite(var) or var < 0:
            raise ValueError(f"variance must be finite and nonnegative, got {var}")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "variance", var)

    def to_dict(self) -> dict:
        return {"value": self.value, "variance": self.variance}


def shift_to_zero(data, bounds: Bounds) -> tuple[np.ndarray, float]:
    """Translate data so ``bounds.lower`` maps to 0; returns ``(shifted, width)``.

    Callers restore the original frame by adding ``bounds.lower`` back to any
    mean computed on the shifted values.
    """
    data = np.asarray(data, dtype=float)
    return data - bounds.lower, bounds.width()
