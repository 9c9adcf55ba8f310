"""Laplace and Gaussian vector mechanisms over a pluggable noise source."""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from .privacy_core import (
    Norm,
    NoisyRelease,
    PrivacyBudget,
    PureDP,
    ZCDP,
    noise_variance_for,
)

# Largest double strictly below 0.5; keeps the inverse CDF away from log(0).
_HALF_BELOW = float(np.nextafter(0.5, 0.0))


def mix_seed(*parts: int) -> int:
    """Hash a tuple of integers into one 64-bit seed."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class NoiseSource:
    """Randomness for one release (or one Monte Carlo trial).

    Build with :meth:`seeded` for real use. :meth:`zero_noise` returns 0 for
    every noise draw and exists for oracle tests; it must be requested with
    ``non_private=True``. A source is single-owner state: do not share one
    across threads.
    """

    def __init__(self, seed: Union[int, Sequence[int], None], *, _zero: bool = False):
        self.seed = seed
        self.is_zero = _zero
        self._rng = None if _zero else np.random.default_rng(seed)

    @classmethod
    def seeded(cls, seed: Union[int, Sequence[int]]) -> "NoiseSource":
        return cls(seed)

    @classmethod
    def zero_noise(cls, *, non_private: bool = False) -> "NoiseSource":
        if not non_private:
            raise PermissionError("ZeroNoise releases are not private; pass non_private=True")
        return cls(None, _zero=True)

    def __repr__(self):
        return "NoiseSource(zero)" if self.is_zero else f"NoiseSource(seed={self.seed!r})"

    @property
    def generator(self) -> np.random.Generator:
        """Underlying numpy generator (seeded sources only)."""
        if self.is_zero:
            raise RuntimeError("the zero-noise source has no generator")
        return self._rng

    def laplace(self, scale: float, size: int) -> np.ndarray:
        """Laplace(0, scale) draws by inverse CDF of a uniform."""
        if self.is_zero:
            return np.zeros(size)
        u = self._rng.random(size) - 0.5
        a = np.minimum(np.abs(u), _HALF_BELOW)
        return -scale * np.sign(u) * np.log1p(-2.0 * a)

    def gaussian(self, sd: float, size: int) -> np.ndarray:
        if self.is_zero:
            return np.zeros(size)
        return sd * self._rng.standard_normal(size)

    # The two draws below are not privacy noise; the zero source makes them
    # deterministic rather than random.
    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        if self.is_zero:
            return np.full(size, (low + high) / 2)
        return self._rng.uniform(low, high, size)

    def subsample_indices(self, n: int, k: int) -> np.ndarray:
        """Indices of a uniform random size-``k`` subset of ``range(n)``, sorted."""
        if self.is_zero:
            return np.arange(k)
        return np.sort(self._rng.choice(n, size=k, replace=False))


def _as_vector(values) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=float))


def laplace_vector(values, l1_sensitivity: float, epsilon: float,
                   source: NoiseSource) -> NoisyRelease:
    """Add iid Laplace(l1_sensitivity / epsilon) noise to every coordinate."""
    budget = PureDP(epsilon)
    var = noise_variance_for(budget, l1_sensitivity, Norm.L1)
    values = _as_vector(values)
    noisy = values + source.laplace(l1_sensitivity / budget.epsilon, values.size)
    return NoisyRelease(noisy, np.full(values.size, var), budget)


def gaussian_vector(values, l2_sensitivity: float, rho: float,
                    source: NoiseSource) -> NoisyRelease:
    """Add iid N(0, l2_sensitivity**2 / (2 rho)) noise to every coordinate."""
    budget = ZCDP(rho)
    var = noise_variance_for(budget, l2_sensitivity, Norm.L2)
    values = _as_vector(values)
    noisy = values + source.gaussian(np.sqrt(var), values.size)
    return NoisyRelease(noisy, np.full(values.size, var), budget)


def release(values, sensitivity: float, budget: PrivacyBudget,
            source: NoiseSource) -> NoisyRelease:
    """Dispatch to the mechanism matching the budget type.

    ``sensitivity`` is read in the budget's norm: L1 for pure DP, L2 for zCDP.
    """
    if isinstance(budget, ZCDP):
        return gaussian_vector(values, sensitivity, budget.rho, source)
    if isinstance(budget, PureDP):
        return laplace_vector(values, sensitivity, budget.epsilon, source)
    raise TypeError(f"unknown budget type {type(budget).__name__}")
