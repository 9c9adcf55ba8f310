"""Monte Carlo comparison of the mean estimators.

One dataset is drawn per experiment and held fixed; only the mechanism noise
varies across trials. Every (estimator, trial) pair gets its own noise source
seeded from a hash of ``(master_seed, estimator code, trial index)``, so any
single trial can be replayed and estimator order does not matter.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .estimators import EstimatorId, MeanReleaseReport, run_estimator
from .mechanisms import NoiseSource, mix_seed
from .privacy_core import Bounds, PrivacyBudget, PureDP, ZCDP
from .transforms import Imputation, clamp

logger = logging.getLogger(__name__)

DATASET_STREAM = 0
ESTIMATOR_CODES = {
    EstimatorId.SIMPLEX: 1,
    EstimatorId.SIMPLEX_KNOWN_N: 2,
    EstimatorId.PLUGIN: 3,
    EstimatorId.CENTER: 4,
    EstimatorId.RESIZE: 5,
}
TABLE_ESTIMATORS = (EstimatorId.PLUGIN, EstimatorId.SIMPLEX, EstimatorId.CENTER, EstimatorId.RESIZE)


# -- distributions ---------------------------------------------------------

@dataclass(frozen=True)
class LogNormal:
    location: float = 0.0
    scale: float = 1.0
    name = "lognormal"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("lognormal scale must be positive")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.lognormal(self.location, self.scale, n)

    def to_dict(self):
        return {"kind": self.name, "location": self.location, "scale": self.scale}


@dataclass(frozen=True)
class Normal:
    mean: float = 0.0
    sd: float = 1.0
    name = "normal"

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("normal sd must be positive")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, self.sd, n)

    def to_dict(self):
        return {"kind": self.name, "mean": self.mean, "sd": self.sd}


@dataclass(frozen=True)
class Uniform:
    low: float = 0.0
    high: float = 100.0
    name = "uniform"

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("uniform needs low < high")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, n)

    def to_dict(self):
        return {"kind": self.name, "low": self.low, "high": self.high}


Distribution = Union[LogNormal, Normal, Uniform]

# Uniform's bounds are the data range; the other two are wide enough that
# clamping almost never bites at n = 100.
DEFAULT_BOUNDS = {
    "lognormal": Bounds(0.0, 10.0),
    "normal": Bounds(-5.0, 5.0),
    "uniform": Bounds(0.0, 100.0),
}

TABLE_DISTRIBUTIONS = (LogNormal(0.0, 1.0), Normal(0.0, 1.0), Uniform(0.0, 100.0))
TABLE_BUDGETS = (PureDP(0.5), ZCDP(0.5))


def mechanism_name(budget: PrivacyBudget) -> str:
    return "gaussian" if isinstance(budget, ZCDP) else "laplace"


def mechanism_to_dict(budget: PrivacyBudget) -> dict:
    """Same shape the experiment-spec parser reads back."""
    key = "rho" if isinstance(budget, ZCDP) else "epsilon"
    return {"kind": mechanism_name(budget), key: budget.value}


# -- experiment types ------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    distribution: Distribution
    n_points: int
    bounds: Bounds
    budget: PrivacyBudget
    estimators: tuple = TABLE_ESTIMATORS
    trials: int = 10_000
    master_seed: int = 0
    split_fraction: Optional[float] = None
    imputation: Imputation = Imputation.UNIFORM
    zero_noise: bool = False
    keep_samples: bool = False

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValueError("n_points must be a positive integer")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if self.split_fraction is not None and not 0 < self.split_fraction < 1:
            raise ValueError("split_fraction must lie in (0, 1)")
        object.__setattr__(self, "estimators", tuple(EstimatorId(e) for e in self.estimators))

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.to_dict(),
            "n_points": self.n_points,
            "bounds": [self.bounds.lower, self.bounds.upper],
            "mechanism": mechanism_to_dict(self.budget),
            "estimators": [e.value for e in self.estimators],
            "trials": self.trials,
            "master_seed": self.master_seed,
            "split_fraction": self.split_fraction,
            "imputation": self.imputation.value,
            "zero_noise": self.zero_noise,
        }


@dataclass
class EstimatorMetrics:
    avg_abs_error: float
    rmse: float
    avg_abs_error_se: float
    rmse_se: float
    trials: int
    release_samples: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "avg_abs_error": self.avg_abs_error,
            "rmse": self.rmse,
            "avg_abs_error_se": self.avg_abs_error_se,
            "rmse_se": self.rmse_se,
            "trials": self.trials,
        }


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    true_sample_mean: float
    metrics: dict

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "true_sample_mean": self.true_sample_mean,
            "estimators": {e.value: m.to_dict() for e, m in self.metrics.items()},
        }


def error_metrics(errors: np.ndarray) -> tuple[float, float, float, float]:
    """``(avg |e|, rmse, se of avg |e|, delta-method se of rmse)``."""
    errors = np.asarray(errors, dtype=float)
    n = errors.size
    abs_err = np.abs(errors)
    sq = errors * errors
    avg_abs = float(np.mean(abs_err))
    mse = float(np.mean(sq))
    rmse = math.sqrt(mse)
    if n > 1:
        se_abs = float(np.std(abs_err, ddof=1)) / math.sqrt(n)
        se_mse = float(np.std(sq, ddof=1)) / math.sqrt(n)
    else:
        se_abs = se_mse = 0.0
    se_rmse = se_mse / (2 * rmse) if rmse > 0 else 0.0
    return avg_abs, rmse, se_abs, se_rmse


# -- operations ------------------------------------------------------------

def dataset_source(master_seed: int) -> NoiseSource:
    return NoiseSource.seeded(mix_seed(master_seed, DATASET_STREAM, 0))


def trial_source(master_seed: int, stream: int, trial: int) -> NoiseSource:
    return NoiseSource.seeded(mix_seed(master_seed, stream, trial))


def generate_dataset(spec: ExperimentSpec, source: Optional[NoiseSource] = None) -> np.ndarray:
    """Draw ``spec.n_points`` unclamped values from the spec's distribution."""
    source = dataset_source(spec.master_seed) if source is None else source
    return spec.distribution.sample(source.generator, spec.n_points)


def monte_carlo(fn: Callable[[NoiseSource], float], trials: int, master_seed: int,
                stream: int) -> np.ndarray:
    """Evaluate ``fn`` once per trial with that trial's own noise source."""
    out = np.empty(trials)
    for t in range(trials):
        out[t] = fn(trial_source(master_seed, stream, t))
    return out


def run_experiment(spec: ExperimentSpec, data: Optional[np.ndarray] = None) -> ExperimentResult:
    """Run every estimator ``spec.trials`` times on one fixed dataset.

    Errors are measured against the mean of the clamped dataset.
    """
    raw = generate_dataset(spec) if data is None else np.asarray(data, dtype=float)
    clamped = clamp(raw, spec.bounds)
    truth = float(np.mean(clamped))
    zero = NoiseSource.zero_noise(non_private=True) if spec.zero_noise else None
    metrics = {}
    for est in spec.estimators:
        code = ESTIMATOR_CODES[est]

        def one(source: NoiseSource) -> float:
            report: MeanReleaseReport = run_estimator(
                est, clamped, spec.bounds, spec.budget, zero or source,
                split_fraction=spec.split_fraction, imputation=spec.imputation,
            )
            return report.mean

        try:
            releases = monte_carlo(one, spec.trials, spec.master_seed, code)
        except Exception as exc:
            raise RuntimeError(f"estimator {est.value} failed: {exc}") from exc
        if not np.all(np.isfinite(releases)):
            raise RuntimeError(f"estimator {est.value} produced non-finite releases")
        avg_abs, rmse, se_abs, se_rmse = error_metrics(releases - truth)
        metrics[est] = EstimatorMetrics(avg_abs, rmse, se_abs, se_rmse, spec.trials,
                                        releases if spec.keep_samples else None)
        logger.debug("%s %s %s: rmse=%.6g", spec.distribution.name,
                     mechanism_name(spec.budget), est.value, rmse)
    return ExperimentResult(spec, truth, metrics)


@dataclass
class Table1Result:
    cells: dict  # (distribution name, mechanism name) -> ExperimentResult

    def metric(self, dist: str, mech: str, est: EstimatorId, which: str) -> float:
        return getattr(self.cells[(dist, mech)].metrics[est], which)

    def columns(self):
        return [(d.name, mechanism_name(b)) for d in TABLE_DISTRIBUTIONS for b in TABLE_BUDGETS]

    def rows(self):
        """Table layout: 8 rows (2 metrics x 4 estimators) by 6 value columns."""
        out = []
        for which in ("avg_abs_error", "rmse"):
            for est in TABLE_ESTIMATORS:
                out.append((which, est.value,
                            [self.metric(d, m, est, which) for d, m in self.columns()]))
        return out

    def write_csv(self, path: Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "estimator"] + [f"{d}/{m}" for d, m in self.columns()])
            for which, est, values in self.rows():
                w.writerow([which, est] + [repr(v) for v in values])

    def to_dict(self) -> dict:
        return {f"{d}/{m}": res.to_dict() for (d, m), res in self.cells.items()}


def run_table1_suite(trials: int = 10_000, master_seed: int = 0, *,
                     zero_noise: bool = False, n_points: int = 100,
                     bounds: Optional[dict] = None) -> Table1Result:
    """3 distributions x 2 mechanisms x 4 estimators, one dataset per distribution."""
    bounds = {**DEFAULT_BOUNDS, **(bounds or {})}
    cells = {}
    for dist in TABLE_DISTRIBUTIONS:
        data = None
        for budget in TABLE_BUDGETS:
            spec = ExperimentSpec(dist, n_points, bounds[dist.name], budget,
                                  TABLE_ESTIMATORS, trials, master_seed, zero_noise=zero_noise)
            if data is None:
                data = generate_dataset(spec)
            cells[(dist.name, mechanism_name(budget))] = run_experiment(spec, data)
    return Table1Result(cells)


# -- plotting data ---------------------------------------------------------

@dataclass
class DistributionSummary:
    bin_edges: np.ndarray
    density: np.ndarray
    abs_errors: np.ndarray  # sorted ascending
    ccdf: np.ndarray  # P(|error| >= abs_errors[i])

    def ccdf_at(self, threshold: float) -> float:
        n = self.abs_errors.size
        return 1.0 - np.searchsorted(self.abs_errors, threshold, side="left") / n

    def write_density_csv(self, path: Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "density"])
            for lo, hi, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.density):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(d))])

    def write_ccdf_csv(self, path: Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["abs_error", "ccdf"])
            for a, c in zip(self.abs_errors, self.ccdf):
                w.writerow([repr(float(a)), repr(float(c))])


def summarize_distribution(release_samples, bins: int = 50,
                           reference: float = 0.0) -> DistributionSummary:
    """Histogram density of the releases and the CCDF of ``|release - reference|``."""
    samples = np.asarray(release_samples, dtype=float).reshape(-1)
    if samples.size == 0:
        raise ValueError("need at least one sample")
    density, edges = np.histogram(samples, bins=bins, density=True)
    abs_err = np.sort(np.abs(samples - reference))
    first = np.searchsorted(abs_err, abs_err, side="left")
    ccdf = 1.0 - first / abs_err.size
    return DistributionSummary(edges, density, abs_err, ccdf)
