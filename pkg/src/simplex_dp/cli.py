"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import harness
from .estimators import (
    EstimatorId,
    release_count,
    refine_count,
    run_estimator,
    simplex_known_n_release,
    simplex_release,
)
from .mechanisms import NoiseSource
from .orthonormal import OrthonormalityError, project, validate_orthonormal
from .privacy_core import Bounds, InvalidDataError, PureDP, ZCDP, budget_to_dict, compose
from .transforms import Imputation

logger = logging.getLogger("simplex_dp")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DATA = 0, 1, 2, 3
ESTIMATOR_NAMES = [e.value for e in EstimatorId]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def config_error(msg: str) -> CliError:
    return CliError(EXIT_CONFIG, msg)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise config_error(f"{self.prog}: {message}")


def dumps(obj) -> str:
    # repr-based float formatting round-trips every double exactly
    return json.dumps(obj, indent=2, allow_nan=False)


def warn_non_private():
    text = "*** NON-PRIVATE: --debug-zero-noise adds no noise. Do not publish this output. ***"
    if os.environ.get("NO_COLOR") is None and sys.stderr.isatty():
        text = f"\033[1;31m{text}\033[0m"
    print(text, file=sys.stderr)


# -- CSV input -------------------------------------------------------------

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_values_csv(path: Path) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Read one numeric column plus an optional ``weight`` column.

    The first non-empty line is a header if its first cell is not a number.
    Empty lines are skipped. Row numbers in errors are 1-based file lines.
    """
    try:
        with open(path, newline="") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}")
    rows = [(i + 1, [c.strip() for c in line]) for i, line in enumerate(lines)
            if any(c.strip() for c in line)]
    header = None
    if rows and not _is_number(rows[0][1][0]):
        header = [c.lower() for c in rows[0][1]]
        rows = rows[1:]
    ncols = len(header) if header else (len(rows[0][1]) if rows else 1)
    if ncols > 2:
        raise CliError(EXIT_DATA, f"expected 1 or 2 columns, found {ncols}")
    if header and ncols == 2 and header[1] != "weight":
        raise CliError(EXIT_DATA, f"second column must be named 'weight', got {header[1]!r}")
    values, weights = [], []
    for lineno, cells in rows:
        if len(cells) != ncols:
            raise CliError(EXIT_DATA, f"row {lineno}: expected {ncols} cells, got {len(cells)}")
        try:
            parsed = [float(c) for c in cells]
        except ValueError:
            raise CliError(EXIT_DATA, f"row {lineno}: non-numeric cell in {cells!r}")
        if any(np.isnan(parsed)):
            raise CliError(EXIT_DATA, f"row {lineno}: NaN is not allowed")
        values.append(parsed[0])
        if ncols == 2:
            weights.append(parsed[1])
    return np.array(values), (np.array(weights) if ncols == 2 else None)


# -- budgets ---------------------------------------------------------------

def _budget(mechanism: str, epsilon, rho, what: str = ""):
    try:
        if mechanism == "gaussian":
            if rho is None or epsilon is not None:
                raise config_error(f"gaussian mechanism takes --{what}rho (not --{what}epsilon)")
            return ZCDP(rho)
        if epsilon is None or rho is not None:
            raise config_error(f"laplace mechanism takes --{what}epsilon (not --{what}rho)")
        return PureDP(epsilon)
    except ValueError as exc:
        raise config_error(str(exc))


# -- release ---------------------------------------------------------------

def cmd_release(args) -> int:
    try:
        bounds = Bounds.parse(args.bounds)
    except ValueError as exc:
        raise config_error(f"--bounds: {exc}")
    budget = _budget(args.mechanism, args.epsilon, args.rho)
    estimator = EstimatorId(args.estimator)
    if estimator is EstimatorId.SIMPLEX_KNOWN_N and args.known_n is None:
        raise config_error("simplex-known-n needs --known-n")
    if args.known_n is not None and args.known_n <= 0:
        raise config_error("--known-n must be a positive integer")
    if args.split is not None and not 0 < args.split < 1:
        raise config_error("--split must lie in (0, 1)")
    extra = None
    if args.extra_count_rho is not None or args.extra_count_epsilon is not None:
        if estimator is not EstimatorId.SIMPLEX:
            raise config_error("--extra-count-* refines the free count of the simplex estimator only")
        extra = _budget(args.mechanism, args.extra_count_epsilon, args.extra_count_rho, "extra-count-")

    resolved = {
        "command": "release", "input": str(args.input), "bounds": [bounds.lower, bounds.upper],
        "estimator": estimator.value, "mechanism": args.mechanism, "budget": budget_to_dict(budget),
        "known_n": args.known_n, "split": args.split, "imputation": args.imputation,
        "extra_count_budget": budget_to_dict(extra) if extra else None,
        "seed": args.seed, "zero_noise": args.debug_zero_noise,
    }
    logger.info("resolved config %s", json.dumps(resolved, sort_keys=True))

    values, weights = read_values_csv(args.input)
    if weights is not None and estimator not in (EstimatorId.SIMPLEX, EstimatorId.SIMPLEX_KNOWN_N):
        raise config_error("a weight column is only supported by the simplex estimators")
    if weights is not None and np.any(weights <= 0):
        raise CliError(EXIT_DATA, "weights must be strictly positive")

    if args.debug_zero_noise:
        warn_non_private()
        source = NoiseSource.zero_noise(non_private=True)
    else:
        source = NoiseSource.seeded(args.seed)

    try:
        if weights is not None and estimator is EstimatorId.SIMPLEX:
            report = simplex_release(values, bounds, budget, source, weights=weights)
        elif estimator is EstimatorId.SIMPLEX_KNOWN_N:
            report = simplex_known_n_release(values, args.known_n, bounds, budget, source,
                                             weights=weights)
        else:
            report = run_estimator(estimator, values, bounds, budget, source,
                                   split_fraction=args.split,
                                   imputation=Imputation(args.imputation))
    except InvalidDataError as exc:
        raise CliError(EXIT_DATA, str(exc))

    out = report.to_dict()
    if extra is not None:
        extra_release = release_count(len(values), extra, source)
        refined = refine_count(report.count_estimate, extra_release)
        out["free_count"] = out["count"]
        out["count"] = refined.to_dict()
        out["budget"] = budget_to_dict(compose([report.budget_charged, extra]))
    out["seed"] = None if args.debug_zero_noise else args.seed
    print(dumps(out))
    return EXIT_OK


# -- simulate --------------------------------------------------------------

_DISTRIBUTIONS = {"lognormal": harness.LogNormal, "normal": harness.Normal, "uniform": harness.Uniform}


def parse_experiment_spec(raw: dict) -> harness.ExperimentSpec:
    """Build an ExperimentSpec from its JSON form, collecting every field error."""
    errors = []
    if not isinstance(raw, dict):
        raise config_error("spec file must hold a JSON object")

    dist = None
    d = raw.get("distribution")
    if not isinstance(d, dict) or d.get("kind") not in _DISTRIBUTIONS:
        errors.append(f"distribution: need an object with kind in {sorted(_DISTRIBUTIONS)}")
    else:
        params = {k: v for k, v in d.items() if k != "kind"}
        try:
            dist = _DISTRIBUTIONS[d["kind"]](**params)
        except (TypeError, ValueError) as exc:
            errors.append(f"distribution: {exc}")

    n_points = raw.get("n_points", 100)
    if not isinstance(n_points, int) or isinstance(n_points, bool) or n_points < 1:
        errors.append("n_points: must be a positive integer")

    bounds = None
    b = raw.get("bounds")
    if b is None and dist is not None:
        bounds = harness.DEFAULT_BOUNDS[dist.name]
    else:
        try:
            bounds = Bounds(*b)
        except (TypeError, ValueError) as exc:
            errors.append(f"bounds: need [lower, upper] with lower < upper ({exc})")

    budget = None
    m = raw.get("mechanism")
    if not isinstance(m, dict) or m.get("kind") not in ("gaussian", "laplace"):
        errors.append("mechanism: need {\"kind\": \"gaussian\", \"rho\": x} or "
                      "{\"kind\": \"laplace\", \"epsilon\": x}")
    else:
        try:
            budget = _budget(m["kind"], m.get("epsilon"), m.get("rho"))
        except CliError as exc:
            errors.append(f"mechanism: {exc}")

    ests = raw.get("estimators", "all")
    if ests == "all":
        ests = list(harness.TABLE_ESTIMATORS)
    elif not isinstance(ests, list) or not ests:
        errors.append("estimators: need a non-empty list or \"all\"")
        ests = []
    else:
        bad = [e for e in ests if e not in ESTIMATOR_NAMES]
        if bad:
            errors.append(f"estimators: unknown {bad}; valid choices: {ESTIMATOR_NAMES}")

    trials = raw.get("trials", 10_000)
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        errors.append("trials: must be a positive integer")
    seed = raw.get("master_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        errors.append("master_seed: must be an integer")
    split = raw.get("split_fraction")
    if split is not None and not (isinstance(split, (int, float)) and 0 < split < 1):
        errors.append("split_fraction: must lie in (0, 1)")
    imputation = raw.get("imputation", "uniform")
    if imputation not in [i.value for i in Imputation]:
        errors.append(f"imputation: must be one of {[i.value for i in Imputation]}")
    zero = raw.get("zero_noise", False)
    if not isinstance(zero, bool):
        errors.append("zero_noise: must be true or false")
    unknown = set(raw) - {"distribution", "n_points", "bounds", "mechanism", "estimators",
                          "trials", "master_seed", "split_fraction", "imputation", "zero_noise"}
    if unknown:
        errors.append(f"unknown fields: {sorted(unknown)}")

    if errors:
        raise config_error("invalid spec:\n  " + "\n  ".join(errors))
    return harness.ExperimentSpec(
        distribution=dist, n_points=n_points, bounds=bounds, budget=budget,
        estimators=tuple(ests), trials=trials, master_seed=seed, split_fraction=split,
        imputation=Imputation(imputation), zero_noise=zero,
    )


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}")


def cmd_simulate(args) -> int:
    try:
        raw = json.loads(Path(args.spec).read_text())
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {args.spec}: {exc.strerror or exc}")
    except json.JSONDecodeError as exc:
        raise config_error(f"{args.spec} is not valid JSON: {exc}")
    spec = parse_experiment_spec(raw)
    if args.emit_samples and args.out is None:
        raise config_error("--emit-samples needs --out DIR for the CSV files")
    if args.emit_samples:
        spec = harness.ExperimentSpec(**{**spec.__dict__, "keep_samples": True})
    logger.info("resolved config %s", json.dumps(spec.to_dict(), sort_keys=True))
    if spec.zero_noise:
        warn_non_private()

    result = harness.run_experiment(spec)
    text = dumps(result.to_dict()) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create {out}: {exc.strerror or exc}")
    _write(out / "result.json", text)
    if args.emit_samples:
        for est, metrics in result.metrics.items():
            summary = harness.summarize_distribution(metrics.release_samples, args.bins,
                                                     reference=result.true_sample_mean)
            try:
                summary.write_density_csv(out / f"density_{est.value}.csv")
                summary.write_ccdf_csv(out / f"ccdf_{est.value}.csv")
            except OSError as exc:
                raise CliError(EXIT_IO, f"cannot write CSVs in {out}: {exc}")
    print(str(out / "result.json"))
    return EXIT_OK


# -- table1 ----------------------------------------------------------------

def cmd_table1(args) -> int:
    if args.trials < 1:
        raise config_error("--trials must be positive")
    logger.info("resolved config %s", json.dumps(
        {"command": "table1", "trials": args.trials, "seed": args.seed, "out": str(args.out),
         "zero_noise": args.debug_zero_noise,
         "bounds": {k: [b.lower, b.upper] for k, b in harness.DEFAULT_BOUNDS.items()}},
        sort_keys=True))
    if args.debug_zero_noise:
        warn_non_private()
    table = harness.run_table1_suite(args.trials, args.seed, zero_noise=args.debug_zero_noise)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        table.write_csv(out / "table1.csv")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write to {out}: {exc.strerror or exc}")
    _write(out / "table1.json", dumps(table.to_dict()) + "\n")
    print(str(out / "table1.csv"))
    return EXIT_OK


# -- project ---------------------------------------------------------------

def _load_matrix(path: Path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}")
    try:
        if str(path).endswith(".json"):
            return np.array(json.loads(text), dtype=float)
        rows = [[float(c) for c in line.split(",")] for line in text.splitlines() if line.strip()]
        return np.array(rows, dtype=float)
    except (ValueError, TypeError) as exc:
        raise CliError(EXIT_DATA, f"{path}: {exc}")


def cmd_project(args) -> int:
    basis_raw = _load_matrix(args.basis)
    u = _load_matrix(args.vector).reshape(-1)
    logger.info("resolved config %s", json.dumps(
        {"command": "project", "basis": str(args.basis), "vector": str(args.vector),
         "tolerance": args.tolerance}, sort_keys=True))
    try:
        basis = validate_orthonormal(basis_raw, args.tolerance)
        coefficients, projection = project(u, basis)
    except (OrthonormalityError, ValueError) as exc:
        raise CliError(EXIT_DATA, str(exc))
    print(dumps({
        "coefficients": coefficients.tolist(),
        "projection": projection.tolist(),
        "vector_norm": float(np.linalg.norm(u)),
        "projection_norm": float(np.linalg.norm(projection)),
    }))
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="simplex-dp", description=__doc__.splitlines()[0])
    p.add_argument("-q", "--quiet", action="store_true", help="do not log the resolved config")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("release", help="private mean of one CSV column")
    r.add_argument("--input", required=True, type=Path)
    r.add_argument("--bounds", required=True, help="clamping bounds as L,U")
    r.add_argument("--estimator", default="simplex", choices=ESTIMATOR_NAMES)
    r.add_argument("--mechanism", default="gaussian", choices=["gaussian", "laplace"])
    r.add_argument("--epsilon", type=float)
    r.add_argument("--rho", type=float)
    r.add_argument("--known-n", type=int)
    r.add_argument("--split", type=float, help="fraction of the budget for the sum")
    r.add_argument("--imputation", default="uniform", choices=[i.value for i in Imputation])
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--extra-count-rho", type=float)
    r.add_argument("--extra-count-epsilon", type=float)
    r.add_argument("--debug-zero-noise", action="store_true")
    r.set_defaults(func=cmd_release)

    s = sub.add_parser("simulate", help="Monte Carlo experiment from a JSON spec")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--out", type=Path)
    s.add_argument("--emit-samples", action="store_true")
    s.add_argument("--bins", type=int, default=50)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("table1", help="full estimator x distribution x mechanism grid")
    t.add_argument("--trials", type=int, default=10_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, type=Path)
    t.add_argument("--debug-zero-noise", action="store_true")
    t.set_defaults(func=cmd_table1)

    pr = sub.add_parser("project", help="project a vector onto an orthonormal set")
    pr.add_argument("--basis", required=True, type=Path)
    pr.add_argument("--vector", required=True, type=Path)
    pr.add_argument("--tolerance", type=float, default=1e-8)
    pr.set_defaults(func=cmd_project)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.WARNING if args.quiet else logging.INFO)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    finally:
        logger.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
