"""Command-line front end.

Exit codes: 0 success, 2 input error (unreadable or malformed files),
3 configuration error (invalid parameters).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .alloc import DiscreteDist, lower_bound_L
from .core_math import ell, format_real
from .estimator import DFModel, GridPartition, fit_fixed_partition, predict_interval
from .sim import (
    FixedMethod,
    Scenario,
    SplitMethod,
    report_document,
    run_coverage_experiment,
    MIN_TRIALS,
)
from .split import RegressorSpec, fit_split

EXIT_INPUT = 2
EXIT_CONFIG = 3
DIST_WEIGHT_TOL = 1e-6


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _config(msg: str) -> CLIError:
    return CLIError(msg, EXIT_CONFIG)


def _input(msg: str) -> CLIError:
    return CLIError(msg, EXIT_INPUT)


def _check_alpha(alpha: float, *, closed: bool = False) -> None:
    ok = 0.0 <= alpha <= 1.0 if closed else 0.0 < alpha < 1.0
    if not ok or math.isnan(alpha):
        raise _config(f"alpha must lie in {'[0, 1]' if closed else '(0, 1)'}, got {alpha}")


def _u_from_seed(seed: int) -> float:
    return float(np.random.default_rng(np.random.SeedSequence(seed)).random())


def read_dist_csv(path: Path) -> DiscreteDist:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["atom", "weight"]:
                raise _input(f"{path}: expected header 'atom,weight'")
            atoms, weights = [], []
            for lineno, row in enumerate(reader, start=2):
                try:
                    atoms.append(float(row["atom"]))
                    weights.append(float(row["weight"]))
                except (TypeError, ValueError):
                    raise _input(f"{path}:{lineno}: malformed row") from None
    except OSError as exc:
        raise _input(f"cannot read {path}: {exc}") from None
    if not atoms:
        raise _input(f"{path}: no rows")
    try:
        return DiscreteDist(atoms, weights, tol=DIST_WEIGHT_TOL)
    except ValueError as exc:
        raise _input(f"{path}: {exc}") from None


def read_data_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise _input(f"cannot read {path}: {exc}") from None
    if not rows:
        raise _input(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header[-1] != "y" or header[:-1] != [f"x{j}" for j in range(1, d + 1)]:
        raise _input(f"{path}: expected header 'x1,...,xd,y'")
    X = np.empty((len(rows) - 1, d))
    y = np.empty(len(rows) - 1, dtype=np.int64)
    for i, row in enumerate(rows[1:]):
        if len(row) != d + 1:
            raise _input(f"{path}:{i + 2}: expected {d + 1} fields")
        try:
            X[i] = [float(v) for v in row[:-1]]
            label = float(row[-1])
        except ValueError:
            raise _input(f"{path}:{i + 2}: non-numeric field") from None
        if label not in (0.0, 1.0) or not np.all(np.isfinite(X[i])):
            raise _input(f"{path}:{i + 2}: labels must be 0 or 1 and features finite")
        y[i] = int(label)
    if len(y) == 0:
        raise _input(f"{path}: no data rows")
    return X, y


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise _input(f"cannot write {path}: {exc}") from None


def cmd_ell(args) -> str:
    t, a = args.t, args.a
    if not (t.is_finite() and a.is_finite() and 0 <= t <= 1 and 0 <= a <= 1):
        raise _config("t and a must lie in [0, 1]")
    # reflect in decimal so that e.g. t = 0.7 behaves exactly like t = 0.3
    if t > Decimal("0.5"):
        t = 1 - t
    return format_real(ell(float(t), float(a)))


def _decimal(text: str) -> Decimal:
    try:
        return Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None


def cmd_lower_bound(args) -> str:
    _check_alpha(args.alpha, closed=True)
    dist = read_dist_csv(args.dist)
    return format_real(lower_bound_L(dist, args.alpha))


def cmd_fit(args) -> str:
    _check_alpha(args.alpha)
    X, y = read_data_csv(args.data)
    if args.shuffle:
        perm = np.random.default_rng(np.random.SeedSequence(args.seed)).permutation(len(y))
        X, y = X[perm], y[perm]
    try:
        if args.method == "fixed":
            d = X.shape[1]
            lo = _per_axis(args.lo, d, 0.0)
            hi = _per_axis(args.hi, d, 1.0)
            partition = GridPartition([args.bins] * d, lo, hi)
            model = fit_fixed_partition(X, y, partition, args.alpha)
        else:
            spec = RegressorSpec(args.regressor, k=args.knn_k, bins=args.hist_bins)
            model = fit_split(X, y, args.alpha, spec)
    except ValueError as exc:
        raise _config(str(exc)) from None
    model.extras.update({"shuffle": bool(args.shuffle), "seed": args.seed})
    _write(args.out, model.to_json())
    return f"wrote {args.out} (M={model.M})"


def _per_axis(values, d, default):
    if values is None:
        return [default] * d
    if len(values) == 1:
        return values * d
    if len(values) != d:
        raise _config(f"expected 1 or {d} bounds, got {len(values)}")
    return values


def cmd_predict(args) -> str:
    try:
        model = DFModel.from_json(args.model.read_text())
    except OSError as exc:
        raise _input(f"cannot read {args.model}: {exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise _input(f"{args.model}: malformed model ({exc})") from None
    x = [float(v) for part in args.x for v in part.split(",")]
    u = args.u if args.u is not None else _u_from_seed(args.seed)
    if not 0.0 <= u <= 1.0:
        raise _config("u must lie in [0, 1]")
    try:
        return str(predict_interval(model, x, u))
    except ValueError as exc:
        raise _config(str(exc)) from None


def cmd_simulate(args) -> str:
    _check_alpha(args.alpha)
    if args.trials < MIN_TRIALS:
        raise _config(f"trials must be >= {MIN_TRIALS}")
    if args.n < 3:
        raise _config("n must be >= 3")
    try:
        scenario = Scenario.from_dict(json.loads(args.scenario.read_text()))
    except OSError as exc:
        raise _input(f"cannot read {args.scenario}: {exc}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise _input(f"{args.scenario}: malformed scenario ({exc})") from None
    seed = scenario.seed if args.seed is None else args.seed
    try:
        if args.method == "fixed":
            method = FixedMethod(GridPartition([args.bins] * scenario.dimension))
        else:
            method = SplitMethod(RegressorSpec(args.regressor, k=args.knn_k, bins=args.hist_bins))
        report = run_coverage_experiment(scenario, method, args.n, args.alpha, args.trials, seed=seed, resolution=args.resolution)
    except ValueError as exc:
        raise _config(str(exc)) from None
    config = {
        "scenario": scenario.to_dict(),
        "n": args.n,
        "alpha": args.alpha,
        "trials": args.trials,
        "seed": seed,
        "resolution": args.resolution,
        **method.describe(),
    }
    _write(args.out, report_document(report, config))
    if args.per_trial_csv is not None:
        _write(args.per_trial_csv, report.per_trial_csv())
    s = report.summary()
    return " ".join(f"{k}={format_real(v) if isinstance(v, float) else v}" for k, v in s.items())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfbin", description="Distribution-free confidence intervals for binary regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ell", help="evaluate the length function")
    p.add_argument("--t", type=_decimal, required=True)
    p.add_argument("--a", type=_decimal, required=True)
    p.set_defaults(func=cmd_ell)

    p = sub.add_parser("lower-bound", help="lower bound on expected length for a discrete distribution")
    p.add_argument("dist", type=Path, help="CSV with header atom,weight")
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_lower_bound)

    def regressor_flags(p):
        p.add_argument("--regressor", choices=["knn", "histogram"], default="knn")
        p.add_argument("--knn-k", type=int, default=None)
        p.add_argument("--hist-bins", type=int, default=None)

    p = sub.add_parser("fit", help="fit a model from a data CSV")
    p.add_argument("data", type=Path, help="CSV with header x1,...,xd,y")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--method", choices=["fixed", "split"], default="split")
    p.add_argument("--bins", type=int, default=1, help="cells per axis for --method fixed")
    p.add_argument("--lo", type=float, nargs="+", default=None)
    p.add_argument("--hi", type=float, nargs="+", default=None)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    regressor_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="randomized interval for one feature vector")
    p.add_argument("model", type=Path)
    p.add_argument("--x", action="append", required=True, help="feature value(s); repeat or comma-separate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--u", type=float, default=None, help="override the uniform draw")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="Monte Carlo coverage experiment")
    p.add_argument("scenario", type=Path)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--method", choices=["fixed", "split"], default="fixed")
    p.add_argument("--bins", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="defaults to the scenario seed")
    p.add_argument("--resolution", type=int, default=10_000)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--per-trial-csv", type=Path, default=None)
    regressor_flags(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
