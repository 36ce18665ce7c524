"""Command-line interface.

    dualvol sample      --input A.csv --k 4 --method dvs-mcmc --seed 7
    dualvol derandomize --input A.csv --k 4
    dualvol design      --input data.csv --header --k 16,32,64 --method dvs-mcmc --replicates 10
    dualvol validate    --input A.csv --k 3

Reports are JSON (or CSV rows for ``design``); subset indices are 1-based and
sorted.  On failure a JSON error object goes to stderr and the exit code is
nonzero.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Sequence

import numpy as np

from . import __version__
from .approx import sample_approx
from .data import FORMATS, ORIENTATIONS, LoadError, fingerprint, load_matrix
from .derand import derandomized_select
from .design import (
    RegressionDataset,
    expectation_bounds,
    fedorov_exchange,
    objectives,
    regression_eval,
    sample_leverage,
    sample_predictive_length,
    sample_uniform,
)
from .exact import DvsProblem, sample_exact
from .linalg import DesignMatrix, pinv_fro_sq, pinv_spec_sq
from .mcmc import ChainConfig, sample_mcmc
from .validate import run_validation

SCHEMA_VERSION = "1.0"
METHODS = ("dvs-exact", "dvs-mcmc", "dvs-approx", "unif", "lev", "pl", "fedorov", "derand")


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def select(method: str, D: DesignMatrix, k: int, seed: int, args) -> tuple[tuple[int, ...], dict]:
    """Run one selection method; returns 0-based indices and diagnostics."""
    rng = np.random.default_rng(seed)
    if method == "dvs-exact":
        problem = DvsProblem(D, k)
        s = sample_exact(problem, rng)
        return s.subset, {"logZ": problem.logZ, "log_prob_set": s.log_prob + math.lgamma(k + 1)}
    if method == "dvs-mcmc":
        problem = DvsProblem(D, k)
        init = "d_squared" if args.init == "kmeans++" else args.init
        cfg = ChainConfig(k=k, steps=args.steps, beta=args.beta, seed=seed, init=init, eps_tv=args.eps_tv)
        r = sample_mcmc(problem, cfg, rng)
        return r.selection.indices, {
            "logZ": problem.logZ,
            "steps": r.steps,
            "acceptance_rate": r.acceptance_rate,
            "init": [i + 1 for i in r.init.indices],
            "final_logdet": r.selection.logdet,
            "logdet_trace": r.logdet_trace,
            "beta": args.beta,
        }
    if method == "dvs-approx":
        r = sample_approx(D, k, args.eps, args.delta2, rng)
        return r.selection.indices, {"d": r.d, "bypassed": r.bypassed, "delta1": r.delta1,
                                     "delta1_exact": r.delta1_exact, "eps": args.eps, "delta2": args.delta2}
    if method == "unif":
        return sample_uniform(D.m, k, rng), {}
    if method == "lev":
        return sample_leverage(D, k, rng).indices, {}
    if method == "pl":
        return sample_predictive_length(D, k, rng).indices, {}
    if method == "fedorov":
        r = fedorov_exchange(D.entries, k, args.criterion, rng=rng)
        return r.selection.indices, {"criterion": r.criterion, "sweeps": r.sweeps, "objective_trace": r.trace}
    if method == "derand":
        t = derandomized_select(D, k)
        return t.subset, {"order": [i + 1 for i in t.chosen], "path_values": t.path_values}
    raise ValueError(f"unknown method {method!r}")


def build_report(method: str, D: DesignMatrix, k: int, seed: int, S: Sequence[int], diagnostics: dict,
                 wall_ms: float, data_hash: str, prediction_error: float | None = None) -> dict:
    S = sorted(int(i) for i in S)
    obj = objectives(D.entries, S)
    bfro, bspec = expectation_bounds(D, k)
    try:
        fro, spec = pinv_fro_sq(D.entries[:, S]), pinv_spec_sq(D.entries[:, S])
    except np.linalg.LinAlgError:
        fro = spec = math.inf
    return {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "method": method,
        "n": D.n,
        "m": D.m,
        "k": k,
        "seed": seed,
        "dataset_fingerprint": data_hash,
        "subset": [i + 1 for i in S],
        "objectives": {c: _finite(v) for c, v in obj.items()},
        "singular": not math.isfinite(obj["D"]),
        "bounds": {
            "fro": {"value": _finite(fro), "bound": bfro, "holds": bool(fro <= bfro)},
            "spec": {"value": _finite(spec), "bound": bspec, "holds": bool(spec <= bspec)},
            "note": "bounds hold for the DVS expectation; a single subset may exceed them",
        },
        "prediction_error": prediction_error,
        "diagnostics": _clean(diagnostics),
        "wall_time_ms": wall_ms,
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return _finite(float(obj))
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_ks(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def cmd_sample(args, method: str | None = None) -> int:
    D = load_matrix(args.input, args.format, args.header, args.orientation or "columns-as-given")
    method = method or args.method
    ks = _parse_ks(args.k)
    if len(ks) != 1:
        raise ValueError("sample takes a single --k")
    k = ks[0]
    if not D.n <= k <= D.m:
        raise ValueError(f"k={k} outside [n, m] = [{D.n}, {D.m}]")
    t0 = time.perf_counter()
    S, diag = select(method, D, k, args.seed, args)
    wall = (time.perf_counter() - t0) * 1e3
    report = build_report(method, D, k, args.seed, S, diag, wall, fingerprint(D.entries))
    if args.output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "k", "seed", "subset", "A", "E", "D"])
        w.writerow([method, k, args.seed, " ".join(map(str, report["subset"])),
                    *(report["objectives"][c] for c in "AED")])
        _emit(buf.getvalue(), args.output)
    else:
        _emit(dumps(report), args.output)
    return 0


def cmd_design(args) -> int:
    data: RegressionDataset = load_matrix(args.input, args.format, args.header,
                                          args.orientation or "samples-as-rows", response=args.response,
                                          with_response=True, standardize=args.standardize)
    D = data.design
    ks = _parse_ks(args.k)
    data_hash = fingerprint(data.X, data.y)
    reports, rows = [], []
    for k in ks:
        if not D.n <= k <= D.m:
            raise ValueError(f"k={k} outside [n, m] = [{D.n}, {D.m}]")
        errors, times, best = [], [], None
        for r in range(args.replicates):
            seed = args.seed + r
            t0 = time.perf_counter()
            S, diag = select(args.method, D, k, seed, args)
            wall = (time.perf_counter() - t0) * 1e3
            err = regression_eval(data, S)
            errors.append(err)
            times.append(wall)
            rows.append([args.method, k, r, seed, err, wall])
            if r == 0:
                best = (S, diag)
        S, diag = best
        diag = dict(diag)
        diag.update({
            "protocol": "least squares fit on the selected samples, error over all samples",
            "replicate_errors": errors,
            "replicate_seeds": [args.seed + r for r in range(args.replicates)],
        })
        rep = build_report(args.method, D, k, args.seed, S, diag, float(np.sum(times)), data_hash,
                           prediction_error=float(np.median(errors)))
        reports.append(rep)
    if args.output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "k", "replicate", "seed", "prediction_error", "wall_time_ms"])
        w.writerows(rows)
        _emit(buf.getvalue(), args.output)
    else:
        _emit(dumps(reports[0] if len(reports) == 1 else reports), args.output)
    return 0


def cmd_validate(args) -> int:
    D = load_matrix(args.input, args.format, args.header, args.orientation or "columns-as-given")
    k = _parse_ks(args.k)[0]
    checks = run_validation(D, k, seed=args.seed, n_samples=args.samples)
    for c in checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}", file=sys.stderr)
    ok = all(c.passed for c in checks)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "n": D.n, "m": D.m, "k": k, "seed": args.seed,
        "dataset_fingerprint": fingerprint(D.entries),
        "passed": ok,
        "checks": [c.to_dict() for c in checks],
    }
    _emit(dumps(summary), args.output)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualvol", description="Dual volume sampling for column subset selection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True)
        p.add_argument("--format", choices=FORMATS, default="csv")
        p.add_argument("--header", action="store_true", help="first line is a header")
        p.add_argument("--orientation", choices=ORIENTATIONS, default=None)
        p.add_argument("--k", required=True, help="subset size (design accepts a comma list)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default=None)
        p.add_argument("--output-format", choices=("json", "csv"), default="json")

    def method_opts(p, default):
        p.add_argument("--method", choices=METHODS, default=default)
        p.add_argument("--steps", type=int, default=None, help="MCMC steps (default: mixing budget)")
        p.add_argument("--beta", type=float, default=1.0)
        p.add_argument("--eps-tv", type=float, default=0.05)
        p.add_argument("--init", choices=("greedy", "d_squared", "kmeans++"), default="greedy")
        p.add_argument("--eps", type=float, default=1e-6)
        p.add_argument("--delta2", type=float, default=0.5)
        p.add_argument("--criterion", choices=("A", "E", "D"), default="D")

    p = sub.add_parser("sample", help="select k columns with one method")
    common(p)
    method_opts(p, "dvs-exact")
    p = sub.add_parser("derandomize", help="deterministic greedy selection")
    common(p)
    method_opts(p, "derand")
    p = sub.add_parser("design", help="regression benchmark on a table with a response column")
    common(p)
    method_opts(p, "dvs-mcmc")
    p.add_argument("--response", default=None, help="response column: header name or 1-based index (default: last)")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--standardize", action="store_true")
    p = sub.add_parser("validate", help="check every exact routine against enumeration")
    common(p)
    p.add_argument("--samples", type=int, default=20_000)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sample":
            return cmd_sample(args)
        if args.command == "derandomize":
            return cmd_sample(args, "derand")
        if args.command == "design":
            return cmd_design(args)
        return cmd_validate(args)
    except LoadError as exc:
        err = exc.to_dict()
    except Exception as exc:  # report every failure as a JSON object
        err = {"type": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps({"error": err}, sort_keys=True) + "\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
