"""Prediction error and wall time versus k on synthetic regression data.

Writes one CSV row per (method, k, replicate):

    python3 scripts/synthetic_benchmark.py --out bench.csv --ks 16,32,64 --replicates 10
"""

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from dualvol.design import (
    RegressionDataset,
    fedorov_exchange,
    objective,
    regression_eval,
    sample_leverage,
    sample_predictive_length,
    sample_uniform,
)
from dualvol.exact import DvsProblem, sample_exact
from dualvol.mcmc import ChainConfig, sample_mcmc


@dataclass
class BenchConfig:
    n: int = 8
    m: int = 500
    noise: float = 0.1
    ks: list = field(default_factory=lambda: [16, 32, 64])
    replicates: int = 10
    seed: int = 0
    methods: tuple = ("unif", "lev", "pl", "dvs-mcmc", "fedorov")
    sweeps: float = 2.0  # MCMC steps = sweeps * k * (m - k)
    features: str = "gaussian"  # or "student-t"


def make_data(cfg: BenchConfig) -> RegressionDataset:
    rng = np.random.default_rng(cfg.seed)
    if cfg.features == "student-t":
        X = rng.standard_t(3, (cfg.m, cfg.n))
    else:
        X = rng.standard_normal((cfg.m, cfg.n))
    y = X @ rng.standard_normal(cfg.n) + cfg.noise * rng.standard_normal(cfg.m)
    return RegressionDataset(X, y)


def select(method, data, k, seed, cfg):
    D = data.design
    rng = np.random.default_rng(seed)
    if method == "unif":
        return sample_uniform(D.m, k, rng)
    if method == "lev":
        return sample_leverage(D, k, rng).indices
    if method == "pl":
        return sample_predictive_length(D, k, rng).indices
    if method == "dvs-exact":
        return sample_exact(DvsProblem(D, k), rng).subset
    if method == "dvs-mcmc":
        steps = int(cfg.sweeps * k * (D.m - k))
        return sample_mcmc(DvsProblem(D, k), ChainConfig(k=k, steps=steps, seed=seed, init="d_squared"), rng).selection.indices
    if method == "fedorov":
        return fedorov_exchange(D.entries, k, "D", rng=rng).selection.indices
    raise ValueError(method)


def run(cfg: BenchConfig, out):
    data = make_data(cfg)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["method", "k", "replicate", "seed", "prediction_error", "D", "wall_time_ms"])
    for k in cfg.ks:
        for method in cfg.methods:
            for r in range(cfg.replicates):
                seed = cfg.seed + r
                t0 = time.perf_counter()
                S = select(method, data, k, seed, cfg)
                ms = (time.perf_counter() - t0) * 1e3
                w.writerow([method, k, r, seed, regression_eval(data, S), objective(data.design, S, "D"), ms])
            out.flush()


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="-")
    p.add_argument("--ks", default="16,32,64")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--sweeps", type=float, default=2.0)
    p.add_argument("--features", choices=("gaussian", "student-t"), default="gaussian")
    p.add_argument("--methods", default="unif,lev,pl,dvs-mcmc,fedorov")
    a = p.parse_args()
    cfg = BenchConfig(n=a.n, m=a.m, ks=[int(k) for k in a.ks.split(",")], replicates=a.replicates,
                      seed=a.seed, methods=tuple(a.methods.split(",")), sweeps=a.sweeps, features=a.features)
    if a.out == "-":
        run(cfg, sys.stdout)
    else:
        with open(a.out, "w") as fh:
            run(cfg, fh)


if __name__ == "__main__":
    main()
