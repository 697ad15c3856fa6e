#!/usr/bin/env python3
"""Compare the singular-value SDE against direct perturbation of the matrix.

Prints the mean and variance of each terminal singular value under both
samplers, with the z-score of their difference.

    python3 scripts/run_dyson_check.py --paths 500 --threads 4
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from spectral_lab.dyson import SdeConfig, direct_path, simulate
from spectral_lab.experiments import run_trials
from spectral_lab.rng import derive_seed


def moments(x):
    c = x - x.mean()
    var = c.var(ddof=1)
    return x.mean(), x.std(ddof=1) / math.sqrt(x.size), var, math.sqrt(max(np.mean(c**4) - var**2, 0.0) / x.size)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sigma", default="10,4")
    parser.add_argument("--m", type=int, default=20)
    parser.add_argument("--T", type=float, default=0.01)
    parser.add_argument("--dt", type=float, default=1e-4)
    parser.add_argument("--paths", type=int, default=500)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    sigma = [float(s) for s in args.sigma.split(",")]
    a = np.zeros((args.m, len(sigma)))
    a[np.arange(len(sigma)), np.arange(len(sigma))] = sigma
    cfg = lambda p: SdeConfig(dt=args.dt, T=args.T, m=args.m, seed=derive_seed(1, "path", p))
    sde = np.array(run_trials(lambda p: simulate(a, cfg(p))[-1].sigma, args.paths, args.threads))
    direct = np.array(
        run_trials(lambda p: direct_path(a, args.T, 1, derive_seed(2, "path", p))[-1][1].singular_values, args.paths, args.threads)
    )

    print(f"{'':8}{'sde mean':>12}{'direct mean':>13}{'z':>7}{'sde var':>12}{'direct var':>12}{'z':>7}")
    for i in range(len(sigma)):
        m1, s1, v1, e1 = moments(sde[:, i])
        m2, s2, v2, e2 = moments(direct[:, i])
        print(
            f"sigma_{i + 1:<2}{m1:12.5f}{m2:13.5f}{abs(m1 - m2) / math.hypot(s1, s2):7.2f}"
            f"{v1:12.3e}{v2:12.3e}{abs(v1 - v2) / math.hypot(e1, e2):7.2f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
