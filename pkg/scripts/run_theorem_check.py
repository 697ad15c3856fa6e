#!/usr/bin/env python3
"""Check the explicit-constant weighted bound on random well-separated matrices.

Draws random profiles satisfying the gap assumption, runs the weighted
mechanism on each, and prints the ratio of the empirical error (mean plus
three standard errors) to the squared bound.

    python3 scripts/run_theorem_check.py --configs 12 --trials 500
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from spectral_lab.bounds import GapProfile, check_assumption, delta_of, main_bound
from spectral_lab.experiments import ExperimentConfig, MatrixSpec, default_T, run_weighted_experiment
from spectral_lab.linalg import SpectralWeights


def random_configs(n: int, seed: int):
    """Yield (spec, weights, T) triples whose T satisfies the gap assumption."""
    rng = np.random.default_rng(seed)
    found = 0
    while found < n:
        d = int(rng.integers(3, 17))
        k = int(rng.integers(1, min(4, d - 1) + 1))
        m = int(rng.integers(d, 4 * d + 1))
        tail = np.sort(rng.uniform(0.1, 3.0, d - k))[::-1]
        top = tail[0] + np.cumsum(rng.uniform(1.0, 5.0, k))[::-1]
        sigma = np.concatenate([top, tail])
        gamma = np.zeros(d)
        gamma[:k] = np.sort(rng.uniform(0.5, 2.0, k))[::-1]
        w = SpectralWeights(gamma, k)
        spec = MatrixSpec(m, d, sigma=tuple(sigma), rotation_seed=int(rng.integers(2**31)))
        prof = GapProfile(spec.singular_values(), m)
        delta, flag = delta_of(prof, w)
        if flag != "valid":
            continue
        min_gap = float(np.min(sigma[:k] - sigma[1 : k + 1]))
        T = min(default_T(spec, k), 0.99 * (min_gap / (8 * math.sqrt(m) * math.log(1 / delta))) ** 2)
        if check_assumption(prof, k, T, w).satisfied:
            found += 1
            yield spec, w, T


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--configs", type=int, default=12)
    parser.add_argument("--trials", type=int, default=500)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    print(f"{'#':>3}{'m':>5}{'d':>4}{'k':>3}{'T':>11}{'mean+3se':>12}{'bound^2':>12}{'ratio':>9}")
    worst = 0.0
    for i, (spec, w, T) in enumerate(random_configs(args.configs, args.seed)):
        cfg = ExperimentConfig(
            spec, k=w.k, T=T, trials=args.trials, seed=i, threads=args.threads, mode="weighted", gamma=tuple(w.gamma[: w.k])
        )
        s = run_weighted_experiment(cfg)
        bound = main_bound(GapProfile(spec.singular_values(), spec.m), w, T).explicit_constant ** 2
        lhs = s.empirical_sq_mean + 3 * s.empirical_sq_stderr
        worst = max(worst, lhs / bound)
        print(f"{i:3d}{spec.m:5d}{spec.d:4d}{w.k:3d}{T:11.3e}{lhs:12.4e}{bound:12.4e}{lhs / bound:9.4f}")
    print(f"worst ratio {worst:.4f}")
    return 0 if worst <= 1 else 1


if __name__ == "__main__":
    sys.exit(main())
