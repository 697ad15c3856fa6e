"""``spectral-lab`` command line.

Exit codes: 0 success, 2 input error, 3 numeric or collision error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds as B
from .config import build_config, load_config_file
from .dyson import SdeConfig, simulate
from .errors import InputError, NumericError
from .experiments import emit_report, run_experiment, run_scaling_study, run_trials
from .linalg import SpectralWeights, read_matrix_csv, write_matrix_csv
from .mechanism import NoiseConfig, release_covariance, release_subspace
from .rng import derive_seed

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}") from exc


def _global_flags(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--seed", type=int, default=default(None), help="root seed (default 0)")
    parser.add_argument("--threads", type=int, default=default(None), help="worker threads (default 1)")
    parser.add_argument("--output-dir", default=default(None), help="directory for output files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-lab", description=__doc__.splitlines()[0])
    _global_flags(parser, lambda v: v)
    sub = parser.add_subparsers(dest="command", required=True)
    suppress = lambda v: argparse.SUPPRESS  # noqa: E731

    p = sub.add_parser("bounds", help="evaluate every closed-form bound for a singular-value profile")
    _global_flags(p, suppress)
    p.add_argument("--sigma", required=True, help="comma-separated singular values")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--gamma", help="comma-separated weights for the main bound (default: k ones)")
    p.add_argument("--e-norm", type=float, help="||E|| for Davis-Kahan (default sqrt(T)(sqrt m + sqrt d))")
    p.add_argument("--rank", type=int, help="rank r for O'Rourke-Vu (default: number of nonzero sigma)")
    p.add_argument("--c-ug", type=float, default=1.0)

    p = sub.add_parser("mechanism", help="release a noisy subspace projector or covariance")
    _global_flags(p, suppress)
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--mode", choices=("subspace", "covariance"), default="subspace")
    p.add_argument("--output", required=True, help="JSON output path")

    p = sub.add_parser("simulate", help="integrate the singular value / vector SDEs")
    _global_flags(p, suppress)
    p.add_argument("--input", required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--checkpoints", type=int, default=1)
    p.add_argument("--reortho-every", type=int, default=10)
    p.add_argument("--collision-floor", type=float)
    p.add_argument("--output", required=True, help="trajectory CSV path")
    p.add_argument("--frames", help="optional sidecar CSV with the right-singular frames")

    for name, help_text in (
        ("experiment", "run a Monte Carlo comparison of errors and bounds"),
        ("scaling", "sweep m or d and fit log-log slopes"),
    ):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress)
        p.add_argument("--config", help="flat key = value config file")
        for key in ("m", "d", "k", "trials", "rotation_seed"):
            p.add_argument(f"--{key.replace('_', '-')}", dest=key)
        for key in ("profile", "sigma", "sigma1", "ratio", "gap", "tail", "T", "bounds", "sweep", "gamma", "c_ug"):
            p.add_argument(f"--{key.replace('_', '-')}", dest=key)
        if name == "experiment":
            p.add_argument("--mode", choices=("subspace", "covariance", "weighted"))
        else:
            p.add_argument("--param", choices=("m", "d"), help="swept dimension")
    return parser


def _emit_json(doc: dict, path: Path | None) -> None:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    print(text)


def cmd_bounds(args) -> int:
    sigma = np.array(_floats(args.sigma))
    prof = B.GapProfile(sigma, args.m)
    d, k, T = prof.d, args.k, args.T
    if args.gamma:
        g = np.zeros(d)
        vals = _floats(args.gamma)
        g[: len(vals)] = vals
        w = SpectralWeights(g, k)
    else:
        w = SpectralWeights.indicator(d, k)
    e_norm = args.e_norm if args.e_norm is not None else math.sqrt(T) * (math.sqrt(args.m) + math.sqrt(d))
    rank = args.rank if args.rank is not None else int(np.sum(sigma > 0))
    out = [
        B.davis_kahan_bound(prof, k, e_norm),
        B.orourke_vu_bound(prof, k, rank, T),
        B.main_bound(prof, w, T),
        B.subspace_bound(prof, k, T),
        B.covariance_bound(prof, k, T),
        *B.baseline_covariance_bounds(prof, k, T),
    ]
    if B.uniform_gap_holds(prof, k, args.c_ug):
        out.append(B.subspace_bound(prof, k, T, uniform_gaps=True, c_ug=args.c_ug))
    doc = {"sigma": sigma.tolist(), "m": args.m, "k": k, "T": T, "bounds": [b.to_dict() for b in out]}
    if k < d and w.gamma[0] > 0 and sigma[0] > sigma[-1] and T > 0:
        doc["assumption"] = B.check_assumption(prof, k, T, w).to_dict()
    _emit_json(doc, Path(args.output_dir) / "bounds.json" if args.output_dir else None)
    return 0


def cmd_mechanism(args) -> int:
    a = read_matrix_csv(args.input)
    cfg = NoiseConfig(args.T, args.seed)
    release = release_subspace if args.mode == "subspace" else release_covariance
    res = release(a, args.k, cfg)
    out = Path(args.output)
    if args.output_dir:
        out = Path(args.output_dir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    released_path = out.with_name(out.stem + "_released.csv")
    write_matrix_csv(released_path, res.released)
    doc = {
        "mode": args.mode,
        "k": args.k,
        "T": args.T,
        "seed": args.seed,
        "sigma_hat": res.perturbed_sigma.tolist(),
        "error_frobenius": res.error_frobenius,
        "released_csv_path": str(released_path),
    }
    out.write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    a = read_matrix_csv(args.input)
    if args.paths < 1:
        raise InputError("--paths must be >= 1")

    def one(p):
        cfg = SdeConfig(
            dt=args.dt,
            T=args.T,
            m=a.shape[0],
            seed=derive_seed(args.seed, "path", p),
            reortho_every=args.reortho_every,
            collision_floor=args.collision_floor,
        )
        return simulate(a, cfg, checkpoints=args.checkpoints)

    trajectories = run_trials(one, args.paths, args.threads)
    d = a.shape[1]
    out = Path(args.output)
    if args.output_dir:
        out = Path(args.output_dir) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path_id", "t"] + [f"sigma_{i + 1}" for i in range(d)])
        for p, traj in enumerate(trajectories):
            for st in traj:
                w.writerow([p, repr(st.t)] + [repr(float(s)) for s in st.sigma])
    if args.frames:
        frames = Path(args.frames)
        if args.output_dir:
            frames = Path(args.output_dir) / frames
        with frames.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path_id", "t"] + [f"v_{r + 1}_{c + 1}" for r in range(d) for c in range(d)])
            for p, traj in enumerate(trajectories):
                for st in traj:
                    w.writerow([p, repr(st.t)] + [repr(float(x)) for x in st.frame.reshape(-1)])
    return 0


_OVERRIDE_KEYS = (
    "m", "d", "k", "trials", "rotation_seed", "profile", "sigma", "sigma1", "ratio",
    "gap", "tail", "T", "bounds", "sweep", "gamma", "c_ug",
)


def _experiment_values(args) -> dict[str, str]:
    values = load_config_file(args.config) if args.config else {}
    for key in _OVERRIDE_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    # explicit global flags beat the config file, which beats the defaults
    for key in ("seed", "threads"):
        if key in args.explicit or key not in values:
            values[key] = str(getattr(args, key))
    return values


def cmd_experiment(args) -> int:
    values = _experiment_values(args)
    if args.mode:
        values["mode"] = args.mode
    summaries = run_experiment(build_config(values))
    paths = emit_report(summaries, args.output_dir or ".", stem="experiment")
    print("\n".join(str(p) for p in paths))
    return 0


def cmd_scaling(args) -> int:
    values = _experiment_values(args)
    if args.param:
        values["mode"] = f"scaling_{args.param}"
    values.setdefault("mode", "scaling_m")
    result = run_scaling_study(build_config(values))
    paths = emit_report(result.summaries, args.output_dir or ".", stem="scaling", extra={"fit": result.to_dict()})
    print(f"{result.parameter}-slope {result.slope:.4f} (95% CI {result.slope_ci[0]:.4f}, {result.slope_ci[1]:.4f})")
    print("\n".join(str(p) for p in paths))
    return 0


COMMANDS = {
    "bounds": cmd_bounds,
    "mechanism": cmd_mechanism,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
    "scaling": cmd_scaling,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.explicit = {k for k in ("seed", "threads") if getattr(args, k) is not None}
    if args.seed is None:
        args.seed = 0
    if args.threads is None:
        args.threads = 1
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"spectral-lab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"spectral-lab: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"spectral-lab: I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
