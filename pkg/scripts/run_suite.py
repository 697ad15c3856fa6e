#!/usr/bin/env python3
"""Run every config in scripts/configs through the CLI.

Each config writes its report into ``<out>/<config name>/``. Scaling configs
go through ``spectral-lab scaling``, the rest through ``spectral-lab experiment``.

    python3 scripts/run_suite.py --out results --threads 4 --seed 0
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from spectral_lab.cli import main as cli_main
from spectral_lab.config import load_config_file

CONFIG_DIR = Path(__file__).resolve().parent / "configs"


def run_suite(out_dir, threads: int = 1, seed: int = 0, configs=None) -> list[Path]:
    """Run the suite; returns the report directories in config order."""
    out_dir = Path(out_dir)
    written = []
    for cfg in sorted(configs or CONFIG_DIR.glob("*.cfg")):
        cfg = Path(cfg)
        mode = load_config_file(cfg).get("mode", "subspace")
        command = "scaling" if mode.startswith("scaling") else "experiment"
        target = out_dir / cfg.stem
        argv = ["--seed", str(seed), "--threads", str(threads), "--output-dir", str(target), command, "--config", str(cfg)]
        code = cli_main(argv)
        if code != 0:
            raise SystemExit(f"{cfg.name}: spectral-lab exited with {code}")
        written.append(target)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", help="output root directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("configs", nargs="*", help="config files (default: all in scripts/configs)")
    args = parser.parse_args(argv)
    for path in run_suite(args.out, args.threads, args.seed, args.configs or None):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
