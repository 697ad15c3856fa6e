"""Flat ``key = value`` experiment config files.

Blank lines and lines starting with ``#`` are ignored. List values are
comma-separated. Recognized keys:

    m, d, profile, sigma, sigma1, ratio, gap, tail, rotation_seed,
    k, T, trials, seed, mode, bounds, sweep, threads, c_ug, gamma

``T`` may be a single value, a list (a sweep) or ``default``.
"""
from __future__ import annotations

from pathlib import Path

from .errors import InputError
from .experiments import ALL_BOUNDS, ExperimentConfig, MatrixSpec

KEYS = (
    "m", "d", "profile", "sigma", "sigma1", "ratio", "gap", "tail", "rotation_seed",
    "k", "T", "trials", "seed", "mode", "bounds", "sweep", "threads", "c_ug", "gamma",
)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config_file(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.split(",") if x.strip())


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in v.split(",") if x.strip())


def build_config(values: dict[str, str]) -> ExperimentConfig:
    """ExperimentConfig from string values (file entries merged with CLI overrides)."""
    try:
        spec_kw = {"m": int(values["m"]), "d": int(values["d"])}
        if "profile" in values:
            spec_kw["profile"] = values["profile"]
        if "sigma" in values:
            spec_kw["sigma"] = _floats(values["sigma"])
        for key in ("sigma1", "ratio", "gap", "tail"):
            if key in values:
                spec_kw[key] = float(values[key])
        if "rotation_seed" in values:
            spec_kw["rotation_seed"] = int(values["rotation_seed"])
        kw = {"spec": MatrixSpec(**spec_kw), "k": int(values["k"])}
        t = values.get("T", "default").strip()
        if t != "default":
            ts = _floats(t)
            kw["T"] = ts[0] if len(ts) == 1 else ts
        for key in ("trials", "seed", "threads"):
            if key in values:
                kw[key] = int(values[key])
        if "mode" in values:
            kw["mode"] = values["mode"]
        if "bounds" in values and values["bounds"].strip() not in ("", "all"):
            kw["bounds_requested"] = frozenset(b.strip() for b in values["bounds"].split(",") if b.strip())
        else:
            kw["bounds_requested"] = frozenset(ALL_BOUNDS)
        if "sweep" in values:
            kw["sweep"] = _ints(values["sweep"])
        if "c_ug" in values:
            kw["c_ug"] = float(values["c_ug"])
        if "gamma" in values:
            kw["gamma"] = _floats(values["gamma"])
    except KeyError as exc:
        raise InputError(f"missing required config key {exc.args[0]!r}") from exc
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad config value: {exc}") from exc
    return ExperimentConfig(**kw)
