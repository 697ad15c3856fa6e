"""Monte Carlo harness comparing measured perturbation errors with the bounds.

Trial ``i`` of an experiment with root seed ``s`` draws its noise from
``derive_seed(s, "noise", i)``, so results do not depend on the thread count:
trials are gathered by index and reduced serially. BLAS is pinned to one
thread while trials run.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from . import bounds as B
from .errors import DegenerateTruthError, InputError
from .linalg import SpectralWeights, as_matrix, spectral_norm, svd
from .mechanism import covariance_from, sample_gaussian_matrix, subspace_from, weighted_from
from .rng import NormalStream, derive_seed

PROFILES = ("explicit", "exponential", "linear")
MODES = ("subspace", "covariance", "weighted", "scaling_m", "scaling_d")

SUBSPACE_BOUNDS = (
    "davis_kahan_measured",
    "davis_kahan_proxy",
    "davis_kahan_whp",
    "orourke_vu",
    "subspace",
    "subspace_uniform",
    "main",
)
COVARIANCE_BOUNDS = ("covariance", "covariance_simplified", "baseline_dkw", "baseline_ov", "main")
ALL_BOUNDS = tuple(dict.fromkeys(SUBSPACE_BOUNDS + COVARIANCE_BOUNDS))

# Fraction of the smallest top-k gap that sqrt(T) (sqrt(m) + sqrt(d)) may reach
# under the default noise level.
SMALL_PERTURBATION = 0.1


@dataclass(frozen=True)
class MatrixSpec:
    """Synthetic A = U diag(sigma) V^T with Haar U, V drawn from ``rotation_seed``.

    ``explicit`` uses ``sigma`` (padded with ``tail`` up to length d when
    ``tail`` is set); ``exponential`` uses sigma1 * ratio**i; ``linear`` uses
    sigma1 - i * gap.
    """

    m: int
    d: int
    profile: str = "explicit"
    sigma: tuple[float, ...] = ()
    sigma1: float = 1.0
    ratio: float = 0.5
    gap: float = 1.0
    tail: float | None = None
    rotation_seed: int = 0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise InputError(f"unknown profile {self.profile!r}; expected one of {PROFILES}")
        if self.d < 1 or self.m < self.d:
            raise InputError(f"need 1 <= d <= m, got m={self.m}, d={self.d}")
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))

    def singular_values(self) -> np.ndarray:
        d = self.d
        if self.profile == "explicit":
            s = list(self.sigma)
            if self.tail is not None and len(s) < d:
                s += [float(self.tail)] * (d - len(s))
            if len(s) != d:
                raise InputError(f"explicit profile has {len(s)} values, need d={d}")
            s = np.array(s)
        elif self.profile == "exponential":
            if not 0 < self.ratio < 1:
                raise InputError(f"decay ratio must lie in (0, 1), got {self.ratio}")
            s = self.sigma1 * self.ratio ** np.arange(d)
        else:
            if self.gap < 0:
                raise InputError(f"gap must be nonnegative, got {self.gap}")
            s = self.sigma1 - self.gap * np.arange(d)
        if np.any(s < 0) or np.any(np.diff(s) > 0) or not np.all(np.isfinite(s)):
            raise InputError("profile must give finite, nonnegative, nonincreasing singular values")
        return s

    def with_dims(self, m: int | None = None, d: int | None = None) -> MatrixSpec:
        return replace(self, m=self.m if m is None else m, d=self.d if d is None else d)


def haar_orthonormal(rows: int, cols: int, seed: int) -> np.ndarray:
    """rows x cols with Haar-distributed orthonormal columns (QR, diag(R) > 0)."""
    q, r = np.linalg.qr(NormalStream(seed).normal((rows, cols)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def gen_matrix(spec: MatrixSpec) -> np.ndarray:
    s = spec.singular_values()
    u = haar_orthonormal(spec.m, spec.d, derive_seed(spec.rotation_seed, "rotation-left"))
    v = haar_orthonormal(spec.d, spec.d, derive_seed(spec.rotation_seed, "rotation-right"))
    return (u * s) @ v.T


@dataclass(frozen=True)
class ExperimentConfig:
    spec: MatrixSpec
    k: int
    # None selects default_T; a tuple is a sweep over noise levels.
    T: float | tuple[float, ...] | None = None
    trials: int = 500
    seed: int = 0
    mode: str = "subspace"
    bounds_requested: frozenset[str] = frozenset(ALL_BOUNDS)
    sweep: tuple[int, ...] = ()
    threads: int = 1
    c_ug: float = 1.0
    gamma: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.trials < 2:
            raise InputError(f"trials must be >= 2, got {self.trials}")
        if self.threads < 1:
            raise InputError("threads must be >= 1")
        if isinstance(self.T, (list, tuple)):
            if not self.T:
                raise InputError("T sweep list is empty")
            object.__setattr__(self, "T", tuple(float(t) for t in self.T))
        if self.mode.startswith("scaling") and not self.sweep:
            raise InputError(f"mode {self.mode} needs a nonempty sweep")
        unknown = set(self.bounds_requested) - set(ALL_BOUNDS)
        if unknown:
            raise InputError(f"unknown bound kinds {sorted(unknown)}")
        object.__setattr__(self, "bounds_requested", frozenset(self.bounds_requested))
        object.__setattr__(self, "sweep", tuple(int(x) for x in self.sweep))

    def t_values(self) -> tuple[float, ...]:
        if self.T is None:
            return (default_T(self.spec, self.k),)
        return self.T if isinstance(self.T, tuple) else (float(self.T),)


def default_T(spec: MatrixSpec, k: int) -> float:
    """Largest T with sqrt(T)(sqrt(m) + sqrt(d)) <= 0.1 * min_{i<=k}(sigma_i - sigma_{i+1})."""
    s = spec.singular_values()
    k = min(k, spec.d - 1) if spec.d > 1 else 1
    gaps = s[:k] - s[1 : k + 1] if spec.d > 1 else s[:1]
    g = float(gaps.min())
    if g <= 0:
        raise InputError("default T needs positive top-k gaps")
    return (SMALL_PERTURBATION * g / (math.sqrt(spec.m) + math.sqrt(spec.d))) ** 2


@dataclass
class ExperimentSummary:
    label: str
    mode: str
    m: int
    d: int
    k: int
    T: float
    trials: int
    seed: int
    x: float
    empirical_mean: float
    empirical_stderr: float
    empirical_sq_mean: float
    empirical_sq_stderr: float
    max_sample: float
    bounds: dict[str, B.BoundValue] = field(default_factory=dict)
    assumption: B.AssumptionReport | None = None
    ratios: dict[str, float] = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self) -> dict:
        """Deterministic content only; ``runtime`` is reported separately."""
        return {
            "label": self.label,
            "mode": self.mode,
            "m": self.m,
            "d": self.d,
            "k": self.k,
            "T": self.T,
            "trials": self.trials,
            "seed": self.seed,
            "x": self.x,
            "empirical_mean": self.empirical_mean,
            "empirical_stderr": self.empirical_stderr,
            "empirical_sq_mean": self.empirical_sq_mean,
            "empirical_sq_stderr": self.empirical_sq_stderr,
            "max_sample": self.max_sample,
            "bounds": {k: b.to_dict() for k, b in self.bounds.items()},
            "assumption": None if self.assumption is None else self.assumption.to_dict(),
            "ratios": {k: B.json_float(v) for k, v in self.ratios.items()},
        }


def run_trials(fn, trials: int, threads: int = 1) -> list:
    """``[fn(0), ..., fn(trials - 1)]`` computed on ``threads`` workers, in index order."""
    with threadpool_limits(limits=1, user_api="blas"):
        if threads == 1:
            return [fn(i) for i in range(trials)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(trials)))


def mean_stderr(x) -> tuple[float, float]:
    """Sample mean and its standard error (unbiased variance)."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def _summarize(label, cfg, a, T, x, errors, bounds, assumption, started) -> ExperimentSummary:
    errors = np.asarray(errors, dtype=np.float64)
    mean, se = mean_stderr(errors)
    sq_mean, sq_se = mean_stderr(errors**2)
    bounds = {k: v for k, v in bounds.items() if k in cfg.bounds_requested}
    ratios = {}
    for kind, b in bounds.items():
        if b.vacuous:
            continue
        ratios[kind] = b.sans_constant / mean if mean > 0 else math.inf
        if b.explicit_constant is not None:
            ratios[f"{kind}_explicit"] = b.explicit_constant / mean if mean > 0 else math.inf
    m, d = a.shape
    return ExperimentSummary(
        label=label,
        mode=cfg.mode,
        m=m,
        d=d,
        k=cfg.k,
        T=T,
        trials=cfg.trials,
        seed=cfg.seed,
        x=float(x),
        empirical_mean=mean,
        empirical_stderr=se,
        empirical_sq_mean=sq_mean,
        empirical_sq_stderr=sq_se,
        max_sample=float(errors.max()),
        bounds=bounds,
        assumption=assumption,
        ratios=ratios,
        runtime=time.perf_counter() - started,
    )


def _scalar_T(cfg: ExperimentConfig, T: float | None) -> float:
    if T is None:
        ts = cfg.t_values()
        if len(ts) != 1:
            raise InputError("config holds a T sweep; use run_experiment or pass T")
        T = ts[0]
    T = float(T)
    if not (math.isfinite(T) and T >= 0):
        raise InputError(f"T must be finite and nonnegative, got {T}")
    return T


def _noise_trials(a: np.ndarray, T: float, cfg: ExperimentConfig, measure) -> list:
    m, d = a.shape
    rt = math.sqrt(T)

    def one(i):
        g = sample_gaussian_matrix(m, d, derive_seed(cfg.seed, "noise", i))
        return measure(svd(a + rt * g), g)

    return run_trials(one, cfg.trials, cfg.threads)


def run_subspace_experiment(cfg: ExperimentConfig, T: float | None = None, a=None) -> ExperimentSummary:
    """Measured E||V^_k V^_k^T - V_k V_k^T||_F against every subspace bound."""
    started = time.perf_counter()
    a = gen_matrix(cfg.spec) if a is None else as_matrix(a, "A")
    T = _scalar_T(cfg, T)
    m, d = a.shape
    k = cfg.k
    if not 1 <= k < d:
        raise InputError(f"subspace experiments need 1 <= k < d, got k={k}, d={d}")
    truth = svd(a)
    sigma = truth.singular_values
    if sigma[k - 1] - sigma[k] <= 1e-12 * max(sigma[0], 1.0):
        raise DegenerateTruthError(f"sigma_{k} = sigma_{k + 1}: subspace experiment undefined")
    if cfg.trials < 30:
        import warnings

        warnings.warn(f"only {cfg.trials} trials; standard errors are unreliable below 30", stacklevel=2)

    results = _noise_trials(
        a, T, cfg, lambda f, g: (subspace_from(f, truth, k).error_frobenius, spectral_norm(g))
    )
    errors = np.array([r[0] for r in results])
    gnorms = np.array([r[1] for r in results])

    prof = B.GapProfile(sigma, m)
    w = SpectralWeights.indicator(d, k)
    rank = int(np.sum(sigma > 1e-12 * max(sigma[0], 1.0)))
    rt = math.sqrt(T)
    bounds = {
        "davis_kahan_measured": B.davis_kahan_bound(prof, k, float(np.mean(rt * gnorms))),
        "davis_kahan_proxy": B.davis_kahan_bound(prof, k, rt * (math.sqrt(m) + math.sqrt(d))),
        "davis_kahan_whp": B.davis_kahan_bound(prof, k, rt * math.sqrt(m)),
        "orourke_vu": B.orourke_vu_bound(prof, k, rank, T),
        "subspace": B.subspace_bound(prof, k, T),
        "main": B.main_bound(prof, w, T),
    }
    if B.uniform_gap_holds(prof, k, cfg.c_ug):
        bounds["subspace_uniform"] = B.subspace_bound(prof, k, T, uniform_gaps=True, c_ug=cfg.c_ug)
    else:
        bounds["subspace_uniform"] = B.BoundValue(
            "subspace_uniform", math.inf, None, (B.VACUOUS, "hypothesis_failed"), {"c_ug": cfg.c_ug}
        )
    assumption = B.check_assumption(prof, k, T, w) if T > 0 else None
    return _summarize(f"subspace T={T!r}", cfg, a, T, T, errors, bounds, assumption, started)


def run_covariance_experiment(cfg: ExperimentConfig, T: float | None = None, a=None) -> ExperimentSummary:
    """Measured E||V^ S^_k^2 V^T - V S_k^2 V^T||_F against the covariance bounds."""
    started = time.perf_counter()
    a = gen_matrix(cfg.spec) if a is None else as_matrix(a, "A")
    T = _scalar_T(cfg, T)
    m, d = a.shape
    k = cfg.k
    if not 1 <= k <= d:
        raise InputError(f"covariance experiments need 1 <= k <= d, got k={k}, d={d}")
    truth = svd(a)
    sigma = truth.singular_values
    errors = _noise_trials(a, T, cfg, lambda f, g: covariance_from(f, truth, k).error_frobenius)

    prof = B.GapProfile(sigma, m)
    w = SpectralWeights.truncated(sigma, k)
    cov = B.covariance_bound(prof, k, T)
    dkw, ov = B.baseline_covariance_bounds(prof, k, T)
    bounds = {
        "covariance": cov,
        "covariance_simplified": B.BoundValue("covariance_simplified", cov.details.get("simplified", math.inf)),
        "baseline_dkw": dkw,
        "baseline_ov": ov,
        "main": B.main_bound(prof, w, T),
    }
    assumption = None
    if T > 0 and k < d and sigma[0] > sigma[-1]:
        assumption = B.check_assumption(prof, k, T, w)
    return _summarize(f"covariance T={T!r}", cfg, a, T, T, errors, bounds, assumption, started)


def run_weighted_experiment(cfg: ExperimentConfig, T: float | None = None, a=None) -> ExperimentSummary:
    """Measured E||V^ G^2 V^T - V G^2 V^T||_F for general weights ``cfg.gamma``."""
    started = time.perf_counter()
    a = gen_matrix(cfg.spec) if a is None else as_matrix(a, "A")
    T = _scalar_T(cfg, T)
    m, d = a.shape
    if cfg.gamma is None:
        w = SpectralWeights.indicator(d, cfg.k)
    else:
        gamma = np.zeros(d)
        gamma[: len(cfg.gamma)] = cfg.gamma
        w = SpectralWeights(gamma, cfg.k)
    truth = svd(a)
    errors = _noise_trials(a, T, cfg, lambda f, g: weighted_from(f, truth, w).error_frobenius)
    prof = B.GapProfile(truth.singular_values, m)
    bounds = {"main": B.main_bound(prof, w, T)}
    assumption = None
    if T > 0 and cfg.k < d:
        assumption = B.check_assumption(prof, cfg.k, T, w)
    return _summarize(f"weighted T={T!r}", cfg, a, T, T, errors, bounds, assumption, started)


_RUNNERS = {
    "subspace": run_subspace_experiment,
    "covariance": run_covariance_experiment,
    "weighted": run_weighted_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> list[ExperimentSummary]:
    """One summary per T value (subspace, covariance and weighted modes)."""
    if cfg.mode not in _RUNNERS:
        raise InputError(f"mode {cfg.mode} is a scaling mode; use run_scaling_study")
    a = gen_matrix(cfg.spec)
    return [_RUNNERS[cfg.mode](cfg, T, a) for T in cfg.t_values()]


@dataclass
class ScalingResult:
    parameter: str
    values: tuple[int, ...]
    T: float
    summaries: list[ExperimentSummary]
    slope: float
    slope_stderr: float
    slope_ci: tuple[float, float]
    bound_slopes: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "values": list(self.values),
            "T": self.T,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "slope_ci": list(self.slope_ci),
            "bound_slopes": {k: B.json_float(v) for k, v in self.bound_slopes.items()},
        }


def loglog_slope(x, y, level: float = 0.95) -> tuple[float, float, tuple[float, float]]:
    """Least-squares slope of log y on log x with a t-based confidence interval."""
    x, y = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    fit = stats.linregress(x, y)
    if x.size > 2:
        half = stats.t.ppf(0.5 + level / 2, x.size - 2) * fit.stderr
    else:
        half = math.inf
    return float(fit.slope), float(fit.stderr), (float(fit.slope - half), float(fit.slope + half))


def run_scaling_study(cfg: ExperimentConfig) -> ScalingResult:
    """Sweep m (``scaling_m``) or d (``scaling_d``) at a fixed T and fit log-log slopes.

    Without an explicit T every point uses the smallest default noise level
    across the sweep, so T stays fixed while the dimension varies.
    """
    if cfg.mode not in ("scaling_m", "scaling_d"):
        raise InputError(f"mode {cfg.mode} is not a scaling mode")
    param = cfg.mode.split("_")[1]
    values = cfg.sweep
    if len(values) < 4:
        raise InputError("scaling studies need at least 4 sweep points")
    if cfg.trials < 100:
        raise InputError("scaling studies need at least 100 trials per point")
    specs = [cfg.spec.with_dims(**{param: v}) for v in values]
    if cfg.T is None:
        T = min(default_T(s, cfg.k) for s in specs)
    else:
        ts = cfg.t_values()
        if len(ts) != 1:
            raise InputError("scaling studies take a single T")
        T = ts[0]
    sub = replace(cfg, mode="subspace", T=T)
    summaries = []
    for v, spec in zip(values, specs):
        s = run_subspace_experiment(replace(sub, spec=spec), T)
        s.mode, s.x, s.label = cfg.mode, float(v), f"{cfg.mode} {param}={v}"
        summaries.append(s)
    slope, se, ci = loglog_slope(values, [s.empirical_mean for s in summaries])
    bound_slopes = {}
    for kind in summaries[0].bounds:
        vals = [s.bounds[kind].sans_constant for s in summaries]
        if all(math.isfinite(v) and v > 0 for v in vals):
            bound_slopes[kind] = loglog_slope(values, vals)[0]
    return ScalingResult(param, values, T, summaries, slope, se, ci, bound_slopes)


CSV_BASE_COLUMNS = (
    "label",
    "mode",
    "m",
    "d",
    "k",
    "T",
    "trials",
    "seed",
    "x",
    "empirical_mean",
    "empirical_stderr",
    "empirical_sq_mean",
    "empirical_sq_stderr",
    "max_sample",
    "assumption_delta",
    "assumption_validity",
    "assumption_required_gap",
    "assumption_satisfied",
)
CSV_COLUMNS = CSV_BASE_COLUMNS + tuple(
    col for kind in ALL_BOUNDS for col in (f"bound_{kind}", f"bound_{kind}_explicit", f"ratio_{kind}")
)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_row(s: ExperimentSummary) -> list[str]:
    a = s.assumption
    row = {
        "label": s.label,
        "mode": s.mode,
        "m": s.m,
        "d": s.d,
        "k": s.k,
        "T": s.T,
        "trials": s.trials,
        "seed": s.seed,
        "x": s.x,
        "empirical_mean": s.empirical_mean,
        "empirical_stderr": s.empirical_stderr,
        "empirical_sq_mean": s.empirical_sq_mean,
        "empirical_sq_stderr": s.empirical_sq_stderr,
        "max_sample": s.max_sample,
        "assumption_delta": None if a is None else a.delta,
        "assumption_validity": None if a is None else a.validity_flag,
        "assumption_required_gap": None if a is None else a.required_gap,
        "assumption_satisfied": None if a is None else a.satisfied,
    }
    for kind in ALL_BOUNDS:
        b = s.bounds.get(kind)
        row[f"bound_{kind}"] = None if b is None else b.sans_constant
        row[f"bound_{kind}_explicit"] = None if b is None else b.explicit_constant
        row[f"ratio_{kind}"] = s.ratios.get(kind)
    return [_cell(row[c]) for c in CSV_COLUMNS]


def emit_report(summaries, out_dir, stem: str = "report", extra: dict | None = None) -> list[Path]:
    """Write ``<stem>.csv``, ``<stem>.json``, ``<stem>_plot.csv`` and ``<stem>_timings.json``.

    The first three are deterministic functions of the configuration; wall-clock
    timings go to the separate timings file.
    """
    summaries = list(summaries)
    if not summaries:
        raise InputError("emit_report needs at least one summary")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{stem}.csv", out / f"{stem}.json", out / f"{stem}_plot.csv", out / f"{stem}_timings.json"]
        with paths[0].open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            writer.writerows(csv_row(s) for s in summaries)
        doc = {"schema": "spectral-lab-report/1", "summaries": [s.to_dict() for s in summaries]}
        if extra:
            doc.update(extra)
        paths[1].write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")
        with paths[2].open("w") as fh:
            fh.write("x,y,yerr\n")
            for s in summaries:
                fh.write(f"{s.x!r},{s.empirical_mean!r},{s.empirical_stderr!r}\n")
        paths[3].write_text(json.dumps({s.label: s.runtime for s in summaries}, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing report to {out}: {exc}") from exc
    return paths

