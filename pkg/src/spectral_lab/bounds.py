"""Closed-form perturbation bounds, coefficients and the gap assumption.

Every bound is reported with its O(.) constant set to 1 (``sans_constant``).
The main weighted-orbit bound additionally carries the explicit constants 64
and 32 from the integral estimate (``explicit_constant``).

Degenerate inputs (zero gaps) do not raise: they return an infinite value
with the ``"vacuous"`` flag, so parameter sweeps can record them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, InputError
from .linalg import SpectralWeights

VACUOUS = "vacuous"
DELTA_VALID = "valid"
DELTA_OUT_OF_RANGE = "delta_out_of_range"

# Explicit constants of the integral bound on E||Psi(T) - Psi(0)||_F^2.
MAIN_C1 = 64.0
MAIN_C2 = 32.0


@dataclass(frozen=True)
class GapProfile:
    """Singular values of A together with its row count m."""

    sigma: np.ndarray
    m: int

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "sigma", s)
        if s.size < 1 or not np.all(np.isfinite(s)):
            raise InputError("sigma must be a non-empty finite vector")
        if np.any(s < 0) or np.any(np.diff(s) > 0):
            raise InputError("sigma must be nonincreasing and nonnegative")
        if self.m < s.size:
            raise InputError(f"need d <= m, got d={s.size}, m={self.m}")

    @property
    def d(self) -> int:
        return self.sigma.size

    def gap(self, k: int) -> float:
        """sigma_k - sigma_{k+1} (1-based k); sigma_{d+1} is taken as 0."""
        self._check_k(k, self.d)
        nxt = self.sigma[k] if k < self.d else 0.0
        return float(self.sigma[k - 1] - nxt)

    def _check_k(self, k: int, upper: int) -> None:
        if not 1 <= k <= upper:
            raise InputError(f"k must lie in [1, {upper}], got {k}")


@dataclass(frozen=True)
class BoundValue:
    kind: str
    sans_constant: float
    explicit_constant: float | None = None
    flags: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return VACUOUS in self.flags

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sans_constant": json_float(self.sans_constant),
            "explicit_constant": json_float(self.explicit_constant),
            "flags": list(self.flags),
            "details": {k: json_float(v) if isinstance(v, float) else v for k, v in self.details.items()},
        }


def json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _vacuous(kind: str, **details) -> BoundValue:
    return BoundValue(kind, math.inf, None, (VACUOUS,), details)


@dataclass(frozen=True)
class AssumptionReport:
    delta: float
    validity_flag: str
    required_gap: float
    gaps: np.ndarray
    gap_satisfied: np.ndarray
    T: float
    k: int

    @property
    def satisfied(self) -> bool:
        return self.validity_flag == DELTA_VALID and bool(np.all(self.gap_satisfied))

    def to_dict(self) -> dict:
        return {
            "delta": json_float(self.delta),
            "validity_flag": self.validity_flag,
            "required_gap": json_float(self.required_gap),
            "gaps": [float(g) for g in self.gaps],
            "gap_satisfied": [bool(b) for b in self.gap_satisfied],
            "satisfied": self.satisfied,
            "T": self.T,
            "k": self.k,
        }


def _check_T(T: float) -> float:
    T = float(T)
    if not math.isfinite(T) or T < 0:
        raise InputError(f"T must be finite and nonnegative, got {T}")
    return T


def delta_of(profile: GapProfile, w: SpectralWeights) -> tuple[float, str]:
    """Failure probability delta of the gap assumption and its validity flag.

    delta = (gamma_1^2 - gamma_d^2) / (8 d gamma_1^2 (sigma_1 - sigma_d)^2).
    A value outside (0, 1) is returned with ``DELTA_OUT_OF_RANGE``.
    """
    if w.d != profile.d:
        raise InputError(f"gamma has length {w.d}, sigma has length {profile.d}")
    g1, gd = w.gamma[0], w.gamma[-1]
    s1, sd = profile.sigma[0], profile.sigma[-1]
    if g1 == 0:
        raise InputError("delta undefined: gamma_1 = 0")
    if s1 == sd:
        raise InputError("delta undefined: sigma_1 = sigma_d")
    d = profile.d
    delta = (g1**2 - gd**2) / (8.0 * d * g1**2 * (s1 - sd) ** 2)
    flag = DELTA_VALID if 0.0 < delta < 1.0 else DELTA_OUT_OF_RANGE
    return float(delta), flag


def required_gap(T: float, m: int, delta: float) -> float:
    """8 sqrt(T) sqrt(m) log(1/delta)."""
    return 8.0 * math.sqrt(T) * math.sqrt(m) * math.log(1.0 / delta)


def check_assumption(
    profile: GapProfile,
    k: int,
    T: float,
    w: SpectralWeights,
    delta: float | None = None,
) -> AssumptionReport:
    """Check the top-k gap condition against 8 sqrt(T m) log(1/delta).

    ``delta`` overrides the value derived from (sigma, gamma); otherwise
    :func:`delta_of` is used. With an invalid delta the report carries
    ``required_gap = inf`` and every gap check fails.
    """
    profile._check_k(k, profile.d - 1)
    T = _check_T(T)
    if T == 0:
        raise InputError("T must be positive")
    if delta is None:
        delta, flag = delta_of(profile, w)
    else:
        delta = float(delta)
        flag = DELTA_VALID if 0.0 < delta < 1.0 else DELTA_OUT_OF_RANGE
    gaps = profile.sigma[:k] - profile.sigma[1 : k + 1]
    req = required_gap(T, profile.m, delta) if flag == DELTA_VALID else math.inf
    return AssumptionReport(
        delta=delta,
        validity_flag=flag,
        required_gap=req,
        gaps=gaps,
        gap_satisfied=gaps >= req,
        T=T,
        k=k,
    )


def davis_kahan_bound(profile: GapProfile, k: int, e_norm: float) -> BoundValue:
    """sqrt(k) ||E|| / (sigma_k - sigma_{k+1})."""
    gap = profile.gap(k)
    if e_norm < 0:
        raise InputError("e_norm must be nonnegative")
    if gap <= 0:
        return _vacuous("davis_kahan", gap=gap)
    return BoundValue("davis_kahan", math.sqrt(k) * e_norm / gap, details={"gap": gap})


def orourke_vu_bound(profile: GapProfile, k: int, r: int, T: float, m: int | None = None) -> BoundValue:
    """k (sqrt(r)/gap + m/(sigma_k gap) + sqrt(m)/sigma_k) sqrt(T).

    ``m`` defaults to ``profile.m``; passing it lets the formula be evaluated
    for row counts the profile itself would reject.
    """
    T = _check_T(T)
    gap = profile.gap(k)
    sk = float(profile.sigma[k - 1])
    if gap <= 0 or sk == 0:
        return _vacuous("orourke_vu", gap=gap)
    m = profile.m if m is None else int(m)
    if m < 1 or r < 0:
        raise InputError("need m >= 1 and r >= 0")
    val = k * (math.sqrt(r) / gap + m / (sk * gap) + math.sqrt(m) / sk) * math.sqrt(T)
    return BoundValue("orourke_vu", val, details={"gap": gap, "rank": r})


def main_bound_sums(profile: GapProfile, w: SpectralWeights) -> tuple[float, float]:
    """(S1, S2) of the weighted-orbit bound.

    S1 = sum_{i<=k} sum_{j>i} (g_i^2 - g_j^2)^2 / (s_i - s_j)^2
    S2 = sum_{i<=k} (sum_{j>i} (g_i^2 - g_j^2) / (s_i - s_j)^2)^2

    Pairs with equal weights contribute nothing, even at tied sigma. A tied
    sigma pair with unequal weights makes both sums infinite.
    """
    if w.d != profile.d:
        raise InputError(f"gamma has length {w.d}, sigma has length {profile.d}")
    s, g2 = profile.sigma, w.gamma**2
    s1 = s2 = 0.0
    for i in range(w.k):
        num = g2[i] - g2[i + 1 :]
        den = (s[i] - s[i + 1 :]) ** 2
        live = num != 0
        if np.any(den[live] == 0):
            return math.inf, math.inf
        s1 += float(np.sum(num[live] ** 2 / den[live]))
        s2 += float(np.sum(num[live] / den[live])) ** 2
    return s1, s2


def main_bound(profile: GapProfile, w: SpectralWeights, T: float) -> BoundValue:
    """Bound on sqrt(E||V^ G^2 V^T - V G^2 V^T||_F^2).

    ``sans_constant = sqrt(S1 T)``; ``explicit_constant = sqrt(64 T S1 + 32 T^2 S2)``.
    """
    T = _check_T(T)
    s1, s2 = main_bound_sums(profile, w)
    if math.isinf(s1):
        return _vacuous("main")
    return BoundValue(
        "main",
        math.sqrt(s1 * T),
        math.sqrt(MAIN_C1 * T * s1 + MAIN_C2 * T**2 * s2),
        details={"S1": s1, "S2": s2},
    )


def uniform_gap_holds(profile: GapProfile, k: int, c_ug: float = 1.0) -> bool:
    """min_{i<=k} (sigma_i - sigma_{i+1}) >= c_ug (sigma_k - sigma_{k+1})."""
    gaps = np.array([profile.gap(i) for i in range(1, k + 1)])
    return bool(gaps.min() >= c_ug * profile.gap(k))


def subspace_bound(
    profile: GapProfile,
    k: int,
    T: float,
    uniform_gaps: bool = False,
    c_ug: float = 1.0,
) -> BoundValue:
    """sqrt(kd)/gap sqrt(T), or sqrt(d)/gap sqrt(T) under uniform top gaps.

    Raises :class:`HypothesisError` when the uniform form is requested but
    the top-k gaps are not all at least ``c_ug`` times the k-th gap.
    """
    T = _check_T(T)
    gap = profile.gap(k)
    kind = "subspace_uniform" if uniform_gaps else "subspace"
    if gap <= 0:
        return _vacuous(kind, gap=gap, c_ug=c_ug)
    d = profile.d
    if uniform_gaps:
        if not uniform_gap_holds(profile, k, c_ug):
            raise HypothesisError(f"top-{k} gaps are not all >= {c_ug} * (sigma_k - sigma_(k+1))")
        val = math.sqrt(d) / gap * math.sqrt(T)
    else:
        val = math.sqrt(k * d) / gap * math.sqrt(T)
    return BoundValue(kind, val, details={"gap": gap, "c_ug": c_ug})


def covariance_bound(profile: GapProfile, k: int, T: float) -> BoundValue:
    """sqrt((d ||Sigma_k||_F^2 + k sum_{j>k} (sigma_k^2/(sigma_k - sigma_j))^2) T).

    ``details["simplified"]`` holds sqrt(kd) (sigma_1 + sigma_k^2/gap) sqrt(T).
    """
    T = _check_T(T)
    profile._check_k(k, profile.d)
    s, d = profile.sigma, profile.d
    sk = s[k - 1]
    tail = s[k:]
    if tail.size and np.any(tail >= sk):
        return _vacuous("covariance")
    head = float(np.sum(s[:k] ** 2))
    cross = float(np.sum((sk**2 / (sk - tail)) ** 2)) if tail.size else 0.0
    val = math.sqrt((d * head + k * cross) * T)
    gap = profile.gap(k)
    simplified = math.sqrt(k * d) * (s[0] + sk**2 / gap) * math.sqrt(T) if gap > 0 else math.inf
    return BoundValue("covariance", val, details={"simplified": simplified})


def baseline_covariance_bounds(
    profile: GapProfile, k: int, T: float, c_regime: float = 0.5
) -> tuple[BoundValue, BoundValue]:
    """Covariance bounds obtained by plugging the earlier subspace bounds in.

    Returns (DKW form, O'Rourke-Vu form). The O'Rourke-Vu form carries the
    flag ``"regime_ok"`` or ``"regime_violated"`` for the condition
    gap >= c_regime * max(sigma_k, sqrt(m)).
    """
    T = _check_T(T)
    gap = profile.gap(k)
    if gap <= 0:
        return _vacuous("baseline_dkw"), _vacuous("baseline_ov")
    s1, sk, m = float(profile.sigma[0]), float(profile.sigma[k - 1]), profile.m
    rt, rm = math.sqrt(T), math.sqrt(m)
    dkw = 2.0 * k**1.5 * rm * rt * s1 + sk**2 * math.sqrt(k) * rm / gap * rt
    ov = s1 * k * rm * rt
    regime = "regime_ok" if gap >= c_regime * max(sk, rm) else "regime_violated"
    return (
        BoundValue("baseline_dkw", dkw),
        BoundValue("baseline_ov", ov, flags=(regime,), details={"c_regime": c_regime}),
    )


def cij(sigma_i: float, sigma_j: float) -> float:
    """sqrt((s_i^2 + s_j^2) / (s_i^2 - s_j^2)^2); infinite at ties."""
    a2, b2 = float(sigma_i) ** 2, float(sigma_j) ** 2
    den = abs(a2 - b2)
    if den == 0:
        return math.inf
    return math.sqrt(a2 + b2) / den


def cij_matrix(sigma: np.ndarray) -> np.ndarray:
    """Symmetric matrix of c_ij with zero diagonal."""
    s2 = np.asarray(sigma, dtype=np.float64) ** 2
    num = np.sqrt(s2[:, None] + s2[None, :])
    den = np.abs(s2[:, None] - s2[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        c = num / den
    np.fill_diagonal(c, 0.0)
    return c


def gaussian_opnorm_tail(m: int, d: int, s: float) -> tuple[float, float]:
    """(sqrt(m) + sqrt(d) + s, min(1, 2 exp(-s^2))) for an m x d standard Gaussian."""
    if m < 1 or d < 1:
        raise InputError("m and d must be positive")
    if not s > 0:
        raise InputError(f"s must be positive, got {s}")
    return math.sqrt(m) + math.sqrt(d) + s, min(1.0, 2.0 * math.exp(-(s**2)))
