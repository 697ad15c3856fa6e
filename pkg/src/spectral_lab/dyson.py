"""Dyson-Bessel process: singular values and right-singular vectors of A + B(t).

``simulate`` integrates the coupled SDEs

    d sigma_i = d beta_ii + (1/(2 sigma_i)) (sum_{j != i} (s_i^2 + s_j^2)/(s_i^2 - s_j^2) + m - 1) dt
    d v_i     = sum_{j != i} v_j c_ij d beta_ji - (v_i / 2) sum_{j != i} c_ij^2 dt

with explicit Euler-Maruyama. ``direct_path`` samples the matrix path itself
and is the oracle the SDE integrator is checked against.

Increment convention: the strictly lower entries ``skew[j, i]`` (j > i) are
the sampled variates d beta_ji; the upper triangle is their negative.
Left singular vectors are not evolved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bounds import cij_matrix
from .errors import CollisionError, InputError, NumericError
from .linalg import SpectralWeights, SvdFactors, _weighted_gram, as_matrix, svd
from .rng import NormalStream, derive_seed


@dataclass(frozen=True)
class SdeState:
    t: float
    sigma: np.ndarray
    frame: np.ndarray
    step_count: int = 0


@dataclass(frozen=True)
class SdeConfig:
    dt: float
    T: float
    m: int
    seed: int = 0
    reortho_every: int = 10
    # None: 1e-3 times the initial minimum gap (resolved by simulate).
    collision_floor: float | None = None
    max_halvings: int = 12

    def __post_init__(self):
        if not self.dt > 0:
            raise InputError(f"dt must be positive, got {self.dt}")
        if self.T < 0:
            raise InputError(f"T must be nonnegative, got {self.T}")
        if self.T > 0 and self.dt > self.T:
            raise InputError(f"dt={self.dt} exceeds T={self.T}")
        if self.collision_floor is not None and not self.collision_floor > 0:
            raise InputError("collision_floor must be positive")
        if self.reortho_every < 1:
            raise InputError("reortho_every must be >= 1")

    @property
    def floor(self) -> float:
        if self.collision_floor is None:
            raise InputError("collision_floor unresolved; call simulate or set it explicitly")
        return self.collision_floor


@dataclass(frozen=True)
class BrownianIncrements:
    """d beta_ii on the diagonal and d beta_ji (j > i) strictly below it."""

    diag: np.ndarray
    skew: np.ndarray
    dt: float

    @property
    def d(self) -> int:
        return self.diag.size

    def matrix(self) -> np.ndarray:
        """Full increment matrix: skew-symmetric off the diagonal."""
        low = np.tril(self.skew, -1)
        return low - low.T + np.diag(self.diag)

    @classmethod
    def zeros(cls, d: int, dt: float) -> BrownianIncrements:
        return cls(np.zeros(d), np.zeros((d, d)), dt)

    @classmethod
    def from_normals(cls, z: np.ndarray, d: int, dt: float) -> BrownianIncrements:
        """Scale d + d(d-1)/2 standard normals: diagonal first, then lower row-major."""
        z = np.asarray(z, dtype=np.float64) * math.sqrt(dt)
        skew = np.zeros((d, d))
        skew[np.tril_indices(d, -1)] = z[d:]
        return cls(z[:d].copy(), skew, dt)

    @classmethod
    def sample(cls, stream: NormalStream, d: int, dt: float) -> BrownianIncrements:
        return cls.from_normals(stream.normal(n_normals(d)), d, dt)

    def split(self, stream: NormalStream) -> tuple[BrownianIncrements, BrownianIncrements]:
        """Brownian-bridge split into two consecutive half-step increments."""
        h = 0.5 * self.dt
        d = self.d
        z = stream.normal(n_normals(d)) * math.sqrt(0.5 * h)
        low = np.tril_indices(d, -1)
        first_skew = np.zeros((d, d))
        first_skew[low] = 0.5 * self.skew[low] + z[d:]
        first = BrownianIncrements(0.5 * self.diag + z[:d], first_skew, h)
        second = BrownianIncrements(self.diag - first.diag, np.tril(self.skew - first_skew, -1), h)
        return first, second


def n_normals(d: int) -> int:
    return d + d * (d - 1) // 2


def drift_sigma(sigma, m: int) -> np.ndarray:
    """Drift of the singular-value SDE, term by term as written."""
    s = np.asarray(sigma, dtype=np.float64)
    if np.any(s <= 0) or np.any(np.diff(s) >= 0):
        raise NumericError("singular drift: sigma must be strictly decreasing and positive")
    s2 = s**2
    with np.errstate(divide="ignore"):
        frac = (s2[:, None] + s2[None, :]) / (s2[:, None] - s2[None, :])
    np.fill_diagonal(frac, 0.0)
    return (frac.sum(axis=1) + (m - 1)) / (2.0 * s)


def initial_state(a) -> SdeState:
    f = svd(as_matrix(a, "A"))
    return SdeState(0.0, f.singular_values.copy(), f.right.copy(), 0)


def _collision(sigma: np.ndarray, floor: float) -> int | None:
    seps = np.append(-np.diff(sigma), sigma[-1])
    bad = np.flatnonzero(~(seps >= floor))
    return int(bad[0]) if bad.size else None


def reorthonormalize(frame: np.ndarray) -> np.ndarray:
    """Q of the QR factorization with diag(R) forced positive."""
    q, r = np.linalg.qr(frame)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs


def _euler(state: SdeState, cfg: SdeConfig, inc: BrownianIncrements) -> SdeState:
    sigma, v, dt = state.sigma, state.frame, inc.dt
    new_sigma = sigma + inc.diag + drift_sigma(sigma, cfg.m) * dt
    c = cij_matrix(sigma)
    coupling = c * inc.matrix()
    np.fill_diagonal(coupling, -0.5 * np.sum(c**2, axis=0) * dt)
    new_frame = v + v @ coupling
    count = state.step_count + 1
    if count % cfg.reortho_every == 0:
        new_frame = reorthonormalize(new_frame)
    return SdeState(state.t + dt, new_sigma, new_frame, count)


def step(
    state: SdeState,
    cfg: SdeConfig,
    inc: BrownianIncrements,
    bridge: NormalStream | None = None,
) -> SdeState:
    """One Euler-Maruyama step of size ``inc.dt``.

    A step that brings two singular values (or sigma_d and zero) closer than
    the collision floor is rejected and replaced by two half steps whose
    increments come from a Brownian bridge, recursively up to
    ``cfg.max_halvings`` levels; beyond that :class:`CollisionError` is raised.
    """
    if inc.d != state.sigma.size:
        raise InputError(f"increments have dimension {inc.d}, state has {state.sigma.size}")
    return _advance(state, cfg, inc, bridge, 0)


def _advance(state, cfg, inc, bridge, depth):
    new = _euler(state, cfg, inc)
    bad = _collision(new.sigma, cfg.floor)
    if bad is None:
        return new
    if depth >= cfg.max_halvings:
        raise CollisionError(state.t, bad, new.sigma)
    if bridge is None:
        bridge = NormalStream(derive_seed(cfg.seed, "bridge", state.step_count))
    first, second = inc.split(bridge)
    mid = _advance(state, cfg, first, bridge, depth + 1)
    return _advance(mid, cfg, second, bridge, depth + 1)


def _checkpoint_steps(n_steps: int, checkpoints: int) -> set[int]:
    return {round(j * n_steps / checkpoints) for j in range(1, checkpoints + 1)}


def simulate(a, cfg: SdeConfig, checkpoints: int = 1, noise_scale: float = 1.0) -> list[SdeState]:
    """Integrate from svd(A) at t=0 to t=T; returns the initial and checkpoint states.

    ``noise_scale=0`` runs the deterministic skeleton (all increments zero).
    """
    a = as_matrix(a, "A")
    m, d = a.shape
    if m != cfg.m:
        raise InputError(f"config m={cfg.m} but A has {m} rows")
    if checkpoints < 1:
        raise InputError("checkpoints must be >= 1")
    state = initial_state(a)
    gaps = np.append(-np.diff(state.sigma), state.sigma[-1])
    if cfg.collision_floor is None:
        cfg = replace(cfg, collision_floor=1e-3 * float(gaps.min()) if gaps.min() > 0 else math.inf)
    if np.any(gaps <= cfg.floor):
        raise InputError("initial singular values need gaps (and sigma_d) above the collision floor")
    out = [state]
    if cfg.T == 0:
        return out
    n_steps = max(1, math.ceil(cfg.T / cfg.dt - 1e-9))
    stops = _checkpoint_steps(n_steps, min(checkpoints, n_steps))
    noise = NormalStream(derive_seed(cfg.seed, "sde"))
    bridge = NormalStream(derive_seed(cfg.seed, "sde-bridge"))
    z = noise.normal((n_steps, n_normals(d))) * noise_scale
    for n in range(n_steps):
        dt = cfg.dt if n < n_steps - 1 else cfg.T - cfg.dt * (n_steps - 1)
        inc = BrownianIncrements.from_normals(z[n], d, dt)
        state = step(state, cfg, inc, bridge)
        if n + 1 in stops:
            out.append(state)
    return out


def step_psi(state: SdeState, w: SpectralWeights, inc: BrownianIncrements, dt: float | None = None) -> np.ndarray:
    """Increment of Psi = V Gamma^2 V^T driven by ``inc``:

    sum_i sum_{j != i} (g_i^2 - g_j^2) [ (c_ij/2) d beta_ji (v_i v_j^T + v_j v_i^T) - c_ij^2 dt v_i v_i^T ]
    """
    if dt is None:
        dt = inc.dt
    sigma, v = state.sigma, state.frame
    if w.d != sigma.size or inc.d != sigma.size:
        raise InputError("dimension mismatch between state, weights and increments")
    if _collision(sigma, 0.0) is not None or np.any(np.diff(sigma) == 0):
        raise NumericError("step_psi: tied singular values")
    g2 = w.gamma**2
    diff = g2[:, None] - g2[None, :]
    c = cij_matrix(sigma)
    # noise[i, j] = (g_i^2 - g_j^2) c_ij d beta_ji / 2
    noise = 0.5 * diff * c * inc.matrix().T
    core = noise + noise.T
    core[np.diag_indices_from(core)] = -np.sum(diff * c**2, axis=1) * dt
    out = v @ core @ v.T
    return 0.5 * (out + out.T)


def project_increments(factors: SvdFactors, db: np.ndarray, dt: float) -> BrownianIncrements:
    """The d beta's that a matrix Brownian increment ``db`` induces at ``factors``.

    d beta_ii = u_i^T dB v_i and, for j > i,
    d beta_ji = (s_j u_j^T dB v_i + s_i u_i^T dB v_j) / sqrt(s_i^2 + s_j^2),
    so that the first-order change of each v_i is sum_j v_j c_ij d beta_ji.
    """
    x = factors.left.T @ db @ factors.right
    s = factors.singular_values
    sym = s[:, None] * x + (s[:, None] * x).T
    norm = np.sqrt(s[:, None] ** 2 + s[None, :] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.tril(sym / norm, -1)
    return BrownianIncrements(np.diag(x).copy(), skew, dt)


def direct_path(a, T: float, n_checkpoints: int, seed: int) -> list[tuple[float, SvdFactors]]:
    """SVDs of Phi(t_j) = A + B(t_j), t_j = j T / n_checkpoints, j = 1..n.

    B accumulates independent N(0, T / n_checkpoints) matrices drawn in order
    from one stream, so with one checkpoint Phi(T) equals
    ``perturb(A, NoiseConfig(T, seed))`` exactly.
    """
    a = as_matrix(a, "A")
    if T < 0:
        raise InputError("T must be nonnegative")
    if n_checkpoints < 1:
        raise InputError("n_checkpoints must be >= 1")
    if T == 0:
        return [(0.0, svd(a))]
    m, d = a.shape
    h = T / n_checkpoints
    stream = NormalStream(seed)
    phi = a.copy()
    out = []
    for j in range(1, n_checkpoints + 1):
        phi = phi + math.sqrt(h) * stream.normal((m, d))
        out.append((j * h, svd(phi)))
    return out


def psi(frame: np.ndarray, w: SpectralWeights) -> np.ndarray:
    """V Gamma^2 V^T without the orthogonality check (frames drift between QR steps)."""
    return _weighted_gram(frame, w.gamma**2)
