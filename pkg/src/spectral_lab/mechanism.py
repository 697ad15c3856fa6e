"""Gaussian mechanism: release A + sqrt(T) G and measure the damage.

Released matrices are re-symmetrized as ``(X + X^T) / 2`` after the
floating-point products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTruthError, InputError
from .linalg import (
    SpectralWeights,
    SvdFactors,
    _weighted_gram,
    as_matrix,
    frobenius_distance,
    svd,
)
from .rng import standard_normal

# Relative tolerance under which sigma_k and sigma_{k+1} count as tied.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class NoiseConfig:
    T: float
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise InputError(f"T must be positive and finite, got {self.T}")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ReleaseResult:
    released: np.ndarray
    perturbed_sigma: np.ndarray
    error_frobenius: float | None
    flags: tuple[str, ...] = ()


def sample_gaussian_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    """rows x cols matrix of iid N(0, 1), row-major, bit-reproducible per seed."""
    if rows < 1 or cols < 1:
        raise InputError(f"rows and cols must be positive, got {rows}x{cols}")
    return standard_normal(seed, (rows, cols))


def perturb(a, cfg: NoiseConfig) -> np.ndarray:
    a = as_matrix(a, "A")
    g = sample_gaussian_matrix(*a.shape, cfg.seed)
    return a + math.sqrt(cfg.T) * g


def _symmetrize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.T)


def _has_tie(sigma: np.ndarray, k: int) -> bool:
    if k >= sigma.size:
        return False
    scale = max(float(sigma[0]), 1.0)
    return float(sigma[k - 1] - sigma[k]) <= TIE_TOL * scale


def _check_k(k: int, d: int, upper: int) -> None:
    if not 1 <= k <= upper:
        raise InputError(f"k must lie in [1, {upper}] for d={d}, got {k}")


def subspace_from(perturbed: SvdFactors, truth: SvdFactors | None, k: int) -> ReleaseResult:
    """Top-k projector of ``perturbed`` and its distance to that of ``truth``."""
    vk = perturbed.right[:, :k]
    released = _symmetrize(vk @ vk.T)
    err = None
    if truth is not None:
        tk = truth.right[:, :k]
        err = frobenius_distance(released, _symmetrize(tk @ tk.T))
    return ReleaseResult(released, perturbed.singular_values, err)


def release_subspace(a, k: int, cfg: NoiseConfig, allow_degenerate: bool = False) -> ReleaseResult:
    """Release V^_k V^_k^T for A + sqrt(T) G.

    Raises :class:`DegenerateTruthError` when sigma_k(A) = sigma_{k+1}(A);
    with ``allow_degenerate`` the projector is released without an error value.
    """
    a = as_matrix(a, "A")
    d = a.shape[1]
    _check_k(k, d, d - 1)
    truth = svd(a)
    flags = ()
    if _has_tie(truth.singular_values, k):
        if not allow_degenerate:
            raise DegenerateTruthError(f"sigma_{k} = sigma_{k + 1}: target subspace is ill-defined")
        truth, flags = None, ("degenerate_truth",)
    res = subspace_from(svd(perturb(a, cfg)), truth, k)
    return ReleaseResult(res.released, res.perturbed_sigma, res.error_frobenius, flags)


def covariance_from(perturbed: SvdFactors, truth: SvdFactors, k: int) -> ReleaseResult:
    """Rank-k covariance V^ S^_k^2 V^T and its distance to V S_k^2 V^T."""
    def rank_k(f: SvdFactors) -> np.ndarray:
        w = np.zeros_like(f.singular_values)
        w[:k] = f.singular_values[:k] ** 2
        return _weighted_gram(f.right, w)

    released = rank_k(perturbed)
    err = frobenius_distance(released, rank_k(truth))
    flags = ("tie_at_k",) if _has_tie(truth.singular_values, k) else ()
    return ReleaseResult(released, perturbed.singular_values, err, flags)


def release_covariance(a, k: int, cfg: NoiseConfig) -> ReleaseResult:
    a = as_matrix(a, "A")
    d = a.shape[1]
    _check_k(k, d, d)
    return covariance_from(svd(perturb(a, cfg)), svd(a), k)


def weighted_from(perturbed: SvdFactors, truth: SvdFactors, w: SpectralWeights) -> ReleaseResult:
    g2 = w.gamma**2
    released = _weighted_gram(perturbed.right, g2)
    err = frobenius_distance(released, _weighted_gram(truth.right, g2))
    return ReleaseResult(released, perturbed.singular_values, err)


def release_weighted(a, w: SpectralWeights, cfg: NoiseConfig) -> ReleaseResult:
    """Release V^ Gamma^2 V^T, the general orbit object behind both releases."""
    a = as_matrix(a, "A")
    if a.shape[1] != w.d:
        raise InputError(f"A has {a.shape[1]} columns but gamma has length {w.d}")
    return weighted_from(svd(perturb(a, cfg)), svd(a), w)
