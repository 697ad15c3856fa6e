"""Dense linear algebra used by every other module.

Matrices are plain 2-D ``float64`` numpy arrays. The helpers here add the
validation, sign canonicalization and tolerances the rest of the package
relies on.

Individual singular vectors are not identifiable when singular values repeat;
only projector-level quantities (:func:`projector`, :func:`weighted_gram`) are
meaningful in that case.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, NumericError

ORTHO_TOL = 1e-8
RECON_TOL = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array or raise :class:`InputError`."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = left @ diag(singular_values) @ right.T``.

    ``left`` is m x d with orthonormal columns, ``right`` is d x d orthogonal
    and ``singular_values`` is nonincreasing.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.left.shape[0], self.right.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T

    def check(self, a: np.ndarray | None = None) -> None:
        """Raise :class:`NumericError` if an invariant is violated."""
        s = self.singular_values
        if np.any(np.diff(s) > 0) or np.any(s < 0):
            raise NumericError("singular values not sorted nonincreasing and nonnegative")
        d = s.shape[0]
        eye = np.eye(d)
        if np.linalg.norm(self.left.T @ self.left - eye) > ORTHO_TOL:
            raise NumericError("left factor not orthonormal")
        if np.linalg.norm(self.right.T @ self.right - eye) > ORTHO_TOL:
            raise NumericError("right factor not orthogonal")
        if a is not None:
            scale = np.linalg.norm(a)
            if np.linalg.norm(a - self.reconstruct()) > RECON_TOL * max(scale, 1.0):
                raise NumericError("SVD reconstruction error too large")


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Signs making the largest-magnitude entry of each column nonnegative.

    Ties in magnitude resolve to the lowest row index.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return np.where(pivots < 0, -1.0, 1.0)


def svd(a) -> SvdFactors:
    """Thin SVD of an m x d matrix (m >= d) with canonical right-vector signs."""
    a = as_matrix(a, "A")
    m, d = a.shape
    if m < d:
        raise InputError(f"expected rows >= cols, got {m}x{d}")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed to converge for {m}x{d} matrix") from exc
    v = vt.T
    signs = canonical_signs(v)
    return SvdFactors(left=u * signs, singular_values=s, right=v * signs)


def singular_values(a) -> np.ndarray:
    a = as_matrix(a, "A")
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed to converge for {a.shape[0]}x{a.shape[1]} matrix") from exc


def _check_orthogonal(v: np.ndarray) -> np.ndarray:
    v = as_matrix(v, "V")
    if v.shape[0] != v.shape[1]:
        raise InputError(f"V must be square, got {v.shape}")
    if np.linalg.norm(v.T @ v - np.eye(v.shape[0])) > ORTHO_TOL:
        raise InputError("V is not orthogonal within ORTHO_TOL")
    return v


def projector(v, k: int) -> np.ndarray:
    """Orthogonal projector ``V_k V_k^T`` onto the span of the first k columns."""
    v = _check_orthogonal(v)
    d = v.shape[0]
    if not 1 <= k <= d:
        raise InputError(f"k must lie in [1, {d}], got {k}")
    vk = v[:, :k]
    p = vk @ vk.T
    return 0.5 * (p + p.T)


@dataclass(frozen=True)
class SpectralWeights:
    """Nonincreasing nonnegative weights gamma with gamma_i = 0 beyond index k."""

    gamma: np.ndarray
    k: int

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "gamma", g)
        d = g.shape[0]
        if d < 1 or not np.all(np.isfinite(g)):
            raise InputError("gamma must be a non-empty finite vector")
        if not 1 <= self.k <= d:
            raise InputError(f"k must lie in [1, {d}], got {self.k}")
        if np.any(g < 0) or np.any(np.diff(g) > 0):
            raise InputError("gamma must be nonincreasing and nonnegative")
        if np.any(g[self.k:] != 0):
            raise InputError("gamma must vanish beyond index k")

    @property
    def d(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def indicator(cls, d: int, k: int) -> SpectralWeights:
        """gamma = (1,...,1,0,...,0) with k ones: the subspace-recovery weights."""
        g = np.zeros(d)
        g[:k] = 1.0
        return cls(g, k)

    @classmethod
    def truncated(cls, sigma, k: int) -> SpectralWeights:
        """gamma = (sigma_1,...,sigma_k,0,...,0): the rank-k covariance weights."""
        s = np.asarray(sigma, dtype=np.float64)
        g = np.zeros_like(s)
        g[:k] = s[:k]
        return cls(g, k)


def weighted_gram(v, w: SpectralWeights) -> np.ndarray:
    """``V diag(gamma^2) V^T``; invariant under sign flips of the columns of V."""
    v = _check_orthogonal(v)
    if v.shape[0] != w.d:
        raise InputError(f"V is {v.shape[0]}x{v.shape[0]} but gamma has length {w.d}")
    return _weighted_gram(v, w.gamma**2)


def _weighted_gram(v: np.ndarray, weights: np.ndarray) -> np.ndarray:
    g = (v * weights) @ v.T
    return 0.5 * (g + g.T)


def frobenius_distance(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise InputError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))


def spectral_norm(x) -> float:
    """Largest singular value."""
    return float(singular_values(x)[0])


def read_matrix_csv(path) -> np.ndarray:
    """Read a headerless CSV of reals, one matrix row per line."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise InputError(f"cannot read matrix file {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty matrix file")
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise InputError(f"{path}: ragged row {lineno} ({len(row)} fields, expected {width})")
    try:
        data = np.array([[float(c) for c in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from exc
    return as_matrix(data, str(path))


def write_matrix_csv(path, a) -> None:
    """Write a matrix as headerless CSV with 17 significant digits."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    path = Path(path)
    with path.open("w", newline="") as fh:
        for row in a:
            fh.write(",".join(f"{x:.17g}" for x in row))
            fh.write("\n")
