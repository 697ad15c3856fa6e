"""Gaussian perturbation of singular subspaces: bounds, mechanism, SDEs and experiments."""

from .errors import (
    CollisionError,
    DegenerateTruthError,
    HypothesisError,
    InputError,
    NumericError,
    SpectralLabError,
)
from .linalg import (
    SpectralWeights,
    SvdFactors,
    frobenius_distance,
    projector,
    spectral_norm,
    svd,
    weighted_gram,
)

__version__ = "0.1.0"
