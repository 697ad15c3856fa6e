"""Exception hierarchy shared by every module.

The CLI maps :class:`InputError` to exit code 2 and :class:`NumericError`
(including :class:`CollisionError`) to exit code 3.
"""


class SpectralLabError(Exception):
    """Base class for all library errors."""


class InputError(SpectralLabError, ValueError):
    """Invalid arguments: bad shapes, non-finite entries, out-of-range indices."""


class HypothesisError(InputError):
    """A bound was requested whose side hypothesis does not hold."""


class DegenerateTruthError(InputError):
    """The unperturbed target object is not identifiable (tied singular values)."""


class NumericError(SpectralLabError, ArithmeticError):
    """A numerical routine failed to converge or produced garbage."""


class CollisionError(NumericError):
    """Singular values came closer than the configured floor in an SDE step."""

    def __init__(self, t, index, sigma):
        self.t = float(t)
        self.index = int(index)
        self.sigma = tuple(float(s) for s in sigma)
        super().__init__(
            f"singular value collision at t={self.t:.6g} near index {self.index}: "
            f"sigma={self.sigma}"
        )
