"""Exception hierarchy for the scattering toolkit."""


class ScatteringError(Exception):
    """Base class for all toolkit errors."""


class OverlapError(ScatteringError):
    """Two particle balls overlap (center distance <= sum of radii)."""


class MethodMismatch(ScatteringError):
    """A closed-form evaluation was requested for a profile it does not cover."""


class SingularDenominator(ScatteringError):
    """k^2 + p(r) vanishes (or nearly vanishes) inside a particle."""


class TooClose(ScatteringError):
    """Cross-moment target point lies within 2a of the source ball center."""


class DegenerateDenominator(ScatteringError):
    """The 2x2 block determinant of the single-body solve is (near) zero."""


class SmallnessViolation(ScatteringError):
    """|a_m| >= 1: the body is not small enough for the moment solve."""


class InsideNearZone(ScatteringError):
    """Field evaluation point lies within 2a of a particle center."""


class SingularSystem(ScatteringError):
    """Dense factorization detected (near) rank deficiency."""


class NoConvergence(ScatteringError):
    """Fixed-point iteration did not reach tolerance within max_iter."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DensityTooHigh(ScatteringError):
    """Requested particle density implies spacing <= 2a."""


class ResolutionError(ScatteringError):
    """Grid spacing too coarse for the requested wavenumber."""


class ZeroDensity(ScatteringError):
    """Target refraction differs from 1 where the particle density is zero."""


class PassivityViolation(ScatteringError):
    """Derived gamma has negative imaginary part while flagged passive."""


class NonRealIndex(ScatteringError):
    """Dispersion predicate called with a complex-valued refraction index."""


class ParseError(ScatteringError):
    """Config text could not be parsed; carries line context."""

    def __init__(self, message, line_no=None, key=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no
        self.key = key


class SchemaError(ScatteringError):
    """Config contains unknown or invalid keys under the strict schema."""

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)
