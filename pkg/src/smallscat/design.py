"""Inverse path: from a target refraction coefficient to particle strengths,
plus the negative-refraction predicate.

Inverting n^2 = 1 + C / k^2 with C = (gamma / 30) N gives

  gamma(x) = 30 k^2 (n^2(x) - 1) / N(x).

Negative refraction (group velocity opposite the phase velocity) holds for a
real-valued index exactly when n + omega * dn/domega < 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonRealIndex, PassivityViolation, ZeroDensity
from .fields import as_field

_N2_TOL = 1e-12


@dataclass(frozen=True)
class DesignSpec:
    """Target n^2(x) with the density field N(x) and placement exponent."""

    n2_target: object
    n_field: object
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "n2_target", as_field(self.n2_target))
        object.__setattr__(self, "n_field", as_field(self.n_field))
        if not 0 < self.kappa < 3:
            raise ValueError("kappa must lie in (0, 3)")


def design_from_target(spec: DesignSpec, k: float, passive: bool = False):
    """Return the gamma field realizing the target:
    C = k^2 (n^2 - 1), c1 = C / N, gamma = 30 c1.

    The returned callable raises ZeroDensity where the target differs from 1
    but N = 0, and PassivityViolation if passive=True and Im(gamma) < 0.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    n2 = spec.n2_target
    dens = spec.n_field

    def gamma(pts):
        pts = np.asarray(pts, dtype=float)
        c = k * k * (np.asarray(n2(pts), dtype=complex) - 1.0)
        n_vals = np.asarray(dens(pts), dtype=complex)
        bad = (np.abs(c) > _N2_TOL * k * k) & (np.abs(n_vals) == 0.0)
        if np.any(bad):
            raise ZeroDensity(
                "target n^2 differs from 1 where the density vanishes")
        safe = np.where(np.abs(n_vals) == 0.0, 1.0, n_vals)
        out = 30.0 * c / safe
        out = np.where(np.abs(n_vals) == 0.0, 0.0, out)
        if passive and np.any(out.imag < -1e-12):
            raise PassivityViolation(
                "derived gamma has negative imaginary part")
        return out

    return gamma


@dataclass(frozen=True)
class DispersionCheck:
    value: float
    negative: bool


def negative_refraction_check(n_of_omega, x, omega: float,
                              delta: float = 1e-5) -> DispersionCheck:
    """Evaluate n + omega dn/domega by central difference at relative step
    delta; negative refraction holds when the value is strictly negative.

    Values within the finite-difference noise band O(delta^2) of zero are
    classified as the boundary case (not negative).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if not 0 < delta < 0.1:
        raise ValueError("delta must lie in (0, 0.1)")

    def n_at(w: float) -> float:
        val = complex(n_of_omega(x, w))
        if abs(val.imag) > 1e-10:
            raise NonRealIndex(f"Im n = {val.imag:.3g} exceeds 1e-10")
        return val.real

    n0 = n_at(omega)
    n_plus = n_at(omega * (1.0 + delta))
    n_minus = n_at(omega * (1.0 - delta))
    value = n0 + (n_plus - n_minus) / (2.0 * delta)
    band = 100.0 * delta * delta * max(abs(n0), 1.0)
    return DispersionCheck(value=float(value), negative=value < -band)
