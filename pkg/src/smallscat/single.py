"""Closed-form scattering by one small body.

With self moments (a, A, B, b) and source moments (V0, nu0), the two moment
unknowns satisfy

  V  = V0  + a V + A nu
  nu = nu0 + B.V + b nu

whose closed form is

  nu = [(1 - a) nu0 + B.V0] / [(1 - a)(1 - b) - B.A]
  V  = (V0 + A nu) / (1 - a).

For a radial profile A = B = 0, so nu = nu0/(1-b) and V = V0/(1-a).
The exterior field is E(x) = E_0(x) + g(x, x_m) V + grad g(x, x_m) nu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Background, Particle, PlaneWave, greens, grad_greens, \
    plane_wave_eval
from .errors import DegenerateDenominator, InsideNearZone, SmallnessViolation
from .moments import MomentEntry, SourceMoments, cached_self_moments, \
    source_moments


@dataclass(frozen=True)
class SingleSolution:
    """Moment unknowns (V, nu) of one particle plus the data that produced them."""

    V: np.ndarray
    nu: complex
    particle: Particle
    moments: MomentEntry
    source: SourceMoments
    wave: PlaneWave


def _check_wave(pw: PlaneWave, bg: Background) -> None:
    if abs(pw.k - bg.k) > 1e-12 * bg.k:
        raise ValueError("plane wave and background disagree on k")


def solve_single(part: Particle, pw: PlaneWave, bg: Background,
                 mode: str = "quadrature") -> SingleSolution:
    """Solve the one-body moment system in closed form."""
    _check_wave(pw, bg)
    diag = cached_self_moments(part, bg.k)
    src = source_moments(part, pw, mode=mode)
    # single-body notation: a = a_jj, A = B_jj, B = C_jj, b = d_jj
    a_m, big_a, big_b, b_m = diag.a, diag.B, diag.C, diag.d
    if abs(a_m) >= 1.0:
        raise SmallnessViolation(f"|a_m| = {abs(a_m):.4g} >= 1")
    denom = (1.0 - a_m) * (1.0 - b_m) - big_b @ big_a
    if abs(denom) < 1e-12:
        raise DegenerateDenominator(f"|denominator| = {abs(denom):.4g} < 1e-12")
    nu = ((1.0 - a_m) * src.nu0 + big_b @ src.V0) / denom
    v = (src.V0 + big_a * nu) / (1.0 - a_m)
    return SingleSolution(V=v, nu=complex(nu), particle=part, moments=diag,
                          source=src, wave=pw)


def eval_field_single(sol: SingleSolution, x) -> np.ndarray:
    """E(x) for |x - x_m| > 2a; vectorized over (..., 3) points."""
    pts = np.asarray(x, dtype=float)
    center = sol.particle.center
    k = sol.wave.k
    dist = np.linalg.norm(pts - center, axis=-1)
    if np.any(dist <= 2.0 * sol.particle.radius):
        raise InsideNearZone(
            f"evaluation point within 2a = {2 * sol.particle.radius:.6g} of center")
    g = greens(pts, center, k)
    dg = grad_greens(pts, center, k)
    return plane_wave_eval(sol.wave, pts) + g[..., None] * sol.V + dg * sol.nu


def far_field(sol: SingleSolution, beta) -> np.ndarray:
    """Scattering amplitude F(beta) with E ~ E_0 + e^{ik|x|}/|x| F(beta).

    F = e^{-ik beta.x_m} (V + ik beta nu) / (4 pi); the translation phase
    makes the amplitude consistent with eval_field_single for particles away
    from the origin (it is 1 for a particle at the origin).
    """
    beta = np.asarray(beta, dtype=float)
    if abs(np.linalg.norm(beta) - 1.0) > 1e-12:
        raise ValueError("beta must be a unit vector")
    k = sol.wave.k
    phase = np.exp(-1j * k * (beta @ sol.particle.center))
    return phase * (sol.V + 1j * k * sol.nu * beta) / (4.0 * np.pi)
