"""Ball moments feeding the single- and many-body linear systems.

For a ball D_j with radial potential p and coupling vector q, and a target
point x_m, the blocks are

  a_jm = integral_{D_j} p(x) g(x, x_m) dx           (scalar)
  B_jm = integral_{D_j} p(x) grad_x g(x, x_m) dx    (vector)
  C_jm = integral_{D_j} q(x) g(x, x_m) dx           (vector)
  d_jm = integral_{D_j} q(x) . grad_x g(x, x_m) dx  (scalar)

On the diagonal (x_m = center) the kernel is weakly singular but the angular
integrals collapse: B_jj = C_jj = 0 by radial symmetry, and a_jj, d_jj reduce
to 1-D radial integrals.  Off the diagonal the integrands are smooth; the
midpoint mode replaces them by the leading term of the small-ball expansion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Particle, PlaneWave, greens, grad_greens, plane_wave_eval, \
    plane_wave_jacobian
from .errors import TooClose
from .profiles import RadialProfile, _check_denominator, j_total, p_deriv, \
    p_eval, q_eval, q_first_moment
from .quadrature import complex_quad

DEFAULT_ORDER = 12
# Quadrature moments are exact sums; switch to midpoint above this size to
# keep O(M^2) assembly affordable.
QUADRATURE_MAX_PARTICLES = 200


@dataclass(frozen=True)
class MomentEntry:
    """One (j, m) block: scalars a, d and vectors B, C."""

    a: complex
    B: np.ndarray
    C: np.ndarray
    d: complex


@dataclass(frozen=True)
class SourceMoments:
    """Right-hand-side moments V0 = integral p E_0 and nu0 = integral q . E_0."""

    V0: np.ndarray
    nu0: complex


def ball_nodes(center, a: float, order: int = DEFAULT_ORDER):
    """Product rule on the ball: Gauss-Legendre in r and cos(theta),
    trapezoid in phi (order, order, 2*order nodes).  Returns (points, weights)."""
    if order < 2:
        raise ValueError("order must be >= 2")
    center = np.asarray(center, dtype=float)
    xr, wr = np.polynomial.legendre.leggauss(order)
    r = 0.5 * a * (xr + 1.0)
    wr = 0.5 * a * wr * r * r
    mu, wmu = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = np.full(n_phi, 2.0 * np.pi / n_phi)

    sin_th = np.sqrt(1.0 - mu ** 2)
    dirs = np.stack([
        np.outer(sin_th, np.cos(phi)),
        np.outer(sin_th, np.sin(phi)),
        np.broadcast_to(mu[:, None], (order, n_phi)),
    ], axis=-1)  # (order, n_phi, 3)

    pts = center + r[:, None, None, None] * dirs[None, :, :, :]
    w = wr[:, None, None] * wmu[None, :, None] * wphi[None, None, :]
    return pts.reshape(-1, 3), w.reshape(-1)


def ball_quadrature(f, center, a: float, order: int = DEFAULT_ORDER):
    """Integrate f over the ball B(center, a); f maps (n, 3) to (n,) or (n, 3)."""
    pts, w = ball_nodes(center, a, order)
    vals = np.asarray(f(pts))
    if vals.ndim == 1:
        return complex(w @ vals)
    return w @ vals


def self_moments(part: Particle, k: float) -> MomentEntry:
    """Diagonal entry via exact radial reduction of the singular kernel:
    a_jj = integral_0^a p(r) r e^{ikr} dr,
    d_jj = integral_0^a p'(r)/(k^2+p(r)) e^{ikr} (ikr - 1) dr,
    B_jj = C_jj = 0 by angular symmetry."""
    prof = part.profile
    zero = np.zeros(3, dtype=complex)
    if prof.gamma == 0:
        return MomentEntry(0.0 + 0.0j, zero, zero, 0.0 + 0.0j)

    a = part.radius

    def a_integrand(r):
        return p_eval(prof, r) * r * np.exp(1j * k * r)

    _check_denominator(prof, k)

    def d_integrand(r):
        return (p_deriv(prof, r) / (k * k + p_eval(prof, r))
                * np.exp(1j * k * r) * (1j * k * r - 1.0))

    a_jj = complex_quad(a_integrand, 0.0, a, rel_tol=1e-10)
    d_jj = complex_quad(d_integrand, 0.0, a, rel_tol=1e-10)
    return MomentEntry(a_jj, zero.copy(), zero.copy(), d_jj)


def cross_moments(part_j: Particle, x_m, k: float,
                  mode: str = "quadrature", order: int = DEFAULT_ORDER) -> MomentEntry:
    """Off-diagonal entry for target x_m outside the ball around part_j.

    quadrature: full spherical product rule (smooth integrands).
    midpoint: leading small-ball expansion,
      a ~ g(x_j, x_m) j,  B ~ grad g(x_j, x_m) j,
      C ~ mu1 grad g,     d ~ -mu1 k^2 g     (mu1 = (4 pi/3) a^3 I(a)),
    the d formula using Laplacian(g) = -k^2 g away from the singularity.
    """
    x_m = np.asarray(x_m, dtype=float)
    x_j = part_j.center
    dist = float(np.linalg.norm(x_j - x_m))
    if dist <= 2.0 * part_j.radius:
        raise TooClose(
            f"target at distance {dist:.6g} <= 2a = {2 * part_j.radius:.6g}")
    prof = part_j.profile
    zero = np.zeros(3, dtype=complex)
    if prof.gamma == 0:
        return MomentEntry(0.0 + 0.0j, zero, zero, 0.0 + 0.0j)

    if mode == "midpoint":
        g = greens(x_j, x_m, k)
        dg = grad_greens(x_j, x_m, k)
        j_j = j_total(prof, "closed_form" if prof.has_unit_shape else "quadrature")
        mu1 = q_first_moment(prof, k)
        return MomentEntry(a=j_j * g, B=j_j * dg, C=mu1 * dg,
                           d=-mu1 * k * k * g)
    if mode == "quadrature":
        pts, w = ball_nodes(x_j, part_j.radius, order)
        r = np.linalg.norm(pts - x_j, axis=-1)
        p_vals = p_eval(prof, r)
        q_vals = q_eval(prof, pts, x_j, k)
        g = greens(pts, x_m, k)
        dg = grad_greens(pts, x_m, k)
        return MomentEntry(
            a=complex(w @ (p_vals * g)),
            B=(w * p_vals) @ dg,
            C=(w * g) @ q_vals,
            d=complex(w @ np.sum(q_vals * dg, axis=-1)),
        )
    raise ValueError(f"unknown mode {mode!r}")


def source_moments(part_j: Particle, pw: PlaneWave,
                   mode: str = "quadrature", order: int = DEFAULT_ORDER) -> SourceMoments:
    """V0_j = integral p E_0 and nu0_j = integral q . E_0 over the ball.

    Midpoint uses V0 ~ E_0(x_j) j and the Jacobian contraction
    nu0 ~ mu1 * trace(dE_0) (zero for a transverse plane wave)."""
    prof = part_j.profile
    if prof.gamma == 0:
        return SourceMoments(np.zeros(3, dtype=complex), 0.0 + 0.0j)
    if mode == "midpoint":
        j_j = j_total(prof, "closed_form" if prof.has_unit_shape else "quadrature")
        mu1 = q_first_moment(prof, pw.k)
        jac = plane_wave_jacobian(pw, part_j.center)
        return SourceMoments(V0=j_j * plane_wave_eval(pw, part_j.center),
                             nu0=mu1 * np.trace(jac))
    if mode == "quadrature":
        pts, w = ball_nodes(part_j.center, part_j.radius, order)
        r = np.linalg.norm(pts - part_j.center, axis=-1)
        p_vals = p_eval(prof, r)
        q_vals = q_eval(prof, pts, part_j.center, pw.k)
        e0 = plane_wave_eval(pw, pts)
        return SourceMoments(
            V0=(w * p_vals) @ e0,
            nu0=complex(w @ np.sum(q_vals * e0, axis=-1)),
        )
    raise ValueError(f"unknown mode {mode!r}")


_SELF_CACHE: dict = {}
_SCALAR_CACHE: dict = {}


def cached_self_moments(part: Particle, k: float) -> MomentEntry:
    key = part.profile.cache_key() + (k,)
    hit = _SELF_CACHE.get(key)
    if hit is None:
        hit = _SELF_CACHE[key] = self_moments(part, k)
    return hit


def cached_scalars(prof: RadialProfile, k: float):
    """(j_total, q_first_moment) cached per profile parameters."""
    key = prof.cache_key() + (k,)
    hit = _SCALAR_CACHE.get(key)
    if hit is None:
        j_j = j_total(prof, "closed_form" if prof.has_unit_shape else "quadrature")
        hit = _SCALAR_CACHE[key] = (j_j, q_first_moment(prof, k))
    return hit
