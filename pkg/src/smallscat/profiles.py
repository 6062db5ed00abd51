"""Radial potential p(r, a) inside a particle ball and its scalar moments.

The potential is p(r, a) = gamma / (4 pi a^kappa) * (1 - t)^2 h(t), t = r/a,
vanishing to second order at r = a so the coupling vector
q = grad(k^2 + p) / (k^2 + p) is supported strictly inside the ball.

Scalar moments:
  ball integral   j = integral_B p dy                   (-> c1 * a^(3-kappa))
  log integral    I(a) = integral_0^1 t^3 {g p_hat}' / (nu + p_hat) dt,
                  nu = 4 pi k^2 a^kappa, p_hat = gamma (1-t)^2 h(t)
  div moment      Z = (4 pi / 3) a^3 I(a) divE

I(a) here is the dimensionless form whose integration-by-parts evaluation is
ln(nu) - 3 integral t^2 ln[nu + p_hat] dt; the radial-derivative form of the
same integral carries an extra 1/a, which is why Z uses a^3 and not a^4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional
import cmath
import math

import numpy as np

from .errors import MethodMismatch, SingularDenominator
from .quadrature import complex_quad

# relative step for the fallback finite-difference derivative of h
_FD_STEP = 1e-6


@dataclass(frozen=True)
class RadialProfile:
    """Radial potential of one particle: strength gamma, exponent kappa,
    shape h on [0, 1] (default h = 1), ball radius a."""

    gamma: complex
    kappa: float
    a: float
    h: Optional[Callable] = None
    h_prime: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", complex(self.gamma))
        if self.gamma.imag < 0:
            raise ValueError("Im(gamma) must be >= 0")
        if not 0 < self.kappa < 3:
            raise ValueError("kappa must lie in (0, 3)")
        if not self.a > 0:
            raise ValueError("radius a must be positive")

    @property
    def has_unit_shape(self) -> bool:
        return self.h is None

    def shape(self, t):
        return np.ones_like(np.asarray(t, dtype=float)) if self.h is None else self.h(t)

    def shape_deriv(self, t):
        if self.h is None:
            return np.zeros_like(np.asarray(t, dtype=float))
        if self.h_prime is not None:
            return self.h_prime(t)
        t = np.asarray(t, dtype=float)
        return (self.h(np.minimum(t + _FD_STEP, 1.0)) -
                self.h(np.maximum(t - _FD_STEP, 0.0))) / (
                    np.minimum(t + _FD_STEP, 1.0) - np.maximum(t - _FD_STEP, 0.0))

    @property
    def scale(self) -> complex:
        """gamma / (4 pi a^kappa), the value multiplying (1-t)^2 h(t)."""
        return self.gamma / (4.0 * np.pi * self.a ** self.kappa)

    def nu(self, k: float) -> float:
        """4 pi k^2 a^kappa, the small parameter of the log asymptotics."""
        return 4.0 * np.pi * k * k * self.a ** self.kappa

    def cache_key(self):
        return (self.gamma, self.kappa, self.a,
                None if self.h is None else id(self.h))


def p_eval(prof: RadialProfile, r):
    """Potential value at radial distance r; zero outside the ball."""
    r = np.asarray(r, dtype=float)
    t = np.minimum(r / prof.a, 1.0)
    inside = r <= prof.a
    vals = prof.scale * (1.0 - t) ** 2 * prof.shape(t)
    return np.where(inside, vals, 0.0 + 0.0j)


def p_deriv(prof: RadialProfile, r):
    """dp/dr at radial distance r; zero outside the ball."""
    r = np.asarray(r, dtype=float)
    t = np.minimum(r / prof.a, 1.0)
    inside = r <= prof.a
    core = -2.0 * (1.0 - t) * prof.shape(t) + (1.0 - t) ** 2 * prof.shape_deriv(t)
    return np.where(inside, prof.scale * core / prof.a, 0.0 + 0.0j)


def q_eval(prof: RadialProfile, y, center, k: float):
    """Coupling vector q = p'(r) / (k^2 + p(r)) * r_hat; zero outside the ball
    and, by convention, zero at the center where the direction is undefined."""
    y = np.asarray(y, dtype=float)
    center = np.asarray(center, dtype=float)
    diff = y - center
    r = np.linalg.norm(diff, axis=-1)
    safe_r = np.where(r > 0, r, 1.0)
    denom = k * k + p_eval(prof, r)
    if np.any(np.abs(denom) < 1e-14):
        raise SingularDenominator("k^2 + p vanishes inside the ball")
    coef = np.where(r > 0, p_deriv(prof, r) / denom / safe_r, 0.0)
    return coef[..., None] * diff


def _shape_moment(prof: RadialProfile) -> complex:
    """integral_0^1 (1-t)^2 h(t) t^2 dt (equals 1/30 for h = 1)."""
    if prof.has_unit_shape:
        return 1.0 / 30.0
    return complex_quad(lambda t: (1 - t) ** 2 * prof.shape(t) * t * t,
                        0.0, 1.0, rel_tol=1e-12)


def j_total(prof: RadialProfile, method: str = "closed_form") -> complex:
    """Ball integral of p: c1 * a^(3-kappa) with c1 = gamma/30 for h = 1."""
    if method == "closed_form":
        if not prof.has_unit_shape:
            raise MethodMismatch("closed form requires the default shape h = 1")
        return prof.gamma / 30.0 * prof.a ** (3.0 - prof.kappa)
    if method == "quadrature":
        integrand = lambda t: t * t * p_eval(prof, t * prof.a)
        return 4.0 * np.pi * prof.a ** 3 * complex_quad(integrand, 0.0, 1.0,
                                                        rel_tol=1e-12)
    raise ValueError(f"unknown method {method!r}")


def c1_coefficient(gamma: complex) -> complex:
    """c1 = gamma / 30 for the default shape h = 1."""
    return complex(gamma) / 30.0


def _check_denominator(prof: RadialProfile, k: float) -> None:
    t = np.linspace(0.0, 1.0, 2001)
    denom = k * k + p_eval(prof, t * prof.a)
    if np.min(np.abs(denom)) < 1e-14:
        raise SingularDenominator("k^2 + p vanishes on the radial grid")


def i_of_a(prof: RadialProfile, k: float, method: str = "direct") -> complex:
    """Dimensionless log moment I(a); ln(nu) + O(1) = kappa ln(a) + O(1).

    direct:   adaptive quadrature of t^3 {gamma (1-t)^2 h}' / (nu + gamma (1-t)^2 h)
    by_parts: ln(nu) - 3 integral t^2 ln[nu + gamma (1-t)^2 h] dt
    Both agree to the quadrature tolerance for shapes bounded away from the
    negative real axis (Im gamma >= 0).
    """
    if prof.gamma == 0:
        return 0.0 + 0.0j
    _check_denominator(prof, k)
    nu = prof.nu(k)
    gam = prof.gamma

    def p_hat(t):
        return gam * (1 - t) ** 2 * prof.shape(t)

    def p_hat_deriv(t):
        return gam * (-2 * (1 - t) * prof.shape(t)
                      + (1 - t) ** 2 * prof.shape_deriv(t))

    if method == "direct":
        # The integrand peaks near t = 1 with width ~ sqrt(nu/|gamma|).
        width = math.sqrt(nu / abs(gam)) if abs(gam) > 0 else 0.1
        pts = [1.0 - 10 * width, 1.0 - width, 1.0 - 0.1 * width]
        f = lambda t: t ** 3 * p_hat_deriv(t) / (nu + p_hat(t))
        return complex_quad(f, 0.0, 1.0, rel_tol=1e-10, points=pts, limit=500)
    if method == "by_parts":
        f = lambda t: t * t * np.log(nu + p_hat(t))
        integral = complex_quad(f, 0.0, 1.0, rel_tol=1e-10, limit=500)
        return cmath.log(nu + p_hat(1.0)) - 3.0 * integral
    raise ValueError(f"unknown method {method!r}")


def q_first_moment(prof: RadialProfile, k: float) -> complex:
    """Diagonal of integral q_i (y - c)_l dy: (4 pi / 3) a^3 I(a).

    This is the quantity the first-order expansions of the cross moments and
    the divergence moment Z share.
    """
    return (4.0 * np.pi / 3.0) * prof.a ** 3 * i_of_a(prof, k)


def z_estimate(prof: RadialProfile, div_e: complex, k: float,
               asymptotic: bool = False) -> complex:
    """Divergence moment Z = integral grad(p).E / (k^2 + p) dy.

    Pre-asymptotic form: (4 pi / 3) a^3 I(a) divE.  With asymptotic=True,
    the a -> 0 limit (4 pi kappa / 3) a^3 ln(a) divE; the two differ by a
    relative O(1/ln a) gap that closes only logarithmically.
    """
    if asymptotic:
        return (4.0 * np.pi * prof.kappa / 3.0) * div_e * prof.a ** 3 \
            * math.log(prof.a)
    return q_first_moment(prof, k) * div_e
