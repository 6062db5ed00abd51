"""1-D adaptive quadrature for complex integrands (QUADPACK wrapper)."""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad


def complex_quad(f, a: float, b: float, rel_tol: float = 1e-10,
                 points=None, limit: int = 200) -> complex:
    """Integrate a complex-valued f over [a, b] by Gauss-Kronrod adaptivity.

    Real and imaginary parts are integrated separately; `points` marks
    interior locations of sharp features (peaks, kinks).
    """
    kwargs = dict(epsabs=1e-300, epsrel=rel_tol, limit=limit)
    if points is not None:
        pts = [p for p in points if a < p < b]
        if pts:
            kwargs["points"] = pts
    re, _ = quad(lambda t: f(t).real, a, b, **kwargs)
    im, _ = quad(lambda t: f(t).imag, a, b, **kwargs)
    return complex(re, im)
