"""Shared domain types: background medium, incident plane wave, particles.

Complex 3-vectors are plain numpy arrays of shape (3,) and dtype complex128;
field evaluators accept and return arrays of shape (..., 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import OverlapError
from .profiles import RadialProfile

Vec3 = np.ndarray  # real (3,)
ComplexVec3 = np.ndarray  # complex (3,)

_REL_TOL = 1e-12


def _as_vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def _as_cvec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=complex)
    if v.shape != (3,):
        raise ValueError(f"expected a complex 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v.view(float))):
        raise ValueError("complex 3-vector has non-finite components")
    return v


@dataclass(frozen=True)
class Background:
    """Homogeneous exterior medium with k = omega*sqrt(epsilon*mu)."""

    k: float
    omega: float
    mu: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        for name in ("k", "omega", "mu", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        k_expect = self.omega * math.sqrt(self.epsilon * self.mu)
        if abs(self.k - k_expect) > _REL_TOL * abs(k_expect):
            raise ValueError(
                f"inconsistent parameters: k={self.k} but omega*sqrt(eps*mu)={k_expect}"
            )

    @classmethod
    def from_k(cls, k: float, epsilon: float = 1.0, mu: float = 1.0) -> "Background":
        return cls(k=k, omega=k / math.sqrt(epsilon * mu), mu=mu, epsilon=epsilon)


@dataclass(frozen=True)
class PlaneWave:
    """Incident field amplitude * exp(i k alpha.x) with amplitude.alpha = 0."""

    alpha: np.ndarray
    amplitude: np.ndarray
    k: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_vec3(self.alpha))
        object.__setattr__(self, "amplitude", _as_cvec3(self.amplitude))
        if self.k <= 0:
            raise ValueError("k must be positive")
        if abs(np.linalg.norm(self.alpha) - 1.0) > _REL_TOL:
            raise ValueError("alpha must be a unit vector")
        amp_norm = np.linalg.norm(self.amplitude)
        if abs(self.amplitude @ self.alpha) > _REL_TOL * max(amp_norm, 1e-300):
            raise ValueError("amplitude must be transverse to alpha")


@dataclass(frozen=True)
class Particle:
    """Ball B(center, radius) carrying a radial potential profile."""

    center: np.ndarray
    radius: float
    profile: RadialProfile

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if abs(self.radius - self.profile.a) > _REL_TOL * self.radius:
            raise ValueError("particle radius disagrees with profile radius")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo, hi]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_vec3(self.lo))
        object.__setattr__(self, "hi", _as_vec3(self.hi))
        if not np.all(self.hi > self.lo):
            raise ValueError("box must have positive extent")

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=1)


@dataclass(frozen=True)
class ParticleCloud:
    """Ordered collection of non-overlapping particles inside a bounding box."""

    particles: tuple
    domain: Box

    def __post_init__(self):
        object.__setattr__(self, "particles", tuple(self.particles))
        centers = self.centers
        if len(self.particles) and not np.all(self.domain.contains(centers)):
            raise ValueError("all particle centers must lie inside the domain box")
        _check_no_overlap(centers, self.radii)

    def __len__(self):
        return len(self.particles)

    @property
    def centers(self) -> np.ndarray:
        if not self.particles:
            return np.zeros((0, 3))
        return np.array([p.center for p in self.particles])

    @property
    def radii(self) -> np.ndarray:
        return np.array([p.radius for p in self.particles])

    def min_center_distance(self) -> float:
        """min_{j != m} |x_j - x_m|; inf for fewer than two particles."""
        centers = self.centers
        if len(centers) < 2:
            return math.inf
        tree = cKDTree(centers)
        dist, _ = tree.query(centers, k=2)
        return float(dist[:, 1].min())


def _check_no_overlap(centers: np.ndarray, radii: np.ndarray) -> None:
    if len(centers) < 2:
        return
    r_max = float(radii.max())
    tree = cKDTree(centers)
    pairs = tree.query_pairs(r=2.0 * r_max, output_type="ndarray")
    for i, j in pairs:
        d = np.linalg.norm(centers[i] - centers[j])
        if d <= radii[i] + radii[j]:
            raise OverlapError(
                f"particles {i} and {j} overlap: distance {d:.6g} <= "
                f"{radii[i] + radii[j]:.6g}"
            )


def plane_wave_eval(pw: PlaneWave, x) -> np.ndarray:
    """E_0(x) = amplitude * exp(i k alpha.x); vectorized over (..., 3) points."""
    pts = np.asarray(x, dtype=float)
    phase = np.exp(1j * pw.k * (pts @ pw.alpha))
    return np.multiply.outer(phase, pw.amplitude)


def plane_wave_jacobian(pw: PlaneWave, x) -> np.ndarray:
    """d E_i / d x_l at x, shape (..., 3, 3); row i, column l."""
    pts = np.asarray(x, dtype=float)
    phase = np.exp(1j * pw.k * (pts @ pw.alpha))
    jac = 1j * pw.k * np.multiply.outer(pw.amplitude, pw.alpha)
    return np.multiply.outer(phase, jac)


def greens(x, y, k: float):
    """Outgoing Helmholtz kernel exp(ik|x-y|) / (4 pi |x-y|), broadcasting."""
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(diff, axis=-1)
    return np.exp(1j * k * r) / (4.0 * np.pi * r)


def grad_greens(x, y, k: float):
    """Gradient of greens in its first argument: g * (ik - 1/r) * (x-y)/r."""
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(diff, axis=-1)
    g = np.exp(1j * k * r) / (4.0 * np.pi * r)
    factor = g * (1j * k - 1.0 / r) / r
    return factor[..., None] * diff


@dataclass(frozen=True)
class DiagnosticsReport:
    """Smallness diagnostics: ka, a/d_min and the O(a/d + ka) budget."""

    ka: float
    a_over_dmin: float
    ka_ok: bool
    spacing_ok: bool
    error_budget: float
    n_particles: int
    warnings: tuple = field(default=())

    @property
    def passed(self) -> bool:
        return self.ka_ok and self.spacing_ok


# Asymptotic-regime warn thresholds for ka and a/d_min.  The theory only
# requires both ratios to be << 1; 0.1 keeps the combined budget below ~0.2.
SMALLNESS_THRESHOLD = 0.1


def validate_scene(cloud: ParticleCloud, bg: Background) -> DiagnosticsReport:
    """Check the smallness assumptions; raises OverlapError on overlap."""
    _check_no_overlap(cloud.centers, cloud.radii)
    if len(cloud) == 0:
        return DiagnosticsReport(0.0, 0.0, True, True, 0.0, 0)
    a = float(cloud.radii.max())
    ka = bg.k * a
    d_min = cloud.min_center_distance()
    a_over_d = 0.0 if math.isinf(d_min) else a / d_min
    warnings = []
    if ka > SMALLNESS_THRESHOLD:
        warnings.append(f"ka = {ka:.4g} exceeds {SMALLNESS_THRESHOLD}")
    if a_over_d > SMALLNESS_THRESHOLD:
        warnings.append(f"a/d_min = {a_over_d:.4g} exceeds {SMALLNESS_THRESHOLD}")
    return DiagnosticsReport(
        ka=ka,
        a_over_dmin=a_over_d,
        ka_ok=ka <= SMALLNESS_THRESHOLD,
        spacing_ok=a_over_d <= SMALLNESS_THRESHOLD,
        error_budget=ka + a_over_d,
        n_particles=len(cloud),
        warnings=tuple(warnings),
    )
