"""The small-radius limit: particle placement by a density law, the limiting
integral equation for the effective field, and its PDE diagnostics.

Particles are placed so that a subdomain of volume |B| holds about
|B| N(x) / phi(a) particles, phi(a) = a^(3 - kappa).  As a -> 0 the
many-body field approaches the effective field solving

  E_e(x) = E_0(x) + integral_D g(x, y) C(y) E_e(y) dy,   C = c1 N,

which is discretized by midpoint collocation with an equivalent-volume-sphere
self weight.  The refraction coefficient of the limit medium is
n^2 = 1 + C / k^2.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import time

import numpy as np
import scipy.linalg

from .core import Background, Box, Particle, ParticleCloud, PlaneWave, \
    greens, plane_wave_eval
from .errors import DensityTooHigh, ResolutionError, SingularSystem
from .fields import as_field
from .many import assemble, contraction_norm, eval_field, solve_direct, \
    solve_iterative
from .profiles import RadialProfile

# aimed number of particles per coarse density cell; the coarse mesh refines
# as a shrinks so the density is sampled ever more locally
_TARGET_PER_CELL = 512.0


@dataclass(frozen=True)
class DensitySpec:
    """Number density N(x) >= 0 on a box domain with placement exponent kappa."""

    n_field: object
    kappa: float
    domain: Box

    def __post_init__(self):
        object.__setattr__(self, "n_field", as_field(self.n_field))
        if not 0 < self.kappa < 3:
            raise ValueError("kappa must lie in (0, 3)")

    def phi(self, a: float) -> float:
        """Placement scale a^(3 - kappa): one particle per phi/N of volume."""
        return float(a) ** (3.0 - self.kappa)


def _best_counts(target: float) -> tuple:
    """Integer lattice dimensions whose product best matches target."""
    if target < 0.5:
        return (0, 0, 0)
    base = target ** (1.0 / 3.0)
    lo, hi = math.floor(base), math.ceil(base)
    best, best_err = None, math.inf
    for n1 in (lo, hi):
        for n2 in (lo, hi):
            for n3 in (lo, hi):
                if min(n1, n2, n3) < 1:
                    continue
                err = abs(n1 * n2 * n3 - target)
                if err < best_err:
                    best, best_err = (n1, n2, n3), err
    return best


def place_particles(spec: DensitySpec, a: float, gamma_field, seed: int = 0,
                    jitter: float = 0.0) -> ParticleCloud:
    """Deterministic stratified placement matching the density law.

    The domain is split into a coarse mesh (refining as a -> 0); each coarse
    cell receives a centered sub-lattice whose size tracks the running target
    N(cell) * vol / phi(a) with carried rounding error, so total counts match
    the law to within one lattice increment.
    """
    if not 0.0 <= jitter <= 0.1:
        raise ValueError("jitter must lie in [0, 0.1]")
    gamma_field = as_field(gamma_field)
    box = spec.domain
    phi = spec.phi(a)

    probe_axes = [np.linspace(lo + s / 16, hi - s / 16, 8)
                  for lo, hi, s in zip(box.lo, box.hi, box.sides)]
    probe = np.stack(np.meshgrid(*probe_axes, indexing="ij"), axis=-1).reshape(-1, 3)
    n_samples = np.real(spec.n_field(probe))
    if np.any(n_samples < -1e-12):
        raise ValueError("density field must be nonnegative")
    n_mean = float(np.maximum(n_samples, 0.0).mean())
    total_target = n_mean * box.volume / phi
    if total_target < 0.5:
        if n_samples.max() <= 0.0:
            return ParticleCloud((), box)
        raise ValueError(
            f"expected particle count {total_target:.3g} < 1; decrease a")

    coarse_size = (box.volume * _TARGET_PER_CELL / total_target) ** (1.0 / 3.0)
    m_axes = [max(1, round(s / coarse_size)) for s in box.sides]
    cell_sides = box.sides / np.array(m_axes, dtype=float)
    cell_vol = float(np.prod(cell_sides))

    rng = np.random.default_rng(seed) if jitter > 0 else None
    points = []
    carry = 0.0
    min_spacing = math.inf
    for ix in range(m_axes[0]):
        for iy in range(m_axes[1]):
            for iz in range(m_axes[2]):
                lo = box.lo + cell_sides * np.array([ix, iy, iz], dtype=float)
                center = lo + 0.5 * cell_sides
                dens = max(float(np.real(spec.n_field(center[None, :])[0])), 0.0)
                target = dens * cell_vol / phi + carry
                counts = _best_counts(target)
                n_placed = counts[0] * counts[1] * counts[2]
                carry = target - n_placed
                if n_placed == 0:
                    continue
                sub = cell_sides / np.array(counts, dtype=float)
                min_spacing = min(min_spacing, float(sub.min()))
                axes = [lo[d] + sub[d] * (np.arange(counts[d]) + 0.5)
                        for d in range(3)]
                pts = np.stack(np.meshgrid(*axes, indexing="ij"),
                               axis=-1).reshape(-1, 3)
                if rng is not None:
                    pts = pts + rng.uniform(-jitter, jitter,
                                            size=pts.shape) * sub
                points.append(pts)

    if not points:
        return ParticleCloud((), box)
    centers = np.concatenate(points, axis=0)
    if min_spacing <= 2.0 * a:
        raise DensityTooHigh(
            f"implied spacing {min_spacing:.4g} <= 2a = {2 * a:.4g}")

    gammas = np.asarray(gamma_field(centers), dtype=complex)
    prof_cache: dict = {}
    particles = []
    for x_m, gam in zip(centers, gammas):
        prof = prof_cache.get(gam)
        if prof is None:
            prof = prof_cache[gam] = RadialProfile(gamma=gam, kappa=spec.kappa,
                                                   a=a)
        particles.append(Particle(center=x_m, radius=a, profile=prof))
    return ParticleCloud(tuple(particles), box)


@dataclass(frozen=True)
class RiemannCheck:
    lhs: complex
    rhs: complex
    gap: float


def riemann_sum_check(f, cloud: ParticleCloud, spec: DensitySpec,
                      a: float) -> RiemannCheck:
    """Compare sum_m f(x_m) phi(a) against integral_D f N dx (tensor
    Gauss-Legendre of order 12 per axis)."""
    f = as_field(f)
    phi = spec.phi(a)
    lhs = complex(phi * np.sum(f(cloud.centers))) if len(cloud) else 0.0 + 0.0j

    order = 12
    x, w = np.polynomial.legendre.leggauss(order)
    box = spec.domain
    axes, weights = [], []
    for lo, hi in zip(box.lo, box.hi):
        axes.append(0.5 * (hi - lo) * (x + 1.0) + lo)
        weights.append(0.5 * (hi - lo) * w)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    wts = (weights[0][:, None, None] * weights[1][None, :, None]
           * weights[2][None, None, :]).reshape(-1)
    rhs = complex(np.sum(wts * f(pts) * spec.n_field(pts)))
    denom = abs(rhs) if abs(rhs) > 0 else 1.0
    return RiemannCheck(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs) / denom)


def coefficient_C(gamma_field, n_field, shape_integral: float = 1.0 / 30.0):
    """Limit coefficient C(x) = c1(x) N(x), c1 = gamma * shape_integral
    (the shape integral is 1/30 for the default profile shape)."""
    gamma_field = as_field(gamma_field)
    n_field = as_field(n_field)

    def c(pts):
        return shape_integral * gamma_field(pts) * n_field(pts)

    return c


def refraction_index(c_field, k: float):
    """Pointwise n^2 = 1 + C / k^2 as a field (callable in, callable out)."""
    if callable(c_field):
        inner = c_field
        return lambda pts: 1.0 + np.asarray(inner(pts)) / (k * k)
    return 1.0 + np.asarray(c_field) / (k * k)


@dataclass(frozen=True)
class EffectiveFieldGrid:
    """Cell-centered uniform grid holding the solved effective field."""

    box: Box
    shape: tuple
    spacing: np.ndarray  # (3,)
    nodes: np.ndarray  # (N, 3)
    E: np.ndarray  # (N, 3) complex
    C: np.ndarray  # (N,) complex
    k: float

    def array_E(self) -> np.ndarray:
        return self.E.reshape(self.shape + (3,))

    def array_C(self) -> np.ndarray:
        return self.C.reshape(self.shape)


def _grid_nodes(box: Box, shape) -> tuple:
    spacing = box.sides / np.asarray(shape, dtype=float)
    axes = [box.lo[d] + spacing[d] * (np.arange(shape[d]) + 0.5)
            for d in range(3)]
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    return nodes, spacing


def self_cell_weight(h_vol: float, k: float) -> complex:
    """Closed-form integral of g over the equivalent-volume sphere:
    integral_0^R r e^{ikr} dr with R = (3 h_vol / 4 pi)^(1/3)."""
    radius = (3.0 * h_vol / (4.0 * np.pi)) ** (1.0 / 3.0)
    return (-1j * radius * np.exp(1j * k * radius) / k
            + (np.exp(1j * k * radius) - 1.0) / (k * k))


def solve_effective(box: Box, shape, c_field, pw: PlaneWave, bg: Background,
                    method: str = "direct", tol: float = 1e-10,
                    max_iter: int = 2000) -> EffectiveFieldGrid:
    """Collocation solve of the limiting integral equation on a uniform grid.

    The kernel is scalar, so the three Cartesian components share one LU
    factorization.  Requires the grid to resolve the wavelength:
    max spacing <= (2 pi / k) / 10.
    """
    if isinstance(shape, int):
        shape = (shape, shape, shape)
    shape = tuple(int(s) for s in shape)
    c_field = as_field(c_field)
    nodes, spacing = _grid_nodes(box, shape)
    if spacing.max() > (2.0 * np.pi / bg.k) / 10.0:
        raise ResolutionError(
            f"grid spacing {spacing.max():.4g} exceeds wavelength/10 "
            f"= {(2 * np.pi / bg.k) / 10:.4g}")
    n_nodes = nodes.shape[0]
    cell_vol = float(np.prod(spacing))
    c_vals = np.asarray(c_field(nodes), dtype=complex)
    e0 = plane_wave_eval(pw, nodes)

    diff = nodes[:, None, :] - nodes[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    np.fill_diagonal(r, 1.0)
    w = np.exp(1j * bg.k * r) / (4.0 * np.pi * r) * cell_vol
    np.fill_diagonal(w, self_cell_weight(cell_vol, bg.k))
    wc = w * c_vals[None, :]

    if method == "direct":
        a_mat = np.eye(n_nodes, dtype=complex) - wc
        lu, piv = scipy.linalg.lu_factor(a_mat)
        pivots = np.abs(np.diag(lu))
        if pivots.min() < 1e-14 * np.linalg.norm(a_mat, np.inf):
            raise SingularSystem("effective-field collocation matrix is singular")
        e = scipy.linalg.lu_solve((lu, piv), e0)
    elif method == "iterative":
        e = e0.copy()
        for _ in range(max_iter):
            e_next = e0 + wc @ e
            delta = np.linalg.norm(e_next - e)
            e = e_next
            if delta <= tol * max(np.linalg.norm(e), 1e-300):
                break
        else:
            raise SingularSystem(
                f"fixed-point iteration on the grid did not converge in "
                f"{max_iter} iterations")
    else:
        raise ValueError(f"unknown method {method!r}")

    return EffectiveFieldGrid(box=box, shape=shape, spacing=spacing,
                              nodes=nodes, E=e, C=c_vals, k=bg.k)


def eval_effective_at(grid: EffectiveFieldGrid, pw: PlaneWave, x) -> np.ndarray:
    """Evaluate the solved integral representation at arbitrary points
    (intended for points at least a cell away from the grid nodes)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    cell_vol = float(np.prod(grid.spacing))
    g = greens(pts[:, None, :], grid.nodes[None, :, :], grid.k) * cell_vol
    scat = (g * grid.C[None, :]) @ grid.E
    out = plane_wave_eval(pw, pts) + scat
    return out if np.asarray(x).ndim > 1 else out[0]


def helmholtz_residual(grid: EffectiveFieldGrid, k: float) -> float:
    """max interior |7-point Laplacian(E) + (k^2 + C) E| / max |E|."""
    e = grid.array_E()
    c = grid.array_C()
    if min(grid.shape) < 3:
        raise ValueError("need at least 3 nodes per axis for the stencil")
    hx, hy, hz = grid.spacing
    lap = ((e[2:, 1:-1, 1:-1] - 2 * e[1:-1, 1:-1, 1:-1] + e[:-2, 1:-1, 1:-1]) / hx ** 2
           + (e[1:-1, 2:, 1:-1] - 2 * e[1:-1, 1:-1, 1:-1] + e[1:-1, :-2, 1:-1]) / hy ** 2
           + (e[1:-1, 1:-1, 2:] - 2 * e[1:-1, 1:-1, 1:-1] + e[1:-1, 1:-1, :-2]) / hz ** 2)
    interior = lap + ((k * k + c[1:-1, 1:-1, 1:-1])[..., None]
                      * e[1:-1, 1:-1, 1:-1])
    return float(np.abs(interior).max() / np.abs(e).max())


def divergence_field(grid: EffectiveFieldGrid) -> np.ndarray:
    """Central-difference divergence of E on interior nodes (diagnostic)."""
    e = grid.array_E()
    if min(grid.shape) < 3:
        raise ValueError("need at least 3 nodes per axis for the stencil")
    hx, hy, hz = grid.spacing
    div = ((e[2:, 1:-1, 1:-1, 0] - e[:-2, 1:-1, 1:-1, 0]) / (2 * hx)
           + (e[1:-1, 2:, 1:-1, 1] - e[1:-1, :-2, 1:-1, 1]) / (2 * hy)
           + (e[1:-1, 1:-1, 2:, 2] - e[1:-1, 1:-1, :-2, 2]) / (2 * hz))
    return div


def shell_probes(box: Box, count: int = 64, radius_factor: float = 1.5) -> np.ndarray:
    """Deterministic Fibonacci-sphere probe set on a shell around the box."""
    center = 0.5 * (box.lo + box.hi)
    radius = radius_factor * 0.5 * float(np.linalg.norm(box.sides))
    i = np.arange(count, dtype=float)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    z = 1.0 - 2.0 * (i + 0.5) / count
    theta = 2.0 * np.pi * i / golden
    rho = np.sqrt(1.0 - z * z)
    dirs = np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=-1)
    return center + radius * dirs


@dataclass(frozen=True)
class ConvergenceRow:
    a: float
    n_particles: int
    sup_diff: float
    mean_diff: float
    contraction: float
    wall_time_s: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple

    COLUMNS = ("a", "M", "sup_diff", "mean_diff", "contraction_norm",
               "wall_time_s")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in self.rows:
                fh.write(",".join([
                    f"{row.a:.17g}", str(row.n_particles),
                    f"{row.sup_diff:.17g}", f"{row.mean_diff:.17g}",
                    f"{row.contraction:.17g}", f"{row.wall_time_s:.17g}",
                ]) + "\n")


def convergence_study(spec: DensitySpec, gamma_field, pw: PlaneWave,
                      bg: Background, a_list, grid_shape=12, probes=None,
                      mode: str = "auto", solver: str = "direct",
                      seed: int = 0) -> ConvergenceTable:
    """Measure how the many-body field approaches the effective field.

    For each radius: place particles, solve the block system, evaluate at the
    probe set, and compare against the collocation solution of the limiting
    equation.  Probes default to an exterior shell, which keeps them at least
    10 a away from every particle.
    """
    gamma_field = as_field(gamma_field)
    c_field = coefficient_C(gamma_field, spec.n_field)
    grid = solve_effective(spec.domain, grid_shape, c_field, pw, bg)
    if probes is None:
        probes = shell_probes(spec.domain)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    e_eff = eval_effective_at(grid, pw, probes)
    scale = float(np.abs(e_eff).max())

    rows = []
    for a in a_list:
        t0 = time.perf_counter()
        cloud = place_particles(spec, a, gamma_field, seed=seed)
        keep = _min_dist_filter(probes, cloud, 10.0 * a)
        sys_ = assemble(cloud, pw, bg, mode=mode)
        q_norm = contraction_norm(sys_)
        sol = solve_direct(sys_) if solver == "direct" else \
            solve_iterative(sys_)
        e_many = eval_field(sol, probes[keep])
        diff = np.linalg.norm(e_many - e_eff[keep], axis=-1)
        rows.append(ConvergenceRow(
            a=float(a), n_particles=len(cloud),
            sup_diff=float(diff.max() / scale),
            mean_diff=float(diff.mean() / scale),
            contraction=q_norm,
            wall_time_s=time.perf_counter() - t0,
        ))
    return ConvergenceTable(tuple(rows))


def _min_dist_filter(probes: np.ndarray, cloud: ParticleCloud,
                     min_dist: float) -> np.ndarray:
    if len(cloud) == 0:
        return np.arange(len(probes))
    d = np.linalg.norm(probes[:, None, :] - cloud.centers[None, :, :], axis=-1)
    keep = np.nonzero(d.min(axis=1) > min_dist)[0]
    if len(keep) == 0:
        raise ValueError("no probe point clears the 10a distance filter")
    return keep
