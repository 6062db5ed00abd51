"""Many-body linear system for the moment unknowns (V_m, nu_m).

Each particle contributes four complex unknowns, interleaved as
(V_x, V_y, V_z, nu).  The system is x = rhs + T x with 4x4 blocks

  T[j, m] = [ a_jm I_3   B_jm ]
            [ C_jm^T     d_jm ]

including the diagonal self blocks, so M = 1 reduces exactly to the
single-body equations.  The field away from all particles is

  E(x) = E_0(x) + sum_m [ g(x, x_m) V_m + grad g(x, x_m) nu_m ].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import Background, ParticleCloud, PlaneWave, greens, grad_greens, \
    plane_wave_eval
from .errors import InsideNearZone, NoConvergence, SingularSystem
from .moments import QUADRATURE_MAX_PARTICLES, ball_nodes, cached_scalars, \
    cached_self_moments, source_moments
from .profiles import p_eval, q_eval


@dataclass(frozen=True)
class ManyBodySystem:
    """Assembled block system: T (4M x 4M), rhs (4M,), and the scene."""

    T: np.ndarray
    rhs: np.ndarray
    cloud: ParticleCloud
    wave: PlaneWave
    mode: str

    @property
    def size(self) -> int:
        return len(self.cloud)


@dataclass(frozen=True)
class ManySolution:
    """Per-particle moment unknowns and the residual of the solved system."""

    V: np.ndarray  # (M, 3) complex
    nu: np.ndarray  # (M,) complex
    cloud: ParticleCloud
    wave: PlaneWave
    residual_norm: float


def _resolve_mode(mode: str, m: int) -> str:
    if mode == "auto":
        return "quadrature" if m <= QUADRATURE_MAX_PARTICLES else "midpoint"
    return mode


def assemble(cloud: ParticleCloud, pw: PlaneWave, bg: Background,
             mode: str = "auto") -> ManyBodySystem:
    """Populate all (j, m) moment blocks and the source moments."""
    if abs(pw.k - bg.k) > 1e-12 * bg.k:
        raise ValueError("plane wave and background disagree on k")
    m_count = len(cloud)
    k = bg.k
    mode = _resolve_mode(mode, m_count)
    n = 4 * m_count
    t_mat = np.zeros((n, n), dtype=complex)
    rhs = np.zeros(n, dtype=complex)
    centers = cloud.centers

    for j, part in enumerate(cloud.particles):
        src = source_moments(part, pw, mode=mode)
        rhs[4 * j:4 * j + 3] = src.V0
        rhs[4 * j + 3] = src.nu0

    for j, part in enumerate(cloud.particles):
        diag = cached_self_moments(part, k)
        _insert_block(t_mat, j, j, diag.a, diag.B, diag.C, diag.d)
        if m_count == 1:
            continue
        others = np.arange(m_count) != j
        idx = np.nonzero(others)[0]
        if part.profile.gamma == 0:
            continue
        if mode == "midpoint":
            j_j, mu1 = cached_scalars(part.profile, k)
            g = greens(part.center, centers[idx], k)
            dg = grad_greens(part.center[None, :], centers[idx], k)
            for col, m in enumerate(idx):
                _insert_block(t_mat, j, m, j_j * g[col], j_j * dg[col],
                              mu1 * dg[col], -mu1 * k * k * g[col])
        else:
            pts, w = ball_nodes(part.center, part.radius)
            r = np.linalg.norm(pts - part.center, axis=-1)
            p_vals = p_eval(part.profile, r)
            q_vals = q_eval(part.profile, pts, part.center, k)
            wp = w * p_vals
            wq = w[:, None] * q_vals
            g = greens(pts[:, None, :], centers[idx][None, :, :], k)
            dg = grad_greens(pts[:, None, :], centers[idx][None, :, :], k)
            a_row = wp @ g
            b_row = np.einsum("n,nmi->mi", wp, dg)
            c_row = np.einsum("ni,nm->mi", wq, g)
            d_row = np.einsum("ni,nmi->m", wq, dg)
            for col, m in enumerate(idx):
                _insert_block(t_mat, j, m, a_row[col], b_row[col],
                              c_row[col], d_row[col])

    return ManyBodySystem(T=t_mat, rhs=rhs, cloud=cloud, wave=pw, mode=mode)


def _insert_block(t_mat, j, m, a, b_vec, c_vec, d):
    rj, cm = 4 * j, 4 * m
    t_mat[rj, cm] = t_mat[rj + 1, cm + 1] = t_mat[rj + 2, cm + 2] = a
    t_mat[rj:rj + 3, cm + 3] = b_vec
    t_mat[rj + 3, cm:cm + 3] = c_vec
    t_mat[rj + 3, cm + 3] = d


def contraction_norm(sys: ManyBodySystem) -> float:
    """max_j sum_m (|a_jm| + |d_jm| + |B_jm| + |C_jm|); < 1 certifies that
    fixed-point iteration converges."""
    m_count = sys.size
    worst = 0.0
    for j in range(m_count):
        total = 0.0
        rj = 4 * j
        for m in range(m_count):
            cm = 4 * m
            total += abs(sys.T[rj, cm])
            total += abs(sys.T[rj + 3, cm + 3])
            total += float(np.linalg.norm(sys.T[rj:rj + 3, cm + 3]))
            total += float(np.linalg.norm(sys.T[rj + 3, cm:cm + 3]))
        worst = max(worst, total)
    return worst


def _unpack(x: np.ndarray, m_count: int):
    blocks = x.reshape(m_count, 4)
    return blocks[:, :3].copy(), blocks[:, 3].copy()


def solve_direct(sys: ManyBodySystem) -> ManySolution:
    """Dense LU solve of (I - T) x = rhs."""
    n = sys.T.shape[0]
    a_mat = np.eye(n, dtype=complex) - sys.T
    lu, piv = scipy.linalg.lu_factor(a_mat)
    pivots = np.abs(np.diag(lu))
    scale = np.linalg.norm(a_mat, np.inf)
    if pivots.min() < 1e-14 * scale:
        raise SingularSystem(
            f"rank deficiency: pivot ratio {pivots.min() / scale:.3g}")
    x = scipy.linalg.lu_solve((lu, piv), sys.rhs)
    residual = np.linalg.norm(a_mat @ x - sys.rhs)
    v, nu = _unpack(x, sys.size)
    return ManySolution(V=v, nu=nu, cloud=sys.cloud, wave=sys.wave,
                        residual_norm=float(residual))


def solve_iterative(sys: ManyBodySystem, tol: float = 1e-10,
                    max_iter: int = 1000) -> ManySolution:
    """Fixed-point iteration x <- rhs + T x.

    Requires contraction_norm < 1 for a guarantee; otherwise it still runs
    up to max_iter and raises NoConvergence with the final residual.
    """
    x = sys.rhs.copy()
    for _ in range(max_iter):
        x_next = sys.rhs + sys.T @ x
        delta = np.linalg.norm(x_next - x)
        x = x_next
        if delta <= tol * max(np.linalg.norm(x), 1e-300):
            residual = np.linalg.norm(x - sys.rhs - sys.T @ x)
            v, nu = _unpack(x, sys.size)
            return ManySolution(V=v, nu=nu, cloud=sys.cloud, wave=sys.wave,
                                residual_norm=float(residual))
    residual = float(np.linalg.norm(x - sys.rhs - sys.T @ x))
    raise NoConvergence(
        f"fixed point did not reach tol={tol} in {max_iter} iterations "
        f"(residual {residual:.3e})", residual=residual, iterations=max_iter)


def _check_near_zone(cloud: ParticleCloud, pts: np.ndarray) -> None:
    centers = cloud.centers
    if len(centers) == 0:
        return
    flat = pts.reshape(-1, 3)
    dists = np.linalg.norm(flat[:, None, :] - centers[None, :, :], axis=-1)
    limit = 2.0 * cloud.radii[None, :]
    if np.any(dists <= limit):
        raise InsideNearZone("evaluation point within 2a of a particle center")


def eval_field(sol: ManySolution, x) -> np.ndarray:
    """E(x) = E_0(x) + sum_m [g(x, x_m) V_m + grad g(x, x_m) nu_m]."""
    pts = np.asarray(x, dtype=float)
    _check_near_zone(sol.cloud, pts)
    out = plane_wave_eval(sol.wave, pts).astype(complex)
    if len(sol.cloud) == 0:
        return out
    k = sol.wave.k
    centers = sol.cloud.centers
    flat = pts.reshape(-1, 3)
    g = greens(flat[:, None, :], centers[None, :, :], k)
    dg = grad_greens(flat[:, None, :], centers[None, :, :], k)
    scat = g @ sol.V + np.einsum("nmi,m->ni", dg, sol.nu)
    return out + scat.reshape(pts.shape)


def eval_H_field(sol: ManySolution, x, bg: Background) -> np.ndarray:
    """H = curl(E) / (i omega mu); the nu terms are gradients and drop out:
    H = [ik alpha x E_0(x) + sum_m grad g(x, x_m) x V_m] / (i omega mu)."""
    pts = np.asarray(x, dtype=float)
    _check_near_zone(sol.cloud, pts)
    pw = sol.wave
    k = pw.k
    curl = 1j * k * np.cross(np.broadcast_to(pw.alpha, pts.shape),
                             plane_wave_eval(pw, pts))
    if len(sol.cloud):
        centers = sol.cloud.centers
        flat = pts.reshape(-1, 3)
        dg = grad_greens(flat[:, None, :], centers[None, :, :], k)
        curl = curl + np.cross(dg, sol.V[None, :, :]).sum(axis=1).reshape(pts.shape)
    return curl / (1j * bg.omega * bg.mu)
