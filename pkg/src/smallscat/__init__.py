"""Electromagnetic wave scattering by small bodies.

Moment-based solvers for one and many small particles, the effective-medium
limit, and the inverse problem of realizing a target refraction coefficient.
"""

from .core import Background, Box, DiagnosticsReport, Particle, \
    ParticleCloud, PlaneWave, grad_greens, greens, plane_wave_eval, \
    validate_scene
from .design import DesignSpec, DispersionCheck, design_from_target, \
    negative_refraction_check
from .effective import ConvergenceTable, DensitySpec, EffectiveFieldGrid, \
    coefficient_C, convergence_study, divergence_field, eval_effective_at, \
    helmholtz_residual, place_particles, refraction_index, riemann_sum_check, \
    shell_probes, solve_effective
from .fields import build_field, constant_field, gaussian_field, linear_field
from .many import ManyBodySystem, ManySolution, assemble, contraction_norm, \
    eval_H_field, eval_field, solve_direct, solve_iterative
from .moments import MomentEntry, SourceMoments, ball_quadrature, \
    cross_moments, self_moments, source_moments
from .profiles import RadialProfile, i_of_a, j_total, p_eval, q_eval, \
    z_estimate
from .single import SingleSolution, eval_field_single, far_field, solve_single

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
