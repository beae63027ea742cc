"""Nonlocal Fisher-KPP fronts in random time-heterogeneous media.

Modules: drivers (coefficient paths and their means), kernels, speed,
solver (method of lines), waves (barriers and front construction),
stability, verification, config/cli (experiments and artifacts).
"""

__version__ = "0.1.0"

from .drivers import (  # noqa: E402
    Constant, CoefficientPath, Periodic, Quasiperiodic, Telegraph,
    block_decomposition, least_mean, mean_estimate, sample_path, shift, upper_mean,
)
from .kernels import KernelSpec, abscissa, kernel_eval, moment_L  # noqa: E402
from .speed import SpeedFunction, critical_mu, mean_speed, position_C, speed_c  # noqa: E402
from .solver import Field, Grid, Trajectory, evolve, front_position, step_fixed, step_moving  # noqa: E402
from .waves import (  # noqa: E402
    SubSuperParams, WaveProfile, build_wave, d_min, measure_c_star, phi_minus, phi_plus,
    phi_sub, time_average_profile, x_peak,
)
from .stability import PerturbationSpec, alpha_of, make_initial, ratio_distance, run_stability  # noqa: E402
from .verification import comparison_check, lipschitz_check, residual_G  # noqa: E402

__all__ = [
    "Constant", "CoefficientPath", "Periodic", "Quasiperiodic", "Telegraph",
    "block_decomposition", "least_mean", "mean_estimate", "sample_path", "shift", "upper_mean",
    "KernelSpec", "abscissa", "kernel_eval", "moment_L",
    "SpeedFunction", "critical_mu", "mean_speed", "position_C", "speed_c",
    "Field", "Grid", "Trajectory", "evolve", "front_position", "step_fixed", "step_moving",
    "SubSuperParams", "WaveProfile", "build_wave", "d_min", "measure_c_star", "phi_minus",
    "phi_plus", "phi_sub", "time_average_profile", "x_peak",
    "PerturbationSpec", "alpha_of", "make_initial", "ratio_distance", "run_stability",
    "comparison_check", "lipschitz_check", "residual_G",
]
