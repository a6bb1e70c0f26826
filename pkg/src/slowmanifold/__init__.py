"""Random slow manifolds for nonlocal fast-slow systems with stable Levy noise."""

from .estimator import RandomSlowManifold
from .exceptions import (ConfigError, DivergentIntegralError, GridError, InsufficientPathError,
                         NumericalFailure, SlowManifoldError)
from .experiments import ExperimentConfig, parse_config, run_command, run_example
from .fastslow_system import (ConditionReport, Omega, StateZ, SystemSpec, Trajectory,
                              check_conditions, integrate_random_system,
                              integrate_stochastic_system, inverse_transform, random_transform,
                              sample_omega, shift_omega)
from .fractional_laplacian import (SpectralOperator, apply_semigroup, build_operator,
                                   eigenvalue_asymptotic, integrate_field,
                                   quadrature_eigenvalue_oracle)
from .levy_noise import (NoisePath, RngStream, StableParams, ks_two_sample,
                         sample_path, sample_stable_increment, self_similarity_test, shift_path)
from .slow_manifold import (ManifoldConfig, ManifoldPoint, TrackingReport, approx_manifold,
                            back_transform_manifold, contraction_factor, lipschitz_bound,
                            lp_step, solve_manifold_point, solve_tracking_point, tracking_factor)
from .stationary_ou import StationarySpec, delta_stat, eta_eps, xi_stat
from .systems import example1, example2, linear_system

__version__ = "0.1.0"
