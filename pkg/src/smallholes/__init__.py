"""Gradient L^p estimates for Poisson problems on balls with a small hole."""

from .analysis import (Regime, RegimePrediction, SweepResult, SweepRow, counterexample_integral,
                       dual_blowup_sweep, dual_source, empirical_constant, epsilon_sweep, fit_rate,
                       limit_point_value, predict_regime, rescale_check, solve)
from .core import (ConcentricBall, ConstantVector, DomainSpec, Ellipsoid, LinearX1, Modal,
                   OffCenterBall, RadialVector, divergence, validate_domain)
from .exceptions import *  # noqa: F401,F403
from .kernel import KernelConfig, fundamental_solution, green_ball, grad_green_ball_x
from .mfs import MFSPoissonSolver, MFSSolver, solve_dirichlet_harmonic, solve_divergence_source
from .norms import lp_gradient_norm, lp_source_norm, verify_weight_norm
from .quadrature import QuadratureConfig
from .shell import (ModalShellSolver, RadialShellSolver, limit_ball_solution, solve_constant_source,
                    solve_modal, solve_radial_source)

__version__ = "0.1.0"
