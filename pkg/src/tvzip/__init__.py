"""Time-varying zero-inflated Poisson INGARCH models."""

from .core import CountSeries, IngarchParams, ModelOrder, lambda_gradient, lambda_path
from .distribution import ZipParams, conditional_moments, dispersion_ratio, zip_pmf
from .estimation import (FitResult, ParamVector, Responsibilities, complete_data_log_likelihood,
                         e_step, fit, fit_em, fit_mle, hessian, log_likelihood, m_step, score)
from .links import (ConstantLink, LogisticLink, PiecewiseMonthlyLink, SinusoidalLink,
                    omega_at, omega_gradient, parse_link, validate_sinusoidal)
from .selection import aic_bic, compare_models, information_criteria, made
from .simulation import SimulationSpec, simulate_seasonal_ar, simulate_tvzip
from .study import StudyConfig, StudyReport, preset, run_simulation_study

__version__ = "0.1.0"
