"""Elliptically symmetric angular Gaussian (ESAG) distributions of any dimension."""
from .density import density, log_density, log_likelihood, log_mfun, mfun
from .diagnostics import (GofResult, ResidualSet, residual_identity, gof_test,
                          ks_two_sample, residuals, t1_pivot_quality)
from .errors import (DataError, EsagError, InsufficientDataError, InvalidParameterError,
                     OptimizationError, ShapeError)
from .fit import BootstrapSummary, FitOptions, FitResult, bootstrap_se, fit_mle
from .param import (EsagMoments, OmegaParams, SphericalGroups, assemble_rotation,
                    gamma_to_groups, omega_to_moments, orthonormal_basis, plane_rotation,
                    radial_to_eigenvalues)
from .sampling import SeededRng, mix_samples, sample_angular_cauchy, sample_esag
from .simstudy import Scenario, StudyReport, make_scenario_sample, rejection_study

__version__ = "0.1.0"
