"""Riemann-Langevin particle filtering for track-before-detect."""
from .errors import (ConfigError, DegenerateLikelihoodError, DomainError, InterfaceError,
                     NumericalError, ParameterError, ScenarioError)
from .filters import (FilterConfig, ParticleCloud, bootstrap_step, point_estimate, rlmcf_step,
                      smcmc_prior_step)
from .kernels import BACKEND
from .mcmc import EmpiricalPosterior, accept_joint, accept_refine, joint_draw
from .motion import NcvModel, build_ncv, transition_logpdf, transition_sample
from .proposals import RlMoments, RlProposalParams, metric_tensor, rl_logpdf, rl_moments, rl_sample
from .sensor import (SensorModel, likelihood_fisher, log_likelihood, log_likelihood_gradient,
                     polar_of, predicted_image, psf, simulate_measurement, snr_to_amplitude)

__version__ = "0.1.0"
