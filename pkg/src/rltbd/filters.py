"""Riemann-Langevin MC filter, prior-proposal sequential MCMC, bootstrap PF.

Sensors are passed in unbound form and bound to each measurement with
``sensor.bind(z)``; any object providing ``loglik``, ``loglik_many`` and
``score`` on the bound frame works (see :mod:`rltbd.linear`).
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLikelihoodError, InterfaceError, ParameterError
from .mcmc import ChainState, ChainStats, EmpiricalPosterior, accept_joint, accept_refine, joint_draws
from .proposals import RlProposalParams, chain_moments, rl_logpdf, rl_transform

FILTER_KINDS = ("rlmcf", "smcmc_prior", "bootstrap")
RESAMPLING_SCHEMES = ("systematic", "multinomial")


@dataclass(frozen=True)
class FilterConfig:
    kind: str
    n_particles: int
    n_burn_in: int = 0
    proposal: RlProposalParams = field(default_factory=RlProposalParams)
    resampling: str = "systematic"
    refine: bool = True

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ParameterError(f"unknown filter kind {self.kind!r}")
        if self.n_particles <= 0:
            raise ParameterError("n_particles must be positive")
        if self.n_burn_in < 0:
            raise ParameterError("n_burn_in must be non-negative")
        if self.resampling not in RESAMPLING_SCHEMES:
            raise ParameterError(f"unknown resampling scheme {self.resampling!r}")


@dataclass
class ParticleCloud:
    particles: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (self.particles.shape[0],):
                raise InterfaceError("weights and particles differ in length")
            if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
                raise InterfaceError("weights must be non-negative and sum to 1")

    def __len__(self):
        return self.particles.shape[0]


def _sequential_mcmc(prior, z, sensor, motion, cfg, rng, refine, stats):
    if not isinstance(prior, EmpiricalPosterior):
        prior = EmpiricalPosterior(prior.particles)
    stats = stats if stats is not None else ChainStats()
    frame = sensor.bind(z)
    n_iter = cfg.n_burn_in + cfg.n_particles
    params = cfg.proposal

    # all joint-phase randomness first, so disabling refinement leaves it unchanged
    xs, xps, _ = joint_draws(prior, motion, rng, n_iter + 1)
    u_joint = rng.random(n_iter)
    if refine:
        xi_ref = rng.standard_normal((n_iter, motion.dim))
        u_ref = rng.random(n_iter)

    state = ChainState(xs[0], xps[0], frame.loglik(xs[0]), motion.logpdf(xs[0], xps[0]))
    out = np.empty((cfg.n_particles, prior.particles.shape[1]))
    for i in range(n_iter):
        # joint draw
        x_star = xs[i + 1]
        ll_star = frame.loglik(x_star)
        if u_joint[i] < accept_joint(ll_star, state.loglik):
            x_prev = xps[i + 1]
            state = ChainState(x_star, x_prev, ll_star, motion.logpdf(x_star, x_prev))
            stats.joint_accepts += 1
        # refinement of x_k with x_prev held fixed
        if refine:
            if state.forward is None:
                state.forward, _ = chain_moments(frame, motion, state.x, state.x_prev, params)
                stats.jitter_events += state.forward.jittered
            fwd = state.forward
            x_new = rl_transform(fwd, xi_ref[i])
            rev, ll_new = chain_moments(frame, motion, x_new, state.x_prev, params)
            stats.jitter_events += rev.jittered
            lt_new = motion.logpdf(x_new, state.x_prev)
            logw_new = ll_new + lt_new + rl_logpdf(rev, state.x)
            logw_cur = state.loglik + state.logtrans + rl_logpdf(fwd, x_new)
            stats.refine_proposals += 1
            if u_ref[i] < accept_refine(logw_new, logw_cur):
                state = ChainState(x_new, state.x_prev, ll_new, lt_new, rev)
                stats.refine_accepts += 1
        stats.iterations += 1
        if i >= cfg.n_burn_in:
            out[i - cfg.n_burn_in] = state.x
            stats.kept_iterations.append(i + 1)
    stats.final_state = state
    return EmpiricalPosterior(out)


def rlmcf_step(prior, z, sensor, motion, cfg, rng, stats=None):
    """One time step of the Riemann-Langevin MC filter.

    Each of the ``n_burn_in + n_particles`` iterations makes a joint draw of
    ``(x_k, x_{k-1})`` from the prior dynamics, then a Riemann-Langevin move
    on ``x_k`` alone. The last ``n_particles`` chain states form the output.
    ``cfg.refine = False`` turns this into :func:`smcmc_prior_step`.
    """
    return _sequential_mcmc(prior, z, sensor, motion, cfg, rng, cfg.refine, stats)


def smcmc_prior_step(prior, z, sensor, motion, cfg, rng, stats=None):
    """Sequential MCMC with joint draws from the prior dynamics only."""
    return _sequential_mcmc(prior, z, sensor, motion, cfg, rng, False, stats)


def normalize_log_weights(logw):
    """Normalized weights from log-weights via log-sum-exp."""
    logw = np.asarray(logw, dtype=float)
    top = np.max(logw)
    if not np.isfinite(top):
        raise DegenerateLikelihoodError("all particle weights are zero")
    w = np.exp(logw - top)
    return w / w.sum()


def systematic_resample(weights, n, rng):
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, positions, side="right")


def multinomial_resample(weights, n, rng):
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right")


def bootstrap_step(prior, z, sensor, motion, cfg, rng, stats=None):
    """Propagate, weight by likelihood, and resample ``n_particles`` particles."""
    frame = sensor.bind(z)
    pred = motion.sample_many(prior.particles, rng)
    logw = frame.loglik_many(pred)
    if getattr(prior, "weights", None) is not None:
        with np.errstate(divide="ignore"):
            logw = logw + np.log(prior.weights)
    w = normalize_log_weights(logw)
    resample = systematic_resample if cfg.resampling == "systematic" else multinomial_resample
    idx = resample(w, cfg.n_particles, rng)
    return ParticleCloud(pred[idx])


def point_estimate(cloud):
    particles = cloud.particles
    if particles.shape[0] == 0:
        raise InterfaceError("cannot estimate from an empty cloud")
    weights = getattr(cloud, "weights", None)
    if weights is None:
        return particles.mean(axis=0)
    return weights @ particles


STEP_FUNCTIONS = {
    "rlmcf": rlmcf_step,
    "smcmc_prior": smcmc_prior_step,
    "bootstrap": bootstrap_step,
}


def distinct_count(cloud):
    """Number of unique particles under exact equality of every component."""
    return int(np.unique(cloud.particles, axis=0).shape[0])


@dataclass
class FilterTrace:
    estimates: np.ndarray
    distinct: np.ndarray
    joint_rate: np.ndarray
    refine_rate: np.ndarray
    final: object


def run_filter(cfg, cloud, measurements, sensor, motion, rng):
    """Run one filter over a measurement sequence from an initial cloud."""
    step = STEP_FUNCTIONS[cfg.kind]
    k_total = len(measurements)
    dim = cloud.particles.shape[1]
    estimates = np.empty((k_total, dim))
    distinct = np.empty(k_total, dtype=int)
    joint_rate = np.full(k_total, np.nan)
    refine_rate = np.full(k_total, np.nan)
    for k, z in enumerate(measurements):
        stats = ChainStats()
        cloud = step(cloud, z, sensor, motion, cfg, rng, stats)
        estimates[k] = point_estimate(cloud)
        distinct[k] = distinct_count(cloud)
        joint_rate[k] = stats.joint_rate
        refine_rate[k] = stats.refine_rate
    return FilterTrace(estimates, distinct, joint_rate, refine_rate, cloud)
