"""Sequential MCMC building blocks.

The chain targets the joint density of ``(x_k, x_{k-1})``, so acceptance
ratios involve the transition density rather than the prediction density.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InterfaceError, NumericalError


@dataclass
class EmpiricalPosterior:
    """Equally weighted atoms ``(n, dim)`` approximating a filtering posterior."""

    particles: np.ndarray

    def __post_init__(self):
        self.particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        if self.particles.shape[0] == 0 or self.particles.size == 0:
            raise InterfaceError("empirical posterior needs at least one particle")

    def __len__(self):
        return self.particles.shape[0]


@dataclass
class ChainState:
    """Current pair ``(x_k, x_{k-1})`` with cached log-density terms.

    ``forward`` caches the refinement proposal moments at ``x``; it is dropped
    whenever ``x`` or ``x_prev`` changes.
    """

    x: np.ndarray
    x_prev: np.ndarray
    loglik: float
    logtrans: float
    forward: object = field(default=None, repr=False)


@dataclass
class ChainStats:
    """Counters filled in by the MCMC filter steps."""

    iterations: int = 0
    joint_accepts: int = 0
    refine_proposals: int = 0
    refine_accepts: int = 0
    jitter_events: int = 0
    kept_iterations: list = field(default_factory=list)
    final_state: ChainState = None

    @property
    def joint_rate(self):
        return self.joint_accepts / self.iterations if self.iterations else float("nan")

    @property
    def refine_rate(self):
        if not self.refine_proposals:
            return float("nan")
        return self.refine_accepts / self.refine_proposals


def joint_draw(prior, m, rng):
    """Draw ``(x_k, x_{k-1})`` from ``p(x_k | x_{k-1}) p_hat(x_{k-1})``."""
    if len(prior) == 0:
        raise InterfaceError("empty prior")
    x_prev = prior.particles[rng.integers(len(prior))]
    return m.sample(x_prev, rng), x_prev


def joint_draws(prior, m, rng, n):
    """``n`` independent joint draws as arrays ``(x_k, x_prev, indices)``."""
    if len(prior) == 0:
        raise InterfaceError("empty prior")
    idx = rng.integers(len(prior), size=n)
    x_prev = prior.particles[idx]
    return m.sample_many(x_prev, rng), x_prev, idx


def accept_joint(loglik_star, loglik_cur):
    """Acceptance probability of a joint draw: a pure likelihood ratio.

    Proposing from the prior dynamics cancels the transition and proposal
    terms of the Metropolis-Hastings ratio.
    """
    if math.isnan(loglik_star) or math.isnan(loglik_cur):
        raise NumericalError("NaN log-likelihood in joint acceptance")
    delta = loglik_star - loglik_cur
    if math.isnan(delta):  # both infinite with the same sign
        raise NumericalError("undefined likelihood ratio")
    return 1.0 if delta >= 0.0 else math.exp(delta)


def accept_refine(logw_star, logw_cur):
    """Metropolis-Hastings acceptance probability for a refinement move.

    ``logw_star`` is ``log p(y|x*) + log p(x*|x_prev) + log q(x_cur|x*)`` and
    ``logw_cur`` the same with the roles of ``x*`` and ``x_cur`` swapped.
    """
    if math.isnan(logw_star) or math.isnan(logw_cur):
        raise NumericalError("NaN in refinement acceptance")
    if logw_star == -math.inf and logw_cur == -math.inf:
        raise NumericalError("degenerate proposal: both log-weights are -inf")
    if logw_star == -math.inf:
        return 0.0
    delta = logw_star - logw_cur
    return 1.0 if delta >= 0.0 else math.exp(delta)
