"""Riemann-Langevin proposal with a Fisher-information metric.

The proposal at ``x`` (with ``x_prev`` fixed) is

    N(x + eps^2/2 G^-1 grad, eps^2 G^-1)

where ``grad`` is the gradient of ``log p(y|x) + log p(x|x_prev)`` and ``G``
is the expected information of that product: the likelihood Fisher matrix
plus the transition precision ``Q^-1``. No metric-derivative correction
terms are included.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError

LOG_2PI = math.log(2.0 * math.pi)
METRIC_MODES = ("riemann", "identity")


@dataclass(frozen=True)
class RlProposalParams:
    epsilon: float = 1.0
    metric: str = "riemann"

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ParameterError("epsilon must be positive")
        if self.metric not in METRIC_MODES:
            raise ParameterError(f"metric must be one of {METRIC_MODES}")


@dataclass
class RlMoments:
    """Gaussian proposal moments; ``chol`` is the Cholesky factor of the metric."""

    mean: np.ndarray
    covariance: np.ndarray
    precision: np.ndarray
    log_det: float
    chol: np.ndarray
    epsilon: float
    jittered: bool = False


def metric_tensor(sensor, m, x_k):
    """Likelihood Fisher information plus the transition precision."""
    return sensor.fisher(np.asarray(x_k, dtype=float)) + m.Q_inv


def _factor(G):
    try:
        return np.linalg.cholesky(G), False
    except np.linalg.LinAlgError:
        pass
    d = G.shape[0]
    jitter = 1e-10 * np.trace(G) / d
    try:
        return np.linalg.cholesky(G + jitter * np.eye(d)), True
    except np.linalg.LinAlgError as exc:
        raise NumericalError("metric tensor is not positive definite") from exc


def moments_from_score(x, grad, G, epsilon):
    """Proposal moments from the total log-target gradient and the metric at ``x``."""
    if not np.all(np.isfinite(G)) or not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient or metric")
    L, jittered = _factor(G)
    L_inv = np.linalg.inv(L)
    G_inv = L_inv.T @ L_inv
    eps2 = epsilon * epsilon
    d = x.shape[0]
    return RlMoments(
        mean=x + 0.5 * eps2 * (G_inv @ grad),
        covariance=eps2 * G_inv,
        precision=(L @ L.T) / eps2,
        log_det=d * math.log(eps2) - 2.0 * float(np.sum(np.log(np.diag(L)))),
        chol=L,
        epsilon=epsilon,
        jittered=jittered,
    )


def chain_moments(frame, m, x, x_prev, params):
    """Moments at ``x`` plus the likelihood there, from one scoring pass.

    Returns ``(moments, loglik)``.
    """
    loglik, g_lik, f_lik = frame.score(x)
    grad = g_lik + m.grad_logpdf(x, x_prev)
    if params.metric == "riemann":
        G = f_lik + m.Q_inv
    else:
        G = np.eye(x.shape[0])
    return moments_from_score(x, grad, G, params.epsilon), loglik


def rl_moments(sensor, m, x_k, x_prev, z, params):
    x_k = np.asarray(x_k, dtype=float)
    x_prev = np.asarray(x_prev, dtype=float)
    return chain_moments(sensor.bind(z), m, x_k, x_prev, params)[0]


def rl_transform(moments, xi):
    """Map a standard normal vector to a draw from the proposal."""
    # cov = eps^2 (L L^T)^-1, so eps L^-T xi has the right covariance
    return moments.mean + moments.epsilon * np.linalg.solve(moments.chol.T, xi)


def rl_sample(moments, rng):
    return rl_transform(moments, rng.standard_normal(moments.mean.shape[0]))


def rl_logpdf(moments, x):
    d = np.asarray(x, dtype=float) - moments.mean
    u = moments.chol.T @ d
    quad = float(u @ u) / (moments.epsilon * moments.epsilon)
    return -0.5 * (d.shape[0] * LOG_2PI + moments.log_det + quad)
