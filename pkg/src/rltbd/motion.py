"""Linear-Gaussian state transitions and the nearly-constant-velocity model.

States are numpy vectors ordered ``(x, vx, y, vy)`` for the NCV model.
"""
import math

import numpy as np

from .errors import ParameterError

LOG_2PI = math.log(2.0 * math.pi)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class LinearGaussianTransition:
    """``x_k = A x_{k-1} + v``, ``v ~ N(0, Q)``.

    The precision, its log-determinant and a Cholesky factor of ``Q`` are
    computed once at construction; instances are immutable.
    """

    def __init__(self, A, Q):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if A.shape[0] != A.shape[1] or Q.shape != A.shape:
            raise ParameterError("A and Q must be square and of equal shape")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-14 * np.abs(Q).max()):
            raise ParameterError("Q must be symmetric")
        try:
            chol = np.linalg.cholesky(Q)
        except np.linalg.LinAlgError as exc:
            raise ParameterError("Q must be positive definite") from exc
        chol_inv = np.linalg.inv(chol)
        self.dim = A.shape[0]
        self.A = _frozen(A)
        self.Q = _frozen(Q)
        self.Q_chol = _frozen(chol)
        self.Q_inv = _frozen(chol_inv.T @ chol_inv)
        self.Q_logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))

    def mean(self, prev):
        return self.A @ prev

    def sample(self, prev, rng):
        return self.A @ prev + self.Q_chol @ rng.standard_normal(self.dim)

    def sample_many(self, prev, rng):
        """Propagate an ``(n, dim)`` array of states."""
        prev = np.asarray(prev, dtype=float)
        noise = rng.standard_normal(prev.shape)
        return prev @ self.A.T + noise @ self.Q_chol.T

    def logpdf(self, nxt, prev):
        d = nxt - self.A @ prev
        return -0.5 * (self.dim * LOG_2PI + self.Q_logdet + d @ self.Q_inv @ d)

    def grad_logpdf(self, nxt, prev):
        """Gradient of ``logpdf`` with respect to ``nxt``."""
        return -self.Q_inv @ (nxt - self.A @ prev)


class NcvModel(LinearGaussianTransition):
    """Nearly-constant-velocity model on the state ``(x, vx, y, vy)``."""

    def __init__(self, dt, sigma_ax, sigma_ay):
        self.dt = float(dt)
        self.sigma_ax = float(sigma_ax)
        self.sigma_ay = float(sigma_ay)
        block_a = np.array([[1.0, dt], [0.0, 1.0]])
        block_q = np.array([[dt**3 / 3.0, dt**2 / 2.0], [dt**2 / 2.0, dt]])
        A = np.kron(np.eye(2), block_a)
        Q = np.kron(np.diag([sigma_ax**2, sigma_ay**2]), block_q)
        super().__init__(A, Q)

    def __repr__(self):
        return f"NcvModel(dt={self.dt}, sigma_ax={self.sigma_ax}, sigma_ay={self.sigma_ay})"


def build_ncv(dt, sigma_ax, sigma_ay):
    """Build an :class:`NcvModel`, rejecting non-positive parameters."""
    for name, value in (("dt", dt), ("sigma_ax", sigma_ax), ("sigma_ay", sigma_ay)):
        if not (np.isfinite(value) and value > 0):
            raise ParameterError(f"{name} must be positive, got {value!r}")
    return NcvModel(dt, sigma_ax, sigma_ay)


def transition_sample(m, prev, rng):
    return m.sample(np.asarray(prev, dtype=float), rng)


def transition_logpdf(m, nxt, prev):
    return float(m.logpdf(np.asarray(nxt, dtype=float), np.asarray(prev, dtype=float)))
