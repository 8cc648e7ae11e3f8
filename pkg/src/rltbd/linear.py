"""Linear-Gaussian observation model and the Kalman filter.

These give every filter in :mod:`rltbd.filters` a problem with a closed-form
posterior, used as the reference in tests and ``selftest``.
"""
import math

import numpy as np

from .errors import InterfaceError

LOG_2PI = math.log(2.0 * math.pi)


class LinearGaussianSensor:
    """``z = H x + w``, ``w ~ N(0, Rm)``."""

    def __init__(self, H, Rm):
        self.H = np.atleast_2d(np.asarray(H, dtype=float))
        self.Rm = np.atleast_2d(np.asarray(Rm, dtype=float))
        self.Rm_inv = np.linalg.inv(self.Rm)
        self.Rm_logdet = float(np.linalg.slogdet(self.Rm)[1])
        self._info = self.H.T @ self.Rm_inv @ self.H

    def bind(self, z):
        return LinearFrame(self, z)

    def fisher(self, state):
        return self._info.copy()

    def simulate(self, state, rng):
        chol = np.linalg.cholesky(self.Rm)
        return self.H @ state + chol @ rng.standard_normal(self.H.shape[0])


class LinearFrame:
    def __init__(self, sensor, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if z.shape != (sensor.H.shape[0],):
            raise InterfaceError("measurement dimension mismatch")
        self.sensor = sensor
        self.z = z
        self._const = -0.5 * (z.size * LOG_2PI + sensor.Rm_logdet)

    def loglik(self, state):
        d = self.z - self.sensor.H @ state
        return self._const - 0.5 * d @ self.sensor.Rm_inv @ d

    def loglik_many(self, states):
        d = self.z[None, :] - np.asarray(states, dtype=float) @ self.sensor.H.T
        return self._const - 0.5 * np.einsum("ni,ij,nj->n", d, self.sensor.Rm_inv, d)

    def score(self, state):
        s = self.sensor
        d = self.z - s.H @ state
        return (self._const - 0.5 * d @ s.Rm_inv @ d,
                s.H.T @ s.Rm_inv @ d,
                s._info.copy())


def kalman_filter(m0, P0, transition, sensor, measurements):
    """Filtered means and covariances for each measurement.

    Returns arrays of shape ``(K, d)`` and ``(K, d, d)``.
    """
    m = np.atleast_1d(np.asarray(m0, dtype=float))
    P = np.atleast_2d(np.asarray(P0, dtype=float))
    A, Q, H, Rm = transition.A, transition.Q, sensor.H, sensor.Rm
    means, covs = [], []
    for z in measurements:
        m = A @ m
        P = A @ P @ A.T + Q
        S = H @ P @ H.T + Rm
        K = np.linalg.solve(S, H @ P).T
        m = m + K @ (np.atleast_1d(z) - H @ m)
        P = P - K @ S @ K.T
        means.append(m)
        covs.append(P)
    return np.array(means), np.array(covs)
