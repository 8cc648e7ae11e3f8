"""Track-before-detect imaging sensor on a range-bearing grid.

The sensor sits at the origin; bearing is measured counter-clockwise from the
east (x) axis. Cells are indexed range-major: cell ``j = i * n_bearing + l``
has centroid ``(range_centers[i], bearing_centers[l])``. Measurements are flat
length-``J`` vectors in that order.
"""
import csv
import math

import numpy as np

from . import kernels
from .errors import DomainError, InterfaceError, ParameterError

LOG_2PI = math.log(2.0 * math.pi)


def snr_to_amplitude(sigma_w, snr_db):
    """Signal amplitude giving ``snr_db = 20 log10(amplitude / sigma_w)``."""
    if not sigma_w > 0:
        raise ParameterError("sigma_w must be positive")
    return sigma_w * 10.0 ** (snr_db / 20.0)


def _axis_centers(lo, hi, res):
    # cell count rounded; realized extent re-centred on the nominal midpoint
    n = int(round((hi - lo) / res))
    if n < 1:
        raise ParameterError("grid axis has no cells")
    start = 0.5 * (lo + hi) - 0.5 * n * res
    return start + (np.arange(n) + 0.5) * res


class SensorModel:
    """Grid geometry, PSF constants and noise level of the imaging sensor.

    Args:
        R: range PSF constant [m^2].
        B: bearing PSF constant [rad^2].
        range_res, bearing_res: cell sizes [m], [rad].
        range_min, range_max, bearing_min, bearing_max: surveillance bounds.
        sigma_w: per-cell noise standard deviation.
        amplitude: target signal strength.
        gate: cells whose range or bearing PSF factor is below this value are
            skipped in likelihood evaluations. ``0`` disables gating.
    """

    def __init__(self, R, B, range_res, bearing_res, range_min, range_max,
                 bearing_min, bearing_max, sigma_w, amplitude, gate=0.0):
        for name, value in (("R", R), ("B", B), ("range_res", range_res),
                            ("bearing_res", bearing_res), ("sigma_w", sigma_w),
                            ("amplitude", amplitude)):
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive, got {value!r}")
        if not range_min < range_max:
            raise ParameterError("range_min must be below range_max")
        if not bearing_min < bearing_max:
            raise ParameterError("bearing_min must be below bearing_max")
        if not 0.0 <= gate < 1.0:
            raise ParameterError("gate must lie in [0, 1)")
        self.R = float(R)
        self.B = float(B)
        self.range_res = float(range_res)
        self.bearing_res = float(bearing_res)
        self.range_min = float(range_min)
        self.range_max = float(range_max)
        self.bearing_min = float(bearing_min)
        self.bearing_max = float(bearing_max)
        self.sigma_w = float(sigma_w)
        self.amplitude = float(amplitude)
        self.gate = float(gate)
        self.range_centers = _axis_centers(range_min, range_max, range_res)
        self.bearing_centers = _axis_centers(bearing_min, bearing_max, bearing_res)
        self.range_centers.flags.writeable = False
        self.bearing_centers.flags.writeable = False
        self._zeros = np.zeros(self.shape)

    @property
    def shape(self):
        return (self.range_centers.size, self.bearing_centers.size)

    @property
    def J(self):
        return self.range_centers.size * self.bearing_centers.size

    @property
    def cells(self):
        """``(J, 2)`` array of ``(r_j, b_j)`` centroids in measurement order."""
        rr, bb = np.meshgrid(self.range_centers, self.bearing_centers, indexing="ij")
        return np.column_stack([rr.ravel(), bb.ravel()])

    @property
    def extent(self):
        """Realized ``(range_lo, range_hi, bearing_lo, bearing_hi)`` of the grid."""
        hr, hb = 0.5 * self.range_res, 0.5 * self.bearing_res
        return (self.range_centers[0] - hr, self.range_centers[-1] + hr,
                self.bearing_centers[0] - hb, self.bearing_centers[-1] + hb)

    def in_view(self, state):
        r, b = polar_of(state)
        r_lo, r_hi, b_lo, b_hi = self.extent
        return r_lo <= r <= r_hi and b_lo <= b <= b_hi

    def with_sigma(self, sigma_w):
        """Copy of this sensor with a different noise level."""
        return SensorModel(self.R, self.B, self.range_res, self.bearing_res,
                           self.range_min, self.range_max, self.bearing_min,
                           self.bearing_max, sigma_w, self.amplitude, self.gate)

    def bind(self, z):
        return TbdFrame(self, z)

    def fisher(self, state):
        return likelihood_fisher(self, state)

    def __repr__(self):
        return (f"SensorModel(grid={self.shape[0]}x{self.shape[1]}, R={self.R}, "
                f"B={self.B}, sigma_w={self.sigma_w}, amplitude={self.amplitude})")


def polar_of(state):
    """Range and bearing of the position components of ``state``."""
    x, y = float(state[0]), float(state[2])
    if x == 0.0 and y == 0.0:
        raise DomainError("polar coordinates undefined at the sensor origin")
    return math.hypot(x, y), math.atan2(y, x)


def psf(model, cell, state):
    if not 0 <= cell < model.J:
        raise InterfaceError(f"cell index {cell} out of range")
    i, l = divmod(int(cell), model.shape[1])
    r, b = polar_of(state)
    dr = model.range_centers[i] - r
    db = model.bearing_centers[l] - b
    return math.exp(-dr * dr / (2.0 * model.R) - db * db / (2.0 * model.B))


def predicted_image(model, state):
    """Noiseless cell intensities ``amplitude * psf`` as a flat length-J vector."""
    r, b = polar_of(state)
    fr = np.exp(-((model.range_centers - r) ** 2) / (2.0 * model.R))
    fb = np.exp(-((model.bearing_centers - b) ** 2) / (2.0 * model.B))
    return model.amplitude * np.outer(fr, fb).ravel()


def simulate_measurement(model, state, rng):
    return predicted_image(model, state) + model.sigma_w * rng.standard_normal(model.J)


def _check_frame(model, z):
    z = np.asarray(z, dtype=float)
    if z.shape != (model.J,):
        raise InterfaceError(f"measurement must have length {model.J}, got shape {z.shape}")
    return z


class TbdFrame:
    """A measurement bound to its sensor, with the z-only terms precomputed.

    The log-likelihood is evaluated as
    ``const(z) - sum_j yhat_j (yhat_j - 2 z_j) / (2 sigma_w^2)``, which only
    needs cells where the target contributes and so admits gating.
    """

    def __init__(self, model, z):
        z = _check_frame(model, z)
        if not np.all(np.isfinite(z)):
            raise InterfaceError("measurement contains non-finite values")
        self.model = model
        self.z = z
        self._z2d = np.ascontiguousarray(z.reshape(model.shape))
        var = model.sigma_w ** 2
        self._half_prec = 0.5 / var
        self.const = -0.5 * model.J * (LOG_2PI + math.log(var)) - float(z @ z) * self._half_prec

    def _args(self):
        m = self.model
        return self._z2d, m.range_centers, m.bearing_centers, m.R, m.B, m.amplitude

    def loglik(self, state):
        r, b = polar_of(state)
        s = kernels.mismatch(*self._args(), r, b, self.model.gate)
        return self.const - s * self._half_prec

    def loglik_many(self, states):
        states = np.asarray(states, dtype=float)
        x, y = states[:, 0], states[:, 2]
        if np.any((x == 0.0) & (y == 0.0)):
            raise DomainError("polar coordinates undefined at the sensor origin")
        r = np.ascontiguousarray(np.hypot(x, y))
        b = np.ascontiguousarray(np.arctan2(y, x))
        s = kernels.mismatch_many(*self._args(), r, b, self.model.gate)
        return self.const - s * self._half_prec

    def score(self, state):
        """``(loglik, gradient, fisher)`` at ``state`` from a single grid pass."""
        x, y = float(state[0]), float(state[2])
        r, b = polar_of(state)
        s, g_r, g_b, f_rr, f_rb, f_bb = kernels.polar_score(*self._args(), r, b, self.model.gate)
        inv_var = 2.0 * self._half_prec
        # d(r, b)/d(x, y)
        jac = np.array([[x / r, y / r], [-y / (r * r), x / (r * r)]])
        g_pos = jac.T @ np.array([g_r, g_b]) * inv_var
        f_pos = jac.T @ np.array([[f_rr, f_rb], [f_rb, f_bb]]) @ jac * inv_var
        f_pos = 0.5 * (f_pos + f_pos.T)
        grad = np.zeros(4)
        grad[[0, 2]] = g_pos
        fisher = np.zeros((4, 4))
        fisher[np.ix_([0, 2], [0, 2])] = f_pos
        return self.const - s * self._half_prec, grad, fisher


def log_likelihood(model, z, state):
    return TbdFrame(model, z).loglik(state)


def log_likelihood_gradient(model, z, state):
    return TbdFrame(model, z).score(state)[1]


def likelihood_fisher(model, state):
    # information sums do not depend on z; any frame will do
    return TbdFrame(model, model._zeros.ravel()).score(state)[2]


def write_frame_csv(path, model, z):
    """Write one row per cell: ``r, b, z``."""
    z = _check_frame(model, z)
    cells = model.cells
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "b", "z"])
        for (r, b), v in zip(cells, z):
            w.writerow([repr(float(r)), repr(float(b)), repr(float(v))])
