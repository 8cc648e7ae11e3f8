"""Oracle checks shared by the ``selftest`` command and the test suite.

Each check returns a :class:`CheckResult` holding the measured error and the
tolerance it was judged against.
"""
import math
import time
from dataclasses import dataclass

import numpy as np

from .filters import FilterConfig, ParticleCloud, run_filter
from .linear import LinearGaussianSensor, kalman_filter
from .motion import LinearGaussianTransition, build_ncv
from .proposals import RlProposalParams, metric_tensor
from .sensor import (SensorModel, likelihood_fisher, log_likelihood, log_likelihood_gradient,
                     predicted_image, simulate_measurement, snr_to_amplitude)


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(self.error < self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28s} error={self.error:.3e}  tol={self.tolerance:.1e}  ({self.seconds:.1f}s)"


def default_sensor(sigma_w=1e-4, snr_db=80.0, gate=0.0):
    """The full 8 x 209 surveillance grid used in the low-noise experiment."""
    return SensorModel(1.56e6, 1.88e-4, 500.0, 5e-3, 22e3, 26e3, -math.pi / 6, math.pi / 6,
                       sigma_w, snr_to_amplitude(sigma_w, snr_db), gate)


def small_sensor(sigma_w=5e-3):
    """An 8 x 8 grid (J = 64) with the same PSF-to-resolution ratios."""
    return SensorModel(6.24 * 50.0**2, 7.52 * 0.05**2, 50.0, 0.05, 1000.0, 1400.0, -0.2, 0.2,
                       sigma_w, 1.0)


def random_states(sensor, n, rng, margin=0.1):
    """States with positions drawn uniformly in polar coordinates inside the grid."""
    r_lo, r_hi, b_lo, b_hi = sensor.extent
    dr, db = margin * (r_hi - r_lo), margin * (b_hi - b_lo)
    r = rng.uniform(r_lo + dr, r_hi - dr, n)
    b = rng.uniform(b_lo + db, b_hi - db, n)
    out = np.zeros((n, 4))
    out[:, 0], out[:, 2] = r * np.cos(b), r * np.sin(b)
    out[:, [1, 3]] = rng.uniform(-50, 50, (n, 2))
    return out


def fd_gradient(fn, x, step):
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * step)
    return g


def gradient_check(sensor=None, n=100, seed=0, step=1e-3, grad_fn=log_likelihood_gradient):
    """Worst relative error of the analytic gradient against central differences.

    Each pair uses a measurement simulated from a state within a few hundred
    metres of the evaluation point.
    """
    sensor = sensor or default_sensor()
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    states = random_states(sensor, n, rng)
    worst = 0.0
    for x in states:
        src = x.copy()
        src[[0, 2]] += rng.uniform(-300, 300, 2)
        z = simulate_measurement(sensor, src, rng)
        g = grad_fn(sensor, z, x)
        g_fd = fd_gradient(lambda s: log_likelihood(sensor, z, s), x, step)
        worst = max(worst, np.linalg.norm(g - g_fd) / np.linalg.norm(g_fd))
    return CheckResult("gradient vs finite diff", worst, 1e-5, time.perf_counter() - t0)


def fisher_identity_check(sensor=None, n_states=5, n_meas=10_000, seed=1, grad_fn=log_likelihood_gradient):
    """Worst relative Frobenius error of the Fisher matrix against E[g g^T]."""
    sensor = sensor or default_sensor()
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for x in random_states(sensor, n_states, rng, margin=0.2):
        g = np.array([grad_fn(sensor, simulate_measurement(sensor, x, rng), x) for _ in range(n_meas)])
        emp = g.T @ g / n_meas
        F = likelihood_fisher(sensor, x)
        worst = max(worst, np.linalg.norm(F - emp) / np.linalg.norm(emp))
    return CheckResult("Fisher vs E[g g^T]", worst, 0.05, time.perf_counter() - t0)


def _hessian_stencil(x, steps):
    """Perturbed states for central second differences and how to combine them."""
    d = x.shape[0]
    pts, plan = [], {}
    for i in range(d):
        for j in range(i, d):
            idx = []
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                p = x.copy()
                p[i] += si * steps[i]
                p[j] += sj * steps[j]
                idx.append(len(pts))
                pts.append(p)
            plan[i, j] = idx
    return np.array(pts), plan


def metric_hessian_check(n_meas=10_000, seed=2):
    """Metric tensor against a Monte Carlo finite-difference expected Hessian.

    Uses the 64-cell grid with noise and process levels chosen so the
    likelihood and transition terms are of comparable size.
    """
    sensor = small_sensor()
    motion = build_ncv(1.0, 5.0, 5.0)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for x in random_states(sensor, 3, rng, margin=0.25):
        x_prev = np.linalg.solve(motion.A, x) + rng.normal(0, 1.0, 4)
        steps = np.array([1.0, 0.1, 1.0, 0.1])
        pts, plan = _hessian_stencil(x, steps)
        yhat = np.array([predicted_image(sensor, p) for p in pts])  # (S, J)
        Z = np.array([simulate_measurement(sensor, x, rng) for _ in range(n_meas)])  # (M, J)
        # log-likelihood up to a z-only constant, which cancels in the stencil
        ll = (2.0 * Z @ yhat.T - np.sum(yhat**2, axis=1)[None, :]) / (2.0 * sensor.sigma_w**2)
        lt = np.array([motion.logpdf(p, x_prev) for p in pts])
        f = ll + lt[None, :]
        H = np.zeros((n_meas, 4, 4))
        for (i, j), (a, b, c, e) in plan.items():
            H[:, i, j] = H[:, j, i] = (f[:, a] - f[:, b] - f[:, c] + f[:, e]) / (4 * steps[i] * steps[j])
        expected = -H.mean(axis=0)
        G = metric_tensor(sensor, motion, x)
        worst = max(worst, np.linalg.norm(G - expected) / np.linalg.norm(expected))
    return CheckResult("metric vs -E[Hessian]", worst, 0.05, time.perf_counter() - t0)


def linear_gaussian_problem(steps=5, seed=3):
    """1D random walk observed in Gaussian noise, with its Kalman solution."""
    motion = LinearGaussianTransition([[0.9]], [[0.5]])
    sensor = LinearGaussianSensor([[1.0]], [[0.3]])
    rng = np.random.default_rng(seed)
    x = np.array([rng.normal()])
    zs = []
    for _ in range(steps):
        x = motion.sample(x, rng)
        zs.append(sensor.simulate(x, rng))
    kf_mean, kf_cov = kalman_filter([0.0], [[1.0]], motion, sensor, zs)
    return motion, sensor, zs, kf_mean, kf_cov


def kalman_check(n_runs=20, n_particles=400, n_burn_in=100, seed=4, configs=None):
    """Largest |filter mean - Kalman mean| in Monte Carlo standard errors.

    Every filter runs ``n_runs`` times with independent seeds; the check is
    taken at every time step. Returns one result per filter.
    """
    motion, sensor, zs, kf_mean, _ = linear_gaussian_problem()
    configs = configs or [
        FilterConfig("rlmcf", n_particles, n_burn_in, RlProposalParams(1.0)),
        FilterConfig("smcmc_prior", n_particles, n_burn_in),
        FilterConfig("bootstrap", n_particles),
    ]
    results = []
    for ci, cfg in enumerate(configs):
        t0 = time.perf_counter()
        means = []
        for run in range(n_runs):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ci, run)))
            cloud = ParticleCloud(rng.normal(0.0, 1.0, (cfg.n_particles, 1)))
            means.append(run_filter(cfg, cloud, zs, sensor, motion, rng).estimates[:, 0])
        means = np.array(means)
        se = means.std(axis=0, ddof=1) / math.sqrt(n_runs)
        z_scores = np.abs(means.mean(axis=0) - kf_mean[:, 0]) / se
        results.append(CheckResult(f"Kalman agreement [{cfg.kind}]", float(z_scores.max()), 3.0,
                                   time.perf_counter() - t0))
    return results


def run_selftest(grad_fn=log_likelihood_gradient, emit=print):
    """Run the oracle suite; returns the list of results."""
    results = [gradient_check(grad_fn=grad_fn), fisher_identity_check(grad_fn=grad_fn),
               metric_hessian_check(), *kalman_check()]
    for r in results:
        emit(r.line())
    return results


__all__ = ["CheckResult", "run_selftest", "gradient_check", "fisher_identity_check",
           "metric_hessian_check", "kalman_check", "default_sensor", "small_sensor"]
