import math

import numpy as np
import pytest
from scipy import stats

from rltbd.errors import InterfaceError, NumericalError
from rltbd.filters import FilterConfig, smcmc_prior_step
from rltbd.linear import LinearGaussianSensor, kalman_filter
from rltbd.mcmc import EmpiricalPosterior, accept_joint, accept_refine, joint_draw, joint_draws
from rltbd.motion import LinearGaussianTransition


def test_single_particle_prior(ncv, rng):
    p = np.array([1.0, 2.0, 3.0, 4.0])
    prior = EmpiricalPosterior(p[None, :])
    for _ in range(10):
        _, x_prev = joint_draw(prior, ncv, rng)
        np.testing.assert_array_equal(x_prev, p)


def test_empty_prior():
    with pytest.raises(InterfaceError):
        EmpiricalPosterior(np.empty((0, 4)))


def test_joint_draw_indices_uniform(ncv, rng):
    n = 50
    prior = EmpiricalPosterior(np.arange(n * 4, dtype=float).reshape(n, 4))
    _, _, idx = joint_draws(prior, ncv, rng, 100_000)
    counts = np.bincount(idx, minlength=n)
    assert stats.chisquare(counts).pvalue > 0.01


def test_joint_draw_conditional_moments(ncv, rng):
    prior = EmpiricalPosterior(np.array([[0.0, 10.0, 0.0, -5.0], [1000.0, 0.0, 1000.0, 0.0]]))
    x, x_prev, _ = joint_draws(prior, ncv, rng, 100_000)
    resid = x - x_prev @ ncv.A.T
    np.testing.assert_allclose(resid.mean(axis=0), 0.0, atol=4 * np.sqrt(np.diag(ncv.Q)).max() / math.sqrt(1e5))
    assert np.linalg.norm(np.cov(resid.T) - ncv.Q) / np.linalg.norm(ncv.Q) < 0.05


@pytest.mark.parametrize("star, cur, expected", [
    (5.0, 5.0, 1.0),
    (math.log(2), 0.0, 1.0),
    (0.0, math.log(4), 0.25),
    (-1e9, 0.0, 0.0),
])
def test_accept_joint(star, cur, expected):
    assert accept_joint(star, cur) == pytest.approx(expected, rel=1e-15)


def test_accept_joint_nan():
    with pytest.raises(NumericalError):
        accept_joint(float("nan"), 0.0)


def test_accept_refine_symmetric():
    assert accept_refine(-3.25, -3.25) == 1.0


def test_accept_refine_infinities():
    assert accept_refine(-math.inf, 0.0) == 0.0
    assert accept_refine(0.0, -math.inf) == 1.0
    with pytest.raises(NumericalError):
        accept_refine(-math.inf, -math.inf)
    with pytest.raises(NumericalError):
        accept_refine(float("nan"), 0.0)


def test_refine_reduces_to_metropolis(rng):
    # N(0, 1) target with a symmetric random-walk proposal: proposal terms cancel
    sd = 0.7
    for _ in range(200):
        a, b = rng.normal(0, 2, 2)
        log_target = lambda v: -0.5 * v * v
        log_q = lambda to, frm: -0.5 * ((to - frm) / sd) ** 2
        got = accept_refine(log_target(b) + log_q(a, b), log_target(a) + log_q(b, a))
        want = min(1.0, math.exp(-0.5 * b * b) / math.exp(-0.5 * a * a))
        assert got == pytest.approx(want, abs=1e-12)


def test_detailed_balance_toy(rng):
    # skewed target and an asymmetric proposal
    log_pi = lambda v: -abs(v) ** 1.5
    log_q = lambda to, frm: -0.5 * (to - 0.8 * frm) ** 2
    for _ in range(500):
        a, b = rng.normal(0, 2, 2)
        ab = accept_refine(log_pi(b) + log_q(a, b), log_pi(a) + log_q(b, a))
        ba = accept_refine(log_pi(a) + log_q(b, a), log_pi(b) + log_q(a, b))
        lhs = math.exp(log_pi(a) + log_q(b, a)) * ab
        rhs = math.exp(log_pi(b) + log_q(a, b)) * ba
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_joint_is_refine_special_case(rng):
    for _ in range(100):
        ll_star, ll_cur, extra = rng.normal(0, 5, 3)
        assert accept_joint(ll_star, ll_cur) == pytest.approx(accept_refine(ll_star + extra, ll_cur + extra), rel=1e-12)


def test_joint_chain_matches_kalman_one_step():
    motion = LinearGaussianTransition([[0.9]], [[0.5]])
    sensor = LinearGaussianSensor([[1.0]], [[0.3]])
    z = np.array([1.3])
    kf_m, kf_P = kalman_filter([0.2], [[1.0]], motion, sensor, [z])
    cfg = FilterConfig("smcmc_prior", 2000, 100)
    means, variances = [], []
    for run in range(20):
        rng = np.random.default_rng([7, run])
        prior = EmpiricalPosterior(rng.normal(0.2, 1.0, (2000, 1)))
        post = smcmc_prior_step(prior, z, sensor, motion, cfg, rng).particles[:, 0]
        means.append(post.mean())
        variances.append(post.var())
    for vals, target in ((means, kf_m[0, 0]), (variances, kf_P[0, 0, 0])):
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - target) < 3 * se
