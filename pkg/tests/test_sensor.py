import math

import mpmath
import numpy as np
import pytest

from rltbd.errors import DomainError, InterfaceError, ParameterError
from rltbd.selftest import default_sensor, random_states
from rltbd.sensor import (SensorModel, likelihood_fisher, log_likelihood, log_likelihood_gradient,
                          polar_of, predicted_image, psf, simulate_measurement, snr_to_amplitude,
                          write_frame_csv)


def single_cell(sigma_w=1.0):
    return SensorModel(100.0, 1e-4, 10.0, 0.01, 1000.0, 1010.0, -0.005, 0.005, sigma_w, 1.0)


def state_at(r, b, vx=0.0, vy=0.0):
    return np.array([r * math.cos(b), vx, r * math.sin(b), vy])


@pytest.mark.parametrize("sigma_w, snr, amp", [(1e-4, 80, 1.0), (1.0, 0, 1.0), (0.5, 20, 5.0)])
def test_snr_to_amplitude(sigma_w, snr, amp):
    assert snr_to_amplitude(sigma_w, snr) == pytest.approx(amp, rel=1e-12)


def test_snr_rejects_bad_sigma():
    with pytest.raises(ParameterError):
        snr_to_amplitude(0.0, 10)


@pytest.mark.parametrize("xy, expected", [
    ((1000, 0), (1000, 0)),
    ((0, 1000), (1000, math.pi / 2)),
    ((3, 4), (5, 0.9272952180016122)),
])
def test_polar_of(xy, expected):
    r, b = polar_of(np.array([xy[0], 0.0, xy[1], 0.0]))
    assert r == pytest.approx(expected[0], rel=1e-15)
    assert b == pytest.approx(expected[1], rel=1e-15, abs=1e-15)


def test_polar_origin():
    with pytest.raises(DomainError):
        polar_of(np.zeros(4))


def test_default_grid(sensor):
    assert sensor.shape == (8, 209)
    assert sensor.J == 1672
    np.testing.assert_allclose(sensor.range_centers, 22000 + 250 + 500 * np.arange(8))
    # 209 bearing cells of 5 mrad, re-centred on 0
    np.testing.assert_allclose(sensor.bearing_centers, -104.5 * 0.005 + (np.arange(209) + 0.5) * 0.005, atol=1e-15)
    assert sensor.cells.shape == (1672, 2)
    np.testing.assert_array_equal(sensor.cells[209], [sensor.range_centers[1], sensor.bearing_centers[0]])


def test_invalid_sensor_parameters():
    with pytest.raises(ParameterError):
        SensorModel(-1, 1e-4, 500, 5e-3, 22e3, 26e3, -0.5, 0.5, 1e-4, 1)
    with pytest.raises(ParameterError):
        SensorModel(1, 1e-4, 500, 5e-3, 26e3, 22e3, -0.5, 0.5, 1e-4, 1)


def test_psf_at_centroid(sensor):
    j = 3 * 209 + 100
    r, b = sensor.cells[j]
    assert psf(sensor, j, state_at(r, b)) == pytest.approx(1.0, rel=1e-14)


def test_psf_half_power(sensor):
    j = 3 * 209 + 100
    r, b = sensor.cells[j]
    dr = math.sqrt(2 * sensor.R * math.log(2))
    assert psf(sensor, j, state_at(r + dr, b)) == pytest.approx(0.5, rel=1e-9)


def test_psf_separable(sensor):
    j = 4 * 209 + 104
    r, b = sensor.cells[j]
    dr, db = 700.0, 0.01
    both = psf(sensor, j, state_at(r + dr, b + db))
    # r(x) is exact for state_at, so the factors are the 1D PSFs
    fr = math.exp(-dr**2 / (2 * sensor.R))
    fb = math.exp(-db**2 / (2 * sensor.B))
    assert both == pytest.approx(fr * fb, rel=1e-9)


def test_psf_cell_range(sensor):
    with pytest.raises(InterfaceError):
        psf(sensor, sensor.J, state_at(24000, 0))


def test_predicted_image_peak(sensor):
    j = 2 * 209 + 50
    r, b = sensor.cells[j]
    img = predicted_image(sensor, state_at(r, b))
    assert img[j] == pytest.approx(1.0, rel=1e-14)
    assert img.argmax() == j
    grid = img.reshape(sensor.shape)
    # separable decay: rank-one image
    s = np.linalg.svd(grid, compute_uv=False)
    assert s[1] < 1e-12 * s[0]


def test_predicted_image_sum_bound(sensor, rng):
    bound = sensor.amplitude * 2 * math.pi * math.sqrt(sensor.R * sensor.B) / (sensor.range_res * sensor.bearing_res)
    states = list(random_states(sensor, 20, rng)) + [state_at(60000, 0.0), state_at(24000, 2.0)]
    for s in states:
        assert predicted_image(sensor, s).sum() <= bound + sensor.J * 1e-12


def test_simulate_noise_free_limit(sensor):
    s = state_at(24100, 0.02)
    z = simulate_measurement(sensor.with_sigma(1e-300), s, np.random.default_rng(0))
    np.testing.assert_allclose(z, predicted_image(sensor, s), rtol=0, atol=1e-250)


def test_simulate_moments(small, rng):
    n = 10_000
    s = state_at(1210, 0.03)
    z = np.array([simulate_measurement(small, s, rng) for _ in range(n)])
    var = z.var(axis=0, ddof=1)
    assert np.all(np.abs(var / small.sigma_w**2 - 1) < 0.10)
    assert np.all(np.abs(z.mean(axis=0) - predicted_image(small, s)) < 4 * small.sigma_w / math.sqrt(n))


def test_single_cell_loglik_at_mean():
    m = single_cell()
    s = state_at(1005.0, 0.0)
    z = predicted_image(m, s)
    assert log_likelihood(m, z, s) == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_loglik_length_mismatch(sensor):
    with pytest.raises(InterfaceError):
        log_likelihood(sensor, np.zeros(10), state_at(24000, 0))


def per_cell_logpdf(model, z, s):
    yh = predicted_image(model, s)
    return -0.5 * math.log(2 * math.pi * model.sigma_w**2) - (z - yh) ** 2 / (2 * model.sigma_w**2), yh


def test_loglik_difference_cancels(small, rng):
    s1 = state_at(1200, 0.0)
    s2 = state_at(1200, 0.0) + np.array([0.0, 0.0, 60.0, 0.0])
    z = simulate_measurement(small, s1, rng)
    c1, y1 = per_cell_logpdf(small, z, s1)
    c2, y2 = per_cell_logpdf(small, z, s2)
    differ = y1 != y2
    got = log_likelihood(small, z, s1) - log_likelihood(small, z, s2)
    assert got == pytest.approx(np.sum(c1[differ] - c2[differ]), rel=1e-9)


def brute_force_loglik(model, z, s):
    """Product of per-cell densities at 50 significant digits."""
    mpmath.mp.dps = 50
    x, y = mpmath.mpf(float(s[0])), mpmath.mpf(float(s[2]))
    r, b = mpmath.sqrt(x * x + y * y), mpmath.atan2(y, x)
    sig = mpmath.mpf(model.sigma_w)
    prod = mpmath.mpf(1)
    for (rj, bj), zj in zip(model.cells, z):
        h = mpmath.exp(-(mpmath.mpf(rj) - r) ** 2 / (2 * mpmath.mpf(model.R))
                       - (mpmath.mpf(bj) - b) ** 2 / (2 * mpmath.mpf(model.B)))
        mu = mpmath.mpf(model.amplitude) * h
        prod *= mpmath.exp(-(mpmath.mpf(zj) - mu) ** 2 / (2 * sig**2)) / mpmath.sqrt(2 * mpmath.pi * sig**2)
    return float(mpmath.log(prod))


@pytest.mark.parametrize("sigma_w", [1e-1, 1e-2, 1e-4])
def test_loglik_brute_force_oracle(sigma_w, rng):
    m = SensorModel(6.24 * 50.0**2, 7.52 * 0.05**2, 50.0, 0.05, 1000.0, 1200.0, -0.1, 0.1, sigma_w, 1.0)
    assert m.J == 16
    for _ in range(5):
        src = random_states(m, 1, rng)[0]
        s = src + np.array([rng.normal(0, 20), 0, rng.normal(0, 20), 0])
        z = simulate_measurement(m, src, rng)
        want = brute_force_loglik(m, z, s)
        assert log_likelihood(m, z, s) == pytest.approx(want, rel=1e-9)


def fd_grad(model, z, s, h=1e-3):
    g = np.zeros(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        g[i] = (log_likelihood(model, z, s + e) - log_likelihood(model, z, s - e)) / (2 * h)
    return g


def test_gradient_zero_at_noiseless_measurement(sensor, rng):
    for s in random_states(sensor, 10, rng):
        g = log_likelihood_gradient(sensor, predicted_image(sensor, s), s)
        scale = math.sqrt(np.trace(likelihood_fisher(sensor, s)))
        assert np.all(np.abs(g) < 1e-6 * scale)


def test_gradient_finite_differences(sensor, rng):
    for s in random_states(sensor, 100, rng):
        src = s + np.array([rng.uniform(-300, 300), 0, rng.uniform(-300, 300), 0])
        z = simulate_measurement(sensor, src, rng)
        g = log_likelihood_gradient(sensor, z, s)
        g_fd = fd_grad(sensor, z, s)
        assert np.linalg.norm(g - g_fd) / np.linalg.norm(g_fd) < 1e-5
        assert g[1] == 0.0 and g[3] == 0.0


def test_gradient_single_cell_centroid(rng):
    m = single_cell(sigma_w=0.1)
    s = state_at(1005.0, 0.0)
    for _ in range(5):
        z = rng.normal(0, 3, 1)
        np.testing.assert_allclose(log_likelihood_gradient(m, z, s), 0.0, atol=1e-12)


def test_gradient_origin(sensor):
    with pytest.raises(DomainError):
        log_likelihood_gradient(sensor, np.zeros(sensor.J), np.zeros(4))


def test_fisher_structure(sensor, rng):
    for s in random_states(sensor, 20, rng):
        F = likelihood_fisher(sensor, s)
        np.testing.assert_array_equal(F[[1, 3]], 0.0)
        np.testing.assert_array_equal(F[:, [1, 3]], 0.0)
        assert np.max(np.abs(F - F.T)) <= 1e-12 * np.abs(F).max()
        ev = np.linalg.eigvalsh(F)
        assert ev.min() >= -1e-10 * np.trace(F)
        assert np.linalg.matrix_rank(F, tol=1e-9 * np.abs(F).max()) <= 2


def test_fisher_monte_carlo_identity(sensor, rng):
    s = random_states(sensor, 1, rng, margin=0.2)[0]
    n = 10_000
    g = np.array([log_likelihood_gradient(sensor, simulate_measurement(sensor, s, rng), s) for _ in range(n)])
    emp = g.T @ g / n
    F = likelihood_fisher(sensor, s)
    assert np.linalg.norm(F - emp) / np.linalg.norm(emp) < 0.05


@pytest.mark.parametrize("c", [2.0, 3.0, 0.1])
def test_fisher_noise_scaling(sensor, rng, c):
    s = random_states(sensor, 1, rng)[0]
    F1 = likelihood_fisher(sensor, s)
    F2 = likelihood_fisher(sensor.with_sigma(sensor.sigma_w * c), s)
    np.testing.assert_allclose(F2, F1 / c**2, rtol=1e-12, atol=0)


def test_fisher_origin(sensor):
    with pytest.raises(DomainError):
        likelihood_fisher(sensor, np.zeros(4))


def test_noiseless_loglik_peaks_at_truth(sensor):
    s = state_at(24130.0, 0.0123)
    z = predicted_image(sensor, s)
    best = log_likelihood(sensor, z, s)
    for dx in np.linspace(-2, 2, 9):
        for dy in np.linspace(-2, 2, 9):
            if dx == 0 and dy == 0:
                continue
            assert log_likelihood(sensor, z, s + np.array([dx, 0, dy, 0])) < best


def test_gate_matches_full_evaluation_on_differences(rng):
    full, gated = default_sensor(), default_sensor(gate=1e-12)
    for s in random_states(full, 100, rng):
        z = simulate_measurement(full, s + np.array([rng.uniform(-300, 300), 0, rng.uniform(-300, 300), 0]), rng)
        t = s + np.array([rng.normal(0, 5), 0, rng.normal(0, 5), 0])
        d_full = log_likelihood(full, z, t) - log_likelihood(full, z, s)
        d_gate = log_likelihood(gated, z, t) - log_likelihood(gated, z, s)
        assert abs(d_gate - d_full) <= 1e-9 * max(1.0, abs(d_full))


def test_frame_csv(tmp_path, small, rng):
    z = simulate_measurement(small, state_at(1200, 0), rng)
    path = tmp_path / "frame.csv"
    write_frame_csv(path, small, z)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (small.J, 3)
    np.testing.assert_array_equal(data[:, :2], small.cells)
    np.testing.assert_array_equal(data[:, 2], z)
