import numpy as np
import pytest
from scipy.integrate import quad

from eprdrive import bath as b
from eprdrive.exceptions import ConfigurationError


def default_spec(**kw):
    base = dict(eta=0.1, omega_c=50.0, beta=1.0, n_modes=1200, omega_max=200.0, grid_kind="composite")
    base.update(kw)
    return b.BathSpec(**base)


class TestSpectralDensity:
    def test_zero_frequency(self):
        assert b.spectral_density(default_spec(), 0.0) == 0.0

    def test_unit_frequency(self):
        val = float(b.spectral_density(default_spec(), 1.0))
        assert abs(val - 0.1 / (1.0 + 1.0 / 2500.0) ** 2) < 1e-15
        assert abs(val - 0.0999200) < 1e-7

    def test_at_cutoff(self):
        assert abs(float(b.spectral_density(default_spec(), 50.0)) - 1.25) < 1e-12


class TestDiscretize:
    def test_single_mode_coupling(self):
        # one mode at w=1 with unit cell: c^2 = (2/pi) J(1)
        bath = b.bath_from_grid(0.1, 50.0, [1.0], [1.0])
        c_sq = bath.couplings[0] ** 2
        expected = (2.0 / np.pi) * 0.1 / (1.0 + 1.0 / 2500.0) ** 2
        assert abs(c_sq - expected) < 1e-12
        assert abs(c_sq - 0.063611) < 1e-6

    def test_counterterm_against_quadrature(self):
        spec = default_spec(n_modes=2000)
        bath = b.discretize(spec)
        integrand = lambda w: float(b.spectral_density(spec, w)) / w
        oracle, _ = quad(integrand, 0.0, 200.0, limit=200)
        oracle /= np.pi
        assert abs(bath.counterterm_sum - oracle) / oracle < 0.01
        # untruncated analytic value for reference: eta * omega_c / 4
        assert abs(oracle - 1.25) / 1.25 < 0.01

    def test_counterterm_refinement_stable(self):
        mu_1 = b.discretize(default_spec(n_modes=1200)).counterterm_sum
        mu_2 = b.discretize(default_spec(n_modes=2400)).counterterm_sum
        assert abs(mu_2 - mu_1) / mu_1 < 0.005

    def test_grid_invariants(self):
        bath = b.discretize(default_spec())
        assert np.all(bath.omegas > 0)
        assert np.all(np.diff(bath.omegas) > 0)
        assert np.all(bath.couplings >= 0)
        assert np.all(bath.masses == 1.0)
        assert bath.n_modes == 1200

    def test_linear_grid(self):
        bath = b.discretize(default_spec(n_modes=100, omega_max=20.0, grid_kind="linear"))
        widths = np.diff(bath.omegas)
        assert np.allclose(widths, widths[0])

    def test_recurrence_guard(self):
        spec = default_spec()
        b.discretize(spec, t_total=6 * np.pi)  # fine at defaults
        with pytest.raises(ConfigurationError, match="n_modes"):
            b.discretize(spec, t_total=500.0)

    def test_spec_validation(self):
        with pytest.raises(ConfigurationError):
            default_spec(eta=-0.1)
        with pytest.raises(ConfigurationError):
            default_spec(beta=0.0)
        with pytest.raises(ConfigurationError):
            default_spec(grid_kind="chebyshev")


class TestThermalInitialCovariance:
    def test_zero_temperature_limit(self):
        bath = b.bath_from_grid(0.1, 50.0, [0.5, 1.0, 2.0], [0.5, 0.5, 1.0])
        sigma = b.thermal_initial_covariance(bath, beta=1e6)
        for k, w in enumerate(bath.omegas):
            assert abs(sigma[4 + 2 * k, 4 + 2 * k] - 1.0 / (2.0 * w)) < 1e-9
            assert abs(sigma[5 + 2 * k, 5 + 2 * k] - w / 2.0) < 1e-9

    def test_unit_frequency_beta_one(self):
        bath = b.bath_from_grid(0.1, 50.0, [1.0], [1.0])
        sigma = b.thermal_initial_covariance(bath, beta=1.0)
        expected = (1.0 / np.tanh(0.5)) / 2.0
        assert abs(sigma[4, 4] - expected) < 1e-12
        assert abs(sigma[5, 5] - expected) < 1e-12
        assert abs(expected - 1.0819767) < 1e-7

    def test_block_diagonal(self):
        bath = b.bath_from_grid(0.1, 50.0, [1.0, 3.0], [1.0, 1.0])
        sigma = b.thermal_initial_covariance(bath, beta=2.0)
        off = sigma - np.diag(np.diag(sigma))
        assert np.all(off == 0.0)
        assert np.all(np.diag(sigma)[:4] == 0.5)


class TestCsvDump:
    def test_round_trip(self):
        bath = b.discretize(default_spec(n_modes=50, omega_max=20.0))
        text = bath.to_csv()
        lines = text.strip().split("\r\n")
        assert lines[0] == "omega,coupling"
        parsed = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
        assert np.array_equal(parsed[:, 0], bath.omegas)
        assert np.array_equal(parsed[:, 1], bath.couplings)
