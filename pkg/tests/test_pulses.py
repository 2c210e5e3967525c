import numpy as np
import pytest

from eprdrive import pulses as pm
from eprdrive.exceptions import ConfigurationError


class TestControlPulse:
    def test_zero_pulse(self):
        p = pm.ControlPulse.zero(6 * np.pi, 48)
        assert p.roughness() == 0.0
        assert p.values_at(1.0) == (0.0, 0.0)

    def test_bound_enforced(self):
        with pytest.raises(ConfigurationError, match="bound"):
            pm.ControlPulse(t_f=1.0, n_segments=2, values_a=np.array([5.0, 0.0]),
                            values_b=np.zeros(2), u_max=4.0)

    def test_mode_consistency(self):
        with pytest.raises(ConfigurationError):
            pm.ControlPulse(t_f=1.0, n_segments=2, values_a=np.array([1.0, 0.0]),
                            values_b=np.zeros(2), mode="symmetric")
        with pytest.raises(ConfigurationError):
            pm.ControlPulse(t_f=1.0, n_segments=2, values_a=np.zeros(2),
                            values_b=np.array([1.0, 0.0]), mode="single_site")

    def test_param_round_trip(self):
        rng = np.random.default_rng(0)
        for mode in pm.MODES:
            n = 6
            size = 2 * n if mode == "free" else n
            params = rng.uniform(-2, 2, size)
            p = pm.ControlPulse.from_params(params, 3.0, n, 4.0, mode)
            assert np.allclose(p.params, params)
            if mode == "symmetric":
                assert np.array_equal(p.values_a, p.values_b)
            if mode == "single_site":
                assert np.all(p.values_b == 0.0)

    def test_segment_lookup(self):
        p = pm.ControlPulse.from_params(np.array([1.0, -1.0, 2.0]), 3.0, 3, 4.0, "symmetric")
        assert p.values_at(0.0) == (1.0, 1.0)
        assert p.values_at(1.5) == (-1.0, -1.0)
        assert p.values_at(3.0) == (2.0, 2.0)

    def test_resonance_seed_period(self):
        p = pm.ControlPulse.resonance_seed(6 * np.pi, 48, u_max=4.0, mode="symmetric")
        # square wave at drive period pi: sign flips every quarter period
        assert set(np.unique(p.values_a)) == {-1.0, 1.0}
        mids = (np.arange(48) + 0.5) * p.segment_length
        assert np.array_equal(p.values_a, np.sign(np.sin(2 * mids)))

    def test_csv_round_trip(self):
        p = pm.ControlPulse.from_params(np.array([0.5, -1.0, 0.0, 2.0]), 2.0, 4, 4.0, "single_site")
        q = pm.ControlPulse.from_csv(p.to_csv(), u_max=4.0, mode="single_site")
        assert q.t_f == p.t_f
        assert np.array_equal(q.values_a, p.values_a)
        assert np.array_equal(q.values_b, p.values_b)
        assert p.to_csv() == q.to_csv()


class TestRoughness:
    def test_spec_example(self):
        # jumps of (0,1,0) cost 2; gradient is (-2, 4, -2)
        vals = np.array([0.0, 1.0, 0.0])
        assert pm.roughness(vals) == 2.0
        assert np.array_equal(pm.roughness_gradient(vals), np.array([-2.0, 4.0, -2.0]))

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(1)
        vals = rng.uniform(-2, 2, 10)
        grad = pm.roughness_gradient(vals)
        eps = 1e-6
        for i in range(10):
            d = np.zeros(10)
            d[i] = eps
            fd = (pm.roughness(vals + d) - pm.roughness(vals - d)) / (2 * eps)
            assert abs(fd - grad[i]) < 1e-8

    def test_single_segment(self):
        assert pm.roughness(np.array([1.5])) == 0.0
        assert np.array_equal(pm.roughness_gradient(np.array([1.5])), np.array([0.0]))
