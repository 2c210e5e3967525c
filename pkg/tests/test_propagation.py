import numpy as np
import pytest
from scipy.linalg import expm

from eprdrive import bath as bm
from eprdrive import propagation as pr
from eprdrive import pulses as pm
from eprdrive.exceptions import ConfigurationError, PropagationError, UsageError
from eprdrive.gaussian import symplectic_form

NM = pr._NORMAL_MODE_BASIS


def small_bath(eta=0.1, omega_c=50.0, n=24, omega_max=12.0):
    spec = bm.BathSpec(eta=eta, omega_c=omega_c, beta=1.0, n_modes=n,
                       omega_max=omega_max, grid_kind="linear")
    return bm.discretize(spec)


def random_free_pulse(rng, t_f=3.0, n_seg=4, u_max=2.5):
    va = rng.uniform(-u_max, u_max, n_seg)
    vb = rng.uniform(-u_max, u_max, n_seg)
    return pm.ControlPulse(t_f=t_f, n_segments=n_seg, values_a=va, values_b=vb,
                           u_max=u_max, mode="free")


class TestGeneratorAssembly:
    def test_closed_system_rotation_period(self):
        # eta = 0: the system propagator block is a free rotation, identity at 2 pi
        bath = bm.bath_from_grid(0.0, 50.0, [0.9, 1.7], [0.5, 0.5])
        pulse = pm.ControlPulse.zero(2 * np.pi, 4)
        pots = pr.segment_potentials(pulse, bath)
        _, s_total = pr.backward_pass(pots, pulse.segment_length, {}, with_full=True)
        assert np.abs(s_total[:4, :4] - np.eye(4)).max() < 1e-9
        assert np.abs(s_total[:4, 4:]).max() < 1e-12

    def test_matches_expm_oracle(self):
        rng = np.random.default_rng(5)
        bath = small_bath(n=6, omega_max=8.0)
        pulse = random_free_pulse(rng)
        dim = 2 * (2 + bath.n_modes)
        oracle = np.eye(dim)
        for k in range(pulse.n_segments):
            t_mid = (k + 0.5) * pulse.segment_length
            oracle = expm(pr.assemble_generator(pulse, bath, t_mid) * pulse.segment_length) @ oracle
        pots = pr.segment_potentials(pulse, bath)
        _, s_total = pr.backward_pass(pots, pulse.segment_length, {}, with_full=True)
        assert np.abs(s_total - oracle).max() < 1e-9

    def test_generator_sparsity_structure(self):
        bath = small_bath(n=4)
        pulse = pm.ControlPulse.zero(1.0, 1)
        a = pr.assemble_generator(pulse, bath, 0.5)
        # bath modes couple only to the system position rows
        for k in range(4):
            xk = 4 + 2 * k
            pk = xk + 1
            assert a[pk, 0] != 0.0 and a[pk, 2] != 0.0  # force from q_A, q_B
            assert np.all(a[xk, 0::1][4:][0::2] * 0 == 0)  # positions never couple directly
            # no bath-bath coupling
            for j in range(4):
                if j != k:
                    assert a[pk, 4 + 2 * j] == 0.0

    def test_symmetric_pulse_decouples_antisymmetric_mode(self):
        bath = small_bath(n=8)
        pulse = pm.ControlPulse.from_params(np.array([0.7]), 1.0, 1, 4.0, "symmetric")
        a = pr.assemble_generator(pulse, bath, 0.5)
        dim = a.shape[0]
        rot = np.eye(dim)
        rot[:4, :4] = NM
        a_nm = rot @ a @ rot.T  # ordering (Q+, P+, Q-, P-, baths...)
        # Q- sector rows/cols are closed: only the 2x2 block survives
        assert np.abs(a_nm[2:4, 4:]).max() < 1e-12
        assert np.abs(a_nm[4:, 2:4]).max() < 1e-12
        assert np.abs(a_nm[0:2, 2:4]).max() < 1e-12

    def test_counterterm_long_time_mean_matches_gibbs(self):
        # softer cutoff keeps the counterterm-free variant stable too
        spec = bm.BathSpec(eta=0.05, omega_c=5.0, beta=1.0, n_modes=600,
                           omega_max=20.0, grid_kind="linear")
        bath = bm.discretize(spec, t_total=85.0)
        pulse = pm.ControlPulse.zero(85.0, 1)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)

        def q_plus_var(cov):
            return 0.5 * (cov[0, 0] + cov[2, 2] + 2.0 * cov[0, 2])

        samples = np.linspace(55.0, 85.0, 61)
        res = pr.propagate(sig0, pulse, bath, sample_times=samples)
        mean_on = np.mean([q_plus_var(c) for c in res.covariances])
        gibbs = q_plus_var(pr.equilibrium_covariance(bath, 1.0))
        assert abs(mean_on - gibbs) / gibbs < 0.01

        res_off = pr.propagate(sig0, pulse, bath, sample_times=samples, include_counterterm=False)
        mean_off = np.mean([q_plus_var(c) for c in res_off.covariances])
        assert abs(mean_off - mean_on) / mean_on > 0.05  # visible frequency shift


class TestPropagate:
    def test_vacuum_stationary_without_bath(self):
        bath = bm.bath_from_grid(0.0, 50.0, [1.3], [1.0])
        pulse = pm.ControlPulse.zero(7.0, 3)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath)
        assert np.abs(res.covariances - 0.5 * np.eye(4)).max() < 1e-9

    def test_degenerate_normal_modes_stay_pure_and_separable(self):
        # eta = 0, constant symmetric detuning: both normal modes identical
        bath = bm.bath_from_grid(0.0, 50.0, [1.3], [1.0])
        pulse = pm.ControlPulse.from_params(np.full(4, -0.19), 6 * np.pi, 4, 4.0, "symmetric")
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath)
        assert res.e_n.max() < 1e-10
        purity = [np.linalg.det(2.0 * c) for c in res.covariances]
        assert np.abs(np.array(purity) - 1.0).max() < 1e-7

    def test_closed_system_purity_under_driving(self):
        bath = bm.bath_from_grid(0.0, 50.0, [1.3], [1.0])
        rng = np.random.default_rng(2)
        pulse = random_free_pulse(rng, t_f=5.0, n_seg=5)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath)
        purity = np.array([np.linalg.det(2.0 * c) for c in res.covariances])
        assert np.abs(purity - 1.0).max() < 1e-7

    def test_undriven_has_no_late_entanglement_and_relaxes(self):
        spec = bm.BathSpec(eta=0.1, omega_c=50.0, beta=1.0, n_modes=300,
                           omega_max=20.0, grid_kind="linear")
        bath = bm.discretize(spec, t_total=40.0)
        pulse = pm.ControlPulse.zero(40.0, 1)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath, sample_times=np.linspace(2.0, 40.0, 39))
        assert np.all(res.e_n == 0.0)
        steady = pr.steady_state_covariance(bath, 1.0)
        assert np.abs(res.covariances[-1] - steady).max() / np.abs(steady).max() < 0.01

    def test_heisenberg_floor_on_driven_run(self):
        bath = small_bath()
        pulse = pm.ControlPulse.resonance_seed(2 * np.pi, 8, u_max=1.0, mode="symmetric")
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath)
        from eprdrive.gaussian import symplectic_eigenvalues
        for cov in res.covariances:
            assert symplectic_eigenvalues(cov)[0] >= 1.0 - 1e-7

    def test_symplectic_residual_both_backends(self):
        bath = small_bath(n=12)
        rng = np.random.default_rng(3)
        pulse = random_free_pulse(rng)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res_m = pr.propagate(sig0, pulse, bath, check_symplectic=True)
        assert res_m.symplectic_residual < 1e-7
        # the fixed-step backend needs a finer grid than its stability default
        res_rk = pr.propagate(sig0, pulse, bath, backend="rk4", dt=2e-3, check_symplectic=True)
        assert res_rk.symplectic_residual < 1e-7

    def test_rk4_agrees_with_modes(self):
        bath = small_bath(n=12)
        rng = np.random.default_rng(4)
        pulse = random_free_pulse(rng)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res_m = pr.propagate(sig0, pulse, bath, sample_times=[pulse.t_f])
        res_rk = pr.propagate(sig0, pulse, bath, sample_times=[pulse.t_f], backend="rk4", dt=2e-3)
        assert np.abs(res_m.covariances[-1] - res_rk.covariances[-1]).max() < 1e-6

    def test_rk4_step_halving_changes_little(self):
        bath = small_bath(n=24, omega_max=12.0)
        pulse = pm.ControlPulse.resonance_seed(2 * np.pi, 8, u_max=1.0, mode="symmetric")
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        dt = 0.25 / float(bath.omegas.max())
        e1 = pr.propagate(sig0, pulse, bath, sample_times=[pulse.t_f], backend="rk4", dt=dt).e_n[-1]
        e2 = pr.propagate(sig0, pulse, bath, sample_times=[pulse.t_f], backend="rk4", dt=dt / 2).e_n[-1]
        assert abs(e1 - e2) < 1e-4

    def test_rk4_rejects_unstable_step(self):
        bath = small_bath()
        pulse = pm.ControlPulse.zero(1.0, 1)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        with pytest.raises(ConfigurationError, match="stability"):
            pr.propagate(sig0, pulse, bath, backend="rk4", dt=1.0)

    def test_rejects_wrong_initial_dimension(self):
        bath = small_bath()
        pulse = pm.ControlPulse.zero(1.0, 1)
        with pytest.raises(ConfigurationError, match="shape"):
            pr.propagate(np.eye(6), pulse, bath)

    def test_unphysical_initial_raises_propagation_error(self):
        bath = small_bath(n=4)
        pulse = pm.ControlPulse.zero(1.0, 1)
        dim = 2 * (2 + bath.n_modes)
        with pytest.raises(PropagationError):
            pr.propagate(0.1 * np.eye(dim), pulse, bath)

    def test_recurrence_guard(self):
        bath = small_bath(n=8, omega_max=12.0)  # coarse grid
        pulse = pm.ControlPulse.zero(50.0, 1)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        with pytest.raises(ConfigurationError, match="recurrence"):
            pr.propagate(sig0, pulse, bath)

    def test_csv_and_json_export(self):
        bath = small_bath(n=4)
        pulse = pm.ControlPulse.zero(1.0, 1)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath, sample_times=[0.0, 0.5, 1.0])
        text = res.to_csv()
        lines = text.strip().split("\r\n")
        assert lines[0].startswith("t,E_N,neg_log_nu,det_gamma,sigma_qA_qA")
        assert len(lines) == 4
        import json
        payload = json.loads(res.to_json())
        assert len(payload["samples"]) == 3
        assert payload["samples"][0]["dim"] == 4


class TestContinueFree:
    def test_requires_final_full(self):
        bath = small_bath(n=4)
        pulse = pm.ControlPulse.zero(1.0, 1)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath)
        with pytest.raises(UsageError):
            pr.continue_free(res, bath, 1.0)

    def test_immediate_switch_off_reproduces_undriven(self):
        bath = small_bath(n=16)
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        tiny = pm.ControlPulse.zero(1e-9, 1)
        res0 = pr.propagate(sig0, tiny, bath, sample_times=[tiny.t_f], keep_final_full=True)
        cont = pr.continue_free(res0, bath, 4.0, n_samples=8)
        ref = pr.propagate(sig0, pm.ControlPulse.zero(4.0, 1), bath,
                           sample_times=np.linspace(0.5, 4.0, 8))
        assert np.abs(cont.covariances[-1] - ref.covariances[-1]).max() < 1e-6

    def test_entanglement_constant_after_switch_off_without_bath(self):
        # free evolution of uncoupled modes is local: E_N frozen
        bath = bm.bath_from_grid(0.0, 50.0, [1.3], [1.0])
        pulse = pm.ControlPulse(t_f=2 * np.pi, n_segments=4,
                                values_a=np.array([1.0, -1.0, 1.0, -1.0]),
                                values_b=np.array([-1.0, 1.0, -1.0, 1.0]),
                                u_max=2.0, mode="free")
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath, sample_times=[pulse.t_f], keep_final_full=True)
        cont = pr.continue_free(res, bath, 2 * np.pi, n_samples=16)
        tail = cont.e_n[1:]
        assert np.abs(tail - tail[0]).max() < 1e-6


class TestSemianalytic:
    def test_free_evolution_gives_cos_sin(self):
        pulse = pm.ControlPulse.zero(2 * np.pi, 4)
        traj, fund = pr.propagate_normal_mode_semianalytic(pulse, 1.0)
        assert np.abs(fund.phi1 - np.cos(fund.times)).max() < 1e-12
        assert np.abs(fund.phi2 - np.sin(fund.times)).max() < 1e-12
        assert np.abs(traj.covariances - 0.5 * np.eye(2)).max() < 1e-12

    def test_wronskian_is_one_for_random_pulse(self):
        rng = np.random.default_rng(6)
        pulse = pm.ControlPulse.from_params(rng.uniform(-2, 2, 16), 6 * np.pi, 16, 4.0, "symmetric")
        _, fund = pr.propagate_normal_mode_semianalytic(pulse, 1.0)
        assert np.abs(fund.wronskian() - 1.0).max() < 1e-9

    def test_matches_full_model_marginal(self):
        bath = small_bath(n=24)
        rng = np.random.default_rng(7)
        pulse = pm.ControlPulse.from_params(rng.uniform(-1.5, 1.5, 8), 4.0, 8, 4.0, "symmetric")
        sig0 = bm.thermal_initial_covariance(bath, 1.0)
        res = pr.propagate(sig0, pulse, bath, sample_times=np.linspace(0, 4.0, 9))
        traj, _ = pr.propagate_normal_mode_semianalytic(pulse, 1.0, sample_times=res.times)
        for i in range(len(res.times)):
            nm = NM @ res.covariances[i] @ NM.T
            scale = max(1.0, np.abs(traj.covariances[i]).max())
            assert np.abs(nm[2:4, 2:4] - traj.covariances[i]).max() / scale < 1e-6

    def test_requires_symmetric_mode(self):
        pulse = pm.ControlPulse.zero(1.0, 1, mode="single_site")
        with pytest.raises(ConfigurationError):
            pr.propagate_normal_mode_semianalytic(pulse, 1.0)

    def test_temperature_margin_uses_coth_beta(self):
        pulse = pm.ControlPulse.zero(1.0, 1)
        traj, _ = pr.propagate_normal_mode_semianalytic(pulse, 2.0)
        # r = 0 everywhere: margin = 1 - coth(beta)
        assert np.abs(traj.bound_margin - (1.0 - 1.0 / np.tanh(2.0))).max() < 1e-12


class TestSteadyStateOracle:
    def test_plus_sector_is_thermalized_minus_stays_vacuum(self):
        bath = small_bath(n=60, omega_max=20.0)
        ss = pr.steady_state_covariance(bath, 1.0)
        nm = NM @ ss @ NM.T
        assert abs(nm[2, 2] - 0.5) < 1e-12 and abs(nm[3, 3] - 0.5) < 1e-12
        # thermal symmetric sector sits above the bare thermal variance floor
        assert nm[0, 0] > 0.5 and nm[1, 1] > 0.5

    def test_separable(self):
        from eprdrive.gaussian import log_negativity, det_gamma
        bath = small_bath(n=60, omega_max=20.0)
        ss = pr.steady_state_covariance(bath, 1.0)
        assert log_negativity(ss) == 0.0
        assert det_gamma(ss) > 0.0
