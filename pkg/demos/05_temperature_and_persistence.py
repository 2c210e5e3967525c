"""Temperature robustness and switch-off persistence.

The squeezing threshold cosh(2 r_-) > coth(beta) becomes harder to beat
as the reservoir gets hotter, but optimized driving stays effective far
above the quantum regime. Once created, the entanglement survives
switching the control off: free local evolution cannot destroy it, and
the weak bath degrades it only slowly.
"""

# %% imports
import numpy as np

from eprdrive import analysis as an
from eprdrive import bath as bm
from eprdrive import control as cm
from eprdrive import propagation as pr
from eprdrive import pulses as pm

T_F = 4 * np.pi
N_SEG = 24


def best_for_beta(beta, budget=120):
    bath = bm.discretize(bm.BathSpec(eta=0.1, omega_c=50.0, beta=beta, n_modes=96,
                                     omega_max=16.0, grid_kind="linear"))
    obj = cm.Objective(t_f=T_F, n_segments=N_SEG, u_max=4.0, mode="symmetric",
                       bath=bath, beta=beta, lam=1e-3, quad_nodes=12)
    report = cm.optimize(obj, seed=77, budget=budget, n_starts=3, report_samples=40)
    return bath, report


# %% a small temperature ladder (same optimizer budget per point)
print("beta    threshold r*   best E_N")
reports = {}
for beta in [1.0, 0.5, 0.1]:
    bath, report = best_for_beta(beta)
    reports[beta] = (bath, report)
    print(f"{beta:4.1f}    {an.squeezing_threshold(beta):8.4f}     {report.best_e_n:7.3f}")

# %% hotter reservoirs demand more squeezing but still entangle
print("\ncolder is never worse (within optimizer noise):",
      reports[1.0][1].best_e_n >= reports[0.5][1].best_e_n * 0.9 >= 0,
      "and even beta = 0.1 gives E_N =", round(reports[0.1][1].best_e_n, 3))

# %% persistence after switching the control off at t_f (beta = 0.1)
bath, report = reports[0.1]
sigma0 = bm.thermal_initial_covariance(bath, 0.1)
driven = pr.propagate(sigma0, report.best_pulse, bath,
                      sample_times=np.linspace(0.0, T_F, 60), keep_final_full=True)
total = pr.continue_free(driven, bath, 2 * np.pi, n_samples=30)
after = total.e_n[total.times > T_F]
print(f"\nE_N at switch-off: {driven.e_n[-1]:.3f}")
print(f"E_N over the following 2 pi of free evolution: min {after.min():.3f}, "
      f"max {after.max():.3f} (stays positive)")

# %% contrast: without the bath the entanglement would be frozen exactly
frozen = bm.bath_from_grid(0.0, 50.0, [1.0], [1.0])
pulse = pm.ControlPulse(t_f=T_F, n_segments=N_SEG,
                        values_a=report.best_pulse.values_a,
                        values_b=-report.best_pulse.values_a,
                        u_max=4.0, mode="free")
closed = pr.propagate(bm.thermal_initial_covariance(frozen, 0.1), pulse, frozen,
                      sample_times=[T_F], keep_final_full=True)
tail = pr.continue_free(closed, frozen, 2 * np.pi, n_samples=20)
drift = np.abs(tail.e_n[1:] - tail.e_n[1]).max()
print(f"\nclosed-system check: E_N drift after switch-off = {drift:.2e} "
      "(free evolution of uncoupled modes is a local unitary)")
