"""Gradient-based pulse search for the end-time entanglement.

Runs the bounded quasi-Newton optimizer with multi-start seeding on a
reduced bath (fast enough for a demo), compares symmetric against
single-site driving, and shows the adjoint/finite-difference agreement
that backs the gradients.
"""

# %% imports
import numpy as np

from eprdrive import bath as bm
from eprdrive import control as cm

T_F = 4 * np.pi
BATH = bm.discretize(bm.BathSpec(eta=0.1, omega_c=50.0, beta=1.0, n_modes=96,
                                 omega_max=16.0, grid_kind="linear"))


def run(mode, budget=150):
    obj = cm.Objective(t_f=T_F, n_segments=24, u_max=4.0, mode=mode,
                       bath=BATH, beta=1.0, lam=1e-3, quad_nodes=12)
    report = cm.optimize(obj, seed=2024, budget=budget, n_starts=4, report_samples=60)
    return obj, report


# %% symmetric driving
obj_sym, rep_sym = run("symmetric")
print(f"symmetric control:   E_N(t_f) = {rep_sym.best_e_n:.3f} "
      f"after {rep_sym.n_evaluations} evaluations")

# %% single-site driving still works, but less efficiently
obj_one, rep_one = run("single_site")
print(f"single-site control: E_N(t_f) = {rep_one.best_e_n:.3f} "
      f"after {rep_one.n_evaluations} evaluations")
print(f"ordering symmetric >= single-site: {rep_sym.best_e_n >= rep_one.best_e_n}")

# %% the optimizer's bookkeeping
trace = np.array(rep_sym.objective_trace)
best = np.array(rep_sym.best_trace)
print(f"\nraw objective trace: first {trace[0]:.3f}, best seen {best[-1]:.3f}")
print(f"best-so-far curve is non-decreasing: {bool(np.all(np.diff(best) >= 0))}")
print(f"adjoint vs finite differences during the run: "
      f"{rep_sym.gradient_check_max_rel_error:.2e} max relative error")

# %% the winning pulse
pulse = rep_sym.best_pulse
print("\nbest symmetric pulse segments (u in units of the squared trap frequency):")
print(np.array2string(pulse.values_a, precision=2, max_line_width=100))

# %% entanglement build-up along the optimized trajectory
final = rep_sym.final_result
peak = final.times[np.argmax(final.e_n)]
print(f"\nE_N builds up non-monotonically, peaking near t = {peak:.1f} "
      f"(t_f = {T_F:.1f}); final value {final.e_n[-1]:.3f}")
