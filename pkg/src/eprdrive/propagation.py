"""Exact time evolution of the driven system+reservoir covariance.

The total model is quadratic with piecewise-constant stiffness, so each
pulse segment has an exact symplectic propagator. With the potential
matrix diagonalized as V = U diag(lam) U^T, the segment propagator in
(all q, all p) grouping is

    E(dt) = [[U c U^T, U s U^T],
             [U e U^T, U c U^T]],

where per mode c = cos(w dt), s = sin(w dt)/w, e = -lam * s for
lam = w^2 > 0, with the obvious hyperbolic continuation for inverted
modes (lam < 0). Reduced covariances at the sample times only need the
four system rows of the accumulated propagator,

    sigma_sys(t) = R(t) sigma_0 R(t)^T,   R(t) = P E_k(dt) S_{k-1} ... S_1,

which are assembled by a single backward pass over the segments acting
on thin column blocks; the full D x D propagator is only formed when a
final full covariance or a symplecticity check is requested.

A fixed-step RK4 integrator for d(sigma)/dt = A sigma + sigma A^T is
provided as an independent backend behind the same interface.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .bath import DiscretizedBath
from .exceptions import ConfigurationError, PropagationError, UsageError
from .gaussian import symplectic_eigenvalues, symplectic_form
from .pulses import ControlPulse

HEISENBERG_FLOOR_TOL = 1e-7
_SERIES_TAYLOR_CUT = 1e-8


# ---------------------------------------------------------------------------
# Generator assembly
# ---------------------------------------------------------------------------


def potential_matrix(u_a: float, u_b: float, bath: DiscretizedBath, include_counterterm: bool = True) -> np.ndarray:
    """Stiffness matrix V of the coupled model, H = p^T p / 2 + q^T V q / 2.

    Oscillator order (A, B, bath_1..bath_N). The counterterm adds
    mu (q_A + q_B)^2, i.e. 2 mu on each system diagonal and on the A-B
    cross entry, which exactly cancels the static reservoir-induced
    shift of the symmetric coordinate in the discrete model.
    """
    n = 2 + bath.n_modes
    v = np.zeros((n, n))
    mu = bath.counterterm_sum if include_counterterm else 0.0
    v[0, 0] = 1.0 + u_a + 2.0 * mu
    v[1, 1] = 1.0 + u_b + 2.0 * mu
    v[0, 1] = v[1, 0] = 2.0 * mu
    v[0, 2:] = v[2:, 0] = bath.couplings
    v[1, 2:] = v[2:, 1] = bath.couplings
    v[np.arange(2, n), np.arange(2, n)] = bath.omegas**2
    return v


def assemble_generator(pulse: ControlPulse, bath: DiscretizedBath, t: float,
                       include_counterterm: bool = True) -> np.ndarray:
    """Phase-space drift matrix A(t) with xdot = A x, x = (q_A, p_A, q_B, p_B, x_1, p_1, ...).

    A = Omega H with H the symmetric Hamiltonian matrix; nonzeros sit on
    the oscillator 2x2 blocks and the (q_A + q_B) <-> x_k coupling rows.
    """
    u_a, u_b = pulse.values_at(t)
    return _generator_from_potential(potential_matrix(u_a, u_b, bath, include_counterterm))


def _generator_from_potential(v: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    a = np.zeros((2 * n, 2 * n))
    qs = np.arange(0, 2 * n, 2)
    ps = np.arange(1, 2 * n, 2)
    a[qs, ps] = 1.0  # qdot = p (unit masses)
    a[np.ix_(ps, qs)] = -v  # pdot = -V q
    return a


# ---------------------------------------------------------------------------
# Exact segment propagators in the eigenbasis of V
# ---------------------------------------------------------------------------


def _mode_factors(lam: np.ndarray, dt: float):
    """Per-mode (c, s) with c = cos(w dt), s = sin(w dt)/w, continued through lam <= 0."""
    z = lam * dt * dt
    c = np.empty_like(lam)
    s = np.empty_like(lam)
    pos = z > _SERIES_TAYLOR_CUT
    neg = z < -_SERIES_TAYLOR_CUT
    mid = ~(pos | neg)
    if np.any(pos):
        w = np.sqrt(lam[pos])
        c[pos] = np.cos(w * dt)
        s[pos] = np.sin(w * dt) / w
    if np.any(neg):
        k = np.sqrt(-lam[neg])
        c[neg] = np.cosh(k * dt)
        s[neg] = np.sinh(k * dt) / k
    if np.any(mid):
        zm = z[mid]
        c[mid] = 1.0 - zm / 2.0 + zm * zm / 24.0
        s[mid] = dt * (1.0 - zm / 6.0 + zm * zm / 120.0)
    return c, s


def _mode_factors_multi(lam: np.ndarray, dts: np.ndarray):
    """(c, s) factor tables of shape (n_modes, n_times)."""
    z = lam[:, None] * dts[None, :] ** 2
    c = np.empty_like(z)
    s = np.empty_like(z)
    dt_grid = np.broadcast_to(dts[None, :], z.shape)
    pos = z > _SERIES_TAYLOR_CUT
    neg = z < -_SERIES_TAYLOR_CUT
    mid = ~(pos | neg)
    lam_grid = np.broadcast_to(lam[:, None], z.shape)
    if np.any(pos):
        w = np.sqrt(lam_grid[pos])
        c[pos] = np.cos(w * dt_grid[pos])
        s[pos] = np.sin(w * dt_grid[pos]) / w
    if np.any(neg):
        k = np.sqrt(-lam_grid[neg])
        c[neg] = np.cosh(k * dt_grid[neg])
        s[neg] = np.sinh(k * dt_grid[neg]) / k
    if np.any(mid):
        zm = z[mid]
        c[mid] = 1.0 - zm / 2.0 + zm * zm / 24.0
        s[mid] = dt_grid[mid] * (1.0 - zm / 6.0 + zm * zm / 120.0)
    return c, s


class SegmentModes:
    """Eigen-decomposed propagator of one constant-stiffness segment."""

    def __init__(self, v: np.ndarray, length: float):
        self.length = length
        self.lam, self.basis = np.linalg.eigh(v)

    def apply(self, block: np.ndarray, dt: float | None = None) -> np.ndarray:
        """E(dt) @ block for a (2n, k) block in grouped (q-half, p-half) layout."""
        c, s, e, aq, ap = self._project(block, dt)
        u = self.basis
        return np.concatenate([u @ (c * aq + s * ap), u @ (e * aq + c * ap)])

    def apply_transpose(self, block: np.ndarray, dt: float | None = None) -> np.ndarray:
        """E(dt)^T @ block for a (2n, k) block in grouped layout."""
        c, s, e, aq, ap = self._project(block, dt)
        u = self.basis
        return np.concatenate([u @ (c * aq + e * ap), u @ (s * aq + c * ap)])

    def _project(self, block, dt):
        if dt is None:
            dt = self.length
        n = len(self.lam)
        u = self.basis
        aq = u.T @ block[:n]
        ap = u.T @ block[n:]
        c, s = _mode_factors(self.lam, dt)
        e = -self.lam * s
        return c[:, None], s[:, None], e[:, None], aq, ap

    def apply_transpose_batch(self, block: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        """E(delta)^T @ block for every delta at once.

        ``block`` is (2n, k) grouped; the result is (2n, len(deltas) * k)
        with the k columns of delta_0 first. Two large matmuls replace
        len(deltas) small ones.
        """
        n = len(self.lam)
        u = self.basis
        aq = u.T @ block[:n]  # (n, k)
        ap = u.T @ block[n:]
        c, s = _mode_factors_multi(self.lam, np.asarray(deltas, dtype=float))  # (n, nd)
        e = -self.lam[:, None] * s
        k = block.shape[1]
        nd = len(deltas)
        top = c[:, :, None] * aq[:, None, :] + e[:, :, None] * ap[:, None, :]
        bot = s[:, :, None] * aq[:, None, :] + c[:, :, None] * ap[:, None, :]
        return np.concatenate([u @ top.reshape(n, nd * k), u @ bot.reshape(n, nd * k)])


def _group(block: np.ndarray) -> np.ndarray:
    return np.concatenate([block[0::2], block[1::2]])


def _ungroup(block: np.ndarray) -> np.ndarray:
    out = np.empty_like(block)
    n = block.shape[0] // 2
    out[0::2] = block[:n]
    out[1::2] = block[n:]
    return out


def _ungroup_matrix(m: np.ndarray) -> np.ndarray:
    """Undo the grouped layout on both rows and columns."""
    return _ungroup(_ungroup(m).T).T


def segment_potentials(pulse: ControlPulse, bath: DiscretizedBath, include_counterterm: bool = True):
    return [
        potential_matrix(pulse.values_a[k], pulse.values_b[k], bath, include_counterterm)
        for k in range(pulse.n_segments)
    ]


def backward_pass(potentials, seg_length: float, requests, with_full: bool = False):
    """Assemble S_1^T ... S_{k-1}^T E_k(delta)^T @ seed for many (k, delta, seed) requests.

    ``requests`` maps segment index -> list of (delta, seed) with seeds of
    shape (D, j) in the natural interleaved row ordering. Returns the
    transformed blocks in the same structure (interleaved again) plus,
    when ``with_full`` is set, the full propagator S = S_m ... S_1.

    One eigendecomposition per segment; only thin column blocks are
    ever propagated unless ``with_full`` asks for the D x D product.
    """
    m = len(potentials)
    dim = 2 * potentials[0].shape[0]
    owners: list[tuple[int, int]] = []  # (segment, request position) in append order
    buf = np.empty((dim, 0))
    full = np.eye(dim) if with_full else None
    for j in range(m - 1, -1, -1):
        seg = SegmentModes(potentials[j], seg_length)
        if buf.shape[1]:
            buf = seg.apply_transpose(buf)
        if full is not None:
            full = seg.apply_transpose(full)
        new_cols = []
        for pos, (delta, seed) in enumerate(requests.get(j, [])):
            grouped = _group(np.asarray(seed, dtype=float))
            if np.ndim(delta) == 0:
                new_cols.append(seg.apply_transpose(grouped, float(delta)))
            else:
                new_cols.append(seg.apply_transpose_batch(grouped, np.asarray(delta, dtype=float)))
            owners.append((j, pos))
        if new_cols:
            buf = np.concatenate([buf] + new_cols, axis=1) if buf.shape[1] else np.concatenate(new_cols, axis=1)
    # slice the buffer back apart; widths follow the append order
    out: dict[int, list[np.ndarray]] = {k: [None] * len(v) for k, v in requests.items()}
    col = buf.shape[1]
    for (j, pos) in reversed(owners):
        delta, seed = requests[j][pos]
        width = np.asarray(seed).shape[1] * (1 if np.ndim(delta) == 0 else len(delta))
        out[j][pos] = _ungroup(buf[:, col - width : col])
        col -= width
    s_total = None
    if full is not None:
        # buffered block is S_total^T in grouped layout on both sides
        s_total = _ungroup_matrix(full).T
    return out, s_total


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

_SIGMA_LABELS = [
    "sigma_qA_qA", "sigma_qA_pA", "sigma_qA_qB", "sigma_qA_pB",
    "sigma_pA_pA", "sigma_pA_qB", "sigma_pA_pB",
    "sigma_qB_qB", "sigma_qB_pB", "sigma_pB_pB",
]
_TRIU = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]


@dataclass
class PropagationResult:
    """Sampled reduced covariances and derived diagnostics of one run."""

    times: np.ndarray
    covariances: np.ndarray  # (n_samples, 4, 4)
    e_n: np.ndarray
    neg_log_nu: np.ndarray
    det_gamma: np.ndarray
    system_energy: np.ndarray
    final_time: float
    symplectic_residual: float | None = None
    final_full: np.ndarray | None = None

    def final_reduced(self) -> np.ndarray:
        return self.covariances[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,E_N,neg_log_nu,det_gamma," + ",".join(_SIGMA_LABELS) + "\r\n")
        for i, t in enumerate(self.times):
            sig = self.covariances[i]
            cells = [float(t), float(self.e_n[i]), float(self.neg_log_nu[i]), float(self.det_gamma[i])]
            cells += [float(sig[a, b]) for a, b in _TRIU]
            buf.write(",".join(repr(x) for x in cells) + "\r\n")
        return buf.getvalue()

    def to_json(self) -> str:
        samples = []
        for i, t in enumerate(self.times):
            samples.append({
                "time": float(t),
                "dim": 4,
                "entries": [float(x) for x in self.covariances[i].ravel()],
                "e_n": float(self.e_n[i]),
                "neg_log_nu": float(self.neg_log_nu[i]),
                "det_gamma": float(self.det_gamma[i]),
            })
        payload = {
            "final_time": float(self.final_time),
            "symplectic_residual": None if self.symplectic_residual is None else float(self.symplectic_residual),
            "samples": samples,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _derived_series(times, covs, pulse):
    from .gaussian import det_gamma as _dg, neg_log_nu as _nln

    n = len(times)
    e_n = np.empty(n)
    nln = np.empty(n)
    dg = np.empty(n)
    energy = np.empty(n)
    for i in range(n):
        sig = covs[i]
        val = _nln(sig)
        nln[i] = val
        e_n[i] = max(0.0, val)
        dg[i] = _dg(sig)
        u_a, u_b = pulse.values_at(min(times[i], pulse.t_f))
        energy[i] = 0.5 * (sig[1, 1] + sig[3, 3] + (1 + u_a) * sig[0, 0] + (1 + u_b) * sig[2, 2])
    return e_n, nln, dg, energy


def _validate_reduced(sig: np.ndarray, t: float) -> None:
    sym_err = np.abs(sig - sig.T).max()
    if sym_err > 1e-10 * max(1.0, np.abs(sig).max()):
        raise PropagationError(f"reduced covariance lost symmetry at t={t:g}", time=t)
    try:
        nus = symplectic_eigenvalues(sig)
    except Exception as exc:
        raise PropagationError(f"reduced covariance unphysical at t={t:g}: {exc}", time=t) from None
    # roundoff allowance: the symplectic spectrum of a strongly squeezed
    # state is only determined to eps * cond(sigma) in double precision
    eigs = np.linalg.eigvalsh(sig)
    eps = np.finfo(float).eps
    cond = eigs[-1] / eigs[0] if eigs[0] > eps * eigs[-1] else 1.0 / eps
    floor_tol = max(HEISENBERG_FLOOR_TOL, 64.0 * eps * cond)
    if nus[0] < 1.0 - floor_tol:
        raise PropagationError(
            f"Heisenberg floor violated at t={t:g}: min symplectic eigenvalue {nus[0]:.12g}", time=t
        )


# ---------------------------------------------------------------------------
# Main propagation entry points
# ---------------------------------------------------------------------------


def default_sample_times(t_f: float, n: int = 200) -> np.ndarray:
    return np.linspace(0.0, t_f, n + 1)


def _system_seed(dim: int) -> np.ndarray:
    seed = np.zeros((dim, 4))
    for col, row in enumerate(range(4)):
        seed[row, col] = 1.0
    return seed


def _resolve_initial(initial, dim):
    entries = getattr(initial, "entries", initial)
    entries = np.asarray(entries, dtype=float)
    if entries.shape != (dim, dim):
        raise ConfigurationError(
            f"initial covariance has shape {entries.shape}, expected {(dim, dim)} for this bath"
        )
    return entries


def propagate(initial, pulse: ControlPulse, bath: DiscretizedBath, *,
              sample_times=None, backend: str = "modes", dt: float | None = None,
              include_counterterm: bool = True, keep_final_full: bool = False,
              check_symplectic: bool = False, validate: bool = True) -> PropagationResult:
    """Evolve the full covariance under the pulse and return reduced samples.

    Integrates d(sigma)/dt = A(t) sigma + sigma A(t)^T. The default
    ``modes`` backend steps with exact per-segment propagators; the
    ``rk4`` backend uses a fixed step ``dt`` (default
    min(0.25/omega_max, segment/8), rejected above 0.4/omega_max).
    Every sampled reduced covariance is checked against the
    physical-state invariants; a breach raises PropagationError with
    the time of the breach.
    """
    dim = 2 * (2 + bath.n_modes)
    sigma0 = _resolve_initial(initial, dim)
    if sample_times is None:
        sample_times = default_sample_times(pulse.t_f)
    sample_times = np.sort(np.asarray(sample_times, dtype=float))
    if sample_times[0] < 0 or sample_times[-1] > pulse.t_f * (1 + 1e-12):
        raise ConfigurationError("sample times must lie within [0, t_f]")
    horizon = bath.recurrence_horizon()
    if pulse.t_f > horizon:
        raise ConfigurationError(
            f"requested horizon t_f={pulse.t_f:g} exceeds the recurrence-safe bath horizon {horizon:g}; "
            "increase n_modes"
        )

    if backend == "modes":
        times, covs, residual, final_full = _propagate_modes(
            sigma0, pulse, bath, sample_times, include_counterterm, keep_final_full, check_symplectic
        )
    elif backend == "rk4":
        times, covs, residual, final_full = _propagate_rk4(
            sigma0, pulse, bath, sample_times, dt, include_counterterm, keep_final_full, check_symplectic
        )
    else:
        raise ConfigurationError(f"unknown backend {backend!r}; use 'modes' or 'rk4'")

    if validate:
        for t, sig in zip(times, covs):
            _validate_reduced(sig, t)
    e_n, nln, dg, energy = _derived_series(times, covs, pulse)
    return PropagationResult(
        times=times, covariances=covs, e_n=e_n, neg_log_nu=nln, det_gamma=dg,
        system_energy=energy, final_time=float(pulse.t_f),
        symplectic_residual=residual, final_full=final_full,
    )


def _propagate_modes(sigma0, pulse, bath, sample_times, include_counterterm, keep_final_full, check_symplectic):
    dim = sigma0.shape[0]
    potentials = segment_potentials(pulse, bath, include_counterterm)
    seg_len = pulse.segment_length
    seed = _system_seed(dim)
    requests: dict[int, list] = {}
    order = []
    for t in sample_times:
        k = min(int(t / seg_len), pulse.n_segments - 1)
        delta = t - k * seg_len
        requests.setdefault(k, []).append((delta, seed))
        order.append((k, len(requests[k]) - 1))

    with_full = keep_final_full or check_symplectic
    out, s_total = backward_pass(potentials, seg_len, requests, with_full=with_full)

    sigma0_diag = np.diagonal(sigma0) if _is_diagonal(sigma0) else None
    covs = np.empty((len(sample_times), 4, 4))
    for i, (k, pos) in enumerate(order):
        rt = out[k][pos]  # R(t)^T, shape (dim, 4)
        scaled = rt * sigma0_diag[:, None] if sigma0_diag is not None else sigma0 @ rt
        sig = rt.T @ scaled
        covs[i] = 0.5 * (sig + sig.T)

    residual = None
    final_full = None
    if s_total is not None:
        if check_symplectic:
            omega = symplectic_form(dim // 2)
            residual = float(np.abs(s_total @ omega @ s_total.T - omega).max())
        if keep_final_full:
            full = s_total @ sigma0 @ s_total.T
            final_full = 0.5 * (full + full.T)
    return sample_times, covs, residual, final_full


def _is_diagonal(m: np.ndarray) -> bool:
    return np.count_nonzero(m - np.diag(np.diagonal(m))) == 0


def _propagate_rk4(sigma0, pulse, bath, sample_times, dt, include_counterterm, keep_final_full, check_symplectic):
    omega_top = float(bath.omegas.max())
    seg_len = pulse.segment_length
    if dt is None:
        dt = min(0.25 / omega_top, seg_len / 8.0)
    if dt > 0.4 / omega_top:
        raise ConfigurationError(
            f"rk4 step dt={dt:g} too large for stability; need dt <= 0.4/omega_max = {0.4 / omega_top:g}"
        )
    dim = sigma0.shape[0]
    events = np.unique(np.concatenate([sample_times, pulse.boundaries()]))
    sigma = sigma0.copy()
    s_total = np.eye(dim) if (keep_final_full or check_symplectic) else None
    covs = []
    taken = set()

    def record(t):
        covs.append(0.5 * (sigma[0:4, 0:4] + sigma[0:4, 0:4].T))
        taken.add(t)

    sample_set = set(float(t) for t in sample_times)
    if float(events[0]) in sample_set:
        record(float(events[0]))
    for a, b in zip(events[:-1], events[1:]):
        k = min(int((0.5 * (a + b)) / seg_len), pulse.n_segments - 1)
        gen = _generator_from_potential(
            potential_matrix(pulse.values_a[k], pulse.values_b[k], bath, include_counterterm)
        )
        n_steps = max(1, int(np.ceil((b - a) / dt)))
        h = (b - a) / n_steps
        for _ in range(n_steps):
            sigma = _rk4_step_lyapunov(gen, sigma, h)
            if s_total is not None:
                s_total = _rk4_step_linear(gen, s_total, h)
        if float(b) in sample_set:
            record(float(b))

    covs = np.array(covs)
    residual = None
    final_full = None
    if s_total is not None:
        if check_symplectic:
            omega = symplectic_form(dim // 2)
            residual = float(np.abs(s_total @ omega @ s_total.T - omega).max())
        if keep_final_full:
            final_full = 0.5 * (sigma + sigma.T)
    return sample_times, covs, residual, final_full


def _rk4_step_lyapunov(a, sigma, h):
    def rhs(s):
        g = a @ s
        return g + g.T

    k1 = rhs(sigma)
    k2 = rhs(sigma + 0.5 * h * k1)
    k3 = rhs(sigma + 0.5 * h * k2)
    k4 = rhs(sigma + h * k3)
    return sigma + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_step_linear(a, s, h):
    k1 = a @ s
    k2 = a @ (s + 0.5 * h * k1)
    k3 = a @ (s + 0.5 * h * k2)
    k4 = a @ (s + h * k3)
    return s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def continue_free(result: PropagationResult, bath: DiscretizedBath,
                  extra_time: float, *, n_samples: int = 50, include_counterterm: bool = True,
                  keep_final_full: bool = True) -> PropagationResult:
    """Switch the drive off at the stored final time and keep evolving.

    Requires the full final covariance to have been retained.
    """
    if result.final_full is None:
        raise UsageError("continue_free needs the full final covariance; rerun propagate with keep_final_full=True")
    if extra_time <= 0:
        raise ConfigurationError(f"extra_time must be > 0, got {extra_time}")
    total = result.final_time + extra_time
    horizon = bath.recurrence_horizon()
    if total > horizon:
        raise ConfigurationError(
            f"switch-off continuation to t={total:g} exceeds the recurrence-safe horizon {horizon:g}"
        )
    free = ControlPulse.zero(extra_time, 1, u_max=0.0, mode="symmetric")
    tail = propagate(
        result.final_full, free, bath,
        sample_times=np.linspace(0.0, extra_time, n_samples + 1)[1:],
        include_counterterm=include_counterterm, keep_final_full=keep_final_full,
    )
    return PropagationResult(
        times=np.concatenate([result.times, tail.times + result.final_time]),
        covariances=np.concatenate([result.covariances, tail.covariances]),
        e_n=np.concatenate([result.e_n, tail.e_n]),
        neg_log_nu=np.concatenate([result.neg_log_nu, tail.neg_log_nu]),
        det_gamma=np.concatenate([result.det_gamma, tail.det_gamma]),
        system_energy=np.concatenate([result.system_energy, tail.system_energy]),
        final_time=total,
        symplectic_residual=result.symplectic_residual,
        final_full=tail.final_full,
    )


# ---------------------------------------------------------------------------
# Semi-analytic backend for the bath-decoupled antisymmetric mode
# ---------------------------------------------------------------------------


@dataclass
class FundamentalSolutions:
    """Tabulated fundamental solutions of phi'' + (1 + u(t)) phi = 0.

    phi_1(0) = 1, phi_1'(0) = 0 and phi_2(0) = 0, phi_2'(0) = 1; their
    Wronskian phi_1 phi_2' - phi_1' phi_2 stays 1.
    """

    times: np.ndarray
    phi1: np.ndarray
    dphi1: np.ndarray
    phi2: np.ndarray
    dphi2: np.ndarray

    def wronskian(self) -> np.ndarray:
        return self.phi1 * self.dphi2 - self.dphi1 * self.phi2


@dataclass
class NormalModeTrajectory:
    """Q_- covariance trajectory with squeezing and temperature-bound diagnostics."""

    times: np.ndarray
    covariances: np.ndarray  # (n, 2, 2)
    r_minus: np.ndarray
    bound_margin: np.ndarray  # cosh(2 r_-) - coth(beta)
    beta: float


def _two_by_two_factors(stiffness: float, dt: float):
    c, s = _mode_factors(np.array([stiffness]), dt)
    return np.array([[c[0], s[0]], [-stiffness * s[0], c[0]]])


def propagate_normal_mode_semianalytic(pulse: ControlPulse, beta: float, *,
                                       sample_times=None, initial=None):
    """Evolve the antisymmetric normal mode for a symmetric pulse.

    Under u_A = u_B the Q_- mode decouples from the reservoir exactly and
    evolves as a classical parametric oscillator; its covariance follows
    sigma(t) = S(t) sigma(0) S(t)^T with S built from the fundamental
    solutions. Returns (NormalModeTrajectory, FundamentalSolutions).
    The temperature diagnostic compares cosh(2 r_-) against coth(beta),
    the squeezing threshold for entanglement when the symmetric mode is
    thermal.
    """
    if pulse.mode != "symmetric":
        raise ConfigurationError("the semi-analytic backend requires a symmetric-mode pulse")
    if sample_times is None:
        sample_times = default_sample_times(pulse.t_f)
    sample_times = np.sort(np.asarray(sample_times, dtype=float))
    sigma0 = 0.5 * np.eye(2) if initial is None else np.asarray(initial, dtype=float)

    seg_len = pulse.segment_length
    boundary_s = [np.eye(2)]
    for k in range(pulse.n_segments):
        boundary_s.append(_two_by_two_factors(1.0 + pulse.values_a[k], seg_len) @ boundary_s[-1])

    n = len(sample_times)
    s_at = np.empty((n, 2, 2))
    covs = np.empty((n, 2, 2))
    for i, t in enumerate(sample_times):
        k = min(int(t / seg_len), pulse.n_segments - 1)
        s = _two_by_two_factors(1.0 + pulse.values_a[k], t - k * seg_len) @ boundary_s[k]
        s_at[i] = s
        covs[i] = s @ sigma0 @ s.T

    tr = covs[:, 0, 0] + covs[:, 1, 1]
    det = covs[:, 0, 0] * covs[:, 1, 1] - covs[:, 0, 1] * covs[:, 1, 0]
    cosh2r = np.maximum(tr / (2.0 * np.sqrt(det)), 1.0)
    r_minus = 0.5 * np.arccosh(cosh2r)
    margin = cosh2r - 1.0 / np.tanh(beta)

    trajectory = NormalModeTrajectory(
        times=sample_times, covariances=covs, r_minus=r_minus, bound_margin=margin, beta=beta
    )
    fundamentals = FundamentalSolutions(
        times=sample_times,
        phi1=s_at[:, 0, 0].copy(), dphi1=s_at[:, 1, 0].copy(),
        phi2=s_at[:, 0, 1].copy(), dphi2=s_at[:, 1, 1].copy(),
    )
    return trajectory, fundamentals


# ---------------------------------------------------------------------------
# Equilibrium oracle for the undriven coupled model
# ---------------------------------------------------------------------------


def equilibrium_covariance(bath: DiscretizedBath, beta: float, u: float = 0.0,
                           include_counterterm: bool = True) -> np.ndarray:
    """Reduced 4x4 covariance of the global Gibbs state of the coupled model.

    Exact normal-mode thermal occupation of the full (system + bath)
    Hamiltonian. Note the antisymmetric mode is exactly bath-decoupled,
    so the dynamics never thermalizes it; use ``steady_state_covariance``
    for the long-time limit of the actual propagation.
    """
    v = potential_matrix(u, u, bath, include_counterterm)
    lam, basis = np.linalg.eigh(v)
    if lam[0] <= 0:
        raise ConfigurationError("coupled model has an unstable mode; no thermal equilibrium exists")
    freq = np.sqrt(lam)
    occ_q = 1.0 / np.tanh(0.5 * beta * freq) / (2.0 * freq)
    occ_p = 0.5 * freq / np.tanh(0.5 * beta * freq)
    sys_rows = basis[[0, 1], :]
    qq = (sys_rows * occ_q) @ sys_rows.T
    pp = (sys_rows * occ_p) @ sys_rows.T
    out = np.zeros((4, 4))
    out[np.ix_([0, 2], [0, 2])] = qq
    out[np.ix_([1, 3], [1, 3])] = pp
    return out


_NORMAL_MODE_BASIS = np.array([
    [1, 0, 1, 0],
    [0, 1, 0, 1],
    [1, 0, -1, 0],
    [0, 1, 0, -1],
]) / np.sqrt(2.0)


def steady_state_covariance(bath: DiscretizedBath, beta: float,
                            include_counterterm: bool = True) -> np.ndarray:
    """Long-time reduced covariance of the undriven dynamics.

    The symmetric sector (Q_+ plus bath) equilibrates to its own Gibbs
    state; the antisymmetric mode is decoupled from the reservoir and
    keeps its initial ground state forever. The combination is the
    stationary state the factorized preparation actually relaxes to.
    """
    n = bath.n_modes
    v_plus = np.zeros((n + 1, n + 1))
    mu = bath.counterterm_sum if include_counterterm else 0.0
    v_plus[0, 0] = 1.0 + 4.0 * mu
    v_plus[0, 1:] = v_plus[1:, 0] = np.sqrt(2.0) * bath.couplings
    v_plus[np.arange(1, n + 1), np.arange(1, n + 1)] = bath.omegas**2
    lam, basis = np.linalg.eigh(v_plus)
    if lam[0] <= 0:
        raise ConfigurationError("symmetric sector has an unstable mode; no stationary state exists")
    freq = np.sqrt(lam)
    occ = 1.0 / np.tanh(0.5 * beta * freq)
    row = basis[0, :]
    qq_plus = float(np.sum(row**2 * occ / (2.0 * freq)))
    pp_plus = float(np.sum(row**2 * occ * 0.5 * freq))
    sigma_nm = np.diag([qq_plus, pp_plus, 0.5, 0.5])
    t = _NORMAL_MODE_BASIS
    return t.T @ sigma_nm @ t
