"""Phase-space algebra for Gaussian states.

Conventions used throughout the package:

* quadrature ordering ``(q_1, p_1, q_2, p_2, ...)``,
* dimensionless units (lengths in sqrt(hbar/M Omega), momenta in
  sqrt(hbar M Omega)), so each vacuum quadrature has variance 1/2,
* symplectic eigenvalues are vacuum-normalized: a ground-state mode
  yields exactly 1, and the entanglement threshold sits at
  nu_tilde = 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidStateError

SYMMETRY_RTOL = 1e-12
NU_FLOOR_TOL = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form with 2x2 blocks [[0, 1], [-1, 0]]."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


def _check_square_even(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] % 2:
        raise InvalidStateError(f"covariance must be square with even dimension, got shape {sigma.shape}")
    return sigma


def _check_symmetric(sigma: np.ndarray) -> None:
    scale = max(np.abs(sigma).max(), 1.0)
    if np.abs(sigma - sigma.T).max() > SYMMETRY_RTOL * scale:
        raise InvalidStateError("covariance matrix is not symmetric")


def _cholesky_or_raise(sigma: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise InvalidStateError("covariance matrix is not positive definite") from None


def symplectic_eigenvalues(sigma) -> np.ndarray:
    """Vacuum-normalized symplectic spectrum of a covariance matrix.

    Computed from the singular values of L^T Omega L with sigma = L L^T,
    which is equivalent to the moduli of the eigenvalues of 2i Omega sigma
    but numerically symmetric. Returns dim/2 values sorted ascending;
    vacuum gives exactly 1 per mode.

    Raises
    ------
    InvalidStateError
        If sigma is not symmetric positive definite.
    """
    sigma = _check_square_even(sigma)
    _check_symmetric(sigma)
    chol = _cholesky_or_raise(sigma)
    n_modes = sigma.shape[0] // 2
    kern = chol.T @ symplectic_form(n_modes) @ chol
    svals = np.linalg.svd(kern, compute_uv=False)  # pairs (nu, nu), descending
    nus = 2.0 * 0.5 * (svals[0::2] + svals[1::2])
    return np.sort(nus)


def partial_transpose(sigma, mode_index: int) -> np.ndarray:
    """Momentum-sign flip of one mode at the covariance level.

    Involutive and exact (entries are only negated, never recomputed).
    """
    sigma = _check_square_even(sigma)
    n_modes = sigma.shape[0] // 2
    if not 0 <= mode_index < n_modes:
        raise InvalidStateError(f"mode index {mode_index} out of range for {n_modes} modes")
    out = sigma.copy()
    p = 2 * mode_index + 1
    out[p, :] *= -1.0
    out[:, p] *= -1.0
    return out


def _require_two_mode(sigma) -> np.ndarray:
    sigma = _check_square_even(sigma)
    if sigma.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 two-mode covariance, got shape {sigma.shape}")
    return sigma


def smallest_pt_symplectic_eigenvalue(sigma) -> float:
    """nu_tilde_-: smallest symplectic eigenvalue after partial transpose of mode B."""
    sigma = _require_two_mode(sigma)
    return float(symplectic_eigenvalues(partial_transpose(sigma, 1))[0])


def neg_log_nu(sigma) -> float:
    """Smooth entanglement diagnostic -ln(nu_tilde_-), defined also when negative."""
    return -float(np.log(smallest_pt_symplectic_eigenvalue(sigma)))


def log_negativity(sigma) -> float:
    """Logarithmic negativity E_N = max{0, -ln(nu_tilde_-)} of a two-mode state."""
    return max(0.0, neg_log_nu(sigma))


def _two_mode_blocks(sigma):
    a = sigma[0:2, 0:2]
    b = sigma[2:4, 2:4]
    g = sigma[0:2, 2:4]
    return a, b, g


def det_gamma(sigma) -> float:
    """Determinant of the cross block; negative values are necessary for entanglement."""
    sigma = _require_two_mode(sigma)
    _, _, g = _two_mode_blocks(sigma)
    return float(np.linalg.det(g))


def two_mode_nu_oracle(sigma) -> float:
    """Closed-form nu_tilde_- from the 2x2 block determinant invariants.

    Uses Delta = det(alpha) + det(beta) - 2 det(gamma) and
    nu_tilde_-^2 = 2 (Delta - sqrt(Delta^2 - 4 det(sigma))) in
    vacuum-normalized units. Independent of the eigenvalue solver;
    the two paths must agree to 1e-9 relative on physical states.
    """
    sigma = _require_two_mode(sigma)
    _check_symmetric(sigma)
    _cholesky_or_raise(sigma)
    a, b, g = _two_mode_blocks(sigma)
    delta = np.linalg.det(a) + np.linalg.det(b) - 2.0 * np.linalg.det(g)
    disc = delta * delta - 4.0 * np.linalg.det(sigma)
    disc = max(disc, 0.0)  # degenerate nu pair: clamp roundoff
    nu_sq = 2.0 * (delta - np.sqrt(disc))
    if nu_sq <= 0.0:
        raise InvalidStateError("two-mode invariants give non-positive nu_tilde; state is unphysical")
    return float(np.sqrt(nu_sq))


def _cof2(m: np.ndarray) -> np.ndarray:
    """Cofactor matrix of a 2x2 block: d(det m) = sum cof(m)_kl dm_kl."""
    return np.array([[m[1, 1], -m[1, 0]], [-m[0, 1], m[0, 0]]])


def neg_log_nu_gradient(sigma, degenerate_shift: float = 1e-9):
    """Value and matrix gradient of -ln(nu_tilde_-) on a two-mode covariance.

    Returns ``(nu_tilde, grad, degenerate)`` where grad is the symmetric
    4x4 matrix G with d(-ln nu) = trace(G d sigma) for symmetric
    perturbations. At a degenerate smallest symplectic eigenvalue the
    square root in the invariant formula is not differentiable; the
    discriminant is then shifted by ``degenerate_shift`` (subgradient
    choice) and the flag is set.
    """
    sigma = _require_two_mode(sigma)
    a, b, g = _two_mode_blocks(sigma)
    det_s = np.linalg.det(sigma)
    delta = np.linalg.det(a) + np.linalg.det(b) - 2.0 * np.linalg.det(g)
    disc = delta * delta - 4.0 * det_s
    shift = (degenerate_shift * max(delta, 1.0)) ** 2
    degenerate = disc < shift
    nu_sq = 2.0 * (delta - np.sqrt(max(disc, 0.0)))
    if nu_sq <= 0.0:
        raise InvalidStateError("two-mode invariants give non-positive nu_tilde; state is unphysical")
    nu = float(np.sqrt(nu_sq))

    # d(-ln nu) = -[(1 - delta/s) dDelta + (2/s) d det(sigma)] / (2 (delta - s));
    # at a degenerate nu pair the root is kinked, so the gradient (not the
    # value) uses a shifted discriminant as its subgradient branch
    s = np.sqrt(max(disc, shift))
    c_delta = -0.5 * (1.0 - delta / s) / (delta - s)
    c_dets = -(1.0 / s) / (delta - s)

    grad_delta = np.zeros((4, 4))
    grad_delta[0:2, 0:2] = _cof2(a)
    grad_delta[2:4, 2:4] = _cof2(b)
    grad_delta[0:2, 2:4] = -2.0 * 0.5 * _cof2(g)
    grad_delta[2:4, 0:2] = -2.0 * 0.5 * _cof2(g).T

    grad_dets = det_s * np.linalg.inv(sigma)

    grad = c_delta * grad_delta + c_dets * grad_dets
    grad = 0.5 * (grad + grad.T)
    return nu, grad, bool(degenerate)


def wigner_grid(sigma, means, q_lim, p_lim, n_q: int = 121, n_p: int = 121):
    """Sample the Gaussian Wigner density of a single mode on a rectangle.

    W(q, p) = exp(-x^T sigma^-1 x / 2) / (2 pi sqrt(det sigma)) with
    x = (q, p) - means. Returns ``(qs, ps, w)`` with ``w[i, j] =
    W(qs[i], ps[j])``; a Riemann sum over a wide enough grid
    integrates to 1 up to truncation error.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (2, 2):
        raise InvalidStateError(f"wigner_grid needs a single-mode 2x2 covariance, got {sigma.shape}")
    det = np.linalg.det(sigma)
    if det <= 0.0:
        raise InvalidStateError("singular or indefinite covariance in wigner_grid")
    inv = np.linalg.inv(sigma)
    means = np.asarray(means, dtype=float)
    qs = np.linspace(q_lim[0], q_lim[1], n_q)
    ps = np.linspace(p_lim[0], p_lim[1], n_p)
    dq = qs[:, None] - means[0]
    dp = ps[None, :] - means[1]
    quad = inv[0, 0] * dq**2 + 2.0 * inv[0, 1] * dq * dp + inv[1, 1] * dp**2
    w = np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))
    return qs, ps, w


# ---------------------------------------------------------------------------
# State constructors and symplectic building blocks
# ---------------------------------------------------------------------------


def vacuum_cov(n_modes: int) -> np.ndarray:
    return 0.5 * np.eye(2 * n_modes)


def thermal_cov(beta: float, n_modes: int = 1) -> np.ndarray:
    """Thermal state of unit-frequency modes: variance coth(beta/2)/2 per quadrature."""
    c = 1.0 / np.tanh(0.5 * beta)
    return 0.5 * c * np.eye(2 * n_modes)


def squeezed_cov(r: float, phi: float = 0.0) -> np.ndarray:
    """Single-mode squeezed vacuum; phi is the orientation of the long axis."""
    rot = rotation_symplectic(phi)
    return rot @ np.diag([0.5 * np.exp(2.0 * r), 0.5 * np.exp(-2.0 * r)]) @ rot.T


def two_mode_squeezed_cov(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum with E_N = 2r."""
    ch = np.cosh(2.0 * r)
    sh = np.sinh(2.0 * r)
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    return 0.5 * np.block([[ch * eye, sh * z], [sh * z, ch * eye]])


def rotation_symplectic(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeezer_symplectic(r: float) -> np.ndarray:
    return np.diag([np.exp(r), np.exp(-r)])


def beamsplitter_symplectic(theta: float) -> np.ndarray:
    """Two-mode mixing rotation acting identically on q and p pairs."""
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros((4, 4))
    out[0::2, 0::2] = [[c, s], [-s, c]]
    out[1::2, 1::2] = [[c, s], [-s, c]]
    return out


def _embed_single_mode(op: np.ndarray, mode: int, n_modes: int) -> np.ndarray:
    out = np.eye(2 * n_modes)
    i = 2 * mode
    out[i : i + 2, i : i + 2] = op
    return out


def random_symplectic(n_modes: int, rng, n_ops: int = 8) -> np.ndarray:
    """Random symplectic as a product of rotations, squeezers and mode mixers."""
    dim = 2 * n_modes
    total = np.eye(dim)
    for _ in range(n_ops):
        mode = int(rng.integers(n_modes))
        kind = int(rng.integers(3)) if n_modes > 1 else int(rng.integers(2))
        if kind == 0:
            op = _embed_single_mode(rotation_symplectic(rng.uniform(0, 2 * np.pi)), mode, n_modes)
        elif kind == 1:
            op = _embed_single_mode(squeezer_symplectic(rng.uniform(-1.0, 1.0)), mode, n_modes)
        else:
            other = int(rng.integers(n_modes - 1))
            other = other if other < mode else other + 1
            lo, hi = sorted((mode, other))
            op = np.eye(dim)
            bs = beamsplitter_symplectic(rng.uniform(0, 2 * np.pi))
            idx = [2 * lo, 2 * lo + 1, 2 * hi, 2 * hi + 1]
            op[np.ix_(idx, idx)] = bs
        total = op @ total
    return total


def random_physical_cov(n_modes: int, rng, nu_max: float = 3.0) -> np.ndarray:
    """Random physical covariance: symplectic-conjugated thermal spectrum."""
    nus = rng.uniform(1.0, nu_max, size=n_modes)
    diag = 0.5 * np.repeat(nus, 2)
    s = random_symplectic(n_modes, rng)
    return s @ np.diag(diag) @ s.T


# ---------------------------------------------------------------------------
# Validated covariance wrapper and JSON interchange
# ---------------------------------------------------------------------------


@dataclass
class CovarianceMatrix:
    """Validated covariance matrix used at interface boundaries.

    ``entries`` is the dim x dim symmetric matrix in (q_1, p_1, ...)
    ordering. Construction checks symmetry, positive definiteness and
    the physicality floor (all vacuum-normalized symplectic
    eigenvalues >= 1 - 1e-9).
    """

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.dim != self.entries.shape[0]:
            raise InvalidStateError(f"dim={self.dim} does not match entries shape {self.entries.shape}")
        _check_square_even(self.entries)
        nus = symplectic_eigenvalues(self.entries)
        # strongly squeezed states only determine nu to ~eps * cond(sigma)
        eigs = np.linalg.eigvalsh(self.entries)
        eps = np.finfo(float).eps
        cond = eigs[-1] / eigs[0] if eigs[0] > eps * eigs[-1] else 1.0 / eps
        tol = max(NU_FLOOR_TOL, 64.0 * eps * cond)
        if nus[0] < 1.0 - tol:
            raise InvalidStateError(f"state violates the Heisenberg floor: min symplectic eigenvalue {nus[0]:.12g}")

    @classmethod
    def from_matrix(cls, sigma) -> "CovarianceMatrix":
        sigma = np.asarray(sigma, dtype=float)
        return cls(dim=sigma.shape[0], entries=sigma)

    def n_modes(self) -> int:
        return self.dim // 2

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "entries": [float(x) for x in self.entries.ravel()]})

    @classmethod
    def from_json(cls, text: str) -> "CovarianceMatrix":
        data = json.loads(text)
        dim = int(data["dim"])
        entries = np.array(data["entries"], dtype=float).reshape(dim, dim)
        return cls(dim=dim, entries=entries)
