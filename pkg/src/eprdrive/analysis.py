"""Physics diagnostics on reduced two-mode covariances.

Everything here reads states in the symmetric/antisymmetric normal-mode
picture Q_pm = (q_A pm q_B)/sqrt(2): the shared reservoir couples only
to the + combination, so entanglement of the local modes is controlled
by how dissimilar the two normal-mode marginals become.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidStateError
from .gaussian import det_gamma, rotation_symplectic

# rows map (q_A, p_A, q_B, p_B) -> (Q+, P+, Q-, P-); orthogonal and symplectic
NORMAL_MODE_BASIS = np.array([
    [1, 0, 1, 0],
    [0, 1, 0, 1],
    [1, 0, -1, 0],
    [0, 1, 0, -1],
]) / np.sqrt(2.0)


@dataclass
class NormalModeState:
    """4x4 covariance in (Q+, P+, Q-, P-) ordering plus the change of basis."""

    covariance: np.ndarray
    basis: np.ndarray

    @property
    def plus_block(self) -> np.ndarray:
        return self.covariance[0:2, 0:2]

    @property
    def minus_block(self) -> np.ndarray:
        return self.covariance[2:4, 2:4]

    @property
    def cross_block_norm(self) -> float:
        return float(np.abs(self.covariance[0:2, 2:4]).max())

    def to_local(self) -> np.ndarray:
        return self.basis.T @ self.covariance @ self.basis


def to_normal_modes(sigma) -> NormalModeState:
    """Congruence transform to the +/- basis (a global, not local, rotation)."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 covariance, got {sigma.shape}")
    t = NORMAL_MODE_BASIS
    return NormalModeState(covariance=t @ sigma @ t.T, basis=t)


@dataclass
class SqueezingParams:
    """Single-mode decomposition sigma = (a/2) R(phi) diag(e^{2r}, e^{-2r}) R(phi)^T.

    r >= 0 with the orientation carried by the angle phi in [0, pi)
    (the major axis direction); a = 2 sqrt(det sigma) is 1 for pure
    states and coth(beta/2) for a thermal state.
    """

    r: float
    phi: float
    a: float

    def reconstruct(self) -> np.ndarray:
        rot = rotation_symplectic(self.phi)
        return 0.5 * self.a * rot @ np.diag([np.exp(2 * self.r), np.exp(-2 * self.r)]) @ rot.T


def squeezing_decomposition(sigma_mode) -> SqueezingParams:
    sigma_mode = np.asarray(sigma_mode, dtype=float)
    if sigma_mode.shape != (2, 2):
        raise InvalidStateError(f"expected a 2x2 single-mode covariance, got {sigma_mode.shape}")
    det = float(np.linalg.det(sigma_mode))
    if det <= 0 or sigma_mode[0, 0] <= 0:
        raise InvalidStateError("single-mode covariance must be positive definite")
    a = 2.0 * np.sqrt(det)
    cosh2r = max(float(np.trace(sigma_mode)) / a, 1.0)
    r = 0.5 * float(np.arccosh(cosh2r))
    if r < 1e-12:
        return SqueezingParams(r=0.0, phi=0.0, a=a)
    eigvals, eigvecs = np.linalg.eigh(sigma_mode)
    major = eigvecs[:, -1]
    phi = float(np.arctan2(major[1], major[0])) % np.pi
    return SqueezingParams(r=r, phi=phi, a=a)


@dataclass
class DetGammaDecomposition:
    """Normal-mode splitting of the cross-block determinant.

    For symmetric driving the +/- sectors stay uncorrelated and
    4 det(gamma) = Delta_P Delta_Q - cross^2 with
    Delta_X = <X_+^2> - <X_-^2>; a negative value is necessary for
    entanglement of the local modes, which requires the two normal
    modes to evolve non-degenerately.
    """

    delta_q: float
    delta_p: float
    cross: float
    four_det_gamma: float
    sectors_correlated: bool


def det_gamma_decomposition(nm: NormalModeState, cross_tol: float = 1e-9) -> DetGammaDecomposition:
    cov = nm.covariance
    delta_q = float(cov[0, 0] - cov[2, 2])
    delta_p = float(cov[1, 1] - cov[3, 3])
    cross = float(cov[0, 1] - cov[2, 3])
    correlated = nm.cross_block_norm >= cross_tol
    return DetGammaDecomposition(
        delta_q=delta_q,
        delta_p=delta_p,
        cross=cross,
        four_det_gamma=delta_p * delta_q - cross**2,
        sectors_correlated=correlated,
    )


def squeezing_threshold(beta: float) -> float:
    """Minimal r_- for entanglement with a thermal symmetric mode: cosh(2r) = coth(beta)."""
    if beta <= 0:
        raise InvalidStateError(f"beta must be > 0, got {beta}")
    return 0.5 * float(np.arccosh(1.0 / np.tanh(beta)))


def temperature_bound_check(r_minus: float, beta: float):
    """Whether cosh(2 r_-) exceeds coth(beta), and by how much.

    With the symmetric mode exactly thermal (a_+ = coth(beta/2), r_+ = 0)
    and aligned squeezing, 4 det(gamma) = [c^2 + 1 - 2 c cosh(2 r_-)]/4
    for c = coth(beta/2), which is negative exactly when
    cosh(2 r_-) > (c^2 + 1)/(2c) = coth(beta).
    """
    if beta <= 0:
        raise InvalidStateError(f"beta must be > 0, got {beta}")
    margin = float(np.cosh(2.0 * r_minus) - 1.0 / np.tanh(beta))
    return margin > 0.0, margin


def mode_count_estimate(e_n: float) -> float:
    """Rough number of participating states per mode, exp(E_N)/2."""
    if e_n < 0:
        raise InvalidStateError(f"E_N must be >= 0, got {e_n}")
    return float(np.exp(e_n) / 2.0)


@dataclass
class ClassificationThresholds:
    """Artifact conventions for the EPR / semi-EPR labels (all overridable)."""

    epr_r_sum_tol: float = 0.05     # |r_- + r_+| with the sign carried by the angles
    epr_min_r: float = 0.05         # below this squeezing the EPR label is meaningless
    epr_angle_tol: float = 0.1      # rad, deviation from opposite squeezing axes
    epr_width_tol: float = 0.05     # |a - 1| for both modes
    semi_r_minus_min: float = 0.2
    semi_r_plus_max: float = 0.1
    semi_thermal_distance_max: float = 0.10
    cross_tol: float = 1e-9


@dataclass
class SemiEprReport:
    label: str  # "EPR" | "semi-EPR" | "neither"
    plus: SqueezingParams
    minus: SqueezingParams
    thermal_distance_plus: float
    sectors_correlated: bool
    normal_mode_covariance: np.ndarray = field(repr=False, default=None)


def _thermal_distance(sigma_mode) -> float:
    """Max-norm distance to the nearest thermal state, relative to its variance."""
    a_mean = 0.5 * (sigma_mode[0, 0] + sigma_mode[1, 1])
    dist = max(0.5 * abs(sigma_mode[0, 0] - sigma_mode[1, 1]), abs(sigma_mode[0, 1]))
    return float(dist / a_mean)


def _angle_gap_from_orthogonal(phi_plus: float, phi_minus: float) -> float:
    gap = abs(phi_plus - phi_minus) % np.pi
    return abs(gap - 0.5 * np.pi)


def semi_epr_report(nm: NormalModeState,
                    thresholds: ClassificationThresholds | None = None) -> SemiEprReport:
    """Classify the normal-mode state as EPR-like, semi-EPR, or neither.

    EPR states factorize into oppositely squeezed pure +/- modes; the
    driven-dissipative protocol instead leaves the symmetric mode near
    thermal while squeezing the antisymmetric one ("semi-EPR"). For
    correlated +/- sectors (single-site driving) the two-marginal
    description is incomplete, so the full normal-mode covariance is
    attached and the sector flag is set.
    """
    th = thresholds or ClassificationThresholds()
    plus = squeezing_decomposition(nm.plus_block)
    minus = squeezing_decomposition(nm.minus_block)
    dist = _thermal_distance(nm.plus_block)
    correlated = nm.cross_block_norm >= th.cross_tol

    is_epr = (
        min(plus.r, minus.r) >= th.epr_min_r
        and abs(plus.r - minus.r) < th.epr_r_sum_tol
        and _angle_gap_from_orthogonal(plus.phi, minus.phi) < th.epr_angle_tol
        and abs(plus.a - 1.0) < th.epr_width_tol
        and abs(minus.a - 1.0) < th.epr_width_tol
    )
    if is_epr:
        label = "EPR"
    elif minus.r >= th.semi_r_minus_min and plus.r < th.semi_r_plus_max and dist <= th.semi_thermal_distance_max:
        label = "semi-EPR"
    else:
        label = "neither"
    return SemiEprReport(
        label=label,
        plus=plus,
        minus=minus,
        thermal_distance_plus=dist,
        sectors_correlated=correlated,
        normal_mode_covariance=nm.covariance.copy(),
    )


def covariance_bar_csv(sigma) -> str:
    """Bar-graph export of all matrix entries as (i, j, sigma_ij) rows."""
    sigma = np.asarray(sigma, dtype=float)
    buf = io.StringIO()
    buf.write("i,j,sigma_ij\r\n")
    for i in range(sigma.shape[0]):
        for j in range(sigma.shape[1]):
            buf.write(f"{i},{j},{float(sigma[i, j])!r}\r\n")
    return buf.getvalue()
