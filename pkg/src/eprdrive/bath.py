"""Discretized Ohmic reservoir shared by the two system modes.

The continuum bath with spectral density J(w) = eta * w / (1 + (w/w_c)^2)^2
is realized as N explicit harmonic modes so that the total model stays
quadratic and can be propagated exactly. Couplings follow from
J(w) = pi * sum_k c_k^2 / (2 m_k w_k) delta(w - w_k) on the chosen grid,
and the quadratic counterterm is computed from the discrete sum itself so
the reservoir induces no static frequency shift in the discrete model.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError

# boundary between the dense linear region and the logarithmic tail
LINEAR_REGION_EDGE = 20.0
LINEAR_FRACTION = 5.0 / 6.0

GRID_KINDS = ("composite", "linear")


@dataclass
class BathSpec:
    """Reservoir parameters in units of the system frequency."""

    eta: float = 0.1
    omega_c: float = 50.0
    beta: float = 1.0
    n_modes: int = 1200
    omega_max: float = 200.0
    grid_kind: str = "composite"

    def __post_init__(self):
        if self.eta < 0:
            raise ConfigurationError(f"bath coupling eta must be >= 0, got {self.eta}")
        if self.omega_c <= 0:
            raise ConfigurationError(f"cutoff omega_c must be > 0, got {self.omega_c}")
        if self.beta <= 0:
            raise ConfigurationError(f"inverse temperature beta must be > 0, got {self.beta}")
        if self.n_modes < 1:
            raise ConfigurationError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.omega_max <= 0:
            raise ConfigurationError(f"omega_max must be > 0, got {self.omega_max}")
        if self.grid_kind not in GRID_KINDS:
            raise ConfigurationError(f"grid_kind must be one of {GRID_KINDS}, got {self.grid_kind!r}")


def spectral_density(spec: BathSpec, omega):
    """Ohmic spectral density with algebraic cutoff, J(w) = eta w / (1 + w^2/w_c^2)^2."""
    omega = np.asarray(omega, dtype=float)
    return spec.eta * omega / (1.0 + (omega / spec.omega_c) ** 2) ** 2


@dataclass
class DiscretizedBath:
    """Explicit reservoir modes realizing the spectral density.

    All masses are 1 (only c_k^2/m_k enters the reduced dynamics).
    ``counterterm_sum`` is mu = sum_k c_k^2 / (2 m_k w_k^2).
    """

    omegas: np.ndarray
    couplings: np.ndarray
    masses: np.ndarray
    counterterm_sum: float
    min_spacing: float = field(default=np.inf)

    @property
    def n_modes(self) -> int:
        return len(self.omegas)

    def recurrence_horizon(self) -> float:
        """Longest time the discrete comb faithfully mimics the continuum (with factor-2 margin).

        A fully decoupled bath never feeds anything back, so its horizon
        is unbounded.
        """
        if not np.isfinite(self.min_spacing) or np.all(self.couplings == 0.0):
            return np.inf
        return np.pi / self.min_spacing

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("omega,coupling\r\n")
        for w, c in zip(self.omegas, self.couplings):
            buf.write(f"{float(w)!r},{float(c)!r}\r\n")
        return buf.getvalue()


def bath_from_grid(eta, omega_c, omegas, widths) -> DiscretizedBath:
    """Build a discretized bath from explicit mode positions and cell widths.

    c_k^2 = (2/pi) m_k w_k J(w_k) dw_k, so that sums against the discrete
    spectral density reproduce integrals against the continuum one.
    """
    omegas = np.asarray(omegas, dtype=float)
    widths = np.asarray(widths, dtype=float)
    if np.any(omegas <= 0) or np.any(np.diff(omegas) <= 0):
        raise ConfigurationError("bath frequencies must be positive and strictly increasing")
    spec = BathSpec(eta=eta, omega_c=omega_c, n_modes=len(omegas), omega_max=float(omegas[-1] + widths[-1]))
    j_vals = spectral_density(spec, omegas)
    c_sq = (2.0 / np.pi) * omegas * j_vals * widths
    couplings = np.sqrt(c_sq)
    counterterm = float(np.sum(c_sq / (2.0 * omegas**2)))
    return DiscretizedBath(
        omegas=omegas,
        couplings=couplings,
        masses=np.ones_like(omegas),
        counterterm_sum=counterterm,
        min_spacing=float(widths.min()),
    )


def _grid_edges(spec: BathSpec) -> np.ndarray:
    if spec.grid_kind == "linear" or spec.omega_max <= LINEAR_REGION_EDGE:
        return np.linspace(0.0, spec.omega_max, spec.n_modes + 1)
    n_lin = max(1, int(round(spec.n_modes * LINEAR_FRACTION)))
    n_log = spec.n_modes - n_lin
    if n_log < 1:
        n_lin = spec.n_modes - 1
        n_log = 1
    lin = np.linspace(0.0, LINEAR_REGION_EDGE, n_lin + 1)
    log = np.geomspace(LINEAR_REGION_EDGE, spec.omega_max, n_log + 1)
    return np.concatenate([lin, log[1:]])


def discretize(spec: BathSpec, t_total: float | None = None) -> DiscretizedBath:
    """Place reservoir modes on the grid chosen by ``spec.grid_kind``.

    The composite grid is linearly spaced up to 20 (dense around the
    system resonance) and logarithmically spaced up to ``omega_max``
    beyond; far-off-resonant modes matter only through the counterterm.

    Raises
    ------
    ConfigurationError
        When ``t_total`` is given and the grid is too coarse for the
        requested horizon: 2 pi / min(dw) must cover twice the total
        propagation time, otherwise discrete-bath recurrences can reach
        the system within the run.
    """
    edges = _grid_edges(spec)
    centers = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    bath = bath_from_grid(spec.eta, spec.omega_c, centers, widths)
    if t_total is not None:
        horizon = bath.recurrence_horizon()
        if t_total > horizon:
            needed = int(np.ceil(spec.n_modes * t_total / horizon))
            raise ConfigurationError(
                f"bath grid too coarse for t_total={t_total:g}: recurrence-safe horizon is "
                f"{horizon:g} (min spacing {bath.min_spacing:g}); increase n_modes to >= {needed}"
            )
    return bath


def thermal_initial_diagonal(bath: DiscretizedBath, beta: float) -> np.ndarray:
    """Diagonal of the factorized initial covariance (it has no off-diagonal entries)."""
    if beta <= 0:
        raise ConfigurationError(f"beta must be > 0, got {beta}")
    n = bath.n_modes
    diag = np.empty(2 * (2 + n))
    diag[0:4] = 0.5
    c = 1.0 / np.tanh(0.5 * beta * bath.omegas)
    diag[4::2] = c / (2.0 * bath.omegas)
    diag[5::2] = 0.5 * bath.omegas * c
    return diag


def thermal_initial_covariance(bath: DiscretizedBath, beta: float) -> np.ndarray:
    """Factorized initial covariance over (system + bath), in global ordering.

    Both system oscillators start in the ground state (variance 1/2 per
    quadrature); each bath mode is thermal at inverse temperature beta
    with <x_k^2> = coth(beta w_k / 2) / (2 w_k) and
    <p_k^2> = w_k coth(beta w_k / 2) / 2 for unit mass. All cross blocks
    vanish (no initial system-reservoir correlations).
    """
    return np.diag(thermal_initial_diagonal(bath, beta))
