"""Piecewise-constant local drive pulses u_A(t), u_B(t) on [0, t_f]."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError

MODES = ("symmetric", "single_site", "free")
BOUND_SLACK = 1e-12


@dataclass
class ControlPulse:
    """Segment amplitudes of the two local parametric drives.

    ``mode`` fixes the relation between the sites: ``symmetric`` forces
    u_B = u_A, ``single_site`` forces u_B = 0, ``free`` leaves both
    independent. Amplitudes are bounded by ``u_max`` in magnitude and
    carry units of the squared system frequency.
    """

    t_f: float
    n_segments: int
    values_a: np.ndarray
    values_b: np.ndarray
    u_max: float = 4.0
    mode: str = "free"

    def __post_init__(self):
        self.values_a = np.asarray(self.values_a, dtype=float)
        self.values_b = np.asarray(self.values_b, dtype=float)
        if self.t_f <= 0:
            raise ConfigurationError(f"t_f must be > 0, got {self.t_f}")
        if self.n_segments < 1:
            raise ConfigurationError(f"n_segments must be >= 1, got {self.n_segments}")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.values_a.shape != (self.n_segments,) or self.values_b.shape != (self.n_segments,):
            raise ConfigurationError("per-site amplitude arrays must have one value per segment")
        if self.u_max < 0:
            raise ConfigurationError(f"u_max must be >= 0, got {self.u_max}")
        top = max(np.abs(self.values_a).max(), np.abs(self.values_b).max())
        if top > self.u_max + BOUND_SLACK:
            raise ConfigurationError(f"amplitude {top:g} exceeds bound u_max={self.u_max:g}")
        if self.mode == "symmetric" and not np.array_equal(self.values_a, self.values_b):
            raise ConfigurationError("symmetric mode requires u_B identical to u_A")
        if self.mode == "single_site" and np.any(self.values_b != 0.0):
            raise ConfigurationError("single_site mode requires u_B = 0")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, t_f: float, n_segments: int, u_max: float = 4.0, mode: str = "symmetric") -> "ControlPulse":
        z = np.zeros(n_segments)
        return cls(t_f=t_f, n_segments=n_segments, values_a=z, values_b=z.copy(), u_max=u_max, mode=mode)

    @classmethod
    def from_params(cls, params, t_f: float, n_segments: int, u_max: float, mode: str) -> "ControlPulse":
        """Build a pulse from the optimizer's parameter vector for the given mode."""
        params = np.asarray(params, dtype=float)
        if mode == "free":
            if params.shape != (2 * n_segments,):
                raise ConfigurationError("free mode expects 2 * n_segments parameters")
            va, vb = params[:n_segments].copy(), params[n_segments:].copy()
        else:
            if params.shape != (n_segments,):
                raise ConfigurationError(f"{mode} mode expects n_segments parameters")
            va = params.copy()
            vb = params.copy() if mode == "symmetric" else np.zeros(n_segments)
        return cls(t_f=t_f, n_segments=n_segments, values_a=va, values_b=vb, u_max=u_max, mode=mode)

    @classmethod
    def resonance_seed(cls, t_f: float, n_segments: int, u_max: float = 4.0,
                       mode: str = "symmetric", amplitude: float | None = None) -> "ControlPulse":
        """Square-wave stiffness modulation at twice the oscillator frequency.

        Parametric resonance of the unit oscillator sits at drive period
        pi; this seed squeezes the undamped antisymmetric mode and is a
        reliable starting basin for the optimizer.
        """
        if amplitude is None:
            amplitude = min(1.0, u_max)
        mids = (np.arange(n_segments) + 0.5) * (t_f / n_segments)
        wave = amplitude * np.sign(np.sin(2.0 * mids))
        wave[wave == 0.0] = amplitude
        params = wave if mode != "free" else np.concatenate([wave, wave])
        return cls.from_params(params, t_f, n_segments, u_max, mode)

    # -- parameter mapping for the optimizer ----------------------------------

    @property
    def n_params(self) -> int:
        return 2 * self.n_segments if self.mode == "free" else self.n_segments

    @property
    def params(self) -> np.ndarray:
        if self.mode == "free":
            return np.concatenate([self.values_a, self.values_b])
        return self.values_a.copy()

    def with_params(self, params) -> "ControlPulse":
        return ControlPulse.from_params(params, self.t_f, self.n_segments, self.u_max, self.mode)

    def param_gradient(self, grad_a, grad_b) -> np.ndarray:
        """Chain per-site gradients through the mode's parameterization."""
        grad_a = np.asarray(grad_a, dtype=float)
        grad_b = np.asarray(grad_b, dtype=float)
        if self.mode == "symmetric":
            return grad_a + grad_b
        if self.mode == "single_site":
            return grad_a
        return np.concatenate([grad_a, grad_b])

    # -- time lookup -----------------------------------------------------------

    @property
    def segment_length(self) -> float:
        return self.t_f / self.n_segments

    def boundaries(self) -> np.ndarray:
        return np.linspace(0.0, self.t_f, self.n_segments + 1)

    def segment_index(self, t: float) -> int:
        if not 0.0 <= t <= self.t_f * (1 + 1e-12):
            raise ConfigurationError(f"time {t} outside [0, {self.t_f}]")
        return min(int(t / self.segment_length), self.n_segments - 1)

    def values_at(self, t: float) -> tuple[float, float]:
        k = self.segment_index(t)
        return float(self.values_a[k]), float(self.values_b[k])

    def roughness(self) -> float:
        """Sum of squared jumps over both sites."""
        return float(roughness(self.values_a) + roughness(self.values_b))

    # -- serialization -----------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t_start,t_end,u_A,u_B\r\n")
        bounds = self.boundaries()
        for k in range(self.n_segments):
            buf.write(f"{float(bounds[k])!r},{float(bounds[k + 1])!r},"
                      f"{float(self.values_a[k])!r},{float(self.values_b[k])!r}\r\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, u_max: float = 4.0, mode: str = "free") -> "ControlPulse":
        lines = [ln for ln in text.replace("\r\n", "\n").strip().split("\n") if ln]
        if lines[0] != "t_start,t_end,u_A,u_B":
            raise ConfigurationError(f"unexpected pulse CSV header: {lines[0]!r}")
        rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
        t_f = rows[-1][1]
        va = np.array([r[2] for r in rows])
        vb = np.array([r[3] for r in rows])
        return cls(t_f=t_f, n_segments=len(rows), values_a=va, values_b=vb, u_max=u_max, mode=mode)


def roughness(values) -> float:
    """Pulse roughness sum((u_{i+1} - u_i)^2) for one site."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    return float(np.sum(np.diff(values) ** 2))


def roughness_gradient(values) -> np.ndarray:
    """Gradient of ``roughness`` with respect to the segment values."""
    values = np.asarray(values, dtype=float)
    grad = np.zeros_like(values)
    if len(values) < 2:
        return grad
    d = np.diff(values)
    grad[:-1] -= 2.0 * d
    grad[1:] += 2.0 * d
    return grad
