"""Declarative run configuration with full defaulting.

One JSON file describes a run; every omitted field takes the default
below, and the resolved values are written back out as an "effective
config" next to the run's artifacts so any figure-analog can be
reproduced from a single file. The defaults are the canonical scenario:
beta = 1, eta = 0.1, omega_c = 50, t_f = 6 pi.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bath import GRID_KINDS, BathSpec, DiscretizedBath, discretize
from .control import Objective
from .exceptions import ConfigurationError
from .pulses import MODES, ControlPulse


@dataclass
class RunConfig:
    scenario: str = "default"
    # reservoir
    eta: float = 0.1
    omega_c: float = 50.0
    beta: float = 1.0
    n_modes: int = 1200
    omega_max: float = 200.0
    grid_kind: str = "composite"
    # pulse template
    t_f: float = 6.0 * np.pi
    n_segments: int = 48
    u_max: float = 4.0
    mode: str = "symmetric"
    pulse_file: str | None = None
    # integration
    backend: str = "modes"
    dt: float | None = None
    n_samples: int = 200
    continue_time: float = 0.0
    # optimizer
    seed: int = 1234
    budget: int = 2000
    n_starts: int = 8
    lam: float = 1e-3
    quad_nodes: int = 16
    fast_inner: bool = True
    fast_n_modes: int = 200
    fast_omega_max: float = 20.0
    polish_maxfun: int = 8
    # outputs
    output_dir: str = "runs"
    workers: int = 1

    def validate(self) -> None:
        self.bath_spec()  # BathSpec validates the reservoir block
        if self.mode not in MODES:
            raise ConfigurationError(f"pulse.mode: must be one of {MODES}, got {self.mode!r}")
        if self.t_f <= 0:
            raise ConfigurationError(f"pulse.t_f: must be > 0, got {self.t_f}")
        if self.n_segments < 1:
            raise ConfigurationError(f"pulse.n_segments: must be >= 1, got {self.n_segments}")
        if self.u_max < 0:
            raise ConfigurationError(f"pulse.u_max: must be >= 0, got {self.u_max}")
        if self.backend not in ("modes", "rk4"):
            raise ConfigurationError(f"integration.backend: must be 'modes' or 'rk4', got {self.backend!r}")
        if self.n_samples < 1:
            raise ConfigurationError(f"integration.n_samples: must be >= 1, got {self.n_samples}")
        if self.continue_time < 0:
            raise ConfigurationError(f"integration.continue_time: must be >= 0, got {self.continue_time}")
        if self.budget < 1:
            raise ConfigurationError(f"optimizer.budget: must be >= 1, got {self.budget}")
        if self.n_starts < 1:
            raise ConfigurationError(f"optimizer.n_starts: must be >= 1, got {self.n_starts}")
        if self.lam < 0:
            raise ConfigurationError(f"optimizer.lam: must be >= 0, got {self.lam}")
        if self.workers < 1:
            raise ConfigurationError(f"output.workers: must be >= 1, got {self.workers}")

    # -- model assembly --------------------------------------------------------

    def bath_spec(self) -> BathSpec:
        try:
            return BathSpec(eta=self.eta, omega_c=self.omega_c, beta=self.beta,
                            n_modes=self.n_modes, omega_max=self.omega_max,
                            grid_kind=self.grid_kind)
        except ConfigurationError as exc:
            raise ConfigurationError(f"bath: {exc}") from None

    def build_bath(self) -> DiscretizedBath:
        return discretize(self.bath_spec(), t_total=self.t_f + self.continue_time)

    def build_fast_bath(self) -> DiscretizedBath | None:
        if not self.fast_inner:
            return None
        spec = BathSpec(eta=self.eta, omega_c=self.omega_c, beta=self.beta,
                        n_modes=self.fast_n_modes, omega_max=self.fast_omega_max,
                        grid_kind=self.grid_kind)
        return discretize(spec, t_total=self.t_f)

    def build_objective(self) -> Objective:
        return Objective(
            t_f=self.t_f, n_segments=self.n_segments, u_max=self.u_max, mode=self.mode,
            bath=self.build_bath(), beta=self.beta, lam=self.lam,
            fast_bath=self.build_fast_bath(), quad_nodes=self.quad_nodes,
        )

    def zero_pulse(self) -> ControlPulse:
        return ControlPulse.zero(self.t_f, self.n_segments, self.u_max, self.mode)

    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_f, self.n_samples + 1)

    # -- serialization ----------------------------------------------------------

    def to_nested(self) -> dict:
        return {
            "scenario": self.scenario,
            "bath": {
                "eta": self.eta, "omega_c": self.omega_c, "beta": self.beta,
                "n_modes": self.n_modes, "omega_max": self.omega_max,
                "grid_kind": self.grid_kind,
            },
            "pulse": {
                "t_f": self.t_f, "n_segments": self.n_segments, "u_max": self.u_max,
                "mode": self.mode, "pulse_file": self.pulse_file,
            },
            "integration": {
                "backend": self.backend, "dt": self.dt, "n_samples": self.n_samples,
                "continue_time": self.continue_time,
            },
            "optimizer": {
                "seed": self.seed, "budget": self.budget, "n_starts": self.n_starts,
                "lam": self.lam, "quad_nodes": self.quad_nodes,
                "fast_inner": self.fast_inner, "fast_n_modes": self.fast_n_modes,
                "fast_omega_max": self.fast_omega_max, "polish_maxfun": self.polish_maxfun,
            },
            "output": {"output_dir": self.output_dir, "workers": self.workers},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_nested(), indent=2, sort_keys=True) + "\n"


_SECTION_FIELDS = {
    "bath": ("eta", "omega_c", "beta", "n_modes", "omega_max", "grid_kind"),
    "pulse": ("t_f", "n_segments", "u_max", "mode", "pulse_file"),
    "integration": ("backend", "dt", "n_samples", "continue_time"),
    "optimizer": ("seed", "budget", "n_starts", "lam", "quad_nodes", "fast_inner",
                  "fast_n_modes", "fast_omega_max", "polish_maxfun"),
    "output": ("output_dir", "workers"),
}


def config_from_nested(data: dict) -> RunConfig:
    """Build a RunConfig from the nested file layout, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigurationError("configuration root must be a JSON object")
    kwargs = {}
    known_sections = set(_SECTION_FIELDS) | {"scenario"}
    for key in data:
        if key not in known_sections:
            raise ConfigurationError(f"unknown configuration section {key!r}")
    if "scenario" in data:
        kwargs["scenario"] = str(data["scenario"])
    for section, fields in _SECTION_FIELDS.items():
        block = data.get(section, {})
        if not isinstance(block, dict):
            raise ConfigurationError(f"{section}: must be a JSON object")
        for key in block:
            if key not in fields:
                raise ConfigurationError(f"{section}.{key}: unknown configuration key")
        kwargs.update({k: block[k] for k in fields if k in block})
    try:
        config = RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"invalid configuration: {exc}") from None
    config.validate()
    return config


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno} (byte offset {exc.pos})"
        ) from None
    try:
        return config_from_nested(data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
