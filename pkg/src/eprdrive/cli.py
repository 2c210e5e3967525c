"""Batch experiment front-end.

Subcommands::

    eprdrive simulate --config run.json [--out DIR] [--seed N]
    eprdrive optimize --config run.json [--out DIR] [--seed N]
    eprdrive sweep    --config run.json --axis beta --values 1,0.5,0.1 [--workers K]
    eprdrive analyze  SNAPSHOT.json [--out DIR] [--beta B]

Every run writes an ``effective_config.json`` capturing all resolved
values; every output file round-trips through its own parser. Exit
codes: 0 success, 2 configuration error, 3 propagation failure,
4 unparsable input file, 1 anything else.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time

import numpy as np

from . import analysis as an
from .bath import thermal_initial_covariance
from .config import RunConfig, config_from_nested, load_config
from .control import optimize as run_optimize
from .exceptions import ConfigurationError, EprdriveError, ParseError, PropagationError
from .gaussian import CovarianceMatrix, log_negativity, neg_log_nu, det_gamma, wigner_grid
from .propagation import continue_free, propagate
from .pulses import ControlPulse

EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_CONFIG = 2
EXIT_PROPAGATION = 3
EXIT_PARSE = 4


# ---------------------------------------------------------------------------
# File helpers (all writers have a matching parser; write -> read -> write
# reproduces the bytes)
# ---------------------------------------------------------------------------


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno} (byte offset {exc.pos})"
        ) from None


def _verify_roundtrip_json(path: str) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        original = fh.read()
    if _json_text(_load_json(path)) != original:
        raise ParseError(f"{path}: round-trip through the JSON parser is not byte-identical")


def _verify_roundtrip_csv(path: str) -> None:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        original = fh.read()
    lines = original.split("\r\n")
    if lines[-1] != "":
        raise ParseError(f"{path}: missing trailing newline")
    header, rows = lines[0], lines[1:-1]
    out = [header]
    for row in rows:
        cells = row.split(",")
        rebuilt = []
        for cell in cells:
            try:
                rebuilt.append(repr(float(cell)) if ("." in cell or "e" in cell or "inf" in cell or "nan" in cell) else cell)
            except ValueError:
                rebuilt.append(cell)
        out.append(",".join(rebuilt))
    if "\r\n".join(out) + "\r\n" != original:
        raise ParseError(f"{path}: round-trip through the CSV parser is not byte-identical")


def _snapshot_payload(sigma, time_value: float, beta: float, scenario: str) -> dict:
    return {
        "kind": "covariance_snapshot",
        "scenario": scenario,
        "time": float(time_value),
        "beta": float(beta),
        "dim": 4,
        "entries": [float(x) for x in np.asarray(sigma).ravel()],
        "e_n": log_negativity(sigma),
        "neg_log_nu": neg_log_nu(sigma),
        "det_gamma": det_gamma(sigma),
    }


def _wigner_csv(sigma_block, n: int = 121, span_sigmas: float = 6.0) -> str:
    spread = span_sigmas * float(np.sqrt(np.max(np.diagonal(sigma_block))))
    qs, ps, w = wigner_grid(sigma_block, [0.0, 0.0], (-spread, spread), (-spread, spread), n, n)
    rows = ["Q,P,W"]
    for i in range(n):
        for j in range(n):
            rows.append(f"{float(qs[i])!r},{float(ps[j])!r},{float(w[i, j])!r}")
    return "\r\n".join(rows) + "\r\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _resolved_config(args) -> RunConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "out", None) is not None:
        config.output_dir = args.out
    if getattr(args, "workers", None) is not None:
        config.workers = args.workers
    config.validate()
    return config


def _run_dir(config: RunConfig, kind: str) -> str:
    return os.path.join(config.output_dir, f"{config.scenario}_{kind}")


def _load_pulse(config: RunConfig) -> ControlPulse:
    if config.pulse_file is None:
        return config.zero_pulse()
    with open(config.pulse_file, "r", encoding="utf-8", newline="") as fh:
        pulse = ControlPulse.from_csv(fh.read(), u_max=config.u_max, mode=config.mode)
    if abs(pulse.t_f - config.t_f) > 1e-9:
        raise ConfigurationError(
            f"pulse file horizon {pulse.t_f:g} does not match configured t_f {config.t_f:g}"
        )
    return pulse


def cmd_simulate(args) -> int:
    config = _resolved_config(args)
    out = _run_dir(config, "simulate")
    bath = config.build_bath()
    pulse = _load_pulse(config)
    sigma0 = thermal_initial_covariance(bath, config.beta)
    keep_full = config.continue_time > 0
    result = propagate(
        sigma0, pulse, bath,
        sample_times=config.sample_times(), backend=config.backend, dt=config.dt,
        keep_final_full=keep_full, check_symplectic=False,
    )
    snapshot_sigma = result.covariances[-1]
    if keep_full:
        result = continue_free(result, bath, config.continue_time,
                               n_samples=max(10, config.n_samples // 4))

    nm = an.to_normal_modes(snapshot_sigma)
    _write_text(os.path.join(out, "effective_config.json"), config.to_json())
    _write_text(os.path.join(out, "timeseries.csv"), result.to_csv())
    _write_text(os.path.join(out, "final_state.json"),
                _json_text(_snapshot_payload(snapshot_sigma, config.t_f, config.beta, config.scenario)))
    _write_text(os.path.join(out, "wigner_plus.csv"), _wigner_csv(nm.plus_block))
    _write_text(os.path.join(out, "wigner_minus.csv"), _wigner_csv(nm.minus_block))
    _write_text(os.path.join(out, "bath.csv"), bath.to_csv())

    for name in ("effective_config.json", "final_state.json"):
        _verify_roundtrip_json(os.path.join(out, name))
    for name in ("timeseries.csv", "wigner_plus.csv", "wigner_minus.csv", "bath.csv"):
        _verify_roundtrip_csv(os.path.join(out, name))
    print(f"simulate: wrote {out} (E_N at t_f = {log_negativity(snapshot_sigma):.6g})")
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = _resolved_config(args)
    out = _run_dir(config, "optimize")
    objective = config.build_objective()
    report = run_optimize(
        objective, seed=config.seed, budget=config.budget, n_starts=config.n_starts,
        polish_maxfun=config.polish_maxfun, report_samples=config.n_samples,
    )
    final = report.final_result
    _write_text(os.path.join(out, "effective_config.json"), config.to_json())
    _write_text(os.path.join(out, "report.json"), report.to_json() + "\n")
    _write_text(os.path.join(out, "best_pulse.csv"), report.best_pulse.to_csv())
    _write_text(os.path.join(out, "trajectory.csv"), final.to_csv())
    _write_text(os.path.join(out, "final_state.json"),
                _json_text(_snapshot_payload(final.covariances[-1], config.t_f, config.beta, config.scenario)))
    for name in ("effective_config.json", "report.json", "final_state.json"):
        _verify_roundtrip_json(os.path.join(out, name))
    for name in ("best_pulse.csv", "trajectory.csv"):
        _verify_roundtrip_csv(os.path.join(out, name))
    print(f"optimize: best E_N = {report.best_e_n:.6g} "
          f"({report.n_evaluations} evaluations, wrote {out})")
    return EXIT_OK


SWEEP_AXES = ("beta", "eta", "t_f", "n_segments")


def _sweep_point(nested_config: dict, axis: str, value: float, out_root: str):
    config = config_from_nested(nested_config)
    if axis == "n_segments":
        setattr(config, axis, int(value))
    else:
        setattr(config, axis, float(value))
    config.scenario = f"{config.scenario}_{axis}_{value:g}"
    config.output_dir = out_root
    config.validate()
    objective = config.build_objective()
    t0 = time.perf_counter()
    report = run_optimize(
        objective, seed=config.seed, budget=config.budget, n_starts=config.n_starts,
        polish_maxfun=config.polish_maxfun, report_samples=config.n_samples,
    )
    wall = time.perf_counter() - t0
    out = _run_dir(config, "optimize")
    _write_text(os.path.join(out, "effective_config.json"), config.to_json())
    _write_text(os.path.join(out, "report.json"), report.to_json() + "\n")
    _write_text(os.path.join(out, "best_pulse.csv"), report.best_pulse.to_csv())
    _write_text(os.path.join(out, "trajectory.csv"), report.final_result.to_csv())
    return value, report.best_e_n, report.best_neg_log_nu, wall


def cmd_sweep(args) -> int:
    config = _resolved_config(args)
    if args.axis not in SWEEP_AXES:
        raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}, got {args.axis!r}")
    try:
        values = [float(v) for v in args.values.split(",") if v]
    except ValueError:
        raise ConfigurationError(f"could not parse sweep values {args.values!r}") from None
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    out_root = os.path.join(config.output_dir, f"{config.scenario}_sweep_{args.axis}")
    nested = config.to_nested()

    rows = []
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_sweep_point, nested, args.axis, v, out_root) for v in values]
            rows = [f.result() for f in futures]
    else:
        rows = [_sweep_point(nested, args.axis, v, out_root) for v in values]

    lines = ["value,best_E_N,neg_log_nu,wall_time_s"]
    for value, e_n, nln, wall in rows:
        lines.append(f"{float(value)!r},{float(e_n)!r},{float(nln)!r},{float(wall)!r}")
    _write_text(os.path.join(out_root, "summary.csv"), "\r\n".join(lines) + "\r\n")
    _verify_roundtrip_csv(os.path.join(out_root, "summary.csv"))
    print(f"sweep over {args.axis}: " + "; ".join(f"{v:g} -> E_N {e:.4g}" for v, e, _, _ in rows))
    return EXIT_OK


def cmd_analyze(args) -> int:
    data = _load_json(args.snapshot)
    try:
        dim = int(data["dim"])
        entries = np.array(data["entries"], dtype=float).reshape(dim, dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{args.snapshot}: not a covariance snapshot ({exc})") from None
    beta = args.beta if args.beta is not None else data.get("beta")
    cov = CovarianceMatrix(dim=dim, entries=entries)
    nm = an.to_normal_modes(cov.entries)
    report = an.semi_epr_report(nm)
    dec = an.det_gamma_decomposition(nm)
    e_n = log_negativity(cov.entries)
    payload = {
        "label": report.label,
        "e_n": e_n,
        "neg_log_nu": neg_log_nu(cov.entries),
        "mode_count": an.mode_count_estimate(e_n),
        "det_gamma": det_gamma(cov.entries),
        "four_det_gamma": dec.four_det_gamma,
        "delta_q": dec.delta_q,
        "delta_p": dec.delta_p,
        "cross": dec.cross,
        "sectors_correlated": dec.sectors_correlated,
        "r_plus": report.plus.r, "phi_plus": report.plus.phi, "a_plus": report.plus.a,
        "r_minus": report.minus.r, "phi_minus": report.minus.phi, "a_minus": report.minus.a,
        "thermal_distance_plus": report.thermal_distance_plus,
    }
    if beta is not None:
        satisfied, margin = an.temperature_bound_check(report.minus.r, float(beta))
        payload["temperature_bound"] = {
            "beta": float(beta),
            "satisfied": satisfied,
            "margin": margin,
            "r_threshold": an.squeezing_threshold(float(beta)),
        }
    out = args.out if args.out is not None else os.path.dirname(os.path.abspath(args.snapshot))
    path = os.path.join(out, "diagnostics.json")
    _write_text(path, _json_text(payload))
    _verify_roundtrip_json(path)
    print(f"analyze: label={report.label} E_N={e_n:.6g} (wrote {path})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eprdrive",
                                     description="Driven two-mode entanglement experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--workers", type=int, default=None, help="parallel worker count")

    p_sim = sub.add_parser("simulate", help="propagate a pulse and export the trajectory")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_opt = sub.add_parser("optimize", help="search for the entanglement-maximizing pulse")
    add_common(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_sweep = sub.add_parser("sweep", help="one optimize run per parameter value")
    add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, help=f"one of {SWEEP_AXES}")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_an = sub.add_parser("analyze", help="diagnostics for a covariance snapshot")
    p_an.add_argument("snapshot", help="covariance snapshot JSON")
    p_an.add_argument("--out", default=None)
    p_an.add_argument("--beta", type=float, default=None, help="inverse temperature override")
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropagationError as exc:
        print(f"propagation failure: {exc}", file=sys.stderr)
        return EXIT_PROPAGATION
    except (ParseError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except EprdriveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERIC


if __name__ == "__main__":
    sys.exit(main())
