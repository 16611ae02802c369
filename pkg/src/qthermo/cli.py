"""``qthermo`` command-line interface.

Usage::

    qthermo <command> [flags]

Commands: ``otto``, ``carnot``, ``deficit``, ``jarzynski``, ``relax``,
``sweep``. Values may also come from a flat ``key=value`` file given with
``--config``; flags override file values. Reports are written as JSON or
CSV, with every number at 12 significant digits.

Exit codes: 0 ok, 2 configuration error, 3 physics invariant violated,
4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import __version__
from .accounting import SIGMA_TOL, cumulative_heat, cumulative_work, stroke_record
from .core import DensityOperator, QubitHamiltonian, gibbs_state, relative_entropy
from .cycles import (
    CarnotSpec,
    OttoSpec,
    SweepGrid,
    carnot_efficiency,
    otto_carnot_deficit,
    otto_efficiency,
    run_carnot,
    run_otto,
    sweep,
)
from .dynamics import (
    DEFAULT_GAMMA_DT,
    FULL_THERMALIZATION,
    MAX_GAMMA_DT,
    MIN_GAP,
    BathSpec,
    DriveSchedule,
    quench,
    relaxation_rate,
    relaxed_state,
    thermalize,
    unitary_propagate,
)
from .errors import DomainError, IntegratorError, InvariantViolation
from .fluctuations import driven_protocol, jarzynski_check, sudden_quench, tpm_distribution

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 2, 3, 4

STROKE_COLUMNS = ["index", "label", "W", "Q", "dE", "dS", "Sigma", "T_bath"]
SWEEP_COLUMNS = STROKE_COLUMNS + ["tc", "th", "wc", "wh", "engine_flag", "w_ext", "eta", "eta_carnot"]
TRAJECTORY_COLUMNS = ["t", "p_excited", "re_coherence", "im_coherence", "omega", "W_cum", "Q_cum"]

FLOAT_KEYS = {"tc", "th", "wc", "wh", "gamma", "duration", "dt", "beta", "delta", "omega", "temp", "p0"}
INT_KEYS = {"steps", "jobs"}
CHOICES = {"mode": ("exact", "finite_time"), "cycle": ("otto", "carnot"), "format": ("json", "csv")}
IO_KEYS = ("format", "output", "dump_trajectory", "figure", "jobs")

COMMAND_KEYS = {
    "otto": ("tc", "th", "wc", "wh", "mode", "gamma", "duration", "dt"),
    "carnot": ("tc", "th", "wc", "wh", "steps"),
    "deficit": ("tc", "th", "wc", "wh"),
    "jarzynski": ("beta", "wc", "wh", "delta", "duration", "dt"),
    "relax": ("omega", "temp", "p0", "gamma", "mode", "duration", "dt"),
    "sweep": ("cycle", "tc", "th", "wc", "wh", "steps", "mode", "gamma", "duration", "dt"),
}
GRID_KEYS = ("tc", "th", "wc", "wh", "steps")

DEFAULTS = {
    "tc": 1.0, "th": 2.0, "wc": 1.0, "wh": 1.5, "mode": "exact", "gamma": 1.0,
    "steps": 400, "beta": 1.0, "delta": 0.0, "omega": 1.0, "temp": 1.0, "p0": 1.0,
    "cycle": "otto", "format": "json", "jobs": 1,
}
COMMAND_DEFAULTS = {"jarzynski": {"wh": 2.0}}

# Runtime invariant tolerances
EXACT_CLOSURE_TOL = 1e-9
FINITE_CLOSURE_TOL = 1e-5
EXACT_RETURN_TOL = 1e-8
FINITE_RETURN_TOL = 1e-4
JARZYNSKI_TOL = 1e-10


class ConfigError(Exception):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict
    format: str = "json"
    output: Optional[str] = None
    dump_trajectory: Optional[str] = None
    figure: Optional[str] = None
    jobs: int = 1


# --- parsing ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Reports parse failures as a single-line :class:`ConfigError`."""

    def error(self, message):
        key = "arguments"
        if message.startswith("unrecognized arguments:"):
            key = message.split(":", 1)[1].split()[0].lstrip("-")
        elif message.startswith("argument "):
            key = message.split()[1].split("/")[0].rstrip(":").lstrip("-")
        raise ConfigError(key, message)


def _build_parser():
    parser = _Parser(prog="qthermo", description="Qubit heat-engine simulator.")
    parser.add_argument("--version", action="version", version=f"qthermo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "otto": "run one quantum Otto cycle",
        "carnot": "run one quantum Carnot cycle with discretized isotherms",
        "deficit": "Otto work deficit relative to the matched reversible cycle",
        "jarzynski": "two-point-measurement work statistics and the Jarzynski equality",
        "relax": "thermalize a qubit and compare with the closed-form relaxation",
        "sweep": "run a cycle over a parameter grid",
    }
    for name, keys in COMMAND_KEYS.items():
        p = sub.add_parser(name, help=helps[name])
        for key in keys:
            kw = {"choices": CHOICES[key]} if key in CHOICES else {}
            p.add_argument(f"--{key}", dest=key, default=None, **kw)
        p.add_argument("--config", default=None, help="flat key=value file; flags override it")
        p.add_argument("--format", default=None, choices=CHOICES["format"])
        p.add_argument("--output", default=None, help="report path (default: stdout)")
        p.add_argument("--figure", default=None, help="render a figure to this path")
        if name != "sweep":
            p.add_argument("--dump-trajectory", dest="dump_trajectory", default=None, metavar="PATH",
                           help="write t, p_excited, coherence, omega, cumulative W and Q as CSV")
        else:
            p.add_argument("--jobs", default=None, help="worker processes for the grid")
    return parser


def read_config_file(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment line."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _parse_scalar(key, text):
    if key in FLOAT_KEYS:
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(key, f"expected a number, got {text!r}") from None
        if not math.isfinite(value):
            raise ConfigError(key, f"must be finite, got {text!r}")
        return value
    if key in INT_KEYS:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {text!r}") from None
    if key in CHOICES and text not in CHOICES[key]:
        raise ConfigError(key, f"must be one of {', '.join(CHOICES[key])}, got {text!r}")
    return text


def _parse_axis(key, text):
    """``a,b,c`` or an inclusive ``start:stop:num`` range."""
    if isinstance(text, (list, tuple)):
        return [_parse_scalar(key, str(v)) for v in text]
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(key, f"range must be start:stop:num, got {text!r}")
        start, stop = (_parse_scalar(key, p) for p in parts[:2])
        num = _parse_scalar("steps", parts[2]) if parts[2].strip() else 0
        values = np.linspace(start, stop, num).tolist() if num > 0 else []
        return [int(round(v)) for v in values] if key in INT_KEYS else values
    return [_parse_scalar(key, p) for p in text.split(",") if p.strip()]


def parse_config(argv):
    """Turn command-line arguments (and an optional config file) into a :class:`RunConfig`.

    Raises :class:`ConfigError` naming the offending key.
    """
    args = _build_parser().parse_args(argv)
    command = args.command
    allowed = set(COMMAND_KEYS[command]) | set(IO_KEYS) | {"command"}
    if command != "sweep":
        allowed.discard("jobs")
    else:
        allowed.discard("dump_trajectory")
    raw = {}
    if args.config:
        for key, value in read_config_file(args.config).items():
            if key not in allowed:
                raise ConfigError(key, f"unknown key for command {command!r}")
            if key == "command":
                if value != command:
                    raise ConfigError("command", f"file is for {value!r}, not {command!r}")
                continue
            raw[key] = value
    for key in allowed - {"command"}:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value

    params = {}
    for key in COMMAND_KEYS[command]:
        if key in raw:
            if command == "sweep" and key in GRID_KEYS:
                params[key] = _parse_axis(key, raw[key])
            else:
                params[key] = _parse_scalar(key, raw[key])
        else:
            default = COMMAND_DEFAULTS.get(command, {}).get(key, DEFAULTS.get(key))
            if command == "sweep" and key in GRID_KEYS and default is not None:
                default = [default]
            params[key] = default
    fmt = _parse_scalar("format", raw.get("format", DEFAULTS["format"]))
    jobs = _parse_scalar("jobs", raw.get("jobs", DEFAULTS["jobs"]))
    if jobs < 1:
        raise ConfigError("jobs", f"must be >= 1, got {jobs}")
    config = RunConfig(command, params, fmt, raw.get("output"), raw.get("dump_trajectory"),
                       raw.get("figure"), jobs)
    validate(config)
    return config


def _require(ok, key, message):
    if not ok:
        raise ConfigError(key, message)


def _check_thermal_step(params, rates):
    """dt and duration checks shared by commands with thermal strokes."""
    duration, dt = params.get("duration"), params.get("dt")
    _require(duration is None or duration > 0, "duration", f"must be positive, got {duration}")
    _require(dt is None or dt > 0, "dt", f"must be positive, got {dt}")
    if dt is not None and params.get("mode") == "finite_time":
        worst = max(rates)
        _require(worst * dt <= MAX_GAMMA_DT, "dt",
                 f"Gamma*dt = {worst * dt:.4g} exceeds {MAX_GAMMA_DT} (Gamma = {worst:.6g})")


def _check_cycle_params(p):
    for key in ("tc", "th"):
        _require(p[key] > 0, key, f"temperature must be positive, got {p[key]}")
    _require(p["tc"] < p["th"], "tc", f"T_c < T_h violated (tc={p['tc']}, th={p['th']})")
    _require(p["wc"] > 0, "wc", f"gap must be positive, got {p['wc']}")
    _require(p["wc"] <= p["wh"], "wc", f"omega_c <= omega_h violated (wc={p['wc']}, wh={p['wh']})")


def validate(config):
    """Check every physical parameter before any computation starts."""
    p, command = config.params, config.command
    if command in ("otto", "carnot", "deficit"):
        _check_cycle_params(p)
    if command == "otto":
        _require(p["gamma"] > 0, "gamma", f"must be positive, got {p['gamma']}")
        rates = [relaxation_rate(QubitHamiltonian(p["wh"]), BathSpec(p["th"], p["gamma"])),
                 relaxation_rate(QubitHamiltonian(p["wc"]), BathSpec(p["tc"], p["gamma"]))]
        _check_thermal_step(p, rates)
    elif command == "carnot":
        _require(p["steps"] >= 1, "steps", f"must be >= 1, got {p['steps']}")
        _require(p["wc"] * p["th"] >= p["tc"] * p["wh"], "wh",
                 f"(T_h/T_c) omega_c >= omega_h violated: no Carnot engine for wc/wh={p['wc'] / p['wh']:.6g} "
                 f"< tc/th={p['tc'] / p['th']:.6g}")
    elif command == "jarzynski":
        _require(p["beta"] > 0, "beta", f"must be positive, got {p['beta']}")
        _require(p["wc"] >= 0, "wc", f"gap must be >= 0, got {p['wc']}")
        _require(p["wh"] >= 0, "wh", f"gap must be >= 0, got {p['wh']}")
        _require(p["duration"] is None or p["duration"] > 0, "duration", "must be positive")
        if p["dt"] is not None:
            _require(p["dt"] > 0, "dt", f"must be positive, got {p['dt']}")
            _require(p["dt"] <= _drive_duration(p), "dt", "must not exceed the drive duration")
    elif command == "relax":
        _require(p["omega"] >= MIN_GAP, "omega", f"gap must be >= {MIN_GAP}, got {p['omega']}")
        _require(p["temp"] > 0, "temp", f"must be positive, got {p['temp']}")
        _require(0 <= p["p0"] <= 1, "p0", f"population must lie in [0, 1], got {p['p0']}")
        _require(p["gamma"] > 0, "gamma", f"must be positive, got {p['gamma']}")
        rate = relaxation_rate(QubitHamiltonian(p["omega"]), BathSpec(p["temp"], p["gamma"]))
        _check_thermal_step(p, [rate])
    elif command == "sweep":
        for key in GRID_KEYS:
            _require(len(p[key]) > 0, key, "empty grid axis")
        _require(p["gamma"] > 0, "gamma", f"must be positive, got {p['gamma']}")
        _require(p["duration"] is None or p["duration"] > 0, "duration", "must be positive")
        _require(p["dt"] is None or p["dt"] > 0, "dt", "must be positive")


def config_echo(config):
    """Normalized effective configuration, as included in every report."""
    echo = {"command": config.command}
    for key in COMMAND_KEYS[config.command]:
        value = config.params[key]
        if isinstance(value, list):
            echo[key] = [_num(v) for v in value]
        elif isinstance(value, float):
            echo[key] = _num(value)
        else:
            echo[key] = value
    return echo


def format_config(config):
    """The echo as ``key=value`` lines, re-parseable with ``--config``."""
    lines = []
    for key, value in config_echo(config).items():
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(_fmt(v) for v in value)
        elif isinstance(value, float):
            value = _fmt(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


# --- formatting -----------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _num(x):
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(format(float(x), ".12g"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _num(obj)


def _stroke_row(index, s):
    return {"index": index, "label": s.label, "W": s.work, "Q": s.heat, "dE": s.delta_energy,
            "dS": s.delta_entropy, "Sigma": s.entropy_production, "T_bath": s.bath_temperature}


@dataclass
class Outcome:
    """Everything a command produces before serialization."""

    result: dict
    columns: list
    rows: list
    trajectory: object = None
    draw: Optional[Callable[[str], None]] = None
    violations: list = field(default_factory=list)


def _check(violations, name, ok, message):
    if not ok:
        violations.append((name, message))


# --- commands -------------------------------------------------------------------

def _otto_spec(p):
    return OttoSpec(p["tc"], p["th"], p["wc"], p["wh"], mode=p.get("mode", "exact"),
                    gamma0=p.get("gamma", 1.0), duration=p.get("duration"), dt=p.get("dt"))


def _cycle_result(report, p, extra=None):
    result = {
        "engine": report.engine,
        "w_ext": report.extracted_work,
        "eta": report.efficiency,
        "eta_carnot": carnot_efficiency(p["tc"], p["th"]),
        "q_hot": report.heat_hot,
        "closure_residual": report.closure_residual,
        "state_return_error": report.state_return_error,
        "entropy_production_total": report.total_entropy_production,
    }
    result.update(extra or {})
    result["strokes"] = [_stroke_row(i, s) for i, s in enumerate(report.strokes, start=1)]
    return result


def _closure_checks(report, exact, enforce=True):
    violations = []
    if not enforce:
        return violations
    tol_c = EXACT_CLOSURE_TOL if exact else FINITE_CLOSURE_TOL
    tol_r = EXACT_RETURN_TOL if exact else FINITE_RETURN_TOL
    _check(violations, "closure", abs(report.closure_residual) <= tol_c,
           f"|sum(W+Q)| = {abs(report.closure_residual):.3e} > {tol_c}")
    _check(violations, "state_return", report.state_return_error <= tol_r,
           f"trace distance {report.state_return_error:.3e} > {tol_r}")
    return violations


def run_otto_command(p):
    from . import plotting

    spec = _otto_spec(p)
    report = run_otto(spec)
    eff = otto_efficiency(spec)
    result = _cycle_result(report, p, {"eta_otto_formula": eff.value})
    # user-set durations may legitimately leave the cycle open
    violations = _closure_checks(report, spec.mode == "exact", enforce=p["duration"] is None)
    rows = [_stroke_row(i, s) for i, s in enumerate(report.strokes, start=1)]
    return Outcome(result, STROKE_COLUMNS, rows, report.trajectory,
                   lambda path: plotting.plot_cycle(report, path), violations)


def run_carnot_command(p):
    from . import plotting

    spec = CarnotSpec(p["tc"], p["th"], p["wc"], p["wh"], p["steps"])
    report = run_carnot(spec)
    result = _cycle_result(report, p, {"omega_h_prime": spec.omega_h_prime,
                                       "omega_c_prime": spec.omega_c_prime})
    rows = [_stroke_row(i, s) for i, s in enumerate(report.strokes, start=1)]
    return Outcome(result, STROKE_COLUMNS, rows, report.trajectory,
                   lambda path: plotting.plot_cycle(report, path), _closure_checks(report, True))


def run_deficit_command(p):
    from . import plotting

    spec = OttoSpec(p["tc"], p["th"], p["wc"], p["wh"])
    d = otto_carnot_deficit(spec)
    report = run_otto(spec)
    result = {
        "w_otto": d.w_otto, "w_matched_carnot": d.w_matched_carnot, "dissipation": d.dissipation,
        "delta_s_hot": d.delta_s_hot, "sigma_hot": d.sigma_hot, "sigma_cold": d.sigma_cold,
        "residual": d.residual,
    }
    columns = list(result)
    violations = []
    _check(violations, "deficit_identity", d.residual <= EXACT_CLOSURE_TOL, f"residual {d.residual:.3e}")
    _check(violations, "entropy_production", d.dissipation >= -SIGMA_TOL, f"dissipation {d.dissipation:.3e}")
    return Outcome(result, columns, [result], report.trajectory,
                   lambda path: plotting.plot_cycle(report, path), violations)


def _drive_duration(p):
    if p["duration"] is not None:
        return p["duration"]
    return 1.0 if p["delta"] != 0 else None


def _jarzynski_drive(p):
    t_f = _drive_duration(p)
    if t_f is None:
        return None
    dt = p["dt"] if p["dt"] is not None else t_f / 1000.0
    wc, wh, delta = p["wc"], p["wh"], p["delta"]
    return DriveSchedule(
        gap=lambda t: wc + (wh - wc) * t / t_f,
        transverse=lambda t: delta * math.sin(math.pi * t / t_f),
        t_final=t_f,
        dt=dt,
    )


def run_jarzynski_command(p):
    from . import plotting

    h_i, h_f = QubitHamiltonian(p["wc"]), QubitHamiltonian(p["wh"])
    drive = _jarzynski_drive(p)
    rho0 = gibbs_state(h_i, 1.0 / p["beta"])
    if drive is None:
        protocol = sudden_quench(p["beta"], h_i, h_f)
        traj = quench(rho0, h_i, h_f)
    else:
        protocol = driven_protocol(p["beta"], drive)
        traj = unitary_propagate(rho0, drive)
    dist = tpm_distribution(protocol)
    check = jarzynski_check(protocol)
    result = {
        "protocol": "sudden_quench" if drive is None else "driven",
        "lhs": check.lhs, "rhs": check.rhs, "gap": check.gap,
        "mean_work": check.mean_work, "delta_f": check.delta_f,
        "second_law_slack": check.second_law_slack,
        "outcomes": [{"n": n, "m": m, "work": w, "probability": pr}
                     for n, m, w, pr in zip(dist.initial, dist.final, dist.works, dist.probabilities)],
    }
    violations = []
    _check(violations, "jarzynski_gap", check.gap <= JARZYNSKI_TOL, f"gap {check.gap:.3e} > {JARZYNSKI_TOL}")
    _check(violations, "second_law", check.second_law_slack >= -JARZYNSKI_TOL,
           f"<W> - dF = {check.second_law_slack:.3e}")
    return Outcome(result, ["n", "m", "work", "probability"], result["outcomes"], traj,
                   lambda path: plotting.plot_work_distribution(dist, check, path), violations)


def run_relax_command(p):
    from . import plotting

    h = QubitHamiltonian(p["omega"])
    bath = BathSpec(p["temp"], p["gamma"])
    rate = relaxation_rate(h, bath)
    duration = p["duration"] if p["duration"] is not None else FULL_THERMALIZATION / rate
    dt = p["dt"] if p["dt"] is not None else DEFAULT_GAMMA_DT / rate
    method = "exact" if p["mode"] == "exact" else "rk4"
    rho0 = DensityOperator.from_populations(p["p0"])
    traj = thermalize(rho0, h, bath, duration, min(dt, duration), method=method)
    record = stroke_record(traj, "thermalize", p["temp"])
    gibbs = gibbs_state(h, p["temp"])
    closed = relaxed_state(rho0, h, bath, duration)[0]
    d = np.array([relative_entropy(rho, gibbs) for rho in traj.states])
    increase = float(np.max(np.diff(d))) if len(d) > 1 else 0.0
    result = {
        "relaxation_rate": rate,
        "duration": duration,
        "method": method,
        "p_final": float(traj.final[1, 1].real),
        "p_equilibrium": gibbs.excited_population,
        "p_final_closed_form": float(closed[1, 1].real),
        "endpoint_error": float(np.max(np.abs(traj.final - closed))),
        "relative_entropy_initial": float(d[0]),
        "relative_entropy_final": float(d[-1]),
        "max_relative_entropy_increase": increase,
        "strokes": [_stroke_row(1, record)],
    }
    violations = []
    _check(violations, "spohn_monotonicity", increase <= SIGMA_TOL,
           f"relative entropy increased by {increase:.3e}")
    return Outcome(result, STROKE_COLUMNS, [_stroke_row(1, record)], traj,
                   lambda path: plotting.plot_relaxation(traj, h, p["temp"], path), violations)


def _sweep_row(pt):
    r = pt.report
    prm = pt.params
    base = {"tc": prm["t_cold"], "th": prm["t_hot"], "wc": prm["omega_c"], "wh": prm["omega_h"],
            "engine_flag": pt.engine, "eta_carnot": pt.eta_carnot}
    if r is None:
        row = {"index": pt.index, "label": f"skipped: {pt.skipped}", **base, "w_ext": None, "eta": None}
    else:
        row = {
            "index": pt.index, "label": "ok",
            "W": math.fsum(s.work for s in r.strokes),
            "Q": math.fsum(s.heat for s in r.strokes),
            "dE": math.fsum(s.delta_energy for s in r.strokes),
            "dS": math.fsum(s.delta_entropy for s in r.strokes),
            "Sigma": r.total_entropy_production,
            "T_bath": None,
            **base, "w_ext": r.extracted_work, "eta": r.efficiency,
        }
    return row


def run_sweep_command(p, jobs=1):
    from . import plotting

    grid = SweepGrid(tuple(p["tc"]), tuple(p["th"]), tuple(p["wc"]), tuple(p["wh"]), tuple(p["steps"]))
    options = {}
    if p["cycle"] == "otto":
        options = {"mode": p["mode"], "gamma0": p["gamma"], "duration": p["duration"], "dt": p["dt"]}
    points = sweep(grid, cycle=p["cycle"], jobs=jobs, **options)
    columns = SWEEP_COLUMNS + (["steps"] if p["cycle"] == "carnot" else [])
    rows = []
    violations = []
    exact = p["cycle"] == "carnot" or p["mode"] == "exact"
    for pt in points:
        row = _sweep_row(pt)
        if p["cycle"] == "carnot":
            row["steps"] = pt.params["steps"]
        rows.append(row)
        if pt.report is not None and p["duration"] is None:
            for name, msg in _closure_checks(pt.report, exact):
                violations.append((name, f"grid point {pt.index}: {msg}"))
    result = {"cycle": p["cycle"], "n_points": len(points),
              "n_skipped": sum(pt.report is None for pt in points), "points": rows}
    return Outcome(result, columns, rows, None, lambda path: plotting.plot_sweep(points, path), violations)


COMMANDS = {
    "otto": run_otto_command,
    "carnot": run_carnot_command,
    "deficit": run_deficit_command,
    "jarzynski": run_jarzynski_command,
    "relax": run_relax_command,
}


# --- output ---------------------------------------------------------------------

def render(config, outcome):
    """Serialize an outcome in the configured format."""
    if config.format == "json":
        doc = {"command": config.command, "config": config_echo(config), "result": _jsonable(outcome.result)}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    for line in format_config(config).splitlines():
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(outcome.columns)
    for row in outcome.rows:
        writer.writerow([_fmt(row.get(c)) for c in outcome.columns])
    return buf.getvalue()


def render_trajectory(traj):
    w, q = cumulative_work(traj), cumulative_heat(traj)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for k in range(len(traj)):
        rho = traj.states[k]
        writer.writerow([_fmt(v) for v in (traj.times[k], rho[1, 1].real, rho[0, 1].real, rho[0, 1].imag,
                                           traj.gaps[k], w[k], q[k])])
    return buf.getvalue()


def atomic_write(path, text):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qthermo-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_figure(draw, path):
    directory = os.path.dirname(os.path.abspath(path))
    suffix = os.path.splitext(path)[1] or ".png"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qthermo-", suffix=suffix)
    os.close(fd)
    try:
        draw(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute(config, stdout=None):
    """Run a validated configuration; returns the process exit code."""
    stdout = stdout or sys.stdout
    try:
        if config.command == "sweep":
            outcome = run_sweep_command(config.params, config.jobs)
        else:
            outcome = COMMANDS[config.command](config.params)
    except InvariantViolation as exc:
        print(f"qthermo: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (IntegratorError, DomainError) as exc:
        print(f"qthermo: invariant violated: state_validity: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    text = render(config, outcome)
    try:
        if config.output:
            atomic_write(config.output, text)
        else:
            stdout.write(text)
        if config.dump_trajectory and outcome.trajectory is not None:
            atomic_write(config.dump_trajectory, render_trajectory(outcome.trajectory))
        if config.figure and outcome.draw is not None:
            _atomic_figure(outcome.draw, config.figure)
    except OSError as exc:
        print(f"qthermo: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if outcome.violations:
        for name, message in outcome.violations:
            print(f"qthermo: invariant violated: {name}: {message}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv=None):
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"qthermo: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    return execute(config)


if __name__ == "__main__":
    sys.exit(main())
