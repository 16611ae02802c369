"""Quantum Otto and Carnot cycles of a single qubit.

Adiabatic strokes are sudden gap changes at frozen populations; with no
transverse field the Hamiltonian commutes with itself at all times, so any
ramp speed gives the same state. The cycle starts in the Gibbs state of the
cold bath at the cold gap.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .accounting import first_law_check, stroke_record
from .core import (
    QubitHamiltonian,
    binary_entropy,
    check_temperature,
    excited_population,
    gibbs_state,
    trace_distance,
)
from .dynamics import (
    DEFAULT_GAMMA_DT,
    FULL_THERMALIZATION,
    BathSpec,
    Trajectory,
    quasistatic_isotherm,
    quench,
    relaxation_rate,
    thermalize,
)
from .errors import DomainError, InvariantViolation

MODES = ("exact", "finite_time")
#: Samples per relaxation time on exact-mode thermal strokes (dumps only).
EXACT_SAMPLES_PER_GAMMA = 1.0
EXACT_CLOSURE_TOL = 1e-9
EXACT_RETURN_TOL = 1e-8


def _check_bath_pair(t_cold, t_hot):
    check_temperature(t_cold, "t_cold")
    check_temperature(t_hot, "t_hot")
    if not t_cold < t_hot:
        raise DomainError(f"need t_cold < t_hot, got t_cold={t_cold}, t_hot={t_hot}")


def _check_gaps(omega_c, omega_h):
    if not (math.isfinite(omega_c) and math.isfinite(omega_h)):
        raise DomainError("gaps must be finite")
    if not 0 < omega_c <= omega_h:
        raise DomainError(f"need 0 < omega_c <= omega_h, got omega_c={omega_c}, omega_h={omega_h}")


def is_engine(t_cold, t_hot, omega_c, omega_h):
    """Work-extraction condition ``omega_c / omega_h >= T_c / T_h``."""
    return omega_c * t_hot >= t_cold * omega_h


@dataclass(frozen=True)
class OttoSpec:
    """Otto cycle parameters.

    In ``finite_time`` mode thermal strokes are integrated with RK4 at rate
    ``gamma0``; ``duration`` applies to both thermal strokes and defaults to
    ``40 / Gamma`` of each bath. ``exact`` mode uses the closed-form
    relaxation over the same durations.
    """

    t_cold: float
    t_hot: float
    omega_c: float
    omega_h: float
    mode: str = "exact"
    gamma0: float = 1.0
    duration: Optional[float] = None
    dt: Optional[float] = None

    def __post_init__(self):
        _check_bath_pair(self.t_cold, self.t_hot)
        _check_gaps(self.omega_c, self.omega_h)
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.gamma0 > 0:
            raise DomainError(f"gamma0 must be positive, got {self.gamma0}")
        if self.duration is not None and not self.duration > 0:
            raise DomainError(f"duration must be positive, got {self.duration}")
        if self.dt is not None and not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")

    @property
    def engine(self):
        return is_engine(self.t_cold, self.t_hot, self.omega_c, self.omega_h)


@dataclass(frozen=True)
class CarnotSpec:
    t_cold: float
    t_hot: float
    omega_c: float
    omega_h: float
    isotherm_steps: int = 400

    def __post_init__(self):
        _check_bath_pair(self.t_cold, self.t_hot)
        _check_gaps(self.omega_c, self.omega_h)
        if int(self.isotherm_steps) != self.isotherm_steps or self.isotherm_steps < 1:
            raise DomainError(f"isotherm_steps must be an integer >= 1, got {self.isotherm_steps}")
        if self.omega_h_prime < self.omega_h or self.omega_c_prime > self.omega_c:
            raise DomainError(
                "Carnot gaps out of order: need (T_h/T_c) omega_c >= omega_h, "
                f"got omega_h'={self.omega_h_prime:.6g} < omega_h={self.omega_h}")

    @property
    def omega_h_prime(self):
        """Gap reached by the first adiabat: ``(T_h / T_c) omega_c``."""
        return self.t_hot / self.t_cold * self.omega_c

    @property
    def omega_c_prime(self):
        """Gap reached by the second adiabat: ``(T_c / T_h) omega_h``."""
        return self.t_cold / self.t_hot * self.omega_h


@dataclass(frozen=True)
class CycleReport:
    strokes: tuple
    extracted_work: float
    efficiency: float
    closure_residual: float
    state_return_error: float
    heat_hot: float
    engine: bool
    trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)

    @property
    def total_entropy_production(self):
        return math.fsum(s.entropy_production for s in self.strokes if s.entropy_production is not None)

    def stroke(self, label):
        for s in self.strokes:
            if s.label == label:
                return s
        raise KeyError(label)


class Efficiency(NamedTuple):
    value: float
    engine: bool


def otto_efficiency(spec):
    """``1 - omega_c / omega_h``; ``engine`` is False when no work can be extracted."""
    return Efficiency(1.0 - spec.omega_c / spec.omega_h, spec.engine)


def carnot_efficiency(t_cold, t_hot):
    """``1 - T_c / T_h``."""
    _check_bath_pair(t_cold, t_hot)
    return 1.0 - t_cold / t_hot


def _efficiency(extracted, heat_hot):
    # no heat drawn from the hot bath: report zero rather than 0/0
    if abs(heat_hot) <= 1e-14:
        return 0.0
    return extracted / heat_hot


def _records(segments):
    records = []
    for index, (label, traj, t_bath) in enumerate(segments, start=1):
        try:
            records.append(stroke_record(traj, label, t_bath))
        except InvariantViolation as exc:
            raise InvariantViolation(exc.invariant, f"stroke {index}: {exc}") from exc
    return tuple(records)


def _join(segments):
    return Trajectory.join([seg for _, seg, _ in segments])


def _thermal_stroke(rho, h, bath, spec):
    gamma = relaxation_rate(h, bath)
    duration = spec.duration if spec.duration is not None else FULL_THERMALIZATION / gamma
    if spec.mode == "exact":
        dt = spec.dt if spec.dt is not None else 1.0 / (EXACT_SAMPLES_PER_GAMMA * gamma)
        return thermalize(rho, h, bath, duration, min(dt, duration), method="exact")
    dt = spec.dt if spec.dt is not None else DEFAULT_GAMMA_DT / gamma
    return thermalize(rho, h, bath, duration, min(dt, duration), method="rk4")


def run_otto(spec):
    """Run one Otto cycle and return its :class:`CycleReport`.

    Strokes: gap ``omega_c -> omega_h`` at frozen state, thermalization with
    the hot bath, gap ``omega_h -> omega_c``, thermalization with the cold bath.
    """
    hc, hh = QubitHamiltonian(spec.omega_c), QubitHamiltonian(spec.omega_h)
    hot, cold = BathSpec(spec.t_hot, spec.gamma0), BathSpec(spec.t_cold, spec.gamma0)
    rho0 = gibbs_state(hc, spec.t_cold).matrix

    s1 = quench(rho0, hc, hh)
    s2 = _thermal_stroke(s1.final, hh, hot, spec)
    s3 = quench(s2.final, hh, hc)
    s4 = _thermal_stroke(s3.final, hc, cold, spec)
    segments = [
        ("compression", s1, None),
        ("hot_isochore", s2, spec.t_hot),
        ("expansion", s3, None),
        ("cold_isochore", s4, spec.t_cold),
    ]
    records = _records(segments)
    w_ext = -(records[0].work + records[2].work)
    q_hot = records[1].heat
    return CycleReport(
        strokes=records,
        extracted_work=w_ext,
        efficiency=_efficiency(w_ext, q_hot),
        closure_residual=first_law_check(records),
        state_return_error=trace_distance(rho0, s4.final),
        heat_hot=q_hot,
        engine=spec.engine,
        trajectory=_join(segments),
    )


def run_carnot(spec):
    """Run one Carnot cycle with ``spec.isotherm_steps`` steps per isotherm.

    Adiabat ``omega_c -> omega_h'``, hot isotherm ``omega_h' -> omega_h``,
    adiabat ``omega_h -> omega_c'``, cold isotherm ``omega_c' -> omega_c``.
    """
    hc, hh = QubitHamiltonian(spec.omega_c), QubitHamiltonian(spec.omega_h)
    hh2, hc2 = QubitHamiltonian(spec.omega_h_prime), QubitHamiltonian(spec.omega_c_prime)
    rho0 = gibbs_state(hc, spec.t_cold).matrix
    n = int(spec.isotherm_steps)

    s1 = quench(rho0, hc, hh2)
    s2 = quasistatic_isotherm(hh2, hh, spec.t_hot, n, rho0=s1.final)
    s3 = quench(s2.final, hh, hc2)
    s4 = quasistatic_isotherm(hc2, hc, spec.t_cold, n, rho0=s3.final)
    segments = [
        ("adiabat_up", s1, None),
        ("hot_isotherm", s2, spec.t_hot),
        ("adiabat_down", s3, None),
        ("cold_isotherm", s4, spec.t_cold),
    ]
    records = _records(segments)
    w_ext = -math.fsum(r.work for r in records)
    q_hot = records[1].heat
    return CycleReport(
        strokes=records,
        extracted_work=w_ext,
        efficiency=_efficiency(w_ext, q_hot),
        closure_residual=first_law_check(records),
        state_return_error=trace_distance(rho0, s4.final),
        heat_hot=q_hot,
        engine=True,
        trajectory=_join(segments),
    )


@dataclass(frozen=True)
class DeficitReport:
    w_otto: float
    w_matched_carnot: float
    dissipation: float
    delta_s_hot: float
    sigma_hot: float
    sigma_cold: float
    residual: float


def otto_carnot_deficit(spec):
    """Compare an exact Otto cycle with the reversible cycle of equal entropy swing.

    The matched reversible cycle exchanges the hot-stroke entropy change
    ``dS`` with both baths and delivers ``(T_h - T_c) dS``. Otto falls short of
    it by exactly ``T_h Sigma_hot + T_c Sigma_cold``.
    """
    if spec.mode != "exact":
        raise DomainError("otto_carnot_deficit requires exact mode")
    report = run_otto(spec)
    hot, cold = report.stroke("hot_isochore"), report.stroke("cold_isochore")
    matched = (spec.t_hot - spec.t_cold) * hot.delta_entropy
    dissipation = spec.t_hot * hot.entropy_production + spec.t_cold * cold.entropy_production
    return DeficitReport(
        w_otto=report.extracted_work,
        w_matched_carnot=matched,
        dissipation=dissipation,
        delta_s_hot=hot.delta_entropy,
        sigma_hot=hot.entropy_production,
        sigma_cold=cold.entropy_production,
        residual=abs(matched - dissipation - report.extracted_work),
    )


def otto_closed_form(t_cold, t_hot, omega_c, omega_h):
    """Limit-cycle ledgers of the ideal Otto cycle from Gibbs populations."""
    pc = excited_population(omega_c, t_cold)
    ph = excited_population(omega_h, t_hot)
    return {
        "p_cold": pc,
        "p_hot": ph,
        "w1": (omega_h - omega_c) * pc,
        "w2": (omega_c - omega_h) * ph,
        "q_hot": omega_h * (ph - pc),
        "q_cold": omega_c * (pc - ph),
        "w_ext": (omega_h - omega_c) * (ph - pc),
        "delta_s_hot": binary_entropy(ph) - binary_entropy(pc),
    }


# --- sweeps -------------------------------------------------------------------

SWEEP_AXES = ("t_cold", "t_hot", "omega_c", "omega_h", "steps")


@dataclass(frozen=True)
class SweepGrid:
    """Axis values of a Cartesian parameter grid; ``steps`` is used by Carnot only."""

    t_cold: tuple
    t_hot: tuple
    omega_c: tuple
    omega_h: tuple
    steps: tuple = (400,)

    def points(self):
        axes = [tuple(getattr(self, a)) for a in SWEEP_AXES]
        if any(len(a) == 0 for a in axes):
            raise DomainError("sweep grid is empty")
        return [dict(zip(SWEEP_AXES, p)) for p in itertools.product(*axes)]


@dataclass(frozen=True)
class SweepPoint:
    index: int
    params: dict
    engine: bool
    eta_carnot: Optional[float]
    report: Optional[CycleReport] = None
    skipped: Optional[str] = None


def _run_point(job):
    index, params, cycle, otto_options = job
    tc, th, wc, wh = params["t_cold"], params["t_hot"], params["omega_c"], params["omega_h"]
    engine = is_engine(tc, th, wc, wh)
    try:
        eta_c = carnot_efficiency(tc, th)
    except DomainError:
        eta_c = None
    try:
        if cycle == "otto":
            report = run_otto(OttoSpec(tc, th, wc, wh, **otto_options))
        elif cycle == "carnot":
            report = run_carnot(CarnotSpec(tc, th, wc, wh, params["steps"]))
        else:
            raise DomainError(f"unknown cycle {cycle!r}")
    except DomainError as exc:
        return SweepPoint(index, params, engine, eta_c, None, str(exc))
    # drop trajectories: sweeps only need the ledgers and they must pickle cheaply
    return SweepPoint(index, params, engine, eta_c, _strip(report))


def _strip(report):
    d = {k: getattr(report, k) for k in report.__dataclass_fields__ if k != "trajectory"}
    return CycleReport(**d)


def sweep(grid, cycle="otto", jobs=1, **otto_options):
    """Run a cycle at every grid point, in grid order.

    Points that violate a spec precondition are returned with ``skipped`` set
    instead of aborting the sweep.
    """
    if cycle not in ("otto", "carnot"):
        raise DomainError(f"unknown cycle {cycle!r}")
    work = [(i, p, cycle, otto_options) for i, p in enumerate(grid.points())]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_point, work, chunksize=max(1, len(work) // (4 * jobs))))
    return [_run_point(w) for w in work]
