"""Work, heat and entropy bookkeeping along trajectories.

Sign convention: positive work and heat flow *into* the qubit.

Both functionals use the trapezoidal rule on each sampling interval with the
time derivative taken as the central difference about the interval midpoint:

    W_k = Tr[(rho_k + rho_{k+1}) / 2 . (H_{k+1} - H_k)]
    Q_k = Tr[(rho_{k+1} - rho_k) . (H_k + H_{k+1}) / 2]

The interval length cancels, so sudden jumps (zero-duration intervals) are
handled without differentiating a step, and ``W_k + Q_k`` telescopes to the
energy change. Both rules are second order in the sampling interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import von_neumann_entropy
from .errors import DomainError, InvariantViolation

FIRST_LAW_TOL = 1e-9
SIGMA_TOL = 1e-10


def _require_samples(traj):
    if len(traj) < 2:
        raise DomainError(f"need at least 2 trajectory samples, got {len(traj)}")


def _trace_products(a, b):
    # Tr[a_k b_k] for stacks of 2x2 matrices
    return np.einsum("kij,kji->k", a, b).real


def work_increments(traj):
    _require_samples(traj)
    rho, h = traj.states, traj.hamiltonians
    return _trace_products(0.5 * (rho[1:] + rho[:-1]), h[1:] - h[:-1])


def heat_increments(traj):
    _require_samples(traj)
    rho, h = traj.states, traj.hamiltonians
    return _trace_products(rho[1:] - rho[:-1], 0.5 * (h[1:] + h[:-1]))


def integrate_work(traj):
    """Work ``int Tr[rho dH/dt] dt`` done on the qubit along ``traj``."""
    return float(np.sum(work_increments(traj)))


def integrate_heat(traj):
    """Heat ``int Tr[(drho/dt) H] dt`` absorbed by the qubit along ``traj``."""
    return float(np.sum(heat_increments(traj)))


def cumulative_work(traj):
    return np.concatenate([[0.0], np.cumsum(work_increments(traj))])


def cumulative_heat(traj):
    return np.concatenate([[0.0], np.cumsum(heat_increments(traj))])


def energies(traj):
    return _trace_products(traj.states, traj.hamiltonians)


def energy_change(traj):
    e = energies(traj)
    return float(e[-1] - e[0])


def entropy_change(traj):
    return von_neumann_entropy(traj.final) - von_neumann_entropy(traj.initial)


def entropy_production(traj, t_bath):
    """``Sigma = Delta S - Q / T_bath`` for a bath-coupled stroke."""
    if not t_bath > 0:
        raise DomainError(f"bath temperature must be positive, got {t_bath}")
    return entropy_change(traj) - integrate_heat(traj) / t_bath


@dataclass(frozen=True)
class StrokeRecord:
    """Energy and entropy ledger of one stroke.

    ``entropy_production`` and ``bath_temperature`` are ``None`` for strokes
    that are not coupled to a bath.
    """

    label: str
    work: float
    heat: float
    delta_energy: float
    delta_entropy: float
    entropy_production: Optional[float] = None
    bath_temperature: Optional[float] = None

    def __post_init__(self):
        residual = self.delta_energy - self.work - self.heat
        if abs(residual) > FIRST_LAW_TOL * max(1.0, abs(self.delta_energy)):
            raise InvariantViolation("first_law", f"stroke {self.label!r} residual {residual:.3e}")
        if self.entropy_production is not None and self.entropy_production < -SIGMA_TOL:
            raise InvariantViolation(
                "entropy_production", f"stroke {self.label!r} has Sigma = {self.entropy_production:.3e} < 0")


def stroke_record(traj, label, t_bath=None):
    """Build the :class:`StrokeRecord` of a trajectory segment."""
    w = integrate_work(traj)
    q = integrate_heat(traj)
    ds = entropy_change(traj)
    sigma = None if t_bath is None else ds - q / t_bath
    return StrokeRecord(label, w, q, energy_change(traj), ds, sigma, t_bath)


def first_law_check(records):
    """Closure residual ``sum_i (W_i + Q_i)``; zero for a closed cycle."""
    return math.fsum(r.work + r.heat for r in records)
