"""Two-point-measurement work statistics and the Jarzynski equality.

The work distribution is enumerated exactly: projective energy measurement
in the eigenbasis of the initial Hamiltonian on a thermal state, the unitary
drive, then a projective measurement in the eigenbasis of the final
Hamiltonian. A qubit has at most four outcomes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import QubitHamiltonian, log_partition_function
from .dynamics import DriveSchedule, propagator
from .errors import DomainError, InvariantViolation

UNITARITY_TOL = 1e-12
PROBABILITY_TOL = 1e-12
#: Jarzynski gap above which the enumeration is considered broken.
CONSISTENCY_TOL = 1e-8


@dataclass(frozen=True)
class TpmProtocol:
    beta: float
    h_initial: QubitHamiltonian
    h_final: QubitHamiltonian
    propagator: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be positive and finite, got {self.beta}")
        u = np.array(self.propagator, dtype=complex)
        if u.shape != (2, 2):
            raise DomainError(f"propagator must be 2x2, got shape {u.shape}")
        dev = np.max(np.abs(u.conj().T @ u - np.eye(2)))
        if dev > UNITARITY_TOL:
            raise DomainError(f"propagator is not unitary (|U^dag U - 1| = {dev:.3e})")
        u.setflags(write=False)
        object.__setattr__(self, "propagator", u)


def sudden_quench(beta, h_initial, h_final):
    """Instantaneous switch ``h_initial -> h_final`` (identity propagator)."""
    return TpmProtocol(beta, h_initial, h_final, np.eye(2, dtype=complex))


def driven_protocol(beta, drive: DriveSchedule):
    """Protocol for a drive integrated by the dynamics module."""
    return TpmProtocol(beta, drive.hamiltonian(0.0), drive.hamiltonian(drive.t_final), propagator(drive))


@dataclass(frozen=True)
class WorkDistribution:
    """All ``(n, m)`` transitions with work ``E'_m - E_n`` and their probabilities."""

    initial: tuple
    final: tuple
    works: tuple
    probabilities: tuple

    def __post_init__(self):
        p = np.asarray(self.probabilities)
        if len(p) > 4:
            raise DomainError("a qubit has at most four TPM outcomes")
        if np.any(p < -PROBABILITY_TOL) or abs(p.sum() - 1.0) > PROBABILITY_TOL:
            raise DomainError(f"probabilities must be non-negative and sum to 1, sum={p.sum():.15g}")

    @property
    def outcomes(self):
        return list(zip(self.works, self.probabilities))

    def collapsed(self, tol=1e-12):
        """Outcomes merged by equal work value, zero-probability ones dropped, sorted by work."""
        merged = []
        for w, p in sorted(self.outcomes):
            if merged and abs(merged[-1][0] - w) <= tol:
                merged[-1][1] += p
            else:
                merged.append([w, p])
        return [(w, p) for w, p in merged if p > tol]

    def mean(self):
        return math.fsum(w * p for w, p in self.outcomes)

    def final_marginal(self):
        out = np.zeros(2)
        for m, p in zip(self.final, self.probabilities):
            out[m] += p
        return out


def transition_matrix(p: TpmProtocol):
    """``T[m, n] = |<m'|U|n>|^2``."""
    _, vi = p.h_initial.eigh()
    _, vf = p.h_final.eigh()
    return np.abs(vf.conj().T @ p.propagator @ vi) ** 2


def tpm_distribution(p: TpmProtocol):
    ei, _ = p.h_initial.eigh()
    ef, _ = p.h_final.eigh()
    weights = np.exp(-p.beta * (ei - ei[0]))
    weights /= weights.sum()
    trans = transition_matrix(p)
    initial, final, works, probs = [], [], [], []
    for n in range(2):
        for m in range(2):
            initial.append(n)
            final.append(m)
            works.append(float(ef[m] - ei[n]))
            probs.append(float(weights[n] * trans[m, n]))
    return WorkDistribution(tuple(initial), tuple(final), tuple(works), tuple(probs))


def jarzynski_average(d: WorkDistribution, beta):
    """``<exp(-beta W)>`` over the distribution."""
    return math.fsum(p * math.exp(-beta * w) for w, p in d.outcomes)


def free_energy_difference(h_initial, h_final, beta):
    """``Delta F = -(1/beta) ln(Z_final / Z_initial)``."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    t = 1.0 / beta
    return -t * (log_partition_function(h_final, t) - log_partition_function(h_initial, t))


@dataclass(frozen=True)
class JarzynskiResult:
    lhs: float
    rhs: float
    gap: float
    mean_work: float
    delta_f: float
    second_law_slack: float


def jarzynski_check(p: TpmProtocol):
    """Evaluate both sides of ``<exp(-beta W)> = exp(-beta Delta F)``.

    Raises :class:`InvariantViolation` when the sides differ by more than
    ``1e-8``; for a unitary drive from a thermal state they agree exactly,
    so a larger gap means a bug rather than physics.
    """
    d = tpm_distribution(p)
    lhs = jarzynski_average(d, p.beta)
    df = free_energy_difference(p.h_initial, p.h_final, p.beta)
    rhs = math.exp(-p.beta * df)
    gap = abs(lhs - rhs)
    if gap > CONSISTENCY_TOL:
        raise InvariantViolation("jarzynski_gap", f"|lhs - rhs| = {gap:.3e}")
    mean = d.mean()
    return JarzynskiResult(lhs, rhs, gap, mean, df, mean - df)
