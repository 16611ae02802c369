"""Qubit states, Hamiltonians, Gibbs states and entropy functionals.

Units are hbar = k_B = 1. The energy zero sits on the ground level of an
undriven qubit, so ``H = diag(0, omega)`` when the transverse field vanishes
and the mean energy is ``omega * p_excited``. Entropies are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

#: Tolerance on the invariants of a single validated state.
STATE_TOL = 1e-12
#: Negative eigenvalues above ``-CLIP_TOL`` are rounding noise and are clamped to zero.
CLIP_TOL = 1e-12


def _as_matrix(rho):
    if isinstance(rho, DensityOperator):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def hermitian_eigvals(m):
    """Ascending eigenvalues of the Hermitian part of 2x2 matrices, shape ``(..., 2)``."""
    m = np.asarray(m)
    a, d = m[..., 0, 0].real, m[..., 1, 1].real
    b = 0.5 * (m[..., 0, 1] + np.conj(m[..., 1, 0]))
    mid = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), np.abs(b))
    return np.stack([mid - rad, mid + rad], axis=-1)


def check_density_matrix(matrix, tol=STATE_TOL):
    """Raise :class:`DomainError` unless ``matrix`` is a valid 2x2 density matrix."""
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise DomainError(f"density matrix must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("density matrix has non-finite entries")
    herm = np.max(np.abs(m - m.conj().T))
    if herm > tol:
        raise DomainError(f"density matrix not Hermitian (deviation {herm:.3e})")
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise DomainError(f"density matrix trace {tr.real:.15g} != 1")
    lo = hermitian_eigvals(m)[0]
    if lo < -tol:
        raise DomainError(f"density matrix not positive (min eigenvalue {lo:.3e})")


@dataclass(frozen=True)
class DensityOperator:
    """Validated, immutable state of the working qubit.

    Row/column 0 is the ground level of the undriven qubit, 1 the excited level.
    """

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        check_density_matrix(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_populations(cls, p_excited, coherence=0.0):
        """State with the given excited population and ground/excited coherence."""
        return cls(np.array([[1.0 - p_excited, coherence],
                             [np.conj(coherence), p_excited]], dtype=complex))

    @classmethod
    def ground(cls):
        return cls.from_populations(0.0)

    @classmethod
    def excited(cls):
        return cls.from_populations(1.0)

    @classmethod
    def maximally_mixed(cls):
        return cls.from_populations(0.5)

    @classmethod
    def pure(cls, amplitudes):
        psi = np.asarray(amplitudes, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def random(cls, rng):
        """Random state from a Bloch vector drawn uniformly in the unit ball."""
        v = rng.normal(size=3)
        v *= rng.uniform() ** (1.0 / 3.0) / np.linalg.norm(v)
        return cls.from_bloch(v)

    @classmethod
    def from_bloch(cls, vec):
        x, y, z = vec
        # z = +1 is the ground level
        return cls(0.5 * np.array([[1.0 + z, x - 1j * y],
                                   [x + 1j * y, 1.0 - z]], dtype=complex))

    @property
    def excited_population(self):
        return float(self.matrix[1, 1].real)

    @property
    def coherence(self):
        return complex(self.matrix[0, 1])

    def eigenvalues(self):
        return hermitian_eigvals(self.matrix)


@dataclass(frozen=True)
class QubitHamiltonian:
    """``H = gap * |1><1| + (transverse / 2) * sigma_x``."""

    gap: float
    transverse: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.gap) or self.gap < 0:
            raise DomainError(f"gap must be finite and >= 0, got {self.gap}")
        if not math.isfinite(self.transverse):
            raise DomainError(f"transverse field must be finite, got {self.transverse}")

    @property
    def matrix(self):
        return hamiltonian_matrix(self.gap, self.transverse)

    def eigh(self):
        """Eigenvalues (ascending) and eigenvector columns."""
        return np.linalg.eigh(self.matrix)

    @property
    def level_spacing(self):
        """Difference between the two eigenvalues."""
        return math.hypot(self.gap, self.transverse)


def hamiltonian_matrix(gap, transverse=0.0):
    return np.array([[0.0, 0.5 * transverse],
                     [0.5 * transverse, gap]], dtype=complex)


def check_temperature(t, name="temperature"):
    t = float(t)
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"{name} must be positive and finite, got {t}")
    return t


def _boltzmann_weights(energies, temperature):
    # shift by the ground energy so that T -> 0 does not overflow
    return np.exp(-(energies - energies[0]) / temperature)


def excited_population(gap, temperature):
    """Thermal excited population ``1 / (1 + exp(gap / T))`` of an undriven qubit."""
    temperature = check_temperature(temperature)
    x = gap / temperature
    if x > 700:
        return math.exp(-x)
    return 1.0 / (1.0 + math.exp(x))


def gibbs_state(h, temperature):
    """Thermal state ``exp(-H/T) / Z`` of the qubit Hamiltonian ``h``."""
    temperature = check_temperature(temperature)
    energies, vecs = h.eigh()
    w = _boltzmann_weights(energies, temperature)
    w /= w.sum()
    rho = (vecs * w) @ vecs.conj().T
    return DensityOperator(0.5 * (rho + rho.conj().T))


def partition_function(h, temperature):
    """``Z = Tr exp(-H/T)``."""
    temperature = check_temperature(temperature)
    energies = np.linalg.eigvalsh(h.matrix)
    return float(np.sum(np.exp(-energies / temperature)))


def log_partition_function(h, temperature):
    """``ln Z`` evaluated without overflow at small temperatures."""
    temperature = check_temperature(temperature)
    energies = np.linalg.eigvalsh(h.matrix)
    return float(-energies[0] / temperature
                 + np.log(np.sum(_boltzmann_weights(energies, temperature))))


def mean_energy(rho, h):
    """``Tr[rho H]``."""
    return float(np.trace(_as_matrix(rho) @ h.matrix).real)


def _clipped_spectrum(m):
    lam = hermitian_eigvals(m)
    if lam[0] < -CLIP_TOL:
        raise DomainError(f"state has negative eigenvalue {lam[0]:.3e}")
    return np.clip(lam, 0.0, None)


def _xlogx(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def von_neumann_entropy(rho):
    """``S = -Tr[rho ln rho]`` in nats, with ``0 ln 0 = 0``."""
    lam = _clipped_spectrum(_as_matrix(rho))
    return float(-np.sum(_xlogx(lam)))


def binary_entropy(p):
    return float(-np.sum(_xlogx([p, 1.0 - p])))


def relative_entropy(rho, sigma):
    """Quantum relative entropy ``Tr[rho (ln rho - ln sigma)]``.

    Returns ``math.inf`` when the support of ``rho`` is not contained in the
    support of ``sigma``.
    """
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    lam_a, vec_a = np.linalg.eigh(0.5 * (a + a.conj().T))
    lam_b, vec_b = np.linalg.eigh(0.5 * (b + b.conj().T))
    lam_a = np.clip(lam_a, 0.0, None)
    lam_b = np.clip(lam_b, 0.0, None)
    # overlap[i, j] = |<a_i|b_j>|^2
    overlap = np.abs(vec_a.conj().T @ vec_b) ** 2
    weight_on_b = lam_a @ overlap
    null_b = lam_b <= 0.0
    if np.any(weight_on_b[null_b] > CLIP_TOL):
        return math.inf
    cross = np.sum(weight_on_b[~null_b] * np.log(lam_b[~null_b]))
    value = float(np.sum(_xlogx(lam_a)) - cross)
    # rounding can push the exact-zero case slightly negative
    return max(value, 0.0) if value > -1e-14 else value


def trace_distance(rho, sigma):
    d = _as_matrix(rho) - _as_matrix(sigma)
    return float(0.5 * np.sum(np.abs(hermitian_eigvals(d))))


def spectral_reconstruction(rho):
    """Rebuild ``rho`` from its eigen-decomposition (used as a round-trip check)."""
    lam, vec = np.linalg.eigh(_as_matrix(rho))
    return (vec * lam) @ vec.conj().T
