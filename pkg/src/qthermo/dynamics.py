"""Time evolution of the working qubit.

Two kinds of motion are supported: unitary driving under a time-dependent
Hamiltonian, and weak-coupling thermalization with a single-qubit GKSL
dissipator whose rates satisfy detailed balance, so that its unique fixed
point is the Gibbs state of the (static) Hamiltonian. Both use a classical
fixed-step fourth-order Runge-Kutta integrator; thermalization also has a
closed-form ``exact`` path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    QubitHamiltonian,
    _as_matrix,
    check_temperature,
    excited_population,
    gibbs_state,
    hamiltonian_matrix,
    hermitian_eigvals,
)
from .errors import DomainError, IntegratorError

#: Tolerance on trace, hermiticity and positivity of trajectory samples.
TRAJECTORY_TOL = 1e-10
#: Largest allowed ``Gamma * dt`` for the RK4 thermalizer.
MAX_GAMMA_DT = 0.1
#: ``Gamma * dt`` used when no step is given.
DEFAULT_GAMMA_DT = 0.05
#: ``Gamma * duration`` that counts as full thermalization.
FULL_THERMALIZATION = 40.0
#: Gaps below this are rejected by the thermalizer (the occupation diverges).
MIN_GAP = 1e-9
#: Eigenvalue drift that aborts unitary propagation.
MAX_SPECTRAL_DRIFT = 1e-6


@dataclass(frozen=True)
class BathSpec:
    temperature: float
    base_rate: float = 1.0

    def __post_init__(self):
        check_temperature(self.temperature, "bath temperature")
        if not math.isfinite(self.base_rate) or self.base_rate <= 0:
            raise DomainError(f"base rate must be positive, got {self.base_rate}")


@dataclass(frozen=True)
class DriveSchedule:
    """Control protocol ``t -> H(gap(t), transverse(t))`` on ``[0, t_final]``."""

    gap: Callable[[float], float]
    t_final: float
    dt: float
    transverse: Callable[[float], float] = field(default=lambda t: 0.0)

    def __post_init__(self):
        if not self.t_final > 0:
            raise DomainError(f"t_final must be positive, got {self.t_final}")
        if not 0 < self.dt <= self.t_final:
            raise DomainError(f"need 0 < dt <= t_final, got dt={self.dt}")

    def hamiltonian(self, t):
        return QubitHamiltonian(float(self.gap(t)), float(self.transverse(t)))

    def matrix(self, t):
        g = float(self.gap(t))
        if g < 0:
            raise DomainError(f"drive gap negative at t={t}: {g}")
        return hamiltonian_matrix(g, float(self.transverse(t)))

    def grid(self):
        n = max(1, math.ceil(self.t_final / self.dt - 1e-9))
        return np.linspace(0.0, self.t_final, n + 1)


class Trajectory:
    """Immutable record of ``(time, state, Hamiltonian)`` samples.

    Times are non-decreasing. Two consecutive samples may share a time only
    for a sudden Hamiltonian jump, in which case the state must not change.
    """

    def __init__(self, times, states, gaps, transverse=None):
        times = np.array(times, dtype=float)
        states = np.array(states, dtype=complex)
        gaps = np.array(gaps, dtype=float)
        transverse = np.zeros_like(gaps) if transverse is None else np.array(transverse, dtype=float)
        n = len(times)
        if n == 0:
            raise DomainError("trajectory needs at least one sample")
        if states.shape != (n, 2, 2) or gaps.shape != (n,) or transverse.shape != (n,):
            raise DomainError("trajectory arrays have inconsistent shapes")
        steps = np.diff(times)
        if np.any(steps < 0):
            raise DomainError("trajectory times must be non-decreasing")
        jumps = np.flatnonzero(steps == 0)
        if jumps.size and np.max(np.abs(states[jumps + 1] - states[jumps])) > 1e-12:
            raise DomainError("state changed across a zero-duration sample pair")
        _check_states(states)
        for a in (times, states, gaps, transverse):
            a.setflags(write=False)
        self.times, self.states, self.gaps, self.transverse = times, states, gaps, transverse

    @classmethod
    def _trusted(cls, times, states, gaps, transverse):
        # arrays already validated as parts of other trajectories
        self = cls.__new__(cls)
        for a in (times, states, gaps, transverse):
            a.setflags(write=False)
        self.times, self.states, self.gaps, self.transverse = times, states, gaps, transverse
        return self

    @classmethod
    def join(cls, parts):
        """Concatenate trajectories; each part's first sample must repeat the previous part's last."""
        times, states, gaps, transverse = [parts[0].times], [parts[0].states], [parts[0].gaps], [parts[0].transverse]
        end = parts[0]
        for other in parts[1:]:
            if np.max(np.abs(other.states[0] - end.states[-1])) > 1e-12 or (
                other.gaps[0] != end.gaps[-1] or other.transverse[0] != end.transverse[-1]
            ):
                raise DomainError("trajectories do not join: first sample differs from last")
            times.append(other.times[1:] + (times[-1][-1] - other.times[0]))
            states.append(other.states[1:])
            gaps.append(other.gaps[1:])
            transverse.append(other.transverse[1:])
            end = other
        return cls._trusted(np.concatenate(times), np.concatenate(states),
                            np.concatenate(gaps), np.concatenate(transverse))

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return f"Trajectory({len(self)} samples, t=[{self.times[0]:g}, {self.times[-1]:g}])"

    @property
    def hamiltonians(self):
        """Hamiltonian matrices, shape ``(n, 2, 2)``."""
        h = np.zeros((len(self), 2, 2), dtype=complex)
        h[:, 1, 1] = self.gaps
        h[:, 0, 1] = h[:, 1, 0] = 0.5 * self.transverse
        return h

    def hamiltonian(self, k):
        return QubitHamiltonian(float(self.gaps[k]), float(self.transverse[k]))

    def state(self, k):
        return self.states[k]

    @property
    def initial(self):
        return self.states[0]

    @property
    def final(self):
        return self.states[-1]

    @property
    def excited_populations(self):
        return self.states[:, 1, 1].real.copy()

    def then(self, other):
        """Concatenate ``other`` after ``self``; its first sample must repeat our last."""
        return Trajectory.join([self, other])

    def segment(self, start, stop):
        """Samples ``start..stop`` inclusive."""
        sl = slice(start, stop + 1)
        return Trajectory._trusted(self.times[sl].copy(), self.states[sl].copy(),
                                   self.gaps[sl].copy(), self.transverse[sl].copy())


def _check_states(states, tol=TRAJECTORY_TOL):
    herm = np.max(np.abs(states - np.conj(np.swapaxes(states, 1, 2))))
    if herm > tol:
        raise DomainError(f"trajectory state not Hermitian (deviation {herm:.3e})")
    tr = np.max(np.abs(states[:, 0, 0] + states[:, 1, 1] - 1.0))
    if tr > tol:
        raise DomainError(f"trajectory trace drift {tr:.3e}")
    lo = np.min(hermitian_eigvals(states)[:, 0])
    if lo < -tol:
        raise DomainError(f"trajectory state not positive (min eigenvalue {lo:.3e})")


# --- integrator ---------------------------------------------------------------

def rk4_step(f, t, y, dt):
    """One classical fourth-order Runge-Kutta step of ``y' = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step_matrix(generator, dt):
    """Matrix of one RK4 step for the linear system ``y' = generator @ y``.

    For a constant generator the four stages collapse to the degree-4 Taylor
    polynomial of ``exp(generator * dt)``, so one matrix-vector product per
    step reproduces :func:`rk4_step` exactly in exact arithmetic.
    """
    z = generator * dt
    eye = np.eye(len(generator), dtype=complex)
    return eye + z @ (eye + z @ (eye + z @ (eye + z / 4) / 3) / 2)


def rk4_integrate_linear(generator, y0, times):
    """RK4 on a uniform grid for a time-independent linear generator."""
    step = rk4_step_matrix(generator, times[1] - times[0])
    out = np.empty((len(times),) + np.shape(y0), dtype=complex)
    y = np.asarray(y0, dtype=complex)
    out[0] = y
    for k in range(1, len(times)):
        y = step @ y
        out[k] = y
    return out


def rk4_integrate(f, y0, times):
    """Integrate over the given time grid, returning ``y`` at every grid point."""
    out = np.empty((len(times),) + np.shape(y0), dtype=complex)
    y = np.asarray(y0, dtype=complex)
    out[0] = y
    for k in range(len(times) - 1):
        y = rk4_step(f, times[k], y, times[k + 1] - times[k])
        out[k + 1] = y
    return out


# --- thermalization -----------------------------------------------------------

def thermal_occupation(spacing, temperature):
    """Bose occupation ``1 / (exp(spacing/T) - 1)``."""
    return 1.0 / math.expm1(spacing / temperature) if spacing / temperature < 700 else 0.0


def transition_rates(h, bath):
    """Decay and excitation rates ``(gamma_down, gamma_up)`` for ``h`` in ``bath``."""
    spacing = h.level_spacing
    if spacing < MIN_GAP:
        raise DomainError(f"gap {spacing:.3e} too small to thermalize (n_bar diverges)")
    n_bar = thermal_occupation(spacing, bath.temperature)
    return bath.base_rate * (n_bar + 1.0), bath.base_rate * n_bar


def relaxation_rate(h, bath):
    """Population relaxation rate ``Gamma = gamma_down + gamma_up``."""
    down, up = transition_rates(h, bath)
    return down + up


def liouvillian(h, bath):
    """4x4 generator acting on the row-major vectorization of rho."""
    down, up = transition_rates(h, bath)
    _, vecs = h.eigh()
    lower = vecs @ np.array([[0, 1], [0, 0]], dtype=complex) @ vecs.conj().T
    eye = np.eye(2)
    hm = h.matrix
    # row-major: vec(A X B) = kron(A, B.T) vec(X)
    gen = -1j * (np.kron(hm, eye) - np.kron(eye, hm.T))
    for rate, c in ((down, lower), (up, lower.conj().T)):
        cdc = c.conj().T @ c
        gen += rate * (np.kron(c, c.conj())
                       - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))
    return gen


def _thermalize_grid(duration, dt, gamma):
    if not duration > 0:
        raise DomainError(f"duration must be positive, got {duration}")
    if dt is None:
        dt = DEFAULT_GAMMA_DT / gamma
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    n = max(1, math.ceil(duration / dt - 1e-9))
    return np.linspace(0.0, duration, n + 1)


def relaxed_state(rho0, h, bath, t):
    """Closed-form GKSL solution at time(s) ``t``, shape ``(len(t), 2, 2)``.

    In the eigenbasis of ``h`` the excited population relaxes as
    ``p_eq + (p0 - p_eq) exp(-Gamma t)`` and the coherence rotates at the level
    spacing while decaying at ``Gamma / 2``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    gamma = relaxation_rate(h, bath)
    _, vecs = h.eigh()
    r0 = vecs.conj().T @ _as_matrix(rho0) @ vecs
    p_eq = excited_population(h.level_spacing, bath.temperature)
    decay = np.exp(-gamma * t)
    p = p_eq + (r0[1, 1].real - p_eq) * decay
    c = r0[0, 1] * np.exp((1j * h.level_spacing - 0.5 * gamma) * t)
    eig = np.empty((len(t), 2, 2), dtype=complex)
    eig[:, 0, 0] = 1.0 - p
    eig[:, 1, 1] = p
    eig[:, 0, 1] = c
    eig[:, 1, 0] = np.conj(c)
    return vecs @ eig @ vecs.conj().T


def thermalize(rho0, h, bath, duration, dt=None, method="rk4"):
    """Couple the qubit to ``bath`` at fixed Hamiltonian ``h`` for ``duration``.

    ``method`` is ``"rk4"`` (fixed-step integration of the GKSL equation) or
    ``"exact"`` (closed-form relaxation sampled on the same grid). When ``dt``
    is omitted it is chosen so that ``Gamma * dt = 0.05``. Raises
    :class:`IntegratorError` if an RK4 step exceeds ``Gamma * dt = 0.1``.
    """
    rho0 = _as_matrix(rho0)
    gamma = relaxation_rate(h, bath)
    times = _thermalize_grid(duration, dt, gamma)
    if method == "exact":
        states = relaxed_state(rho0, h, bath, times)
    elif method == "rk4":
        step = times[1] - times[0]
        if gamma * step > MAX_GAMMA_DT * (1 + 1e-12):
            raise IntegratorError(
                f"Gamma*dt = {gamma * step:.4g} exceeds {MAX_GAMMA_DT}; reduce dt below {MAX_GAMMA_DT / gamma:.4g}")
        vecs = rk4_integrate_linear(liouvillian(h, bath), rho0.reshape(4), times)
        states = vecs.reshape(-1, 2, 2)
    else:
        raise DomainError(f"unknown thermalization method {method!r}")
    n = len(times)
    return Trajectory(times, states, np.full(n, h.gap), np.full(n, h.transverse))


def thermalization_time(h, bath, gamma_duration=FULL_THERMALIZATION):
    """Duration giving ``Gamma * duration = gamma_duration``."""
    return gamma_duration / relaxation_rate(h, bath)


# --- unitary motion -----------------------------------------------------------

def _sampled_drive(drive):
    """Grid, Hamiltonians on the grid, and Hamiltonians at the interval midpoints."""
    times = drive.grid()
    fine = np.linspace(times[0], times[-1], 2 * len(times) - 1)
    gaps = np.array([drive.gap(t) for t in fine], dtype=float)
    if np.any(gaps < 0):
        raise DomainError("drive gap must stay >= 0")
    transverse = np.array([drive.transverse(t) for t in fine], dtype=float)
    h = np.zeros((len(fine), 2, 2), dtype=complex)
    h[:, 1, 1] = gaps
    h[:, 0, 1] = h[:, 1, 0] = 0.5 * transverse
    return times, gaps[::2], transverse[::2], h


def _rk4_step_matrices(gen, dt):
    """Per-step RK4 matrices for ``y' = A(t) y`` given generators at step starts (even) and midpoints (odd)."""
    a0, am, a1 = gen[:-1:2], gen[1::2], gen[2::2]
    dt = np.asarray(dt)[:, None, None]
    eye = np.eye(gen.shape[-1], dtype=complex)
    s1 = a0
    s2 = am @ (eye + 0.5 * dt * s1)
    s3 = am @ (eye + 0.5 * dt * s2)
    s4 = a1 @ (eye + dt * s3)
    return eye + dt / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4)


def _chain(steps, y0):
    out = np.empty((len(steps) + 1,) + np.shape(y0), dtype=complex)
    y = np.asarray(y0, dtype=complex)
    out[0] = y
    for k, m in enumerate(steps):
        y = m @ y
        out[k + 1] = y
    return out


def unitary_propagate(rho0, drive):
    """Evolve ``rho' = -i [H(t), rho]`` over the drive with fixed-step RK4.

    Raises :class:`IntegratorError` if the spectrum of rho drifts by more
    than ``1e-6``, which signals a step too large for the drive.
    """
    rho0 = _as_matrix(rho0)
    times, gaps, transverse, h = _sampled_drive(drive)
    eye = np.eye(2)
    # row-major vec: vec(H rho - rho H) = (H (x) I - I (x) H^T) vec(rho)
    gen = -1j * (np.einsum("nij,kl->nikjl", h, eye) - np.einsum("ij,nlk->nikjl", eye, h)).reshape(-1, 4, 4)
    vecs = _chain(_rk4_step_matrices(gen, np.diff(times)), rho0.reshape(4))
    states = vecs.reshape(-1, 2, 2)
    drift = np.max(np.abs(hermitian_eigvals(states) - hermitian_eigvals(rho0)))
    if not drift <= MAX_SPECTRAL_DRIFT:
        raise IntegratorError(
            f"eigenvalue drift {drift:.3e} exceeds {MAX_SPECTRAL_DRIFT}; dt={times[1] - times[0]:.4g} too large")
    return Trajectory(times, states, gaps, transverse)


def propagator(drive):
    """Unitary ``U(t_final, 0)`` of the drive.

    ``U' = -i H(t) U`` is integrated with RK4 and the result is projected onto
    the nearest unitary (polar factor), so the returned matrix is unitary to
    rounding while its accuracy is that of the integrator.
    """
    times, _, _, h = _sampled_drive(drive)
    u = np.eye(2, dtype=complex)
    for m in _rk4_step_matrices(-1j * h, np.diff(times)):
        u = m @ u
    w, _, vh = np.linalg.svd(u)
    return w @ vh


# --- quasi-static isotherm ----------------------------------------------------

def quench(rho, h_from, h_to, t=0.0):
    """Sudden gap change at frozen state, as a two-sample trajectory."""
    m = _as_matrix(rho)
    return Trajectory([t, t], [m, m], [h_from.gap, h_to.gap], [h_from.transverse, h_to.transverse])


def quasistatic_isotherm(h_start, h_end, temperature, n_steps, rho0=None):
    """Discretized isotherm from ``h_start`` to ``h_end`` at ``temperature``.

    Each of the ``n_steps`` steps changes the gap by ``(end - start) / n`` at
    frozen populations, then lets the qubit fully re-thermalize at the new
    gap. The time axis counts steps. The starting state defaults to the Gibbs
    state of ``h_start``.
    """
    if int(n_steps) != n_steps or n_steps < 1:
        raise DomainError(f"n_steps must be an integer >= 1, got {n_steps}")
    if h_start.transverse != 0 or h_end.transverse != 0:
        raise DomainError("isotherm endpoints must have zero transverse field")
    temperature = check_temperature(temperature)
    n = int(n_steps)
    gaps = np.linspace(h_start.gap, h_end.gap, n + 1)
    state = gibbs_state(h_start, temperature).matrix if rho0 is None else _as_matrix(rho0)
    times, states, sample_gaps = [0.0], [state], [gaps[0]]
    for k in range(1, n + 1):
        times.append(float(k - 1))
        states.append(state)
        sample_gaps.append(gaps[k])
        state = gibbs_state(QubitHamiltonian(float(gaps[k])), temperature).matrix
        times.append(float(k))
        states.append(state)
        sample_gaps.append(gaps[k])
    return Trajectory(times, states, sample_gaps)
