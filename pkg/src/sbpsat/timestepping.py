"""Classical RK4 integration of the second-order system z_tt = Q z + F(t)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .discretization import SemidiscreteSystem, apply_rhs, time_step
from .errors import BlowupDetected, NonpositiveInput, SizeMismatch


@dataclass(frozen=True)
class ManufacturedSolution:
    """u = cos(kx x + a) cos(ky y + b) cos(omega t + c) with omega^2 = kx^2 + ky^2."""

    kx: float = 5.0
    ky: float = 5.0
    phases: tuple[float, float, float] = (1.0, 2.0, 3.0)

    @property
    def omega(self) -> float:
        return math.hypot(self.kx, self.ky)

    def __call__(self, x, y, t):
        a, b, c = self.phases
        return np.cos(self.kx * x + a) * np.cos(self.ky * y + b) * np.cos(self.omega * t + c)

    def time_derivative(self, x, y, t):
        a, b, c = self.phases
        return -self.omega * np.cos(self.kx * x + a) * np.cos(self.ky * y + b) * np.sin(self.omega * t + c)


def manufactured_solution(x, y, t):
    return ManufacturedSolution()(x, y, t)


@dataclass
class SimulationState:
    t: float
    z: np.ndarray
    z_t: np.ndarray
    step: int = 0


Observer = Callable[[SimulationState], None]


def rk4_step(system: SemidiscreteSystem, state: SimulationState, dt: float, matrix_free: bool = True) -> SimulationState:
    """One RK4 step on the first-order form (z, z_t)."""
    t, z, v = state.t, state.z, state.z_t

    def acc(tt, zz):
        return apply_rhs(system, zz, tt, matrix_free=matrix_free)

    k1z, k1v = v, acc(t, z)
    k2z, k2v = v + 0.5 * dt * k1v, acc(t + 0.5 * dt, z + 0.5 * dt * k1z)
    k3z, k3v = v + 0.5 * dt * k2v, acc(t + 0.5 * dt, z + 0.5 * dt * k2z)
    k4z, k4v = v + dt * k3v, acc(t + dt, z + dt * k3z)
    z_new = z + dt / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return SimulationState(t + dt, z_new, v_new, state.step + 1)


def simulate(
    system: SemidiscreteSystem,
    z0: np.ndarray,
    v0: np.ndarray,
    t_final: float,
    dt: float | None = None,
    observers: Iterable[Observer] = (),
    observe_every: int = 1,
    blowup: float = 1e6,
    matrix_free: bool = True,
) -> SimulationState:
    """Integrate to t_final; the last step is shortened to land on it exactly.

    Observers are called on the initial state, every `observe_every` steps
    and on the final state.  A non-finite or oversized state raises
    BlowupDetected.
    """
    if t_final < 0:
        raise NonpositiveInput("t_final must be non-negative")
    dt = time_step(system) if dt is None else dt
    if dt <= 0:
        raise NonpositiveInput("time step must be positive")
    z0, v0 = np.asarray(z0, dtype=float), np.asarray(v0, dtype=float)
    if z0.shape != (system.n,) or v0.shape != (system.n,):
        raise SizeMismatch(f"initial data must have shape ({system.n},)")
    observers = list(observers)
    state = SimulationState(0.0, z0.copy(), v0.copy())
    for obs in observers:
        obs(state)
    n_steps = math.ceil(t_final / dt - 1e-12)
    for k in range(n_steps):
        h = min(dt, t_final - state.t)
        state = rk4_step(system, state, h, matrix_free=matrix_free)
        if k == n_steps - 1:
            state.t = t_final
        amp = float(np.max(np.abs(state.z))) if state.z.size else 0.0
        if not np.isfinite(amp) or amp > blowup:
            raise BlowupDetected(state.t, amp)
        if observers and (state.step % observe_every == 0 or k == n_steps - 1):
            for obs in observers:
                obs(state)
    return state


def initial_data(system: SemidiscreteSystem, solution: ManufacturedSolution) -> tuple[np.ndarray, np.ndarray]:
    X, Y = system.coordinates()
    return solution(X, Y, 0.0), solution.time_derivative(X, Y, 0.0)
