"""Energy, spectra and convergence diagnostics for assembled systems."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .discretization import (
    PenaltyConfig,
    SemidiscreteSystem,
    assemble,
    block_view,
    normal_derivative,
    time_step,
    trace_values,
)
from .errors import InsufficientLevels, SizeMismatch, SystemTooLarge
from .mesh import MultiBlockMesh
from .timestepping import ManufacturedSolution, initial_data, simulate

MAX_DENSE_UNKNOWNS = 6000


# ------------------------------------------------------------------ energy


@dataclass(frozen=True)
class EnergySample:
    t: float
    total: float
    kinetic: float
    potential: float
    boundary: float
    interface_self: float
    interface_cross: float

    @property
    def parts_sum(self) -> float:
        return self.kinetic + self.potential + self.boundary + self.interface_self + self.interface_cross


def _potential(system: SemidiscreteSystem, z: np.ndarray) -> float:
    total = 0.0
    for k, b in enumerate(system.blocks):
        U = block_view(system, z, k)
        # u^T (M_x (x) H_y) u + u^T (H_x (x) M_y) u
        total += float(np.sum(U * ((b.ops_x.M @ U) * b.ops_y.H[None, :])))
        total += float(np.sum(U * ((b.ops_y.M @ U.T).T * b.ops_x.H[:, None])))
    return total


def energy_parts(system: SemidiscreteSystem, z: np.ndarray, z_t: np.ndarray, t: float = 0.0) -> EnergySample:
    """Split z_t^T H z_t - z^T H Q z into its volume, boundary and interface terms."""
    z, z_t = np.asarray(z, dtype=float), np.asarray(z_t, dtype=float)
    if z.shape != (system.n,) or z_t.shape != (system.n,):
        raise SizeMismatch(f"state must have shape ({system.n},)")
    kinetic = float(z_t @ (system.H_global * z_t))
    potential = _potential(system, z)
    blocks = system.blocks

    def td(k, s):
        so = blocks[k].side(s)
        U = block_view(system, z, k)
        return so, trace_values(so, U), normal_derivative(so, U)

    boundary = 0.0
    for d in system.dirichlet:
        so, u, du = td(d.block, d.side)
        boundary += -2 * so.sigma * (u @ (so.H_t * du)) + d.sigma_d * (u @ (so.H_t * u))

    i_self = i_cross = 0.0
    for c in system.couplings:
        sides = {}
        for members, offs in ((c.members_a, c.offsets_a), (c.members_b, c.offsets_b)):
            for (k, s), o in zip(members, offs):
                sides[(k, s)] = (td(k, s), o)
        ua = np.concatenate([sides[m][0][1] for m in c.members_a])
        da = np.concatenate([sides[m][0][2] for m in c.members_a])
        ub = np.concatenate([sides[m][0][1] for m in c.members_b])
        db = np.concatenate([sides[m][0][2] for m in c.members_b])
        for members, T, u_o, d_o in ((c.members_a, c.T_ab, ub, db), (c.members_b, c.T_ba, ua, da)):
            w, wd = T @ u_o, T @ d_o
            for m in members:
                (so, u, du), o = sides[m]
                r = slice(o, o + len(u))
                Hu, Hd = so.H_t * u, so.H_t * du
                i_self += -so.sigma * (u @ Hd) + c.tau * (u @ Hu)
                i_cross += 0.5 * so.sigma * (Hd @ w[r]) - c.tau * (Hu @ w[r]) - 0.5 * so.sigma * (Hu @ wd[r])
    boundary, i_self, i_cross = float(boundary), float(i_self), float(i_cross)
    total = kinetic + potential + boundary + i_self + i_cross
    return EnergySample(t, total, kinetic, potential, boundary, i_self, i_cross)


def discrete_energy(system: SemidiscreteSystem, z: np.ndarray, z_t: np.ndarray, t: float = 0.0) -> EnergySample:
    """Energy with `total` computed directly as z_t^T H z_t - z^T H Q z."""
    parts = energy_parts(system, z, z_t, t)
    total = float(z_t @ (system.H_global * z_t) - z @ (system.H_global * (system.Q_mat @ z)))
    return EnergySample(t, total, parts.kinetic, parts.potential, parts.boundary, parts.interface_self, parts.interface_cross)


@dataclass
class EnergyRecorder:
    """Observer collecting an EnergySample at each call."""

    system: SemidiscreteSystem
    samples: list[EnergySample] = field(default_factory=list)

    def __call__(self, state) -> None:
        self.samples.append(discrete_energy(self.system, state.z, state.z_t, state.t))

    def max_relative_drift(self) -> float:
        e0 = self.samples[0].total
        return max(abs(s.total - e0) for s in self.samples) / abs(e0)


# ---------------------------------------------------------------- spectrum


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    n: int

    @property
    def max_real(self) -> float:
        return float(self.eigenvalues.real.max())

    @property
    def max_abs_imag(self) -> float:
        return float(np.abs(self.eigenvalues.imag).max())

    def scaled_max_real(self, h: float) -> float:
        """max Re(lambda) h^2, the grid-scaled extreme eigenvalue."""
        return self.max_real * h * h


def spectrum(system: SemidiscreteSystem, max_unknowns: int = MAX_DENSE_UNKNOWNS) -> SpectrumResult:
    """All eigenvalues of Q by a dense solve."""
    if system.n > max_unknowns:
        raise SystemTooLarge(f"{system.n} unknowns exceed the dense limit of {max_unknowns}")
    ev = sla.eigvals(system.Q_mat.toarray(), overwrite_a=True, check_finite=False)
    return SpectrumResult(ev, system.n)


# ------------------------------------------------------------- convergence


@dataclass(frozen=True)
class ErrorNorms:
    l2: float
    max: float


def grid_l2(e: np.ndarray, h: float, d: int = 2) -> float:
    return float(math.sqrt(h**d * np.sum(np.asarray(e) ** 2)))


def error_norms(system: SemidiscreteSystem, u_h: np.ndarray, u_exact: np.ndarray, amplitude: float = 1.0) -> ErrorNorms:
    """Discrete L2 error accumulated blockwise with hx*hy, and relative max error."""
    if u_h.shape != u_exact.shape or u_h.shape != (system.n,):
        raise SizeMismatch("solution vectors must match the system size")
    e = u_h - u_exact
    sq = sum(b.hx * b.hy * float(np.sum(e[b.slice] ** 2)) for b in system.blocks)
    return ErrorNorms(math.sqrt(sq), float(np.max(np.abs(e))) / amplitude)


def convergence_rates(errors: Sequence[float], ratio: float = 2.0) -> list[float]:
    """q_k = log(e_k / e_{k-1}) / log(1/ratio) for consecutive levels."""
    if len(errors) < 2:
        raise InsufficientLevels("at least two refinement levels are needed")
    e = np.asarray(errors, dtype=float)
    return [float(math.log(e[k] / e[k - 1]) / math.log(1.0 / ratio)) for k in range(1, len(e))]


@dataclass
class ConvergenceReport:
    order: int
    family: str
    levels: list[int]
    n_points: list[int]
    l2: list[float]
    max: list[float]

    @property
    def rates_l2(self) -> list[float]:
        return convergence_rates(self.l2)

    @property
    def rates_max(self) -> list[float]:
        return convergence_rates(self.max)

    def rows(self) -> list[list]:
        rows = []
        for k, lev in enumerate(self.levels):
            q2 = self.rates_l2[k - 1] if k > 0 else float("nan")
            qm = self.rates_max[k - 1] if k > 0 else float("nan")
            rows.append([self.order, lev, self.l2[k], q2, self.max[k], qm])
        return rows

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["order", "refinement", "l2_error", "q_l2", "max_error", "q_max"])
            for row in self.rows():
                w.writerow(row)


def manufactured_run(system: SemidiscreteSystem, t_final: float, solution: ManufacturedSolution | None = None,
                     dt: float | None = None) -> ErrorNorms:
    """Integrate the manufactured solution and return the final-time errors."""
    solution = solution or ManufacturedSolution()
    z0, v0 = initial_data(system, solution)
    state = simulate(system, z0, v0, t_final, dt=dt)
    X, Y = system.coordinates()
    return error_norms(system, state.z, solution(X, Y, t_final))


def convergence_study(mesh_builder: Callable[[int], MultiBlockMesh], order: int, family: str, levels: Sequence[int],
                      t_final: float = 2.0, penalty: PenaltyConfig = PenaltyConfig(),
                      dt_factor: float | None = None) -> ConvergenceReport:
    solution = ManufacturedSolution()
    l2, mx, npts = [], [], []
    for r in levels:
        system = assemble(mesh_builder(r), order, family, penalty, bc=solution)
        err = manufactured_run(system, t_final, solution, dt=time_step(system, dt_factor))
        l2.append(err.l2)
        mx.append(err.max)
        npts.append(system.n)
    return ConvergenceReport(order, family, list(levels), npts, l2, mx)
