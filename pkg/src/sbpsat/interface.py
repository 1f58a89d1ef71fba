"""Interface transfer operators between non-conforming trace grids.

Two families are provided:

* 1:2 interpolation pairs (I_c2f, I_f2c) built from accuracy and norm
  compatibility constraints, with free parameters fixed by minimising the
  leading error coefficients;
* projection operators through a glue grid: traces are mapped to piecewise
  Legendre polynomials, restricted exactly to the glue cells and brought back.

Every returned pair satisfies H_f I_c2f = (H_c I_f2c)^T to rounding.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import legendre as leg

from .errors import (
    CompatibilityViolation,
    ConstraintSystemInfeasible,
    EndpointMismatch,
    GridTooSmall,
    ParseError,
    SymmetryViolation,
    UnsupportedOrder,
)
from .sbp import GridLine1D, build_sbp, parse_blocks, parse_header

CONSTRUCTED_ORDERS = (2, 4)
COMPAT_TOL = 1e-12
MERGE_TOL = 1e-12

# closure sizes found by scanning for the smallest feasible systems with Xi >= 0
_INTERP_CLOSURE = {2: (1, 1), 4: (6, 9)}  # (coarse columns, fine rows)
_PROJ_CLOSURE = {2: (0, 0), 4: (5, 7)}  # (cells, nodes)


@dataclass(frozen=True, eq=False)
class InterfaceOperatorPair:
    order: int
    I_c2f: np.ndarray
    I_f2c: np.ndarray
    H_c: np.ndarray  # diagonal entries
    H_f: np.ndarray
    kind: str
    h_c: float
    h_f: float

    @property
    def nc(self) -> int:
        return self.I_c2f.shape[1]

    @property
    def nf(self) -> int:
        return self.I_c2f.shape[0]

    def compatibility_residual(self) -> float:
        lhs = self.H_f[:, None] * self.I_c2f
        rhs = (self.H_c[:, None] * self.I_f2c).T
        scale = max(self.H_c.max(), self.H_f.max())
        return float(np.abs(lhs - rhs).max() / scale)


@dataclass(frozen=True)
class XiDiagnostics:
    k_c: float
    k_f: float
    symmetry_c: float
    symmetry_f: float
    spectra: tuple[np.ndarray, np.ndarray] | None = None


@dataclass(frozen=True, eq=False)
class GlueGrid:
    y: np.ndarray
    idx_c: np.ndarray
    idx_f: np.ndarray


@dataclass(frozen=True, eq=False)
class GlueGridSet:
    order: int
    y_c: np.ndarray
    y_f: np.ndarray
    y_g: np.ndarray
    H_c: np.ndarray
    H_f: np.ndarray
    M_c: np.ndarray
    M_f: np.ndarray
    M_g: np.ndarray
    P_f2p_c: np.ndarray
    P_p2f_c: np.ndarray
    P_p2g_c: np.ndarray
    P_g2p_c: np.ndarray
    P_f2p_f: np.ndarray
    P_p2f_f: np.ndarray
    P_p2g_f: np.ndarray
    P_g2p_f: np.ndarray
    segments_c: tuple[int, ...] = field(default=())
    segments_f: tuple[int, ...] = field(default=())

    def compatibility_residuals(self) -> dict[str, float]:
        def res(A, B):
            return float(np.abs(A - B.T).max() / max(np.abs(A).max(), 1e-300))

        return {
            "A_c": res(self.H_c[:, None] * self.P_p2f_c, self.M_c[:, None] * self.P_f2p_c),
            "A_f": res(self.H_f[:, None] * self.P_p2f_f, self.M_f[:, None] * self.P_f2p_f),
            "B_c": res(self.M_g[:, None] * self.P_p2g_c, self.M_c[:, None] * self.P_g2p_c),
            "B_f": res(self.M_g[:, None] * self.P_p2g_f, self.M_f[:, None] * self.P_g2p_f),
        }


# ------------------------------------------------------------ linear algebra


def _affine(fun, nu: int):
    """Matrix form (A, b) of an affine residual map r(theta) = A theta - b."""
    r0 = fun(np.zeros(nu))
    eye = np.eye(nu)
    A = np.column_stack([fun(eye[k]) - r0 for k in range(nu)]) if nu else np.zeros((r0.size, 0))
    return A, -r0


def _solve_constrained(cons, lead, nu: int, tol: float = 1e-10) -> np.ndarray:
    """Satisfy cons(theta)=0 exactly and minimise |lead(theta)| over the rest."""
    if nu == 0:
        r = cons(np.zeros(0))
        if r.size and np.abs(r).max() > tol:
            raise ConstraintSystemInfeasible(f"no free parameters and residual {np.abs(r).max():.2e}")
        return np.zeros(0)
    A, b = _affine(cons, nu)
    theta0, *_ = np.linalg.lstsq(A, b, rcond=None)
    defect = np.abs(A @ theta0 - b).max()
    if defect > tol:
        rank = np.linalg.matrix_rank(A)
        aug = np.linalg.matrix_rank(np.column_stack([A, b]))
        raise ConstraintSystemInfeasible(
            f"accuracy constraints inconsistent: rank {rank} vs augmented {aug}, residual {defect:.2e}"
        )
    N = sla.null_space(A)
    if N.shape[1] == 0:
        return theta0
    L, ell = _affine(lead, nu)
    z, *_ = np.linalg.lstsq(L @ N, ell - L @ theta0, rcond=None)
    return theta0 + N @ z


def _unit_norm(order: int, n: int) -> np.ndarray:
    return build_sbp(order, GridLine1D(n, 1.0)).H.copy()


# ------------------------------------------------------- interpolation family


def _midpoint_weights(p: int) -> np.ndarray:
    nodes = np.arange(-p + 1, p + 1)
    V = np.vander(nodes, 2 * p, increasing=True).T
    return np.linalg.solve(V, 0.5 ** np.arange(2 * p))


def _interp_interior(p: int, nc: int, Rf: int) -> np.ndarray:
    nf = 2 * nc - 1
    mid = _midpoint_weights(p)
    C = np.zeros((nf, nc))
    for j in range(Rf, nf - Rf):
        if j % 2 == 0:
            C[j, j // 2] = 1.0
        else:
            i = j // 2
            C[j, i - p + 1:i + p + 1] = mid
    return C


@functools.lru_cache(maxsize=None)
def _interp_closure(order: int) -> np.ndarray:
    """Upper-left closure block of I_c2f in unit coarse spacing."""
    p = order // 2
    Rc, Rf = _INTERP_CLOSURE[order]
    db = p - 1
    nc = 2 * Rc + 4 * p + 6
    nf = 2 * nc - 1
    Hc = _unit_norm(order, nc)
    Hf = 0.5 * _unit_norm(order, nf)
    base = _interp_interior(p, nc, Rf)
    idx = [(j, i) for j in range(Rf) for i in range(Rc)]
    xc = np.arange(nc, dtype=float) / (nc - 1)
    xf = np.arange(nf, dtype=float) / (nf - 1)

    def mats(theta):
        C = base.copy()
        for k, (j, i) in enumerate(idx):
            C[j, i] = theta[k]
            C[nf - 1 - j, nc - 1 - i] = theta[k]
        F = (C * Hf[:, None]).T / Hc[:, None]
        return C, F

    def residual(theta, degs_c, degs_f, rows_c, rows_f):
        C, F = mats(theta)
        out = [(C @ xc**d - xf**d)[rows_c] for d in degs_c]
        out += [(F @ xf**d - xc**d)[rows_f] for d in degs_f]
        return np.concatenate(out) if out else np.zeros(0)

    edge_c, edge_f = list(range(Rf)), list(range(Rc))
    mid_c, mid_f = list(range(Rf, nf // 2)), list(range(Rc, nc // 2))

    def cons(theta):
        return np.concatenate([
            residual(theta, range(db + 1), range(db + 1), edge_c, edge_f),
            residual(theta, [], range(2 * p), [], mid_f),
            residual(theta, range(2 * p), [], mid_c, []),
        ])

    def lead(theta):
        return residual(theta, [db + 1], [db + 1], edge_c, edge_f)

    theta = _solve_constrained(cons, lead, len(idx))
    return mats(theta)[0][:Rf, :Rc].copy()


def _check_order(order: int):
    if order not in CONSTRUCTED_ORDERS:
        raise UnsupportedOrder(f"operators of order {order} are loaded from files, not constructed")


def build_interpolation_pair(order: int, n_c: int, h_c: float = 1.0) -> InterfaceOperatorPair:
    """1:2 interpolation pair between a coarse trace of n_c points and a fine one of 2n_c-1."""
    _check_order(order)
    p = order // 2
    Rc, Rf = _INTERP_CLOSURE[order]
    n_min = max(2 * Rc + 2 * p + 1, build_sbp(order, GridLine1D(64, 1.0)).closure_rows * 2 + 2 * p + 1)
    if n_c < n_min:
        raise GridTooSmall(f"order-{order} interpolation needs n_c >= {n_min}, got {n_c}")
    nf = 2 * n_c - 1
    C = _interp_interior(p, n_c, Rf)
    block = _interp_closure(order)
    C[:Rf, :Rc] = block
    C[nf - Rf:, n_c - Rc:] = block[::-1, ::-1]
    Hc = h_c * _unit_norm(order, n_c)
    Hf = 0.5 * h_c * _unit_norm(order, nf)
    F = (C * Hf[:, None]).T / Hc[:, None]
    pair = InterfaceOperatorPair(order, C, F, Hc, Hf, "interpolation", h_c, 0.5 * h_c)
    validate_pair(pair)
    return pair


def identity_pair(order: int, n: int, h: float) -> InterfaceOperatorPair:
    """Trivial pair for coincident traces."""
    H = h * _unit_norm(order, n)
    eye = np.eye(n)
    return InterfaceOperatorPair(order, eye, eye.copy(), H, H.copy(), "identity", h, h)


# ---------------------------------------------------------- projection family


def _legendre_mass(q: int) -> np.ndarray:
    return 1.0 / (2 * np.arange(q + 1) + 1)


def _lagrange_to_legendre(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Legendre coefficients on the cell [0,1] of the degree-(2p-1) Lagrange
    interpolant through nodes -p+1..p (one column per node)."""
    q = 2 * p - 1
    nodes = np.arange(-p + 1, p + 1, dtype=float)
    g, w = leg.leggauss(q + 2)
    x = 0.5 * (g + 1.0)
    V = np.vander(nodes, 2 * p, increasing=True)
    lag = np.linalg.solve(V.T, np.vander(x, 2 * p, increasing=True).T)
    Vg = leg.legvander(g, q)
    A = (Vg * w[:, None]).T @ lag.T * ((2 * np.arange(q + 1) + 1) / 2.0)[:, None]
    return nodes.astype(int), A


def _legendre_of(f_vals_at, a: float, b: float, q: int) -> np.ndarray:
    g, w = leg.leggauss(q + 2)
    x = a + 0.5 * (g + 1.0) * (b - a)
    return (leg.legvander(g, q) * w[:, None]).T @ f_vals_at(x) * ((2 * np.arange(q + 1) + 1) / 2.0)


def _proj_interior(p: int, n: int, Rcell: int) -> np.ndarray:
    q = 2 * p - 1
    N = n - 1
    nodes, A = _lagrange_to_legendre(p)
    P = np.zeros((N * (q + 1), n))
    for c in range(Rcell, N - Rcell):
        P[c * (q + 1):(c + 1) * (q + 1), c + nodes] = A
    return P


def _proj_stamp(P: np.ndarray, block: np.ndarray, p: int, n: int, Rcell: int, Rnode: int) -> np.ndarray:
    q = 2 * p - 1
    N = n - 1
    sign = (-1.0) ** np.arange(q + 1)
    for c in range(Rcell):
        P[c * (q + 1):(c + 1) * (q + 1), :Rnode] = block[c]
        mirror = (N - 1 - c) * (q + 1)
        P[mirror:mirror + q + 1, n - Rnode:] = (block[c] * sign[:, None])[:, ::-1]
    return P


@functools.lru_cache(maxsize=None)
def _proj_closure(order: int) -> np.ndarray:
    """Closure of the node-to-polynomial map, shape (cells, q+1, nodes)."""
    p = order // 2
    q = 2 * p - 1
    Rcell, Rnode = _PROJ_CLOSURE[order]
    if Rcell == 0:
        return np.zeros((0, q + 1, 0))
    dbf, dbp = p - 1, p - 1
    n = 2 * max(Rcell, Rnode) + 4 * p + 8
    N = n - 1
    H = _unit_norm(order, n)
    M = np.tile(_legendre_mass(q), N)
    base = _proj_interior(p, n, Rcell)
    nu = Rcell * (q + 1) * Rnode
    xg = np.arange(n, dtype=float) / (n - 1)
    targets = {
        d: np.concatenate([_legendre_of(lambda x: x**d, c / N, (c + 1) / N, q) for c in range(N)])
        for d in range(2 * p + 1)
    }

    def mats(theta):
        block = np.asarray(theta).reshape(Rcell, q + 1, Rnode)
        P = _proj_stamp(base.copy(), block, p, n, Rcell, Rnode)
        return P, (P * M[:, None]).T / H[:, None]

    def residual(theta, degs_f2p, degs_p2f, cells, nodes):
        P, Pp = mats(theta)
        rows = [c * (q + 1) + k for c in cells for k in range(q + 1)]
        out = [(P @ xg**d - targets[d])[rows] for d in degs_f2p]
        out += [(Pp @ targets[d] - xg**d)[nodes] for d in degs_p2f]
        return np.concatenate(out) if out else np.zeros(0)

    edge_cells, edge_nodes = list(range(Rcell)), list(range(Rnode))
    mid_cells, mid_nodes = list(range(Rcell, N // 2)), list(range(Rnode, n // 2))

    def cons(theta):
        return np.concatenate([
            residual(theta, range(dbf + 1), [], edge_cells, []),
            residual(theta, [], range(dbp + 1), [], edge_nodes),
            residual(theta, range(2 * p), [], mid_cells, []),
            residual(theta, [], range(2 * p), [], mid_nodes),
        ])

    def lead(theta):
        return np.concatenate([
            residual(theta, [dbf + 1], [], edge_cells, []),
            residual(theta, [], [dbp + 1], [], edge_nodes),
        ])

    theta = _solve_constrained(cons, lead, nu)
    return theta.reshape(Rcell, q + 1, Rnode)


def projection_min_points(order: int) -> int:
    p = order // 2
    Rcell, Rnode = _PROJ_CLOSURE[order]
    return max(2 * Rnode, 2 * Rcell + 2 * p, 2) + 2


@functools.lru_cache(maxsize=128)
def _f2p_unit(order: int, n: int) -> np.ndarray:
    p = order // 2
    Rcell, Rnode = _PROJ_CLOSURE[order]
    P = _proj_interior(p, n, Rcell)
    if Rcell:
        P = _proj_stamp(P, _proj_closure(order), p, n, Rcell, Rnode)
    P.setflags(write=False)
    return P


def _segment_spacing(y: np.ndarray) -> float:
    d = np.diff(y)
    h = (y[-1] - y[0]) / (len(y) - 1)
    if not np.allclose(d, h, rtol=1e-9, atol=0.0):
        raise ValueError("projection requires equidistant trace segments")
    return float(h)


def _as_segments(y) -> list[np.ndarray]:
    if isinstance(y, np.ndarray) and y.ndim == 1:
        return [y.astype(float)]
    return [np.asarray(s, dtype=float) for s in y]


def _side_operators(order: int, segments: list[np.ndarray]):
    """Block-diagonal f2p/p2f with norms, masses and cell boundaries."""
    p = order // 2
    q = 2 * p - 1
    f2p, H, M, edges = [], [], [], []
    for y in segments:
        n = len(y)
        if n < projection_min_points(order):
            raise GridTooSmall(f"order-{order} projection needs >= {projection_min_points(order)} points, got {n}")
        h = _segment_spacing(y)
        f2p.append(_f2p_unit(order, n))
        H.append(h * _unit_norm(order, n))
        M.append(h * np.tile(_legendre_mass(q), n - 1))
        edges.append(y)
    P = sla.block_diag(*f2p)
    Hc = np.concatenate(H)
    Mc = np.concatenate(M)
    Pp = (P * Mc[:, None]).T / Hc[:, None]
    cells = np.concatenate([np.column_stack([y[:-1], y[1:]]) for y in edges])
    return P, Pp, Hc, Mc, cells


def _restriction(cells: np.ndarray, y_g: np.ndarray, q: int) -> np.ndarray:
    """Exact restriction of piecewise polynomials to the glue cells."""
    ng = len(y_g) - 1
    R = np.zeros((ng * (q + 1), len(cells) * (q + 1)))
    g, w = leg.leggauss(q + 1)
    Vg = leg.legvander(g, q)
    scale = (2 * np.arange(q + 1) + 1) / 2.0
    mids = 0.5 * (y_g[:-1] + y_g[1:])
    for k in range(ng):
        a, b = y_g[k], y_g[k + 1]
        owner = np.nonzero((cells[:, 0] <= mids[k]) & (mids[k] <= cells[:, 1]))[0]
        if owner.size == 0:
            raise EndpointMismatch(f"glue cell [{a}, {b}] is not covered by the trace grid")
        c = owner[0]
        ca, cb = cells[c]
        x = a + 0.5 * (g + 1.0) * (b - a)
        s = 2.0 * (x - ca) / (cb - ca) - 1.0
        Vp = leg.legvander(s, q)
        R[k * (q + 1):(k + 1) * (q + 1), c * (q + 1):(c + 1) * (q + 1)] = (Vg * w[:, None]).T @ Vp * scale[:, None]
    return R


def build_glue_grid(y_c, y_f) -> GlueGrid:
    """Sorted union of two trace grids with coincident points merged."""
    yc = np.concatenate(_as_segments(y_c))
    yf = np.concatenate(_as_segments(y_f))
    length = max(yc[-1] - yc[0], yf[-1] - yf[0])
    tol = MERGE_TOL * max(length, 1e-300)
    if abs(yc[0] - yf[0]) > tol or abs(yc[-1] - yf[-1]) > tol:
        raise EndpointMismatch(f"trace endpoints differ: [{yc[0]}, {yc[-1]}] vs [{yf[0]}, {yf[-1]}]")
    allpts = np.sort(np.concatenate([yc, yf]))
    keep = np.r_[True, np.diff(allpts) > tol]
    y = allpts[keep]

    def locate(v):
        i = np.searchsorted(y, v - tol)
        return np.minimum(i, len(y) - 1)

    return GlueGrid(y, locate(yc), locate(yf))


def build_projection_set(order: int, y_c, y_f, H_c=None, H_f=None) -> GlueGridSet:
    """Projection operators for both sides of a segment and their glue grid.

    `y_c` and `y_f` may each be a coordinate vector or a list of vectors, one
    per block meeting the segment from that side.
    """
    _check_order(order)
    p = order // 2
    q = 2 * p - 1
    segs_c, segs_f = _as_segments(y_c), _as_segments(y_f)
    Pc, Ppc, Hc, Mc, cells_c = _side_operators(order, segs_c)
    Pf, Ppf, Hf, Mf, cells_f = _side_operators(order, segs_f)
    for given, built in ((H_c, Hc), (H_f, Hf)):
        if given is not None and not np.allclose(np.asarray(given), built, rtol=1e-12, atol=0.0):
            raise CompatibilityViolation("supplied trace norm differs from the SBP norm of the trace grid")
    glue = build_glue_grid(segs_c, segs_f)
    yg = glue.y
    Mg = np.repeat(np.diff(yg), q + 1) * np.tile(_legendre_mass(q), len(yg) - 1)
    Rc = _restriction(cells_c, yg, q)
    Rf = _restriction(cells_f, yg, q)
    Gc = (Rc * Mg[:, None]).T / Mc[:, None]
    Gf = (Rf * Mg[:, None]).T / Mf[:, None]
    return GlueGridSet(
        order=order,
        y_c=np.concatenate(segs_c),
        y_f=np.concatenate(segs_f),
        y_g=yg,
        H_c=Hc,
        H_f=Hf,
        M_c=Mc,
        M_f=Mf,
        M_g=Mg,
        P_f2p_c=Pc,
        P_p2f_c=Ppc,
        P_p2g_c=Rc,
        P_g2p_c=Gc,
        P_f2p_f=Pf,
        P_p2f_f=Ppf,
        P_p2g_f=Rf,
        P_g2p_f=Gf,
        segments_c=tuple(len(s) for s in segs_c),
        segments_f=tuple(len(s) for s in segs_f),
    )


def compose_interface(gs: GlueGridSet) -> InterfaceOperatorPair:
    c2f = gs.P_p2f_f @ gs.P_g2p_f @ gs.P_p2g_c @ gs.P_f2p_c
    f2c = gs.P_p2f_c @ gs.P_g2p_c @ gs.P_p2g_f @ gs.P_f2p_f
    h_c = float(np.diff(gs.y_c).max())
    h_f = float(np.diff(gs.y_f).max())
    return InterfaceOperatorPair(gs.order, c2f, f2c, gs.H_c.copy(), gs.H_f.copy(), "projection", h_c, h_f)


# ---------------------------------------------------------------- validation


def polynomial_degree(op: np.ndarray, x_from: np.ndarray, x_to: np.ndarray, max_degree: int,
                      tol: float = 1e-9) -> np.ndarray:
    """Per-row highest degree d such that all monomials <= d are reproduced."""
    a, b = x_from.min(), x_from.max()
    s_from = (x_from - a) / (b - a)
    s_to = (x_to - a) / (b - a)
    deg = np.full(op.shape[0], -1)
    alive = np.ones(op.shape[0], dtype=bool)
    for d in range(max_degree + 1):
        ok = np.abs(op @ s_from**d - s_to**d) <= tol
        alive &= ok
        deg[alive] = d
    return deg


def validate_pair(pair: InterfaceOperatorPair, check_exactness: bool = True) -> None:
    res = pair.compatibility_residual()
    if res > COMPAT_TOL:
        raise CompatibilityViolation(f"norm compatibility residual {res:.3e} exceeds {COMPAT_TOL:.0e}")
    for name, op in (("I_c2f", pair.I_c2f), ("I_f2c", pair.I_f2c)):
        err = np.abs(op.sum(axis=1) - 1.0).max()
        if err > 1e-12:
            raise CompatibilityViolation(f"{name} does not preserve constants (residual {err:.3e})")
    if not check_exactness:
        return
    p = pair.order // 2
    yc = np.linspace(0.0, 1.0, pair.nc)
    yf = np.linspace(0.0, 1.0, pair.nf)
    for name, op, xf, xt in (("I_c2f", pair.I_c2f, yc, yf), ("I_f2c", pair.I_f2c, yf, yc)):
        deg = polynomial_degree(op, xf, xt, 2 * p - 1)
        n = len(deg)
        middle = deg[n // 3:n - n // 3]
        if deg.min() < p - 1 or middle.min() < 2 * p - 1:
            raise CompatibilityViolation(
                f"{name} accuracy too low: min degree {deg.min()}, interior min degree {middle.min()}"
            )


def xi_matrices(pair: InterfaceOperatorPair) -> tuple[np.ndarray, np.ndarray]:
    Xc = np.diag(pair.H_c) - pair.H_c[:, None] * (pair.I_f2c @ pair.I_c2f)
    Xf = np.diag(pair.H_f) - pair.H_f[:, None] * (pair.I_c2f @ pair.I_f2c)
    return Xc, Xf


def xi_diagnostics(pair: InterfaceOperatorPair, spectra: bool = False, tol: float = 1e-12) -> XiDiagnostics:
    Xc, Xf = xi_matrices(pair)
    sym_c = float(np.abs(Xc - Xc.T).max() / pair.h_c)
    sym_f = float(np.abs(Xf - Xf.T).max() / pair.h_f)
    if sym_c > tol or sym_f > tol:
        raise SymmetryViolation(f"Xi not symmetric: {sym_c:.2e} (coarse), {sym_f:.2e} (fine)")
    ec = np.linalg.eigvalsh(0.5 * (Xc + Xc.T))
    ef = np.linalg.eigvalsh(0.5 * (Xf + Xf.T))
    return XiDiagnostics(
        k_c=float(ec[0] / pair.h_c),
        k_f=float(ef[0] / pair.h_f),
        symmetry_c=sym_c,
        symmetry_f=sym_f,
        spectra=(ec / pair.h_c, ef / pair.h_f) if spectra else None,
    )


# ---------------------------------------------------------------- file format

_IFACE_BLOCKS = ("I_C2F", "I_F2C", "H_C", "H_F")


def write_interface_operators(pair: InterfaceOperatorPair, path) -> None:
    kind = "projection" if pair.kind == "projection" else "interpolation"
    lines = [f"iface kind={kind} order={pair.order} nc={pair.nc} nf={pair.nf}"]
    for name, mat in (("I_C2F", pair.I_c2f), ("I_F2C", pair.I_f2c), ("H_C", pair.H_c[None, :]),
                      ("H_F", pair.H_f[None, :])):
        lines.append(name)
        lines.extend(" ".join(repr(float(v)) for v in row) for row in mat)
    Path(path).write_text("\n".join(lines) + "\n")


def load_interface_operators(path, check_exactness: bool = True) -> InterfaceOperatorPair:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ParseError(f"{path}: empty file")
    head = parse_header(text[0], "iface")
    try:
        kind = head["kind"]
        order = int(head["order"])
        nc = int(head["nc"])
        nf = int(head["nf"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: bad header ({exc})") from None
    if kind not in ("interpolation", "projection"):
        raise ParseError(f"{path}: unknown kind {kind!r}")
    b = parse_blocks(text[1:], _IFACE_BLOCKS)
    shapes = {"I_C2F": (nf, nc), "I_F2C": (nc, nf), "H_C": (1, nc), "H_F": (1, nf)}
    for name, shape in shapes.items():
        if b[name].shape != shape:
            raise ParseError(f"{path}: block {name} has shape {b[name].shape}, header implies {shape}")
    Hc, Hf = b["H_C"].ravel(), b["H_F"].ravel()
    if np.any(Hc <= 0) or np.any(Hf <= 0):
        raise ParseError(f"{path}: norms must be positive")
    pair = InterfaceOperatorPair(order, b["I_C2F"], b["I_F2C"], Hc, Hf, kind,
                                 float(np.median(Hc)), float(np.median(Hf)))
    validate_pair(pair, check_exactness=check_exactness)
    return pair


def pairs_close(a: InterfaceOperatorPair, b: InterfaceOperatorPair, tol: float = 1e-12) -> bool:
    return all(
        x.shape == y.shape and np.abs(x - y).max() <= tol
        for x, y in ((a.I_c2f, b.I_c2f), (a.I_f2c, b.I_f2c), (a.H_c, b.H_c), (a.H_f, b.H_f))
    )


def segment_lengths(y: Sequence[np.ndarray]) -> list[int]:
    return [len(s) for s in y]
