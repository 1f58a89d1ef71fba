"""Assembly of z_tt = Q z + F(t) on Cartesian multi-block meshes.

Each block carries D2 = D2x (x) I + I (x) D2y.  Interfaces are coupled with
the symmetric SAT terms

    SAT_1 = +-1/2 H_n^-1 S_n^T e_b (u_b - T v_b)
    SAT_2 = -tau  H_n^-1 e_b (u_b - T v_b)
    SAT_d = -+1/2 H_n^-1 e_b ((S_n u)_b - T (S_n v)_b)

(upper signs on east/north sides), where T is the transfer operator from the
neighbouring trace.  Outer boundaries get a weak Dirichlet SAT.  Global
vectors are block-concatenated with index offset + i*ny + j.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CoverageGap, NonpositiveInput, PenaltyBelowBound, SizeMismatch
from .interface import (
    GlueGridSet,
    InterfaceOperatorPair,
    build_interpolation_pair,
    build_projection_set,
    compose_interface,
)
from .mesh import MultiBlockMesh
from .sbp import GridLine1D, SbpOperatorSet, build_sbp

BoundaryData = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

# side -> (normal axis, boundary index, outward sign)
SIDE_INFO = {
    "west": ("x", 0, -1.0),
    "east": ("x", -1, 1.0),
    "south": ("y", 0, -1.0),
    "north": ("y", -1, 1.0),
}


def tau_bound(alpha: float, h_left: float, h_right: float) -> float:
    """Smallest interface penalty giving a non-negative discrete energy."""
    if not (alpha > 0 and h_left > 0 and h_right > 0):
        raise NonpositiveInput("alpha and spacings must be positive")
    return max(1.0 / (2 * alpha * h_left), 1.0 / (2 * alpha * h_right))


def dirichlet_bound(alpha: float, h: float) -> float:
    if not (alpha > 0 and h > 0):
        raise NonpositiveInput("alpha and spacing must be positive")
    return 1.0 / (alpha * h)


@dataclass(frozen=True)
class PenaltyConfig:
    safety: float = 1.2
    tau: float | None = None  # explicit interface penalty overrides safety*bound
    enforce: bool = True  # reject penalties below the energy bound
    # near the bound the boundary penalty leaves a large, erratically
    # converging error; from about 2 up the solution barely depends on it
    dirichlet_safety: float = 2.0

    def interface_tau(self, bound: float) -> float:
        tau = self.safety * bound if self.tau is None else self.tau
        if self.enforce and tau < bound * (1 - 1e-12):
            raise PenaltyBelowBound(f"tau={tau:.6g} below the bound {bound:.6g}")
        return tau

    def dirichlet_sigma(self, bound: float) -> float:
        sigma = self.dirichlet_safety * bound
        if self.enforce and sigma < bound * (1 - 1e-12):
            raise PenaltyBelowBound(f"Dirichlet penalty {sigma:.6g} below the bound {bound:.6g}")
        return sigma


@dataclass(frozen=True)
class SelectorMatrix:
    """Single unit entry at (row, col) in a rows x cols matrix."""

    rows: int
    cols: int
    row: int
    col: int

    def toarray(self) -> np.ndarray:
        A = np.zeros((self.rows, self.cols))
        A[self.row, self.col] = 1.0
        return A

    @property
    def T(self) -> "SelectorMatrix":
        return SelectorMatrix(self.cols, self.rows, self.col, self.row)


def interface_selectors(n_xl: int, n_xr: int) -> dict[str, SelectorMatrix]:
    """E_0L, E_0R, E_LR, E_RL for a left block of n_xl and right of n_xr points in x."""
    return {
        "E_0L": SelectorMatrix(n_xl, n_xl, n_xl - 1, n_xl - 1),
        "E_0R": SelectorMatrix(n_xr, n_xr, 0, 0),
        "E_LR": SelectorMatrix(n_xl, n_xr, n_xl - 1, 0),
        "E_RL": SelectorMatrix(n_xr, n_xl, 0, n_xl - 1),
    }


# ------------------------------------------------------------------- blocks


@dataclass(frozen=True, eq=False)
class SideOperators:
    side: str
    axis: str
    b: int  # boundary index along the normal axis (0 or n-1)
    sigma: float
    h_n: float
    H_t: np.ndarray  # tangential norm
    t: np.ndarray  # tangential coordinates
    xb: np.ndarray
    yb: np.ndarray
    E: sp.csr_matrix  # trace extraction (nt x N)
    Dn: sp.csr_matrix  # boundary derivative along the normal axis (nt x N)
    L: sp.csr_matrix  # H_n^-1 e_b (x) I  (N x nt)
    LS: sp.csr_matrix  # H_n^-1 S_n^T e_b (x) I  (N x nt)
    s_cols: np.ndarray  # stencil columns of the boundary S row
    s_vals: np.ndarray
    hinv_n: np.ndarray  # 1/H along the normal axis


@dataclass(frozen=True, eq=False)
class BlockDiscretization:
    index: int
    x: np.ndarray
    y: np.ndarray
    ops_x: SbpOperatorSet
    ops_y: SbpOperatorSet
    offset: int
    sides: dict = field(default_factory=dict, repr=False)

    @property
    def nx(self) -> int:
        return len(self.x)

    @property
    def ny(self) -> int:
        return len(self.y)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def slice(self) -> slice:
        return slice(self.offset, self.offset + self.size)

    @property
    def hx(self) -> float:
        return self.ops_x.h

    @property
    def hy(self) -> float:
        return self.ops_y.h

    @property
    def norm(self) -> np.ndarray:
        return np.kron(self.ops_x.H, self.ops_y.H)

    def d2(self) -> sp.csr_matrix:
        return sp.csr_matrix(sp.kron(self.ops_x.D2, sp.identity(self.ny)) + sp.kron(sp.identity(self.nx), self.ops_y.D2))

    def side(self, name: str) -> SideOperators:
        if name not in self.sides:
            self.sides[name] = self._build_side(name)
        return self.sides[name]

    def _build_side(self, name: str) -> SideOperators:
        axis, end, sigma = SIDE_INFO[name]
        nx, ny = self.nx, self.ny
        if axis == "x":
            ops_n, ops_t = self.ops_x, self.ops_y
            b = 0 if end == 0 else nx - 1
            srow = ops_n.S[b]
            E = sp.kron(sp.csr_matrix(([1.0], ([0], [b])), shape=(1, nx)), sp.identity(ny), format="csr")
            Dn = sp.kron(srow, sp.identity(ny), format="csr")
            hinv = np.kron(ops_n.Hinv, np.ones(ny))
            t = self.y
            xb, yb = np.full(ny, self.x[b]), self.y.copy()
        else:
            ops_n, ops_t = self.ops_y, self.ops_x
            b = 0 if end == 0 else ny - 1
            srow = ops_n.S[b]
            E = sp.kron(sp.identity(nx), sp.csr_matrix(([1.0], ([0], [b])), shape=(1, ny)), format="csr")
            Dn = sp.kron(sp.identity(nx), srow, format="csr")
            hinv = np.kron(np.ones(nx), ops_n.Hinv)
            t = self.x
            xb, yb = self.x.copy(), np.full(nx, self.y[b])
        Hi = sp.diags(hinv)
        srow = sp.csr_matrix(srow)
        return SideOperators(
            side=name,
            axis=axis,
            b=b,
            sigma=sigma,
            h_n=ops_n.h,
            H_t=ops_t.H.copy(),
            t=t.copy(),
            xb=xb,
            yb=yb,
            E=E,
            Dn=Dn,
            L=sp.csr_matrix(Hi @ E.T),
            LS=sp.csr_matrix(Hi @ Dn.T),
            s_cols=srow.indices.copy(),
            s_vals=srow.data.copy(),
            hinv_n=ops_n.Hinv.copy(),
        )


@dataclass(frozen=True, eq=False)
class InterfaceCoupling:
    """One coupled segment: composite traces on sides A and B and the transfer pair."""

    members_a: tuple[tuple[int, str], ...]
    members_b: tuple[tuple[int, str], ...]
    T_ab: np.ndarray  # B-trace -> A-trace
    T_ba: np.ndarray  # A-trace -> B-trace
    tau: float
    kind: str
    offsets_a: tuple[int, ...]
    offsets_b: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class DirichletSide:
    block: int
    side: str
    sigma_d: float
    offset: int  # position in the global boundary-data vector


@dataclass(frozen=True, eq=False)
class SemidiscreteSystem:
    blocks: tuple[BlockDiscretization, ...]
    Q_mat: sp.csr_matrix
    H_global: np.ndarray
    couplings: tuple[InterfaceCoupling, ...]
    dirichlet: tuple[DirichletSide, ...]
    B_data: sp.csr_matrix  # forcing = B_data @ g(xb, yb, t)
    xb: np.ndarray
    yb: np.ndarray
    boundary_data: BoundaryData | None
    metadata: dict

    @property
    def n(self) -> int:
        return self.Q_mat.shape[0]

    def index(self, block: int, i: int, j: int) -> int:
        b = self.blocks[block]
        if not (0 <= i < b.nx and 0 <= j < b.ny):
            raise IndexError(f"({i}, {j}) outside block {block} of shape {(b.nx, b.ny)}")
        return b.offset + i * b.ny + j

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        X = np.concatenate([np.repeat(b.x, b.ny) for b in self.blocks])
        Y = np.concatenate([np.tile(b.y, b.nx) for b in self.blocks])
        return X, Y

    def h_min(self) -> float:
        return min(min(b.hx, b.hy) for b in self.blocks)

    def forcing(self, t: float) -> np.ndarray:
        if self.boundary_data is None or self.B_data.shape[1] == 0:
            return np.zeros(self.n)
        g = np.asarray(self.boundary_data(self.xb, self.yb, t), dtype=float)
        return self.B_data @ g

    def sample(self, func, t: float = 0.0) -> np.ndarray:
        X, Y = self.coordinates()
        return np.asarray(func(X, Y, t), dtype=float)


# --------------------------------------------------------------- assembly


def _block_discretizations(mesh: MultiBlockMesh, sbp_sets) -> list[BlockDiscretization]:
    out, offset = [], 0
    for k, blk in enumerate(mesh.blocks):
        axes = blk.cartesian_axes()
        if axes is None:
            raise ValueError(f"block {k} is curvilinear; only Cartesian blocks can be discretized")
        x, y = axes
        if isinstance(sbp_sets, int):
            ops_x = build_sbp(sbp_sets, GridLine1D.on_interval(x[0], x[-1], len(x)))
            ops_y = build_sbp(sbp_sets, GridLine1D.on_interval(y[0], y[-1], len(y)))
        else:
            ops_x, ops_y = sbp_sets[k]
            if ops_x.n != len(x) or ops_y.n != len(y):
                raise SizeMismatch(f"operator sizes do not match block {k}")
        out.append(BlockDiscretization(k, x, y, ops_x, ops_y, offset))
        offset += len(x) * len(y)
    return out


def _segments(mesh: MultiBlockMesh):
    """Group interface records into coupled segments with two ordered sides."""
    adj: dict[tuple[int, str], list[tuple[tuple[int, str], object]]] = {}
    for itf in mesh.interfaces:
        a, b = (itf.block_a, itf.side_a), (itf.block_b, itf.side_b)
        adj.setdefault(a, []).append((b, itf))
        adj.setdefault(b, []).append((a, itf))
    seen, groups = set(), []
    for start in adj:
        if start in seen:
            continue
        color = {start: 0}
        stack, records = [start], []
        while stack:
            node = stack.pop()
            for other, itf in adj[node]:
                records.append(itf)
                if other not in color:
                    color[other] = 1 - color[node]
                    stack.append(other)
                elif color[other] == color[node]:
                    raise CoverageGap(f"interface graph around {node} is not two-sided")
        seen.update(color)
        side_a = [n for n, c in color.items() if c == 0]
        side_b = [n for n, c in color.items() if c == 1]
        kinds = {r.kind for r in records}
        if any(r.reversed for r in records):
            raise ValueError("reversed traces are not supported by the Cartesian assembler")
        kind = "glue" if "glue" in kinds else kinds.pop()
        groups.append((side_a, side_b, kind))
    return groups


def _order_members(blocks, members):
    def start(node):
        k, s = node
        return blocks[k].side(s).t[0]

    return tuple(sorted(members, key=start))


def _composite(blocks, members):
    ts = [blocks[k].side(s).t for k, s in members]
    offsets = tuple(int(v) for v in np.cumsum([0] + [len(t) for t in ts])[:-1])
    return ts, offsets


def _pair_for(kind, order, family, ts_a, ts_b, glue_sets):
    """Transfer operators (T_ab, T_ba) for one segment."""
    ya, yb = np.concatenate(ts_a), np.concatenate(ts_b)
    if len(ts_a) == 1 and len(ts_b) == 1 and len(ya) == len(yb) and np.allclose(ya, yb, rtol=0, atol=1e-12):
        # coincident traces: the trace grid already is the glue grid
        eye = np.eye(len(ya))
        return eye, eye, "conforming"
    if kind == "ratio-1:2" and family == "interpolation":
        coarse_is_a = len(ya) < len(yb)
        yc = ya if coarse_is_a else yb
        pair = build_interpolation_pair(order, len(yc), float(yc[1] - yc[0]))
        return (pair.I_f2c, pair.I_c2f, "interpolation") if coarse_is_a else (pair.I_c2f, pair.I_f2c, "interpolation")
    gs = _match_glue_set(glue_sets, ts_a, ts_b) if glue_sets is not None else None
    if gs is None and glue_sets is not None and kind == "glue":
        raise CoverageGap(f"no glue set supplied for segment at {ya[0]}..{ya[-1]}")
    swapped = False
    if gs is None:
        gs = build_projection_set(order, ts_a, ts_b)
    elif gs.y_c.shape != ya.shape or not np.allclose(gs.y_c, ya):
        swapped = True
    pair = compose_interface(gs)
    if swapped:
        return pair.I_c2f, pair.I_f2c, "projection"
    return pair.I_f2c, pair.I_c2f, "projection"


def _match_glue_set(glue_sets, ts_a, ts_b):
    ya, yb = np.concatenate(ts_a), np.concatenate(ts_b)
    for gs in glue_sets:
        for c, f in ((ya, yb), (yb, ya)):
            if gs.y_c.shape == c.shape and gs.y_f.shape == f.shape and np.allclose(gs.y_c, c) and np.allclose(gs.y_f, f):
                return gs
    return None


def _assemble(mesh, sbp_sets, penalty: PenaltyConfig, bc: BoundaryData | None, family: str,
              explicit_pair: InterfaceOperatorPair | None = None, glue_sets=None) -> SemidiscreteSystem:
    blocks = _block_discretizations(mesh, sbp_sets)
    n = sum(b.size for b in blocks)
    order = blocks[0].ops_x.order
    alpha = blocks[0].ops_x.alpha
    off = [b.offset for b in blocks]
    pieces: dict[tuple[int, int], sp.spmatrix] = {}

    def add(i, j, mat):
        pieces[(i, j)] = pieces[(i, j)] + mat if (i, j) in pieces else mat

    for b in blocks:
        add(b.index, b.index, b.d2())

    couplings = []
    covered: set[tuple[int, str]] = set()
    for side_a, side_b, kind in _segments(mesh):
        ma = _order_members(blocks, side_a)
        mb = _order_members(blocks, side_b)
        ts_a, off_a = _composite(blocks, ma)
        ts_b, off_b = _composite(blocks, mb)
        if explicit_pair is not None and len(ma) == 1 and len(mb) == 1:
            p = explicit_pair
            na, nb = len(ts_a[0]), len(ts_b[0])
            if (p.nc, p.nf) == (na, nb):
                T_ab, T_ba = p.I_f2c, p.I_c2f
            elif (p.nc, p.nf) == (nb, na):
                T_ab, T_ba = p.I_c2f, p.I_f2c
            else:
                raise SizeMismatch(f"pair sizes {(p.nc, p.nf)} do not match traces {(na, nb)}")
            ckind = p.kind
        else:
            T_ab, T_ba, ckind = _pair_for(kind, order, family, ts_a, ts_b, glue_sets)
        h_all = [blocks[k].side(s).h_n for k, s in ma + mb]
        bound = max(tau_bound(alpha, h, h) for h in h_all)
        tau = penalty.interface_tau(bound)
        c = InterfaceCoupling(ma, mb, T_ab, T_ba, tau, ckind, off_a, off_b)
        couplings.append(c)
        for own, other, T, offs_own, offs_other in ((ma, mb, T_ab, off_a, off_b), (mb, ma, T_ba, off_b, off_a)):
            for (k, s), ro in zip(own, offs_own):
                so = blocks[k].side(s)
                nt = len(so.t)
                A_lift = (0.5 * so.sigma) * so.LS - tau * so.L
                add(k, k, A_lift @ so.E - (0.5 * so.sigma) * (so.L @ so.Dn))
                for (m, sm), rm in zip(other, offs_other):
                    sother = blocks[m].side(sm)
                    Tkm = sp.csr_matrix(T[ro:ro + nt, rm:rm + len(sother.t)])
                    add(k, m, -(A_lift @ Tkm @ sother.E) + (0.5 * so.sigma) * (so.L @ Tkm @ sother.Dn))
            covered.update(own)

    dirichlet, bcols = [], []
    xb, yb = [], []
    pos = 0
    for seg in mesh.boundary:
        k, s = seg.block, seg.side
        if (k, s) in covered:
            raise CoverageGap(f"block {k} side {s} is both interface and boundary")
        so = blocks[k].side(s)
        sig = penalty.dirichlet_sigma(dirichlet_bound(alpha, so.h_n))
        lift = so.sigma * so.LS - sig * so.L
        add(k, k, lift @ so.E)
        col = sp.csr_matrix(-lift)
        bcols.append((k, col))
        dirichlet.append(DirichletSide(k, s, sig, pos))
        xb.append(so.xb)
        yb.append(so.yb)
        pos += len(so.t)
        covered.add((k, s))
    for b in blocks:
        for s in SIDE_INFO:
            if (b.index, s) not in covered:
                raise CoverageGap(f"block {b.index} side {s} has no interface or boundary condition")

    nb = len(blocks)
    grid = [[pieces.get((i, j)) for j in range(nb)] for i in range(nb)]
    for i in range(nb):
        if grid[i][i] is None:
            grid[i][i] = sp.csr_matrix((blocks[i].size, blocks[i].size))
    Q_mat = sp.bmat(grid, format="csr")
    Q_mat.eliminate_zeros()

    if bcols:
        # stack side lifts column-wise into an n x n_boundary matrix
        cols = []
        for (k, col) in bcols:
            full = sp.vstack([col if j == k else sp.csr_matrix((blocks[j].size, col.shape[1])) for j in range(nb)])
            cols.append(full)
        B_data = sp.hstack(cols, format="csr")
    else:
        B_data = sp.csr_matrix((n, 0))
    H_global = np.concatenate([b.norm for b in blocks])
    meta = {
        "order": order,
        "alpha": alpha,
        "family": family,
        "mesh": mesh.name,
        "safety": penalty.safety,
        "dirichlet_safety": penalty.dirichlet_safety,
        "tau": [c.tau for c in couplings],
        "interface_kinds": [c.kind for c in couplings],
        "offsets": off,
    }
    return SemidiscreteSystem(
        blocks=tuple(blocks),
        Q_mat=Q_mat,
        H_global=H_global,
        couplings=tuple(couplings),
        dirichlet=tuple(dirichlet),
        B_data=B_data,
        xb=np.concatenate(xb) if xb else np.zeros(0),
        yb=np.concatenate(yb) if yb else np.zeros(0),
        boundary_data=bc,
        metadata=meta,
    )


def assemble_two_block(mesh: MultiBlockMesh, sbp_sets, pair: InterfaceOperatorPair | None = None,
                       penalty: PenaltyConfig = PenaltyConfig(), bc: BoundaryData | None = None,
                       family: str = "interpolation") -> SemidiscreteSystem:
    """Two blocks joined at one interface, coupled through `pair`.

    Without an explicit pair, the operators of `family` are built for the
    interface.  `sbp_sets` is an order or a per-block list of (ops_x, ops_y).
    """
    if len(mesh.blocks) != 2 or len(mesh.interfaces) != 1:
        raise SizeMismatch("assemble_two_block expects exactly two blocks and one interface")
    return _assemble(mesh, sbp_sets, penalty, bc, family, explicit_pair=pair)


def assemble_glue_coupled(mesh: MultiBlockMesh, sbp_sets, glue_sets: Sequence[GlueGridSet] | None = None,
                          penalty: PenaltyConfig = PenaltyConfig(), bc: BoundaryData | None = None) -> SemidiscreteSystem:
    """Couple every interface segment through projections onto its glue grid.

    Segments are formed from all blocks meeting along a line, so a T-junction
    becomes one segment with a composite side.  Coincident traces need no
    projection and are coupled pointwise.
    """
    return _assemble(mesh, sbp_sets, penalty, bc, "projection", glue_sets=glue_sets)


def assemble(mesh: MultiBlockMesh, order: int, family: str = "projection", penalty: PenaltyConfig = PenaltyConfig(),
             bc: BoundaryData | None = None) -> SemidiscreteSystem:
    """Generic entry point; `family` picks how 1:2 interfaces are handled."""
    if family not in ("interpolation", "projection"):
        raise ValueError(f"unknown interface family {family!r}")
    return _assemble(mesh, order, penalty, bc, family)


# -------------------------------------------------------------- evaluation


def block_view(system: SemidiscreteSystem, z: np.ndarray, k: int) -> np.ndarray:
    b = system.blocks[k]
    return z[b.slice].reshape(b.nx, b.ny)


def trace_values(so: SideOperators, U: np.ndarray) -> np.ndarray:
    return U[so.b, :] if so.axis == "x" else U[:, so.b]


def normal_derivative(so: SideOperators, U: np.ndarray) -> np.ndarray:
    if so.axis == "x":
        return so.s_vals @ U[so.s_cols, :]
    return U[:, so.s_cols] @ so.s_vals


def _lift(so: SideOperators, V: np.ndarray, vec: np.ndarray) -> None:
    """V += H_n^-1 e_b (x) vec."""
    if so.axis == "x":
        V[so.b, :] += so.hinv_n[so.b] * vec
    else:
        V[:, so.b] += so.hinv_n[so.b] * vec


def _lift_s(so: SideOperators, V: np.ndarray, vec: np.ndarray) -> None:
    """V += H_n^-1 S_n^T e_b (x) vec."""
    w = so.s_vals * so.hinv_n[so.s_cols]
    if so.axis == "x":
        V[so.s_cols, :] += np.outer(w, vec)
    else:
        V[:, so.s_cols] += np.outer(vec, w)


def apply_operator(system: SemidiscreteSystem, z: np.ndarray) -> np.ndarray:
    """Q z evaluated block by block without forming Q."""
    out = np.empty_like(z)
    U, V = [], []
    for b in system.blocks:
        u = z[b.slice].reshape(b.nx, b.ny)
        v = out[b.slice].reshape(b.nx, b.ny)
        v[...] = b.ops_x.D2 @ u
        v += (b.ops_y.D2 @ u.T).T
        U.append(u)
        V.append(v)
    blocks = system.blocks
    for c in system.couplings:
        sa = [blocks[k].side(s) for k, s in c.members_a]
        sb = [blocks[k].side(s) for k, s in c.members_b]
        ua = np.concatenate([trace_values(so, U[k]) for so, (k, _) in zip(sa, c.members_a)])
        ub = np.concatenate([trace_values(so, U[k]) for so, (k, _) in zip(sb, c.members_b)])
        da = np.concatenate([normal_derivative(so, U[k]) for so, (k, _) in zip(sa, c.members_a)])
        db = np.concatenate([normal_derivative(so, U[k]) for so, (k, _) in zip(sb, c.members_b)])
        for sides, members, offs, u_own, d_own, u_oth, d_oth, T in (
            (sa, c.members_a, c.offsets_a, ua, da, ub, db, c.T_ab),
            (sb, c.members_b, c.offsets_b, ub, db, ua, da, c.T_ba),
        ):
            w = T @ u_oth
            wd = T @ d_oth
            for so, (k, _), o in zip(sides, members, offs):
                r = slice(o, o + len(so.t))
                diff = u_own[r] - w[r]
                ddiff = d_own[r] - wd[r]
                _lift_s(so, V[k], 0.5 * so.sigma * diff)
                _lift(so, V[k], -c.tau * diff - 0.5 * so.sigma * ddiff)
    for d in system.dirichlet:
        so = blocks[d.block].side(d.side)
        ub = trace_values(so, U[d.block])
        _lift_s(so, V[d.block], so.sigma * ub)
        _lift(so, V[d.block], -d.sigma_d * ub)
    return out


def apply_rhs(system: SemidiscreteSystem, z: np.ndarray, t: float = 0.0, matrix_free: bool = True) -> np.ndarray:
    """Acceleration Q z + F(t)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (system.n,):
        raise SizeMismatch(f"state has shape {z.shape}, system size is {system.n}")
    Qz = apply_operator(system, z) if matrix_free else system.Q_mat @ z
    if system.boundary_data is None:
        return Qz
    return Qz + system.forcing(t)


def symmetry_residual(system: SemidiscreteSystem) -> float:
    """max|HQ - (HQ)^T| relative to max|HQ|."""
    HQ = sp.diags(system.H_global) @ system.Q_mat
    diff = HQ - HQ.T
    scale = abs(HQ).max()
    return float(abs(diff).max() / scale) if diff.nnz else 0.0


def time_step(system: SemidiscreteSystem, factor: float | None = None) -> float:
    """Default step: 0.1 h_min (0.025 h for order 8, 0.05 h for order 10)."""
    if factor is None:
        factor = {8: 0.025, 10: 0.05}.get(system.metadata["order"], 0.1)
    return factor * system.h_min()
