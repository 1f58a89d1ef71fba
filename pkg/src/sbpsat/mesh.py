"""Multi-block structured grids built by transfinite interpolation.

Blocks are bounded by four parametric curves (south/north run with xi,
west/east with eta).  Interfaces between block sides carry a kind tag:
``conforming`` (pointwise identical traces), ``ratio-1:2`` (the fine trace
contains the coarse one) or ``glue`` (only the segment endpoints are shared).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import CoverageGap, ParameterOutOfRange, SizeMismatch

SIDES = ("south", "north", "west", "east")
KINDS = ("conforming", "ratio-1:2", "glue")
CORNER_TOL = 1e-10
TRACE_TOL = 1e-12


# ----------------------------------------------------------------- curves


class BoundaryCurve:
    """Parametric map s in [0,1] -> (x, y); subclasses implement `_eval`."""

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        x, y = self._eval(s)
        return np.broadcast_to(x, s.shape).astype(float), np.broadcast_to(y, s.shape).astype(float)

    def _eval(self, s):
        raise NotImplementedError

    def rotated(self, quarter_turns: int) -> "BoundaryCurve":
        return RotatedCurve(self, quarter_turns)


@dataclass(frozen=True)
class LineSegment(BoundaryCurve):
    p0: tuple[float, float]
    p1: tuple[float, float]

    def _eval(self, s):
        return (self.p0[0] + s * (self.p1[0] - self.p0[0]), self.p0[1] + s * (self.p1[1] - self.p0[1]))


@dataclass(frozen=True)
class CircularArc(BoundaryCurve):
    """Arc parametrised uniformly in angle."""

    radius: float
    theta0: float
    theta1: float
    center: tuple[float, float] = (0.0, 0.0)

    def _eval(self, s):
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return (self.center[0] + self.radius * np.cos(th), self.center[1] + self.radius * np.sin(th))


@dataclass(frozen=True)
class ParametricCurve(BoundaryCurve):
    func: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

    def _eval(self, s):
        return self.func(s)


@dataclass(frozen=True)
class Polyline(BoundaryCurve):
    points: np.ndarray  # (m, 2), linearly interpolated at uniform parameter spacing

    def _eval(self, s):
        pts = np.asarray(self.points, dtype=float)
        t = np.linspace(0.0, 1.0, len(pts))
        return np.interp(s, t, pts[:, 0]), np.interp(s, t, pts[:, 1])


@dataclass(frozen=True)
class RotatedCurve(BoundaryCurve):
    """Curve composed with a rotation by quarter_turns * pi/2.

    The row-vector convention (x, y) R with R = [[c, -s], [s, c]] is used, so a
    positive quarter turn maps (x, y) to (y, -x).
    """

    base: BoundaryCurve
    quarter_turns: int

    def _eval(self, s):
        x, y = self.base(s)
        k = self.quarter_turns % 4
        for _ in range(k):
            x, y = y, -x
        return x, y


# ----------------------------------------------------------------- blocks


@dataclass(frozen=True)
class BlockSpec:
    south: BoundaryCurve
    north: BoundaryCurve
    west: BoundaryCurve
    east: BoundaryCurve
    n_xi: int
    n_eta: int

    def __post_init__(self):
        if self.n_xi < 2 or self.n_eta < 2:
            raise SizeMismatch("blocks need at least 2 points per direction")
        gap = corner_mismatch(self)
        if gap > CORNER_TOL:
            raise ValueError(f"block curves do not meet at the corners (gap {gap:.2e})")

    def corners(self) -> dict[str, np.ndarray]:
        return {
            "SW": np.array(self.south(0.0)),
            "SE": np.array(self.south(1.0)),
            "NW": np.array(self.north(0.0)),
            "NE": np.array(self.north(1.0)),
        }


def corner_mismatch(spec: BlockSpec) -> float:
    pairs = (
        (spec.south(0.0), spec.west(0.0)),
        (spec.south(1.0), spec.east(0.0)),
        (spec.north(0.0), spec.west(1.0)),
        (spec.north(1.0), spec.east(1.0)),
    )
    return max(math.hypot(float(a[0] - b[0]), float(a[1] - b[1])) for a, b in pairs)


def rectangle_spec(x0: float, x1: float, y0: float, y1: float, n_x: int, n_y: int) -> BlockSpec:
    return BlockSpec(
        south=LineSegment((x0, y0), (x1, y0)),
        north=LineSegment((x0, y1), (x1, y1)),
        west=LineSegment((x0, y0), (x0, y1)),
        east=LineSegment((x1, y0), (x1, y1)),
        n_xi=n_x,
        n_eta=n_y,
    )


def transfinite_map(spec: BlockSpec, xi, eta):
    """Transfinite interpolation of the four boundary curves."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any((xi < 0) | (xi > 1)) or np.any((eta < 0) | (eta > 1)):
        raise ParameterOutOfRange("xi and eta must lie in [0, 1]")
    xi, eta = np.broadcast_arrays(xi, eta)
    S = np.array(spec.south(xi))
    N = np.array(spec.north(xi))
    W = np.array(spec.west(eta))
    E = np.array(spec.east(eta))
    c = spec.corners()
    sw, se, nw, ne = (c[k].reshape(2, *([1] * xi.ndim)) for k in ("SW", "SE", "NW", "NE"))
    T = (
        (1 - eta) * S + eta * N + (1 - xi) * W + xi * E
        - xi * eta * ne - xi * (1 - eta) * se - eta * (1 - xi) * nw - (1 - xi) * (1 - eta) * sw
    )
    return T[0], T[1]


def rotate_block(spec: BlockSpec, quarter_turns: int) -> BlockSpec:
    return BlockSpec(
        south=spec.south.rotated(quarter_turns),
        north=spec.north.rotated(quarter_turns),
        west=spec.west.rotated(quarter_turns),
        east=spec.east.rotated(quarter_turns),
        n_xi=spec.n_xi,
        n_eta=spec.n_eta,
    )


@dataclass(frozen=True, eq=False)
class MeshBlock:
    name: str
    spec: BlockSpec
    X: np.ndarray  # shape (n_xi, n_eta)
    Y: np.ndarray

    @classmethod
    def generate(cls, name: str, spec: BlockSpec) -> "MeshBlock":
        xi = np.linspace(0.0, 1.0, spec.n_xi)
        eta = np.linspace(0.0, 1.0, spec.n_eta)
        XI, ETA = np.meshgrid(xi, eta, indexing="ij")
        X, Y = transfinite_map(spec, XI, ETA)
        return cls(name, spec, X, Y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    @property
    def n_points(self) -> int:
        return self.X.size

    def trace(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        sl = _side_slice(side)
        return self.X[sl], self.Y[sl]

    def cartesian_axes(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Coordinate vectors if the block is an axis-aligned tensor grid."""
        x = self.X[:, 0]
        y = self.Y[0, :]
        scale = max(np.ptp(self.X), np.ptp(self.Y), 1.0)
        if (np.abs(self.X - x[:, None]).max() > 1e-12 * scale
                or np.abs(self.Y - y[None, :]).max() > 1e-12 * scale):
            return None
        return x.copy(), y.copy()

    def min_jacobian(self) -> float:
        """Smallest signed Jacobian of the bilinear cell maps, sampled at the SW and NE cell corners."""
        P = np.stack([self.X, self.Y])
        a = P[:, 1:, :-1] - P[:, :-1, :-1]
        b = P[:, :-1, 1:] - P[:, :-1, :-1]
        c = P[:, 1:, 1:] - P[:, :-1, 1:]
        d = P[:, 1:, 1:] - P[:, 1:, :-1]
        j_sw = a[0] * b[1] - a[1] * b[0]
        j_ne = c[0] * d[1] - c[1] * d[0]
        return float(min(j_sw.min(), j_ne.min()))


def _side_slice(side: str):
    return {
        "south": (slice(None), 0),
        "north": (slice(None), -1),
        "west": (0, slice(None)),
        "east": (-1, slice(None)),
    }[side]


# --------------------------------------------------------------- topology


@dataclass(frozen=True)
class Interface:
    block_a: int
    side_a: str
    block_b: int
    side_b: str
    kind: str
    range_a: tuple[int, int]  # inclusive trace index range of the shared segment
    range_b: tuple[int, int]
    reversed: bool = False  # traces run in opposite directions

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown interface kind {self.kind!r}")
        if self.side_a not in SIDES or self.side_b not in SIDES:
            raise ValueError("unknown side name")


@dataclass(frozen=True)
class BoundarySegment:
    block: int
    side: str
    tag: str = "dirichlet"


@dataclass(frozen=True, eq=False)
class MultiBlockMesh:
    name: str
    blocks: tuple[MeshBlock, ...]
    interfaces: tuple[Interface, ...]
    boundary: tuple[BoundarySegment, ...]
    meta: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return sum(b.n_points for b in self.blocks)

    def side_length(self, block: int, side: str) -> int:
        nx, ny = self.blocks[block].shape
        return nx if side in ("south", "north") else ny

    def h_min(self) -> float:
        out = math.inf
        for b in self.blocks:
            dx = np.hypot(np.diff(b.X, axis=0), np.diff(b.Y, axis=0))
            dy = np.hypot(np.diff(b.X, axis=1), np.diff(b.Y, axis=1))
            out = min(out, dx.min(), dy.min())
        return float(out)


def _trace_points(mesh: MultiBlockMesh, block: int, side: str, rng: tuple[int, int]) -> np.ndarray:
    x, y = mesh.blocks[block].trace(side)
    pts = np.column_stack([x, y])
    return pts[rng[0]:rng[1] + 1]


def validate_mesh(mesh: MultiBlockMesh) -> None:
    """Check trace matching per interface kind and single coverage of every edge."""
    scale = max(max(np.ptp(b.X), np.ptp(b.Y)) for b in mesh.blocks)
    tol = TRACE_TOL * max(scale, 1.0)
    for itf in mesh.interfaces:
        a = _trace_points(mesh, itf.block_a, itf.side_a, itf.range_a)
        b = _trace_points(mesh, itf.block_b, itf.side_b, itf.range_b)
        if itf.reversed:
            b = b[::-1]
        if np.abs(a[0] - b[0]).max() > tol or np.abs(a[-1] - b[-1]).max() > tol:
            raise CoverageGap(f"interface {itf} endpoints do not match")
        if itf.kind == "conforming":
            if a.shape != b.shape or np.abs(a - b).max() > tol:
                raise CoverageGap(f"conforming interface {itf} traces differ")
        elif itf.kind == "ratio-1:2":
            coarse, fine = (a, b) if len(a) < len(b) else (b, a)
            if len(fine) != 2 * len(coarse) - 1 or np.abs(fine[::2] - coarse).max() > tol:
                raise CoverageGap(f"1:2 interface {itf} fine trace does not contain coarse trace")

    # every side covered exactly once, measured in trace index intervals
    cover: dict[tuple[int, str], list[tuple[int, int]]] = {}
    for itf in mesh.interfaces:
        cover.setdefault((itf.block_a, itf.side_a), []).append(itf.range_a)
        cover.setdefault((itf.block_b, itf.side_b), []).append(itf.range_b)
    for seg in mesh.boundary:
        n = mesh.side_length(seg.block, seg.side)
        cover.setdefault((seg.block, seg.side), []).append((0, n - 1))
    for k in range(len(mesh.blocks)):
        for side in SIDES:
            ranges = sorted(cover.get((k, side), []))
            n = mesh.side_length(k, side)
            if not ranges:
                raise CoverageGap(f"block {k} side {side} is neither interface nor boundary")
            pos = 0
            for lo, hi in ranges:
                if lo != pos:
                    raise CoverageGap(f"block {k} side {side}: coverage gap or overlap at index {pos}")
                pos = hi
            if pos != n - 1:
                raise CoverageGap(f"block {k} side {side}: covered up to {pos}, length {n}")


def _cartesian_mesh(name, rects, interfaces, boundary, meta=None) -> MultiBlockMesh:
    blocks = tuple(MeshBlock.generate(f"B{k + 1}", rectangle_spec(*r)) for k, r in enumerate(rects))
    mesh = MultiBlockMesh(name, blocks, tuple(interfaces), tuple(boundary), dict(meta or {}))
    validate_mesh(mesh)
    return mesh


def refine_count(n: int, r: int) -> int:
    """Point count after r halvings of the spacing."""
    return (n - 1) * 2**r + 1


def build_two_block_mesh(r: int = 0) -> MultiBlockMesh:
    """[-1,1]x[0,1] with a 1:2 interface at x=0."""
    if r < 0:
        raise ValueError("refinement level must be >= 0")
    nl, nr = refine_count(26, r), refine_count(51, r)
    rects = [(-1.0, 0.0, 0.0, 1.0, nl, nl), (0.0, 1.0, 0.0, 1.0, nr, nr)]
    itf = [Interface(0, "east", 1, "west", "ratio-1:2", (0, nl - 1), (0, nr - 1))]
    bnd = [BoundarySegment(0, s) for s in ("south", "north", "west")]
    bnd += [BoundarySegment(1, s) for s in ("south", "north", "east")]
    return _cartesian_mesh("two-block", rects, itf, bnd, {"refinement": r})


def build_conforming_two_block_mesh(n: int = 21) -> MultiBlockMesh:
    """Two equal blocks on [-1,1]x[0,1] meeting conformingly at x=0."""
    rects = [(-1.0, 0.0, 0.0, 1.0, n, n), (0.0, 1.0, 0.0, 1.0, n, n)]
    itf = [Interface(0, "east", 1, "west", "conforming", (0, n - 1), (0, n - 1))]
    bnd = [BoundarySegment(0, s) for s in ("south", "north", "west")]
    bnd += [BoundarySegment(1, s) for s in ("south", "north", "east")]
    return _cartesian_mesh("conforming-two-block", rects, itf, bnd)


def build_single_block_mesh(r: int = 0, n0: int = 26) -> MultiBlockMesh:
    """[-1,1]x[0,1] as one block with the coarse-block spacing in x and y."""
    ny = refine_count(n0, r)
    nx = refine_count(2 * n0 - 1, r)
    rects = [(-1.0, 1.0, 0.0, 1.0, nx, ny)]
    bnd = [BoundarySegment(0, s) for s in SIDES]
    return _cartesian_mesh("single-block", rects, [], bnd, {"refinement": r})


def build_tjunction_mesh(r: int = 0) -> MultiBlockMesh:
    """[-1,1]^2 with a left block facing two stacked right blocks."""
    if r < 0:
        raise ValueError("refinement level must be >= 0")
    n1x, n1y = refine_count(28, r), refine_count(51, r)
    n2x, n2y = refine_count(27, r), refine_count(25, r)
    n3x, n3y = refine_count(51, r), refine_count(50, r)
    rects = [
        (-1.0, 0.0, -1.0, 1.0, n1x, n1y),
        (0.0, 1.0, 0.0, 1.0, n2x, n2y),
        (0.0, 1.0, -1.0, 0.0, n3x, n3y),
    ]
    mid = (n1y - 1) // 2  # index of y=0 on the left trace
    itf = [
        Interface(0, "east", 2, "west", "glue", (0, mid), (0, n3y - 1)),
        Interface(0, "east", 1, "west", "glue", (mid, n1y - 1), (0, n2y - 1)),
        Interface(2, "north", 1, "south", "glue", (0, n3x - 1), (0, n2x - 1)),
    ]
    bnd = [BoundarySegment(0, s) for s in ("south", "north", "west")]
    bnd += [BoundarySegment(1, s) for s in ("north", "east")]
    bnd += [BoundarySegment(2, s) for s in ("south", "east")]
    return _cartesian_mesh("t-junction", rects, itf, bnd, {"refinement": r})


# ------------------------------------------------------ curved decompositions


def ring_block_spec(a: float, D: float, n_xi: int, n_eta: int) -> BlockSpec:
    """Top block between the circle of radius a and the square of half-side D."""
    r2 = math.sqrt(2.0)
    c = a / r2

    def arc(s):
        x = s * r2 - 1.0 / r2
        return a * x, a * np.sqrt(np.clip(1.0 - x * x, 0.0, None))

    return BlockSpec(
        south=ParametricCurve(arc),
        north=LineSegment((-D, D), (D, D)),
        west=LineSegment((-c, c), (-D, D)),
        east=LineSegment((c, c), (D, D)),
        n_xi=n_xi,
        n_eta=n_eta,
    )


def inner_square_spec(a: float, d: float, n: int) -> BlockSpec:
    return rectangle_spec(-a * d, a * d, -a * d, a * d, n, n)


def inner_ring_spec(a: float, d: float, n_xi: int, n_eta: int) -> BlockSpec:
    """Top block between the inner square of half-side a*d and the circle."""
    r2 = math.sqrt(2.0)

    def arc(s):
        x = s * r2 - 1.0 / r2
        return a * x, a * np.sqrt(np.clip(1.0 - x * x, 0.0, None))

    return BlockSpec(
        south=LineSegment((-a * d, a * d), (a * d, a * d)),
        north=ParametricCurve(arc),
        west=LineSegment((-a * d, a * d), (-a * r2 / 2, a * r2 / 2)),
        east=LineSegment((a * d, a * d), (a * r2 / 2, a * r2 / 2)),
        n_xi=n_xi,
        n_eta=n_eta,
    )


def _ring(prefix: str, spec: BlockSpec, first: int) -> tuple[list[MeshBlock], list[Interface]]:
    """Four rotated copies (top, right, bottom, left) joined corner to corner."""
    blocks = [MeshBlock.generate(f"{prefix}{k + 1}", rotate_block(spec, k)) for k in range(4)]
    n = spec.n_eta
    itfs = [
        Interface(first + k, "east", first + (k + 1) % 4, "west", "conforming", (0, n - 1), (0, n - 1))
        for k in range(4)
    ]
    return blocks, itfs


def _finish(name, blocks, itfs, bnd, meta) -> MultiBlockMesh:
    mesh = MultiBlockMesh(name, tuple(blocks), tuple(itfs), tuple(bnd), meta)
    validate_mesh(mesh)
    return mesh


def _arc_interfaces(outer_first: int, inner_first: int, n_outer: int, n_inner: int) -> list[Interface]:
    """Circle interfaces between outer ring block k (south) and inner ring block k (north)."""
    kind = "conforming" if n_outer == n_inner else "ratio-1:2"
    return [
        Interface(outer_first + k, "south", inner_first + k, "north", kind, (0, n_outer - 1), (0, n_inner - 1))
        for k in range(4)
    ]


# Point counts per block.  For the cavity only the totals are published; the
# per-edge counts below use h ~ 0.13 (about 20 points per wavelength 2.5)
# and reproduce those totals exactly.
CAVITY_COUNTS = {
    "N": {"ring": (181, 125), "left": (107, 181)},
    "T": {"ring": (23, 20), "corner": 81, "left": (107, 181)},
}
INCLUSION_COUNTS = {
    True: {"B0": (51, 101), "outer": (101, 26), "inner": (101, 51), "core": (101, 101)},
    False: {"B0": (51, 51), "outer": (51, 26), "inner": (101, 51), "core": (101, 101)},
}


def build_cavity_mesh(style: str = "T", a: float = 1.0) -> MultiBlockMesh:
    """Circular cavity in [-25.5,11.7]x[-11.7,11.7] (N- or T-partitioning)."""
    style = style.upper()[0]
    if style not in ("N", "T"):
        raise ValueError("style must be 'N-partitioning' or 'T-partitioning'")
    D, x_left = 11.7, -25.5
    cnt = CAVITY_COUNTS[style]
    if style == "N":
        ring, itfs = _ring("B1_", ring_block_spec(a, D, *cnt["ring"]), 0)
        nl = cnt["left"]
        left = MeshBlock.generate("B0", rectangle_spec(x_left, -D, -D, D, *nl))
        blocks = ring + [left]
        # the left ring block (index 3) has its north edge on x=-D
        itfs.append(Interface(4, "east", 3, "north", "conforming", (0, nl[1] - 1), (0, nl[1] - 1)))
        bnd = [BoundarySegment(k, "south", "cavity") for k in range(4)]
        bnd += [BoundarySegment(k, "north") for k in range(3)]
        bnd += [BoundarySegment(4, s) for s in ("south", "north", "west")]
        return _finish("cavity-N", blocks, itfs, bnd, {"style": "N", "a": a, "D": D})

    d = 1.3
    nxi, neta = cnt["ring"]
    ring, itfs = _ring("B1_", ring_block_spec(a, d, nxi, neta), 0)
    m = cnt["corner"]
    b = nxi
    # 3x3 arrangement around [-d,d]^2; the centre is replaced by the ring
    xs = [(-D, -d, m), (-d, d, b), (d, D, m)]
    rects, where = [], {}
    for iy, (y0, y1, ny) in enumerate(xs):
        for ix, (x0, x1, nx) in enumerate(xs):
            if ix == 1 and iy == 1:
                continue
            where[(ix, iy)] = 4 + len(rects)
            rects.append(rectangle_spec(x0, x1, y0, y1, nx, ny))
    outer = [MeshBlock.generate(f"C{k + 1}", s) for k, s in enumerate(rects)]
    nl = cnt["left"]
    left = MeshBlock.generate("B0", rectangle_spec(x_left, -D, -D, D, *nl))
    blocks = ring + outer + [left]
    li = len(blocks) - 1

    def n_of(ix):
        return xs[ix][2]

    for (ix, iy), k in where.items():
        if (ix + 1, iy) in where:
            n = n_of(iy)
            itfs.append(Interface(k, "east", where[(ix + 1, iy)], "west", "conforming", (0, n - 1), (0, n - 1)))
        if (ix, iy + 1) in where:
            n = n_of(ix)
            itfs.append(Interface(k, "north", where[(ix, iy + 1)], "south", "conforming", (0, n - 1), (0, n - 1)))
    # ring north edges against the Cartesian blocks around the centre
    faces = {0: ((1, 2), "south", False), 1: ((2, 1), "west", True), 2: ((1, 0), "north", True),
             3: ((0, 1), "east", False)}
    for k, (cell, side, rev) in faces.items():
        itfs.append(Interface(k, "north", where[cell], side, "conforming", (0, b - 1), (0, b - 1), reversed=rev))
    # T-junction: the left rectangle faces three stacked blocks at x=-D
    scale = (nl[1] - 1) / (2 * D)
    for iy in range(3):
        lo = int(round((xs[iy][0] + D) * scale))
        hi = int(round((xs[iy][1] + D) * scale))
        itfs.append(Interface(li, "east", where[(0, iy)], "west", "glue", (lo, hi), (0, xs[iy][2] - 1)))
    bnd = [BoundarySegment(k, "south", "cavity") for k in range(4)]
    for (ix, iy), k in where.items():
        if iy == 0:
            bnd.append(BoundarySegment(k, "south"))
        if iy == 2:
            bnd.append(BoundarySegment(k, "north"))
        if ix == 2:
            bnd.append(BoundarySegment(k, "east"))
    bnd += [BoundarySegment(li, s) for s in ("south", "north", "west")]
    return _finish("cavity-T", blocks, itfs, bnd, {"style": "T", "a": a, "D": D})


def build_inclusion_mesh(conforming: bool = True, a: float = 1.0) -> MultiBlockMesh:
    """Circular inclusion: core square, inner ring, outer ring and a left block."""
    D = 1.3
    d = 0.35 * math.sqrt(2.0)
    cnt = INCLUSION_COUNTS[bool(conforming)]
    outer, itfs = _ring("B1_", ring_block_spec(a, D, *cnt["outer"]), 0)
    inner, inner_itfs = _ring("B2_", inner_ring_spec(a, d, *cnt["inner"]), 4)
    core = MeshBlock.generate("B2_5", inner_square_spec(a, d, cnt["core"][0]))
    left = MeshBlock.generate("B0", rectangle_spec(-5.9, -D, -D, D, *cnt["B0"]))
    blocks = outer + inner + [core, left]
    itfs += inner_itfs
    itfs += _arc_interfaces(0, 4, cnt["outer"][0], cnt["inner"][0])
    n = cnt["core"][0]
    core_sides = {4: ("north", False), 5: ("east", True), 6: ("south", True), 7: ("west", False)}
    for k, (side, rev) in core_sides.items():
        itfs.append(Interface(k, "south", 8, side, "conforming", (0, n - 1), (0, n - 1), reversed=rev))
    nb = cnt["B0"][1]
    itfs.append(Interface(9, "east", 3, "north", "conforming", (0, nb - 1), (0, nb - 1)))
    bnd = [BoundarySegment(k, "north") for k in range(3)]
    bnd += [BoundarySegment(9, s) for s in ("south", "north", "west")]
    return _finish("inclusion" + ("" if conforming else "-nonconforming"), blocks, itfs, bnd,
                   {"conforming": bool(conforming), "a": a, "D": D, "d": d})


# ---------------------------------------------------------------- export


def export_mesh(mesh: MultiBlockMesh, out_dir, write=None) -> list[Path]:
    """One CSV per block (block_id,i,j,x,y) plus a JSON topology file."""
    from .io import atomic_write_text

    write = write or atomic_write_text
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, blk in enumerate(mesh.blocks):
        nx, ny = blk.shape
        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        rows = ["block_id,i,j,x,y"]
        rows += [f"{k},{i},{j},{x!r},{y!r}" for i, j, x, y in
                 zip(I.ravel(), J.ravel(), blk.X.ravel().tolist(), blk.Y.ravel().tolist())]
        p = out / f"{mesh.name}_block{k}.csv"
        write(p, "\n".join(rows) + "\n")
        paths.append(p)
    topo = {
        "name": mesh.name,
        "total_points": mesh.n_points,
        "blocks": [{"id": k, "name": b.name, "n_xi": b.shape[0], "n_eta": b.shape[1]}
                   for k, b in enumerate(mesh.blocks)],
        "interfaces": [
            {"block_a": i.block_a, "side_a": i.side_a, "block_b": i.block_b, "side_b": i.side_b,
             "kind": i.kind, "range_a": list(i.range_a), "range_b": list(i.range_b), "reversed": i.reversed}
            for i in mesh.interfaces
        ],
        "boundary": [{"block": s.block, "side": s.side, "tag": s.tag} for s in mesh.boundary],
    }
    p = out / f"{mesh.name}_topology.json"
    write(p, json.dumps(topo, indent=2) + "\n")
    paths.append(p)
    return paths


def arc_radii(mesh: MultiBlockMesh, tag_sides: Sequence[tuple[int, str]]) -> np.ndarray:
    r = [np.hypot(*mesh.blocks[k].trace(s)) for k, s in tag_sides]
    return np.concatenate(r)
