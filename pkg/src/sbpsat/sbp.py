"""Diagonal-norm summation-by-parts operators on equidistant 1D grids.

An operator set bundles the norm H, the first derivative D1 = H^-1 Q, the
second derivative D2 = H^-1 (-M + B S) and the boundary derivative rows S.
Orders 2 and 4 are embedded; orders 6-10 are read from plain-text coefficient
files and validated before use.
"""
from __future__ import annotations

import functools
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    CoefficientValidationFailed,
    GridTooSmall,
    LengthMismatch,
    MissingCoefficients,
    ParseError,
    UnsupportedOrder,
)

SUPPORTED_ORDERS = (2, 4, 6, 8, 10)
EMBEDDED_ORDERS = (2, 4)

# borrowing constants for the second-derivative operators
ALPHA = {
    2: 0.4,
    4: 0.2508560249,
    6: 0.1878715026,
    8: 0.0015782259,
    10: 0.0351202265,
}

COEFF_DIR_ENV = "SBPSAT_COEFF_DIR"


@dataclass(frozen=True)
class GridLine1D:
    n: int
    h: float
    x0: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise GridTooSmall(f"need at least 2 points, got {self.n}")
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")

    @classmethod
    def on_interval(cls, a: float, b: float, n: int) -> "GridLine1D":
        return cls(n, (b - a) / (n - 1), a)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.h * (self.n - 1)


@dataclass(frozen=True)
class SbpCoefficients:
    """Unit-spacing stencils of one operator family.

    Closure rows describe the left boundary; the right boundary is the mirror
    image (with a sign flip for first-derivative type rows).
    """

    order: int
    alpha: float
    h_closure: np.ndarray
    d1_closure: np.ndarray
    d1_interior: np.ndarray
    d2_closure: np.ndarray
    d2_interior: np.ndarray
    s_row: np.ndarray

    @property
    def closure_rows(self) -> int:
        return len(self.h_closure)

    @property
    def min_points(self) -> int:
        width = max(len(self.d1_interior), len(self.d2_interior))
        closure_width = max(self.d1_closure.shape[1], self.d2_closure.shape[1], len(self.s_row))
        return max(2 * self.closure_rows + width, closure_width + 1)


def _embedded(order: int) -> SbpCoefficients:
    if order == 2:
        return SbpCoefficients(
            order=2,
            alpha=ALPHA[2],
            h_closure=np.array([0.5]),
            d1_closure=np.array([[-1.0, 1.0]]),
            d1_interior=np.array([-0.5, 0.0, 0.5]),
            d2_closure=np.array([[1.0, -2.0, 1.0]]),
            d2_interior=np.array([1.0, -2.0, 1.0]),
            s_row=np.array([-1.5, 2.0, -0.5]),
        )
    if order == 4:
        return SbpCoefficients(
            order=4,
            alpha=ALPHA[4],
            h_closure=np.array([17 / 48, 59 / 48, 43 / 48, 49 / 48]),
            d1_closure=np.array([
                [-24 / 17, 59 / 34, -4 / 17, -3 / 34, 0, 0],
                [-1 / 2, 0, 1 / 2, 0, 0, 0],
                [4 / 43, -59 / 86, 0, 59 / 86, -4 / 43, 0],
                [3 / 98, 0, -59 / 98, 0, 32 / 49, -4 / 49],
            ]),
            d1_interior=np.array([1 / 12, -2 / 3, 0, 2 / 3, -1 / 12]),
            d2_closure=np.array([
                [2, -5, 4, -1, 0, 0],
                [1, -2, 1, 0, 0, 0],
                [-4 / 43, 59 / 43, -110 / 43, 59 / 43, -4 / 43, 0],
                [-1 / 49, 0, 59 / 49, -118 / 49, 64 / 49, -4 / 49],
            ]),
            d2_interior=np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
            s_row=np.array([-11 / 6, 3, -3 / 2, 1 / 3]),
        )
    raise UnsupportedOrder(f"order {order} has no embedded coefficients")


# ---------------------------------------------------------------- file format

_BLOCKS = ("H", "D1", "D1_INTERIOR", "D2", "D2_INTERIOR", "S")


def _fmt_row(row) -> str:
    return " ".join(repr(float(v)) for v in row)


def write_coefficients(coeffs: SbpCoefficients, path) -> None:
    lines = [f"sbp order={coeffs.order} closure_rows={coeffs.closure_rows} alpha={coeffs.alpha!r}"]
    blocks = {
        "H": [coeffs.h_closure],
        "D1": coeffs.d1_closure,
        "D1_INTERIOR": [coeffs.d1_interior],
        "D2": coeffs.d2_closure,
        "D2_INTERIOR": [coeffs.d2_interior],
        "S": [coeffs.s_row],
    }
    for name in _BLOCKS:
        lines.append(name)
        lines.extend(_fmt_row(r) for r in blocks[name])
    Path(path).write_text("\n".join(lines) + "\n")


def parse_header(line: str, keyword: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != keyword:
        raise ParseError(f"expected header starting with '{keyword}', got {line!r}")
    out = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ParseError(f"malformed header token {tok!r}")
        key, val = tok.split("=", 1)
        out[key] = val
    return out


def parse_blocks(lines: list[str], names) -> dict[str, np.ndarray]:
    """Split labeled dense blocks; each label sits on its own line."""
    blocks: dict[str, list[list[float]]] = {}
    current = None
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in names:
            current = line
            blocks[current] = []
            continue
        if current is None:
            raise ParseError(f"data before first block label: {line!r}")
        try:
            blocks[current].append([float(v) for v in line.split()])
        except ValueError as exc:
            raise ParseError(f"bad number in block {current}: {exc}") from None
    missing = [n for n in names if n not in blocks]
    if missing:
        raise ParseError(f"missing blocks: {', '.join(missing)}")
    out = {}
    for name, rows in blocks.items():
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ParseError(f"block {name} has ragged rows")
        out[name] = np.array(rows, dtype=float)
    return out


def read_coefficients(path) -> SbpCoefficients:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ParseError(f"{path}: empty file")
    head = parse_header(text[0], "sbp")
    try:
        order = int(head["order"])
        rows = int(head["closure_rows"])
        alpha = float(head["alpha"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: bad header ({exc})") from None
    b = parse_blocks(text[1:], _BLOCKS)
    coeffs = SbpCoefficients(
        order=order,
        alpha=alpha,
        h_closure=b["H"].ravel(),
        d1_closure=b["D1"],
        d1_interior=b["D1_INTERIOR"].ravel(),
        d2_closure=b["D2"],
        d2_interior=b["D2_INTERIOR"].ravel(),
        s_row=b["S"].ravel(),
    )
    if coeffs.closure_rows != rows or coeffs.d1_closure.shape[0] != rows or coeffs.d2_closure.shape[0] != rows:
        raise ParseError(f"{path}: closure_rows={rows} disagrees with block sizes")
    return coeffs


def coefficient_dir() -> Path:
    env = os.environ.get(COEFF_DIR_ENV)
    if env:
        return Path(env)
    return Path(__file__).parent / "data"


def coefficient_path(order: int) -> Path:
    return coefficient_dir() / f"sbp_order{order}.txt"


@functools.lru_cache(maxsize=None)
def _load_validated(path: str) -> SbpCoefficients:
    coeffs = read_coefficients(path)
    validate_coefficients(coeffs)
    return coeffs


def get_coefficients(order: int) -> SbpCoefficients:
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"order {order} not in {SUPPORTED_ORDERS}")
    if order in EMBEDDED_ORDERS:
        return _embedded(order)
    path = coefficient_path(order)
    if not path.is_file():
        raise MissingCoefficients(f"no coefficient file for order {order} at {path}")
    coeffs = _load_validated(str(path.resolve()))
    if coeffs.order != order:
        raise ParseError(f"{path}: declares order {coeffs.order}, expected {order}")
    return coeffs


# ------------------------------------------------------------------ operators


@dataclass(frozen=True, eq=False)
class SbpOperatorSet:
    order: int
    grid: GridLine1D
    alpha: float
    closure_rows: int
    H: np.ndarray  # diagonal entries
    D1: sp.csr_matrix
    Q: sp.csr_matrix
    D2: sp.csr_matrix
    M: sp.csr_matrix
    S: sp.csr_matrix
    B: sp.csr_matrix
    Hinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "Hinv", 1.0 / self.H)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def s_first(self) -> np.ndarray:
        """Boundary derivative row at the left end, dense."""
        return self.S[0].toarray().ravel()

    @property
    def s_last(self) -> np.ndarray:
        return self.S[-1].toarray().ravel()


def _stamp(n, closure, interior, mirror_sign):
    closure = np.asarray(closure, dtype=float)
    interior = np.asarray(interior, dtype=float)
    r = closure.shape[0]
    m = len(interior) // 2
    rows, cols, vals = [], [], []
    inner = np.arange(r, n - r)
    for k, c in enumerate(interior):
        if c != 0.0:
            rows.append(inner)
            cols.append(inner + k - m)
            vals.append(np.full(inner.size, c))
    ci, cj = np.nonzero(closure)
    cv = closure[ci, cj]
    rows += [ci, n - 1 - ci]
    cols += [cj, n - 1 - cj]
    vals += [cv, mirror_sign * cv]
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _from_coefficients(coeffs: SbpCoefficients, grid: GridLine1D) -> SbpOperatorSet:
    n, h = grid.n, grid.h
    if n < coeffs.min_points:
        raise GridTooSmall(f"order {coeffs.order} needs n >= {coeffs.min_points}, got {n}")
    r = coeffs.closure_rows
    w = np.ones(n)
    w[:r] = coeffs.h_closure
    w[n - r:] = coeffs.h_closure[::-1]
    H = h * w
    D1 = _stamp(n, coeffs.d1_closure, coeffs.d1_interior, -1.0) / h
    D2 = _stamp(n, coeffs.d2_closure, coeffs.d2_interior, 1.0) / h**2
    s = coeffs.s_row
    k = len(s)
    S = sp.lil_matrix(sp.identity(n))
    S[0, :] = 0.0
    S[n - 1, :] = 0.0
    S[0, :k] = s
    S[n - 1, n - k:] = -s[::-1]
    S = sp.csr_matrix(S) / h
    B = sp.csr_matrix(([-1.0, 1.0], ([0, n - 1], [0, n - 1])), shape=(n, n))
    Hd = sp.diags(H)
    Q = sp.csr_matrix(Hd @ D1)
    M = sp.csr_matrix(B @ S - Hd @ D2)
    return SbpOperatorSet(
        order=coeffs.order,
        grid=grid,
        alpha=coeffs.alpha,
        closure_rows=r,
        H=H,
        D1=D1,
        Q=Q,
        D2=D2,
        M=M,
        S=S,
        B=B,
    )


@functools.lru_cache(maxsize=256)
def _cached_build(order: int, n: int, h: float, x0: float) -> SbpOperatorSet:
    return _from_coefficients(get_coefficients(order), GridLine1D(n, h, x0))


def build_sbp(order: int, grid: GridLine1D, coefficients: SbpCoefficients | None = None) -> SbpOperatorSet:
    """Build the operator set of the given order on `grid`.

    Passing `coefficients` bypasses the embedded/file lookup; such sets are
    validated like loaded data.
    """
    if coefficients is not None:
        validate_coefficients(coefficients)
        return _from_coefficients(coefficients, grid)
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"order {order} not in {SUPPORTED_ORDERS}")
    return _cached_build(order, grid.n, float(grid.h), float(grid.x0))


# --------------------------------------------------------------- verification


@dataclass
class SbpIdentityReport:
    order: int
    q_residual: float
    m_symmetry: float
    exactness: dict[tuple[str, str, int], float]

    @property
    def max_exactness(self) -> float:
        return max(self.exactness.values(), default=0.0)

    def ok(self, tol: float = 1e-12, exact_tol: float = 1e-9) -> bool:
        return self.q_residual <= tol and self.m_symmetry <= tol and self.max_exactness <= exact_tol


def exactness_degrees(order: int) -> dict[tuple[str, str], int]:
    p = order // 2
    return {
        ("D1", "interior"): 2 * p,
        ("D1", "boundary"): p,
        ("D2", "interior"): 2 * p + 1,
        ("D2", "boundary"): p + 1,
        ("S", "boundary"): p + 1,
    }


def verify_sbp_identities(ops: SbpOperatorSet) -> SbpIdentityReport:
    """Residuals of the SBP identities and monomial exactness.

    Monomials are taken in the scaled variable t = (x - x0)/L so the
    residuals are free of the absolute position of the grid.
    """
    Q = ops.Q.toarray()
    B = ops.B.toarray()
    M = ops.M.toarray()
    q_res = float(np.abs(Q + Q.T - B).max())
    m_sym = float(np.abs(M - M.T).max() * ops.h)

    n, r = ops.n, ops.closure_rows
    L = ops.grid.length
    t = (ops.grid.x - ops.grid.x0) / L
    interior = np.arange(r, n - r)
    boundary = np.r_[np.arange(r), np.arange(n - r, n)]
    ends = np.array([0, n - 1])
    regions = {"interior": interior, "boundary": boundary}

    exact: dict[tuple[str, str, int], float] = {}
    for (name, region), top in exactness_degrees(ops.order).items():
        for d in range(top + 1):
            f = t**d
            if name == "D1":
                approx = ops.D1 @ f
                ref = d * t ** max(d - 1, 0) / L if d else np.zeros(n)
                rows = regions[region]
            elif name == "D2":
                approx = ops.D2 @ f
                ref = d * (d - 1) * t ** max(d - 2, 0) / L**2 if d > 1 else np.zeros(n)
                rows = regions[region]
            else:
                approx = ops.S @ f
                ref = d * t ** max(d - 1, 0) / L if d else np.zeros(n)
                rows = ends
            exact[(name, region, d)] = float(np.abs(approx - ref)[rows].max())
    return SbpIdentityReport(ops.order, q_res, m_sym, exact)


def borrowing_remainder(ops: SbpOperatorSet, alpha: float | None = None) -> np.ndarray:
    a = ops.alpha if alpha is None else alpha
    BS = (ops.B @ ops.S).toarray()
    return ops.M.toarray() - ops.h * a * (BS.T @ BS)


def verify_borrowing(ops: SbpOperatorSet, alpha: float | None = None) -> float:
    """Smallest eigenvalue of M - h*alpha*(BS)^T(BS)."""
    R = borrowing_remainder(ops, alpha)
    return float(np.linalg.eigvalsh(0.5 * (R + R.T))[0])


def quadrature(ops: SbpOperatorSet, samples) -> float:
    f = np.asarray(samples, dtype=float)
    if f.shape != (ops.n,):
        raise LengthMismatch(f"expected {ops.n} samples, got shape {f.shape}")
    return float(ops.H @ f)


def validate_coefficients(coeffs: SbpCoefficients, tol: float = 1e-12, exact_tol: float = 1e-9,
                          psd_tol: float = 1e-10) -> None:
    """Reject coefficient data that breaks an SBP invariant."""
    if coeffs.order not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"order {coeffs.order} not in {SUPPORTED_ORDERS}")
    if np.any(coeffs.h_closure <= 0):
        raise CoefficientValidationFailed("H positive", float(coeffs.h_closure.min()))
    n = max(coeffs.min_points, 4 * coeffs.closure_rows + 8)
    ops = _from_coefficients(coeffs, GridLine1D(n, 1.0 / (n - 1)))
    rep = verify_sbp_identities(ops)
    if rep.q_residual > tol:
        raise CoefficientValidationFailed("Q + Q^T = B", rep.q_residual)
    if rep.m_symmetry > tol:
        raise CoefficientValidationFailed("M symmetric", rep.m_symmetry)
    worst = max(rep.exactness, key=rep.exactness.get)
    if rep.exactness[worst] > exact_tol:
        name, region, d = worst
        raise CoefficientValidationFailed(f"{name} {region} exact to degree {d}", rep.exactness[worst])
    lam = verify_borrowing(ops)
    if lam < -psd_tol:
        raise CoefficientValidationFailed("borrowing remainder PSD", -lam)


def perturbed(coeffs: SbpCoefficients, **changes) -> SbpCoefficients:
    return replace(coeffs, **changes)
