"""Command-line harness: ``sbpsat <command> --config FILE [--out DIR]``.

Experiments are described by INI files with a single ``[experiment]``
section, for example::

    [experiment]
    orders = 2, 4
    family = projection
    mesh = two-block
    levels = 0, 1, 2
    t_final = 2.0

The config is copied next to the outputs so every result can be rerun.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, discretization, interface, mesh, sbp
from .errors import ConfigError, MissingCoefficients, SbpSatError
from .io import atomic_write_text, write_csv
from .timestepping import ManufacturedSolution, initial_data, simulate

log = logging.getLogger("sbpsat")

FAMILIES = ("interpolation", "projection")
MESH_KINDS = ("two-block", "t-junction", "single-block", "cavity", "cavity-n", "inclusion", "inclusion-nc")
SOLVABLE = ("two-block", "t-junction", "single-block")


@dataclass
class ExperimentConfig:
    orders: list[int] = field(default_factory=lambda: [2, 4])
    families: list[str] = field(default_factory=lambda: ["projection"])
    mesh: str = "two-block"
    levels: list[int] = field(default_factory=lambda: [0, 1, 2])
    safety: float = 1.2
    dirichlet_safety: float = 2.0
    dt_factor: float | None = None
    t_final: float = 2.0
    out: str = "results"
    coeff_dir: str | None = None
    interface_dir: str | None = None
    points: int = 41
    observe_every: int = 10

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        if not parser.read(path):
            raise ConfigError("config", f"cannot read {path}")
        if "experiment" not in parser:
            raise ConfigError("config", "missing [experiment] section")
        sec = parser["experiment"]
        cfg = cls()
        known = set(asdict(cfg)) | {"family"}
        for key in sec:
            if key not in known:
                raise ConfigError(key, "unknown field")
        try:
            if "orders" in sec:
                cfg.orders = _int_list(sec["orders"])
            if "family" in sec or "families" in sec:
                cfg.families = [s.strip() for s in sec.get("families", sec.get("family")).split(",") if s.strip()]
            cfg.mesh = sec.get("mesh", cfg.mesh).strip()
            if "levels" in sec:
                cfg.levels = _int_list(sec["levels"])
            cfg.safety = sec.getfloat("safety", cfg.safety)
            cfg.dirichlet_safety = sec.getfloat("dirichlet_safety", cfg.dirichlet_safety)
            if sec.get("dt_factor", "").strip():
                cfg.dt_factor = sec.getfloat("dt_factor")
            cfg.t_final = sec.getfloat("t_final", cfg.t_final)
            cfg.out = sec.get("out", cfg.out)
            cfg.coeff_dir = sec.get("coeff_dir", cfg.coeff_dir)
            cfg.interface_dir = sec.get("interface_dir", cfg.interface_dir)
            cfg.points = sec.getint("points", cfg.points)
            cfg.observe_every = sec.getint("observe_every", cfg.observe_every)
        except ValueError as exc:
            raise ConfigError("config", str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.orders:
            raise ConfigError("orders", "at least one order is required")
        for p in self.orders:
            if p not in (2, 4, 6, 8, 10):
                raise ConfigError("orders", f"unsupported order {p}")
        for f in self.families:
            if f not in FAMILIES:
                raise ConfigError("family", f"must be one of {FAMILIES}, got {f!r}")
        if self.mesh not in MESH_KINDS:
            raise ConfigError("mesh", f"must be one of {MESH_KINDS}, got {self.mesh!r}")
        if not self.levels or min(self.levels) < 0:
            raise ConfigError("levels", "refinement levels must be non-negative")
        if not self.safety > 0:
            raise ConfigError("safety", "must be positive")
        if not self.dirichlet_safety > 0:
            raise ConfigError("dirichlet_safety", "must be positive")
        if self.dt_factor is not None and not self.dt_factor > 0:
            raise ConfigError("dt_factor", "must be positive")
        if not self.t_final > 0:
            raise ConfigError("t_final", "must be positive")
        if self.points < 3:
            raise ConfigError("points", "must be at least 3")
        if self.observe_every < 1:
            raise ConfigError("observe_every", "must be at least 1")


def _int_list(text: str) -> list[int]:
    return [int(s) for s in text.replace(" ", "").split(",") if s]


def _penalty(cfg: ExperimentConfig) -> discretization.PenaltyConfig:
    return discretization.PenaltyConfig(safety=cfg.safety, dirichlet_safety=cfg.dirichlet_safety)


def _mesh_builder(kind: str):
    return {
        "two-block": mesh.build_two_block_mesh,
        "t-junction": mesh.build_tjunction_mesh,
        "single-block": mesh.build_single_block_mesh,
    }[kind]


def _loaded_pair(cfg: ExperimentConfig, order: int, family: str):
    if not cfg.interface_dir:
        return None
    path = Path(cfg.interface_dir) / f"iface_{family}_order{order}.txt"
    if not path.exists():
        return None
    return interface.load_interface_operators(path, check_exactness=False)


def _r0_pair(cfg: ExperimentConfig, order: int, family: str):
    """Interface pair on the r=0 two-block mesh (26 coarse, 51 fine points)."""
    loaded = _loaded_pair(cfg, order, family)
    if loaded is not None:
        return loaded
    if family == "interpolation":
        return interface.build_interpolation_pair(order, 26, 1.0 / 25)
    y_c, y_f = np.linspace(0.0, 1.0, 26), np.linspace(0.0, 1.0, 51)
    return interface.compose_interface(interface.build_projection_set(order, y_c, y_f))


# ----------------------------------------------------------------- commands


def cmd_verify_ops(cfg: ExperimentConfig, out: Path) -> int:
    rows, ok = [], True
    for order in cfg.orders:
        try:
            coeffs = sbp.get_coefficients(order)
        except MissingCoefficients as exc:
            log.warning("order %d skipped: %s", order, exc)
            rows.append([order, "nan", "nan", "nan", "missing"])
            ok = False
            continue
        n = max(cfg.points, coeffs.min_points + 1)
        ops = sbp.build_sbp(order, sbp.GridLine1D.on_interval(0.0, 1.0, n))
        rep = sbp.verify_sbp_identities(ops)
        lam = sbp.verify_borrowing(ops)
        passed = rep.q_residual <= 1e-12 and lam >= -1e-10
        ok &= passed
        rows.append([order, f"{rep.q_residual:.3e}", f"{rep.m_symmetry:.3e}", f"{lam:.3e}", "pass" if passed else "fail"])
        print(f"order {order}: Q+Q^T-B {rep.q_residual:.2e}, borrowing min eig {lam:.2e} -> {'pass' if passed else 'FAIL'}")
    write_csv(out / "verify_ops.csv", ["order", "q_residual", "m_symmetry", "borrow_min_eig", "status"], rows)
    return 0 if ok else 1


def cmd_interface_eigs(cfg: ExperimentConfig, out: Path) -> int:
    rows, ok = [], True
    for order in cfg.orders:
        for family in cfg.families:
            try:
                pair = _r0_pair(cfg, order, family)
            except SbpSatError as exc:
                log.warning("order %d %s skipped: %s", order, family, exc)
                ok = False
                continue
            diag = interface.xi_diagnostics(pair)
            res = pair.compatibility_residual()
            ok &= res <= 1e-12
            rows.append([order, family, f"{diag.k_c:.3e}", f"{diag.k_f:.3e}", f"{res:.3e}"])
            print(f"order {order} {family}: k_c {diag.k_c:.2e}, k_f {diag.k_f:.2e}")
    write_csv(out / "interface_eigs.csv", ["order", "family", "k_c", "k_f", "compatibility"], rows)
    return 0 if ok else 1


def cmd_spectrum(cfg: ExperimentConfig, out: Path) -> int:
    rows, ok = [], True
    m = mesh.build_two_block_mesh(0)
    penalty = _penalty(cfg)
    for order in cfg.orders:
        for family in cfg.families:
            try:
                pair = _r0_pair(cfg, order, family)
                system = discretization.assemble_two_block(m, order, pair, penalty, family=family)
            except SbpSatError as exc:
                log.warning("order %d %s skipped: %s", order, family, exc)
                ok = False
                continue
            spec = analysis.spectrum(system)
            radius = float(np.abs(spec.eigenvalues).max())
            real = spec.max_abs_imag <= 1e-8 * radius
            rows.append([order, family, system.n, f"{spec.max_real:.6e}", f"{spec.max_abs_imag:.3e}",
                         f"{spec.scaled_max_real(system.h_min()):.3e}", "real" if real else "complex"])
            print(f"order {order} {family}: max Re {spec.max_real:.4e}, max |Im| {spec.max_abs_imag:.2e}")
    write_csv(out / "spectrum.csv", ["order", "family", "n", "max_real", "max_abs_imag", "max_real_h2", "spectrum"], rows)
    return 0 if ok else 1


def cmd_converge(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.mesh not in SOLVABLE:
        raise ConfigError("mesh", f"convergence runs need one of {SOLVABLE}")
    penalty = _penalty(cfg)
    ok = True
    for family in cfg.families:
        for order in cfg.orders:
            try:
                rep = analysis.convergence_study(_mesh_builder(cfg.mesh), order, family, cfg.levels, cfg.t_final, penalty,
                                                  cfg.dt_factor)
            except SbpSatError as exc:
                log.warning("order %d %s failed: %s", order, family, exc)
                ok = False
                continue
            rep.write_csv(out / f"converge_{cfg.mesh}_{family}_order{order}.csv")
            for row in rep.rows():
                print(f"{family} order {row[0]} r={row[1]}: L2 {row[2]:.3e} q {row[3]:.2f}  max {row[4]:.3e} q {row[5]:.2f}")
    return 0 if ok else 1


def cmd_mesh(cfg: ExperimentConfig, out: Path) -> int:
    builders = {
        "cavity": lambda r: mesh.build_cavity_mesh("T"),
        "cavity-n": lambda r: mesh.build_cavity_mesh("N"),
        "inclusion": lambda r: mesh.build_inclusion_mesh(True),
        "inclusion-nc": lambda r: mesh.build_inclusion_mesh(False),
    }
    builder = builders.get(cfg.mesh) or _mesh_builder(cfg.mesh)
    for r in cfg.levels if cfg.mesh in SOLVABLE else cfg.levels[:1]:
        m = builder(r)
        mesh.validate_mesh(m)
        target = out / f"{m.name}_r{r}" if cfg.mesh in SOLVABLE else out / m.name
        mesh.export_mesh(m, target)
        print(f"{m.name}: {len(m.blocks)} blocks, {m.n_points} points -> {target}")
    return 0


def cmd_solve(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.mesh not in SOLVABLE:
        raise ConfigError("mesh", f"solves need one of {SOLVABLE}")
    order, family, r = cfg.orders[0], cfg.families[0], cfg.levels[0]
    sol = ManufacturedSolution()
    system = discretization.assemble(_mesh_builder(cfg.mesh)(r), order, family,
                                     _penalty(cfg), bc=sol)
    X, Y = system.coordinates()
    energy, error = [], []

    def observe(state):
        e = analysis.discrete_energy(system, state.z, state.z_t, state.t)
        energy.append([f"{state.t:.10g}", f"{e.total:.12e}"])
        err = analysis.error_norms(system, state.z, sol(X, Y, state.t))
        error.append([f"{state.t:.10g}", f"{err.l2:.6e}"])

    dt = discretization.time_step(system, cfg.dt_factor)
    z0, v0 = initial_data(system, sol)
    simulate(system, z0, v0, cfg.t_final, dt, observers=[observe], observe_every=cfg.observe_every)
    write_csv(out / "energy.csv", ["t", "value"], energy)
    write_csv(out / "error.csv", ["t", "value"], error)
    print(f"{system.n} unknowns, dt {dt:.4g}, final L2 error {error[-1][1]}")
    return 0


COMMANDS = {
    "verify-ops": cmd_verify_ops,
    "interface-eigs": cmd_interface_eigs,
    "spectrum": cmd_spectrum,
    "converge": cmd_converge,
    "mesh": cmd_mesh,
    "solve": cmd_solve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbpsat", description="SBP-SAT multi-block wave equation experiments")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="experiment INI file; defaults are used when omitted")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        if args.out:
            cfg.out = args.out
        if cfg.coeff_dir:
            os.environ["SBPSAT_COEFF_DIR"] = cfg.coeff_dir
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.config:
            atomic_write_text(out / f"{args.command}.ini", Path(args.config).read_text())
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SbpSatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
