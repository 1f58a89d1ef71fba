import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbpsat import discretization as dz
from sbpsat.analysis import (
    ConvergenceReport,
    EnergyRecorder,
    convergence_rates,
    discrete_energy,
    energy_parts,
    error_norms,
    grid_l2,
    spectrum,
)
from sbpsat.errors import InsufficientLevels, SizeMismatch, SystemTooLarge
from sbpsat.mesh import build_conforming_two_block_mesh, build_tjunction_mesh, build_two_block_mesh
from sbpsat.timestepping import ManufacturedSolution, simulate


@pytest.fixture(scope="module")
def small():
    return dz.assemble(build_conforming_two_block_mesh(15), 4)


def test_error_norms_zero(small):
    u = small.sample(ManufacturedSolution())
    e = error_norms(small, u, u)
    assert e.l2 == 0 and e.max == 0


def test_single_point_defect():
    e = np.zeros(50)
    e[7] = 0.3
    assert grid_l2(e, 0.1, 2) == pytest.approx(0.1 * 0.3)


def test_blockwise_l2(small):
    u = np.zeros(small.n)
    u[small.index(1, 3, 4)] = 2.0
    b = small.blocks[1]
    e = error_norms(small, u, np.zeros(small.n), amplitude=2.0)
    assert e.l2 == pytest.approx(math.sqrt(b.hx * b.hy) * 2.0)
    assert e.max == 1.0


def test_error_norms_size(small):
    with pytest.raises(SizeMismatch):
        error_norms(small, np.zeros(3), np.zeros(3))


def test_rates():
    assert convergence_rates([4e-2, 1e-2]) == pytest.approx([2.0])
    with pytest.raises(InsufficientLevels):
        convergence_rates([1.0])


@settings(max_examples=50)
@given(q=st.floats(min_value=0.5, max_value=8.0), c=st.floats(min_value=1e-6, max_value=1e3),
       levels=st.integers(min_value=2, max_value=6))
def test_rates_invert_power_law(q, c, levels):
    errs = [c * 2.0 ** (-q * k) for k in range(levels)]
    np.testing.assert_allclose(convergence_rates(errs), q, rtol=1e-9)


def test_report_csv(tmp_path):
    rep = ConvergenceReport(4, "projection", [0, 1, 2], [10, 40, 160], [1e-3, 1.25e-4, 1.5625e-5], [2e-3, 4e-4, 8e-5])
    path = tmp_path / "c.csv"
    rep.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "order,refinement,l2_error,q_l2,max_error,q_max"
    assert len(lines) == 4
    assert rep.rates_l2 == pytest.approx([3.0, 3.0])


def test_energy_parts_sum(small):
    rng = np.random.default_rng(0)
    z, v = rng.standard_normal((2, small.n))
    e = discrete_energy(small, z, v)
    p = energy_parts(small, z, v)
    assert p.total == pytest.approx(e.total, rel=1e-10)
    assert e.kinetic > 0 and e.potential > 0


def test_energy_parts_tjunction():
    s = dz.assemble_glue_coupled(build_tjunction_mesh(0), 4)
    rng = np.random.default_rng(1)
    z, v = rng.standard_normal((2, s.n))
    assert energy_parts(s, z, v).total == pytest.approx(discrete_energy(s, z, v).total, rel=1e-10)


def test_energy_drift_ratio():
    # RK4 damps |R(i w dt)|^2 = 1 - (w dt)^6/72 + ..., so over a fixed time the
    # energy drift scales as dt^5
    s = dz.assemble(build_two_block_mesh(0), 4, "projection")
    X, Y = s.coordinates()
    z0 = np.exp(-60 * ((X - 0.3) ** 2 + (Y - 0.5) ** 2))
    drifts = []
    for dt in (0.004, 0.002):
        rec = EnergyRecorder(s)
        simulate(s, z0, np.zeros(s.n), 0.5, dt=dt, observers=[rec])
        drifts.append(rec.max_relative_drift())
    assert drifts[0] / drifts[1] == pytest.approx(32.0, abs=2.0)


def test_spectrum_guard():
    s = dz.assemble(build_two_block_mesh(0), 2)
    with pytest.raises(SystemTooLarge):
        spectrum(s, max_unknowns=1000)


def test_spectrum_small(small):
    res = spectrum(small)
    assert res.max_real < 0
    assert res.max_abs_imag <= 1e-8 * np.abs(res.eigenvalues).max()
