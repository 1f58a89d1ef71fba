import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbpsat import mesh as mg
from sbpsat.errors import CoverageGap, ParameterOutOfRange


@pytest.fixture(scope="module")
def cavity_t():
    return mg.build_cavity_mesh("T")


@pytest.fixture(scope="module")
def inclusion():
    return mg.build_inclusion_mesh(True)


@pytest.fixture(scope="module")
def inclusion_nc():
    return mg.build_inclusion_mesh(False)


def test_unit_square_tfi_is_identity():
    spec = mg.rectangle_spec(0, 1, 0, 1, 5, 7)
    xi, eta = np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 7), indexing="ij")
    X, Y = mg.transfinite_map(spec, xi, eta)
    np.testing.assert_allclose(X, xi, atol=1e-15)
    np.testing.assert_allclose(Y, eta, atol=1e-15)


def test_tfi_reproduces_boundary_curves():
    spec = mg.ring_block_spec(1.0, 11.7, 23, 20)
    s = np.linspace(0, 1, 17)
    for side, (xi, eta) in {
        "south": (s, 0 * s),
        "north": (s, 0 * s + 1),
        "west": (0 * s, s),
        "east": (0 * s + 1, s),
    }.items():
        X, Y = mg.transfinite_map(spec, xi, eta)
        cx, cy = getattr(spec, side)(s)
        np.testing.assert_allclose(X, cx, atol=1e-12)
        np.testing.assert_allclose(Y, cy, atol=1e-12)


def test_tfi_parameter_range():
    with pytest.raises(ParameterOutOfRange):
        mg.transfinite_map(mg.rectangle_spec(0, 1, 0, 1, 3, 3), 1.5, 0.5)


def test_corner_mismatch_rejected():
    with pytest.raises(ValueError):
        mg.BlockSpec(
            south=mg.LineSegment((0, 0), (1, 0)),
            north=mg.LineSegment((0, 1), (1, 1)),
            west=mg.LineSegment((0, 0), (0, 1)),
            east=mg.LineSegment((1.1, 0), (1, 1)),
            n_xi=3,
            n_eta=3,
        )


def test_cavity_arc_on_unit_circle():
    spec = mg.ring_block_spec(1.0, 11.7, 23, 20)
    x, y = spec.south(np.linspace(0, 1, 101))
    np.testing.assert_allclose(np.hypot(x, y), 1.0, atol=1e-12)


@pytest.mark.parametrize("turns", [1, 2, 3])
def test_rotation_clockwise(turns):
    c = mg.LineSegment((0.0, 1.0), (1.0, 1.0)).rotated(turns)
    x, y = c(np.array([0.0]))
    expected = {1: (1.0, 0.0), 2: (0.0, -1.0), 3: (-1.0, 0.0)}[turns]
    assert (x[0], y[0]) == pytest.approx(expected)


@pytest.mark.parametrize("r, counts", [(0, (26 * 26, 51 * 51)), (1, (51 * 51, 101 * 101))])
def test_two_block_counts(r, counts):
    m = mg.build_two_block_mesh(r)
    assert tuple(b.n_points for b in m.blocks) == counts


def test_tjunction_counts():
    m = mg.build_tjunction_mesh(0)
    assert [b.shape for b in m.blocks] == [(28, 51), (27, 25), (51, 50)]
    assert m.n_points == 28 * 51 + 27 * 25 + 51 * 50


def test_cavity_totals(cavity_t):
    assert cavity_t.n_points == 54903
    assert mg.build_cavity_mesh("N").n_points == 109867


def test_cavity_circle_traces(cavity_t):
    r = mg.arc_radii(cavity_t, [(k, "south") for k in range(4)])
    np.testing.assert_allclose(r, 1.0, atol=1e-10)


def test_cavity_jacobians_positive(cavity_t):
    assert min(b.min_jacobian() for b in cavity_t.blocks) > 0


def test_inclusion_counts(inclusion, inclusion_nc):
    expected = {
        True: [(101, 26)] * 4 + [(101, 51)] * 4 + [(101, 101), (51, 101)],
        False: [(51, 26)] * 4 + [(101, 51)] * 4 + [(101, 101), (51, 51)],
    }
    assert [b.shape for b in inclusion.blocks] == expected[True]
    assert [b.shape for b in inclusion_nc.blocks] == expected[False]


def test_inclusion_circle_traces(inclusion):
    outer = mg.arc_radii(inclusion, [(k, "south") for k in range(4)])
    inner = mg.arc_radii(inclusion, [(k, "north") for k in range(4, 8)])
    np.testing.assert_allclose(outer, 1.0, atol=1e-10)
    np.testing.assert_allclose(inner, 1.0, atol=1e-10)


def test_inclusion_nonconforming_interfaces(inclusion_nc):
    kinds = {i.kind for i in inclusion_nc.interfaces}
    assert "ratio-1:2" in kinds
    assert min(b.min_jacobian() for b in inclusion_nc.blocks) > 0


def test_coverage_gap_detected():
    m = mg.build_two_block_mesh(0)
    broken = mg.MultiBlockMesh(m.name, m.blocks, m.interfaces, m.boundary[:-1])
    with pytest.raises(CoverageGap):
        mg.validate_mesh(broken)


def test_export(tmp_path):
    m = mg.build_tjunction_mesh(0)
    paths = mg.export_mesh(m, tmp_path)
    assert len(paths) == 4
    topo = json.loads((tmp_path / f"{m.name}_topology.json").read_text())
    assert topo["total_points"] == m.n_points
    lines = (tmp_path / f"{m.name}_block1.csv").read_text().splitlines()
    assert lines[0] == "block_id,i,j,x,y"
    assert len(lines) == 1 + 27 * 25


def test_refine_count():
    assert [mg.refine_count(26, r) for r in range(4)] == [26, 51, 101, 201]


@settings(max_examples=25, deadline=None)
@given(
    a=st.floats(min_value=0.5, max_value=2.0),
    D_factor=st.floats(min_value=1.5, max_value=10.0),
    n=st.integers(min_value=3, max_value=30),
)
def test_ring_block_valid_for_any_geometry(a, D_factor, n):
    spec = mg.ring_block_spec(a, a * D_factor, n, n)
    blk = mg.MeshBlock.generate("b", spec)
    assert blk.min_jacobian() > 0
    x, y = blk.trace("south")
    np.testing.assert_allclose(np.hypot(x, y), a, rtol=1e-12)
    assert math.isclose(blk.X[-1, -1], a * D_factor)
