import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbpsat import interface as itf
from sbpsat.errors import (
    CompatibilityViolation,
    EndpointMismatch,
    GridTooSmall,
    ParseError,
    SymmetryViolation,
    UnsupportedOrder,
)


def projection_pair(order, nc, nf):
    gs = itf.build_projection_set(order, np.linspace(0, 1, nc), np.linspace(0, 1, nf))
    return gs, itf.compose_interface(gs)


@pytest.fixture(scope="module", params=[2, 4])
def interp_pair(request):
    return itf.build_interpolation_pair(request.param, 26, 1 / 25)


@pytest.fixture(scope="module", params=[2, 4])
def proj(request):
    return projection_pair(request.param, 26, 51)


def test_interpolation_compatibility(interp_pair):
    assert interp_pair.compatibility_residual() <= 1e-12
    assert interp_pair.nf == 2 * interp_pair.nc - 1


def test_interpolation_preserves_constants(interp_pair):
    np.testing.assert_allclose(interp_pair.I_c2f @ np.ones(interp_pair.nc), 1.0, atol=1e-13)
    np.testing.assert_allclose(interp_pair.I_f2c @ np.ones(interp_pair.nf), 1.0, atol=1e-13)


def test_interpolation_accuracy(interp_pair):
    p = interp_pair.order // 2
    yc, yf = np.linspace(0, 1, interp_pair.nc), np.linspace(0, 1, interp_pair.nf)
    for op, a, b in ((interp_pair.I_c2f, yc, yf), (interp_pair.I_f2c, yf, yc)):
        deg = itf.polynomial_degree(op, a, b, 2 * p)
        assert deg.min() >= p - 1
        n = len(deg)
        assert deg[n // 3:n - n // 3].min() >= 2 * p - 1


def test_interpolation_xi_nonnegative(interp_pair):
    d = itf.xi_diagnostics(interp_pair, spectra=True)
    assert d.k_c >= -1e-13 and d.k_f >= -1e-13
    assert d.symmetry_c <= 1e-12


def test_order2_interpolation_by_hand():
    pair = itf.build_interpolation_pair(2, 5)
    # fine points between coarse ones take the average
    np.testing.assert_allclose(pair.I_c2f[1, :2], [0.5, 0.5])
    np.testing.assert_allclose(pair.I_c2f[2], [0, 1, 0, 0, 0])


def test_interpolation_grid_too_small():
    with pytest.raises(GridTooSmall):
        itf.build_interpolation_pair(4, 8)


@pytest.mark.parametrize("order", [6, 8, 10, 3])
def test_unconstructed_orders(order):
    with pytest.raises(UnsupportedOrder):
        itf.build_interpolation_pair(order, 40)


def test_projection_compatibilities(proj):
    gs, pair = proj
    for name, res in gs.compatibility_residuals().items():
        assert res <= 1e-12, name
    assert pair.compatibility_residual() <= 1e-12


def test_projection_preserves_constants(proj):
    _, pair = proj
    np.testing.assert_allclose(pair.I_c2f.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(pair.I_f2c.sum(axis=1), 1.0, atol=1e-12)


def test_projection_xi_nonnegative(proj):
    _, pair = proj
    d = itf.xi_diagnostics(pair)
    assert d.k_c >= -1e-13 and d.k_f >= -1e-13


def test_projection_reproduces_polynomials_on_glue(proj):
    gs, _ = proj
    p = gs.order // 2
    yc = gs.y_c
    for d in range(2 * p):
        # piecewise data of degree <= 2p-1 lands in the glue space unchanged
        coef_c = gs.P_f2p_c @ yc**d
        coef_g = gs.P_p2g_c @ coef_c
        back = gs.P_g2p_c @ coef_g
        np.testing.assert_allclose(back, coef_c, atol=1e-10)


def test_glue_grid_union():
    g = itf.build_glue_grid(np.linspace(0, 1, 4), np.linspace(0, 1, 7))
    np.testing.assert_allclose(g.y, np.unique(np.r_[np.linspace(0, 1, 4), np.linspace(0, 1, 7)]))
    np.testing.assert_array_equal(g.idx_c, [0, 2, 4, 6])


def test_glue_grid_endpoint_mismatch():
    with pytest.raises(EndpointMismatch):
        itf.build_glue_grid(np.linspace(0, 1, 5), np.linspace(0, 1.1, 9))


def test_composite_side_projection():
    # a T-junction: one side is two stacked blocks with different spacing
    y_c = [np.linspace(-1, 0, 26), np.linspace(0, 1, 25)]
    y_f = np.linspace(-1, 1, 51)
    gs = itf.build_projection_set(4, y_c, y_f)
    pair = itf.compose_interface(gs)
    assert gs.segments_c == (26, 25)
    assert pair.compatibility_residual() <= 1e-12
    np.testing.assert_allclose(pair.I_c2f.sum(axis=1), 1.0, atol=1e-12)
    assert itf.xi_diagnostics(pair).k_c >= -1e-13


def test_supplied_norm_must_match():
    y = np.linspace(0, 1, 26)
    with pytest.raises(CompatibilityViolation):
        itf.build_projection_set(2, y, np.linspace(0, 1, 51), H_c=np.ones(26))


def test_identity_pair():
    pair = itf.identity_pair(4, 20, 0.1)
    assert pair.compatibility_residual() == 0.0
    d = itf.xi_diagnostics(pair)
    assert abs(d.k_c) < 1e-14


def test_file_roundtrip(tmp_path, interp_pair):
    path = tmp_path / "pair.txt"
    itf.write_interface_operators(interp_pair, path)
    back = itf.load_interface_operators(path)
    assert itf.pairs_close(back, interp_pair)


def test_corrupted_pair_rejected(tmp_path, interp_pair):
    path = tmp_path / "pair.txt"
    itf.write_interface_operators(interp_pair, path)
    lines = path.read_text().splitlines()
    row = lines[2].split()
    row[0] = repr(float(row[0]) + 1e-6)
    lines[2] = " ".join(row)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CompatibilityViolation):
        itf.load_interface_operators(path)


@pytest.mark.parametrize("header", ["iface kind=foo order=2 nc=3 nf=5", "iface order=2", "pair kind=interpolation"])
def test_bad_headers(tmp_path, header):
    path = tmp_path / "p.txt"
    path.write_text(header + "\nI_C2F\n1\n")
    with pytest.raises(ParseError):
        itf.load_interface_operators(path)


def test_asymmetric_xi_detected(interp_pair):
    bad = itf.InterfaceOperatorPair(
        interp_pair.order,
        interp_pair.I_c2f,
        interp_pair.I_f2c + 1e-3 * np.eye(interp_pair.nc, interp_pair.nf),
        interp_pair.H_c,
        interp_pair.H_f,
        "interpolation",
        interp_pair.h_c,
        interp_pair.h_f,
    )
    with pytest.raises(SymmetryViolation):
        itf.xi_diagnostics(bad)


@settings(max_examples=15, deadline=None)
@given(nc=st.integers(min_value=16, max_value=40), extra=st.integers(min_value=1, max_value=30))
def test_projection_compatible_for_any_sizes(nc, extra):
    # arbitrary, not necessarily nested trace grids
    nf = nc + extra
    _, pair = projection_pair(4, nc, nf)
    assert pair.compatibility_residual() <= 1e-12
    np.testing.assert_allclose(pair.I_c2f.sum(axis=1), 1.0, atol=1e-11)
