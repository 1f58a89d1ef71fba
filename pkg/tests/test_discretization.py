import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import direct_conforming_Q
from sbpsat import discretization as dz
from sbpsat.analysis import discrete_energy, spectrum
from sbpsat.discretization import interface_selectors, tau_bound
from sbpsat.errors import CoverageGap, NonpositiveInput, PenaltyBelowBound, SizeMismatch
from sbpsat.mesh import (
    MultiBlockMesh,
    build_conforming_two_block_mesh,
    build_single_block_mesh,
    build_tjunction_mesh,
    build_two_block_mesh,
)


def as_glue(m):
    return MultiBlockMesh(m.name, m.blocks, tuple(dataclasses.replace(i, kind="glue") for i in m.interfaces), m.boundary)


@pytest.fixture(scope="module", params=[(2, "interpolation"), (4, "interpolation"), (2, "projection"), (4, "projection")],
                ids=lambda p: f"{p[1]}-{p[0]}")
def two_block(request):
    order, family = request.param
    return dz.assemble(build_two_block_mesh(0), order, family)


@pytest.fixture(scope="module", params=[2, 4])
def tjunction(request):
    return dz.assemble_glue_coupled(build_tjunction_mesh(0), request.param)


def test_tau_bound():
    assert tau_bound(0.4, 0.1, 0.05) == pytest.approx(1 / (2 * 0.4 * 0.05))
    with pytest.raises(NonpositiveInput):
        tau_bound(0.4, 0.0, 0.1)
    with pytest.raises(NonpositiveInput):
        tau_bound(-1.0, 0.1, 0.1)


def test_selectors():
    sel = interface_selectors(4, 6)
    assert sel["E_LR"].toarray().shape == (4, 6)
    np.testing.assert_array_equal(sel["E_LR"].toarray(), sel["E_RL"].toarray().T)
    assert sel["E_0L"].toarray()[3, 3] == 1 and sel["E_0R"].toarray()[0, 0] == 1


def test_layout_index():
    s = dz.assemble(build_two_block_mesh(0), 2)
    assert s.index(0, 0, 0) == 0
    assert s.index(0, 1, 0) == 26
    assert s.index(1, 0, 0) == 26 * 26
    with pytest.raises(IndexError):
        s.index(0, 26, 0)


def test_hq_symmetric(two_block):
    assert dz.symmetry_residual(two_block) <= 1e-10


def test_hq_symmetric_tjunction(tjunction):
    assert dz.symmetry_residual(tjunction) <= 1e-10
    assert [c.kind for c in tjunction.couplings] == ["projection", "projection"]


def test_matrix_free_matches_assembled(two_block):
    z = np.random.default_rng(1).standard_normal(two_block.n)
    a = dz.apply_rhs(two_block, z, matrix_free=True)
    b = dz.apply_rhs(two_block, z, matrix_free=False)
    assert np.abs(a - b).max() <= 1e-12 * np.abs(b).max()


def test_matrix_free_matches_assembled_tjunction(tjunction):
    z = np.random.default_rng(2).standard_normal(tjunction.n)
    a = dz.apply_operator(tjunction, z)
    b = tjunction.Q_mat @ z
    assert np.abs(a - b).max() <= 1e-12 * np.abs(b).max()


def test_energy_nonnegative_random_states(two_block):
    rng = np.random.default_rng(3)
    for _ in range(50):
        z, v = rng.standard_normal((2, two_block.n))
        e = discrete_energy(two_block, z, v)
        assert e.total >= 0
        assert e.parts_sum == pytest.approx(e.total, rel=1e-10)


@pytest.mark.parametrize("order", [2, 4])
def test_conforming_as_glue_matches_direct_assembly(order):
    system = dz.assemble_glue_coupled(as_glue(build_conforming_two_block_mesh(21)), order)
    Qd = direct_conforming_Q(order, 21)
    assert np.abs(system.Q_mat.toarray() - Qd).max() <= 1e-10 * np.abs(Qd).max()


def test_single_block_spectrum_matches_laplacian():
    s = dz.assemble(build_single_block_mesh(0), 2)
    ev = np.sort(spectrum(s).eigenvalues.real)[::-1]
    # Dirichlet Laplacian on [-1,1]x[0,1]
    exact = sorted((-np.pi**2 * ((k / 2) ** 2 + l**2) for k in range(1, 6) for l in range(1, 4)), reverse=True)
    np.testing.assert_allclose(ev[:3], exact[:3], rtol=1e-2)


@pytest.mark.parametrize("factor", [0.2, 0.5, 0.9])
def test_penalty_below_bound_rejected_or_unstable(factor):
    m = build_conforming_two_block_mesh(21)
    tau = factor * tau_bound(0.2508560249, 0.05, 0.05)
    with pytest.raises(PenaltyBelowBound):
        dz.assemble(m, 4, penalty=dz.PenaltyConfig(tau=tau))
    s = dz.assemble(m, 4, penalty=dz.PenaltyConfig(tau=tau, enforce=False))
    assert dz.symmetry_residual(s) <= 1e-10
    assert np.linalg.eigvals(s.Q_mat.toarray()).real.max() > 0


def test_dirichlet_penalty_below_bound_rejected():
    m = build_single_block_mesh(0)
    with pytest.raises(PenaltyBelowBound):
        dz.assemble(m, 4, penalty=dz.PenaltyConfig(dirichlet_safety=0.5))
    s = dz.assemble(m, 4, penalty=dz.PenaltyConfig(dirichlet_safety=0.5, enforce=False))
    assert np.linalg.eigvals(s.Q_mat.toarray()).real.max() > 0


def test_dirichlet_penalty_leaves_interface_untouched():
    m = build_conforming_two_block_mesh(15)
    a = dz.assemble(m, 4, penalty=dz.PenaltyConfig(dirichlet_safety=2.0))
    b = dz.assemble(m, 4, penalty=dz.PenaltyConfig(dirichlet_safety=3.0))
    diff = (a.Q_mat - b.Q_mat).tocoo()
    rows = {(i, j) for i, j, v in zip(diff.row, diff.col, diff.data) if v != 0}
    # only points on outer boundary rows and columns change
    X, Y = a.coordinates()
    on_boundary = (np.isclose(np.abs(X), 1) | np.isclose(Y, 0) | np.isclose(Y, 1))
    assert rows and all(on_boundary[i] for i, _ in rows)


def test_dirichlet_forcing_reproduces_boundary_data():
    # a harmonic function is a steady state: Q u + F = D2 u exactly for linears
    m = build_two_block_mesh(0)
    bc = lambda x, y, t: 1.0 + 2.0 * x - 3.0 * y
    s = dz.assemble(m, 4, "projection", bc=bc)
    u = s.sample(bc)
    assert np.abs(dz.apply_rhs(s, u, 0.0)).max() <= 1e-9


def test_missing_glue_set():
    gs = []
    with pytest.raises(CoverageGap):
        dz.assemble_glue_coupled(build_tjunction_mesh(0), 4, glue_sets=gs)


def test_explicit_pair_size_checked():
    from sbpsat.interface import build_interpolation_pair

    with pytest.raises(SizeMismatch):
        dz.assemble_two_block(build_two_block_mesh(0), 2, build_interpolation_pair(2, 20, 0.05))


def test_state_size_checked(two_block):
    with pytest.raises(SizeMismatch):
        dz.apply_rhs(two_block, np.zeros(two_block.n + 1))


def test_time_step_rule():
    s = dz.assemble(build_two_block_mesh(0), 4)
    assert dz.time_step(s) == pytest.approx(0.1 * 0.02)


@settings(max_examples=10, deadline=None)
@given(safety=st.floats(min_value=1.0, max_value=5.0), dsafety=st.floats(min_value=1.0, max_value=5.0),
       seed=st.integers(0, 2**32 - 1))
def test_energy_nonnegative_any_safety(safety, dsafety, seed):
    penalty = dz.PenaltyConfig(safety=safety, dirichlet_safety=dsafety)
    s = dz.assemble(build_conforming_two_block_mesh(15), 4, penalty=penalty)
    z = np.random.default_rng(seed).standard_normal(s.n)
    assert -z @ (s.H_global * (s.Q_mat @ z)) >= -1e-9 * np.dot(z, z)
