import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wente_lab.checks import manufactured_errors, observed_orders
from wente_lab.mobius import BubbleSpec, jacobian_total
from wente_lab.robin import (
    BoundaryArcs, MeshError, RobinCoeffs, assemble, boundary_load, boundary_mass, coercivity_check,
    galerkin_residual, interpolate_to, load_vector, mesh_disc, random_trial_functions,
    robin_flux_functional, solve_dirichlet_fem, solve_robin, stiffness,
)

ARCS = BoundaryArcs()


@pytest.fixture(scope="module")
def mesh():
    return mesh_disc(0.1, ARCS)


def test_coeff_validation():
    with pytest.raises(ValueError):
        RobinCoeffs(alpha=0.0)
    with pytest.raises(ValueError):
        RobinCoeffs(gamma=-1.0)


@pytest.mark.parametrize("arcs", [(), ((1.0, 0.5),), ((0.0, 7.0),), ((0.0, 1.0), (0.5, 2.0))])
def test_arc_validation(arcs):
    with pytest.raises(ValueError):
        BoundaryArcs(arcs)


def test_arc_contains():
    assert ARCS.contains(-0.5 * np.pi)
    assert not ARCS.contains(0.5 * np.pi)
    assert ARCS.measure == pytest.approx(0.5 * np.pi)


def test_mesh_geometry(mesh):
    assert np.all(mesh.areas > 0)
    assert mesh.areas.sum() == pytest.approx(np.pi, rel=2e-2)
    r = np.hypot(*mesh.vertices[mesh.boundary_vertices].T)
    assert np.allclose(r, 1.0)
    # the concentration point -e_2 is a vertex strictly inside E
    south = np.argmin(np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1] + 1))
    assert np.allclose(mesh.vertices[south], [0, -1])
    assert south in mesh.arc_vertices


def test_mesh_rejects_tiny_arc():
    with pytest.raises(MeshError):
        mesh_disc(0.5, BoundaryArcs(((0.0, 0.05),)))


def test_mesh_write(mesh, tmp_path):
    path = tmp_path / "mesh.txt"
    mesh.write(path)
    text = path.read_text().splitlines()
    assert text[0].startswith("# vertices")
    assert sum(line.startswith("#") for line in text) == 3
    assert sum(line.endswith(" E") for line in text) == int(mesh.edge_on_arc.sum())


def test_stiffness_properties(mesh):
    k = stiffness(mesh)
    assert abs(k - k.T).max() < 1e-14
    assert np.abs(k @ np.ones(mesh.n_vertices)).max() < 1e-12
    x = mesh.vertices[:, 0]
    # int |grad x|^2 = area of the polygon
    assert x @ (k @ x) == pytest.approx(mesh.areas.sum(), rel=1e-12)


def test_boundary_mass_measures_arc(mesh):
    m = boundary_mass(mesh)
    one = np.ones(mesh.n_vertices)
    assert one @ (m @ one) == pytest.approx(ARCS.measure, rel=1e-2)


@pytest.mark.parametrize("coeffs", [(1, 0, 0), (1, 1, 0), (1, -1, 1), (2, 3, 0.5)])
def test_tangential_block_skew_on_free_nodes(mesh, coeffs):
    system = assemble(mesh, RobinCoeffs(*coeffs))
    t = system.tangential[mesh.free][:, mesh.free]
    assert abs(t + t.T).max() == 0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 5), st.floats(-5, 5), st.floats(0, 5), st.integers(0, 2**32 - 1))
def test_coercivity_property(alpha, beta, gamma, seed):
    mesh = mesh_disc(0.2, ARCS)
    system = assemble(mesh, RobinCoeffs(alpha, beta, gamma))
    rep = coercivity_check(system, random_trial_functions(mesh, 10, np.random.default_rng(seed)))
    assert rep.passed(1e-8)


def test_coercivity_rejects_bad_trials(mesh):
    system = assemble(mesh, RobinCoeffs())
    with pytest.raises(ValueError):
        coercivity_check(system, np.ones(mesh.n_vertices))


@pytest.mark.parametrize("coeffs", [(1, 0, 0), (1, 1, 1), (2, -1, 0)])
def test_manufactured_first_order(coeffs):
    errs = manufactured_errors(RobinCoeffs(*coeffs), hs=(0.2, 0.1, 0.05))
    assert np.all(observed_orders(errs) >= 0.9)


def test_load_vector_integrates_density(mesh):
    f = load_vector(mesh, lambda z: np.ones_like(z.real))
    assert f.sum() == pytest.approx(mesh.areas.sum(), rel=1e-12)
    spec = BubbleSpec(1e-3)
    fb = load_vector(mesh, lambda z: jacobian_total(spec, z), scale=1e-3)
    # most of the bubble mass pi sits inside the mesh polygon
    assert 2.5 < fb.sum() < np.pi + 0.1


def test_boundary_load_linear(mesh):
    g = boundary_load(mesh, lambda z: np.ones_like(z.real))
    assert g.sum() == pytest.approx(ARCS.measure, rel=1e-2)


def test_solve_residual_and_flux(mesh):
    spec = BubbleSpec(1e-2)
    load = load_vector(mesh, lambda z: jacobian_total(spec, z), scale=1e-2)
    c = RobinCoeffs(1, 1, 1)
    system = assemble(mesh, c)
    v = solve_robin(mesh, c, load, system=system)
    assert galerkin_residual(system, v, load) < 1e-10
    assert np.all(v.values[~mesh.free] == 0)
    # the Dirichlet solution's flux functional vanishes at interior nodes
    u = solve_dirichlet_fem(mesh, load)
    flux = robin_flux_functional(u, load, RobinCoeffs())
    interior = np.ones(mesh.n_vertices, bool)
    interior[mesh.boundary_vertices] = False
    assert np.abs(flux.values[interior]).max() < 1e-10
    assert flux.dual_norm() > 0


def test_beta_sign_symmetry():
    # reflection x -> -x maps the arc to itself and flips the tangential derivative
    mesh = mesh_disc(0.1, ARCS)
    spec = BubbleSpec(1e-2)
    load = load_vector(mesh, lambda z: jacobian_total(spec, z), scale=1e-2)
    a = solve_robin(mesh, RobinCoeffs(1, 1, 0), load).grad_l2()
    b = solve_robin(mesh, RobinCoeffs(1, -1, 0), load).grad_l2()
    assert a == pytest.approx(b, rel=1e-8)


def test_interpolate_linear_exact():
    coarse, fine = mesh_disc(0.2, ARCS), mesh_disc(0.1, ARCS)
    from wente_lab.robin import MeshField

    vals = interpolate_to(MeshField(coarse, coarse.vertices @ [1.0, -2.0]), fine)
    inside = np.hypot(*fine.vertices.T) < 0.9
    assert np.allclose(vals[inside], (fine.vertices @ [1.0, -2.0])[inside])
