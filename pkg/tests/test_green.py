import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wente_lab.checks import (
    REPRESENTATION_POINTS, REPRESENTATION_POLYS, bubble_density, neumann_sign_residuals,
    polynomial_callables,
)
from wente_lab.disc import focus_for_epsilon, integrate, make_polar_grid
from wente_lab.green import (
    SingularInputError, green_dirichlet, green_neumann, neumann_flux, representation_residual,
    solve_dirichlet_green, solve_neumann_green,
)
from wente_lab.spectral import solve_dirichlet_spectral, solve_neumann_spectral
from wente_lab.sweep import relative_h1

inside = st.builds(
    lambda r, t: r * np.exp(1j * t), st.floats(0.0, 0.95), st.floats(0, 2 * np.pi)
)


def test_diagonal_raises():
    with pytest.raises(SingularInputError):
        green_dirichlet(0.3 + 0.1j, 0.3 + 0.1j)


@settings(max_examples=50)
@given(inside, inside)
def test_dirichlet_symmetric(x, y):
    if abs(x - y) < 1e-6:
        return
    assert green_dirichlet(x, y) == pytest.approx(green_dirichlet(y, x), rel=1e-10, abs=1e-12)
    assert green_neumann(x, y) == pytest.approx(green_neumann(y, x), rel=1e-10, abs=1e-12)


@settings(max_examples=50)
@given(inside, st.floats(0, 2 * np.pi))
def test_dirichlet_vanishes_on_circle(y, t):
    assert abs(green_dirichlet(np.exp(1j * t), y)) < 1e-12


@settings(max_examples=30)
@given(inside, st.floats(0, 2 * np.pi))
def test_neumann_normal_derivative(y, t):
    """``dG_N/dnu = 0`` for the solver variant and ``1/(2pi) - 1/2`` for the other."""
    x = np.exp(1j * t)
    h = 1e-6
    for printed, expected in ((False, 0.0), (True, 1 / (2 * np.pi) - 0.5)):
        d = (green_neumann(x * (1 + h), y, printed) - green_neumann(x * (1 - h), y, printed)) / (2 * h)
        assert d == pytest.approx(expected, abs=1e-6)


@settings(max_examples=30)
@given(inside, inside)
def test_neumann_laplacian_constant(x, y):
    if abs(x - y) < 0.2:
        return
    h = 1e-3
    lap = (green_neumann(x + h, y) + green_neumann(x - h, y) + green_neumann(x + 1j * h, y)
           + green_neumann(x - 1j * h, y) - 4 * green_neumann(x, y)) / h**2
    assert lap == pytest.approx(-1 / np.pi, abs=1e-4)


def test_dirichlet_constant_density():
    g = make_polar_grid(64, 128)
    u = solve_dirichlet_green(g.constant(1.0))
    assert np.abs(u.values - (1 - np.abs(g.points) ** 2) / 4).max() < 1e-3


def test_neumann_constant_density():
    g = make_polar_grid(64, 128)
    v = solve_neumann_green(g.constant(2.0))
    r2 = np.abs(g.points) ** 2
    assert np.abs(v.values - (-r2 / 2 + 0.25)).max() < 1e-3


@pytest.mark.parametrize("solver", ["dirichlet", "neumann"])
def test_green_matches_spectral_on_bubble(solver):
    eps = 10**-1.5
    g = make_polar_grid(64, 128, 0.5, focus_for_epsilon(eps))
    f = bubble_density(g, eps)
    if solver == "dirichlet":
        err = relative_h1(solve_dirichlet_green(f), solve_dirichlet_spectral(f))
    else:
        err = relative_h1(solve_neumann_green(f), solve_neumann_spectral(f), "trace")
    assert err < 1e-2


def test_sign_probe():
    g = make_polar_grid(32, 64, 0.5, focus_for_epsilon(1e-2))
    f = bubble_density(g, 1e-2)
    good, printed = neumann_sign_residuals(f)
    assert good < 1e-10
    assert printed == pytest.approx(2 * abs(integrate(f)), rel=1e-12)


def test_flux_of_dirichlet_solution():
    # u = (1 - r^2)/4 for f = 1 has du/dnu = -1/2 and total flux -pi
    g = make_polar_grid(64, 128, 0.5, 0.3)
    f = g.constant(1.0)
    flux = neumann_flux(solve_dirichlet_spectral(f), f)
    assert flux.total() == pytest.approx(-np.pi, rel=1e-3)
    assert flux.mean == pytest.approx(-0.5, rel=1e-3)
    assert np.abs(flux.samples + 0.5).max() < 2e-2


@pytest.mark.parametrize("c", REPRESENTATION_POLYS, ids=lambda c: f"deg{sum(c.shape) - 2}")
def test_representation_formula_polynomials(c):
    u, g, lap = polynomial_callables(c)
    for y in REPRESENTATION_POINTS:
        assert representation_residual(u, g, lap, y) < 1e-3


def test_representation_detects_wrong_kernel(monkeypatch):
    from wente_lab import green

    # the quadratic coefficient only matters when Laplace u has nonzero mean
    u, g, lap = polynomial_callables(REPRESENTATION_POLYS[3])
    real = green.green_neumann
    monkeypatch.setattr(green, "green_neumann", lambda x, y, printed=False: real(x, y, printed=True))
    assert representation_residual(u, g, lap, 0.3 + 0.2j) > 1e-2
