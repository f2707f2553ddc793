"""Frozen reference values computed independently of the solvers."""

import numpy as np
import pytest

from wente_lab.checks import lorentz_oracle
from wente_lab.mobius import exact_distribution, superlevel_radius

# 2 int_0^inf mu(t)^{1/2} dt for |m_eps'| on the half-plane, by adaptive quadrature
# of the closed-form distribution function; independent of eps by scaling
LORENTZ_MPRIME = 5.9438940915639815


def test_lorentz_oracle_frozen():
    assert lorentz_oracle(1.0) == pytest.approx(LORENTZ_MPRIME, rel=1e-12)


@pytest.mark.parametrize("eps", [1e-1, 1e-3])
def test_lorentz_oracle_scale_invariant(eps):
    assert lorentz_oracle(eps) == pytest.approx(LORENTZ_MPRIME, rel=1e-9)


def test_lorentz_oracle_below_bound():
    assert LORENTZ_MPRIME <= 8 * np.sqrt(np.pi)


def test_distribution_limits():
    eps = 0.01
    # the maximum of |m_eps'| on the closed half-plane is 2 / eps, where r(t) = eps
    assert exact_distribution(2.0 / eps, eps) == 0.0
    t = 1e-6
    r = superlevel_radius(t, eps)
    # far out the segment is nearly a half disc
    assert exact_distribution(t, eps) == pytest.approx(0.5 * np.pi * r * r, rel=1e-3)


def test_distribution_matches_sampled_area():
    eps = 0.1
    t = 2.0
    # sample the half-plane box containing the superlevel set
    r = superlevel_radius(t, eps)
    n = 2001
    x = np.linspace(-r, r, n)
    y = np.linspace(0, r, n // 2 + 1)
    X, Y = np.meshgrid(x, y)
    z = X + 1j * Y
    mod = 2 * eps / np.abs(z + 1j * eps) ** 2
    area = np.mean(mod >= t) * (2 * r) * r
    assert area == pytest.approx(exact_distribution(t, eps), rel=5e-3)
