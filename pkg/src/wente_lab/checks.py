"""Invariant checks shared by ``verify`` and the test suite.

Each check returns a :class:`CheckResult` with the measured value, the
threshold and the comparison used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad

from .config import LabConfig
from .disc import ScalarField, integrate, make_polar_grid
from .green import compatible_flux, representation_residual, solve_dirichlet_green
from .mobius import BubbleSpec, exact_distribution, jacobian_total, mobius_eval, mobius_inverse
from .modes import dirichlet_energy
from .norms import concentration_integral, mprime_lorentz21
from .robin import (
    BoundaryArcs, RobinCoeffs, assemble, boundary_load, coercivity_check, h1_seminorm_error,
    mesh_disc, random_trial_functions, solve_robin,
)
from .spectral import (
    harmonic_extension, harmonic_from_neumann, neumann_via_correction,
    solve_dirichlet_spectral, solve_neumann_spectral,
)
from .sweep import relative_h1

LORENTZ_BOUND = 8.0 * np.sqrt(np.pi)


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    relation: str = "<="  # value <relation> threshold

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        if self.relation == "<=":
            return self.value <= self.threshold
        if self.relation == "<":
            return self.value < self.threshold
        if self.relation == ">=":
            return self.value >= self.threshold
        raise ValueError(self.relation)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<40s} {self.value:.6e} {self.relation} {self.threshold:.6e}"


# ---------------------------------------------------------------------------
# Möbius bubble and norms

def lorentz_oracle(epsilon: float = 1.0) -> float:
    """``2 int_0^inf mu(t)^{1/2} dt`` from the closed-form distribution function."""
    top = 2.0 / epsilon
    breaks = [top * 10.0**-k for k in range(1, 9)]
    return 2.0 * quad(lambda t: np.sqrt(exact_distribution(t, epsilon)), 0.0, top, limit=500, points=breaks)[0]


def check_mobius(tol: float = 1e-12) -> list[CheckResult]:
    x = np.linspace(-50, 50, 2001)
    eps = 1e-2
    m, _ = mobius_eval(x + 0j, eps)
    z = np.array([0.3 + 0.2j, -1.0 + 1e-3j, 5.0 + 7.0j])
    back = mobius_inverse(mobius_eval(z, eps)[0], eps)
    return [
        CheckResult("mobius.unit_modulus_on_axis", float(np.abs(np.abs(m) - 1).max()), tol),
        CheckResult("mobius.inverse_roundtrip", float(np.abs(back - z).max() / np.abs(z).max()), 1e-10),
    ]


def check_lorentz(ladder=(1e-1, 1e-2, 1e-3, 1e-4)) -> list[CheckResult]:
    vals = np.array([mprime_lorentz21(e) for e in ladder])
    oracle = lorentz_oracle()
    return [
        CheckResult("norms.mprime_l21_max", float(vals.max()), LORENTZ_BOUND),
        CheckResult("norms.mprime_l21_spread", float(vals.max() / vals.min() - 1.0), 0.01),
        CheckResult("norms.mprime_l21_vs_oracle", float(np.abs(vals / oracle - 1).max()), 1e-3),
    ]


def gaussian_bump(z, sigma: float = 0.1):
    return np.exp(-np.abs(z) ** 2 / (2.0 * sigma * sigma))


def check_concentration(epsilon: float = 1e-3) -> CheckResult:
    v = concentration_integral(BubbleSpec(epsilon), gaussian_bump)
    return CheckResult("mobius.concentration", abs(v - np.pi * gaussian_bump(0.0)), 0.02 * np.pi)


# ---------------------------------------------------------------------------
# disc solvers

def check_closed_forms(n_r: int, n_theta: int, tol: float) -> list[CheckResult]:
    grid = make_polar_grid(n_r, n_theta)
    r2 = np.abs(grid.points) ** 2
    u = solve_dirichlet_spectral(grid.constant(1.0))
    c = 2.5
    v = solve_neumann_spectral(grid.constant(c))
    h = harmonic_extension(np.cos(grid.angles), grid)
    return [
        CheckResult("spectral.dirichlet_constant", float(np.abs(u.values - (1 - r2) / 4).max()), tol, "<"),
        CheckResult("spectral.neumann_constant", float(np.abs(v.values - (-c * r2 / 4 + c / 8)).max()), tol, "<"),
        CheckResult("spectral.harmonic_cos", float(np.abs(h.values - grid.points.real).max()), 1e-6, "<"),
    ]


def bubble_density(grid, epsilon: float, **kw) -> ScalarField:
    return ScalarField(grid, jacobian_total(BubbleSpec(epsilon, **kw), grid.points))


def check_cross_solver(grid, epsilon: float, tol: float) -> CheckResult:
    f = bubble_density(grid, epsilon)
    return CheckResult("green.cross_solver_h1", relative_h1(solve_dirichlet_green(f), solve_dirichlet_spectral(f)), tol, "<")


def neumann_sign_residuals(f: ScalarField) -> tuple[float, float]:
    """``|int_D f + int_{dD} g|`` for ``g = -(1/2pi) int f`` and for the opposite sign."""
    grid = f.grid
    total = integrate(f)
    g = compatible_flux(grid, total)
    flux = float(np.sum(g) * grid.dtheta)
    return abs(total + flux), abs(total - flux)


def check_neumann_sign(grid, epsilon: float = 1e-2) -> list[CheckResult]:
    f = bubble_density(grid, epsilon)
    good, printed = neumann_sign_residuals(f)
    total = abs(integrate(f))
    return [
        CheckResult("green.neumann_sign_compatible", good, 1e-6, "<"),
        CheckResult("green.neumann_sign_printed_rel_dev_from_2|int f|", abs(printed - 2 * total) / (2 * total), 1e-6, "<"),
    ]


def check_parseval(n_r: int, n_theta: int, tol: float) -> CheckResult:
    """``||grad h||^2 = pi sum_k (a_k^2 + b_k^2) / k`` for ``dh/dnu = sum a_k cos + b_k sin``."""
    grid = make_polar_grid(n_r, n_theta)
    t = grid.angles
    a = {1: 1.0, 2: -0.5, 5: 0.25}
    b = {1: 0.3, 3: 0.7}
    g = sum(v * np.cos(k * t) for k, v in a.items()) + sum(v * np.sin(k * t) for k, v in b.items())
    h = harmonic_from_neumann(g, grid)
    exact = np.pi * (sum(v * v / k for k, v in a.items()) + sum(v * v / k for k, v in b.items()))
    energy = dirichlet_energy(h.values, grid, "trace")
    return CheckResult("spectral.parseval_rel", abs(energy - exact) / exact, tol, "<")


def check_neumann_correction(grid, epsilon: float = 1e-2) -> CheckResult:
    f = bubble_density(grid, epsilon)
    _, _, v = neumann_via_correction(f)
    direct = solve_neumann_spectral(f)
    return CheckResult("spectral.neumann_via_correction_h1", relative_h1(v, direct, "trace"), 1e-2, "<")


# ---------------------------------------------------------------------------
# representation formula

REPRESENTATION_POLYS = [
    # c[i, j] multiplies x^i y^j
    np.array([[1.0, -2.0], [1.0, 0.0]]),  # 1 + x - 2y
    np.array([[0.0, 0.0, 1.0], [0.0, 3.0, 0.0], [-1.0, 0.0, 0.0]]),  # y^2 + 3xy - x^2
    np.array([[0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.0]]),  # -y^3 + 2x^2y + x^3/2
    np.array([[0.0, 0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, -3.0, 0.0, 0.0],
              [0.0, 1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0, 0.0]]),  # y^4 - 3x^2y^2 + x^3y + x^4
]
REPRESENTATION_POINTS = (0.0, 0.3 + 0.2j, -0.5 + 0.1j, 0.1 - 0.6j, 0.7 + 0.4j)


def polynomial_callables(c: np.ndarray):
    """``(u, grad u, Laplace u)`` for ``u = sum c[i, j] x^i y^j`` on complex points."""
    cx, cy = P.polyder(c, axis=0), P.polyder(c, axis=1)
    lap = P.polyder(c, 2, axis=0)
    lap_y = P.polyder(c, 2, axis=1)

    def u(z):
        return P.polyval2d(np.real(z), np.imag(z), c)

    def grad(z):
        return np.stack([P.polyval2d(np.real(z), np.imag(z), cx), P.polyval2d(np.real(z), np.imag(z), cy)], axis=-1)

    def laplace(z):
        return P.polyval2d(np.real(z), np.imag(z), lap) + P.polyval2d(np.real(z), np.imag(z), lap_y)

    return u, grad, laplace


def check_representation() -> CheckResult:
    worst = 0.0
    for c in REPRESENTATION_POLYS:
        u, g, lap = polynomial_callables(c)
        for y in REPRESENTATION_POINTS:
            worst = max(worst, representation_residual(u, g, lap, y))
    return CheckResult("green.representation_residual", worst, 1e-3, "<")


# ---------------------------------------------------------------------------
# Robin FEM

def manufactured_errors(coeffs: RobinCoeffs, hs=(0.2, 0.1, 0.05), arcs: BoundaryArcs | None = None) -> list[float]:
    """H^1 errors for the harmonic solution ``v = x y`` with matching Robin data."""
    arcs = arcs or BoundaryArcs()

    def g(z):
        x, y = z.real, z.imag
        # grad(xy) = (y, x); dv/dnu = 2xy, dv/dtau = x^2 - y^2 on the circle
        return coeffs.alpha * 2 * x * y + coeffs.beta * (x * x - y * y) + coeffs.gamma * x * y

    def grad(z):
        return np.stack([z.imag, z.real], axis=-1)

    errs = []
    for h in hs:
        mesh = mesh_disc(h, arcs)
        exact = mesh.vertices[:, 0] * mesh.vertices[:, 1]
        v = solve_robin(mesh, coeffs, np.zeros(mesh.n_vertices), boundary_load(mesh, g), dirichlet_values=exact)
        errs.append(h1_seminorm_error(v, grad))
    return errs


def observed_orders(errs) -> np.ndarray:
    e = np.asarray(errs)
    return np.log2(e[:-1] / e[1:])


def check_fem_order(coeffs_list, hs=(0.2, 0.1, 0.05)) -> list[CheckResult]:
    out = []
    for c in coeffs_list:
        order = observed_orders(manufactured_errors(RobinCoeffs(*c), hs)).min()
        out.append(CheckResult(f"robin.fem_order{tuple(c)}", float(order), 0.9, ">="))
    return out


def check_robin_algebra(cfg: LabConfig, h: float, trials: int = 100) -> list[CheckResult]:
    arcs = BoundaryArcs(tuple(tuple(a) for a in cfg.arcs))
    mesh = mesh_disc(h, arcs)
    rng = np.random.default_rng(cfg.seed)
    out = []
    for c in cfg.coeffs:
        system = assemble(mesh, RobinCoeffs(*c))
        t = system.tangential[mesh.free][:, mesh.free]
        skew = abs(t + t.T).max() if t.nnz else 0.0
        out.append(CheckResult(f"robin.tangential_skew{tuple(c)}", float(skew), 1e-14))
        rep = coercivity_check(system, random_trial_functions(mesh, trials, rng))
        out.append(CheckResult(f"robin.coercivity_margin{tuple(c)}", rep.worst / rep.scale, -cfg.coercivity_tol, ">="))
    return out


# ---------------------------------------------------------------------------

def check_glue_level1(grid) -> list[CheckResult]:
    from .glue import glue_step, level_passed, start_glue

    state, candidates = start_glue([1e-1, 10**-1.5], grid=grid)
    level = glue_step(state, candidates)
    ok = level_passed(level.checks)
    out = []
    for name, (value, bound) in level.checks.items():
        rel = ">=" if name == "(iii)" else "<="
        out.append(CheckResult(f"glue.level1 {name}", float(value), float(bound), rel))
        assert ok[name] == out[-1].passed
    return out


def verify_suite(cfg: LabConfig) -> list[CheckResult]:
    """Module invariants at the reduced ``verify`` resolution."""
    from .disc import focus_for_epsilon

    nr, nt = cfg.verify_n_r, cfg.verify_n_theta
    results = check_mobius()
    results += check_lorentz()
    results.append(check_concentration())
    results += check_closed_forms(nr, nt, cfg.check_tol)
    eps = 10**-1.5
    grid = make_polar_grid(nr, nt, grading=cfg.grading, focus=focus_for_epsilon(eps))
    results.append(check_cross_solver(grid, eps, cfg.cross_tol))
    results += check_neumann_sign(grid)
    results.append(check_parseval(nr, nt, cfg.check_tol))
    results.append(check_neumann_correction(make_polar_grid(nr, nt, grading=cfg.grading, focus=focus_for_epsilon(1e-2))))
    results.append(check_representation())
    results += check_robin_algebra(cfg, h=0.1)
    results += check_fem_order(cfg.coeffs[:1])
    results += check_glue_level1(grid)
    return results
