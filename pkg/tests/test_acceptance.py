"""The twelve acceptance criteria at their stated tolerances.

Each test prints one ``ACCEPTANCE n: PASS/FAIL`` line (collected again in the
terminal summary) and asserts the criterion.
"""

import numpy as np
import pytest

from tests.conftest import record_acceptance
from wente_lab.checks import (
    LORENTZ_BOUND, REPRESENTATION_POINTS, REPRESENTATION_POLYS, bubble_density, check_closed_forms,
    check_concentration, manufactured_errors, observed_orders, polynomial_callables,
)
from wente_lab.config import LabConfig
from wente_lab.disc import focus_for_epsilon, make_polar_grid
from wente_lab.glue import LadderExhausted, glue_step, level_passed, pairing_growth, start_glue
from wente_lab.green import representation_residual, solve_dirichlet_green, solve_neumann_green
from wente_lab.mobius import BubbleSpec, jacobian_total
from wente_lab.norms import mprime_lorentz21
from wente_lab.robin import (
    BoundaryArcs, RobinCoeffs, assemble, coercivity_check, load_vector, mesh_disc,
    random_trial_functions, solve_robin,
)
from wente_lab.spectral import solve_dirichlet_spectral, solve_neumann_spectral
from wente_lab.sweep import relative_h1, run_sweep

CFG = LabConfig()


@pytest.fixture(scope="module")
def sweep_rows():
    """Default ladder 1e-1 .. 1e-4 on the default grid, one row per epsilon."""
    rows = run_sweep(CFG.with_overrides(coeffs=CFG.coeffs[:1]))
    assert all(r.status == "ok" for r in rows)
    return rows


def _fmt(values):
    return "[" + ", ".join(f"{v:.4g}" for v in values) + "]"


def test_01_lorentz_bound():
    vals = [mprime_lorentz21(e) for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    spread = max(vals) / min(vals) - 1
    ok = max(vals) <= 14.180 and spread <= 0.01
    record_acceptance(1, ok, f"||m'||_(2,1) = {_fmt(vals)} <= 14.180 (8 sqrt(pi) = {LORENTZ_BOUND:.4f}); spread {spread:.2e} <= 1e-2")
    assert ok


def test_02_concentration():
    res = check_concentration(1e-3)
    record_acceptance(2, res.passed, f"|int phi^2 |m'|^2 psi - pi psi(0)| = {res.value:.3e} <= {res.threshold:.3e}")
    assert res.passed


def test_03_closed_forms():
    res = check_closed_forms(128, 256, 1e-3)
    ok = all(r.passed for r in res)
    record_acceptance(3, ok, "; ".join(f"{r.name.split('.')[-1]} {r.value:.2e} < {r.threshold:.0e}" for r in res))
    assert ok


def test_04_cross_solver():
    eps = 10**-1.5
    grid = make_polar_grid(128, 256, grading=CFG.grading, focus=focus_for_epsilon(eps))
    f = bubble_density(grid, eps)
    d = relative_h1(solve_dirichlet_green(f), solve_dirichlet_spectral(f))
    n = relative_h1(solve_neumann_green(f), solve_neumann_spectral(f), "trace")
    ok = d < 1e-3 and n < 1e-3
    record_acceptance(4, ok, f"relative H1 Green vs spectral at 128x256: Dirichlet {d:.3e}, Neumann {n:.3e} < 1e-3")
    assert ok


def test_05_wente_boundedness(sweep_rows):
    eps = np.array([r.epsilon for r in sweep_rows])
    q = np.array([r.wente_ratio for r in sweep_rows])
    factor = q.max() / q.min()
    slope = np.polyfit(np.log(1 / eps), q, 1)[0] / q.mean()
    ok = factor < 3 and abs(slope) < 0.05
    record_acceptance(5, ok, f"(|u|_inf + |Du|_2)/|DV|_2^2 = {_fmt(q)}; factor {factor:.3f} < 3; relative slope {slope:.4f} < 0.05")
    assert ok


def test_06_neumann_blowup(sweep_rows):
    g = np.array([r.neumann_grad_l2 for r in sweep_rows])
    m = np.array([r.neumann_v_linf for r in sweep_rows])
    inc = bool(np.all(np.diff(g) > 0) and np.all(np.diff(m) > 0))
    gr, mr = g[-1] / g[0], m[-1] / m[0]
    ok = inc and gr >= 3 and mr >= 3
    record_acceptance(6, ok, f"||grad v|| = {_fmt(g)} (x{gr:.3f}, need 3); ||v||_inf = {_fmt(m)} (x{mr:.3f}, need 3); strictly increasing: {inc}")
    assert inc
    assert mr >= 3
    assert gr >= 3


@pytest.fixture(scope="module")
def robin_table():
    ladder = (1e-1, 10**-1.5, 1e-2)
    arcs = BoundaryArcs(CFG.arcs)
    assert arcs.contains(-0.5 * np.pi)
    table = {}
    for h in (CFG.fem_h, CFG.fem_h / 2):
        mesh = mesh_disc(h, arcs)
        loads = [load_vector(mesh, lambda z, e=e: jacobian_total(BubbleSpec(e), z), scale=e) for e in ladder]
        for c in CFG.coeffs:
            system = assemble(mesh, RobinCoeffs(*c))
            table[(c, h)] = [solve_robin(mesh, RobinCoeffs(*c), F, system=system).grad_l2() for F in loads]
    return table


def test_07_robin_blowup(robin_table):
    lines, ok = [], True
    for c in CFG.coeffs:
        coarse, fine = robin_table[(c, CFG.fem_h)], robin_table[(c, CFG.fem_h / 2)]
        this = bool(np.all(np.diff(coarse) > 0) and np.all(np.array(fine) > np.array(coarse)))
        ok &= this
        lines.append(f"{c}: {_fmt(coarse)} -> {_fmt(fine)}")
    record_acceptance(7, ok, "Robin ||grad v|| at h, h/2: " + "; ".join(lines))
    assert ok


def test_08_apriori_stability(sweep_rows):
    f1 = np.array([r.f_l1 for r in sweep_rows])
    d = np.array([r.dirichlet_grad_l15 for r in sweep_rows]) / f1
    n = np.array([r.neumann_grad_l15 for r in sweep_rows]) / f1
    ok = d.max() <= 2 * d[0] and n.max() <= 2 * n[0]
    record_acceptance(8, ok, f"||Du||_1.5/||f||_1: Dirichlet max/first {d.max() / d[0]:.3f}, Neumann max/first {n.max() / n[0]:.3f} <= 2")
    assert ok


def test_09_coercivity():
    mesh = mesh_disc(CFG.fem_h, BoundaryArcs(CFG.arcs))
    rng = np.random.default_rng(CFG.seed)
    worst = []
    for c in CFG.coeffs:
        rep = coercivity_check(assemble(mesh, RobinCoeffs(*c)), random_trial_functions(mesh, 100, rng))
        worst.append((c, rep.worst / rep.scale, rep.passed(1e-8)))
    ok = all(p for _, _, p in worst)
    record_acceptance(9, ok, "worst margin/scale over 100 trials: " + ", ".join(f"{c[1]:g},{c[2]:g}: {m:.1e}" for c, m, _ in worst))
    assert ok


def test_10_fem_order():
    orders = {c: observed_orders(manufactured_errors(RobinCoeffs(*c), hs=(0.1, 0.05, 0.025))) for c in CFG.coeffs}
    ok = all(np.all(o >= 0.9) for o in orders.values())
    record_acceptance(10, ok, "observed H1 orders: " + "; ".join(f"{c}: {_fmt(o)}" for c, o in orders.items()))
    assert ok


def test_11_glue_certificate():
    state, candidates = start_glue(CFG.glue_ladder, calibrate_at=CFG.glue_calibrate)
    failure = None
    for _ in range(3):
        try:
            glue_step(state, candidates, strict=True)
        except LadderExhausted as exc:
            failure = exc
            break
    checks_ok = all(all(level_passed(lv.checks).values()) for lv in state.levels)
    pairings = [pairing_growth(state, n)[0] for n in range(1, state.n + 1)]
    growing = all(a < b for a, b in zip(pairings, pairings[1:]))
    ok = failure is None and state.n == 3 and checks_ok and growing
    detail = f"levels completed {state.n}/3; checks ok {checks_ok}; pairings {_fmt(pairings)}"
    if failure is not None:
        detail += f"; {failure}"
    record_acceptance(11, ok, detail)
    assert failure is None, str(failure)
    assert checks_ok and growing


def test_12_representation_residual():
    worst = 0.0
    for c in REPRESENTATION_POLYS:
        u, g, lap = polynomial_callables(c)
        worst = max(worst, max(representation_residual(u, g, lap, y) for y in REPRESENTATION_POINTS))
    ok = worst < 1e-3
    record_acceptance(12, ok, f"max residual over {len(REPRESENTATION_POLYS)} polynomials (degree <= 4) x 5 points = {worst:.3e} < 1e-3")
    assert ok
