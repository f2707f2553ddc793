"""Inductive gluing of bubbles into one field pair with unbounded pairings.

The solution operator ``A`` (zero-mean Neumann solve by default) is applied
to Jacobian densities ``y``; images are compared in the gradient inner
product ``<u, v> = int grad u . grad v``.  Each level

1. projects the next candidate density ``x = da_m ^ db_m`` away from the
   images already chosen, ``(I - Q_n) x`` with ``P_n A (I - Q_n) = 0``;
2. corrects the field pair so its Jacobian reproduces the projected density
   up to a remainder ``R``;
3. rescales by ``lambda_n`` and checks the level properties

   (i)   ``||y_i||_1 <= 1``
   (ii)  ``<A y_i, A y_j> = 0`` for ``i != j``
   (iii) ``||A y_i|| >= c 2^{3i}``
   (1)   ``||h||_inf + ||dh||_{2,1} + ||k||_inf + ||dk||_{2,1} <= 1``
   (2)   ``dh ^ dk = y + R`` with ``||R||_2 <= 1``
   (3)   ``||dh||_2 + ||dk||_2 <= (1 + sum_{j<i} ||dh_j||_inf + ||dk_j||_inf)^{-1}``

``c`` is a calibration constant that places level 1 at a chosen bubble;
``c = 1`` gives the literal thresholds.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .disc import PolarGrid, ScalarField, boundary_trace, focus_for_epsilon, make_polar_grid
from .mobius import BubbleSpec, bubble_fields
from .modes import energy_inner
from .norms import lorentz21, lp_norm

Solver = Callable[[ScalarField], ScalarField]


class GlueError(RuntimeError):
    pass


class LadderExhausted(GlueError):
    def __init__(self, level: int, threshold: float, best: float, best_epsilon: float):
        self.level = level
        self.threshold = threshold
        self.best = best
        self.best_epsilon = best_epsilon
        super().__init__(
            f"level {level}: no candidate reaches {threshold:.6g}; "
            f"largest ||A(I-Q)x|| = {best:.6g} at eps = {best_epsilon:.3g}"
        )


def _default_solver(f: ScalarField) -> ScalarField:
    from .spectral import solve_neumann_spectral

    return solve_neumann_spectral(f)


def _wedge(ga: np.ndarray, gb: np.ndarray) -> np.ndarray:
    return ga[..., 0] * gb[..., 1] - ga[..., 1] * gb[..., 0]


@dataclass
class FieldPair:
    """Sampled ``(h, k)`` with exact gradients."""

    grid: PolarGrid
    h: np.ndarray
    k: np.ndarray
    grad_h: np.ndarray
    grad_k: np.ndarray

    def __add__(self, other: "FieldPair") -> "FieldPair":
        return FieldPair(self.grid, self.h + other.h, self.k + other.k,
                         self.grad_h + other.grad_h, self.grad_k + other.grad_k)

    def scaled(self, sh: float, sk: float | None = None) -> "FieldPair":
        sk = sh if sk is None else sk
        return FieldPair(self.grid, sh * self.h, sk * self.k, sh * self.grad_h, sk * self.grad_k)

    def jacobian(self) -> ScalarField:
        return ScalarField(self.grid, _wedge(self.grad_h, self.grad_k))

    def size(self) -> float:
        """``||h||_inf + ||dh||_{2,1} + ||k||_inf + ||dk||_{2,1}``."""
        w = self.grid.weights
        gh = np.linalg.norm(self.grad_h, axis=-1)
        gk = np.linalg.norm(self.grad_k, axis=-1)
        return float(np.abs(self.h).max() + lorentz21(gh, w) + np.abs(self.k).max() + lorentz21(gk, w))

    def grad_l2(self) -> float:
        w = self.grid.weights
        return float(np.sqrt(np.sum(w * np.sum(self.grad_h**2, -1))) + np.sqrt(np.sum(w * np.sum(self.grad_k**2, -1))))

    def grad_linf(self) -> float:
        return float(np.linalg.norm(self.grad_h, axis=-1).max() + np.linalg.norm(self.grad_k, axis=-1).max())


def normalized_bubble(spec: BubbleSpec, grid: PolarGrid) -> FieldPair:
    """Mean-free bubble pair scaled so that property (1) holds with equality."""
    bf = bubble_fields(spec, grid.points)
    pair = FieldPair(grid, bf.a - ScalarField(grid, bf.a).mean(), bf.b - ScalarField(grid, bf.b).mean(),
                     bf.grad_a, bf.grad_b)
    return pair.scaled(1.0 / pair.size())


@dataclass
class GlueLevel:
    epsilon: float
    y: ScalarField
    Ay: ScalarField
    Ay_norm: float
    pair: FieldPair
    R: ScalarField
    alpha: np.ndarray
    coeff_bound: float  # C_n of the previous levels (0 at level 1)
    lam: float
    threshold_scaled: float
    threshold_literal: float
    achieved: float  # ||A (I - Q_n) x|| of the chosen candidate
    checks: dict = field(default_factory=dict)


@dataclass
class GlueState:
    grid: PolarGrid
    solver: Solver
    calibration: float
    solver_norm: float  # C_A
    levels: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.levels)

    def inner(self, u: ScalarField, v: ScalarField) -> float:
        return energy_inner(u.values, v.values, self.grid, "trace")

    def gram(self) -> np.ndarray:
        ays = [lv.Ay for lv in self.levels]
        return np.array([[self.inner(a, b) for b in ays] for a in ays])


# ---------------------------------------------------------------------------
# projections

def _gram_solve(state: GlueState, rhs: np.ndarray) -> np.ndarray:
    g = state.gram()
    d = 1.0 / np.sqrt(np.diag(g))
    # condition of the correlation matrix: insensitive to the level scalings
    cond = np.linalg.cond(g * d[:, None] * d[None, :])
    if not np.isfinite(cond) or cond > 1e12:
        raise GlueError(f"Gram system of the images is ill-conditioned (cond = {cond:.3e})")
    dr = d.reshape((-1,) + (1,) * (np.ndim(rhs) - 1))
    return dr * np.linalg.solve(g * d[:, None] * d[None, :], dr * rhs)


def project_pn(state: GlueState, w: ScalarField) -> ScalarField:
    """Orthogonal projection of ``w`` onto ``span{A y_i}``."""
    if state.n == 0:
        return ScalarField(state.grid, np.zeros(state.grid.shape))
    coef = _gram_solve(state, np.array([state.inner(lv.Ay, w) for lv in state.levels]))
    out = np.zeros(state.grid.shape)
    for c, lv in zip(coef, state.levels):
        out += c * lv.Ay.values
    return ScalarField(state.grid, out)


def project_qn(state: GlueState, x: ScalarField, ax: ScalarField | None = None):
    """``Q_n x = sum alpha_i y_i`` with ``P_n A (x - Q_n x) = 0``.

    Returns ``(Q_n x, alpha)``.
    """
    if state.n == 0:
        return ScalarField(state.grid, np.zeros(state.grid.shape)), np.zeros(0)
    if ax is None:
        ax = state.solver(x)
    alpha = _gram_solve(state, np.array([state.inner(lv.Ay, ax) for lv in state.levels]))
    out = np.zeros(state.grid.shape)
    for a, lv in zip(alpha, state.levels):
        out += a * lv.y.values
    return ScalarField(state.grid, out), alpha


def coefficient_bound(state: GlueState) -> float:
    """``C_n = sup { sum |alpha_i(x)| : ||x||_1 <= 1 }`` on the grid.

    With ``<A y_j, A x> = int x (A y_j - m_j)``, ``m_j`` the boundary mean of
    ``A y_j``, each ``alpha_i`` is integration against a density ``d_i``; the
    supremum over the ``L^1`` ball is attained at point masses and equals
    ``max_s max_nodes |sum_i s_i d_i|`` over sign vectors ``s``.
    """
    if state.n == 0:
        return 0.0
    reps = np.array([lv.Ay.values - boundary_trace(lv.Ay).integral() / (2.0 * np.pi) for lv in state.levels])
    d = _gram_solve(state, reps.reshape(state.n, -1))
    best = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=state.n - 1):
        s = np.array((1.0,) + signs)
        best = max(best, float(np.abs(s @ d).max()))
    return best


# ---------------------------------------------------------------------------
# operator norm of A

def _probe_densities(grid: PolarGrid) -> list[ScalarField]:
    from scipy.special import jv, jnp_zeros

    w = grid.points
    r, t = np.abs(w), np.angle(w)
    probes = []
    for k in (1, 2, 3):
        j = jnp_zeros(k, 1)[0]
        probes.append(ScalarField(grid, jv(k, j * r) * np.cos(k * t)))
    probes.append(ScalarField(grid, np.ones(grid.shape)))
    for c, s in ((-0.5j, 0.2), (0.3, 0.1), (-0.8j, 0.1)):
        probes.append(ScalarField(grid, np.exp(-np.abs(w - c) ** 2 / (2 * s * s))))
    return probes


def solver_norm_estimate(grid: PolarGrid, solver: Solver, extra: Sequence[ScalarField] = ()) -> float:
    """``C_A = max ||grad A f||_2 / ||f||_2`` over a fixed probe set."""
    best = 0.0
    for f in list(_probe_densities(grid)) + list(extra):
        u = solver(f)
        num = np.sqrt(max(energy_inner(u.values, u.values, grid, "trace"), 0.0))
        best = max(best, num / lp_norm(f, 2.0))
    return float(best)


# ---------------------------------------------------------------------------
# the construction

def _check_level(state: GlueState, level: GlueLevel, tol: float = 1e-4) -> dict:
    i = state.n + 1
    w = state.grid.weights
    prev = sum(lv.pair.grad_linf() for lv in state.levels)
    checks = {}
    checks["(i)"] = (float(np.sum(w * np.abs(level.y.values))), 1.0)
    ortho = 0.0
    for lv in state.levels:
        ortho = max(ortho, abs(state.inner(lv.Ay, level.Ay)) / (lv.Ay_norm * level.Ay_norm))
    checks["(ii)"] = (ortho, tol)
    checks["(iii)"] = (level.Ay_norm, state.calibration * 2.0 ** (3 * i))
    checks["(1)"] = (level.pair.size(), 1.0 + 1e-9)
    resid = level.pair.jacobian().values - level.y.values - level.R.values
    scale = max(float(np.abs(level.y.values).max()), 1e-300)
    checks["(2)"] = (float(lp_norm(level.R, 2.0)), 1.0)
    checks["(2) identity"] = (float(np.abs(resid).max() / scale), 1e-10)
    checks["(3)"] = (level.pair.grad_l2(), 1.0 / (1.0 + prev))
    return checks


def level_passed(checks: dict) -> dict:
    out = {}
    for name, (value, bound) in checks.items():
        out[name] = value >= bound if name == "(iii)" else value <= bound
    return out


def _first_level(state: GlueState, candidates: list[tuple[float, FieldPair]], strict: bool) -> GlueLevel:
    threshold_literal = 2.0**3
    threshold = state.calibration * threshold_literal
    best = (-1.0, None, None, None)
    for eps, pair in candidates:
        y = pair.jacobian()
        ay = state.solver(y)
        norm = float(np.sqrt(state.inner(ay, ay)))
        if norm > best[0]:
            best = (norm, eps, pair, (y, ay))
        if norm >= threshold:
            best = (norm, eps, pair, (y, ay))
            break
    else:
        if strict:
            raise LadderExhausted(1, threshold, best[0], best[1])
    norm, eps, pair, (y, ay) = best
    zero = ScalarField(state.grid, np.zeros(state.grid.shape))
    return GlueLevel(eps, y, ay, norm, pair, zero, np.zeros(0), 0.0, 1.0, threshold, threshold_literal, norm)


def glue_step(state: GlueState, candidates: list[tuple[float, FieldPair]], strict: bool = True) -> GlueLevel:
    """Select, correct, rescale and append the next level.

    ``candidates`` are ``(epsilon, normalized pair)`` in ladder order.  With
    ``strict`` the first candidate reaching the threshold is used and
    :class:`LadderExhausted` is raised if none does; otherwise the candidate
    with the largest projected-out image is taken and the shortfall is left
    visible in check (iii).
    """
    n = state.n
    if n == 0:
        level = _first_level(state, candidates, strict)
        level.checks = _check_level(state, level)
        state.levels.append(level)
        return level

    cn = coefficient_bound(state)
    prev = sum(lv.pair.grad_linf() for lv in state.levels)
    lam = cn * (n + 3 + prev)
    threshold_literal = 2.0 ** (3 * (n + 1)) * lam**2
    threshold = state.calibration * threshold_literal

    chosen = None
    best = (-1.0, None)
    for eps, pair in candidates:
        x = pair.jacobian()
        ax = state.solver(x)
        qx, alpha = project_qn(state, x, ax)
        y_t = x - qx
        ay_t = ax - ScalarField(state.grid, sum(a * lv.Ay.values for a, lv in zip(alpha, state.levels)))
        norm = float(np.sqrt(max(state.inner(ay_t, ay_t), 0.0)))
        if norm > best[0]:
            best = (norm, eps)
            fallback = (eps, pair, y_t, ay_t, alpha, norm)
        if norm >= threshold:
            chosen = (eps, pair, y_t, ay_t, alpha, norm)
            break
    if chosen is None:
        if strict:
            raise LadderExhausted(n + 1, threshold, best[0], best[1])
        chosen = fallback
    eps, pair, y_t, ay_t, alpha, norm = chosen

    # h~ = a_m - sum alpha_i h_i,  k~ = b_m + sum k_i
    h_t = pair.h.copy()
    k_t = pair.k.copy()
    gh_t = pair.grad_h.copy()
    gk_t = pair.grad_k.copy()
    for a, lv in zip(alpha, state.levels):
        h_t -= a * lv.pair.h
        gh_t -= a * lv.pair.grad_h
        k_t += lv.pair.k
        gk_t += lv.pair.grad_k
    tilde = FieldPair(state.grid, h_t, k_t, gh_t, gk_t)
    r_t = tilde.jacobian() - y_t

    # dividing h and k by lambda divides their wedge by lambda^2
    lam2 = lam * lam
    level = GlueLevel(
        epsilon=eps,
        y=y_t / lam2,
        Ay=ay_t / lam2,
        Ay_norm=norm / lam2,
        pair=tilde.scaled(1.0 / lam),
        R=r_t / lam2,
        alpha=np.asarray(alpha),
        coeff_bound=cn,
        lam=lam,
        threshold_scaled=threshold,
        threshold_literal=threshold_literal,
        achieved=norm,
    )
    level.checks = _check_level(state, level)
    state.levels.append(level)
    return level


def glue_grid(ladder: Sequence[float], n_r: int = 256, n_theta: int = 512) -> PolarGrid:
    return make_polar_grid(n_r, n_theta, grading=0.5, focus=focus_for_epsilon(min(ladder)))


def start_glue(
    ladder: Sequence[float],
    grid: PolarGrid | None = None,
    solver: Solver | None = None,
    calibrate_at: float | None = 10**-1.5,
    spec_kwargs: dict | None = None,
):
    """Prepare the candidates and an empty state.

    ``calibrate_at`` picks the bubble whose image norm equals the level-1
    threshold ``c 2^3``; ``None`` keeps the literal thresholds (``c = 1``).
    """
    ladder = [float(e) for e in ladder]
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("epsilon ladder must be strictly decreasing")
    grid = grid or glue_grid(ladder)
    solver = solver or _default_solver
    spec_kwargs = spec_kwargs or {}
    candidates = [(e, normalized_bubble(BubbleSpec(e, **spec_kwargs), grid)) for e in ladder]
    calibration = 1.0
    if calibrate_at is not None:
        pair = normalized_bubble(BubbleSpec(calibrate_at, **spec_kwargs), grid)
        ay = solver(pair.jacobian())
        calibration = float(np.sqrt(energy_inner(ay.values, ay.values, grid, "trace"))) / 2.0**3
        calibration *= 1.0 - 1e-12
    extra = [pair.jacobian() for _, pair in candidates]
    c_a = solver_norm_estimate(grid, solver, extra)
    return GlueState(grid, solver, calibration, c_a), candidates


def partial_sums(state: GlueState, n: int):
    """``a = sum_{i<=n} 2^-i h_i``, ``b = sum 2^-i k_i`` and the unit probes ``A y_i / ||A y_i||``."""
    if n > state.n:
        raise ValueError(f"state has only {state.n} levels")
    grid = state.grid
    total = FieldPair(grid, np.zeros(grid.shape), np.zeros(grid.shape), np.zeros(grid.shape + (2,)), np.zeros(grid.shape + (2,)))
    probes = []
    for i, lv in enumerate(state.levels[:n], start=1):
        total = total + lv.pair.scaled(2.0**-i)
        probes.append(lv.Ay / lv.Ay_norm)
    return total, probes


def pairing_growth(state: GlueState, n: int, depth: int | None = None) -> tuple[float, float]:
    """``<f_n, A(da ^ db)>`` with ``(a, b)`` summed over ``depth`` levels.

    Returns ``(value, C_A)``.
    """
    if n == 0:
        return 0.0, state.solver_norm
    depth = state.n if depth is None else depth
    pair, _ = partial_sums(state, depth)
    image = state.solver(pair.jacobian())
    _, probes = partial_sums(state, n)
    value = sum(2.0**-i * state.inner(p, image) for i, p in enumerate(probes, start=1))
    return float(value), state.solver_norm


GLUE_COLUMNS = [
    "level", "epsilon", "Ay_norm", "R_l2", "alpha", "coeff_bound", "lambda",
    "threshold_literal", "threshold_scaled", "achieved", "pairing", "checks_passed",
]


def glue_rows(state: GlueState) -> list[dict]:
    rows = []
    for i, lv in enumerate(state.levels, start=1):
        ok = level_passed(lv.checks)
        rows.append({
            "level": i,
            "epsilon": lv.epsilon,
            "Ay_norm": lv.Ay_norm,
            "R_l2": lp_norm(lv.R, 2.0),
            "alpha": " ".join(f"{a:.17g}" for a in lv.alpha),
            "coeff_bound": lv.coeff_bound,
            "lambda": lv.lam,
            "threshold_literal": lv.threshold_literal,
            "threshold_scaled": lv.threshold_scaled,
            "achieved": lv.achieved,
            "pairing": pairing_growth(state, i)[0],
            "checks_passed": "all" if all(ok.values()) else " ".join(k for k, v in ok.items() if not v) + " failed",
        })
    return rows


def write_glue_csv(state: GlueState, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GLUE_COLUMNS)
        for row in glue_rows(state):
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in (row[c] for c in GLUE_COLUMNS)])


def run_glue(depth: int, ladder: Sequence[float], strict: bool = True, **kwargs) -> GlueState:
    """Drive the construction to ``depth`` levels (at most 4)."""
    if not 0 <= depth <= 4:
        raise ValueError("glue depth must lie in 0..4")
    state, candidates = start_glue(ladder, **kwargs)
    for _ in range(depth):
        glue_step(state, candidates, strict=strict)
    return state
