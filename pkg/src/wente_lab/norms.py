"""Lebesgue, Lorentz and negative Sobolev norms of sampled fields.

Every measurement works on a weighted sample set: the nodes of a
:class:`~wente_lab.disc.PolarGrid` with their area weights, or any
``(values, weights)`` pair such as a half-plane patch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .disc import HalfPlanePatch, ScalarField, make_half_plane_patch
from .mobius import mobius_eval
from .modes import dirichlet_energy


@dataclass
class NormReport:
    linf: float
    l2: float
    lp: dict = field(default_factory=dict)
    l21: float = 0.0
    hminus1: float | None = None

    def __post_init__(self):
        entries = [self.linf, self.l2, self.l21, *self.lp.values()]
        if self.hminus1 is not None:
            entries.append(self.hminus1)
        if any(not (e >= 0) for e in entries):
            raise ValueError("norms must be non-negative")


def _samples(f, weights=None) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(f, ScalarField):
        if weights is not None:
            raise ValueError("a ScalarField carries its own weights")
        return np.abs(f.values).ravel(), f.grid.weights.ravel()
    if weights is None:
        raise ValueError("raw sample arrays need explicit weights")
    v = np.abs(np.asarray(f, dtype=float)).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.shape != w.shape:
        raise ValueError("values and weights differ in size")
    return v, w


def lp_norm(f, p: float, weights=None) -> float:
    """Quadrature ``L^p`` norm; ``p = inf`` gives the maximum modulus."""
    if not p >= 1:
        raise ValueError(f"p must be at least 1, got {p}")
    v, w = _samples(f, weights)
    if np.isinf(p):
        return float(v.max(initial=0.0))
    return float(np.sum(w * v**p) ** (1.0 / p))


def distribution_function(f, t: float, weights=None) -> float:
    """``mu(t)``: total weight of the nodes with ``|f| > t``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    v, w = _samples(f, weights)
    return float(np.sum(w[v > t]))


def lorentz21(f, weights=None, floor: float = 1e-8) -> float:
    """``2 int_0^inf mu(t)^{1/2} dt`` for the sampled distribution function.

    On a sample set ``mu`` is a step function that jumps at the sorted node
    values, so the integral is a finite sum.  Values below ``floor * linf``
    are cut off; their contribution is at most ``2 floor linf |D|^{1/2}``.
    """
    v, w = _samples(f, weights)
    top = v.max(initial=0.0)
    if top == 0.0:
        return 0.0
    order = np.argsort(-v, kind="stable")
    v = v[order]
    mu = np.cumsum(w[order])
    lower = np.maximum(np.append(v[1:], 0.0), floor * top)
    steps = np.clip(v - lower, 0.0, None)
    return float(2.0 * np.sum(np.sqrt(mu) * steps))


def hminus1(f: ScalarField, solver: Callable[[ScalarField], ScalarField] | None = None) -> float:
    """``||grad u||_2`` where ``-Laplace u = f``, ``u = 0`` on the circle.

    This is the norm of ``f`` as a functional on ``H^1_0``.
    """
    if solver is None:
        from .spectral import solve_dirichlet_spectral as solver
    u = solver(f)
    return float(np.sqrt(max(dirichlet_energy(u.values, u.grid, "zero"), 0.0)))


def norm_report(f, weights=None, ps=(1.0, 1.5, 2.0), with_hminus1: bool = False, solver=None) -> NormReport:
    lp = {float(p): lp_norm(f, p, weights) for p in ps}
    h = None
    if with_hminus1:
        if not isinstance(f, ScalarField):
            raise ValueError("hminus1 needs a field on a disc grid")
        h = hminus1(f, solver)
    return NormReport(
        linf=lp_norm(f, np.inf, weights),
        l2=lp_norm(f, 2.0, weights),
        lp=lp,
        l21=lorentz21(f, weights),
        hminus1=h,
    )


# ---------------------------------------------------------------------------
# |m_eps'| on the half-plane

def mprime_patch(epsilon: float, outer_factor: float = 4096.0, n_radial: int = 8, n_angular: int = 64) -> tuple[HalfPlanePatch, np.ndarray]:
    """Patch ``H cap B_R(0)`` with ``R = outer_factor * eps`` and ``|m_eps'|`` on it."""
    patch = make_half_plane_patch(epsilon, outer_factor * epsilon, n_radial=n_radial, n_angular=n_angular)
    return patch, np.abs(mobius_eval(patch.z, epsilon)[1])


def mprime_lorentz21(epsilon: float, outer_factor: float = 4096.0, tail: bool = True) -> float:
    """``||m_eps'||_{L^{2,1}(H)}`` from the patch, optionally with the far-field tail.

    Beyond ``R`` the superlevel sets are half discs, ``mu(t) = pi eps / t``.
    Truncating at ``R`` replaces ``mu`` by ``pi R^2 / 2`` for
    ``t < 2 eps / R^2``; the missing amount is ``2 sqrt(2 pi) eps / R``.
    """
    patch, v = mprime_patch(epsilon, outer_factor)
    value = lorentz21(v, patch.weights)
    if tail:
        value += 2.0 * np.sqrt(2.0 * np.pi) / outer_factor
    return value


def concentration_integral(spec, psi, n_radial: int = 8, n_angular: int = 64) -> float:
    """``int_H phi^2 |m_eps'|^2 psi``; tends to ``pi psi(0)`` as ``eps -> 0``.

    ``psi`` takes complex half-plane points.
    """
    from .mobius import cutoff

    patch = make_half_plane_patch(spec.epsilon, spec.r0, breakpoints=(spec.plateau_radius,),
                                  n_radial=n_radial, n_angular=n_angular)
    phi, _ = cutoff(patch.z, spec)
    dm = mobius_eval(patch.z, spec.epsilon)[1]
    return float(np.sum(patch.weights * phi**2 * np.abs(dm) ** 2 * psi(patch.z)))
