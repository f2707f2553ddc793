"""Polar quadrature grids, sampled fields and the half-plane bubble patch.

A :class:`PolarGrid` is a tensor grid in *computational* polar coordinates
``zeta = r e^{i theta}`` with uniform angles and radial nodes at the midpoints
of cells in ``s = r^2``.  Two optional gradings are supported:

* ``grading`` stretches the ``s`` cells towards the boundary circle with a
  power law;
* ``focus`` pulls the grid back through the disc automorphism
  ``T(zeta) = (zeta + a) / (1 + conj(a) zeta)``, ``a = -i (1 - delta)``, which
  fixes ``-e_2`` and ``+e_2`` and magnifies a neighbourhood of ``-e_2`` by
  ``1 / focus``.

Because ``T`` is conformal, Dirichlet energies, Laplacians (up to the factor
``|T'|^2``) and boundary arclengths (up to ``|T'|``) transform explicitly, so
the solvers work on the uniform computational grid while every field value
lives at the physical point ``w = T(zeta)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


_EDGE_GAUSS = 16


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class PolarGrid:
    n_r: int
    n_theta: int
    grading: float = 0.0
    focus: float = 1.0

    def __post_init__(self):
        if self.n_r < 4 or self.n_theta < 4:
            raise GridError(f"grid too small: n_r={self.n_r}, n_theta={self.n_theta}")
        if self.grading < 0:
            raise GridError("grading must be non-negative")
        if not 0 < self.focus <= 1:
            raise GridError("focus must lie in (0, 1]")

    # -- computational coordinates -------------------------------------
    @cached_property
    def s_edges(self) -> np.ndarray:
        t = np.linspace(0.0, 1.0, self.n_r + 1)
        return 1.0 - (1.0 - t) ** (1.0 + self.grading)

    @cached_property
    def radii(self) -> np.ndarray:
        e = self.s_edges
        return np.sqrt(0.5 * (e[1:] + e[:-1]))

    @cached_property
    def face_radii(self) -> np.ndarray:
        """Cell boundaries in ``r``; ``face_radii[0] = 0``, ``face_radii[-1] = 1``."""
        return np.sqrt(self.s_edges)

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        """``int r dr`` over each radial cell."""
        return 0.5 * np.diff(self.s_edges)

    @cached_property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @cached_property
    def zeta(self) -> np.ndarray:
        return self.radii[:, None] * np.exp(1j * self.angles)[None, :]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    # -- conformal pull-back --------------------------------------------
    @property
    def shift(self) -> complex:
        delta = 2.0 * self.focus / (1.0 + self.focus)
        return -1j * (1.0 - delta)

    def to_physical(self, zeta):
        a = self.shift
        zeta = np.asarray(zeta, dtype=complex)
        return (zeta + a) / (1.0 + np.conj(a) * zeta)

    def to_computational(self, w):
        a = self.shift
        w = np.asarray(w, dtype=complex)
        return (w - a) / (1.0 - np.conj(a) * w)

    def map_derivative(self, zeta):
        a = self.shift
        zeta = np.asarray(zeta, dtype=complex)
        return (1.0 - abs(a) ** 2) / (1.0 + np.conj(a) * zeta) ** 2

    @cached_property
    def points(self) -> np.ndarray:
        """Physical node positions ``w = T(zeta)`` (complex)."""
        return self.to_physical(self.zeta)

    @cached_property
    def dmap(self) -> np.ndarray:
        return self.map_derivative(self.zeta)

    @cached_property
    def comp_weights(self) -> np.ndarray:
        return np.broadcast_to(self.cell_volumes[:, None] * self.dtheta, self.shape).copy()

    @cached_property
    def weights(self) -> np.ndarray:
        """Physical area of each cell's image under ``T``.

        Computed as ``(1/2) Im oint conj(w) dw`` over the mapped cell edges with
        Gauss-Legendre nodes; shared edges cancel, so the weights sum to ``pi``
        up to rounding however strongly the map stretches a cell.
        """
        if self.focus == 1.0:
            return self.comp_weights
        t, gw = np.polynomial.legendre.leggauss(_EDGE_GAUSS)
        t, gw = 0.5 * (t + 1.0), 0.5 * gw
        rho = self.face_radii
        phi = self.angles - 0.5 * self.dtheta

        def flux(zeta, dzeta):
            w = self.to_physical(zeta)
            return 0.5 * np.imag(np.conj(w) * self.map_derivative(zeta) * dzeta)

        # arcs |zeta| = rho_j from phi_k to phi_{k+1}
        ang = phi[None, :, None] + self.dtheta * t[None, None, :]
        z = rho[:, None, None] * np.exp(1j * ang)
        arcs = np.sum(flux(z, 1j * z * self.dtheta) * gw, axis=-1)
        # the outer circle maps onto the unit circle, where the flux is d(arg w) / 2
        # with the continuous lift arg w = phi + 2 arg(1 + a e^{-i phi})
        ends = np.append(phi, phi[0] + 2.0 * np.pi)
        lift = ends + 2.0 * np.angle(1.0 + self.shift * np.exp(-1j * ends))
        arcs[-1] = 0.5 * np.diff(lift)
        # rays arg zeta = phi_k from rho_j to rho_{j+1}
        e = np.exp(1j * phi)[None, :, None]
        dr = np.diff(rho)[:, None, None]
        z = (rho[:-1, None, None] + dr * t[None, None, :]) * e
        rays = np.sum(flux(z, dr * e) * gw, axis=-1)
        return arcs[1:] - arcs[:-1] + rays - np.roll(rays, -1, axis=1)

    @cached_property
    def cell_jacobian(self) -> np.ndarray:
        """Cell-averaged ``|T'|^2``: physical over computational cell area."""
        return self.weights / self.comp_weights

    @cached_property
    def boundary_zeta(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @cached_property
    def boundary_points(self) -> np.ndarray:
        return self.to_physical(self.boundary_zeta)

    @cached_property
    def boundary_dmap(self) -> np.ndarray:
        """``|T'|`` on the boundary circle: physical arclength per unit angle."""
        return np.abs(self.map_derivative(self.boundary_zeta))

    @property
    def boundary_weights(self) -> np.ndarray:
        return np.full(self.n_theta, self.dtheta)

    # -- field helpers -------------------------------------------------
    def sample(self, func) -> "ScalarField":
        """Sample ``func(w)`` (vectorised over complex physical points)."""
        return ScalarField(self, np.asarray(func(self.points), dtype=float))

    def constant(self, c: float) -> "ScalarField":
        return ScalarField(self, np.full(self.shape, float(c)))


def make_polar_grid(n_r: int, n_theta: int, grading: float = 0.0, focus: float = 1.0) -> PolarGrid:
    return PolarGrid(int(n_r), int(n_theta), float(grading), float(focus))


def focus_for_epsilon(epsilon: float) -> float:
    """Magnification that balances the bubble scale against the cutoff annulus.

    In computational coordinates the bubble has width ``~ epsilon / focus``
    while the cutoff annulus is squeezed towards ``+e_2`` with width
    ``~ 4 focus``; equating the two gives ``focus = sqrt(epsilon) / 2``.
    """
    return float(min(1.0, 0.5 * np.sqrt(epsilon)))


@dataclass
class ScalarField:
    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridError(f"value shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite values")

    def _check(self, other: "ScalarField"):
        if other.grid != self.grid:
            raise GridError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            self._check(c)
            return ScalarField(self.grid, self.values * c.values)
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __truediv__(self, c: float):
        return ScalarField(self.grid, self.values / c)

    def mean(self) -> float:
        return integrate(self) / float(np.sum(self.grid.weights))


@dataclass
class GradField:
    grid: PolarGrid
    vectors: np.ndarray  # (n_r, n_theta, 2), physical Cartesian components

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.shape != self.grid.shape + (2,):
            raise GridError(f"vector shape {self.vectors.shape} does not match grid")
        if not np.all(np.isfinite(self.vectors)):
            raise GridError("gradient contains non-finite values")

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.hypot(self.vectors[..., 0], self.vectors[..., 1]))

    def __add__(self, other: "GradField"):
        return GradField(self.grid, self.vectors + other.vectors)

    def __sub__(self, other: "GradField"):
        return GradField(self.grid, self.vectors - other.vectors)

    def __mul__(self, c: float):
        return GradField(self.grid, self.vectors * c)

    __rmul__ = __mul__

    def __truediv__(self, c: float):
        return GradField(self.grid, self.vectors / c)


def integrate(f: ScalarField, grid: PolarGrid | None = None) -> float:
    if grid is not None and grid != f.grid:
        raise GridError("field is bound to a different grid")
    return float(np.sum(f.values * f.grid.weights))


@dataclass
class BoundaryTrace:
    grid: PolarGrid
    values: np.ndarray  # at boundary_points

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights in the computational angle."""
        return self.grid.boundary_weights

    @property
    def arc_weights(self) -> np.ndarray:
        """Physical arclength weights."""
        return self.grid.boundary_weights * self.grid.boundary_dmap

    def integral(self) -> float:
        return float(np.sum(self.values * self.arc_weights))


def _extrapolation_weights(grid: PolarGrid) -> np.ndarray:
    # quadratic Lagrange extrapolation from the three outermost rings to r = 1
    x = grid.radii[-3:]
    w = np.empty(3)
    for j in range(3):
        others = [x[k] for k in range(3) if k != j]
        w[j] = np.prod([(1.0 - o) / (x[j] - o) for o in others])
    return w


def boundary_trace(f: ScalarField) -> BoundaryTrace:
    w = _extrapolation_weights(f.grid)
    return BoundaryTrace(f.grid, w @ f.values[-3:, :])


def _radial_derivative(grid: PolarGrid, values: np.ndarray, trace: np.ndarray) -> np.ndarray:
    r = np.concatenate([grid.radii, [1.0]])
    u = np.concatenate([values, trace[None, :]], axis=0)
    d = np.empty_like(values)
    # three-point nonuniform centred formula at nodes 1..n_r-1
    h0 = r[1:-1] - r[:-2]
    h1 = r[2:] - r[1:-1]
    d[1:] = (
        -h1[:, None] / (h0 * (h0 + h1))[:, None] * u[:-2]
        + ((h1 - h0) / (h0 * h1))[:, None] * u[1:-1]
        + h0[:, None] / (h1 * (h0 + h1))[:, None] * u[2:]
    )
    # one-sided second-order formula at the innermost ring
    x0, x1, x2 = r[0], r[1], r[2]
    d[0] = (
        u[0] * (2 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + u[1] * (x0 - x2) / ((x1 - x0) * (x1 - x2))
        + u[2] * (x0 - x1) / ((x2 - x0) * (x2 - x1))
    )
    return d


def gradient_fd(f: ScalarField) -> GradField:
    """Centred polar finite differences mapped to physical Cartesian components."""
    grid = f.grid
    u = f.values
    trace = boundary_trace(f).values
    u_r = _radial_derivative(grid, u, trace)
    u_t = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2.0 * grid.dtheta)
    g_zeta = np.exp(1j * grid.angles)[None, :] * (u_r + 1j * u_t / grid.radii[:, None])
    g = g_zeta / np.conj(grid.dmap)
    return GradField(grid, np.stack([g.real, g.imag], axis=-1))


def write_field_csv(f: ScalarField, path) -> Path:
    """Snapshot ``(r, theta, value)`` at the physical node positions."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pts = f.grid.points.ravel()
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "theta", "value"])
        for p, v in zip(pts, f.values.ravel()):
            writer.writerow([f"{abs(p):.17g}", f"{np.angle(p) % (2 * np.pi):.17g}", f"{v:.17g}"])
    return path


@dataclass
class HalfPlanePatch:
    """Annular-polar Gauss quadrature on ``H cap B_outer(0)``.

    Radial breakpoints are dyadic multiples of ``epsilon / 8`` so the
    ``|m'_eps|^2`` spike at the origin is resolved without global refinement.
    """

    z: np.ndarray
    weights: np.ndarray
    epsilon: float
    outer: float
    extra: tuple = field(default=())

    @property
    def disc_points(self) -> np.ndarray:
        return self.z - 1j

    @property
    def in_disc(self) -> np.ndarray:
        """Mask of nodes inside the translated disc ``D + i``."""
        return np.abs(self.z - 1j) <= 1.0


def make_half_plane_patch(
    epsilon: float,
    outer: float,
    breakpoints=(),
    n_radial: int = 8,
    n_angular: int = 64,
) -> HalfPlanePatch:
    if outer <= 0 or epsilon <= 0:
        raise GridError("epsilon and outer radius must be positive")
    base = epsilon / 8.0
    radii = [0.0]
    r = base
    while r < outer:
        radii.append(r)
        r *= 2.0
    radii.append(outer)
    radii.extend(b for b in breakpoints if 0 < b < outer)
    radii = np.unique(np.asarray(radii))
    xg, wg = np.polynomial.legendre.leggauss(n_radial)
    lo, hi = radii[:-1, None], radii[1:, None]
    rho = 0.5 * (hi - lo) * xg[None, :] + 0.5 * (hi + lo)
    w_rho = 0.5 * (hi - lo) * wg[None, :] * rho
    xa, wa = np.polynomial.legendre.leggauss(n_angular)
    theta = 0.5 * np.pi * (xa + 1.0)
    w_theta = 0.5 * np.pi * wa
    rho = rho.ravel()
    w_rho = w_rho.ravel()
    z = rho[:, None] * np.exp(1j * theta)[None, :]
    w = w_rho[:, None] * w_theta[None, :]
    return HalfPlanePatch(z.ravel(), w.ravel(), float(epsilon), float(outer), tuple(breakpoints))
