"""Green functions of the unit disc and quadrature-based Poisson solves.

Sign conventions
----------------
``(1/2pi) ln|x - y|`` is the fundamental solution of ``+Laplace``, so the
solution of ``-Laplace u = f`` is ``u = -int G f``.

The Neumann function used for solves carries the quadratic correction
``-(|x|^2 + |y|^2) / (4 pi)``, which gives ``Laplace_x G_N = delta_y - 1/pi``
and zero normal derivative on the circle.  The variant with coefficient
``1/4`` is available through ``printed=True``; its normal derivative is the
constant ``1/(2pi) - 1/2`` and it does not reproduce functions through the
representation formula.

Grid solves
-----------
Both Green functions are invariant in form under rotations, so on a
:class:`~wente_lab.disc.PolarGrid` they expand in angular modes with explicit
radial kernels ``g_k(r, rho)``.  The radial integral ``int g_k f_k r dr`` is
done by product integration: ``f_k`` is interpolated piecewise linearly and
the kernel is integrated exactly enough by Gauss-Legendre on every interval.
Target radii are nodes, so the logarithmic kink of ``g_k`` at ``r = rho``
always falls on an interval end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disc import PolarGrid, ScalarField
from .modes import discrete_harmonics, from_modes, radial_operator, to_modes, wavenumbers


class SingularInputError(ValueError):
    pass


def _as_xy(p):
    p = np.asarray(p)
    if np.iscomplexobj(p):
        return p.real, p.imag
    if p.shape and p.shape[-1] == 2 and p.dtype != object:
        return p[..., 0], p[..., 1]
    p = p.astype(complex)
    return p.real, p.imag


def _log_terms(x, y):
    x1, x2 = _as_xy(x)
    y1, y2 = _as_xy(y)
    d2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    if np.any(d2 == 0):
        raise SingularInputError("Green function evaluated on the diagonal x = y")
    # |y| |x - y*| written without dividing by |y|, valid at y = 0
    xx = x1 * x1 + x2 * x2
    yy = y1 * y1 + y2 * y2
    image2 = xx * yy - 2.0 * (x1 * y1 + x2 * y2) + 1.0
    return 0.5 * np.log(d2), 0.5 * np.log(image2), xx, yy


def green_dirichlet(x, y):
    """``G_D(x, y) = (1/2pi) [ln|x - y| - ln(|y| |x - y*|)]``, ``y* = y / |y|^2``."""
    direct, image, _, _ = _log_terms(x, y)
    out = (direct - image) / (2.0 * np.pi)
    return float(out) if np.ndim(out) == 0 else out


def green_neumann(x, y, printed: bool = False):
    """Neumann function of the disc.

    ``(1/2pi)[ln|x - y| + ln(|y||x - y*|)] - c (|x|^2 + |y|^2)`` with
    ``c = 1/(4pi)`` (default) or ``c = 1/4`` when ``printed`` is true.
    """
    direct, image, xx, yy = _log_terms(x, y)
    c = 0.25 if printed else 0.25 / np.pi
    out = (direct + image) / (2.0 * np.pi) - c * (xx + yy)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# radial mode kernels

def _mode_kernel(kind: str, k: int, r, rho):
    """Coefficient of ``e^{ik(theta - phi)}`` in the expansion of ``G(x, y)``.

    ``r = |x|``, ``rho = |y|``; broadcasting over both.
    """
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    lo = np.minimum(r, rho)
    hi = np.maximum(r, rho)
    if k == 0:
        g = np.log(hi) / (2.0 * np.pi)
        if kind == "neumann":
            g = g - (r * r + rho * rho) / (4.0 * np.pi)
        return g
    ratio = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 0.0) ** k
    prod = (r * rho) ** k
    if kind == "dirichlet":
        return (prod - ratio) / (4.0 * np.pi * k)
    return -(prod + ratio) / (4.0 * np.pi * k)


def _product_integration(grid: PolarGrid, f_modes: np.ndarray, kind: str, n_gauss: int = 8) -> np.ndarray:
    """``-2pi int_0^1 g_k(r, r_i) f_k(r) r dr`` for every mode and node."""
    r_nodes = grid.radii
    n = r_nodes.size
    ks = wavenumbers(grid.n_theta)
    p = np.concatenate([[0.0], r_nodes, [1.0]])
    h = np.diff(p)
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    t = 0.5 * (xg + 1.0)
    rg = p[:-1, None] + h[:, None] * t[None, :]  # (n+1, ng)
    wr = (0.5 * h[:, None] * wg[None, :]) * rg
    left = wr * (1.0 - t)[None, :]  # weight against the value at p[m]
    right = wr * t[None, :]  # weight against the value at p[m+1]

    # nodal values on the partition points, per mode
    vals = np.empty((ks.size, n + 2), dtype=complex)
    vals[:, 1:-1] = f_modes
    vals[:, 0] = np.where(ks == 0, f_modes[:, 0], 0.0)
    slope = (f_modes[:, -1] - f_modes[:, -2]) / (r_nodes[-1] - r_nodes[-2])
    vals[:, -1] = f_modes[:, -1] + slope * (1.0 - r_nodes[-1])

    out = np.empty((ks.size, n), dtype=complex)
    abs_k = np.abs(ks)
    for kk in np.unique(abs_k):
        g = _mode_kernel(kind, int(kk), rg[None, :, :], r_nodes[:, None, None])  # (n, n+1, ng)
        a = np.einsum("img,mg->im", g, left)
        b = np.einsum("img,mg->im", g, right)
        idx = np.nonzero(abs_k == kk)[0]
        v = vals[idx]
        out[idx] = -2.0 * np.pi * (v[:, :-1] @ a.T + v[:, 1:] @ b.T)
    return out


def _comp_density(f: ScalarField) -> np.ndarray:
    # the Laplacian transforms with |T'|^2; use its cell average
    return f.values * f.grid.cell_jacobian


def solve_dirichlet_green(f: ScalarField) -> ScalarField:
    """``u(y) = -int_D G_D(x, y) f(x) dA(x)`` on the grid nodes.

    ``G_D`` is invariant under disc automorphisms, so on a focused grid the
    same kernel applies in computational coordinates.
    """
    grid = f.grid
    modes = to_modes(_comp_density(f))
    u = _product_integration(grid, modes, "dirichlet")
    return ScalarField(grid, from_modes(u))


def compatible_flux(grid: PolarGrid, total: float) -> np.ndarray:
    """Computational-angle flux density for a constant physical flux.

    The constant is ``-(1/2pi) int f`` (see the module notes on the sign); on
    a focused grid it is weighted by ``|T'|`` and renormalised so the discrete
    boundary integral equals ``-total`` exactly.
    """
    jac = grid.boundary_dmap
    return -total * jac / np.sum(jac * grid.dtheta)


def solve_neumann_green(f: ScalarField) -> ScalarField:
    """Zero-mean solution of ``-Laplace v = f`` with constant compatible flux.

    Built from the representation formula
    ``v(y) - mean(v) = -int_{dD} G_N dv/dnu + int_D G_N Laplace v``.
    """
    from .disc import integrate

    grid = f.grid
    total = integrate(f)
    flux = compatible_flux(grid, total)
    fmodes = to_modes(_comp_density(f))
    v = _product_integration(grid, fmodes, "neumann")
    gk = np.fft.fft(flux) / grid.n_theta
    ks = wavenumbers(grid.n_theta)
    for i, k in enumerate(ks):
        v[i] -= 2.0 * np.pi * gk[i] * _mode_kernel("neumann", abs(int(k)), 1.0, grid.radii)
    out = ScalarField(grid, from_modes(v))
    return out - out.mean()


# ---------------------------------------------------------------------------
# boundary flux of a Dirichlet solution

@dataclass
class BoundaryFlux:
    """Normal derivative of a Dirichlet solution as a boundary density.

    ``samples`` are physical flux densities at ``grid.boundary_points`` and
    ``mean = (1/2pi) int_{dD} du/dnu``.
    """

    grid: PolarGrid
    samples: np.ndarray
    mean: float

    @property
    def computational(self) -> np.ndarray:
        """Flux per unit computational angle."""
        return self.samples * self.grid.boundary_dmap

    def total(self) -> float:
        return float(np.sum(self.computational) * self.grid.dtheta)


def neumann_flux(u: ScalarField, f: ScalarField) -> BoundaryFlux:
    """Boundary flux from ``int_{dD} du/dnu psi = int grad u . grad psi - f psi``.

    The test functions are discrete harmonic extensions of the boundary modes
    ``e^{-ik theta}``, so each pairing isolates one Fourier coefficient.
    """
    grid = u.grid
    op = radial_operator(grid)
    ks = wavenumbers(grid.n_theta)
    psi = discrete_harmonics(grid)
    um = to_modes(u.values)
    fm = to_modes(_comp_density(f))
    zero = np.zeros(ks.size, dtype=complex)
    one = np.ones(ks.size)
    pairing = op.energy(um, ks, zero, psi, one) - np.sum(op.volumes[None, :] * fm * psi, axis=1)
    comp = np.real(np.fft.ifft(pairing * grid.n_theta))
    samples = comp / grid.boundary_dmap
    mean = float(np.sum(comp) * grid.dtheta / (2.0 * np.pi))
    return BoundaryFlux(grid, samples, mean)


# ---------------------------------------------------------------------------
# pointwise quadrature around a singular point

def _disc_rule_about(y: complex, n_angular: int = 128, n_radial: int = 24):
    """Polar Gauss rule on the unit disc centred at the interior point ``y``."""
    phi = 2.0 * np.pi * np.arange(n_angular) / n_angular
    e = np.exp(1j * phi)
    yd = (np.conj(e) * y).real
    length = -yd + np.sqrt(yd**2 + 1.0 - abs(y) ** 2)
    xg, wg = np.polynomial.legendre.leggauss(n_radial)
    breaks = np.array([0.0, 1 / 64, 1 / 16, 1 / 4, 1.0])
    rs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        rs.append(a + (b - a) * 0.5 * (xg + 1))
        ws.append((b - a) * 0.5 * wg)
    t = np.concatenate(rs)
    wt = np.concatenate(ws)
    rho = length[:, None] * t[None, :]
    w = (2.0 * np.pi / n_angular) * length[:, None] * wt[None, :] * rho
    x = y + rho * e[:, None]
    return x.ravel(), w.ravel()


def green_potential(kernel, density, y: complex, n_angular: int = 128, n_radial: int = 24) -> float:
    """``int_D kernel(x, y) density(x) dA(x)`` at one interior point ``y``."""
    x, w = _disc_rule_about(complex(y), n_angular, n_radial)
    return float(np.sum(kernel(x, y) * density(x) * w))


def representation_residual(u, grad_u, lap_u, y: complex, n_boundary: int = 512) -> float:
    """Residual of ``u(y) - mean(u) = -int_{dD} G_N du/dnu + int_D G_N Laplace u``."""
    y = complex(y)
    theta = 2.0 * np.pi * np.arange(n_boundary) / n_boundary
    xb = np.exp(1j * theta)
    g = grad_u(xb)
    dudnu = g[..., 0] * xb.real + g[..., 1] * xb.imag
    boundary = np.sum(green_neumann(xb, y) * dudnu) * (2.0 * np.pi / n_boundary)
    volume = green_potential(green_neumann, lap_u, y)
    xm, wm = _disc_rule_about(0j)
    mean = np.sum(u(xm) * wm) / np.pi
    return float(abs(u(y) - mean - (-boundary + volume)))
