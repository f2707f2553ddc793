"""Fourier-in-angle Poisson solves, harmonic extension and the Neumann correction.

Every solve works mode by mode on the computational grid: a pure-mode right
hand side produces a pure-mode solution.  The radial problems use the
finite-volume stencil of :mod:`wente_lab.modes` (second order, tridiagonal).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .disc import PolarGrid, ScalarField, integrate
from .green import compatible_flux, neumann_flux
from .modes import from_modes, radial_operator, solve_tridiagonal, to_modes, wavenumbers


class IncompatibleDataError(ValueError):
    pass


class AliasingWarning(UserWarning):
    pass


@dataclass
class ModeProfile:
    k: int
    values: np.ndarray  # complex radial profile on the radial nodes


@dataclass(frozen=True)
class DtNOperator:
    """Dirichlet-to-Neumann map on boundary Fourier coefficients: ``g_k -> |k| g_k``."""

    n_theta: int

    def apply(self, samples: np.ndarray) -> np.ndarray:
        k = np.abs(wavenumbers(self.n_theta))
        return np.real(np.fft.ifft(k * np.fft.fft(samples)))

    def quadratic_form(self, samples: np.ndarray) -> float:
        """``2pi sum_k |k| |g_k|^2``, the Dirichlet energy of the harmonic extension."""
        g = np.fft.fft(samples) / self.n_theta
        k = np.abs(wavenumbers(self.n_theta))
        return float(2.0 * np.pi * np.sum(k * np.abs(g) ** 2))


def fourier_modes(f: ScalarField, K: int | None = None) -> list[ModeProfile]:
    """Per-ring discrete Fourier transform, modes ``|k| <= K``.

    Warns with :class:`AliasingWarning` when the top retained mode carries
    more than 1% of the energy.
    """
    n = f.grid.n_theta
    if K is None:
        K = n // 2 - 1
    if n < 2 * K + 2:
        raise ValueError(f"n_theta={n} cannot resolve K={K}")
    coeffs = to_modes(f.values)
    ks = wavenumbers(n)
    energy = np.sum(np.abs(coeffs) ** 2 * f.grid.cell_volumes[None, :], axis=1)
    top = energy[np.abs(ks) == K].sum()
    if energy.sum() > 0 and top > 0.01 * energy.sum():
        warnings.warn(f"mode {K} carries {top / energy.sum():.1%} of the energy", AliasingWarning)
    return [ModeProfile(int(k), coeffs[i]) for i, k in enumerate(ks) if abs(k) <= K]


def from_mode_profiles(grid: PolarGrid, profiles: list[ModeProfile]) -> ScalarField:
    coeffs = np.zeros((grid.n_theta, grid.n_r), dtype=complex)
    for p in profiles:
        coeffs[p.k % grid.n_theta] = p.values
    return ScalarField(grid, from_modes(coeffs))


def _comp_rhs(f: ScalarField) -> np.ndarray:
    op = radial_operator(f.grid)
    return to_modes(f.values * f.grid.cell_jacobian) * op.volumes[None, :]


def solve_dirichlet_spectral(f: ScalarField) -> ScalarField:
    """``-Laplace u = f`` in the disc, ``u = 0`` on the circle."""
    grid = f.grid
    op = radial_operator(grid)
    ks = wavenumbers(grid.n_theta)
    lo, di, up = op.bands(ks, dirichlet=True)
    u = solve_tridiagonal(lo, di, up, _comp_rhs(f))
    return ScalarField(grid, from_modes(u))


def _neumann_from_flux(grid: PolarGrid, rhs: np.ndarray, flux_comp: np.ndarray) -> np.ndarray:
    op = radial_operator(grid)
    ks = wavenumbers(grid.n_theta)
    gk = np.fft.fft(flux_comp) / grid.n_theta
    rhs = rhs.copy()
    rhs[:, -1] += gk
    out = np.zeros_like(rhs)
    nz = ks != 0
    lo, di, up = op.bands(ks[nz], dirichlet=False)
    out[nz] = solve_tridiagonal(lo, di, up, rhs[nz])
    # k = 0: singular, bordered with the zero-mean constraint
    n = grid.n_r
    lo0, di0, _ = op.bands(np.array([0]), dirichlet=False)
    mat = np.zeros((n + 1, n + 1))
    mat[np.arange(n), np.arange(n)] = di0[0]
    mat[np.arange(n - 1), np.arange(1, n)] = lo0[0]
    mat[np.arange(1, n), np.arange(n - 1)] = lo0[0]
    mat[:n, n] = op.volumes
    mat[n, :n] = op.volumes
    sol = np.linalg.solve(mat, np.concatenate([rhs[~nz][0], [0.0]]))
    out[~nz] = sol[:n]
    return out


def solve_neumann_spectral(f: ScalarField) -> ScalarField:
    """Zero-mean solution of ``-Laplace u = f`` with flux ``-(1/2pi) int f``.

    The ``k = 0`` mode carries the compatible constant flux; all other modes
    see a homogeneous Neumann condition (up to the ``|T'|`` weight on focused
    grids).
    """
    grid = f.grid
    flux = compatible_flux(grid, integrate(f))
    u = _neumann_from_flux(grid, _comp_rhs(f), flux)
    out = ScalarField(grid, from_modes(u))
    return out - out.mean()


def harmonic_extension(g: np.ndarray, grid: PolarGrid) -> ScalarField:
    """Harmonic ``h`` with ``h = g`` on the circle (samples at ``grid.boundary_points``).

    Disc automorphisms preserve harmonicity, so ``h = sum_k g_k r^|k| e^{ik theta}``
    in computational coordinates is exact on focused grids too.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.n_theta,):
        raise ValueError(f"need {grid.n_theta} boundary samples, got {g.shape}")
    ks = np.abs(wavenumbers(grid.n_theta)).astype(float)
    gk = np.fft.fft(g) / grid.n_theta
    profiles = gk[:, None] * grid.radii[None, :] ** ks[:, None]
    return ScalarField(grid, from_modes(profiles))


def harmonic_from_neumann(g: np.ndarray, grid: PolarGrid, tol: float = 1e-8) -> ScalarField:
    """Zero-mean harmonic ``h`` with ``dh/dnu = g`` (physical boundary samples).

    ``h = sum_{k != 0} (g_k / |k|) r^{|k|} e^{ik theta}`` in computational
    coordinates, where ``g_k`` are coefficients of the flux per unit
    computational angle.
    """
    g = np.asarray(g, dtype=float)
    comp = g * grid.boundary_dmap
    total = float(np.sum(comp) * grid.dtheta)
    scale = float(np.sum(np.abs(comp)) * grid.dtheta) or 1.0
    if abs(total) > tol * max(scale, 1.0):
        raise IncompatibleDataError(f"boundary data has nonzero integral {total:.3e}")
    ks = wavenumbers(grid.n_theta)
    gk = np.fft.fft(comp) / grid.n_theta
    ak = np.abs(ks).astype(float)
    coef = np.where(ks != 0, gk / np.where(ks != 0, ak, 1.0), 0.0)
    r = grid.radii
    profiles = coef[:, None] * r[None, :] ** ak[:, None]
    h = ScalarField(grid, from_modes(profiles))
    return h - h.mean()


def neumann_via_correction(f: ScalarField):
    """Neumann solution as ``v = u - h``.

    ``u`` is the Dirichlet solution, ``h`` the harmonic function whose normal
    derivative is the mean-free part of ``du/dnu``.  Returns ``(u, h, v)``
    with ``v`` normalised to zero mean.
    """
    grid = f.grid
    u = solve_dirichlet_spectral(f)
    flux = neumann_flux(u, f)
    # mean-free part with respect to physical arclength
    g = flux.samples - flux.total() / float(np.sum(grid.boundary_dmap) * grid.dtheta)
    h = harmonic_from_neumann(g, grid, tol=1e-6)
    v = u - h
    return u, h, v - v.mean()
