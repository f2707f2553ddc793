"""Angular Fourier modes and the radial finite-volume operator on a PolarGrid.

A field ``u`` is written ``u(r, theta) = sum_k u_k(r) e^{i k theta}`` with
``u_k = fft(u, axis=1) / n_theta``.  For each mode the radial operator

    -(1/r) (r u_k')' + k^2 u_k / r^2

is discretised by finite volumes on the ``s = r^2`` cells of the grid.  The
associated quadratic form is the mode-wise Dirichlet energy, so
``int |grad u|^2 = 2 pi sum_k E_k(u_k, u_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .disc import PolarGrid


def wavenumbers(n_theta: int) -> np.ndarray:
    return np.rint(np.fft.fftfreq(n_theta) * n_theta).astype(int)


def to_modes(values: np.ndarray) -> np.ndarray:
    """Per-ring Fourier coefficients, shape ``(n_theta, n_r)`` (mode-major)."""
    return (np.fft.fft(values, axis=-1) / values.shape[-1]).T


def from_modes(coeffs: np.ndarray) -> np.ndarray:
    return np.real(np.fft.ifft(coeffs.T * coeffs.shape[0], axis=-1))


MASS_POWER = 2.0


@dataclass(frozen=True)
class RadialOperator:
    """Tridiagonal finite-volume stencil shared by all modes."""

    face_coeff: np.ndarray  # interior faces, length n_r - 1; exact for u linear in r^2
    face_coeff_linear: np.ndarray  # same faces, exact for u linear in r (used by |k| = 1)
    outer_coeff: float  # coupling of the last node to the boundary value at r = 1
    volumes: np.ndarray  # int r dr per cell
    log_inner: np.ndarray  # ln(inner face / node), -inf for the central cell
    log_outer: np.ndarray  # ln(outer face / node)

    def mass(self, k) -> np.ndarray:
        """Cell weights of the ``k^2 u / r^2`` term, shape ``(len(k), n_r)``.

        ``k^2 int_cell u dr / r`` with ``u`` frozen as ``u_i (r / r_i)^p``,
        ``p = min(|k|, MASS_POWER)``.  This is exact for the regular profiles
        ``r^|k|`` of the low modes near the centre; the cap keeps the weights
        of unresolved high modes bounded.
        """
        k = np.abs(np.atleast_1d(np.asarray(k))).astype(float)[:, None]
        p = np.minimum(k, MASS_POWER)
        safe = np.where(p > 0, p, 1.0)
        hi = np.exp(safe * self.log_outer[None, :])
        with np.errstate(invalid="ignore"):
            lo = np.exp(np.where(p > 0, safe * self.log_inner[None, :], 0.0))
        return np.where(p > 0, k * k / safe * (hi - lo), 0.0)

    def faces(self, k) -> np.ndarray:
        """Face coefficients per mode, shape ``(len(k), n_r - 1)``.

        The regular profiles near the centre are ``r^|k|``; only ``|k| = 1``
        is not captured by the ``r^2``-linear flux.
        """
        k = np.abs(np.atleast_1d(np.asarray(k)))[:, None]
        return np.where(k == 1, self.face_coeff_linear[None, :], self.face_coeff[None, :])

    def bands(self, k: np.ndarray, dirichlet: bool):
        """Lower, diagonal and upper bands for each mode in ``k``."""
        c = self.faces(k)
        diag = np.zeros((c.shape[0], self.volumes.size))
        diag[:, :-1] += c
        diag[:, 1:] += c
        if dirichlet:
            diag[:, -1] += self.outer_coeff
        diag = diag + self.mass(k)
        return -c, diag, -c

    def energy(self, u: np.ndarray, k: np.ndarray, boundary=None, v=None, boundary_v=None) -> np.ndarray:
        """Mode-wise energy form ``E_k(u_k, v_k)``; ``u`` has shape ``(K, n_r)``.

        ``boundary`` gives the values at ``r = 1`` per mode; ``None`` drops the
        outer half-cell (free boundary).
        """
        if v is None:
            v, boundary_v = u, boundary
        du = np.diff(u, axis=1)
        dv = np.diff(v, axis=1)
        e = np.sum(self.faces(k) * du * np.conj(dv), axis=1)
        e = e + np.sum(self.mass(k) * u * np.conj(v), axis=1)
        if boundary is not None:
            e = e + self.outer_coeff * (boundary - u[:, -1]) * np.conj(boundary_v - v[:, -1])
        return e


@lru_cache(maxsize=32)
def radial_operator(grid: PolarGrid) -> RadialOperator:
    r = grid.radii
    s = r * r
    rf = grid.face_radii
    # r u' at a face from a difference in s = r^2: exact for profiles linear in s
    c = 2.0 * rf[1:-1] ** 2 / np.diff(s)
    c_lin = rf[1:-1] / np.diff(r)
    outer = 2.0 / (1.0 - s[-1])
    with np.errstate(divide="ignore"):
        log_inner = np.log(rf[:-1] / r)
    log_outer = np.log(rf[1:] / r)
    return RadialOperator(c, c_lin, outer, grid.cell_volumes, log_inner, log_outer)


def solve_tridiagonal(lower, diag, upper, rhs):
    """Thomas algorithm vectorised over the leading (mode) axis."""
    lower = np.asarray(lower)
    upper = np.asarray(upper)
    diag = np.asarray(diag)
    rhs = np.asarray(rhs)
    n = diag.shape[1]
    dtype = np.result_type(diag, rhs, complex)
    cp = np.empty(diag.shape[:1] + (n - 1,), dtype=float)
    dp = np.empty(rhs.shape, dtype=dtype)
    b0 = diag[:, 0]
    cp[:, 0] = upper[:, 0] / b0
    dp[:, 0] = rhs[:, 0] / b0
    for i in range(1, n):
        denom = diag[:, i] - lower[:, i - 1] * cp[:, i - 1]
        if i < n - 1:
            cp[:, i] = upper[:, i] / denom
        dp[:, i] = (rhs[:, i] - lower[:, i - 1] * dp[:, i - 1]) / denom
    x = np.empty_like(dp)
    x[:, -1] = dp[:, -1]
    for i in range(n - 2, -1, -1):
        x[:, i] = dp[:, i] - cp[:, i] * x[:, i + 1]
    return x


def dirichlet_energy(values: np.ndarray, grid: PolarGrid, boundary: str = "trace") -> float:
    """``int_D |grad u|^2`` of nodal values (computational = physical by conformality).

    ``boundary='zero'`` closes the outer half-cell with ``u(1) = 0``,
    ``'trace'`` with the extrapolated boundary trace, ``'free'`` drops it.
    """
    from .disc import _extrapolation_weights

    op = radial_operator(grid)
    k = wavenumbers(grid.n_theta)
    u = to_modes(values)
    if boundary == "zero":
        b = np.zeros(u.shape[0], dtype=complex)
    elif boundary == "trace":
        b = u[:, -3:] @ _extrapolation_weights(grid)
    elif boundary == "free":
        b = None
    else:
        raise ValueError(f"unknown boundary closure {boundary!r}")
    return float(2.0 * np.pi * np.real(np.sum(op.energy(u, k, b))))


def energy_inner(u_vals: np.ndarray, v_vals: np.ndarray, grid: PolarGrid, boundary: str = "trace") -> float:
    from .disc import _extrapolation_weights

    op = radial_operator(grid)
    k = wavenumbers(grid.n_theta)
    u = to_modes(u_vals)
    v = to_modes(v_vals)
    if boundary == "trace":
        w = _extrapolation_weights(grid)
        bu, bv = u[:, -3:] @ w, v[:, -3:] @ w
    elif boundary == "zero":
        bu = bv = np.zeros(u.shape[0], dtype=complex)
    else:
        bu = bv = None
    return float(2.0 * np.pi * np.real(np.sum(op.energy(u, k, bu, v, bv))))


def discrete_harmonics(grid: PolarGrid) -> np.ndarray:
    """Discrete-harmonic radial profiles ``psi_k`` with ``psi_k(1) = 1``.

    Shape ``(n_theta, n_r)``; ``L_k psi_k = 0`` in every cell.  The ``k = 0``
    profile is the constant one.
    """
    op = radial_operator(grid)
    k = wavenumbers(grid.n_theta)
    lo, di, up = op.bands(k, dirichlet=True)
    rhs = np.zeros((k.size, grid.n_r))
    rhs[:, -1] = op.outer_coeff
    return np.real(solve_tridiagonal(lo, di, up, rhs))
