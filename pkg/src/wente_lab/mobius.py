"""Möbius bubbles on the upper half-plane and their pull-back to the unit disc.

The family ``m_eps(z) = (z - i eps) / (z + i eps)`` maps the upper half-plane
``H`` onto the unit disc.  Truncating ``m_eps - 1`` with a radial cutoff gives
a field pair ``V = (a, b)`` whose Jacobian concentrates towards ``pi * delta_0``
while the gradients stay bounded in ``L^{2,1}``.

All public evaluation functions take *disc* coordinates ``w`` (complex numbers
in the closed unit disc) and shift internally to ``z = w + i``.  The point
``w = -i`` (the boundary point ``-e_2``) is where the bubble concentrates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a closed-form map."""


@dataclass(frozen=True)
class BubbleSpec:
    """Parameters of one concentrating field pair.

    Attributes
    ----------
    epsilon : float
        Concentration scale of the Möbius transform.
    r0 : float
        Support radius of the cutoff around ``z = 0`` (the disc point ``-e_2``).
    cutoff_inner : float
        Fraction of ``r0`` on which the cutoff is identically one.
    """

    epsilon: float
    r0: float = 0.5
    cutoff_inner: float = 0.5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.r0 < 2:
            raise DomainError(f"r0 must lie in (0, 2), got {self.r0}")
        if not 0 < self.cutoff_inner < 1:
            raise DomainError(f"cutoff_inner must lie in (0, 1), got {self.cutoff_inner}")

    @property
    def plateau_radius(self) -> float:
        return self.cutoff_inner * self.r0


@dataclass(frozen=True)
class JacobianSplit:
    """``det(grad V)`` split into the concentrating part and the cutoff cross-term."""

    concentrating: np.ndarray
    remainder: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.concentrating + self.remainder


@dataclass(frozen=True)
class BubbleFields:
    a: np.ndarray
    b: np.ndarray
    grad_a: np.ndarray  # (..., 2)
    grad_b: np.ndarray  # (..., 2)


def mobius_eval(z, epsilon: float):
    """Return ``(m_eps(z), m_eps'(z))``.

    Raises :class:`DomainError` at the pole ``z = -i eps``.
    """
    z = np.asarray(z, dtype=complex)
    den = z + 1j * epsilon
    if np.any(den == 0):
        raise DomainError("pole of m_eps at z = -i*epsilon")
    value = (z - 1j * epsilon) / den
    derivative = 2j * epsilon / den**2
    if value.ndim == 0:
        return complex(value), complex(derivative)
    return value, derivative


def mobius_inverse(w, epsilon: float):
    """Inverse map ``m_eps^{-1}(w) = i eps (w + 1) / (1 - w)``."""
    w = np.asarray(w, dtype=complex)
    if np.any(w == 1):
        raise DomainError("w = 1 is the image of the point at infinity")
    z = 1j * epsilon * (w + 1) / (1 - w)
    return complex(z) if z.ndim == 0 else z


def _smoothstep(s):
    # quintic C^2 profile on [0, 1]
    return s**3 * (10 - 15 * s + 6 * s**2)


def _smoothstep_prime(s):
    return 30 * s**2 * (1 - s) ** 2


def cutoff(z, spec: BubbleSpec):
    """Radial cutoff ``phi(|z|)`` and its Cartesian gradient.

    ``phi = 1`` for ``|z| <= cutoff_inner * r0``, ``phi = 0`` for ``|z| >= r0``
    and a quintic smoothstep in between.  Returns ``(value, gradient)`` with
    ``gradient`` of shape ``z.shape + (2,)``.
    """
    z = np.asarray(z, dtype=complex)
    rho = np.abs(z)
    r_in, r_out = spec.plateau_radius, spec.r0
    s = np.clip((r_out - rho) / (r_out - r_in), 0.0, 1.0)
    value = _smoothstep(s)
    dphi_drho = -_smoothstep_prime(s) / (r_out - r_in)
    safe = np.where(rho > 0, rho, 1.0)
    grad = np.stack([dphi_drho * z.real / safe, dphi_drho * z.imag / safe], axis=-1)
    grad = np.where((rho > 0)[..., None], grad, 0.0)
    return value, grad


def _half_plane(points):
    return np.asarray(points, dtype=complex) + 1j


def bubble_fields(spec: BubbleSpec, points) -> BubbleFields:
    """Evaluate ``a = phi Re(m - 1)``, ``b = phi Im(m - 1)`` at disc points.

    Gradients are exact: holomorphic derivative combined with the product rule
    on the cutoff.
    """
    z = _half_plane(points)
    m, dm = mobius_eval(z, spec.epsilon)
    m = np.asarray(m)
    dm = np.asarray(dm)
    phi, dphi = cutoff(z, spec)
    u = m.real - 1.0
    v = m.imag
    # m - 1 holomorphic: u_x = Re m', u_y = -Im m', v_x = Im m', v_y = Re m'
    grad_u = np.stack([dm.real, -dm.imag], axis=-1)
    grad_v = np.stack([dm.imag, dm.real], axis=-1)
    a = phi * u
    b = phi * v
    grad_a = phi[..., None] * grad_u + u[..., None] * dphi
    grad_b = phi[..., None] * grad_v + v[..., None] * dphi
    return BubbleFields(a=a, b=b, grad_a=grad_a, grad_b=grad_b)


def jacobian_density(spec: BubbleSpec, points) -> JacobianSplit:
    """``da ^ db`` split as ``phi^2 |m'|^2`` plus the cutoff cross-term.

    With ``U = Re m - 1`` and ``W = Im m`` the cross-term is
    ``phi * dphi ^ (U dW - W dU)``.
    """
    z = _half_plane(points)
    m, dm = mobius_eval(z, spec.epsilon)
    m = np.asarray(m)
    dm = np.asarray(dm)
    phi, dphi = cutoff(z, spec)
    u = m.real - 1.0
    v = m.imag
    # one-form U dW - W dU, components (x, y)
    form_x = u * dm.imag - v * dm.real
    form_y = u * dm.real + v * dm.imag
    concentrating = phi**2 * np.abs(dm) ** 2
    remainder = phi * (dphi[..., 0] * form_y - dphi[..., 1] * form_x)
    return JacobianSplit(concentrating=concentrating, remainder=remainder)


def jacobian_total(spec: BubbleSpec, points) -> np.ndarray:
    return jacobian_density(spec, points).total


def superlevel_radius(t: float, epsilon: float) -> float:
    """Radius ``r(t) = sqrt(2 eps / t)`` of the disc ``{|m'_eps| >= t}``."""
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    return float(np.sqrt(2.0 * epsilon / t))


def exact_distribution(t: float, epsilon: float) -> float:
    """Area of ``{z in H : |m'_eps(z)| >= t}``.

    This is the part of the disc ``B_{r(t)}(-i eps)`` above the real axis,
    a circular segment of height ``r - eps``.
    """
    r = superlevel_radius(t, epsilon)
    if r <= epsilon:
        return 0.0
    return float(r * r * np.arccos(epsilon / r) - epsilon * np.sqrt(r * r - epsilon * epsilon))
