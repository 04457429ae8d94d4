"""Kustaanheimo-Stiefel map between R^4 and R^3.

Positions map as ``X = A(s) s`` and velocities as ``Xdot = A(s) sdot / (2 s^2)``
with ``X = (x1, x2, x3, 0)``. The two maps are independent: ``sdot`` is not
the derivative of ``s`` along any path. The zero fourth component of the
velocity map is the bilinear condition ``s2 sdot1 - s1 sdot2 - s4 sdot3 +
s3 sdot4 = 0``; only velocities satisfying it have ``|xdot|^2 = sdot^2 / (4 s^2)``.

Every function accepts a single vector or a stack with the vector on the
last axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError

SHELL_TOL = 1e-10


@dataclass(frozen=True)
class Vec3State:
    x: np.ndarray
    v: np.ndarray

    @property
    def r(self):
        return np.linalg.norm(self.x, axis=-1)[()]


@dataclass(frozen=True)
class KSState:
    s: np.ndarray
    sdot: np.ndarray


def ks_matrix(s):
    s = np.asarray(s, dtype=float)
    s1, s2, s3, s4 = np.moveaxis(s, -1, 0)
    rows = [
        [s3, -s4, s1, -s2],
        [s4, s3, s2, s1],
        [s1, s2, -s3, -s4],
        [s2, -s1, -s4, s3],
    ]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)


def _norm2(s):
    return np.sum(np.asarray(s, dtype=float) ** 2, axis=-1)


def _require_nonzero(s2):
    if np.any(s2 == 0):
        raise DomainError("KS velocity map is singular at s = 0")


def ks_forward_position(s):
    """First three components of ``A(s) s``; the fourth vanishes identically."""
    s = np.asarray(s, dtype=float)
    X = np.einsum("...ij,...j->...i", ks_matrix(s), s)
    assert np.all(np.abs(X[..., 3]) <= 1e-12 * _norm2(s) + 1e-300), "KS fourth row did not vanish"
    return X[..., :3]


def ks_bilinear(s, sdot):
    """Fourth component of ``A(s) sdot``; zero for admissible velocities."""
    A = ks_matrix(s)
    return np.einsum("...j,...j->...", A[..., 3, :], np.asarray(sdot, dtype=float))


def ks_forward_velocity(s, sdot):
    s = np.asarray(s, dtype=float)
    s2 = _norm2(s)
    _require_nonzero(s2)
    Xdot = np.einsum("...ij,...j->...i", ks_matrix(s), np.asarray(sdot, dtype=float))
    return Xdot[..., :3] / (2.0 * s2[..., None])


def project_admissible(s, sdot):
    """Remove the component of ``sdot`` that violates the bilinear condition."""
    s = np.asarray(s, dtype=float)
    sdot = np.asarray(sdot, dtype=float)
    s2 = _norm2(s)
    _require_nonzero(s2)
    w = ks_matrix(s)[..., 3, :]
    return sdot - (ks_bilinear(s, sdot) / s2)[..., None] * w


def ks_inverse_position(x, phase=0.0):
    """One preimage ``s`` of ``x`` with ``s^2 = |x|``.

    Writing ``u = s1 + i s2`` and ``w = s3 + i s4`` the map reads
    ``x1 + i x2 = 2 u w`` and ``x3 = |u|^2 - |w|^2``. The fibre is
    ``(u, w) -> (u e^{i phase}, w e^{-i phase})``. For ``x3 >= 0`` the
    modulus of ``u`` is fixed first, otherwise that of ``w``, which keeps the
    division away from zero near the x3-axis.
    """
    x = np.asarray(x, dtype=float)
    phase = np.asarray(phase, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise DomainError("KS inverse undefined at x = 0")
    z = x[..., 0] + 1j * x[..., 1]
    x3 = x[..., 2]
    upper = x3 >= 0
    rot = np.exp(1j * phase)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_up = np.sqrt((r + x3) / 2) * rot
        w_up = z / (2 * u_up)
        w_lo = np.sqrt((r - x3) / 2) / rot
        u_lo = z / (2 * w_lo)
    u = np.where(upper, u_up, u_lo)
    w = np.where(upper, w_up, w_lo)
    return np.stack([u.real, u.imag, w.real, w.imag], axis=-1)


def ks_inverse_velocity(s, xdot):
    """``sdot = 2 A(s)^T (xdot, 0)``, the unique admissible lift of ``xdot``."""
    s = np.asarray(s, dtype=float)
    _require_nonzero(_norm2(s))
    xdot = np.asarray(xdot, dtype=float)
    X4 = np.concatenate([xdot, np.zeros(xdot.shape[:-1] + (1,))], axis=-1)
    return 2.0 * np.einsum("...ji,...j->...i", ks_matrix(s), X4)


def spherical_embedding(r, theta_in, phi_in, rdot) -> Vec3State:
    """Euclidean point at ``(r, theta_in, phi_in)`` moving radially with speed ``rdot``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    theta_in = np.asarray(theta_in, dtype=float)
    phi_in = np.asarray(phi_in, dtype=float)
    n = np.stack([
        np.sin(theta_in) * np.cos(phi_in),
        np.sin(theta_in) * np.sin(phi_in),
        np.cos(theta_in),
    ], axis=-1)
    return Vec3State(x=r[..., None] * n, v=np.asarray(rdot, dtype=float)[..., None] * n)


def kepler_shell_residual(x, v, m):
    """``v^2/2 - m/r + 1/2``."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    return 0.5 * np.sum(np.asarray(v, dtype=float) ** 2, axis=-1) - m / r + 0.5


def kepler_to_oscillator(state: Vec3State, m, phase=0.0) -> KSState:
    """Lift an on-shell Kepler state to the 4D oscillator with energy ``m``."""
    res = kepler_shell_residual(state.x, state.v, m)
    # tolerance scaled by the potential term so that deep states are not rejected by rounding
    scale = np.maximum(1.0, m / state.r)
    bad = np.abs(res) > SHELL_TOL * scale
    if np.any(bad):
        first = float(np.atleast_1d(res)[np.atleast_1d(bad)][0])
        raise PreconditionError(f"state is off the Kepler shell, residual {first:.17g}", residual=first)
    s = ks_inverse_position(state.x, phase)
    return KSState(s=s, sdot=ks_inverse_velocity(s, state.v))
