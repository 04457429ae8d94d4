"""Schwarzschild and equatorial Kerr time-like geodesics in closed form.

Geometric units (c = G = hbar = 1). Signature (+, -, -, -), so a time-like
geodesic has ``2 * L = +1`` where ``L`` is the geodesic Lagrangian
``(1/2) g_{mu nu} xdot^mu xdot^nu``.

All on-shell relations are exposed as signed residuals (LHS - RHS). The
radial equation for equatorial Kerr is written as::

    (1/2) rdot**2 + V(r) = 0

with ``V`` the effective potential below; ``a = 0`` gives Schwarzschild.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, PreconditionError

HORIZON_GUARD = 1e-10
PLANE_TOL = 1e-12


@dataclass(frozen=True)
class SpacetimeParams:
    """Mass ``m`` and spin per unit mass ``a``; ``a = 0`` is Schwarzschild."""

    m: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        if not (self.m > 0 and math.isfinite(self.m)):
            raise PreconditionError(f"mass must be positive and finite, got {self.m}")
        if not math.isfinite(self.a):
            raise PreconditionError(f"spin must be finite, got {self.a}")
        if abs(self.a) > self.m:
            raise PreconditionError(
                f"spin exceeds mass: |a| = {abs(self.a)} > m = {self.m}"
            )

    @property
    def is_schwarzschild(self) -> bool:
        return self.a == 0.0

    def horizons(self) -> tuple[float, float]:
        """Roots ``m -+ sqrt(m^2 - a^2)`` of ``kerr_delta``, inner first."""
        root = math.sqrt(max(self.m * self.m - self.a * self.a, 0.0))
        return self.m - root, self.m + root


@dataclass(frozen=True)
class GeodesicState:
    tau: float
    t: float
    r: float
    theta: float
    phi: float
    tdot: float
    rdot: float
    thetadot: float
    phidot: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"radius must be positive, got {self.r}")

    def in_invariant_plane(self) -> bool:
        return (
            abs(self.theta - math.pi / 2) <= PLANE_TOL
            and abs(self.thetadot) <= PLANE_TOL
        )


@dataclass(frozen=True)
class ConstantsOfMotion:
    """Energy ``E = p_t``, angular momentum ``L = p_phi`` and the value of ``2 * Lagrangian``."""

    energy: float = 0.0
    angular_momentum: float = 0.0
    normalization: float = 1.0

    @property
    def is_zero(self) -> bool:
        return self.energy == 0.0 and self.angular_momentum == 0.0


@dataclass(frozen=True)
class CanonicalMomenta:
    p_t: float
    p_r: float
    p_theta: float
    p_phi: float


def _require_positive_r(r):
    if np.any(np.asarray(r) <= 0):
        raise DomainError("radius must be positive")


def _require_schwarzschild(params):
    if not params.is_schwarzschild:
        raise PreconditionError("Schwarzschild formula called with nonzero spin")


def _require_off_horizon(r, m):
    _require_positive_r(r)
    if np.any(np.abs(np.asarray(r) - 2 * m) < HORIZON_GUARD * m):
        raise DomainError(f"coordinate singularity: r within {HORIZON_GUARD} m of 2m")


def _require_plane(state):
    if not state.in_invariant_plane():
        raise PreconditionError(
            f"state is not in the invariant plane (theta={state.theta}, "
            f"thetadot={state.thetadot})"
        )


def schwarzschild_lagrangian(state: GeodesicState, params: SpacetimeParams) -> float:
    _require_schwarzschild(params)
    _require_off_horizon(state.r, params.m)
    r = state.r
    f = 1.0 - 2.0 * params.m / r
    sin2 = math.sin(state.theta) ** 2
    return 0.5 * (
        f * state.tdot**2
        - state.rdot**2 / f
        - r * r * state.thetadot**2
        - r * r * sin2 * state.phidot**2
    )


def canonical_momenta(state: GeodesicState, params: SpacetimeParams) -> CanonicalMomenta:
    """Momenta conjugate to (t, r, theta, phi).

    ``p_t`` is ``+dL/dtdot``; the spatial momenta carry an explicit minus,
    ``p_q = -dL/dqdot``, so all four are positive for forward motion.
    """
    _require_schwarzschild(params)
    _require_off_horizon(state.r, params.m)
    r = state.r
    f = 1.0 - 2.0 * params.m / r
    return CanonicalMomenta(
        p_t=f * state.tdot,
        p_r=state.rdot / f,
        p_theta=r * r * state.thetadot,
        p_phi=r * r * math.sin(state.theta) ** 2 * state.phidot,
    )


def hamiltonian(state: GeodesicState, params: SpacetimeParams) -> float:
    """``p_t tdot - (p_r rdot + p_theta thetadot + p_phi phidot) - L``; equals L."""
    p = canonical_momenta(state, params)
    lag = schwarzschild_lagrangian(state, params)
    return (
        p.p_t * state.tdot
        - (p.p_r * state.rdot + p.p_theta * state.thetadot + p.p_phi * state.phidot)
        - lag
    )


def kerr_delta(r, params: SpacetimeParams):
    return r * r - 2.0 * params.m * r + params.a * params.a


def _kerr_tphi_metric(r, params):
    m, a = params.m, params.a
    g_tt = 1.0 - 2.0 * m / r
    g_tphi = 2.0 * a * m / r
    g_phiphi = -((r * r + a * a) + 2.0 * a * a * m / r)
    return g_tt, g_tphi, g_phiphi


def kerr_lagrangian_equatorial(state: GeodesicState, params: SpacetimeParams) -> float:
    _require_plane(state)
    _require_positive_r(state.r)
    r = state.r
    delta = kerr_delta(r, params)
    if abs(delta) < HORIZON_GUARD * params.m * params.m:
        raise DomainError(f"Delta vanishes at r = {r} (horizon)")
    g_tt, g_tphi, g_phiphi = _kerr_tphi_metric(r, params)
    return 0.5 * (
        g_tt * state.tdot**2
        + 2.0 * g_tphi * state.tdot * state.phidot
        - (r * r / delta) * state.rdot**2
        + g_phiphi * state.phidot**2
    )


def constants_from_state(state: GeodesicState, params: SpacetimeParams) -> ConstantsOfMotion:
    """Read off E, L and 2*Lagrangian from an equatorial state.

    For ``a = 0`` this is ``E = (1 - 2m/r) tdot`` and ``L = r^2 phidot``. For
    Kerr the same momenta are taken from the equatorial Lagrangian.
    """
    _require_plane(state)
    if params.is_schwarzschild:
        p = canonical_momenta(state, params)
        norm = 2.0 * schwarzschild_lagrangian(state, params)
        return ConstantsOfMotion(p.p_t, p.p_phi, norm)
    norm = 2.0 * kerr_lagrangian_equatorial(state, params)
    g_tt, g_tphi, g_phiphi = _kerr_tphi_metric(state.r, params)
    energy = g_tt * state.tdot + g_tphi * state.phidot
    angmom = -(g_tphi * state.tdot + g_phiphi * state.phidot)
    return ConstantsOfMotion(energy, angmom, norm)


def coordinate_rates(r, consts: ConstantsOfMotion, params: SpacetimeParams):
    """``(tdot, phidot)`` implied by the constants of motion at radius ``r``.

    Singular where Delta = 0 unless both constants vanish.
    """
    if consts.is_zero:
        z = np.zeros_like(np.asarray(r, dtype=float))
        return z[()], z[()]
    E, L = consts.energy, consts.angular_momentum
    g_tt, g_tphi, g_phiphi = _kerr_tphi_metric(r, params)
    det = -kerr_delta(r, params)
    tdot = (g_phiphi * E + g_tphi * L) / det
    phidot = -(g_tphi * E + g_tt * L) / det
    return tdot, phidot


def radial_residual_schwarzschild(r, rdot, consts: ConstantsOfMotion, params: SpacetimeParams):
    """``(1/2)[(E^2 - rdot^2)/(1 - 2m/r) - L^2/r^2] - 1/2``.

    With E = L = 0 and r at the horizon this form is 0/0; there the regular
    zero-constants residual is returned instead.
    """
    _require_schwarzschild(params)
    m = params.m
    if consts.is_zero and np.all(np.abs(np.asarray(r) - 2 * m) < HORIZON_GUARD * m):
        return zero_constants_residual(r, rdot, params)
    _require_off_horizon(r, m)
    E, L = consts.energy, consts.angular_momentum
    f = 1.0 - 2.0 * m / r
    return 0.5 * (E * E / f - rdot * rdot / f - L * L / (r * r)) - 0.5


def zero_constants_residual(r, rdot, params: SpacetimeParams):
    """``(1/2) rdot^2 + a^2/(2 r^2) - m/r + 1/2``; regular at the horizon."""
    _require_positive_r(r)
    return 0.5 * rdot * rdot + params.a**2 / (2.0 * r * r) - params.m / r + 0.5


def effective_potential(r, consts: ConstantsOfMotion, params: SpacetimeParams):
    """``V(r)`` in ``(1/2) rdot^2 + V(r) = 0``."""
    m, a = params.m, params.a
    E, L = consts.energy, consts.angular_momentum
    inv = 1.0 / r
    return (
        -m * inv
        + 0.5 * (1.0 - E * E) * (1.0 + a * a * inv * inv)
        + 0.5 * L * L * inv * inv
        - m * inv**3 * (L - a * E) ** 2
    )


def effective_potential_derivative(r, consts: ConstantsOfMotion, params: SpacetimeParams):
    m, a = params.m, params.a
    E, L = consts.energy, consts.angular_momentum
    inv = 1.0 / r
    return (
        m * inv**2
        - (1.0 - E * E) * a * a * inv**3
        - L * L * inv**3
        + 3.0 * m * inv**4 * (L - a * E) ** 2
    )


def _potential_scale(r, consts, params):
    # sum of |terms| of V; sets the rounding floor for residual comparisons
    m, a = params.m, params.a
    E, L = consts.energy, consts.angular_momentum
    inv = 1.0 / r
    return (
        m * inv
        + 0.5 * abs(1.0 - E * E) * (1.0 + a * a * inv * inv)
        + 0.5 * L * L * inv * inv
        + m * inv**3 * (L - a * E) ** 2
    )


def radial_residual_kerr(r, rdot, consts: ConstantsOfMotion, params: SpacetimeParams):
    _require_positive_r(r)
    return 0.5 * rdot * rdot + effective_potential(r, consts, params)


def turning_points(
    consts: ConstantsOfMotion,
    params: SpacetimeParams,
    grid_points: int = 4000,
    rtol: float = 1e-12,
) -> list[float]:
    """Sorted positive radii where ``rdot = 0`` is on-shell.

    Simple roots are bracketed on a log-spaced grid over ``[1e-6 m, 1e3 m]``
    and bisected. Roots of even multiplicity (no sign change, e.g. extremal
    Kerr) are found as roots of ``V'`` at which ``V`` vanishes to rounding.
    """
    m = params.m
    grid = np.geomspace(1e-6 * m, 1e3 * m, grid_points)
    V = lambda r: float(effective_potential(r, consts, params))  # noqa: E731
    dV = lambda r: float(effective_potential_derivative(r, consts, params))  # noqa: E731
    vals = effective_potential(grid, consts, params)
    dvals = effective_potential_derivative(grid, consts, params)

    roots = []
    for i in range(grid_points - 1):
        lo, hi = grid[i], grid[i + 1]
        if vals[i] == 0.0:
            roots.append(float(lo))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(bisect(V, lo, hi, xtol=1e-300, rtol=rtol, maxiter=400))

    for i in range(grid_points - 1):
        lo, hi = grid[i], grid[i + 1]
        if dvals[i] * dvals[i + 1] >= 0:
            continue
        r_star = bisect(dV, lo, hi, xtol=1e-300, rtol=rtol, maxiter=400)
        floor = 64 * np.finfo(float).eps * _potential_scale(r_star, consts, params)
        if abs(V(r_star)) > floor:
            continue
        if any(abs(r_star - q) <= 1e-8 * q for q in roots):
            continue
        roots.append(float(r_star))
    return sorted(roots)
