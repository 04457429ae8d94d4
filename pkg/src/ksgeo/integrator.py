"""Proper-time propagation of equatorial radial geodesics.

The radial motion is integrated in second-order form,
``rddot = -V'(r)``, which passes smoothly through turning points. Coordinate
time and azimuth are carried along as quadratures of ``tdot(r)`` and
``phidot(r)`` fixed by the constants of motion.

Stepping uses an embedded Dormand-Prince 5(4) pair with a PI step-size
controller. Events (turning points, terminal radius) are located by
re-taking the last step from its start with a shortened step size, so the
event state carries the full accuracy of the integrator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, PreconditionError, StepFailure
from .geometry import (
    ConstantsOfMotion,
    GeodesicState,
    SpacetimeParams,
    coordinate_rates,
    effective_potential,
    effective_potential_derivative,
    kerr_delta,
    radial_residual_kerr,
)

START_RESIDUAL_TOL = 1e-10
# t (and phi for Kerr) are left out of error control inside this band around Delta = 0
COORDINATE_GUARD = 1e-3

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)

# state vector layout
_T, _R, _PHI, _RDOT = range(4)


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-16
    max_step: float = math.inf
    terminal_radius: float | None = None  # None -> 1e-6 * m
    direction: Literal["infall", "outfall"] = "infall"
    max_tau: float = math.inf
    max_turns: int | None = 1
    require_coordinate_time: bool = False
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise PreconditionError("rel_tol and abs_tol must be positive")
        if self.terminal_radius is not None and self.terminal_radius < 0:
            raise PreconditionError("terminal_radius must be >= 0")
        if self.direction not in ("infall", "outfall"):
            raise PreconditionError(f"direction must be infall or outfall, got {self.direction!r}")
        if not self.max_step > 0:
            raise PreconditionError("max_step must be positive")
        if not self.max_tau >= 0:
            raise PreconditionError("max_tau must be >= 0")
        if self.max_turns is not None and self.max_turns < 0:
            raise PreconditionError("max_turns must be >= 0 or None")


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[GeodesicState, ...]
    constants: ConstantsOfMotion
    params: SpacetimeParams
    config: IntegrationConfig
    max_normalization_drift: float
    termination: Literal["turning_point", "terminal_radius", "max_tau"]
    turning_radii: tuple[float, ...] = field(default=())

    @property
    def tau_span(self) -> float:
        return self.samples[-1].tau - self.samples[0].tau

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples])

    def residuals(self) -> np.ndarray:
        return radial_residual_kerr(self.column("r"), self.column("rdot"), self.constants, self.params)


def normalization_deviation(r, rdot, consts, params):
    """Horizon-regular measure of ``|2 L - 1|``.

    ``2 L - 1 = -2 r^2 res / Delta`` is 0/0 wherever Delta vanishes (every
    zero-constants turning point), so the shell residual is scaled by the
    kinetic term instead: ``2 |res| / (1 + rdot^2)``.
    """
    res = radial_residual_kerr(r, rdot, consts, params)
    return 2.0 * np.abs(res) / (1.0 + rdot * rdot)


class _Stepper:
    """DP5(4) with PI control over the 4-vector (t, r, phi, rdot)."""

    safety = 0.9
    alpha = 0.7 / 5
    beta = 0.4 / 5
    fac_min, fac_max = 0.2, 5.0

    def __init__(self, params, consts, config):
        self.params = params
        self.consts = consts
        self.config = config
        self.track_coords = not consts.is_zero

    def rhs(self, y):
        r = y[_R]
        if not r > 0:
            return np.full(4, np.nan)
        rdd = -effective_potential_derivative(r, self.consts, self.params)
        if self.track_coords:
            with np.errstate(divide="ignore", invalid="ignore"):
                tdot, phidot = coordinate_rates(r, self.consts, self.params)
        else:
            tdot = phidot = 0.0
        return np.array([tdot, y[_RDOT], phidot, rdd])

    def step(self, y, h):
        k = np.empty((7, 4))
        k[0] = self.rhs(y)
        for i in range(1, 7):
            k[i] = self.rhs(y + h * np.dot(_A[i], k[:i]))
        y_new = y + h * _B @ k
        err_vec = h * _E @ k
        return y_new, err_vec

    def weights(self, y, y_new):
        w = np.ones(4)
        if not self.track_coords:
            w[[_T, _PHI]] = 0.0
        else:
            p = self.params
            for yy in (y, y_new):
                r = yy[_R]
                if not np.isfinite(yy[_T]) or abs(kerr_delta(r, p)) < COORDINATE_GUARD * r * r:
                    w[_T] = 0.0
                    if not p.is_schwarzschild:
                        w[_PHI] = 0.0
        return w

    def error_norm(self, y, y_new, err_vec):
        w = self.weights(y, y_new)
        scale = self.config.abs_tol + self.config.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore"):
            ratio = np.where(w > 0, err_vec / scale, 0.0)
        if not np.all(np.isfinite(ratio[w > 0])) or not np.isfinite(y_new[_R]):
            return math.inf
        return math.sqrt(np.sum(ratio**2) / max(np.sum(w), 1.0))

    def initial_step(self, y):
        # Hairer-Norsett-Wanner starting step for order 5
        f0 = self.rhs(y)
        sl = slice(_R, _RDOT + 1, 2)
        sc = self.config.abs_tol + self.config.rel_tol * np.abs(y[sl])
        d0 = np.sqrt(np.mean((y[sl] / sc) ** 2))
        d1 = np.sqrt(np.mean((f0[sl] / sc) ** 2))
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        f1 = self.rhs(y + h0 * f0)
        d2 = np.sqrt(np.mean(((f1[sl] - f0[sl]) / sc) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, self.config.max_step)


def _admissible_rdot(r0, consts, params, direction):
    rdot_sq = -2.0 * effective_potential(r0, consts, params)
    if rdot_sq < -2.0 * START_RESIDUAL_TOL:
        raise PreconditionError(
            f"r0 = {r0} is in a forbidden region (rdot^2 = {rdot_sq} < 0)",
            residual=-0.5 * rdot_sq,
        )
    rdot = math.sqrt(max(rdot_sq, 0.0))
    return -rdot if direction == "infall" else rdot


def _state(tau, y, params, consts, t_valid, phi_valid):
    r = float(y[_R])
    if consts.is_zero:
        tdot = phidot = 0.0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            tdot, phidot = (float(v) for v in coordinate_rates(r, consts, params))
    t = float(y[_T]) if t_valid else math.nan
    phi = float(y[_PHI]) if phi_valid else math.nan
    if not t_valid:
        tdot = math.nan
    if not phi_valid:
        phidot = math.nan
    return GeodesicState(
        tau=float(tau), t=t, r=r, theta=math.pi / 2, phi=phi,
        tdot=tdot, rdot=float(y[_RDOT]), thetadot=0.0, phidot=phidot,
    )


def _propagate(params, consts, r0, rdot0, config):
    m = params.m
    terminal = 1e-6 * m if config.terminal_radius is None else config.terminal_radius
    stepper = _Stepper(params, consts, config)
    y = np.array([0.0, r0, 0.0, rdot0])
    tau = 0.0
    delta_sign0 = np.sign(kerr_delta(r0, params))
    t_valid = phi_valid = True

    samples = [_state(tau, y, params, consts, t_valid, phi_valid)]
    turns = []
    termination = "max_tau"
    if config.max_tau == 0.0:
        return samples, turns, termination

    h = stepper.initial_step(y)
    err_prev = 1e-4
    n_steps = 0
    while True:
        n_steps += 1
        if n_steps > config.max_steps:
            raise StepFailure(f"exceeded max_steps={config.max_steps} at tau={tau}")
        h = min(h, config.max_step, config.max_tau - tau)
        if h <= 16 * np.finfo(float).eps * max(abs(tau), 1.0):
            raise StepFailure(f"step size underflow at tau={tau}, r={y[_R]}")
        y_new, err_vec = stepper.step(y, h)
        err = stepper.error_norm(y, y_new, err_vec)
        if err > 1.0:
            fac = max(stepper.fac_min, stepper.safety * err ** (-1 / 5)) if math.isfinite(err) else stepper.fac_min
            h *= fac
            continue

        # events, earliest first: terminal radius, then turning point
        event = None
        if y_new[_R] <= terminal < y[_R]:
            event = "terminal_radius"
            f = lambda hh: stepper.step(y, hh)[0][_R] - terminal  # noqa: E731
        elif y[_RDOT] * y_new[_RDOT] < 0:
            event = "turning_point"
            f = lambda hh: stepper.step(y, hh)[0][_RDOT]  # noqa: E731
        if event is not None:
            h_ev = brentq(f, 0.0, h, xtol=4 * np.finfo(float).eps * max(tau, 1.0), rtol=8.9e-16)
            y_new = stepper.step(y, h_ev)[0]
            h_taken = h_ev
        else:
            h_taken = h

        tau_new = tau + h_taken
        if config.max_tau - tau_new <= 4 * np.finfo(float).eps * max(abs(tau_new), 1.0):
            tau_new = config.max_tau
        if not consts.is_zero and np.sign(kerr_delta(y_new[_R], params)) != delta_sign0:
            if config.require_coordinate_time:
                raise DomainError(
                    f"coordinate time requested across the horizon at tau={tau_new}"
                )
            t_valid = False
            if not params.is_schwarzschild:
                phi_valid = False
        if event == "turning_point":
            y_new[_RDOT] = 0.0
            turns.append(float(y_new[_R]))

        y, tau = y_new, tau_new
        samples.append(_state(tau, y, params, consts, t_valid, phi_valid))

        if event == "terminal_radius":
            termination = event
            break
        if event == "turning_point" and config.max_turns is not None and len(turns) >= config.max_turns:
            termination = event
            break
        if tau >= config.max_tau:
            termination = "max_tau"
            break

        err_c = max(err, 1e-10)
        fac = stepper.safety * err_c ** (-stepper.alpha) * err_prev ** stepper.beta
        h = h * min(stepper.fac_max, max(stepper.fac_min, fac))
        err_prev = max(err, 1e-4)
    return samples, turns, termination


def _build(params, consts, config, samples, turns, termination):
    r = np.array([s.r for s in samples])
    rdot = np.array([s.rdot for s in samples])
    drift = float(np.max(normalization_deviation(r, rdot, consts, params)))
    return Trajectory(
        samples=tuple(samples),
        constants=ConstantsOfMotion(consts.energy, consts.angular_momentum, 1.0),
        params=params,
        config=config,
        max_normalization_drift=drift,
        termination=termination,
        turning_radii=tuple(turns),
    )


def _check_zero_constants_start(params, r0):
    if not r0 > 0:
        raise PreconditionError(f"r0 must be positive, got {r0}")
    inner, outer = params.horizons()
    slack = 1e-12 * params.m
    if params.is_schwarzschild:
        if r0 > 2 * params.m + slack:
            raise PreconditionError(
                f"r0 = {r0} outside the admissible region 0 < r0 <= 2m = {2 * params.m}"
            )
    elif not (inner - slack <= r0 <= outer + slack):
        raise PreconditionError(
            f"r0 = {r0} outside the admissible region [{inner}, {outer}] between the roots of Delta"
        )


def integrate_zero_constants(
    params: SpacetimeParams, r0: float, config: IntegrationConfig = IntegrationConfig()
) -> Trajectory:
    """Radial geodesic with E = L = 0: ``rdot^2 = 2m/r - a^2/r^2 - 1``."""
    _check_zero_constants_start(params, r0)
    consts = ConstantsOfMotion(0.0, 0.0, 1.0)
    rdot0 = _admissible_rdot(r0, consts, params, config.direction)
    samples, turns, term = _propagate(params, consts, float(r0), rdot0, config)
    return _build(params, consts, config, samples, turns, term)


def integrate_general(
    params: SpacetimeParams,
    consts: ConstantsOfMotion,
    r0: float,
    rdot_sign: int = -1,
    config: IntegrationConfig = IntegrationConfig(),
) -> Trajectory:
    """Equatorial geodesic with arbitrary constants E and L.

    ``rdot_sign`` picks the root of ``rdot^2 = -2 V(r0)``; it overrides
    ``config.direction``.
    """
    if not r0 > 0:
        raise PreconditionError(f"r0 must be positive, got {r0}")
    if rdot_sign not in (-1, 1):
        raise PreconditionError("rdot_sign must be -1 or +1")
    direction = "infall" if rdot_sign < 0 else "outfall"
    rdot0 = _admissible_rdot(r0, consts, params, direction)
    if config.require_coordinate_time and not consts.is_zero:
        if abs(kerr_delta(r0, params)) < 1e-10 * params.m**2:
            raise DomainError("coordinate time is undefined at a horizon start")
    samples, turns, term = _propagate(params, consts, float(r0), rdot0, config)
    return _build(params, consts, config, samples, turns, term)


def proper_time_to_center(params: SpacetimeParams, r0: float) -> float:
    """Proper time to fall from ``r0`` to ``r = 0`` on the zero-constants shell.

    Integrates ``dtau = -dr / sqrt(2m/r - 1)``. With ``r = 2m - u^2`` the
    integrand becomes ``2 sqrt(2m - u^2)``, whose only singular factor
    ``sqrt(sqrt(2m) - u)`` is handed to QUADPACK as an algebraic weight.
    """
    if not params.is_schwarzschild:
        raise PreconditionError("proper_time_to_center requires a = 0")
    m = params.m
    if not (0 < r0 <= 2 * m * (1 + 1e-15)):
        raise PreconditionError(f"r0 = {r0} outside (0, 2m]")
    r0 = min(r0, 2 * m)
    u_top = math.sqrt(2 * m)
    u_lo = math.sqrt(2 * m - r0)
    val, _ = quad(
        lambda u: 2.0 * math.sqrt(u_top + u),
        u_lo,
        u_top,
        weight="alg",
        wvar=(0.0, 0.5),
        epsabs=1e-14,
        epsrel=1e-13,
    )
    return val
