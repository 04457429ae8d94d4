import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from ksgeo.errors import DomainError, PreconditionError, StepFailure
from ksgeo.geometry import ConstantsOfMotion, SpacetimeParams, turning_points
from ksgeo.integrator import (
    IntegrationConfig,
    integrate_general,
    integrate_zero_constants,
    proper_time_to_center,
)

SCHW = SpacetimeParams(1.0, 0.0)


def cycloid_tau(r, m):
    """Proper time from r = 2m for zero-constants infall: r = m(1 + cos e), tau = m(e + sin e)."""
    eta = math.acos(r / m - 1)
    return m * (eta + math.sin(eta))


# --- zero constants ---------------------------------------------------------

def test_infall_reaches_terminal_radius_at_pi():
    traj = integrate_zero_constants(SCHW, 2.0)
    assert traj.termination == "terminal_radius"
    assert traj.samples[-1].r == pytest.approx(1e-6, rel=1e-12)
    assert traj.tau_span == pytest.approx(cycloid_tau(1e-6, 1.0), abs=1e-8)
    assert traj.tau_span == pytest.approx(math.pi, abs=1e-8)
    assert traj.max_normalization_drift <= 1e-10


def test_infall_follows_cycloid_pointwise():
    traj = integrate_zero_constants(SCHW, 2.0)
    for s in traj.samples[1:-1]:
        assert s.tau == pytest.approx(cycloid_tau(s.r, 1.0), abs=1e-8)


@pytest.mark.parametrize("m", [0.25, 1.0, 7.5])
def test_infall_scales_with_mass(m):
    traj = integrate_zero_constants(SpacetimeParams(m), 2 * m)
    assert traj.tau_span == pytest.approx(math.pi * m, rel=1e-8)


def test_infall_from_inside_horizon():
    traj = integrate_zero_constants(SCHW, 1.0)
    assert traj.tau_span == pytest.approx(cycloid_tau(1e-6, 1.0) - cycloid_tau(1.0, 1.0), abs=1e-8)


def test_zero_constants_outside_horizon_rejected():
    with pytest.raises(PreconditionError):
        integrate_zero_constants(SCHW, 2.5)
    with pytest.raises(PreconditionError):
        integrate_zero_constants(SCHW, 0.0)


def test_outfall_from_inside_turns_at_horizon():
    traj = integrate_zero_constants(SCHW, 1.0, IntegrationConfig(direction="outfall"))
    assert traj.termination == "turning_point"
    assert traj.samples[-1].r == pytest.approx(2.0, abs=1e-10)
    assert traj.samples[-1].rdot == 0.0


@pytest.mark.parametrize("a", [0.3, 0.6, 0.9, 0.999])
def test_kerr_half_oscillation_takes_pi(a):
    # energy -1/2 Kepler problem with semimajor axis m: the half period is pi m for any spin
    p = SpacetimeParams(1.0, a)
    inner, outer = p.horizons()
    traj = integrate_zero_constants(p, outer)
    assert traj.termination == "turning_point"
    assert traj.samples[-1].r == pytest.approx(inner, abs=1e-10 * max(1.0, 1 / inner))
    assert traj.tau_span == pytest.approx(math.pi, abs=1e-8)
    assert traj.max_normalization_drift <= 1e-10


def test_kerr_oscillation_example():
    p = SpacetimeParams(1.0, 0.6)
    traj = integrate_zero_constants(p, 1.8, IntegrationConfig(max_turns=3))
    assert traj.turning_radii == pytest.approx([0.2, 1.8, 0.2], abs=1e-10)
    assert traj.tau_span == pytest.approx(3 * math.pi, abs=1e-7)


def test_kerr_outside_region_rejected():
    with pytest.raises(PreconditionError):
        integrate_zero_constants(SpacetimeParams(1.0, 0.6), 0.1)
    with pytest.raises(PreconditionError):
        integrate_zero_constants(SpacetimeParams(1.0, 0.6), 1.9)


def test_time_reversal_symmetry():
    p = SpacetimeParams(1.0, 0.6)
    down = integrate_zero_constants(p, 1.8)
    up = integrate_zero_constants(p, 0.2, IntegrationConfig(direction="outfall"))
    assert up.tau_span == pytest.approx(down.tau_span, abs=1e-9)


def test_max_tau_zero_returns_single_sample():
    traj = integrate_zero_constants(SCHW, 2.0, IntegrationConfig(max_tau=0.0))
    assert len(traj.samples) == 1
    assert traj.termination == "max_tau"


def test_max_tau_stops_exactly():
    traj = integrate_zero_constants(SCHW, 2.0, IntegrationConfig(max_tau=1.25))
    assert traj.termination == "max_tau"
    assert traj.samples[-1].tau == 1.25


def test_samples_are_deterministic():
    a = integrate_zero_constants(SCHW, 2.0)
    b = integrate_zero_constants(SCHW, 2.0)
    assert a.samples == b.samples


def test_sample_tau_strictly_increasing():
    tau = integrate_zero_constants(SCHW, 2.0).column("tau")
    assert np.all(np.diff(tau) > 0)


@settings(max_examples=25)
@given(r0=st.floats(0.05, 2.0))
def test_quadrature_matches_ode(r0):
    ode = integrate_zero_constants(SCHW, r0).tau_span
    quad_val = proper_time_to_center(SCHW, r0)
    assert ode == pytest.approx(quad_val, abs=1e-7)


def test_quadrature_closed_forms():
    assert proper_time_to_center(SCHW, 2.0) == pytest.approx(math.pi, abs=1e-12)
    assert proper_time_to_center(SCHW, 1.0) == pytest.approx(math.pi / 2 - 1, abs=1e-12)


@settings(max_examples=30)
@given(r0=st.floats(1e-4, 2.0), m=st.floats(0.1, 10))
def test_quadrature_against_mpmath(r0, m):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    r0 = r0 * m
    ref = mpmath.quad(lambda r: 1 / mpmath.sqrt(2 * m / r - 1), [0, r0])
    assert proper_time_to_center(SpacetimeParams(m), r0) == pytest.approx(float(ref), rel=1e-11)


def test_quadrature_rejects_spin_and_region():
    with pytest.raises(PreconditionError):
        proper_time_to_center(SpacetimeParams(1.0, 0.5), 1.0)
    with pytest.raises(PreconditionError):
        proper_time_to_center(SCHW, 2.5)


# --- general constants ------------------------------------------------------

def test_bound_orbit_oscillates_between_turning_points():
    c = ConstantsOfMotion(0.97, 4.0)
    roots = turning_points(c, SCHW)
    assert len(roots) == 3
    traj = integrate_general(SCHW, c, roots[-1], config=IntegrationConfig(max_turns=4))
    assert traj.turning_radii == pytest.approx([roots[1], roots[2], roots[1], roots[2]], rel=1e-10)
    assert traj.max_normalization_drift <= 1e-10


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_bound_orbit_radial_period_matches_quadrature():
    from scipy.integrate import quad

    from ksgeo.geometry import effective_potential

    c = ConstantsOfMotion(0.97, 4.0)
    _, r1, r2 = turning_points(c, SCHW)
    traj = integrate_general(SCHW, c, r2, config=IntegrationConfig(max_turns=1))
    # substitute r = r1 + (r2 - r1) sin^2 q to remove the endpoint singularities
    def integrand(q):
        r = r1 + (r2 - r1) * math.sin(q) ** 2
        return 2 * (r2 - r1) * math.sin(q) * math.cos(q) / math.sqrt(-2 * effective_potential(r, c, SCHW))
    ref, _ = quad(integrand, 0, math.pi / 2, epsabs=1e-12, epsrel=1e-12)
    assert traj.tau_span == pytest.approx(ref, rel=1e-8)


def test_circular_orbit_stays_circular():
    c = ConstantsOfMotion(math.sqrt(8 / 9), math.sqrt(12))
    traj = integrate_general(SCHW, c, 6.0, config=IntegrationConfig(max_tau=200.0))
    assert np.max(np.abs(traj.column("r") - 6.0)) <= 1e-8
    phi = traj.column("phi")
    assert phi[-1] == pytest.approx(200.0 * math.sqrt(12) / 36, rel=1e-9)


def test_plunge_crosses_horizon_and_marks_t_undefined():
    c = ConstantsOfMotion(0.95, 0.0)
    r_start = turning_points(c, SCHW)[-1]
    traj = integrate_general(SCHW, c, r_start)
    assert traj.termination == "terminal_radius"
    inside = [s for s in traj.samples if s.r < 2.0]
    outside = [s for s in traj.samples if s.r > 2.0]
    assert inside and all(math.isnan(s.t) for s in inside)
    assert all(math.isfinite(s.t) for s in outside)
    # phi is still defined at a = 0
    assert all(s.phi == 0.0 for s in inside)


def test_plunge_kerr_marks_phi_undefined():
    p = SpacetimeParams(1.0, 0.5)
    c = ConstantsOfMotion(0.95, 0.5)
    traj = integrate_general(p, c, 5.0)
    inner, outer = p.horizons()
    assert any(s.r < outer for s in traj.samples)
    assert all(math.isnan(s.phi) for s in traj.samples if s.r < outer - 1e-9)


def test_require_coordinate_time_raises_at_horizon():
    c = ConstantsOfMotion(0.95, 0.0)
    cfg = IntegrationConfig(require_coordinate_time=True)
    with pytest.raises(DomainError):
        integrate_general(SCHW, c, 10.0, config=cfg)


def test_forbidden_start_rejected_with_residual():
    c = ConstantsOfMotion(0.97, 4.0)
    with pytest.raises(PreconditionError) as info:
        integrate_general(SCHW, c, 5.0)
    assert info.value.residual > 0


def test_rdot_sign_validation():
    with pytest.raises(PreconditionError):
        integrate_general(SCHW, ConstantsOfMotion(0.97, 4.0), 7.0, rdot_sign=0)


def test_config_validation():
    with pytest.raises(PreconditionError):
        IntegrationConfig(rel_tol=0.0)
    with pytest.raises(PreconditionError):
        IntegrationConfig(direction="sideways")
    with pytest.raises(PreconditionError):
        IntegrationConfig(max_tau=-1.0)


def test_max_steps_guard():
    with pytest.raises(StepFailure):
        integrate_zero_constants(SCHW, 2.0, IntegrationConfig(max_steps=3))


@settings(max_examples=20)
@given(E=st.floats(0.9, 0.99), L=st.floats(3.7, 4.5))
def test_general_orbits_conserve_shell(E, L):
    c = ConstantsOfMotion(E, L)
    roots = turning_points(c, SCHW)
    if len(roots) < 3:
        return
    traj = integrate_general(SCHW, c, roots[-1], config=IntegrationConfig(max_turns=2))
    assert traj.max_normalization_drift <= 1e-10
    assert traj.turning_radii[0] == pytest.approx(roots[1], rel=1e-9)


def test_turning_point_event_is_accurate():
    p = SpacetimeParams(1.0, 0.6)
    traj = integrate_zero_constants(p, 1.8)
    last = traj.samples[-1]
    # r at the event is the root of Delta to integrator accuracy
    root = brentq(lambda r: r * r - 2 * r + 0.36, 0.1, 1.0)
    assert last.r == pytest.approx(root, abs=1e-10)


def test_quadrature_scales_with_mass():
    assert proper_time_to_center(SpacetimeParams(2.0), 4.0) == pytest.approx(2 * math.pi, abs=1e-10)


@pytest.mark.parametrize("a, r0", [(0.0, 2.0), (0.6, 1.8)])
def test_general_with_zero_constants_matches_dedicated_path(a, r0):
    p = SpacetimeParams(1.0, a)
    ref = integrate_zero_constants(p, r0)
    gen = integrate_general(p, ConstantsOfMotion(0.0, 0.0), r0)
    assert len(gen.samples) == len(ref.samples)
    for s, t in zip(gen.samples, ref.samples):
        assert s.tau == pytest.approx(t.tau, abs=1e-9)
        assert s.r == pytest.approx(t.r, abs=1e-9)
        assert s.rdot == pytest.approx(t.rdot, abs=1e-9)


def test_round_trip_infall_then_outfall_returns_to_start():
    p = SpacetimeParams(1.0, 0.6)
    down = integrate_zero_constants(p, 1.5, IntegrationConfig(max_tau=0.8))
    r1 = down.samples[-1].r
    up = integrate_zero_constants(p, r1, IntegrationConfig(direction="outfall", max_tau=0.8))
    assert up.samples[-1].r == pytest.approx(1.5, abs=1e-7)
