import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from ccdepo.field import StandingWaveConfig
from ccdepo.potential import (TIME_DEPENDENT, AveragedPotential, OpticalPotentialSpec, curvature_at,
                              find_extrema, force_at, potential_averaged, potential_time_dependent,
                              sample_potential, well_period)
from ccdepo.suscept import SusceptibilitySet, superposition, susceptibility_set


def spec_for(model, field, p1=0.2, theta=0.0, qn2=(0, 2, 0)):
    sup = superposition(model, (0, 0, 0), qn2, p1, theta)
    return OpticalPotentialSpec(susceptibility_set(model, sup, field), field)


def test_zero_field_is_flat(n2):
    f = StandingWaveConfig(0.0, 0.0, 0.628e-6, 0.736e-6)
    v_ni, v_in = potential_averaged(np.linspace(-1e-6, 1e-6, 50), spec_for(n2, f))
    assert not np.any(v_ni) and not np.any(v_in)


def test_vin_vanishes_on_k1_nodes(n2, field2):
    spec = spec_for(n2, field2)
    x = (np.arange(-5, 5) + 0.5) * math.pi / field2.k1
    _, v_in = potential_averaged(x, spec)
    _, ref = potential_averaged(np.array([0.0]), spec)
    # cos(k1 x) is only ~1e-16 at a floating-point node
    assert np.max(np.abs(v_in)) <= 1e-13 * abs(ref[0])


def test_mismatched_amplitudes_rejected(n2, field2):
    chi = susceptibility_set(n2, superposition(n2, (0, 0, 0), (0, 2, 0), 0.2), field2)
    with pytest.raises(ValueError):
        OpticalPotentialSpec(chi, field2.replace(E1_0=1.0))
    with pytest.raises(ValueError):
        OpticalPotentialSpec(chi, field2, mode="sometimes")


def test_averaged_ops_refuse_time_dependent_mode(n2, field2):
    spec = spec_for(n2, field2).with_mode(TIME_DEPENDENT)
    with pytest.raises(ValueError):
        force_at(0.0, spec)


def test_single_wave_force_closed_form(n2, single_wave):
    spec = spec_for(n2, single_wave, p1=1.0)
    x = np.linspace(-1e-6, 1e-6, 101)
    a1 = 8 * single_wave.E1_0 ** 2 * spec.chi.chi_ni_w1
    expected = -a1 * single_wave.k1 * np.sin(2 * single_wave.k1 * x)
    np.testing.assert_allclose(force_at(x, spec), expected, rtol=1e-12, atol=1e-12 * a1 * single_wave.k1)


def test_single_wave_minima(n2, single_wave):
    spec = spec_for(n2, single_wave, p1=1.0)
    lam = single_wave.lambda1
    mins = [e for e in find_extrema(spec, (-1.01 * lam, 1.01 * lam)) if e.kind == "minimum"]
    assert len(mins) == 5
    np.testing.assert_allclose([e.x for e in mins], np.arange(-2, 3) * lam / 2, atol=1e-9 * 2.02 * lam)
    for e in mins:
        assert abs(float(force_at(e.x, spec))) <= 1e-6 * abs(e.value) * single_wave.k1


@pytest.mark.parametrize("dtheta", [0.3, 1.0, -2.0])
def test_theta_shift_moves_extrema(n2, dtheta):
    f = StandingWaveConfig(0.0, 1e7, 0.628e-6, 0.736e-6, theta_F=0.1)
    spec = spec_for(n2, f)
    lo, hi = -2e-6, 2e-6
    a = [e.x for e in find_extrema(spec, (lo, hi)) if e.kind == "minimum"]
    shifted = spec_for(n2, f.replace(theta_F=0.1 + dtheta))
    b = [e.x for e in find_extrema(shifted, (lo - 1e-6, hi + 1e-6)) if e.kind == "minimum"]
    want = [x - dtheta / f.k2 for x in a]
    for w in want:
        assert min(abs(np.array(b) - w)) <= 2 * 1e-9 * 5e-6


def test_fig2_minima_aperiodic(n2, field2):
    spec = spec_for(n2, field2)
    ext = [e for e in find_extrema(spec, (0.0, 3e-6)) if e.kind == "minimum"]
    # dense scan at 10x resolution as an independent check
    x = np.linspace(0.0, 3e-6, 30001)
    v = sample_potential(spec, x).V
    idx = np.flatnonzero((v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])) + 1
    assert len(idx) == len(ext)
    np.testing.assert_allclose([e.x for e in ext], x[idx], atol=2 * (x[1] - x[0]))
    depths = np.array([e.value for e in ext])
    assert np.ptp(depths) > 0.05 * np.max(np.abs(depths))
    gaps = np.diff([e.x for e in ext])
    assert np.ptp(gaps) > 0.02e-6


def test_grid_floor(n2, field2):
    with pytest.raises(ValueError):
        find_extrema(spec_for(n2, field2), (0.0, 3e-6), grid=20)


def test_flat_potential_has_no_extrema(n2):
    f = StandingWaveConfig(0.0, 0.0, 0.628e-6, 0.736e-6)
    assert find_extrema(spec_for(n2, f), (0, 1e-6)) == []


def test_cos2_well_period():
    m = 4e-26
    chi = SusceptibilitySet(1.0, 0.0, 0j, 0j, 0j, 0j, 1.0, 0.0)
    f = StandingWaveConfig(1.0, 0.0, 1e-6, 1e-6)
    spec = OpticalPotentialSpec(chi, f)
    # cos^2 well: V'' at the minimum is 2 a1 k1^2 with a1 = 8 chi
    expected = 2 * math.pi * math.sqrt(m / (2 * 8.0 * f.k1 ** 2))
    assert well_period(spec, 0.0, m) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        well_period(spec, f.lambda1 / 4, m)


def test_small_oscillation_matches_harmonic_period(n2, single_wave):
    spec = spec_for(n2, single_wave, p1=1.0)
    T = well_period(spec, 0.0, n2.mass)
    d = 0.01 * single_wave.lambda1

    def rhs(t, y):
        return [y[1], float(force_at(y[0], spec)) / n2.mass]

    ev = lambda t, y: y[1]
    ev.direction = -1.0
    sol = solve_ivp(rhs, (0, 1.5 * T), [d, 0.0], events=ev, rtol=1e-10, atol=1e-20, max_step=T / 200)
    # back at the starting turning point: velocity turns from + to -
    period = [t for t in sol.t_events[0] if t > 0.25 * T][0]
    assert period == pytest.approx(T, rel=0.01)


def test_time_average_equals_averaged(n2, field2):
    spec = spec_for(n2, field2, theta=0.4)
    td = spec.with_mode(TIME_DEPENDENT)
    x = np.linspace(-2e-6, 2e-6, 1000)
    period = 2 * math.pi / abs(field2.omega1 - field2.omega2)
    ts = np.arange(64) * period / 64  # exact for trigonometric polynomials of low order
    acc_ni = np.zeros_like(x)
    acc_in = np.zeros_like(x)
    for t in ts:
        a, b = potential_time_dependent(x, t, td)
        acc_ni += a
        acc_in += b
    v_ni, v_in = potential_averaged(x, spec)
    scale = np.max(np.abs(v_ni + v_in))
    assert np.max(np.abs(acc_ni / 64 - v_ni)) <= 1e-6 * scale
    assert np.max(np.abs(acc_in / 64 - v_in)) <= 1e-6 * scale


def test_time_dependent_at_zero_includes_cross_term(n2, field2):
    spec = spec_for(n2, field2)
    td = spec.with_mode(TIME_DEPENDENT)
    x = np.linspace(-1e-6, 1e-6, 7)
    v_ni_t, _ = potential_time_dependent(x, 0.0, td)
    v_ni, _ = potential_averaged(x, spec)
    c = spec.chi
    cross = -8 * field2.E1_0 * field2.E2_0 * np.cos(field2.k1 * x) * np.cos(field2.k2 * x + field2.theta_F) \
        * (c.chi_ni_w1 + c.chi_ni_w2)
    np.testing.assert_allclose(v_ni_t - v_ni, cross, rtol=1e-9, atol=1e-9 * np.max(np.abs(cross)))


def test_equal_frequencies_stay_static(n2):
    f = StandingWaveConfig(1e6, 1e6, 0.7e-6, 0.7e-6)
    td = spec_for(n2, f, p1=1.0).with_mode(TIME_DEPENDENT)
    x = np.linspace(0, 1e-6, 11)
    a = potential_time_dependent(x, 0.0, td)
    b = potential_time_dependent(x, 3.3e-9, td)
    np.testing.assert_array_equal(a[0], b[0])
    avg, _ = potential_averaged(x, spec_for(n2, f, p1=1.0))
    assert not np.allclose(a[0], avg, rtol=1e-3, atol=0)


@settings(max_examples=25, deadline=None)
@given(a1=st.floats(-1e-27, 1e-27), a2=st.floats(-1e-27, 1e-27), b=st.floats(-1e-27, 1e-27),
       theta=st.floats(-math.pi, math.pi), seed=st.integers(0, 2 ** 16))
def test_force_is_negative_gradient(a1, a2, b, theta, seed):
    k1, k2 = 2 * math.pi / 0.628e-6, 2 * math.pi / 0.736e-6
    pot = AveragedPotential(a1, a2, b, k1, k2, theta)
    x = np.random.default_rng(seed).uniform(-3e-6, 3e-6, 50)
    h = 1e-12
    fd = -(pot.total(x + h) - pot.total(x - h)) / (2 * h)
    scale = (abs(a1) + abs(a2) + abs(b)) * (k1 + k2)
    assert np.max(np.abs(pot.force(x) - fd)) <= 1e-6 * scale + 1e-300
    h2 = 1e-11
    fd2 = -(pot.force(x + h2) - pot.force(x - h2)) / (2 * h2)
    assert np.max(np.abs(pot.curvature(x) - fd2)) <= 1e-5 * scale * (k1 + k2) + 1e-300


def test_curvature_positive_at_minima(n2, field2):
    spec = spec_for(n2, field2)
    for e in find_extrema(spec, (-1e-6, 1e-6)):
        assert (e.curvature > 0) == (e.kind == "minimum")
        assert float(curvature_at(e.x, spec)) == e.curvature
