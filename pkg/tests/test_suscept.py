import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy import constants as const

from ccdepo.field import StandingWaveConfig, fig2_field
from ccdepo.suscept import (Component, NearResonanceError, SuperpositionSpec, chi_in, chi_ni,
                            resonance_detuning, superposition, susceptibility_set)
from ccdepo.units import DEBYE, HBAR, convert_unit

from oracles import induced_dipole_spectrum

CM = 2 * math.pi * const.c * 100.0


def wn(model, sid):
    return model.state(sid).energy / (const.h * const.c * 100.0)


def field_from_wavenumbers(nu1, nu2, e1=1.0, e2=1.0):
    return StandingWaveConfig(e1, e2, 1.0 / (100.0 * nu1), 1.0 / (100.0 * nu2))


def pure(model, sid):
    s = model.state(sid)
    return SuperpositionSpec(s, s, 1 + 0j, 0j)


def test_single_level_reduction(three_level):
    sup = pure(three_level, "g")
    w = 0.3 * CM * 52000.0
    expected = 0.0
    for sid, mu in (("e1", 1.2), ("e2", 0.7)):
        wj = CM * wn(three_level, sid)
        expected += 2 * (mu * DEBYE) ** 2 / HBAR * wj / (wj ** 2 - w ** 2)
    assert chi_ni(three_level, sup, w) == pytest.approx(expected, rel=1e-12)


def test_equal_rows_give_pure_state_value(three_level):
    g = three_level.state("g")
    mixed = SuperpositionSpec(g, g, complex(math.sqrt(0.5)), complex(math.sqrt(0.5)))
    w = CM * 15000.0
    assert chi_ni(three_level, mixed, w) == pytest.approx(chi_ni(three_level, pure(three_level, "g"), w), rel=1e-14)


@pytest.mark.parametrize("nu1", [6000.0, 9000.0, 12000.0, 15000.0, 18000.0, 0.8 * 52000.0])
def test_chi_ni_matches_perturbation_oracle(three_level, nu1):
    nu2 = 0.7 * nu1
    f = field_from_wavenumbers(nu1, nu2, 1.0, 0.6)
    sup = pure(three_level, "g")
    chi = susceptibility_set(three_level, sup, f)
    energies = {s.id: wn(three_level, s.id) for s in three_level.states}
    dips = {k: v / DEBYE for k, v in three_level.dipoles.items()}
    got = induced_dipole_spectrum(energies, dips, {"g": 1.0}, nu1, nu2, 1.0, 0.6, [nu1, nu2])
    assert got[nu1] == pytest.approx(chi.chi_ni_w1 * 1.0, rel=1e-6)
    assert got[nu2] == pytest.approx(chi.chi_ni_w2 * 0.6, rel=1e-6)


@pytest.mark.parametrize("nu1", [9000.0, 12000.0, 15000.0, 18000.0, 21000.0])
def test_full_dipole_matches_oracle_lambda(lam, nu1):
    gap = wn(lam, "g2") - wn(lam, "g0")
    nu2 = nu1 - gap  # resonance: E1 + hbar w1 = E2 + hbar w2
    e1, e2 = 1.0, 0.7
    f = field_from_wavenumbers(nu1, nu2, e1, e2)
    sup = SuperpositionSpec.from_populations(lam.state("g0"), lam.state("g2"), 0.6, 0.7)
    chi = susceptibility_set(lam, sup, f)
    energies = {s.id: wn(lam, s.id) for s in lam.states}
    dips = {k: v / DEBYE for k, v in lam.dipoles.items()}
    hi, lo = 2 * nu1 - nu2, 2 * nu2 - nu1
    got = induced_dipole_spectrum(energies, dips, {"g0": sup.c1, "g2": sup.c2}, nu1, nu2, e1, e2,
                                  [nu1, nu2, hi, -lo])
    want = {
        nu1: chi.chi_ni_w1 * e1 + chi.coh_w1 * e2,
        nu2: chi.chi_ni_w2 * e2 + chi.coh_w2 * e1,
        hi: chi.chi_in_w21p1 * e1,
        -lo: chi.chi_in_w21m2 * e2,
    }
    for k, v in want.items():
        assert abs(got[k] - v) <= 1e-6 * abs(v), k


def test_zero_coherence_gives_zero_interference(n2, field2):
    sup = superposition(n2, (0, 0, 0), (0, 2, 0), 1.0)
    for which in Component:
        assert chi_in(n2, sup, field2, which) == 0


def test_real_coefficients_give_real_components(n2, field2):
    chi = susceptibility_set(n2, superposition(n2, (0, 0, 0), (0, 2, 0), 0.3), field2)
    for z in (chi.coh_w1, chi.coh_w2, chi.chi_in_w21p1, chi.chi_in_w21m2):
        assert z.imag == 0.0


def test_quadrature_phase_kills_real_part(n2, field2):
    sup = superposition(n2, (0, 0, 0), (0, 2, 0), 0.5, math.pi / 2)
    val = chi_in(n2, sup, field2, "w1")
    assert abs(val.real) <= 1e-15 * abs(val)


def test_opposite_parity_pair_has_no_interference(n2, field2):
    sup = superposition(n2, (0, 0, 0), (0, 1, 0), 0.5)
    chi = susceptibility_set(n2, sup, field2)
    assert chi.interference_zero()


def test_positive_below_resonance_and_swap_symmetric(n2, field2):
    sup = superposition(n2, (0, 0, 0), (0, 2, 0), 0.2)
    a = susceptibility_set(n2, sup, field2)
    b = susceptibility_set(n2, sup.swapped(), field2)
    assert a.chi_ni_w1 > 0 and a.chi_ni_w2 > 0
    assert b.chi_ni_w1 == pytest.approx(a.chi_ni_w1, rel=1e-14)
    assert b.chi_ni_w2 == pytest.approx(a.chi_ni_w2, rel=1e-14)


def test_ratio_linearity(lam):
    sup = SuperpositionSpec.from_populations(lam.state("g0"), lam.state("g2"), 0.5)
    f = field_from_wavenumbers(15000.0, 12600.0, 1.0, 1.0)
    base = chi_in(lam, sup, f, "w1")
    for ratio in (1e2, 1e4):
        scaled = chi_in(lam, sup, f.replace(E2_0=ratio), "w1")
        assert scaled == pytest.approx(base * ratio, rel=1e-13)
    # chi_ni does not see the amplitudes at all
    a = susceptibility_set(lam, sup, f)
    b = susceptibility_set(lam, sup, f.replace(E1_0=3.0, E2_0=5e3))
    assert (a.chi_ni_w1, a.chi_ni_w2) == (b.chi_ni_w1, b.chi_ni_w2)


def test_resonance_detuning_values(n2, field2):
    d = 1 / 0.628e-4 - 1 / 0.736e-4
    assert d == pytest.approx(2336.6, abs=0.1)
    assert field2.omega1 - field2.omega2 == pytest.approx(4.401e14, rel=1e-3)
    sup = superposition(n2, (0, 0, 0), (0, 2, 0), 0.2)
    resid = convert_unit(resonance_detuning(field2, sup), "rad/s", "cm-1")
    gap = 6 * 1.9896
    assert abs(resid) == pytest.approx(d - gap, abs=0.5)


def test_degenerate_resonance_is_zero(three_level):
    g = three_level.state("g")
    f = StandingWaveConfig(1.0, 1.0, 0.7e-6, 0.7e-6)
    assert resonance_detuning(f, SuperpositionSpec(g, g, 1 + 0j, 0j)) == 0.0


def test_near_resonance_guard(three_level):
    sup = pure(three_level, "g")
    with pytest.raises(NearResonanceError):
        chi_ni(three_level, sup, CM * (52000.0 - 0.5))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_phase_scaling(p1, theta, alpha):
    from conftest import data_path
    from ccdepo.moldata import load_molecule
    lam = _lam_cache(data_path("lambda_test.mol"), load_molecule)
    f = field_from_wavenumbers(15000.0, 12600.0, 1.0, 2.0)
    a = susceptibility_set(lam, SuperpositionSpec.from_populations(lam.state("g0"), lam.state("g2"), p1, theta), f)
    b = susceptibility_set(lam, SuperpositionSpec.from_populations(lam.state("g0"), lam.state("g2"), p1, theta + alpha), f)
    # arg(c1 c2*) advances by alpha
    rot = cmath.exp(1j * alpha)
    assert b.coh_w1 == pytest.approx(a.coh_w1 * rot, rel=1e-12, abs=1e-60)
    assert b.coh_w2 == pytest.approx(a.coh_w2 * rot.conjugate(), rel=1e-12, abs=1e-60)
    assert b.chi_ni_w1 == pytest.approx(a.chi_ni_w1, rel=1e-14)


_CACHE = {}


def _lam_cache(path, loader):
    if path not in _CACHE:
        _CACHE[path] = loader(path)
    return _CACHE[path]


def test_fig2_field_values():
    f = fig2_field()
    assert f.E2_0 / f.E1_0 == 1e4
    assert f.beat_length == pytest.approx(0.628e-6 * 0.736e-6 / (0.736e-6 - 0.628e-6), rel=1e-12)
