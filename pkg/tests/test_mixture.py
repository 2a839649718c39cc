import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import constants as const

from ccdepo.dynamics import BeamConfig, simulate_deposition
from ccdepo.field import StandingWaveConfig
from ccdepo.moldata import loads_molecule
from ccdepo.mixture import (REFERENCE_FIELD, REFERENCE_WIDTH, MixtureComponent, MixtureSpec,
                            PreparationPulse, allocate, argmin_spread, boltzmann_weights,
                            component_specs, j_max_of, preparation_coefficients,
                            simulate_mixture_deposition, thermal_mixture)
from ccdepo.suscept import superposition

from oracles import boltzmann_jmax

LADDER = """
[meta]
name = ladder
mass = 28 u
rotational_constant = {B} cm-1
ground = X
parity.* = (-1)^J

[states]
fields = id label nu J M energy
units = energy:cm-1
{rows}
e A 0 1 0 60000.0

[dipoles]
fields = a b mu
units = mu:debye
{dip}
"""


def ladder(levels, B=2.0):
    rows, dip = [], []
    for J, M in levels:
        sid = f"j{J}m{M}".replace("-", "n")
        rows.append(f"{sid} X 0 {J} {M} {B * J * (J + 1)}")
        if J == 0:
            dip.append(f"{sid} e 0.5")
    return loads_molecule(LADDER.format(B=B, rows="\n".join(rows), dip="\n".join(dip)))


def test_single_level_weight_one():
    m = ladder([(0, 0)])
    assert boltzmann_weights(m, 300.0) == {"j0m0": 1.0}


def test_degenerate_levels_share_equally():
    m = ladder([(1, -1), (1, 1)])
    w = boltzmann_weights(m, 300.0)
    assert w == pytest.approx({"j1mn1": 0.5, "j1m1": 0.5})


def test_weights_follow_boltzmann_factor():
    m = ladder([(0, 0), (1, 0)], B=100.0)
    w = boltzmann_weights(m, 200.0, cutoff=1.0)
    ratio = math.exp(-100.0 * 100 * const.h * const.c * 2 / (const.k * 200.0))
    assert w["j1m0"] / w["j0m0"] == pytest.approx(ratio, rel=1e-9)


def test_weights_normalised(n2):
    for T in (30.0, 298.0, 1000.0):
        w = boltzmann_weights(n2, T)
        assert math.fsum(w.values()) == pytest.approx(1.0, abs=1e-12)
        assert all(v > 0 for v in w.values())


@pytest.mark.parametrize("T", [20.0, 77.0, 298.0])
def test_jmax_matches_direct_sum(n2, T):
    B_cm = n2.rotational_constant / (const.h * const.c * 100.0)
    assert j_max_of(n2, boltzmann_weights(n2, T)) == boltzmann_jmax(B_cm, T, 0.99)


def test_bad_temperature(n2):
    with pytest.raises(ValueError):
        boltzmann_weights(n2, 0.0)
    with pytest.raises(ValueError):
        boltzmann_weights(n2, 300.0, cutoff=0.0)


def test_zero_field_pulse_leaves_ground():
    c, d = preparation_coefficients(PreparationPulse(0.0, 75.4), ((0, 0), (2, 0)))
    assert (c, d) == (1, 0)


def test_reference_pulse_population():
    c, d = preparation_coefficients(PreparationPulse(REFERENCE_FIELD, REFERENCE_WIDTH), ((3, 1), (5, 1)))
    assert abs(c) ** 2 == pytest.approx(0.80, abs=0.05)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1e10), st.floats(1.0, 500.0))
def test_coefficients_normalised(F, width):
    c, d = preparation_coefficients(PreparationPulse(F, width), ((0, 0), (2, 0)))
    assert abs(c) ** 2 + abs(d) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_pair_must_be_raman_allowed():
    p = PreparationPulse(REFERENCE_FIELD, REFERENCE_WIDTH)
    with pytest.raises(ValueError):
        preparation_coefficients(p, ((0, 0), (1, 0)))
    with pytest.raises(ValueError):
        preparation_coefficients(p, ((0, 0), (2, 1)))


def test_pulse_validation():
    with pytest.raises(ValueError):
        PreparationPulse(1.0, 0.0)
    with pytest.raises(ValueError):
        PreparationPulse(1.0, 10.0, shape="gaussian")


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30).filter(lambda w: sum(w) > 0),
       st.integers(0, 100000))
def test_allocate_sums_to_n(weights, n):
    out = allocate(weights, n)
    assert sum(out) == n
    exact = np.asarray(weights) * n / sum(weights)
    assert np.all(np.abs(np.asarray(out) - exact) < 1.0)


def test_mixture_spec_validation(n2):
    sup = superposition(n2, (0, 0, 0), (0, 2, 0), 0.5)
    with pytest.raises(ValueError):
        MixtureSpec((MixtureComponent(0.5, sup),), 300.0)
    with pytest.raises(ValueError):
        MixtureSpec((), 300.0)


def test_thermal_mixture_table(n2):
    mix = thermal_mixture(n2, 298.0, PreparationPulse(REFERENCE_FIELD, REFERENCE_WIDTH))
    rows = mix.table()
    assert math.fsum(r["w"] for r in rows) == pytest.approx(1.0)
    paired = [r for r in rows if r["J2"] == r["J"] + 2]
    assert paired
    for r in paired:
        assert r["c2"] + r["d2"] == pytest.approx(1.0)
        assert r["c2"] == pytest.approx(0.8, abs=0.05)
    for r in rows:
        if r["J2"] == r["J"]:
            assert r["d2"] == 0.0


@pytest.fixture
def small_beam(n2):
    return BeamConfig(600.0, 2.944e-6, 0.0, 0.2e-6, n2.mass)


def test_single_component_matches_plain_deposit(n2, field2, small_beam):
    sup = superposition(n2, (0, 0, 0), (0, 2, 0), 0.2)
    mix = MixtureSpec((MixtureComponent(1.0, sup),), 298.0)
    res = simulate_mixture_deposition(n2, mix, field2, small_beam, 2000, 17)
    plain = simulate_deposition(n2, sup, field2, small_beam, 2000, 17, prefix=(0,))
    assert np.array_equal(res.histogram.aligned(plain.start_index, len(plain.counts)), plain.counts)
    assert res.histogram.counts.sum() == 2000


def test_components_sum_to_total(n2, field2, small_beam):
    mix = thermal_mixture(n2, 298.0, PreparationPulse(REFERENCE_FIELD, REFERENCE_WIDTH))
    res = simulate_mixture_deposition(n2, mix, field2, small_beam, 3000, 5)
    assert sum(res.counts) == 3000
    stacked = sum(h.counts for h in res.components)
    np.testing.assert_array_equal(stacked, res.histogram.counts)
    for h, k in zip(res.components, res.counts):
        assert h.counts.sum() == k


def test_argmin_spread_identical_specs(n2, field2):
    mix = thermal_mixture(n2, 298.0, PreparationPulse(REFERENCE_FIELD, REFERENCE_WIDTH))
    specs = component_specs(n2, mix, field2)[:3]
    assert argmin_spread([specs[0], specs[0]], (-1e-6, 1e-6)) == 0.0
    assert argmin_spread(specs, (-1.5e-6, 1.5e-6)) < 1.403e-9


def test_argmin_spread_detects_mismatch(n2, field2):
    a = superposition(n2, (0, 0, 0), (0, 2, 0), 0.2)
    specs = component_specs(n2, MixtureSpec((MixtureComponent(1.0, a),), 1.0), field2)
    other = component_specs(n2, MixtureSpec((MixtureComponent(1.0, a),), 1.0),
                            StandingWaveConfig(field2.E1_0, 0.0, field2.lambda1, field2.lambda2))
    assert argmin_spread(specs + other, (-1.5e-6, 1.5e-6)) > 1.403e-9
