"""Sum-over-states susceptibilities of a two-state superposition.

Frequencies follow ``omega_ji = (E_j - E_i) / hbar`` so that the
population-weighted polarisability is positive below resonance.  All
values are SI (C m^2 / V).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

from .field import StandingWaveConfig
from .moldata import MoleculeModel, RoVibState
from .units import HBAR, convert_unit

# near-resonance guard, rad/s
DEFAULT_GUARD = convert_unit(1.0, "cm-1", "rad/s")


class NearResonanceError(ArithmeticError):
    pass


class FieldAmplitudeError(ValueError):
    pass


def unit_phase(theta: float) -> complex:
    """e^{i theta} with components below 1e-15 snapped to exact zero."""
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    return complex(c, s)


@dataclass(frozen=True)
class SuperpositionSpec:
    state1: RoVibState
    state2: RoVibState
    c1: complex
    c2: complex

    def __post_init__(self):
        norm = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|c1|^2 + |c2|^2 = {norm!r}, must be 1")

    @property
    def theta(self) -> float:
        """Relative phase arg(c1 c2*)."""
        return cmath.phase(self.c1 * self.c2.conjugate())

    @property
    def coherence(self) -> complex:
        return self.c1 * self.c2.conjugate()

    @property
    def populations(self) -> tuple[float, float]:
        return abs(self.c1) ** 2, abs(self.c2) ** 2

    @classmethod
    def from_populations(cls, state1, state2, p1: float, theta: float = 0.0):
        """c1 = sqrt(p1), c2 = sqrt(1 - p1) e^{-i theta}, so arg(c1 c2*) = theta."""
        if not 0.0 <= p1 <= 1.0:
            raise ValueError("population must lie in [0, 1]")
        c1 = complex(math.sqrt(p1))
        c2 = math.sqrt(1.0 - p1) * unit_phase(-theta)
        return cls(state1, state2, c1, c2)

    def swapped(self) -> "SuperpositionSpec":
        return SuperpositionSpec(self.state2, self.state1, self.c2, self.c1)


def superposition(model: MoleculeModel, qn1, qn2, p1: float, theta: float = 0.0) -> SuperpositionSpec:
    """Build a superposition of two ground-manifold states given as (nu, J, M)."""
    s1 = model.find(*qn1)
    s2 = model.find(*qn2)
    return SuperpositionSpec.from_populations(s1, s2, p1, theta)


def resonance_detuning(fields: StandingWaveConfig, sup: SuperpositionSpec) -> float:
    """(E1 - E2)/hbar + (w1 - w2); zero when E1 + hbar w1 = E2 + hbar w2."""
    return (sup.state1.energy - sup.state2.energy) / HBAR + (fields.omega1 - fields.omega2)


def _check_ground(model: MoleculeModel, sup: SuperpositionSpec) -> None:
    for s in (sup.state1, sup.state2):
        if s.label != model.ground_label:
            raise ValueError(f"state {s.id} is not in the ground manifold {model.ground_label}")


def _denominator(model, ref: RoVibState, j: str, shift: float, guard: float) -> float:
    d = (model.state(j).energy - ref.energy) / HBAR + shift
    if abs(d) < guard:
        cm = convert_unit(d, "rad/s", "cm-1")
        raise NearResonanceError(
            f"level {j} is {cm:+.4g} cm-1 from resonance (from {ref.id}, field term {shift:+.6g} rad/s)")
    return d


def chi_ni(model: MoleculeModel, sup: SuperpositionSpec, omega: float,
           guard: float = DEFAULT_GUARD) -> float:
    """Population-weighted (non-interference) polarisability at ``omega``."""
    total = 0.0
    for state, c in ((sup.state1, sup.c1), (sup.state2, sup.c2)):
        w = abs(c) ** 2
        if w == 0.0:
            continue
        acc = 0.0
        for j, mu in model.dipoles.neighbours(state.id).items():
            plus = _denominator(model, state, j, omega, guard)
            minus = _denominator(model, state, j, -omega, guard)
            acc += mu * mu * (1.0 / plus + 1.0 / minus)
        total += w * acc
    return total / HBAR


class Component(str, Enum):
    W1 = "w1"
    W2 = "w2"
    W21_PLUS_W1 = "w21+w1"
    W21_MINUS_W2 = "w21-w2"


def _common(model, sup):
    n1 = model.dipoles.neighbours(sup.state1.id)
    n2 = model.dipoles.neighbours(sup.state2.id)
    return [(j, n1[j], n2[j]) for j in sorted(n1.keys() & n2.keys())]


def coherence_sum(model: MoleculeModel, sup: SuperpositionSpec, fields: StandingWaveConfig,
                  which, guard: float = DEFAULT_GUARD) -> complex:
    """Interference sum without the field-amplitude ratio factor.

    For ``w1`` and ``w2`` the full susceptibility is this value times
    E2_0/E1_0 and E1_0/E2_0 respectively; the other two components carry
    no ratio.
    """
    which = Component(which)
    if sup.state1.parity != sup.state2.parity:
        return 0j
    s1, s2 = sup.state1, sup.state2
    coh = sup.coherence
    if coh == 0:
        return 0j
    w1, w2 = fields.omega1, fields.omega2
    acc = 0j
    for j, mu_j1, mu_j2 in _common(model, sup):
        p = mu_j1 * mu_j2
        if which is Component.W1:
            acc += coh * p * (1.0 / _denominator(model, s1, j, w2, guard)
                              + 1.0 / _denominator(model, s2, j, -w2, guard))
        elif which is Component.W2:
            acc += coh.conjugate() * p * (1.0 / _denominator(model, s2, j, w1, guard)
                                          + 1.0 / _denominator(model, s1, j, -w1, guard))
        elif which is Component.W21_PLUS_W1:
            # both pathways into e^{+i(2w1 - w2)t} carry c1 c2*
            acc += coh * p * (1.0 / _denominator(model, s1, j, w1, guard)
                              + 1.0 / _denominator(model, s2, j, -w1, guard))
        else:
            acc += coh * p * (1.0 / _denominator(model, s1, j, -w2, guard)
                              + 1.0 / _denominator(model, s2, j, w2, guard))
    return acc / HBAR


def chi_in(model: MoleculeModel, sup: SuperpositionSpec, fields: StandingWaveConfig,
           which, guard: float = DEFAULT_GUARD) -> complex:
    """Interference susceptibility, including the amplitude ratio for w1/w2."""
    which = Component(which)
    raw = coherence_sum(model, sup, fields, which, guard)
    if which is Component.W1:
        if fields.E1_0 == 0:
            raise FieldAmplitudeError("chi_in(w1) needs E1_0 != 0 (ratio E2_0/E1_0)")
        return raw * (fields.E2_0 / fields.E1_0)
    if which is Component.W2:
        if fields.E2_0 == 0:
            raise FieldAmplitudeError("chi_in(w2) needs E2_0 != 0 (ratio E1_0/E2_0)")
        return raw * (fields.E1_0 / fields.E2_0)
    return raw


@dataclass(frozen=True)
class SusceptibilitySet:
    """The six susceptibility components for one superposition and field.

    ``coh_w1``/``coh_w2`` hold the w1/w2 interference sums before the
    amplitude-ratio factor, so a configuration with one zero amplitude still
    yields a usable set; ``chi_in_w1``/``chi_in_w2`` apply the ratio.
    """

    chi_ni_w1: float
    chi_ni_w2: float
    coh_w1: complex
    coh_w2: complex
    chi_in_w21p1: complex
    chi_in_w21m2: complex
    E1_0: float
    E2_0: float

    @property
    def chi_in_w1(self) -> complex:
        if self.E1_0 == 0:
            raise FieldAmplitudeError("chi_in(w1) undefined for E1_0 = 0")
        return self.coh_w1 * (self.E2_0 / self.E1_0)

    @property
    def chi_in_w2(self) -> complex:
        if self.E2_0 == 0:
            raise FieldAmplitudeError("chi_in(w2) undefined for E2_0 = 0")
        return self.coh_w2 * (self.E1_0 / self.E2_0)

    def interference_zero(self) -> bool:
        return (self.coh_w1 == 0 and self.coh_w2 == 0
                and self.chi_in_w21p1 == 0 and self.chi_in_w21m2 == 0)

    def without_interference(self) -> "SusceptibilitySet":
        return SusceptibilitySet(self.chi_ni_w1, self.chi_ni_w2, 0j, 0j, 0j, 0j, self.E1_0, self.E2_0)

    def as_dict(self) -> dict:
        d = {"chi_ni_w1": self.chi_ni_w1, "chi_ni_w2": self.chi_ni_w2}
        for name in ("coh_w1", "coh_w2", "chi_in_w21p1", "chi_in_w21m2"):
            z = getattr(self, name)
            d[name + "_re"] = z.real
            d[name + "_im"] = z.imag
        d["E1_0"], d["E2_0"] = self.E1_0, self.E2_0
        return d


def susceptibility_set(model: MoleculeModel, sup: SuperpositionSpec, fields: StandingWaveConfig,
                       guard: float = DEFAULT_GUARD) -> SusceptibilitySet:
    _check_ground(model, sup)
    return SusceptibilitySet(
        chi_ni_w1=chi_ni(model, sup, fields.omega1, guard),
        chi_ni_w2=chi_ni(model, sup, fields.omega2, guard),
        coh_w1=coherence_sum(model, sup, fields, Component.W1, guard),
        coh_w2=coherence_sum(model, sup, fields, Component.W2, guard),
        chi_in_w21p1=coherence_sum(model, sup, fields, Component.W21_PLUS_W1, guard),
        chi_in_w21m2=coherence_sum(model, sup, fields, Component.W21_MINUS_W2, guard),
        E1_0=fields.E1_0,
        E2_0=fields.E2_0,
    )
