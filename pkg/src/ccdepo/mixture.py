"""Thermal mixtures of pairwise superpositions.

A rotationally thermal beam is pumped by a two-photon pulse into the mixture
``sum_JM w_JM (|c|^2 |J,M><J,M| + |d|^2 |J+2,M><J+2,M|)``, each member being
a coherent superposition; this module weights, prepares and deposits them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as const

from .dynamics import (DEFAULT_BIN, BeamConfig, DepositionHistogram, Ensemble, default_dt,
                       nozzle_span, propagate, sample_ensemble)
from .field import StandingWaveConfig
from .moldata import MoleculeModel
from .potential import AveragedPotential, OpticalPotentialSpec, find_extrema
from .suscept import SuperpositionSpec, susceptibility_set
from .units import WAVENUMBER_J

# reference preparation pulse and the ground-state population it leaves behind
REFERENCE_FIELD = 3.25e9  # V/m
REFERENCE_WIDTH = 75.4  # cm-1
REFERENCE_POPULATION = 0.8


def boltzmann_weights(model: MoleculeModel, temperature: float, cutoff: float = 0.99) -> dict[str, float]:
    """Rotational Boltzmann weights of the lowest ground vibrational ladder.

    Keyed by state id.  Each (J, M) state gets ``exp(-B J(J+1) / kT)``; the
    ladder is cut at the smallest J_max whose cumulative population reaches
    ``cutoff`` of the ladder total and the kept weights are renormalised.
    """
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    if not 0 < cutoff <= 1:
        raise ValueError("cutoff must lie in (0, 1]")
    ground = model.ground_states()
    if not ground:
        raise ValueError("model has no ground-manifold states")
    nu0 = min(s.nu for s in ground)
    states = [s for s in ground if s.nu == nu0]
    beta = model.rotational_constant / (const.k * temperature)
    raw = {s.id: math.exp(-beta * s.J * (s.J + 1)) for s in states}
    total = math.fsum(raw.values())
    by_j: dict[int, float] = {}
    for s in states:
        by_j[s.J] = by_j.get(s.J, 0.0) + raw[s.id]
    acc, j_max = 0.0, max(by_j)
    for J in sorted(by_j):
        acc += by_j[J]
        if acc >= cutoff * total * (1 - 1e-12):
            j_max = J
            break
    kept = {s.id: raw[s.id] for s in states if s.J <= j_max}
    norm = math.fsum(kept.values())
    return {k: v / norm for k, v in kept.items()}


def j_max_of(model: MoleculeModel, weights: dict[str, float]) -> int:
    return max(model.state(k).J for k in weights)


@dataclass(frozen=True)
class PreparationPulse:
    field_strength: float  # V/m
    spectral_width: float  # cm-1
    shape: str = "square"

    def __post_init__(self):
        if self.shape != "square":
            raise ValueError(f"unsupported pulse shape {self.shape!r}")
        if self.field_strength < 0:
            raise ValueError("field_strength must be >= 0")
        if not self.spectral_width > 0:
            raise ValueError("spectral_width must be > 0")

    @property
    def duration(self) -> float:
        """Transform-limited duration 1/(2 pi c dnu) of the square pulse, s."""
        return 1.0 / (2 * math.pi * const.c * 100.0 * self.spectral_width)


def _calibrated_coupling() -> float:
    ref = PreparationPulse(REFERENCE_FIELD, REFERENCE_WIDTH)
    area = 2.0 * math.acos(math.sqrt(REFERENCE_POPULATION))
    return area / (ref.field_strength ** 2 * ref.duration)


# effective two-photon coupling, rad per (V/m)^2 per s
TWO_PHOTON_COUPLING = _calibrated_coupling()


def preparation_coefficients(pulse: PreparationPulse, pair, coupling: float = TWO_PHOTON_COUPLING
                             ) -> tuple[complex, complex]:
    """(c, d) for |J,M> -> |J+2,M> under an effective two-photon Rabi pulse.

    ``pair`` is ``((J, M), (J2, M2))``.  The pulse area is
    ``coupling * F^2 * duration``; c = cos(A/2) and d = sin(A/2), both real so
    the prepared coherence has zero relative phase.
    """
    (J1, M1), (J2, M2) = pair
    if J2 - J1 != 2 or M1 != M2:
        raise ValueError(f"pair {pair} is not (J, M) -> (J+2, M)")
    area = coupling * pulse.field_strength ** 2 * pulse.duration
    return complex(math.cos(area / 2)), complex(math.sin(area / 2))


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    sup: SuperpositionSpec

    @property
    def label(self) -> str:
        s1, s2 = self.sup.state1, self.sup.state2
        return f"J={s1.J},M={s1.M}" if s1 is s2 else f"J={s1.J}->{s2.J},M={s1.M}"


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple[MixtureComponent, ...]
    temperature: float

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        w = [c.weight for c in self.components]
        if min(w) < 0:
            raise ValueError("weights must be non-negative")
        if abs(math.fsum(w) - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, must be 1")

    def table(self) -> list[dict]:
        rows = []
        for c in self.components:
            p1, p2 = c.sup.populations
            rows.append({"J": c.sup.state1.J, "M": c.sup.state1.M, "J2": c.sup.state2.J,
                         "w": c.weight, "c2": p1, "d2": p2})
        return rows


def thermal_mixture(model: MoleculeModel, temperature: float, pulse: PreparationPulse,
                    cutoff: float = 0.99) -> MixtureSpec:
    """Every populated (J, M) paired with (J+2, M); states without a partner stay pure."""
    weights = boltzmann_weights(model, temperature, cutoff)
    comps = []
    for sid, w in weights.items():
        s1 = model.state(sid)
        try:
            s2 = model.find(s1.nu, s1.J + 2, s1.M)
        except KeyError:
            comps.append(MixtureComponent(w, SuperpositionSpec(s1, s1, 1 + 0j, 0j)))
            continue
        c, d = preparation_coefficients(pulse, ((s1.J, s1.M), (s2.J, s2.M)))
        comps.append(MixtureComponent(w, SuperpositionSpec(s1, s2, c, d)))
    comps.sort(key=lambda c: (c.sup.state1.J, c.sup.state1.M))
    return MixtureSpec(tuple(comps), temperature)


def allocate(weights, n: int) -> list[int]:
    """Largest-remainder rounding of ``w * n`` to integers summing to ``n``."""
    w = np.asarray(weights, dtype=float)
    exact = w * n / w.sum()
    base = np.floor(exact).astype(int)
    short = n - int(base.sum())
    # stable ordering: larger remainder first, then lower index
    order = sorted(range(len(w)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base.tolist()


def component_specs(model, mixture: MixtureSpec, field: StandingWaveConfig,
                    interference: bool = True) -> list[OpticalPotentialSpec]:
    out = []
    for c in mixture.components:
        spec = OpticalPotentialSpec(susceptibility_set(model, c.sup, field), field)
        out.append(spec if interference else spec.incoherent())
    return out


@dataclass
class MixtureResult:
    histogram: DepositionHistogram
    components: list[DepositionHistogram]
    counts: list[int]
    mixture: MixtureSpec
    meta: dict = field(default_factory=dict)


def simulate_mixture_deposition(model, mixture: MixtureSpec, field: StandingWaveConfig,
                                beam: BeamConfig, n: int, seed: int,
                                bin_width: float = DEFAULT_BIN, *, interference: bool = True,
                                dt: float | None = None, workers: int = 1) -> MixtureResult:
    """Deposit ``n`` molecules drawn from the mixture and sum the histograms.

    Component k uses the random streams ``(seed, k, i)``, so re-running one
    component alone reproduces its share exactly.
    """
    specs = component_specs(model, mixture, field, interference)
    counts = allocate([c.weight for c in mixture.components], n)
    if dt is None:
        dt = min(default_dt(s, beam) for s, k in zip(specs, counts) if k > 0)

    xs, vs, coef = [], [], {"a1": [], "a2": [], "b": []}
    for k, (spec, nk) in enumerate(zip(specs, counts)):
        if nk == 0:
            continue
        ens = sample_ensemble(beam, nk, seed, prefix=(k,))
        xs.append(ens.x)
        vs.append(ens.vx)
        a1, a2, b = spec.coefficients
        for key, val in (("a1", a1), ("a2", a2), ("b", b)):
            coef[key].append(np.full(nk, val))
    pot = AveragedPotential(np.concatenate(coef["a1"]), np.concatenate(coef["a2"]),
                            np.concatenate(coef["b"]), field.k1, field.k2, field.theta_F)
    ens = Ensemble(np.concatenate(xs), np.concatenate(vs))
    res = propagate(pot, ens, beam, dt, workers=workers)

    span = nozzle_span(beam)
    total = DepositionHistogram.from_positions(res.x_final, bin_width, span=span)
    per = []
    lo = 0
    for nk in counts:
        if nk == 0:
            per.append(DepositionHistogram(bin_width, total.start_index,
                                           np.zeros_like(total.counts), 0))
            continue
        h = DepositionHistogram.from_positions(res.x_final[lo:lo + nk], bin_width, span=span)
        per.append(DepositionHistogram(bin_width, total.start_index,
                                       h.aligned(total.start_index, len(total.counts)), nk))
        lo += nk
    total.meta.update(dt=res.dt, n_steps=res.n_steps, wall_time=res.wall_time, seed=seed, n=n)
    return MixtureResult(total, per, counts, mixture, dict(total.meta))


def argmin_spread(specs, interval) -> float:
    """Largest displacement of any potential minimum relative to the first spec's minima.

    Returns inf if the components do not share the same number of minima.
    """
    ref = [e.x for e in find_extrema(specs[0], interval) if e.kind == "minimum"]
    worst = 0.0
    for spec in specs[1:]:
        mins = [e.x for e in find_extrema(spec, interval) if e.kind == "minimum"]
        if len(mins) != len(ref):
            return math.inf
        worst = max(worst, max((abs(a - b) for a, b in zip(ref, mins)), default=0.0))
    return worst


def thermal_energy(J: int, rotational_constant_cm: float) -> float:
    """B J(J+1) in joules for a constant given in cm-1."""
    return rotational_constant_cm * WAVENUMBER_J * J * (J + 1)
