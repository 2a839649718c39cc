"""Optical potential of a superposition in the two-colour standing wave.

The averaged potential is

    V_ni(x) = -2 [4 E1^2 cos^2(k1 x) chi_ni(w1) + 4 E2^2 cos^2(k2 x + theta_F) chi_ni(w2)]
    V_in(x) = -2 [4 E1^2 Re chi_in(w1) + 4 E2^2 Re chi_in(w2)] cos(k1 x) cos(k2 x + theta_F)

with every term oscillating at w1 - w2 dropped.  The full form keeps them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .field import StandingWaveConfig
from .suscept import SusceptibilitySet

AVERAGED = "averaged"
TIME_DEPENDENT = "full-time-dependent"


@dataclass(frozen=True)
class OpticalPotentialSpec:
    chi: SusceptibilitySet
    field: StandingWaveConfig
    mode: str = AVERAGED

    def __post_init__(self):
        if self.mode not in (AVERAGED, TIME_DEPENDENT):
            raise ValueError(f"unknown potential mode {self.mode!r}")
        if (self.chi.E1_0, self.chi.E2_0) != (self.field.E1_0, self.field.E2_0):
            raise ValueError("susceptibilities were computed for different field amplitudes")

    # 8 E1^2 chi_ni(w1), 8 E2^2 chi_ni(w2), 8 [E1^2 Re chi_in(w1) + E2^2 Re chi_in(w2)]
    @property
    def coefficients(self) -> tuple[float, float, float]:
        E1, E2 = self.field.E1_0, self.field.E2_0
        a1 = 8.0 * E1 * E1 * self.chi.chi_ni_w1
        a2 = 8.0 * E2 * E2 * self.chi.chi_ni_w2
        # E1^2 chi_in(w1) = E1 E2 coh_w1 and E2^2 chi_in(w2) = E1 E2 coh_w2
        b = 8.0 * E1 * E2 * (self.chi.coh_w1.real + self.chi.coh_w2.real)
        return a1, a2, b

    def incoherent(self) -> "OpticalPotentialSpec":
        """Same field, interference contributions removed."""
        return replace(self, chi=self.chi.without_interference())

    def with_mode(self, mode: str) -> "OpticalPotentialSpec":
        return replace(self, mode=mode)


class AveragedPotential:
    """Vectorised evaluator of the averaged potential (hot path of the dynamics).

    ``a1``, ``a2`` and ``b`` may be scalars or per-trajectory arrays, which is
    how a thermal mixture is propagated in one pass.
    """

    __slots__ = ("a1", "a2", "b", "k1", "k2", "theta")

    def __init__(self, a1, a2, b, k1, k2, theta):
        self.a1, self.a2, self.b = a1, a2, b
        self.k1, self.k2, self.theta = k1, k2, theta

    @classmethod
    def from_spec(cls, spec: "OpticalPotentialSpec") -> "AveragedPotential":
        a1, a2, b = spec.coefficients
        return cls(a1, a2, b, spec.field.k1, spec.field.k2, spec.field.theta_F)

    def take(self, sl) -> "AveragedPotential":
        pick = lambda c: c[sl] if np.ndim(c) else c
        return AveragedPotential(pick(self.a1), pick(self.a2), pick(self.b),
                                 self.k1, self.k2, self.theta)

    def parts(self, x):
        c1 = np.cos(self.k1 * x)
        cu = np.cos(self.k2 * x + self.theta)
        v_ni = -self.a1 * c1 * c1 - self.a2 * cu * cu
        v_in = -self.b * c1 * cu
        return v_ni, v_in

    def total(self, x):
        v_ni, v_in = self.parts(x)
        return v_ni + v_in

    def force(self, x):
        p = self.k1 * x
        u = self.k2 * x + self.theta
        s1, c1 = np.sin(p), np.cos(p)
        su, cu = np.sin(u), np.cos(u)
        dv = (2.0 * self.a1 * self.k1 * s1 * c1 + 2.0 * self.a2 * self.k2 * su * cu
              + self.b * (self.k1 * s1 * cu + self.k2 * c1 * su))
        return -dv

    def curvature(self, x):
        p = self.k1 * x
        u = self.k2 * x + self.theta
        s1, c1 = np.sin(p), np.cos(p)
        su, cu = np.sin(u), np.cos(u)
        k1, k2 = self.k1, self.k2
        return (2.0 * self.a1 * k1 * k1 * np.cos(2 * p) + 2.0 * self.a2 * k2 * k2 * np.cos(2 * u)
                + self.b * ((k1 * k1 + k2 * k2) * c1 * cu - 2.0 * k1 * k2 * s1 * su))


def evaluator(spec: OpticalPotentialSpec) -> AveragedPotential:
    _require(spec, AVERAGED)
    return AveragedPotential.from_spec(spec)


def _require(spec, mode):
    if spec.mode != mode:
        raise ValueError(f"operation needs mode={mode!r}, spec has {spec.mode!r}")


def potential_averaged(x, spec: OpticalPotentialSpec):
    """(V_ni, V_in) in joules at position(s) ``x``."""
    return evaluator(spec).parts(np.asarray(x, dtype=float))


def potential_time_dependent(x, t, spec: OpticalPotentialSpec):
    """(V_ni, V_in) including the terms oscillating at w1 - w2."""
    _require(spec, TIME_DEPENDENT)
    x = np.asarray(x, dtype=float)
    f, chi = spec.field, spec.chi
    E1, E2 = f.E1_0, f.E2_0
    c1 = np.cos(f.k1 * x)
    cu = np.cos(f.k2 * x + f.theta_F)
    dw = f.omega1 - f.omega2
    cos_t, sin_t = np.cos(dw * t), np.sin(dw * t)

    static = AveragedPotential.from_spec(spec)
    v_ni, v_in = static.parts(x)
    v_ni = v_ni - 8.0 * E1 * E2 * c1 * cu * (chi.chi_ni_w1 + chi.chi_ni_w2) * cos_t
    # E1 E2 chi_in(w1) = E2^2 coh_w1 ; E1 E2 chi_in(w2) = E1^2 coh_w2
    z1 = E2 * E2 * chi.coh_w1
    z2 = E1 * E1 * chi.coh_w2
    v_in = (v_in
            - 8.0 * cu * cu * (z1.real * cos_t - z1.imag * sin_t)
            - 8.0 * c1 * c1 * (z2.real * cos_t + z2.imag * sin_t))
    return v_ni, v_in


def force_at(x, spec: OpticalPotentialSpec):
    """-dV/dx of the averaged potential, newtons."""
    return evaluator(spec).force(np.asarray(x, dtype=float))


def curvature_at(x, spec: OpticalPotentialSpec):
    return evaluator(spec).curvature(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ExtremumRecord:
    x: float
    value: float
    kind: str  # "minimum" | "maximum"
    curvature: float


@dataclass(frozen=True)
class PotentialSamples:
    x: np.ndarray
    V_ni: np.ndarray
    V_in: np.ndarray

    @property
    def V(self) -> np.ndarray:
        return self.V_ni + self.V_in


def sample_potential(spec: OpticalPotentialSpec, x) -> PotentialSamples:
    x = np.asarray(x, dtype=float)
    v_ni, v_in = potential_averaged(x, spec)
    return PotentialSamples(x, np.asarray(v_ni), np.asarray(v_in))


def find_extrema(spec: OpticalPotentialSpec, interval, grid: int | None = None,
                 points_per_wavelength: int = 1000) -> list[ExtremumRecord]:
    """Bracket every sign change of the force on a grid and refine it.

    ``grid`` is the total number of grid points; by default
    ``points_per_wavelength`` per lambda2 across the interval.
    """
    ev = evaluator(spec)
    lo, hi = map(float, interval)
    span = hi - lo
    lam_min = min(spec.field.lambda1, spec.field.lambda2)
    if grid is None:
        grid = int(math.ceil(points_per_wavelength * span / spec.field.lambda2)) + 1
    if grid < 10 * span / lam_min:
        raise ValueError(f"grid of {grid} points is below 10 points per wavelength")
    xs = np.linspace(lo, hi, grid)
    fs = ev.force(xs)
    if not np.any(fs):
        return []
    tol = span * 1e-9
    roots = []
    for i in range(grid - 1):
        fa, fb = fs[i], fs[i + 1]
        if fa == 0.0:
            roots.append(xs[i])
        elif fa * fb < 0.0:
            roots.append(brentq(lambda z: float(ev.force(z)), xs[i], xs[i + 1], xtol=tol, rtol=1e-15))
    if fs[-1] == 0.0:
        roots.append(xs[-1])

    out = []
    for r in roots:
        curv = float(ev.curvature(r))
        if curv == 0.0:
            continue
        v_ni, v_in = ev.parts(r)
        out.append(ExtremumRecord(float(r), float(v_ni + v_in),
                                  "minimum" if curv > 0 else "maximum", curv))
    out.sort(key=lambda e: e.x)
    return out


def well_period(spec: OpticalPotentialSpec, x_min: float, mass: float) -> float:
    """Harmonic oscillation period 2*pi*sqrt(m / V'') at a potential minimum."""
    curv = float(curvature_at(x_min, spec))
    if not curv > 0:
        raise ValueError(f"x = {x_min!r} is not a potential minimum (V'' = {curv:.3e})")
    return 2.0 * math.pi * math.sqrt(mass / curv)


def minimum_well_period(spec: OpticalPotentialSpec, interval, mass: float) -> float:
    """Shortest harmonic period over the minima in ``interval`` (inf if none)."""
    periods = [2.0 * math.pi * math.sqrt(mass / e.curvature)
               for e in find_extrema(spec, interval) if e.kind == "minimum"]
    return min(periods) if periods else math.inf
