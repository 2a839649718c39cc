"""Classical transverse trajectories through the averaged optical potential.

Every trajectory owns a random stream derived from ``(seed, *prefix, index)``,
and the ensemble is cut into fixed-size chunks before any work is handed to
a process pool.  Chunk contents never depend on the worker count, so the
final histogram is bit-identical for 1 or 8 workers.
"""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .potential import AveragedPotential, OpticalPotentialSpec, evaluator, find_extrema

log = logging.getLogger(__name__)

DEFAULT_BIN = 1.403e-9
# time steps per smallest harmonic well period (see docs/decisions in README)
STEPS_PER_PERIOD = 4000
CHUNK = 2048
_CHECK_EVERY = 64


class IntegrationError(FloatingPointError):
    pass


@dataclass(frozen=True)
class BeamConfig:
    vz: float
    nozzle_width: float
    sigma_v: float
    t_int: float
    mass: float
    t_free: float = 0.0

    def __post_init__(self):
        if not self.vz > 0:
            raise ValueError("vz must be > 0")
        if not self.nozzle_width > 0:
            raise ValueError("nozzle_width must be > 0")
        if not self.t_int > 0:
            raise ValueError("t_int must be > 0")
        if not self.sigma_v >= 0:
            raise ValueError("sigma_v must be >= 0")
        if not self.t_free >= 0:
            raise ValueError("t_free must be >= 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")

    @property
    def interaction_length(self) -> float:
        """Distance travelled along z during the interaction."""
        return self.vz * self.t_int

    def replace(self, **changes) -> "BeamConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class TransverseState:
    x: float
    vx: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.vx)):
            raise ValueError("non-finite transverse state")


@dataclass(frozen=True)
class Ensemble:
    """Initial conditions of n trajectories, as arrays."""

    x: np.ndarray
    vx: np.ndarray

    def __len__(self):
        return len(self.x)

    def __iter__(self):
        for x, v in zip(self.x, self.vx):
            yield TransverseState(float(x), float(v))

    def __getitem__(self, i):
        return TransverseState(float(self.x[i]), float(self.vx[i]))


def trajectory_rng(seed: int, index: int, prefix: tuple = ()) -> np.random.Generator:
    """Independent stream for trajectory ``index``; ``prefix`` separates sub-ensembles."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(prefix) + (int(index),))
    return np.random.Generator(np.random.Philox(ss))


def sample_ensemble(beam: BeamConfig, n: int, seed: int, *, start: int = 0,
                    prefix: tuple = ()) -> Ensemble:
    """Uniform positions across the nozzle, Gaussian transverse velocities.

    Trajectory ``start + i`` always gets the same initial state, whatever
    ``n`` or ``start`` the caller uses.
    """
    if n <= 0:
        raise ValueError("n must be > 0")
    half = 0.5 * beam.nozzle_width
    x = np.empty(n)
    vx = np.zeros(n)
    for i in range(n):
        rng = trajectory_rng(seed, start + i, prefix)
        x[i] = rng.uniform(-half, half)
        if beam.sigma_v > 0:
            vx[i] = rng.normal(0.0, beam.sigma_v)
    return Ensemble(x, vx)


# ---------------------------------------------------------------- integration

def leapfrog(x, v, pot, inv_mass: float, dt: float, n_steps: int, *, check_every=_CHECK_EVERY):
    """Velocity-Verlet (kick-drift-kick) steps of x'' = F(x)/m, in place on copies.

    Works in the floating type of the inputs (at least float64), so
    ``np.longdouble`` arrays give an extended-precision run.
    """
    dtype = np.result_type(np.asarray(x), np.asarray(v), np.float64)
    x = np.array(x, dtype=dtype)
    v = np.array(v, dtype=dtype)
    half = 0.5 * dt * inv_mass
    f = pot.force(x)
    for step in range(1, n_steps + 1):
        v += half * f
        x += dt * v
        f = pot.force(x)
        v += half * f
        if step % check_every == 0 or step == n_steps:
            if not (np.isfinite(x).all() and np.isfinite(v).all()):
                bad = int(np.flatnonzero(~(np.isfinite(x) & np.isfinite(v)))[0])
                raise IntegrationError(
                    f"non-finite state for trajectory {bad} detected at step {step}")
    return x, v


def step_plan(t_int: float, dt: float) -> tuple[int, float]:
    """Whole number of steps covering t_int exactly, and the step actually used."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    n = max(1, int(math.ceil(t_int / dt - 1e-9)))
    return n, t_int / n


def _as_potential(spec_or_pot):
    if isinstance(spec_or_pot, OpticalPotentialSpec):
        return evaluator(spec_or_pot)
    return spec_or_pot


def integrate_trajectory(s0: TransverseState, spec, beam: BeamConfig, dt: float) -> TransverseState:
    """Propagate one trajectory through the field, then the free-flight gap.

    ``spec`` is an averaged-mode OpticalPotentialSpec or any object with a
    vectorised ``force(x)`` method.
    """
    n, h = step_plan(beam.t_int, dt)
    x, v = leapfrog([s0.x], [s0.vx], _as_potential(spec), 1.0 / beam.mass, h, n, check_every=1)
    xf = float(x[0] + v[0] * beam.t_free)
    return TransverseState(xf, float(v[0]))


def energy_drift(spec, beam: BeamConfig, ensemble: Ensemble, dt: float, scale: float | None = None,
                 dtype=np.float64) -> float:
    """Largest |E(t_int) - E(0)| over the ensemble, relative to ``scale``.

    ``scale`` defaults to the potential's peak-to-peak range across the
    nozzle (the natural energy unit of a well).  With ``dtype=np.longdouble``
    the trajectories run in extended precision, which separates the
    integrator's truncation error from float64 roundoff once the drift
    itself is tiny.
    """
    pot = _as_potential(spec)
    n, h = step_plan(beam.t_int, dt)
    m = beam.mass
    x0 = np.asarray(ensemble.x).astype(dtype)
    v0 = np.asarray(ensemble.vx).astype(dtype)
    e0 = 0.5 * m * v0 ** 2 + pot.total(x0)
    x, v = leapfrog(x0, v0, pot, 1.0 / m, h, n)
    e1 = 0.5 * m * v ** 2 + pot.total(x)
    if scale is None:
        grid = np.linspace(-beam.nozzle_width / 2, beam.nozzle_width / 2, 20001)
        vals = pot.total(grid)
        scale = float(np.max(vals) - np.min(vals))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(e1 - e0)) / dtype(scale))


def minimum_period(spec: OpticalPotentialSpec, beam: BeamConfig) -> float:
    """Smallest harmonic well period over the nozzle span (inf for a flat potential)."""
    half = 0.5 * beam.nozzle_width
    periods = [2 * math.pi * math.sqrt(beam.mass / e.curvature)
               for e in find_extrema(spec, (-half, half)) if e.kind == "minimum"]
    return min(periods) if periods else math.inf


def default_dt(spec: OpticalPotentialSpec, beam: BeamConfig, steps_per_period: int = STEPS_PER_PERIOD) -> float:
    t_min = minimum_period(spec, beam)
    if not math.isfinite(t_min):
        return beam.t_int  # force-free: a single exact drift step
    return t_min / steps_per_period


# ---------------------------------------------------------------- histograms

@dataclass
class DepositionHistogram:
    """Counts on the grid ``[i * bin_width, (i + 1) * bin_width)``, i >= start_index.

    ``counts`` are integers for simulated deposits; broadened histograms
    carry real-valued counts.
    """

    bin_width: float
    start_index: int
    counts: np.ndarray
    n_total: float
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError("bin_width must be > 0")
        self.counts = np.asarray(self.counts)

    def __eq__(self, other):
        if not isinstance(other, DepositionHistogram):
            return NotImplemented
        return (self.bin_width == other.bin_width and self.start_index == other.start_index
                and self.n_total == other.n_total and np.array_equal(self.counts, other.counts))

    __hash__ = None

    @property
    def origin(self) -> float:
        return self.start_index * self.bin_width

    @property
    def edges(self) -> np.ndarray:
        return (self.start_index + np.arange(len(self.counts) + 1)) * self.bin_width

    @property
    def centers(self) -> np.ndarray:
        return (self.start_index + np.arange(len(self.counts)) + 0.5) * self.bin_width

    @classmethod
    def from_positions(cls, x, bin_width: float = DEFAULT_BIN, span=None) -> "DepositionHistogram":
        """Bin positions; ``span`` (lo, hi) forces the grid to cover at least that range."""
        x = np.asarray(x, dtype=float)
        idx = np.floor(x / bin_width).astype(np.int64)
        lo = int(idx.min()) if idx.size else 0
        hi = int(idx.max()) if idx.size else -1
        if span is not None:
            lo = min(lo, int(math.floor(span[0] / bin_width)))
            hi = max(hi, int(math.ceil(span[1] / bin_width)) - 1)
        counts = np.bincount(idx - lo, minlength=hi - lo + 1).astype(np.int64)
        return cls(bin_width, lo, counts, int(x.size))

    def aligned(self, start: int, length: int) -> np.ndarray:
        out = np.zeros(length, dtype=self.counts.dtype)
        off = self.start_index - start
        out[off:off + len(self.counts)] = self.counts
        return out

    def __add__(self, other: "DepositionHistogram") -> "DepositionHistogram":
        if other.bin_width != self.bin_width:
            raise ValueError("cannot add histograms with different bin widths")
        lo = min(self.start_index, other.start_index)
        hi = max(self.start_index + len(self.counts), other.start_index + len(other.counts))
        counts = self.aligned(lo, hi - lo) + other.aligned(lo, hi - lo)
        return DepositionHistogram(self.bin_width, lo, counts, self.n_total + other.n_total)

    def window(self, lo: float, hi: float) -> "DepositionHistogram":
        """Bins whose centres lie in [lo, hi]; n_total counts what is kept."""
        c = self.centers
        keep = (c >= lo) & (c <= hi)
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            raise ValueError("window contains no bins")
        counts = self.counts[idx[0]:idx[-1] + 1]
        return DepositionHistogram(self.bin_width, self.start_index + int(idx[0]), counts.copy(),
                                   counts.sum())

    def rebin(self, factor: int) -> "DepositionHistogram":
        """Merge groups of ``factor`` bins, aligned to the global grid (trailing partial group dropped)."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        first = -(-self.start_index // factor) * factor  # next multiple of factor
        off = first - self.start_index
        n = (len(self.counts) - off) // factor
        c = self.counts[off:off + n * factor].reshape(n, factor).sum(axis=1)
        return DepositionHistogram(self.bin_width * factor, first // factor, c, c.sum())


# ---------------------------------------------------------------- ensembles

@dataclass(frozen=True)
class _Chunk:
    pot: AveragedPotential
    x: np.ndarray
    v: np.ndarray
    inv_mass: float
    dt: float
    n_steps: int
    t_free: float
    first_index: int


def _run_chunk(ch: _Chunk) -> np.ndarray:
    try:
        x, v = leapfrog(ch.x, ch.v, ch.pot, ch.inv_mass, ch.dt, ch.n_steps)
    except IntegrationError as exc:
        raise IntegrationError(f"chunk starting at trajectory {ch.first_index}: {exc}") from None
    return x + v * ch.t_free


@dataclass
class PropagationResult:
    x_final: np.ndarray
    dt: float
    n_steps: int
    wall_time: float


def propagate(pot: AveragedPotential, ensemble: Ensemble, beam: BeamConfig, dt: float,
              workers: int = 1, chunk: int = CHUNK) -> PropagationResult:
    """Propagate an ensemble; ``pot`` coefficients may be per-trajectory arrays."""
    n_steps, h = step_plan(beam.t_int, dt)
    n = len(ensemble)
    jobs = []
    for lo in range(0, n, chunk):
        sl = slice(lo, min(n, lo + chunk))
        jobs.append(_Chunk(pot.take(sl), ensemble.x[sl], ensemble.vx[sl], 1.0 / beam.mass,
                           h, n_steps, beam.t_free, lo))
    t0 = time.perf_counter()
    if workers <= 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    xf = np.concatenate(parts) if parts else np.empty(0)
    return PropagationResult(xf, h, n_steps, time.perf_counter() - t0)


def nozzle_span(beam: BeamConfig) -> tuple[float, float]:
    return (-0.5 * beam.nozzle_width, 0.5 * beam.nozzle_width)


def simulate_potential(spec: OpticalPotentialSpec, beam: BeamConfig, n: int, seed: int,
                       bin_width: float = DEFAULT_BIN, *, dt: float | None = None,
                       workers: int = 1, chunk: int = CHUNK, prefix: tuple = ()) -> DepositionHistogram:
    """Deposition histogram for a ready-made potential."""
    if dt is None:
        dt = default_dt(spec, beam)
    ens = sample_ensemble(beam, n, seed, prefix=prefix)
    res = propagate(evaluator(spec), ens, beam, dt, workers=workers, chunk=chunk)
    h = DepositionHistogram.from_positions(res.x_final, bin_width, span=nozzle_span(beam))
    h.meta.update(dt=res.dt, n_steps=res.n_steps, wall_time=res.wall_time, seed=seed, n=n)
    log.info("propagated %d trajectories, %d steps of %.3e s in %.2f s",
             n, res.n_steps, res.dt, res.wall_time)
    return h


def simulate_deposition(model, sup, field, beam: BeamConfig, n: int, seed: int,
                        bin_width: float = DEFAULT_BIN, *, interference: bool = True,
                        dt: float | None = None, workers: int = 1,
                        chunk: int = CHUNK, prefix: tuple = ()) -> DepositionHistogram:
    """Build the averaged potential of ``sup`` in ``field`` and deposit ``n`` molecules.

    ``interference=False`` drops V_in (the incoherent-mixture reference).
    """
    from .suscept import susceptibility_set

    spec = OpticalPotentialSpec(susceptibility_set(model, sup, field), field)
    if not interference:
        spec = spec.incoherent()
    return simulate_potential(spec, beam, n, seed, bin_width, dt=dt, workers=workers, chunk=chunk,
                              prefix=prefix)


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
