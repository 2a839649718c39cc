"""Peak, broadening and periodicity analysis of deposition patterns and potentials."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks
from scipy.special import ndtr

from .dynamics import DepositionHistogram

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
# deposition periodicity is judged on histograms merged this many bins at a time
DEPOSITION_REBIN = 5


@dataclass(frozen=True)
class PeakRecord:
    position: float  # m
    height: float
    fwhm: float  # m
    background: float

    @property
    def contrast(self) -> float:
        return math.inf if self.background == 0 else self.height / self.background


def _crossing(x0, y0, x1, y1, level, base=0.0):
    """Where the profile between two bins reaches ``level``.

    Heights above ``base`` are interpolated in log space, which is exact for
    a Gaussian profile sampled at the bin centres; otherwise linearly.
    """
    if y1 == y0:
        return x0
    a, b, c = y0 - base, y1 - base, level - base
    if a > 0 and b > 0 and c > 0:
        return x0 + math.log(c / a) * (x1 - x0) / math.log(b / a)
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def peak_metrics(h: DepositionHistogram, threshold_fraction: float = 0.5,
                 smooth: float = 0.0) -> list[PeakRecord]:
    """Peaks above ``background + threshold_fraction * (max - background)``.

    Background is the median bin.  Each run of above-threshold bins yields
    one peak at its highest bin; FWHM is the distance between the
    interpolated half-height crossings, never less than one bin.

    ``smooth`` > 0 first applies a Gaussian filter of that many bins (standard
    deviation), which stops single-bin counting noise on top of a broad hump
    from being reported as a narrow peak.
    """
    c = np.asarray(h.counts, dtype=float)
    if smooth > 0:
        c = gaussian_filter1d(c, smooth, mode="constant")
    if c.size == 0:
        raise ValueError("empty histogram")
    if not 0.0 <= threshold_fraction <= 1.0:
        raise ValueError("threshold_fraction must lie in [0, 1]")
    bg = float(np.median(c))
    top = float(c.max())
    if top <= bg:
        return []
    thr = bg + threshold_fraction * (top - bg)
    above = c > thr if threshold_fraction < 1.0 else c >= top
    centers = h.centers
    bw = h.bin_width
    out = []
    # runs of consecutive above-threshold bins
    edges = np.flatnonzero(np.diff(np.concatenate(([0], above.astype(np.int8), [0]))))
    for start, stop in zip(edges[::2], edges[1::2]):
        i = start + int(np.argmax(c[start:stop]))
        height = c[i]
        half = bg + 0.5 * (height - bg)
        lo = i
        while lo > 0 and c[lo - 1] >= half:
            lo -= 1
        left = (_crossing(centers[lo - 1], c[lo - 1], centers[lo], c[lo], half, bg)
                if lo > 0 else centers[0] - 0.5 * bw)
        hi = i
        while hi < c.size - 1 and c[hi + 1] >= half:
            hi += 1
        right = (_crossing(centers[hi], c[hi], centers[hi + 1], c[hi + 1], half, bg)
                 if hi < c.size - 1 else centers[-1] + 0.5 * bw)
        out.append(PeakRecord(float(centers[i]), float(height), max(bw, float(right - left)), bg))
    return out


def broaden_histogram(h: DepositionHistogram, sigma_v: float, t_int: float) -> DepositionHistogram:
    """Convolve with the kinematic spread x -> x + v t_int, v ~ N(0, sigma_v).

    The kernel is the Gaussian integrated over each bin and normalised, so
    the total count is preserved up to rounding.
    """
    if sigma_v < 0:
        raise ValueError("sigma_v must be >= 0")
    c = np.asarray(h.counts, dtype=float)
    s = sigma_v * t_int
    if s == 0:
        return DepositionHistogram(h.bin_width, h.start_index, c.copy(), float(c.sum()))
    bw = h.bin_width
    half = int(math.ceil(8.0 * s / bw)) + 1
    k = np.arange(-half, half + 1)
    kernel = ndtr((k + 0.5) * bw / s) - ndtr((k - 0.5) * bw / s)
    kernel /= kernel.sum()
    out = np.convolve(c, kernel)
    return DepositionHistogram(bw, h.start_index - half, out, float(c.sum()))


@dataclass(frozen=True)
class PeriodicityReport:
    dominant_period: float | None
    beat_length: float | None
    periodicity_score: float
    beat_score: float = 0.0

    @property
    def periodic(self) -> bool:
        return self.dominant_period is not None


class WindowTooShort(ValueError):
    pass


def autocorrelation(y, max_lag: int) -> np.ndarray:
    """Pearson correlation between y[:-L] and y[L:] for L = 0..max_lag."""
    y = np.asarray(y, dtype=float)
    n = y.size
    r = np.zeros(max_lag + 1)
    r[0] = 1.0
    for L in range(1, max_lag + 1):
        a, b = y[:n - L], y[L:]
        a = a - a.mean()
        b = b - b.mean()
        den = math.sqrt(float(a @ a) * float(b @ b))
        r[L] = float(a @ b) / den if den > 0 else 0.0
    return r


def _refine(r: np.ndarray, i: int) -> float:
    y0, y1, y2 = r[i - 1], r[i], r[i + 1]
    den = y0 - 2 * y1 + y2
    return i + (0.5 * (y0 - y2) / den if den != 0 else 0.0)


def _local_maxima(r: np.ndarray) -> list[int]:
    """Local maxima of an autocorrelation, skipping the zero-lag lobe."""
    n = r.size
    L = 1
    while L < n - 1 and r[L + 1] <= r[L]:
        L += 1
    return [i for i in range(max(L, 1), n - 1) if r[i] > r[i - 1] and r[i] >= r[i + 1]]


def _best_peak(r: np.ndarray, tie: float = 0.01) -> tuple[float, float] | None:
    """(lag, score) of the highest autocorrelation peak.

    Near-ties (within ``tie``) report the shortest lag, so an exactly periodic
    signal gives its fundamental rather than a multiple of it.
    """
    peaks = _local_maxima(r)
    if not peaks:
        return None
    top = max(r[i] for i in peaks)
    best = next(i for i in peaks if r[i] >= top - tie)
    return _refine(r, best), float(top)


def _first_peak(r: np.ndarray, floor: float) -> int | None:
    """Lag of the first autocorrelation peak reaching ``floor``."""
    return next((i for i in _local_maxima(r) if r[i] >= floor), None)


def upper_envelope(y: np.ndarray, spacing: int) -> np.ndarray:
    """Linear interpolation through local maxima at least ``spacing`` samples apart."""
    idx, _ = find_peaks(y, distance=max(1, spacing))
    if idx.size < 2:
        return np.full_like(y, y.max())
    return np.interp(np.arange(y.size), idx, y[idx])


def periodicity_report(signal, dx: float, *, threshold: float = 0.8, min_periods: int = 4,
                       candidate: float | None = None, envelope_window: float | None = None
                       ) -> PeriodicityReport:
    """Dominant period and beat length of a uniformly sampled signal.

    Periods are searched up to ``span / min_periods``; if a ``candidate``
    scale is given the window must hold ``min_periods`` of it.  The beat
    length comes from the autocorrelation of the upper envelope, searched up
    to half the span: the first envelope peak scoring ``threshold`` or more.
    The envelope interpolates the signal's local maxima, spaced by the
    carrier period (first autocorrelation peak above 0.5) unless
    ``envelope_window`` is given.
    """
    y = np.asarray(signal, dtype=float)
    span = y.size * dx
    if candidate is not None and span < min_periods * candidate:
        raise WindowTooShort(
            f"window spans {span:.4g} m; need at least {min_periods * candidate:.4g} m "
            f"({min_periods} periods of {candidate:.4g} m)")
    max_lag = int(y.size // min_periods)
    if max_lag < 3:
        raise WindowTooShort(f"window of {y.size} samples is too short for autocorrelation")
    if np.ptp(y) == 0:
        return PeriodicityReport(None, None, 0.0, 0.0)

    r = autocorrelation(y, max_lag)
    pk = _best_peak(r)
    score = min(1.0, max(0.0, pk[1])) if pk else 0.0
    dominant = pk[0] * dx if pk and score >= threshold else None

    carrier = _first_peak(r, 0.5)
    width = envelope_window if envelope_window is not None else (
        carrier * dx if carrier is not None else None)
    beat, beat_score = None, 0.0
    if width is not None:
        w = max(1, int(round(width / dx)))
        env = upper_envelope(y - y.mean(), int(0.75 * w))
        if np.ptp(env) > 0:
            re = autocorrelation(env, y.size // 2)
            first = _first_peak(re, threshold)
            if first is not None and first * dx > 1.5 * width:
                beat, beat_score = _refine(re, first) * dx, float(re[first])
            else:
                bp = _best_peak(re)
                beat_score = min(1.0, max(0.0, bp[1])) if bp else 0.0
    return PeriodicityReport(dominant, beat, score, beat_score)


def deposition_periodicity(h: DepositionHistogram, window: tuple[float, float] | None = None,
                           rebin: int = DEPOSITION_REBIN, **kw) -> PeriodicityReport:
    """Periodicity of a deposition pattern, on a coarsened grid.

    Counting noise in single 1.4 nm bins decorrelates neighbouring peaks,
    so the pattern is merged ``rebin`` bins at a time first.
    """
    if window is not None:
        h = h.window(*window)
    h = h.rebin(rebin)
    return periodicity_report(h.counts, h.bin_width, **kw)


def export_table(obj, destination):
    """Write ``obj`` as a CSV table plus plot companion; see :mod:`ccdepo.export`."""
    from .export import export_table as _export

    return _export(obj, destination)
