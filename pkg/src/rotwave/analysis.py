"""Post-processing of alignment traces: smoothing, beat spectra, revivals, extrema."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .config import MoleculeSpec
from .constants import revival_period_fs, wavenumber_to_thz
from .observables import AlignmentTrace

PAD_FACTOR = 8
PEAK_FLOOR = 0.02


class ResolutionWarning(UserWarning):
    """Fourier window too short to separate neighbouring beats cleanly."""


def smooth(trace: AlignmentTrace, window: int = 11) -> AlignmentTrace:
    """Centered moving average; near the ends the window shrinks symmetrically."""
    n = trace.values.size
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window > n:
        raise ValueError(f"window {window} longer than trace ({n} points)")
    idx = np.arange(n)
    half = np.minimum(window // 2, np.minimum(idx, n - 1 - idx))
    csum = np.concatenate([[0.0], np.cumsum(trace.values)])
    values = (csum[idx + half + 1] - csum[idx - half]) / (2 * half + 1)
    return replace(trace, values=values)


@dataclass(frozen=True)
class BeatPeak:
    frequency: float  # THz
    amplitude: float
    j: int | None  # lower level of the J <-> J+2 beat; None when unassigned
    distance: float  # THz from the assigned line

    @property
    def label(self) -> str:
        return "unassigned" if self.j is None else f"{self.j}<->{self.j + 2}"


@dataclass(frozen=True)
class BeatSpectrum:
    """|DFT| of the mean-subtracted, Blackman-windowed, zero-padded trace.

    ``amplitudes`` are raw magnitudes of the one-sided transform.
    """

    frequencies: np.ndarray  # THz
    amplitudes: np.ndarray
    bin_width: float  # THz, padded
    windowed: np.ndarray  # the conditioned time samples, for energy checks
    peaks: tuple[BeatPeak, ...] = ()

    def energy(self) -> float:
        """Two-sided spectral energy divided by the padded length (Parseval)."""
        n_pad = self.windowed.size * PAD_FACTOR
        a2 = self.amplitudes**2
        interior = a2[1:-1] if n_pad % 2 == 0 else a2[1:]
        edge = a2[0] + (a2[-1] if n_pad % 2 == 0 else 0.0)
        return float((edge + 2.0 * interior.sum()) / n_pad)


def _uniform_step(times: np.ndarray) -> float:
    steps = np.diff(times)
    if steps.size == 0 or np.ptp(steps) > 1e-9 * steps.mean():
        raise ValueError("beat spectrum needs a uniform time grid with >= 2 points")
    return float(steps.mean())


def _local_peaks(amplitudes: np.ndarray, floor: float) -> list[tuple[float, float]]:
    """(fractional index, amplitude) of local maxima above ``floor``, parabola-refined."""
    a = amplitudes
    out = []
    for k in np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:]) & (a[1:-1] >= floor)) + 1:
        y0, y1, y2 = a[k - 1], a[k], a[k + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        out.append((k + shift, y1 - 0.25 * (y0 - y2) * shift))
    return out


def beat_spectrum(
    trace: AlignmentTrace,
    t_start: float,
    t_stop: float,
    molecule: MoleculeSpec | None = None,
) -> BeatSpectrum:
    """Fourier beat spectrum of ``trace`` restricted to [t_start, t_stop] fs.

    Peaks are local maxima above 2% of the largest amplitude.  With a
    ``molecule`` they are also assigned to J <-> J+2 beats.
    """
    sel = (trace.times >= t_start - 1e-9) & (trace.times <= t_stop + 1e-9)
    times = trace.times[sel]
    if times.size < 4:
        raise ValueError(f"window [{t_start}, {t_stop}] fs holds fewer than 4 samples")
    dt = _uniform_step(times)
    if molecule is not None and times[-1] - times[0] < 2 * revival_period_fs(
        molecule.rotational_constant
    ):
        warnings.warn(
            f"window of {times[-1] - times[0]:.0f} fs spans less than two revival periods",
            ResolutionWarning,
            stacklevel=2,
        )
    x = trace.values[sel]
    # Blackman sidelobes (-58 dB) stay under the peak floor; Hann's (-31 dB) do not
    windowed = (x - x.mean()) * np.blackman(x.size)
    n_pad = x.size * PAD_FACTOR
    amplitudes = np.abs(np.fft.rfft(windowed, n_pad))
    freqs = np.fft.rfftfreq(n_pad, d=dt) * 1e3  # 1/fs -> THz
    bin_width = float(freqs[1])

    spectrum = BeatSpectrum(freqs, amplitudes, bin_width, windowed)
    raw = [
        BeatPeak(float(np.interp(k, np.arange(freqs.size), freqs)), float(a), None, math.nan)
        for k, a in _local_peaks(amplitudes, PEAK_FLOOR * amplitudes.max())
    ]
    spectrum = replace(spectrum, peaks=tuple(raw))
    if molecule is not None:
        spectrum = replace(spectrum, peaks=tuple(assign_beats(spectrum, molecule)))
    return spectrum


def beat_frequency(j, rotational_constant: float):
    """J <-> J+2 beat, Bc(4J+6), in THz."""
    return wavenumber_to_thz(rotational_constant) * (4 * np.asarray(j) + 6)


def assign_beats(spectrum: BeatSpectrum, molecule: MoleculeSpec) -> list[BeatPeak]:
    """Label each peak with the nearest J <-> J+2 line; farther than two padded bins is unassigned."""
    bc = wavenumber_to_thz(molecule.rotational_constant)
    out = []
    for peak in spectrum.peaks:
        j = max(0, round((peak.frequency / bc - 6.0) / 4.0))
        distance = abs(peak.frequency - float(beat_frequency(j, molecule.rotational_constant)))
        assigned = distance <= 2.0 * spectrum.bin_width
        out.append(replace(peak, j=j if assigned else None, distance=distance))
    return out


def revival_times(molecule: MoleculeSpec, count: int) -> list[tuple[Fraction, float]]:
    """Quarter-period revival times k/4 * 1/(2Bc), k = 1 .. 4*count."""
    if count < 1:
        raise ValueError("count must be >= 1")
    period = revival_period_fs(molecule.rotational_constant)
    return [(Fraction(k, 4), k * period / 4.0) for k in range(1, 4 * count + 1)]


@dataclass(frozen=True)
class Extrema:
    t_max: float
    v_max: float
    t_min: float
    v_min: float


def _refine(t: np.ndarray, v: np.ndarray, k: int) -> tuple[float, float]:
    if k == 0 or k == v.size - 1:
        return float(t[k]), float(v[k])
    y0, y1, y2 = v[k - 1], v[k], v[k + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0:
        return float(t[k]), float(y1)
    shift = 0.5 * (y0 - y2) / denom
    h = t[k + 1] - t[k]
    return float(t[k] + shift * h), float(y1 - 0.25 * (y0 - y2) * shift)


def find_extrema(trace: AlignmentTrace, t_lo: float, t_hi: float) -> Extrema:
    """Grid argmax/argmin in [t_lo, t_hi] with three-point parabolic refinement.

    Ties go to the earliest time.
    """
    sel = (trace.times >= t_lo) & (trace.times <= t_hi)
    if not sel.any():
        raise ValueError(f"no samples in [{t_lo}, {t_hi}]")
    t, v = trace.times[sel], trace.values[sel]
    t_max, v_max = _refine(t, v, int(np.argmax(v)))
    t_min, v_min = _refine(t, v, int(np.argmin(v)))
    return Extrema(t_max, v_max, t_min, v_min)
