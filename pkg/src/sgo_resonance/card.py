"""Time-spectral cards: sliding-window band amplitudes with 10-step isolines.

Each window (default 20 h, shifted by 30 min) is mean-removed, Hann-tapered
and Fourier transformed.  The band amplitude is the share of the window's
taper-corrected mean square that falls in the band,

    A^2 = sum_band c_k |X_k|^2 / (nfft * sum w^2),

with ``c_k = 2`` except at DC and Nyquist, so the bands of a full partition
of ``[0, Nyquist]`` add up to the windowed mean square exactly.

Frequencies are in microhertz and window times in hours at the interface;
signals are in seconds and metres.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import get_window

__all__ = [
    "SignalSeries",
    "CardGrid",
    "EmptyBandError",
    "synth_sgo",
    "band_amplitude",
    "build_card",
    "isoline_levels",
    "row_period",
    "card_svg",
]

UHZ = 1e-6
HOUR = 3600.0
MINUTE = 60.0
ISOLINE_STEPS = 10


class EmptyBandError(ValueError):
    """No Fourier bin falls inside the requested band."""


@dataclass(frozen=True)
class SignalSeries:
    """Uniformly sampled displacement record (s, m)."""

    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if t.ndim != 1 or t.shape != x.shape or t.size < 2:
            raise ValueError("times and values must be 1-D arrays of equal length >= 2")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValueError("signal contains non-finite samples")
        dt = np.diff(t)
        step = (t[-1] - t[0]) / (t.size - 1)
        if step <= 0 or np.max(np.abs(dt - step)) > 1e-9 * max(step, abs(t[-1])):
            raise ValueError("sampling is not uniform")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)

    @property
    def dt(self) -> float:
        return (self.t[-1] - self.t[0]) / (self.t.size - 1)

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def duration(self) -> float:
        return self.t.size * self.dt

    @classmethod
    def from_csv(cls, path) -> "SignalSeries":
        """Read ``t_seconds, displacement_m`` columns (one header row)."""
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError("expected two columns: t_seconds, displacement_m")
        return cls(data[:, 0], data[:, 1])

    def shifted(self, samples: int) -> "SignalSeries":
        """Drop the first ``samples`` samples (time origin moves with them)."""
        return SignalSeries(self.t[samples:], self.x[samples:])


def synth_sgo(
    duration_h: float,
    modes: Iterable[Sequence[float]] = (),
    *,
    sample_interval: float = 60.0,
    beat_pairs: Iterable[Sequence[float]] = (),
    noise_std: float = 0.0,
    seed: int | None = None,
) -> SignalSeries:
    """Sum of cosines ``a cos(2 pi nu t + phase)`` sampled every ``sample_interval`` s.

    Parameters
    ----------
    duration_h : float
        Record length in hours.
    modes : iterable of (nu_uHz, amplitude_m, phase_rad)
    beat_pairs : iterable of (center_uHz, split_uHz, amplitude_m)
        Each adds two equal modes at ``center -/+ split/2``.
    noise_std : float
        Standard deviation of additive white noise (m), drawn from a
        generator seeded with ``seed``.

    Raises
    ------
    ValueError
        If the sample rate is below four times the highest frequency.
    """
    if not duration_h > 0:
        raise ValueError("duration must be positive")
    comps = [tuple(map(float, m)) for m in modes]
    for c, split, amp in beat_pairs:
        comps.append((c - 0.5 * split, amp, 0.0))
        comps.append((c + 0.5 * split, amp, 0.0))
    rate = 1.0 / sample_interval
    fmax = max((abs(nu) for nu, _, _ in comps), default=0.0) * UHZ
    if fmax > 0 and rate < 4 * fmax:
        raise ValueError(f"sample rate {rate:.6g} Hz aliases {fmax:.6g} Hz (need >= 4x)")
    n = int(round(duration_h * HOUR / sample_interval))
    t = np.arange(n) * sample_interval
    x = np.zeros(n)
    for nu, amp, ph in comps:
        x += amp * np.cos(2 * math.pi * nu * UHZ * t + ph)
    if noise_std > 0:
        x += np.random.default_rng(seed).normal(0.0, noise_std, n)
    return SignalSeries(t, x)


def _window_length(signal: SignalSeries, width_h: float) -> int:
    n = int(round(width_h * HOUR / signal.dt))
    if n < 8:
        raise ValueError("window holds fewer than 8 samples")
    if n > signal.t.size:
        raise ValueError("signal is shorter than one window")
    return n


def _spectra(segments: np.ndarray, nfft: int) -> np.ndarray:
    """One-sided taper-corrected power per bin, normalized so the row sums to the mean square."""
    n = segments.shape[1]
    w = get_window("hann", n, fftbins=False) if n > 1 else np.ones(1)
    seg = (segments - segments.mean(axis=1, keepdims=True)) * w
    power = np.abs(np.fft.rfft(seg, n=nfft, axis=1)) ** 2
    weight = np.full(power.shape[1], 2.0)
    weight[0] = 1.0
    if nfft % 2 == 0:
        weight[-1] = 1.0
    return power * weight / (nfft * float(np.sum(w * w)))


def band_amplitude(
    signal: SignalSeries,
    f_lo: float,
    f_hi: float,
    t0: float,
    width_h: float = 20.0,
    pad: int = 1,
) -> float:
    """Mean-square amplitude (m^2) in ``[f_lo, f_hi]`` uHz over the window starting at ``t0`` s.

    ``pad`` zero-pads the transform by that factor (finer bins by
    interpolation, not resolution).

    Raises
    ------
    EmptyBandError
        If no bin lies in the band.
    ValueError
        Window outside the signal or band above Nyquist.
    """
    n = _window_length(signal, width_h)
    i0 = int(round((t0 - signal.t[0]) / signal.dt))
    if i0 < 0 or i0 + n > signal.t.size:
        raise ValueError("window outside the signal")
    nyq = 0.5 * signal.sample_rate / UHZ
    if f_lo < 0 or f_hi > nyq * (1 + 1e-12) or f_hi < f_lo:
        raise ValueError(f"band [{f_lo}, {f_hi}] uHz outside [0, {nyq:.6g}]")
    nfft = n * pad
    freqs = np.fft.rfftfreq(nfft, signal.dt) / UHZ
    sel = (freqs >= f_lo) & (freqs <= f_hi)
    if not np.any(sel):
        raise EmptyBandError(f"no bin in [{f_lo}, {f_hi}] uHz at {freqs[1]:.4g} uHz spacing")
    p = _spectra(signal.x[i0 : i0 + n][None, :], nfft)[0]
    return float(np.sum(p[sel]))


def isoline_levels(a2) -> tuple[np.ndarray, float]:
    """Eleven boundaries ``min + j (max - min)/10`` and the step, over unmasked cells."""
    data = np.ma.compressed(np.ma.asarray(a2))
    if data.size == 0:
        return np.zeros(ISOLINE_STEPS + 1), 0.0
    lo, hi = float(np.min(data)), float(np.max(data))
    step = (hi - lo) / ISOLINE_STEPS
    levels = lo + step * np.arange(ISOLINE_STEPS + 1)
    levels[-1] = hi
    return levels, step


@dataclass
class CardGrid:
    """Window centers (h) by frequency bands (uHz); ``a2[i, j]`` is window ``i``, band ``j``."""

    centers_h: np.ndarray
    band_lo_uhz: np.ndarray
    band_hi_uhz: np.ndarray
    a2: np.ma.MaskedArray
    levels: np.ndarray
    step: float
    window_h: float
    stride_min: float
    nfft: int

    @property
    def freqs_uhz(self) -> np.ndarray:
        return 0.5 * (self.band_lo_uhz + self.band_hi_uhz)

    @property
    def shape(self) -> tuple[int, int]:
        return self.a2.shape

    def meta(self) -> dict:
        return {
            "window_hours": self.window_h,
            "stride_minutes": self.stride_min,
            "nfft": self.nfft,
            "window_centers_hours": self.centers_h.tolist(),
            "band_lo_uhz": self.band_lo_uhz.tolist(),
            "band_hi_uhz": self.band_hi_uhz.tolist(),
            "isoline_levels": self.levels.tolist(),
            "isoline_step": self.step,
            "masked_cells": int(np.ma.count_masked(self.a2)),
        }


def build_card(
    signal: SignalSeries,
    bin_width: float | None = None,
    *,
    bands: Sequence[tuple[float, float]] | None = None,
    f_min: float = 0.0,
    f_max: float | None = None,
    window_h: float = 20.0,
    stride_min: float = 30.0,
    workers: int | None = None,
    block: int = 256,
) -> CardGrid:
    """Band amplitudes over all windows.

    Bands are either given explicitly (closed intervals, uHz) or tile
    ``[f_min, f_max]`` with width ``bin_width``; the default width is one
    DFT bin of the window, centred on the bin frequencies.  A finer width
    zero-pads the transform.  Bands without bins are masked.  Windows are
    processed in blocks (in parallel with ``workers``) and assembled in
    time order.
    """
    n = _window_length(signal, window_h)
    stride = int(round(stride_min * MINUTE / signal.dt))
    if stride < 1:
        raise ValueError("stride shorter than the sample interval")
    starts = np.arange(0, signal.t.size - n + 1, stride)
    df = 1.0 / (n * signal.dt) / UHZ
    nyq = 0.5 * signal.sample_rate / UHZ
    f_max = nyq if f_max is None else min(f_max, nyq)
    if bands is not None:
        lo = np.array([b[0] for b in bands], dtype=float)
        hi = np.array([b[1] for b in bands], dtype=float)
        pad = 1 if bin_width is None else max(1, math.ceil(df / bin_width))
        closed = np.ones(lo.size, dtype=bool)
    elif bin_width is None:
        k = np.arange(math.ceil(f_min / df - 0.5), math.floor(f_max / df + 0.5) + 1)
        lo, hi = (k - 0.5) * df, (k + 0.5) * df
        lo[0] = max(lo[0], 0.0)
        pad = 1
        closed = np.zeros(lo.size, dtype=bool)
    else:
        if not bin_width > 0:
            raise ValueError("bin width must be positive")
        edges = np.arange(f_min, f_max + 0.5 * bin_width, bin_width)
        lo, hi = edges[:-1], np.minimum(edges[1:], f_max)
        pad = max(1, math.ceil(df / bin_width))
        closed = np.zeros(lo.size, dtype=bool)
    if lo.size == 0:
        raise ValueError("no frequency bands")
    closed[-1] = True
    nfft = n * pad
    freqs = np.fft.rfftfreq(nfft, signal.dt) / UHZ
    sel = (freqs[None, :] >= lo[:, None]) & np.where(
        closed[:, None], freqs[None, :] <= hi[:, None], freqs[None, :] < hi[:, None]
    )
    members = sel.astype(float).T
    empty = ~np.any(sel, axis=1)

    def run(block_starts):
        idx = block_starts[:, None] + np.arange(n)[None, :]
        return _spectra(signal.x[idx], nfft) @ members

    blocks = [starts[i : i + block] for i in range(0, starts.size, block)]
    if workers is not None and workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    grid = np.vstack(parts)
    mask = np.broadcast_to(empty[None, :], grid.shape)
    a2 = np.ma.masked_array(grid, mask=mask.copy())
    levels, step = isoline_levels(a2)
    centers = (signal.t[starts] + 0.5 * n * signal.dt) / HOUR
    return CardGrid(centers, lo, hi, a2, levels, step, window_h, stride_min, nfft)


def row_period(card: CardGrid, band: int) -> float:
    """Dominant modulation period (h) of one band's A^2 across windows.

    Periodogram of the mean-removed row, zero-padded 64x, with parabolic
    refinement of the peak.
    """
    row = np.ma.filled(card.a2[:, band], np.nan)
    if np.any(np.isnan(row)):
        raise ValueError("band is masked")
    row = row - row.mean()
    step_h = card.stride_min / 60.0
    nfft = 64 * row.size
    p = np.abs(np.fft.rfft(row * np.hanning(row.size), nfft)) ** 2
    k = int(np.argmax(p[1:])) + 1
    if 0 < k < p.size - 1:
        y0, y1, y2 = np.log(p[k - 1 : k + 2] + 1e-300)
        k = k + 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2)
    return nfft * step_h / k


def card_svg(card: CardGrid, cell: float = 4.0) -> str:
    """Grayscale heat map of the card, one gray level per isoline step (dull grey to white)."""
    nw, nb = card.shape
    width, height = nw * cell, nb * cell
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'<rect width="{width:g}" height="{height:g}" fill="#000000"/>',
    ]
    step = card.step
    base = card.levels[0]
    for i in range(nw):
        for j in range(nb):
            if card.a2.mask[i, j]:
                continue
            level = 0 if step == 0 else min(int((card.a2.data[i, j] - base) / step), ISOLINE_STEPS - 1)
            g = 96 + int(round(159 * level / (ISOLINE_STEPS - 1)))
            y = (nb - 1 - j) * cell
            out.append(f'<rect x="{i * cell:g}" y="{y:g}" width="{cell:g}" height="{cell:g}" fill="#{g:02x}{g:02x}{g:02x}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
