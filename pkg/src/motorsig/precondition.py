"""Signal conditioning primitives shared by every analysis stage.

Signals are plain 1-D float arrays (µV); where a sampling rate is needed it is
passed alongside as ``fs`` in Hz.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import brentq

from .defaults import CIC_ORDER, DRIFT_WINDOW_S, NAMED_BANDS
from .errors import (BandOutOfNyquist, EmptySignal, OddOrder, SignalTooShort,
                     ValidationError, WindowTooLarge)

__all__ = ['BandSpec', 'as_band', 'baseline_estimate', 'drift_reject',
           'sig_trend', 'cic_bandpass', 'cic_length', 'moving_average']


@dataclass(frozen=True)
class BandSpec:
    """Frequency band given by its center ``f0`` and full width ``bw`` (Hz)."""

    f0: float
    bw: float
    name: str | None = None

    @classmethod
    def from_edges(cls, lo, hi, name=None):
        lo, hi = float(lo), float(hi)
        if not hi > lo:
            raise ValidationError(f'band edges must satisfy lo < hi, got [{lo}, {hi}]')
        return cls((lo + hi) / 2.0, hi - lo, name)

    @classmethod
    def named(cls, name):
        try:
            lo, hi = NAMED_BANDS[name.lower()]
        except KeyError:
            raise ValidationError(
                f'unknown band {name!r}; expected one of {sorted(NAMED_BANDS)}') from None
        return cls.from_edges(lo, hi, name.lower())

    @property
    def lo(self):
        return self.f0 - self.bw / 2.0

    @property
    def hi(self):
        return self.f0 + self.bw / 2.0

    def check(self, fs):
        """Raise ``BandOutOfNyquist`` unless 0 < lo and hi < fs/2."""
        if not (self.bw > 0 and self.lo > 0 and self.hi < fs / 2.0):
            raise BandOutOfNyquist(
                f'band [{self.lo:g}, {self.hi:g}] Hz must lie strictly inside (0, {fs / 2:g}) Hz')
        return self


def as_band(band):
    """Coerce a name, an ``(lo, hi)`` pair or a ``BandSpec`` into a ``BandSpec``."""
    if isinstance(band, BandSpec):
        return band
    if isinstance(band, str):
        return BandSpec.named(band)
    lo, hi = band
    return BandSpec.from_edges(lo, hi)


def _as_signal(sig):
    x = np.asarray(sig, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f'expected a 1-D signal, got shape {x.shape}')
    if x.size == 0:
        raise EmptySignal('signal is empty')
    return x


def moving_average(x, L):
    """Centered length-``L`` running mean, windows truncated at the edges."""
    x = np.asarray(x, dtype=float)
    if L == 1:
        return x.copy()
    n = x.size
    lo = np.arange(n) - (L - 1) // 2
    hi = np.arange(n) + L // 2 + 1
    lo = np.clip(lo, 0, n)
    hi = np.clip(hi, 0, n)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    return (csum[hi] - csum[lo]) / (hi - lo)


def _moving_median(x, L):
    n = x.size
    left, right = (L - 1) // 2, L // 2
    padded = np.concatenate((np.full(left, np.nan), x, np.full(right, np.nan)))
    return np.nanmedian(sliding_window_view(padded, L), axis=1)[:n]


def baseline_estimate(sig, L, approach='mean'):
    """Running median or mean over a centered window of ``L`` samples.

    Windows near the edges are truncated to the samples that exist rather
    than zero padded, so a constant signal maps to itself everywhere.

    Parameters
    ----------
    sig : array_like
        Input signal.
    L : int
        Window length in samples, ``1 <= L <= len(sig)``.
    approach : {'mean', 'median'}
        Central-tendency estimator. ``'mn'`` and ``'md'`` are accepted too.

    Returns
    -------
    numpy.ndarray
        Baseline with the same length as ``sig``.
    """
    x = _as_signal(sig)
    L = int(L)
    if L < 1:
        raise ValidationError(f'window length must be >= 1, got {L}')
    if L > x.size:
        raise WindowTooLarge(f'window of {L} samples exceeds signal length {x.size}')
    approach = {'mn': 'mean', 'md': 'median'}.get(approach, approach)
    if approach == 'mean':
        return moving_average(x, L)
    if approach == 'median':
        return _moving_median(x, L)
    raise ValidationError(f"approach must be 'mean' or 'median', got {approach!r}")


def default_drift_window(fs):
    return max(1, int(round(DRIFT_WINDOW_S * fs)))


def drift_reject(raw, L1, L2=None, approach='mean'):
    """Remove baseline wander with two cascaded running-window stages.

    The wander estimate is ``baseline_estimate`` applied twice (windows
    ``L1`` then ``L2``) and is subtracted from the raw signal, which removes
    positive and negative drifts alike. ``L2`` defaults to ``L1``.
    """
    x = _as_signal(raw)
    L2 = L1 if L2 is None else L2
    wander = baseline_estimate(baseline_estimate(x, L1, approach), L2, approach)
    return x - wander


def sig_trend(sig):
    """Piecewise-linear trend through the strict local minima of ``sig``.

    Returns
    -------
    trend : numpy.ndarray
        Interpolated trend sampled at every index.
    locations : numpy.ndarray
        Knot indices: both endpoints plus every strict local minimum.
    """
    x = _as_signal(sig)
    if x.size < 3:
        raise SignalTooShort(f'trend needs at least 3 samples, got {x.size}')
    inner = np.flatnonzero((x[1:-1] < x[:-2]) & (x[1:-1] < x[2:])) + 1
    loc = np.concatenate(([0], inner, [x.size - 1]))
    trend = np.interp(np.arange(x.size), loc, x[loc])
    return trend, loc


@lru_cache(maxsize=None)
def _half_power_fraction(order):
    # x = f*L/fs at which |sinc(x)|**order drops to 1/sqrt(2)
    return brentq(lambda u: np.sinc(u) ** order - 2 ** -0.5, 1e-6, 0.5)


def cic_length(fs, bw, order=CIC_ORDER):
    """Comb delay ``L`` giving a -3 dB half-width of ``bw/2`` for ``order`` passes."""
    return max(1, int(round(_half_power_fraction(order) * fs / (bw / 2.0))))


def _cic_pass(z, L):
    # integrator followed by a delay-L comb, normalized to unit DC gain
    c = np.cumsum(z, axis=-1)
    out = c.copy()
    out[..., L:] -= c[..., :-L]
    return out / L


def cic_bandpass(sig, fs, band, order=CIC_ORDER):
    """Zero-phase band-pass built from forward-backward CIC low-pass passes.

    The signal is shifted down by the band center, low-passed by ``order/2``
    forward and ``order/2`` time-reversed integrator-comb passes whose comb
    delay follows the requested bandwidth, and shifted back up. Running the
    same number of passes in both directions cancels the phase response
    exactly, which is why odd orders are refused.

    Parameters
    ----------
    sig : array_like
        1-D signal, or a 2-D array filtered along the last axis.
    fs : float
        Sampling rate (Hz).
    band : BandSpec, str or (lo, hi)
        Pass band.
    order : int
        Total number of CIC passes; must be even and >= 2.
    """
    band = as_band(band).check(fs)
    order = int(order)
    if order < 2 or order % 2:
        raise OddOrder(f'CIC order must be an even integer >= 2, got {order}')
    x = np.asarray(sig, dtype=float)
    if x.shape[-1] == 0:
        raise EmptySignal('signal is empty')
    L = cic_length(fs, band.bw, order)
    return _cic_core(x, fs, np.asarray(band.f0, dtype=float), L, order)


def _cic_core(x, fs, f0, L, order):
    n = x.shape[-1]
    pad = min(n - 1, order * L)
    if pad > 0:
        head = x[..., pad:0:-1]
        tail = x[..., -2:-pad - 2:-1]
        xp = np.concatenate((head, x, tail), axis=-1)
    else:
        xp = x
    t = (np.arange(xp.shape[-1]) - pad) / fs
    carrier = np.exp(2j * np.pi * np.multiply.outer(f0, t))
    z = xp * np.conj(carrier)
    for _ in range(order // 2):
        z = _cic_pass(z, L)
    z = z[..., ::-1]
    for _ in range(order // 2):
        z = _cic_pass(z, L)
    z = z[..., ::-1]
    y = 2.0 * np.real(z * carrier)
    return y[..., pad:pad + n]
