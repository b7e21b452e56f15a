"""Trigger-synchronized ERP estimation, ERD/ERS quantification and TF maps."""
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from . import defaults as D
from .errors import (EmptyTrialSet, ReferenceOutsideSignal, TrialTooShort,
                     UnknownMethod, ValidationError, ZeroReference)
from .precondition import BandSpec, as_band, cic_bandpass, moving_average

__all__ = ['SynchronizedTrials', 'ERPCurve', 'Segment', 'ErdErsReport', 'TFMap',
           'trigger_synch', 'trigger_avg_erp', 'erp_quantification',
           'trigger_avg_tf_erp', 'cwt_morlet']


@dataclass(frozen=True)
class SynchronizedTrials:
    ensemble: np.ndarray        # (n_trials, n_samples)
    trigger_time_sec: float
    trigger_sample: int
    time_vec: np.ndarray
    fs: float


@dataclass(frozen=True)
class ERPCurve:
    values: np.ndarray
    time_vec: np.ndarray
    trigger_time_sec: float
    band: BandSpec
    n_trials: int
    fs: float


@dataclass(frozen=True)
class Segment:
    kind: str          # 'ERD' or 'ERS'
    start_s: float
    end_s: float
    area: float        # percent, normalized by segment length

    @property
    def length_s(self):
        return self.end_s - self.start_s


@dataclass(frozen=True)
class ErdErsReport:
    reference_value: float
    reference_std: float
    cof_intv: float
    segments: list
    quant_erp: np.ndarray
    time_vec: np.ndarray
    trigger_time_sec: float
    lower_line: float
    upper_line: float

    @property
    def erd(self):
        return [s for s in self.segments if s.kind == 'ERD']

    @property
    def ers(self):
        return [s for s in self.segments if s.kind == 'ERS']


@dataclass(frozen=True)
class TFMap:
    power: np.ndarray           # (n_freqs, n_times)
    freq_vec: np.ndarray
    time_vec: np.ndarray
    trigger_time_sec: float
    method: str
    extra: dict = field(default_factory=dict, compare=False)


def _as_trial_list(trials):
    if hasattr(trials, 'trials'):            # single-channel TrialSet view
        if trials.n_channels != 1:
            raise ValidationError('expected a single-channel trial set; use .select([ch])')
        trials = [t[0] for t in trials.trials]
    out = [np.asarray(t, dtype=float).ravel() for t in trials]
    if not out:
        raise EmptyTrialSet('no trials given')
    return out


def trigger_synch(trials, onset_times, fs, duration=D.DURATION_S):
    """Align trials on their movement onsets.

    The common trigger is the earliest onset. Every trial is shifted left so
    its onset lands on the trigger sample and is then cut to end ``duration``
    seconds after the trigger.

    Parameters
    ----------
    trials : sequence of 1-D arrays, or a single-channel TrialSet
    onset_times : sequence of float
        Onset of each trial in seconds from the trial start.
    fs : float
        Sampling rate (Hz).
    duration : float
        Seconds kept after the trigger.

    Returns
    -------
    SynchronizedTrials
    """
    trials = _as_trial_list(trials)
    onset_times = np.asarray(onset_times, dtype=float).ravel()
    if onset_times.size != len(trials):
        raise ValidationError(f'{onset_times.size} onsets for {len(trials)} trials')
    trigger = float(onset_times.min())
    trigger_sample = int(round(trigger * fs))
    n_keep = int(round((trigger + duration) * fs))
    rows = []
    for i, (x, t_on) in enumerate(zip(trials, onset_times)):
        shift = int(round(t_on * fs)) - trigger_sample
        if shift + n_keep > x.size:
            raise TrialTooShort(
                f'trial {i}: onset {t_on:g} s + duration {duration:g} s exceeds '
                f'trial length {x.size / fs:g} s')
        rows.append(x[shift:shift + n_keep])
    return SynchronizedTrials(np.vstack(rows), trigger, trigger_sample,
                              np.arange(n_keep) / fs, float(fs))


def _trend_window(fs, seconds):
    return max(1, int(round(seconds * fs)))


def trigger_avg_erp(trials, onset_times, fs, band, duration=D.DURATION_S,
                    order=D.CIC_ORDER, trend_s=D.ERP_TREND_S):
    """Band-power ERP: filter, square, synchronize, average and smooth.

    Each trial is band-passed with :func:`cic_bandpass` and squared; the
    squared trials are aligned with :func:`trigger_synch`, averaged across
    trials and smoothed over ``trend_s`` seconds.

    Averaging and the moving-average trend are both linear, so the trend is
    taken per trial before the trials are cut. Interior values are the same
    either way, and the edges of the kept window see real samples instead
    of truncated smoothing windows.
    """
    band = as_band(band)
    trials = _as_trial_list(trials)
    L = _trend_window(fs, trend_s)
    power = []
    for x in trials:
        p = cic_bandpass(x, fs, band, order) ** 2
        power.append(moving_average(p, min(L, p.size)))
    sync = trigger_synch(power, onset_times, fs, duration)
    values = np.maximum(sync.ensemble.mean(axis=0), 0.0)
    return ERPCurve(values, sync.time_vec, sync.trigger_time_sec, band, len(trials), float(fs))


def _crossing(t0, t1, e0, e1):
    # time where the excess crosses zero on the segment (t0, e0) -> (t1, e1)
    return t0 + (t1 - t0) * e0 / (e0 - e1)


def _runs(mask):
    idx = np.flatnonzero(np.diff(np.concatenate(([0], mask.astype(np.int8), [0]))))
    return idx[0::2], idx[1::2]


def _segments(excess, t, kind):
    """Runs of positive ``excess`` with interpolated edges and normalized area."""
    out = []
    starts, stops = _runs(excess > 0)
    for a, b in zip(starts, stops):       # samples a..b-1 are inside
        ts, es = list(t[a:b]), list(excess[a:b])
        if a > 0:
            ts.insert(0, _crossing(t[a - 1], t[a], excess[a - 1], excess[a]))
            es.insert(0, 0.0)
        if b < t.size:
            ts.append(_crossing(t[b - 1], t[b], excess[b - 1], excess[b]))
            es.append(0.0)
        ts, es = np.array(ts), np.array(es)
        length = ts[-1] - ts[0]
        area = np.trapezoid(es, ts) / length if length > 0 else float(es.max())
        out.append(Segment(kind, float(ts[0]), float(ts[-1]), float(area)))
    return out


def erp_quantification(erp, ref_per=D.REF_PER_S, cof_intv=D.COF_INTV):
    """Quantify ERD/ERS events of an ERP against a pre-trigger reference.

    The reference value is the mean ERP over ``ref_per`` (seconds relative to
    the trigger) and sets the 100 % level. The confidence lines sit
    ``cof_intv`` reference standard deviations below and above it. After the
    trigger, excursions below the lower line are ERD segments and excursions
    above the upper line are ERS segments; a segment's area is the area
    between the curve and the crossed line divided by the segment length.

    Segment times are on the ERP's own time axis (record time); subtract
    ``trigger_time_sec`` for times relative to the trigger.

    Parameters
    ----------
    erp : ERPCurve
    ref_per : (float, float)
        Reference period ``[-a, -b]`` in seconds, before the trigger.
    cof_intv : float
        Confidence interval coefficient.

    Returns
    -------
    ErdErsReport
    """
    values = np.asarray(erp.values, dtype=float)
    t = np.asarray(erp.time_vec, dtype=float) - erp.trigger_time_sec
    a, b = (float(v) for v in ref_per)
    dt = 0.5 / erp.fs
    if not (a < b <= 0) or a < t[0] - dt or b > t[-1]:
        raise ReferenceOutsideSignal(
            f'reference period [{a:g}, {b:g}] s must lie before the trigger and '
            f'within [{t[0]:g}, {t[-1]:g}] s')
    ref = values[(t >= a - 1e-9) & (t <= b + 1e-9)]
    if ref.size == 0:
        raise ReferenceOutsideSignal('reference period contains no samples')
    ref_value = float(ref.mean())
    if ref_value == 0:
        raise ZeroReference('reference power is zero')
    ref_std = float(ref.std())
    quant = 100.0 * values / ref_value
    half = cof_intv * 100.0 * ref_std / ref_value
    lower, upper = 100.0 - half, 100.0 + half

    post = t >= -1e-9
    t_abs = np.asarray(erp.time_vec, dtype=float)
    tp, qp = t_abs[post], quant[post]
    segments = _segments(lower - qp, tp, 'ERD') + _segments(qp - upper, tp, 'ERS')
    segments.sort(key=lambda s: s.start_s)
    return ErdErsReport(ref_value, ref_std, float(cof_intv), segments, quant, t_abs,
                        erp.trigger_time_sec, lower, upper)


def cwt_morlet(x, fs, freqs, w0=D.CWT_W0):
    """Complex Morlet wavelet coefficients, one row per frequency.

    Wavelets are normalized to unit energy so that a unit sinusoid at a
    given frequency yields roughly equal power in its own row regardless of
    the frequency.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((len(freqs), x.size), dtype=complex)
    for k, f in enumerate(freqs):
        sigma = w0 / (2 * np.pi * f)                    # seconds
        half = min(int(np.ceil(4 * sigma * fs)), x.size - 1)
        tt = np.arange(-half, half + 1) / fs
        psi = np.exp(2j * np.pi * f * tt) * np.exp(-tt ** 2 / (2 * sigma ** 2))
        psi /= np.sqrt(np.sum(np.abs(psi) ** 2))
        out[k] = sps.fftconvolve(x, np.conj(psi[::-1]), mode='same')
    return out


def nbch_bins(freq_range=D.TF_FREQ_RANGE, bin_hz=D.NBCH_BIN_HZ):
    lo, hi = freq_range
    edges = np.arange(lo, hi + 1e-9, bin_hz)
    return [BandSpec.from_edges(e, e + bin_hz) for e in edges[:-1]]


def trigger_avg_tf_erp(trials, onset_times, fs, duration=D.DURATION_S, method=D.TF_METHOD,
                       freq_range=D.TF_FREQ_RANGE, nbch_bin_hz=D.NBCH_BIN_HZ,
                       n_freqs=D.CWT_N_FREQS, stft_window_s=D.STFT_WINDOW_S,
                       stft_overlap=D.STFT_OVERLAP, w0=D.CWT_W0):
    """Trial-averaged time-frequency power map.

    ``method`` selects the representation:

    * ``'STFT'``: Hamming-windowed spectrogram of each synchronized trial,
      averaged over trials. All frequencies up to Nyquist are kept.
    * ``'CWT'``: squared Morlet coefficients on ``n_freqs`` log-spaced
      frequencies in ``freq_range``, averaged over trials.
    * ``'NBCH'``: :func:`trigger_avg_erp` run in consecutive ``nbch_bin_hz``
      bins across ``freq_range``; one row per bin.

    Times are seconds from the start of the synchronized record, with the
    trigger at ``trigger_time_sec``.
    """
    method = str(method).upper()
    trials = _as_trial_list(trials)
    if method == 'NBCH':
        rows, freqs = [], []
        for band in nbch_bins(freq_range, nbch_bin_hz):
            erp = trigger_avg_erp(trials, onset_times, fs, band, duration)
            rows.append(erp.values)
            freqs.append(band.f0)
        return TFMap(np.vstack(rows), np.array(freqs), erp.time_vec,
                     erp.trigger_time_sec, method)
    if method not in ('STFT', 'CWT'):
        raise UnknownMethod(f"method must be 'STFT', 'CWT' or 'NBCH', got {method!r}")
    sync = trigger_synch(trials, onset_times, fs, duration)
    if method == 'STFT':
        nper = max(2, int(round(stft_window_s * fs)))
        nover = int(round(nper * stft_overlap))
        freqs, times, sxx = sps.spectrogram(sync.ensemble, fs=fs, window='hamming',
                                            nperseg=nper, noverlap=nover, detrend=False,
                                            scaling='spectrum', mode='psd', axis=-1)
        power = sxx.mean(axis=0)
        return TFMap(power, freqs, times, sync.trigger_time_sec, method,
                     {'nperseg': nper, 'noverlap': nover})
    freqs = np.geomspace(freq_range[0], freq_range[1], n_freqs)
    acc = np.zeros((freqs.size, sync.ensemble.shape[1]))
    for row in sync.ensemble:
        acc += np.abs(cwt_morlet(row, fs, freqs, w0)) ** 2
    return TFMap(acc / len(sync.ensemble), freqs, sync.time_vec, sync.trigger_time_sec,
                 method, {'w0': w0})
