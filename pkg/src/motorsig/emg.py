"""EMG movement-onset detection, ECG artifact extraction and quantification."""
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as sps

from . import defaults as D
from .errors import NoOnsetDetected, SamplingTooLow, SignalTooShort, ValidationError
from .erp import _as_trial_list, trigger_synch
from .precondition import moving_average

__all__ = ['OnsetResult', 'QuantifiedEMG', 'moving_std', 'emg_onset', 'ecg_extract',
           'emg_quantification']


@dataclass(frozen=True)
class OnsetResult:
    onset_sample: int
    onset_time: float
    std_vector: np.ndarray
    threshold: float
    detection_sample: int       # first sample of the stage-1 supra-threshold run


@dataclass(frozen=True)
class QuantifiedEMG:
    curve: np.ndarray
    time_vec: np.ndarray
    trigger_time_sec: float
    peak_magnitude: float
    peak_time_sec: float
    activation_slope: float
    immediate_post_onset_slope: float


def moving_std(x, W):
    """Standard deviation over the ``W`` samples ending at each index.

    The first ``W - 1`` entries use the shorter windows that are available.
    """
    x = np.asarray(x, dtype=float)
    padded = np.concatenate((np.full(W - 1, np.nan), x))
    return np.nanstd(sliding_window_view(padded, W), axis=1)


def _trailing_mean(x, W):
    c = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - W, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def emg_onset(emg, fs, W=None, th_coeff=D.TH_COEFF, baseline_s=D.ONSET_BASELINE_S,
              spread='emg'):
    """Two-stage threshold detector for the movement onset in an EMG trace.

    Stage 1 computes the trailing windowed standard deviation (the STD
    vector) and finds the first run of at least ``W/2`` consecutive samples
    above the threshold ``baseline mean of the STD vector + th_coeff *
    spread``, with baseline statistics taken over the quiet prefix
    (``baseline_s`` seconds). Stage 2 walks back from that run along the
    trailing moving average of the STD vector and places the onset right
    after the last sample where that trend was still at or below threshold.

    Parameters
    ----------
    emg : array_like
        One EMG trial.
    fs : float
        Sampling rate (Hz).
    W : int, optional
        STD window in samples; default ``round(0.05 * fs)``.
    th_coeff : float
        Threshold multiplier.
    baseline_s : float
        Length of the quiet prefix used for threshold statistics.
    spread : {'emg', 'std_vector'}
        Baseline spread scaled by ``th_coeff``: the standard deviation of the
        EMG samples themselves (default), or that of the STD vector. The
        STD vector of stationary noise fluctuates by only about
        ``1/sqrt(2 W)`` of its mean, so the second choice puts the
        threshold close to the quiet level and false alarms become likely
        over long quiet stretches.
    """
    x = np.asarray(emg, dtype=float).ravel()
    W = int(round(D.ONSET_WINDOW_S * fs)) if W is None else int(W)
    if W < 2:
        raise ValidationError(f'W must be >= 2, got {W}')
    if not th_coeff > 0:
        raise ValidationError(f'th_coeff must be positive, got {th_coeff}')
    n_base = int(round(baseline_s * fs))
    if x.size < n_base + W or n_base < W:
        raise SignalTooShort(
            f'{x.size} samples cannot hold a {n_base}-sample baseline plus a {W}-sample window')
    if spread not in ('emg', 'std_vector'):
        raise ValidationError(f"spread must be 'emg' or 'std_vector', got {spread!r}")
    std_vec = moving_std(x, W)
    base = std_vec[W - 1:n_base]
    scale = x[:n_base].std() if spread == 'emg' else base.std()
    threshold = float(base.mean() + th_coeff * scale)

    above = std_vec > threshold
    above[:n_base] = False
    need = max(1, -(-W // 2))
    run = np.convolve(above.astype(np.int64), np.ones(need, dtype=np.int64), 'valid')
    hits = np.flatnonzero(run == need)
    if hits.size == 0:
        raise NoOnsetDetected(f'STD vector never stays above {threshold:.4g} for {need} samples')
    start = int(hits[0])

    trend = _trailing_mean(std_vec, W)
    below = np.flatnonzero(trend[:start + 1] <= threshold)
    onset = int(below[-1]) + 1 if below.size else start
    onset = min(onset, start)
    return OnsetResult(onset, onset / fs, std_vec, threshold, start)


def ecg_extract(emg, fs, cutoff=D.ECG_LPF_HZ, order=D.ECG_LPF_ORDER,
                ripple_db=D.ECG_RIPPLE_DB, stop_db=D.ECG_STOP_DB, median_s=D.ECG_MEDIAN_S):
    """Estimate the ECG pattern riding on an EMG trace (LPF + median filter).

    A zero-phase elliptic low-pass keeps the 1-30 Hz ECG band; a short
    median filter then cleans the residual EMG spikes from the estimate.
    """
    x = np.asarray(emg, dtype=float).ravel()
    if not fs > 2 * cutoff:
        raise SamplingTooLow(f'fs = {fs:g} Hz must exceed {2 * cutoff:g} Hz')
    sos = sps.ellip(order, ripple_db, stop_db, cutoff, btype='low', output='sos', fs=fs)
    if x.size > 3 * (2 * len(sos) + 1):
        low = sps.sosfiltfilt(sos, x)
    else:
        low = sps.sosfilt(sos, sps.sosfilt(sos, x)[::-1])[::-1]
    k = max(1, int(round(median_s * fs)))
    k += 1 - k % 2
    return sps.medfilt(low, k) if k > 1 else low


def _ls_slope(t, y):
    if t.size < 2:
        return 0.0
    tc = t - t.mean()
    den = float(np.dot(tc, tc))
    return float(np.dot(tc, y - y.mean()) / den) if den > 0 else 0.0


def emg_quantification(trials, onset_samples, fs, duration=D.DURATION_S,
                       trend_s=D.EMG_TREND_S, early_s=D.EMG_EARLY_SLOPE_S):
    """Trigger-averaged, rectified, ECG-free EMG envelope and its metrics.

    Per trial the ECG estimate from :func:`ecg_extract` is subtracted and
    the remainder is full-wave rectified. Rectified trials are aligned on
    their onsets, averaged, and smoothed over ``trend_s`` seconds.

    Returns
    -------
    quantified : QuantifiedEMG
        ``activation_slope`` is the least-squares slope from the trigger to
        the post-trigger peak and ``immediate_post_onset_slope`` the slope
        over the first ``early_s`` seconds after the trigger (µV/s).
    synchronized : SynchronizedTrials
        Aligned ECG-free (unrectified) trials.
    ecg : list of numpy.ndarray
        ECG estimate of each trial.
    """
    trials = _as_trial_list(trials)
    onset_times = np.asarray(onset_samples, dtype=float) / fs
    ecg = [ecg_extract(x, fs) for x in trials]
    clean = [x - e for x, e in zip(trials, ecg)]
    synced = trigger_synch(clean, onset_times, fs, duration)
    rect = np.abs(synced.ensemble).mean(axis=0)
    L = min(max(1, int(round(trend_s * fs))), rect.size)
    curve = np.maximum(moving_average(rect, L), 0.0)

    t = synced.time_vec
    post = np.flatnonzero(t >= synced.trigger_time_sec - 1e-12)
    k = int(post[np.argmax(curve[post])])
    peak = float(curve[k])
    seg = slice(post[0], k + 1)
    act_slope = _ls_slope(t[seg], curve[seg])
    early = post[t[post] <= synced.trigger_time_sec + early_s + 1e-12]
    early_slope = _ls_slope(t[early], curve[early])
    q = QuantifiedEMG(curve, t, synced.trigger_time_sec, peak, float(t[k]),
                      act_slope, early_slope)
    return q, synced, ecg
