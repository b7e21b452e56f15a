"""Instantaneous phase, phase-locking value and magnitude-squared coherence maps."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert

from . import _rng
from . import defaults as D
from .errors import (BadPair, EmptyPhase, LengthMismatch, SignalTooShort, ValidationError,
                     WindowOutsideTrials, WindowTooShortForSegments)
from .precondition import _cic_core, as_band, cic_length
from .trials import TrialSet

__all__ = ['PhaseSequence', 'SegmentSpectra', 'ConnectivityMap', 'PairSeries', 'phase_est',
           'plv', 'plv_matrix', 'window_edges', 'tcplv', 'pwplv', 'segment_spectra',
           'msc_spectrum', 'pwcoherence']


@dataclass(frozen=True)
class PhaseSequence:
    """Band-limited instantaneous phase of one signal.

    ``phase`` is wrapped to (-pi, pi], ``inst_freq`` is in Hz and
    ``analytic == envelope * exp(1j * phase)``.
    """
    phase: np.ndarray
    inst_freq: np.ndarray
    envelope: np.ndarray
    analytic: np.ndarray
    fs: float
    band: object

    @property
    def T(self):
        return self.phase.size


@dataclass(frozen=True)
class SegmentSpectra:
    """Spectra of non-overlapping Hamming-tapered segments.

    ``X`` has the segments on its second-to-last axis and frequency last.
    """
    X: np.ndarray
    freqs: np.ndarray
    segment_length: int

    @property
    def N(self):
        return self.X.shape[-2]


@dataclass(frozen=True)
class ConnectivityMap:
    """One channel-by-channel matrix per time window.

    ``windows`` holds ``(start_s, end_s)`` relative to the trigger and
    ``values`` has shape ``(n_windows, n_channels, n_channels)``.
    """
    windows: tuple
    values: np.ndarray
    measure: str
    band: object
    channel_labels: tuple

    def rows(self):
        """``(start_s, end_s, ch_a, ch_b, value)`` for every pair with a <= b."""
        n = len(self.channel_labels)
        for w, (s, e) in enumerate(self.windows):
            for a in range(n):
                for b in range(a, n):
                    yield s, e, self.channel_labels[a], self.channel_labels[b], \
                        float(self.values[w, a, b])


@dataclass(frozen=True)
class PairSeries:
    """Per-window values for an explicit list of channel pairs."""
    windows: tuple
    pairs: tuple                # ((a, b), ...) channel indices
    values: np.ndarray          # (n_windows, n_pairs)
    measure: str
    band: object
    channel_labels: tuple

    def rows(self):
        for w, (s, e) in enumerate(self.windows):
            for p, (a, b) in enumerate(self.pairs):
                yield s, e, self.channel_labels[a], self.channel_labels[b], \
                    float(self.values[w, p])


def _wrap(phase):
    # np.angle returns values in [-pi, pi]; fold -pi onto pi
    return np.where(phase <= -np.pi, np.pi, phase)


def phase_est(sig, fs, band, pertnum=D.PERTNUM, seed=D.SEED, key=(), order=D.CIC_ORDER):
    """Instantaneous phase by trial-free perturbation averaging.

    The signal is band-passed and turned into its analytic signal
    ``pertnum`` times, each time with the band center and width nudged by a
    small random amount (center by up to ``±1%`` of the width, width by up
    to ``±5%``). The per-run phases are combined by their circular mean,
    which smooths estimator noise tied to one particular filter. With
    ``pertnum == 1`` the nominal band is used unperturbed.

    Parameters
    ----------
    sig : array_like
        1-D signal.
    fs : float
        Sampling rate (Hz).
    band : BandSpec, str or (lo, hi)
    pertnum : int
        Number of perturbed runs.
    seed : int
        Seed of the perturbation draws.
    key : tuple of int
        Extra keys folded into ``seed`` (e.g. trial, channel, window) so that
        every call site gets its own reproducible stream.

    Returns
    -------
    PhaseSequence
    """
    band = as_band(band).check(fs)
    pertnum = int(pertnum)
    if pertnum < 1:
        raise ValidationError(f'pertnum must be >= 1, got {pertnum}')
    x = np.asarray(sig, dtype=float).ravel()
    if x.size < 4.0 * fs / band.f0:
        raise SignalTooShort(f'{x.size} samples hold fewer than 4 cycles of {band.f0:g} Hz')

    if pertnum == 1:
        f0 = np.array([band.f0])
        bw = np.array([band.bw])
    else:
        s = _rng.derive_seed(seed, *key)
        f0 = band.f0 + _rng.uniform(_rng.derive_seed(s, 0), pertnum,
                                    -0.01 * band.bw, 0.01 * band.bw)
        bw = band.bw * (1.0 + _rng.uniform(_rng.derive_seed(s, 1), pertnum, -0.05, 0.05))
    nyq = fs / 2.0
    if np.any(f0 + bw / 2 >= nyq) or np.any(f0 - bw / 2 <= 0):
        raise ValidationError(f'perturbed band {band} leaves (0, {nyq:g}) Hz')

    L = np.array([cic_length(fs, b, order) for b in bw])
    filtered = np.empty((pertnum, x.size))
    for lval in np.unique(L):
        sel = np.flatnonzero(L == lval)
        filtered[sel] = _cic_core(x, fs, f0[sel], int(lval), order)
    z = hilbert(filtered, axis=-1)
    phases = _wrap(np.angle(z))
    mags = np.abs(z)

    if np.all(phases == phases[0]):
        phase = phases[0].copy()
    else:
        phase = _wrap(np.angle(np.exp(1j * phases).mean(axis=0)))
    envelope = mags.mean(axis=0)
    analytic = envelope * np.exp(1j * phase)
    if x.size > 1:
        d = np.diff(np.unwrap(phase)) * fs / (2 * np.pi)
        inst_freq = np.append(d, d[-1])
    else:
        inst_freq = np.zeros(1)
    return PhaseSequence(phase, inst_freq, envelope, analytic, float(fs), band)


def _phase_array(p):
    return np.asarray(p.phase if isinstance(p, PhaseSequence) else p, dtype=float).ravel()


def plv(phases_x, phases_y):
    """Phase-locking value ``|mean(exp(1j * (phi_y - phi_x)))|``.

    Accepts PhaseSequence objects or plain phase arrays (radians).
    """
    px, py = _phase_array(phases_x), _phase_array(phases_y)
    if px.size != py.size:
        raise LengthMismatch(f'phase sequences have lengths {px.size} and {py.size}')
    if px.size == 0:
        raise EmptyPhase('phase sequences are empty')
    d = py - px
    # rotating by the first difference leaves the magnitude unchanged and
    # makes constant differences sum to exactly T
    d = d - d[0]
    c, s = np.cos(d).mean(), np.sin(d).mean()
    v = float(np.hypot(c, s))
    # magnitudes at the rounding level of the phasor mean are exact cancellations
    if v < 4 * np.finfo(float).eps:
        return 0.0
    return min(1.0, v)


def plv_matrix(phases):
    """Symmetric matrix of pairwise :func:`plv` with unit diagonal."""
    phases = list(phases)
    if len(phases) < 2:
        raise ValidationError('plv_matrix needs at least two phase sequences')
    n = len(phases)
    M = np.eye(n)
    for a in range(n):
        for b in range(a + 1, n):
            M[a, b] = M[b, a] = plv(phases[a], phases[b])
    return M


def window_edges(duration, window_s=D.CONN_WINDOW_S):
    """Consecutive ``window_s`` bins covering ``duration = (start, end)``."""
    a, b = (float(v) for v in duration)
    if not b > a:
        raise ValidationError(f'duration {duration} must be increasing')
    k = (b - a) / window_s
    n = int(round(k))
    if n < 1 or abs(k - n) > 1e-9:
        raise ValidationError(f'duration {b - a:g} s is not a whole number of {window_s:g} s windows')
    return tuple((a + i * window_s, a + (i + 1) * window_s) for i in range(n))


def _windowed(ts, onset_times, duration, window_s):
    """Synchronized data cut into windows: array (n_trials, n_channels, n_windows, n_win)."""
    if not isinstance(ts, TrialSet):
        raise ValidationError('connectivity maps need a TrialSet')
    fs = ts.fs
    onsets = ts.onset_times if onset_times is None else onset_times
    if onsets is None:
        raise ValidationError('no onset times given and the trial set carries none')
    onsets = np.asarray(onsets, dtype=float).ravel()
    if onsets.size != ts.n_trials:
        raise ValidationError(f'{onsets.size} onsets for {ts.n_trials} trials')
    windows = window_edges(duration, window_s)
    n_win = int(round(window_s * fs))
    offsets = [int(round(s * fs)) for s, _ in windows]
    out = np.empty((ts.n_trials, ts.n_channels, len(windows), n_win))
    for i, (x, t_on) in enumerate(zip(ts.trials, onsets)):
        on = int(round(t_on * fs))
        for w, off in enumerate(offsets):
            lo, hi = on + off, on + off + n_win
            if lo < 0 or hi > x.shape[1]:
                raise WindowOutsideTrials(
                    f'trial {i}: window {windows[w][0]:g}..{windows[w][1]:g} s around the '
                    f'onset at {t_on:g} s falls outside the {x.shape[1] / fs:g} s trial')
            out[i, :, w] = x[:, lo:hi]
    return out, windows


def _resolve_pairs(ts, pair, reference):
    if isinstance(pair, str):
        if pair != 'all':
            raise BadPair(f"pair must be a channel pair or 'all', got {pair!r}")
        try:
            r = ts.channel_index(reference)
        except ValidationError as exc:
            raise BadPair(str(exc)) from None
        return tuple((r, c) for c in range(ts.n_channels))
    try:
        a, b = pair
        return ((ts.channel_index(a), ts.channel_index(b)),)
    except (TypeError, ValueError) as exc:
        raise BadPair(f'bad channel pair {pair!r}: {exc}') from None


def _phases(data, fs, band, pertnum, seed, channels, n_jobs):
    """Phase arrays keyed by (trial, channel) -> (n_windows, n_win)."""
    n_tr, _, n_w, _ = data.shape

    # every channel of a trial window shares one perturbation draw, so
    # identical signals get identical phases
    def one(i):
        return {(i, c): np.vstack([phase_est(data[i, c, w], fs, band, pertnum, seed,
                                             key=(i, w)).phase for w in range(n_w)])
                for c in channels}

    out = {}
    if n_jobs is not None and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            for part in ex.map(one, range(n_tr)):
                out.update(part)
    else:
        for i in range(n_tr):
            out.update(one(i))
    return out


def _pair_plv(ph, n_tr, a, b, w, pooling):
    if a == b:
        return 1.0
    if pooling == 'trial-mean':
        return float(np.mean([plv(ph[i, a][w], ph[i, b][w]) for i in range(n_tr)]))
    return plv(np.concatenate([ph[i, a][w] for i in range(n_tr)]),
               np.concatenate([ph[i, b][w] for i in range(n_tr)]))


def _check_pooling(pooling):
    if pooling not in ('trial-mean', 'pooled'):
        raise ValidationError(f"pooling must be 'trial-mean' or 'pooled', got {pooling!r}")


def tcplv(trials, onset_times=None, band=D.CONN_BAND, duration=D.CONN_DURATION_S, pair='all',
          reference=D.REFERENCE_LABEL, pertnum=D.PERTNUM, pooling='trial-mean', seed=D.SEED,
          n_jobs=1, window_s=D.CONN_WINDOW_S):
    """Time-course PLV over consecutive 1 s windows around the trigger.

    Trials are aligned on their onsets. In every window the phase of each
    involved channel is estimated per trial with :func:`phase_est` on that
    window alone, and the PLV of each pair is averaged over trials
    (``pooling='trial-mean'``) or computed once over the concatenated
    trials (``pooling='pooled'``).

    Parameters
    ----------
    trials : TrialSet
    onset_times : sequence of float, optional
        Defaults to the onsets stored in ``trials``.
    band : BandSpec, str or (lo, hi)
    duration : (float, float)
        Span in seconds relative to the trigger, e.g. ``(-3, 2)``.
    pair : (ch, ch) or 'all'
        One pair, or ``'all'`` for the reference channel against every channel.
    reference : str or int
        Reference channel for ``pair='all'``.

    Returns
    -------
    PairSeries
    """
    _check_pooling(pooling)
    band = as_band(band).check(trials.fs)
    pairs = _resolve_pairs(trials, pair, reference)
    data, windows = _windowed(trials, onset_times, duration, window_s)
    channels = sorted({c for p in pairs for c in p})
    ph = _phases(data, trials.fs, band, pertnum, seed, channels, n_jobs)
    n_tr = data.shape[0]
    values = np.array([[_pair_plv(ph, n_tr, a, b, w, pooling) for a, b in pairs]
                       for w in range(len(windows))])
    return PairSeries(windows, pairs, values, 'PLV', band, trials.channel_labels)


def pwplv(trials, onset_times=None, band=D.CONN_BAND, duration=D.CONN_DURATION_S,
          pertnum=D.PERTNUM, pooling='trial-mean', seed=D.SEED, n_jobs=1,
          window_s=D.CONN_WINDOW_S):
    """Pairwise PLV maps: one symmetric channel-by-channel matrix per window.

    Entry ``(a, b)`` equals ``tcplv(..., pair=(a, b))`` for the same seed.
    """
    _check_pooling(pooling)
    band = as_band(band).check(trials.fs)
    data, windows = _windowed(trials, onset_times, duration, window_s)
    n_tr, n_ch = data.shape[:2]
    ph = _phases(data, trials.fs, band, pertnum, seed, range(n_ch), n_jobs)
    values = np.empty((len(windows), n_ch, n_ch))
    for w in range(len(windows)):
        values[w] = np.eye(n_ch)
        for a in range(n_ch):
            for b in range(a + 1, n_ch):
                values[w, a, b] = values[w, b, a] = _pair_plv(ph, n_tr, a, b, w, pooling)
    return ConnectivityMap(windows, values, 'PLV', band, trials.channel_labels)


def segment_spectra(x, fs, n_segments=D.MSC_SEGMENTS):
    """FFT of ``n_segments`` equal, non-overlapping, Hamming-tapered segments.

    Trailing samples that do not fill a whole segment are dropped. ``x`` may
    be 1-D or have leading axes; segments are taken along the last axis and
    stacked on a new second-to-last axis.
    """
    x = np.asarray(x, dtype=float)
    n_segments = int(n_segments)
    if n_segments < 1:
        raise ValidationError(f'n_segments must be >= 1, got {n_segments}')
    seg = x.shape[-1] // n_segments
    if seg < 2:
        raise WindowTooShortForSegments(
            f'{x.shape[-1]} samples cannot be split into {n_segments} segments of >= 2 samples')
    parts = x[..., :seg * n_segments].reshape(x.shape[:-1] + (n_segments, seg))
    X = np.fft.rfft(parts * np.hamming(seg), axis=-1)
    return SegmentSpectra(X, np.fft.rfftfreq(seg, 1.0 / fs), seg)


def msc_spectrum(X, Y):
    """Magnitude-squared coherence per frequency bin from segment spectra.

    ``X`` and ``Y`` are arrays (or SegmentSpectra) whose second-to-last axis
    (and any leading axes) are summed over::

        |sum X_i conj(Y_i)|**2 / (sum |X_i|**2 * sum |Y_i|**2)

    Bins where either signal has no power are reported as 0.
    """
    X = X.X if isinstance(X, SegmentSpectra) else np.asarray(X)
    Y = Y.X if isinstance(Y, SegmentSpectra) else np.asarray(Y)
    if X.shape != Y.shape:
        raise LengthMismatch(f'spectra shapes differ: {X.shape} vs {Y.shape}')
    k = X.shape[-1]
    X, Y = X.reshape(-1, k), Y.reshape(-1, k)
    sxy = (X * np.conj(Y)).sum(axis=0)
    sxx = (X * np.conj(X)).real.sum(axis=0)
    syy = (Y * np.conj(Y)).real.sum(axis=0)
    den = sxx * syy
    num = sxy.real ** 2 + sxy.imag ** 2
    out = np.zeros(k)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return np.clip(out, 0.0, 1.0)


def _band_bins(freqs, band):
    idx = np.flatnonzero((freqs >= band.lo - 1e-9) & (freqs <= band.hi + 1e-9))
    if idx.size == 0:
        raise ValidationError(f'no frequency bin lies inside {band.lo:g}-{band.hi:g} Hz')
    return idx


def pwcoherence(trials, onset_times=None, band=D.CONN_BAND, duration=D.CONN_DURATION_S,
                n_segments=D.MSC_SEGMENTS, trial_average='spectra', window_s=D.CONN_WINDOW_S):
    """Pairwise magnitude-squared coherence maps, one matrix per window.

    Each window is split into ``n_segments`` non-overlapping Hamming-tapered
    segments. With ``trial_average='spectra'`` the cross- and auto-spectra
    are summed over segments and trials before forming the coherence, so
    all ``n_segments * n_trials`` segments act as the averaging ensemble.
    ``trial_average='msc'`` computes a coherence per trial and averages
    those instead; it is biased upwards by about ``1/n_segments`` for
    unrelated signals. Coherence is averaged over the bins whose centers
    lie inside the band.
    """
    if trial_average not in ('spectra', 'msc'):
        raise ValidationError(f"trial_average must be 'spectra' or 'msc', got {trial_average!r}")
    band = as_band(band).check(trials.fs)
    if int(n_segments) < 2 and trials.n_trials < 2:
        raise WindowTooShortForSegments(
            'a single segment from a single trial always gives coherence 1; '
            'use at least 2 segments or 2 trials')
    data, windows = _windowed(trials, onset_times, duration, window_s)
    n_tr, n_ch, n_w = data.shape[:3]
    values = np.empty((n_w, n_ch, n_ch))
    for w in range(n_w):
        spec = segment_spectra(data[:, :, w], trials.fs, n_segments)
        bins = _band_bins(spec.freqs, band)
        X = spec.X[..., bins]            # (n_trials, n_channels, n_segments, n_bins)
        values[w] = np.eye(n_ch)
        for a in range(n_ch):
            for b in range(a + 1, n_ch):
                if trial_average == 'spectra':
                    v = msc_spectrum(X[:, a], X[:, b]).mean()
                else:
                    v = np.mean([msc_spectrum(X[i, a], X[i, b]).mean() for i in range(n_tr)])
                values[w, a, b] = values[w, b, a] = v
    return ConnectivityMap(windows, values, 'MSC', band, trials.channel_labels)
