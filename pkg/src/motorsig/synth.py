"""Deterministic synthetic EEG/EMG trials with ground-truth annotations.

Every random draw comes from the SplitMix64 streams in :mod:`motorsig._rng`,
keyed by ``(seed, trial, component, channel)``, so output is reproducible
bit for bit and independent of the order in which trials are generated.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import hilbert

from . import _rng
from .errors import InvalidSpec
from .precondition import as_band
from .trials import TrialSet

__all__ = ['ErdSpec', 'CouplingSpec', 'EcgSpec', 'EmgSpec', 'SynthSpec', 'GroundTruth',
           'gen_trial_set', 'pink_shape', 'inband_fraction', 'noise_power_for_snr',
           'jitter_sigma_for_plv', 'expected_plv']

# stream identifiers for derive_seed
_S_NOISE, _S_RHYTHM, _S_COMMON, _S_JITTER, _S_ONSET, _S_EMG, _S_ECG = range(7)
PINK_FMIN = 0.5


@dataclass(frozen=True)
class ErdSpec:
    band: tuple = (8.0, 12.0)
    drop_fraction: float = 0.5    # in-band power ratio inside / outside the interval
    start_s: float = 0.0          # relative to onset
    end_s: float = 0.5


@dataclass(frozen=True)
class CouplingSpec:
    pair: tuple = (0, 1)
    band: tuple = (12.0, 32.0)
    pre_onset_plv_target: float = 0.1
    post_onset_plv_target: float = 0.9
    amplitude: float = 1.0
    window_s: float = 1.0         # window over which the PLV targets hold


@dataclass(frozen=True)
class EcgSpec:
    rate_bpm: float = 72.0
    amplitude: float = 5.0
    width_s: float = 0.02         # std of the gaussian R wave


@dataclass(frozen=True)
class EmgSpec:
    quiet_std: float = 1.0
    burst_std: float = 10.0
    rise_s: float = 0.1
    plateau_s: float = 1.0
    fall_s: float = 0.3
    burst_band: tuple | None = None   # band-limit the burst noise, e.g. (80, 200)
    ecg: EcgSpec | None = None


@dataclass(frozen=True)
class SynthSpec:
    n_trials: int = 20
    n_channels: int = 4
    fs: float = 512.0
    trial_length_s: float = 6.0
    onset_s: float = 3.0
    onset_jitter_s: float = 0.0       # onsets uniform on onset_s +/- jitter
    rhythm_hz: float = 10.0
    rhythm_amplitude: float = 1.0
    erd: ErdSpec | None = None
    coupling: CouplingSpec | None = None
    emg: EmgSpec | None = None
    noise_power: float = 1.0
    noise_color: str = 'pink'
    seed: int = 0
    channel_labels: tuple | None = None

    def validate(self):
        def bad(msg):
            raise InvalidSpec(msg)
        if self.n_trials < 1 or self.n_channels < 1:
            bad('n_trials and n_channels must be >= 1')
        if not self.fs > 0 or not self.trial_length_s > 0:
            bad('fs and trial_length_s must be positive')
        lo_on, hi_on = self.onset_s - self.onset_jitter_s, self.onset_s + self.onset_jitter_s
        if self.onset_jitter_s < 0 or lo_on <= 0 or hi_on >= self.trial_length_s:
            bad('onsets (with jitter) must lie strictly inside the trial')
        if self.noise_power < 0 or self.noise_color not in ('pink', 'white'):
            bad("noise_power must be >= 0 and noise_color 'pink' or 'white'")
        if not 0 < self.rhythm_hz < self.fs / 2:
            bad('rhythm_hz must lie in (0, fs/2)')
        if self.erd is not None:
            e = self.erd
            if not 0 < e.drop_fraction <= 1:
                bad('erd.drop_fraction must lie in (0, 1]')
            if not (e.start_s < e.end_s and lo_on + e.start_s >= 0
                    and hi_on + e.end_s <= self.trial_length_s):
                bad('ERD interval must lie inside every trial')
        if self.coupling is not None:
            c = self.coupling
            a, b = c.pair
            if a == b or not (0 <= a < self.n_channels and 0 <= b < self.n_channels):
                bad(f'coupling pair {c.pair} invalid for {self.n_channels} channels')
            for p in (c.pre_onset_plv_target, c.post_onset_plv_target):
                if not 0 <= p <= 1:
                    bad('PLV targets must lie in [0, 1]')
            lo, hi = c.band
            if not 0 < lo < hi < self.fs / 2:
                bad('coupling band must lie inside (0, fs/2)')
        if self.emg is not None:
            m = self.emg
            if m.quiet_std < 0 or m.burst_std < 0:
                bad('EMG amplitudes must be >= 0')
            if m.burst_band is not None and not 0 < m.burst_band[0] < m.burst_band[1] < self.fs / 2:
                bad('EMG burst band must lie inside (0, fs/2)')
        if self.channel_labels is not None and len(self.channel_labels) != self.n_channels:
            bad('channel_labels must name every EEG channel')
        return self

    @property
    def n_samples(self):
        return int(round(self.trial_length_s * self.fs))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key, sub in (('erd', ErdSpec), ('coupling', CouplingSpec)):
            if d.get(key) is not None:
                d[key] = sub(**{k: tuple(v) if isinstance(v, list) else v
                                for k, v in d[key].items()})
        if d.get('emg') is not None:
            m = dict(d['emg'])
            if m.get('ecg') is not None:
                m['ecg'] = EcgSpec(**m['ecg'])
            if m.get('burst_band') is not None:
                m['burst_band'] = tuple(m['burst_band'])
            d['emg'] = EmgSpec(**m)
        if d.get('channel_labels') is not None:
            d['channel_labels'] = tuple(d['channel_labels'])
        return cls(**d)


@dataclass
class GroundTruth:
    onset_samples: list
    onset_times: list
    erd: dict | None
    coupling: dict | None
    emg_channel: int | None
    clean: list = field(repr=False)   # per trial: dict of clean component arrays


def pink_shape(n, fs, color='pink', fmin=PINK_FMIN):
    """One-sided spectral amplitude giving unit expected variance."""
    f = np.fft.rfftfreq(n, 1.0 / fs)
    if color == 'white':
        h = np.ones_like(f)
        h[0] = 0.0
    else:
        h = np.where(f >= fmin, 1.0 / np.sqrt(np.maximum(f, fmin)), 0.0)
    w = np.full(f.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return h / np.sqrt(np.sum(w * h ** 2) / n)


def inband_fraction(n, fs, band, color='pink'):
    """Expected fraction of the background power that falls inside ``band``."""
    h = pink_shape(n, fs, color)
    f = np.fft.rfftfreq(n, 1.0 / fs)
    w = np.full(f.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    b = as_band(band)
    inside = (f >= b.lo) & (f <= b.hi)
    return float(np.sum((w * h ** 2)[inside]) / np.sum(w * h ** 2))


def noise_power_for_snr(snr_db, signal_power, band, n, fs, color='pink'):
    """Background variance that puts ``signal_power`` at ``snr_db`` inside ``band``."""
    inband = signal_power / 10 ** (snr_db / 10.0)
    return inband / inband_fraction(n, fs, band, color)


def _colored(seed, n, fs, color):
    white = _rng.normal(seed, n)
    spec = np.fft.rfft(white, norm='ortho') * pink_shape(n, fs, color)
    return np.fft.irfft(spec, n, norm='ortho')


def _bandlimited(seed, n, fs, band):
    lo, hi = band
    f = np.fft.rfftfreq(n, 1.0 / fs)
    spec = np.fft.rfft(_rng.normal(seed, n))
    spec[(f < lo) | (f > hi)] = 0.0
    x = np.fft.irfft(spec, n)
    sd = x.std()
    return x / sd if sd > 0 else x


def expected_plv(sigma, T):
    """Mean resultant length of ``T`` phasors of white gaussian phase jitter.

    Each channel carries independent jitter of std ``sigma`` so the phase
    difference has variance ``2 sigma**2`` and mean phasor ``exp(-sigma**2)``;
    the second term is the finite-sample floor.
    """
    rho2 = np.exp(-2.0 * np.asarray(sigma, dtype=float) ** 2)
    return np.sqrt(rho2 + (1.0 - rho2) / T)


def jitter_sigma_for_plv(target, T):
    """Invert :func:`expected_plv`; ``inf`` means uniformly random phases."""
    floor2 = 1.0 / T
    if target ** 2 <= floor2:
        return np.inf
    rho2 = min(1.0, (target ** 2 - floor2) / (1.0 - floor2))
    return float(np.sqrt(-0.5 * np.log(rho2))) if rho2 < 1 else 0.0


def _jitter(seed, n, sigma):
    if np.isinf(sigma):
        return _rng.uniform(seed, n, -np.pi, np.pi)
    return sigma * _rng.normal(seed, n)


def _trapezoid_env(n, fs, onset, rise, plateau, fall):
    t = (np.arange(n) - onset) / fs
    env = np.zeros(n)
    up = (t >= 0) & (t < rise)
    env[up] = t[up] / rise if rise > 0 else 1.0
    env[(t >= rise) & (t < rise + plateau)] = 1.0
    down = (t >= rise + plateau) & (t < rise + plateau + fall)
    env[down] = 1.0 - (t[down] - rise - plateau) / fall
    return env


def _ecg_train(seed, n, fs, ecg):
    period = 60.0 / ecg.rate_bpm
    phase = _rng.uniform(seed, 1)[0] * period
    t = np.arange(n) / fs
    beats = np.arange(phase - period, n / fs + period, period)
    out = np.zeros(n)
    for tb in beats:
        out += np.exp(-0.5 * ((t - tb) / ecg.width_s) ** 2)
    return ecg.amplitude * out


def _one_trial(spec, i, onset):
    n, fs, seed = spec.n_samples, spec.fs, spec.seed
    t = np.arange(n) / fs
    clean = {}
    eeg = np.zeros((spec.n_channels, n))

    if spec.noise_power > 0:
        noise = np.vstack([
            np.sqrt(spec.noise_power) * _colored(_rng.derive_seed(seed, i, _S_NOISE, c), n, fs,
                                                 spec.noise_color)
            for c in range(spec.n_channels)])
        eeg += noise
        clean['noise'] = noise

    if spec.rhythm_amplitude > 0:
        env = np.ones(n)
        if spec.erd is not None:
            b = as_band(spec.erd.band)
            if b.lo <= spec.rhythm_hz <= b.hi:
                a = onset + int(round(spec.erd.start_s * fs))
                z = onset + int(round(spec.erd.end_s * fs))
                env[a:z] = np.sqrt(spec.erd.drop_fraction)
        phases = _rng.uniform(_rng.derive_seed(seed, i, _S_RHYTHM), spec.n_channels, 0, 2 * np.pi)
        rhythm = spec.rhythm_amplitude * env * np.cos(
            2 * np.pi * spec.rhythm_hz * t + phases[:, None])
        eeg += rhythm
        clean['rhythm'] = rhythm
        clean['rhythm_envelope'] = env

    if spec.coupling is not None:
        c = spec.coupling
        T = int(round(c.window_s * fs))
        common = hilbert(_bandlimited(_rng.derive_seed(seed, i, _S_COMMON), n, fs, c.band))
        phi_c = np.angle(common)
        s_pre = jitter_sigma_for_plv(c.pre_onset_plv_target, T)
        s_post = jitter_sigma_for_plv(c.post_onset_plv_target, T)
        ph = []
        for k, ch in enumerate(c.pair):
            js = _rng.derive_seed(seed, i, _S_JITTER, k)
            jit = np.where(np.arange(n) < onset, _jitter(js, n, s_pre),
                           _jitter(_rng.derive_seed(js, 1), n, s_post))
            ph.append(phi_c + jit)
        coupled = np.zeros((spec.n_channels, n))
        for ch, p in zip(c.pair, ph):
            coupled[ch] = c.amplitude * np.cos(p)
        eeg += coupled
        clean['coupled'] = coupled
        clean['coupled_phases'] = np.vstack([np.angle(np.exp(1j * p)) for p in ph])

    rows = [eeg]
    if spec.emg is not None:
        m = spec.emg
        base = _rng.normal(_rng.derive_seed(seed, i, _S_EMG, 0), n)
        if m.burst_band is not None:
            burst_noise = _bandlimited(_rng.derive_seed(seed, i, _S_EMG, 1), n, fs, m.burst_band)
        else:
            burst_noise = _rng.normal(_rng.derive_seed(seed, i, _S_EMG, 1), n)
        env = _trapezoid_env(n, fs, onset, m.rise_s, m.plateau_s, m.fall_s)
        burst = m.burst_std * env * burst_noise
        quiet = m.quiet_std * base
        emg = quiet + burst
        clean['emg_burst'] = burst
        clean['emg_envelope'] = m.burst_std * env
        clean['emg_quiet'] = quiet
        if m.ecg is not None:
            ecg = _ecg_train(_rng.derive_seed(seed, i, _S_ECG), n, fs, m.ecg)
            emg = emg + ecg
            clean['ecg'] = ecg
        rows.append(emg[None, :])
    return np.vstack(rows), clean


def gen_trial_set(spec):
    """Generate ``spec.n_trials`` trials and the matching ground truth.

    EEG channels hold background noise, the (optionally ERD-modulated)
    rhythm and, for the coupled pair, phase-coupled band-limited
    oscillations. When ``spec.emg`` is set an EMG channel labelled ``'EMG'``
    is appended after the EEG channels.

    Returns
    -------
    trials : TrialSet
        Carries the true onsets.
    truth : GroundTruth
    """
    spec.validate()
    fs, n = spec.fs, spec.n_samples
    jit = _rng.uniform(_rng.derive_seed(spec.seed, _S_ONSET), spec.n_trials,
                       -spec.onset_jitter_s, spec.onset_jitter_s)
    onsets = [int(round((spec.onset_s + j) * fs)) for j in jit]
    data, clean = [], []
    for i, onset in enumerate(onsets):
        x, c = _one_trial(spec, i, onset)
        data.append(x)
        clean.append(c)

    labels = list(spec.channel_labels or [f'EEG{c + 1}' for c in range(spec.n_channels)])
    emg_channel = None
    if spec.emg is not None:
        emg_channel = len(labels)
        labels.append('EMG')

    erd = None
    if spec.erd is not None:
        erd = {'band': tuple(spec.erd.band), 'start_s': spec.erd.start_s,
               'end_s': spec.erd.end_s, 'drop_fraction': spec.erd.drop_fraction}
    coupling = None
    if spec.coupling is not None:
        c = spec.coupling
        T = int(round(c.window_s * fs))
        coupling = {'pair': tuple(c.pair), 'band': tuple(c.band),
                    'pre_onset_plv_target': c.pre_onset_plv_target,
                    'post_onset_plv_target': c.post_onset_plv_target,
                    'pre_sigma': jitter_sigma_for_plv(c.pre_onset_plv_target, T),
                    'post_sigma': jitter_sigma_for_plv(c.post_onset_plv_target, T)}
    truth = GroundTruth(onsets, [s / fs for s in onsets], erd, coupling, emg_channel, clean)
    ts = TrialSet(data, fs, labels, onsets, None, {'generator': 'motorsig.synth',
                                                   'spec': spec.to_dict()})
    return ts, truth
