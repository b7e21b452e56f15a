import numpy as np
import pytest
from hypothesis import given, strategies as st

from motorsig.connectivity import (msc_spectrum, phase_est, plv, plv_matrix, pwcoherence,
                                   pwplv, segment_spectra, tcplv, window_edges)
from motorsig.errors import (BadPair, EmptyPhase, LengthMismatch, SignalTooShort,
                             ValidationError, WindowOutsideTrials, WindowTooShortForSegments)
from motorsig.trials import TrialSet

from .conftest import tone

FS = 128.0


def _noise_set(n_trials=6, n_ch=3, seconds=6.0, onset=3.5, seed=0, identical=False):
    rng = np.random.default_rng(seed)
    n = int(seconds * FS)
    trials = []
    for _ in range(n_trials):
        if identical:
            x = rng.standard_normal(n)
            trials.append(np.tile(x, (n_ch, 1)))
        else:
            trials.append(rng.standard_normal((n_ch, n)))
    labels = ['C3', 'C4', 'Cz', 'Pz', 'Fz'][:n_ch]
    return TrialSet(trials, FS, labels, [int(onset * FS)] * n_trials)


# PLV

def test_plv_identities():
    rng = np.random.default_rng(0)
    p = rng.uniform(-np.pi, np.pi, 500)
    assert plv(p, p) == 1.0
    assert plv(p, np.angle(np.exp(1j * (p + np.pi / 3)))) == 1.0
    assert plv([0, 0, 0, 0], [0, np.pi / 2, np.pi, 3 * np.pi / 2]) < 1e-15


def test_plv_independent_small():
    rng = np.random.default_rng(1)
    vals = [plv(rng.uniform(-np.pi, np.pi, 10_000), rng.uniform(-np.pi, np.pi, 10_000))
            for _ in range(50)]
    # expected magnitude ~ sqrt(pi / 4 / T) = 0.0089
    assert max(vals) < 0.05
    assert np.mean(vals) == pytest.approx(np.sqrt(np.pi / 4 / 10_000), rel=0.3)


def test_plv_errors():
    with pytest.raises(LengthMismatch):
        plv([0, 1], [0, 1, 2])
    with pytest.raises(EmptyPhase):
        plv([], [])


@given(st.lists(st.floats(-np.pi, np.pi), min_size=1, max_size=60), st.floats(-10, 10),
       st.integers(0, 2 ** 32 - 1))
def test_plv_properties(px, c, seed):
    px = np.array(px)
    py = np.random.default_rng(seed).uniform(-np.pi, np.pi, px.size)
    v = plv(px, py)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(plv(py, px), abs=1e-12)
    assert v == pytest.approx(plv(px + c, py + c), abs=1e-9)


def test_plv_matrix_matches_loop():
    rng = np.random.default_rng(2)
    ph = [rng.uniform(-np.pi, np.pi, 300) for _ in range(4)]
    M = plv_matrix(ph)
    for a in range(4):
        for b in range(4):
            assert M[a, b] == (1.0 if a == b else plv(ph[min(a, b)], ph[max(a, b)]))
    assert np.array_equal(M, M.T)
    assert np.array_equal(plv_matrix([ph[0], ph[0]]), np.ones((2, 2)))


def test_plv_matrix_independent():
    rng = np.random.default_rng(3)
    M = plv_matrix([rng.uniform(-np.pi, np.pi, 10_000) for _ in range(3)])
    assert np.all(M[~np.eye(3, dtype=bool)] < 0.05)


# phase estimation

def test_phase_est_tone():
    fs = 256.0
    x = tone(10.0, fs, 4.0, phase=0.3)
    ps = phase_est(x, fs, 'alpha', pertnum=20)
    n = x.size
    core = slice(n // 10, n - n // 10)
    truth = 2 * np.pi * 10 * np.arange(n) / fs + 0.3
    err = np.angle(np.exp(1j * (ps.phase - truth)))[core]
    assert np.sqrt(np.mean(err ** 2)) < 0.05
    slope = np.diff(np.unwrap(ps.phase))[core]
    assert np.median(slope) == pytest.approx(2 * np.pi * 10 / fs, rel=1e-3)


def test_phase_est_invariants():
    rng = np.random.default_rng(4)
    ps = phase_est(rng.standard_normal(1024), 256.0, (12, 32), pertnum=5)
    assert np.all(ps.phase > -np.pi) and np.all(ps.phase <= np.pi)
    assert np.all(ps.envelope >= 0)
    assert np.allclose(np.abs(ps.analytic), ps.envelope)
    assert ps.T == 1024


def test_phase_est_single_run_is_plain_pipeline():
    from scipy.signal import hilbert
    from motorsig.precondition import cic_bandpass
    rng = np.random.default_rng(5)
    x = rng.standard_normal(1024)
    ps = phase_est(x, 256.0, 'alpha', pertnum=1)
    ref = np.angle(hilbert(cic_bandpass(x, 256.0, 'alpha')))
    ref = np.where(ref <= -np.pi, np.pi, ref)
    assert np.array_equal(ps.phase, ref)


def test_phase_est_interfering_tone():
    fs = 256.0
    x = tone(10.0, fs, 4.0) + tone(45.0, fs, 4.0)
    ps = phase_est(x, fs, 'alpha', pertnum=10)
    assert np.median(ps.inst_freq) == pytest.approx(10.0, rel=0.02)


def test_phase_est_reproducible_and_keyed():
    rng = np.random.default_rng(6)
    x = rng.standard_normal(512)
    a = phase_est(x, 256.0, 'beta', pertnum=8, seed=3, key=(1, 2))
    b = phase_est(x, 256.0, 'beta', pertnum=8, seed=3, key=(1, 2))
    c = phase_est(x, 256.0, 'beta', pertnum=8, seed=3, key=(1, 3))
    assert np.array_equal(a.phase, b.phase)
    assert not np.array_equal(a.phase, c.phase)


def test_phase_est_errors():
    with pytest.raises(SignalTooShort):
        phase_est(np.zeros(50), 256.0, 'alpha')
    with pytest.raises(ValidationError):
        phase_est(np.zeros(1024), 256.0, 'alpha', pertnum=0)


# windows and PLV maps

def test_window_edges():
    assert window_edges((-3, 2)) == ((-3, -2), (-2, -1), (-1, 0), (0, 1), (1, 2))
    with pytest.raises(ValidationError):
        window_edges((-3, 1.5))


def test_identical_channels_give_unit_plv():
    ts = _noise_set(identical=True)
    m = pwplv(ts, pertnum=3)
    assert np.array_equal(m.values, np.ones_like(m.values))
    s = tcplv(ts, pair=('C3', 'Cz'), pertnum=3)
    assert np.all(s.values == 1.0)


def test_pwplv_equals_tcplv_per_pair():
    ts = _noise_set()
    m = pwplv(ts, pertnum=4, seed=7)
    for a, b in [(0, 1), (0, 2), (1, 2)]:
        s = tcplv(ts, pair=(a, b), pertnum=4, seed=7)
        assert np.array_equal(s.values[:, 0], m.values[:, a, b])
    ref = tcplv(ts, pair='all', reference='C4', pertnum=4, seed=7)
    assert ref.pairs == ((1, 0), (1, 1), (1, 2))
    assert np.array_equal(ref.values[:, 0], m.values[:, 1, 0])
    assert np.all(ref.values[:, 1] == 1.0)


def test_pwplv_structure_and_parallel():
    ts = _noise_set()
    m = pwplv(ts, pertnum=4)
    assert len(m.windows) == 5 and m.values.shape == (5, 3, 3)
    for v in m.values:
        assert np.array_equal(v, v.T) and np.all(np.diag(v) == 1.0)
        assert np.all((v >= 0) & (v <= 1))
    par = pwplv(ts, pertnum=4, n_jobs=3)
    assert np.array_equal(par.values, m.values)
    pooled = pwplv(ts, pertnum=4, pooling='pooled')
    assert np.all(pooled.values <= 1)


def test_map_errors():
    ts = _noise_set(onset=2.5)
    with pytest.raises(WindowOutsideTrials):
        pwplv(ts, pertnum=1)
    ts = _noise_set()
    with pytest.raises(BadPair):
        tcplv(ts, pair=('C3', 'Oz'), pertnum=1)
    with pytest.raises(BadPair):
        tcplv(ts, pair='some', pertnum=1)
    with pytest.raises(ValidationError):
        pwplv(ts, pertnum=1, pooling='median')


# coherence

def test_msc_of_signal_with_itself():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(256)
    for n in (1, 2, 4, 8):
        s = segment_spectra(x, 128.0, n)
        v = msc_spectrum(s, s)
        assert np.allclose(v[np.abs(s.X).sum(axis=0) > 0], 1.0)
        assert s.N == n and s.segment_length == 256 // n


def test_single_segment_degenerate():
    rng = np.random.default_rng(9)
    X = segment_spectra(rng.standard_normal(128), 128.0, 1)
    Y = segment_spectra(rng.standard_normal(128), 128.0, 1)
    assert np.allclose(msc_spectrum(X, Y)[1:], 1.0)
    ts = _noise_set(n_trials=1)
    with pytest.raises(WindowTooShortForSegments):
        pwcoherence(ts, n_segments=1)


def test_msc_matches_direct_formula():
    rng = np.random.default_rng(10)
    x, y = rng.standard_normal(128), rng.standard_normal(128)
    X, Y = segment_spectra(x, 128.0, 4).X, segment_spectra(y, 128.0, 4).X
    num = np.abs(sum(X[i] * np.conj(Y[i]) for i in range(4))) ** 2
    den = sum(np.abs(X[i]) ** 2 for i in range(4)) * sum(np.abs(Y[i]) ** 2 for i in range(4))
    assert np.allclose(msc_spectrum(X, Y), num / den)


def test_pwcoherence_independent_noise_low():
    ts = _noise_set(n_trials=50)
    m = pwcoherence(ts)
    off = m.values[:, ~np.eye(3, dtype=bool)]
    assert off.max() < 0.15
    for v in m.values:
        assert np.array_equal(v, v.T) and np.all(np.diag(v) == 1.0)


def test_pwcoherence_single_bin_band_equals_raw():
    ts = _noise_set(n_trials=4)
    # 1 s windows in 4 segments -> 4 Hz bins; the band 15.5..16.5 Hz holds only 16 Hz
    m = pwcoherence(ts, band=(15.5, 16.5), duration=(0, 1))
    on = ts.onset_samples[0]
    X = segment_spectra(np.stack([x[0, on:on + 128] for x in ts.trials]), FS, 4)
    Y = segment_spectra(np.stack([x[1, on:on + 128] for x in ts.trials]), FS, 4)
    k = int(np.flatnonzero(X.freqs == 16.0)[0])
    assert m.values[0, 0, 1] == pytest.approx(msc_spectrum(X, Y)[k], rel=1e-12)


def test_pwcoherence_msc_trial_average_biased_up():
    ts = _noise_set(n_trials=20)
    a = pwcoherence(ts, trial_average='spectra').values
    b = pwcoherence(ts, trial_average='msc').values
    off = ~np.eye(3, dtype=bool)
    assert b[:, off].mean() > a[:, off].mean()
    with pytest.raises(ValidationError):
        pwcoherence(ts, trial_average='median')
