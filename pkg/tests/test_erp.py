import numpy as np
import pytest
from hypothesis import given, strategies as st

from motorsig.errors import (ReferenceOutsideSignal, TrialTooShort, UnknownMethod,
                             ZeroReference)
from motorsig.erp import (ERPCurve, erp_quantification, trigger_avg_erp,
                          trigger_avg_tf_erp, trigger_synch)
from motorsig.precondition import BandSpec
from motorsig.synth import ErdSpec, SynthSpec, gen_trial_set

from .conftest import tone


def _curve(values, fs=100.0, trigger=2.0):
    values = np.asarray(values, float)
    return ERPCurve(values, np.arange(values.size) / fs, trigger,
                    BandSpec.from_edges(8, 12), 1, fs)


# trigger synchronization

def test_synch_identical_trials():
    x = np.arange(500.0)
    s = trigger_synch([x, x], [2.0, 2.0], 100.0, duration=2.0)
    assert s.ensemble.shape == (2, 400)
    assert np.array_equal(s.ensemble[0], x[:400]) and np.array_equal(s.ensemble[1], x[:400])


def test_synch_index_arithmetic():
    x = np.arange(500.0)
    s = trigger_synch([x, x], [2.0, 2.5], 100.0, duration=2.0)
    assert s.trigger_time_sec == 2.0 and s.trigger_sample == 200
    assert s.ensemble.shape == (2, 400)
    assert np.array_equal(s.ensemble[1], x[50:450])
    assert np.allclose(np.diff(s.time_vec), 0.01)


def test_synch_too_short():
    with pytest.raises(TrialTooShort):
        trigger_synch([np.zeros(300)], [1.5], 100.0, duration=2.0)


@given(st.lists(st.floats(0.5, 2.0), min_size=1, max_size=5))
def test_synch_only_shifts_and_truncates(onsets):
    fs = 50.0
    trials = [np.arange(250.0) + 1000 * i for i in range(len(onsets))]
    s = trigger_synch(trials, onsets, fs, duration=2.0)
    for i, row in enumerate(s.ensemble):
        assert np.all(np.isin(row, trials[i]))
        assert np.all(np.diff(row) == 1)
    assert s.trigger_sample == round(s.trigger_time_sec * fs)


# ERP curve

def test_zero_trials_give_zero_erp():
    erp = trigger_avg_erp([np.zeros(1000)] * 3, [3.0] * 3, 200.0, 'alpha')
    assert np.all(erp.values == 0) and erp.values.size == erp.time_vec.size


def test_tone_plateau_matches_tone_power():
    fs = 256.0
    x = tone(10.0, fs, 6.0)
    erp = trigger_avg_erp([x] * 4, [3.0] * 4, fs, 'alpha')
    # first quarter second holds the filter start-up transient
    assert np.allclose(erp.values[64:], 0.5, rtol=0.01)
    assert np.allclose(erp.values, 0.5, rtol=0.1)


def test_erd_dip_near_half():
    spec = SynthSpec(n_trials=20, n_channels=1, fs=256, noise_power=0.0,
                     erd=ErdSpec(drop_fraction=0.5))
    ts, truth = gen_trial_set(spec)
    erp = trigger_avg_erp(ts.channel(0), ts.onset_times, ts.fs, 'alpha')
    t = erp.time_vec - erp.trigger_time_sec
    pre = erp.values[(t > -1.3) & (t < -0.3)].mean()
    dip = erp.values[(t > 0.15) & (t < 0.35)].mean()
    assert dip / pre == pytest.approx(0.5, abs=0.05)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=4))
def test_erp_nonnegative(offsets):
    rng = np.random.default_rng(len(offsets))
    trials = [rng.normal(size=768) + o for o in offsets]
    erp = trigger_avg_erp(trials, [1.5] * len(trials), 256.0, 'alpha', duration=1.0)
    assert np.all(erp.values >= 0)


# quantification

def test_constant_erp_has_no_segments():
    r = erp_quantification(_curve(np.full(400, 3.0)))
    assert r.segments == [] and np.allclose(r.quant_erp, 100)


def test_rectangular_dip_area():
    v = np.ones(400)
    v[250:300] = 0.4           # 0.5 s to 1.0 s after the trigger
    r = erp_quantification(_curve(v))
    assert r.reference_std == 0
    assert len(r.segments) == 1
    s = r.segments[0]
    assert s.kind == 'ERD'
    assert s.length_s == pytest.approx(0.5, abs=0.01)
    assert s.area == pytest.approx(60.0, rel=0.02)


def test_small_excursion_inside_band():
    v = 1 + 0.05 * (-1.0) ** np.arange(400)     # reference std 5 %
    v[200:] = 1.0
    v[250:300] = 1.1
    r = erp_quantification(_curve(v))
    assert r.upper_line > 105 and r.segments == []


@given(st.floats(1e-3, 1e3))
def test_quantification_scale_invariant(c):
    rng = np.random.default_rng(3)
    v = 1 + 0.02 * rng.standard_normal(400)
    v[230:280] = 0.5
    v[320:360] = 1.6
    a = erp_quantification(_curve(v))
    b = erp_quantification(_curve(c * v))
    assert np.allclose(a.quant_erp, b.quant_erp)
    assert [s.kind for s in a.segments] == [s.kind for s in b.segments]
    for s, u in zip(a.segments, b.segments):
        assert s.start_s == pytest.approx(u.start_s) and s.end_s == pytest.approx(u.end_s)
        assert s.area == pytest.approx(u.area, rel=1e-6)


def test_segments_ordered_and_after_trigger():
    rng = np.random.default_rng(5)
    v = 1 + 0.3 * np.sin(np.arange(400) / 7) + 0.01 * rng.standard_normal(400)
    r = erp_quantification(_curve(v), ref_per=(-1.0, -0.9))
    ends = [(s.start_s, s.end_s) for s in r.segments]
    assert ends, 'expected excursions'
    for (a, b), (c, _) in zip(ends, ends[1:]):
        assert a < b <= c
    assert all(a >= r.trigger_time_sec - 1e-12 for a, _ in ends)
    t = r.time_vec
    for s in r.erd:
        inside = (t > s.start_s) & (t < s.end_s)
        assert np.all(r.quant_erp[inside] < r.lower_line)


def test_quantification_errors():
    with pytest.raises(ReferenceOutsideSignal):
        erp_quantification(_curve(np.ones(400)), ref_per=(-3.0, -0.3))
    with pytest.raises(ReferenceOutsideSignal):
        erp_quantification(_curve(np.ones(400)), ref_per=(-0.3, 0.2))
    with pytest.raises(ZeroReference):
        erp_quantification(_curve(np.zeros(400)))


# time-frequency maps

@pytest.mark.parametrize('method', ['STFT', 'CWT', 'NBCH'])
def test_zero_tf_maps(method):
    m = trigger_avg_tf_erp([np.zeros(1024)] * 2, [2.0, 2.0], 256.0, method=method)
    assert np.all(m.power == 0)
    assert m.power.shape == (m.freq_vec.size, m.time_vec.size)


def test_stft_tone_concentrated():
    fs = 256.0
    x = tone(10.0, fs, 6.0)
    m = trigger_avg_tf_erp([x, x], [3.0, 3.0], fs, method='STFT')
    k = int(np.argmin(np.abs(m.freq_vec - 10.0)))
    near = m.power[max(k - 1, 0):k + 2].sum()
    assert near / m.power.sum() >= 0.9


def test_nbch_rows_dip_only_in_band():
    spec = SynthSpec(n_trials=20, n_channels=1, fs=256, noise_power=0.0,
                     erd=ErdSpec(drop_fraction=0.5))
    ts, _ = gen_trial_set(spec)
    # a second rhythm outside the ERD band, unaffected by it
    t = np.arange(ts.trials[0].shape[1]) / ts.fs
    trials = [x + np.cos(2 * np.pi * 20 * t) for x in ts.channel(0)]
    m = trigger_avg_tf_erp(trials, ts.onset_times, ts.fs, method='NBCH')
    tt = m.time_vec - m.trigger_time_sec
    pre, post = (tt > -1.3) & (tt < -0.3), (tt > 0.15) & (tt < 0.35)

    def dip(f):
        row = m.power[int(np.argmin(np.abs(m.freq_vec - f)))]
        return 1 - row[post].mean() / row[pre].mean()
    assert dip(9.0) >= 2 * abs(dip(21.0))
    assert dip(9.0) > 0.3


def test_unknown_method():
    with pytest.raises(UnknownMethod):
        trigger_avg_tf_erp([np.zeros(1024)], [2.0], 256.0, method='wigner')


@pytest.mark.parametrize('method', ['STFT', 'CWT'])
@given(gain=st.floats(1.0, 10.0))
def test_tf_energy_monotone(method, gain):
    rng = np.random.default_rng(9)
    x = rng.standard_normal(768)
    a = trigger_avg_tf_erp([x], [1.5], 256.0, duration=1.0, method=method)
    b = trigger_avg_tf_erp([gain * x], [1.5], 256.0, duration=1.0, method=method)
    assert b.power.sum() >= a.power.sum() * (1 - 1e-12)
