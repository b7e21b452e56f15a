import json

import numpy as np
import pytest

from motorsig.errors import EmptyTrialSet, FormatError, ValidationError
from motorsig.trials import TrialSet, load_archive, save_archive


def _ts(n=3, onsets=True):
    rng = np.random.default_rng(1)
    trials = [rng.normal(size=(2, 100)) for _ in range(n)]
    return TrialSet(trials, 50.0, ['C3', 'EMG'], [10, 20, 30][:n] if onsets else None)


def test_onset_times_follow_samples():
    ts = _ts()
    assert ts.onset_times == (0.2, 0.4, 0.6)
    ts2 = TrialSet(ts.trials, 50.0, ts.channel_labels, None, [0.2, 0.4, 0.6])
    assert ts2.onset_samples == (10, 20, 30)


def test_invariants_rejected():
    t = [np.zeros((2, 100))]
    with pytest.raises(EmptyTrialSet):
        TrialSet([], 50.0, [])
    with pytest.raises(ValidationError):
        TrialSet(t + [np.zeros((3, 100))], 50.0, ['a', 'b'])
    with pytest.raises(ValidationError):
        TrialSet(t, 50.0, ['a'])
    for bad in (0, 99, 150, -1):
        with pytest.raises(ValidationError):
            TrialSet(t, 50.0, ['a', 'b'], [bad])


def test_trials_are_read_only():
    ts = _ts()
    with pytest.raises(ValueError):
        ts.trials[0][0, 0] = 1.0


def test_channel_lookup():
    ts = _ts()
    assert ts.channel_index('EMG') == 1 and ts.channel_index(0) == 0
    assert ts.channel_index('1') == 1
    assert np.array_equal(ts.channel('C3')[2], ts.trials[2][0])
    with pytest.raises(ValidationError):
        ts.channel_index('Cz')
    with pytest.raises(ValidationError):
        ts.channel_index(5)
    sub = ts.select(['EMG'])
    assert sub.channel_labels == ('EMG',) and sub.onset_samples == ts.onset_samples


def test_archive_round_trip(tmp_path):
    ts = _ts()
    save_archive(ts, tmp_path / 'a', {'note': 'x'})
    back = load_archive(tmp_path / 'a')
    assert back.channel_labels == ts.channel_labels and back.onset_samples == ts.onset_samples
    for a, b in zip(ts.trials, back.trials):
        assert np.allclose(a, b, rtol=1e-8, atol=1e-12)
    meta = json.loads((tmp_path / 'a' / 'manifest.json').read_text())
    assert meta['provenance']['note'] == 'x'
    head = (tmp_path / 'a' / 'trial_000.csv').read_text().splitlines()[0]
    assert head == 'C3_uV,EMG_uV'


def test_archive_is_stable_on_second_save(tmp_path):
    ts = _ts(onsets=False)
    save_archive(ts, tmp_path / 'a')
    back = load_archive(tmp_path / 'a')
    save_archive(back, tmp_path / 'b')
    for name in ('trial_000.csv', 'trial_002.csv'):
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()
    assert load_archive(tmp_path / 'b') == back


def test_missing_archive(tmp_path):
    with pytest.raises(FormatError):
        load_archive(tmp_path)
    (tmp_path / 'manifest.json').write_text('{nope')
    with pytest.raises(FormatError):
        load_archive(tmp_path)
