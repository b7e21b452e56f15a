import csv
import json

import numpy as np
import pytest

from motorsig import cli
from motorsig.bdf_io import write_trial_bdf
from motorsig.trials import load_archive


def _run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope='module')
def archive(tmp_path_factory):
    out = tmp_path_factory.mktemp('synth') / 'set'
    code = _run('run', 'synth', '-o', out, '--n-channels', 3, '--fs', 256,
                '--onset', 3.5, '--trial-length', 6, '--erd-band', 'alpha', '--emg',
                '--n-trials', 30, '--noise-power', 0.2,
                '--labels', 'C3', 'Cz', 'C4', '--seed', 3)
    assert code == 0
    return out


_UNITS = ('_s', '_uV', '_uV2', '_percent', '_hz', '_unitless', '_index', '_per_s')
_LABEL_COLUMNS = ('kind', 'ch_a', 'ch_b')


def _header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_synth_writes_archive_and_truth(archive):
    ts = load_archive(archive)
    truth = json.loads((archive / 'ground_truth.json').read_text())
    assert ts.n_trials == 30 and ts.channel_labels == ('C3', 'Cz', 'C4', 'EMG')
    assert list(ts.onset_samples) == truth['onset_samples']
    meta = json.loads((archive / cli.MANIFEST_NAME).read_text())
    assert meta['command'] == 'synth' and meta['seed'] == 3


def test_erp_quant_outputs(archive, tmp_path):
    out = tmp_path / 'erp'
    assert _run('run', 'erp-quant', '-i', archive, '-o', out, '--channel', 'C3', '--plot') == 0
    assert _header(out / 'erp.csv') == ['time_s', 'time_from_trigger_s', 'power_uV2',
                                        'power_percent']
    rows = list(csv.DictReader(open(out / 'segments.csv')))
    erd = [r for r in rows if r['kind'] == 'ERD']
    assert erd and abs(float(erd[0]['start_from_trigger_s'])) < 0.15
    assert (out / 'erp.svg').read_text().lstrip().startswith('<?xml')


def test_every_csv_has_units_header(archive, tmp_path):
    for cmd, extra in [('erp', []), ('erp-tf', ['--method', 'NBCH']),
                       ('pwcoh', []), ('emg-onset', []), ('emg-quant', []),
                       ('tcplv', ['--pertnum', 2, '--pair', 'C3', 'C4'])]:
        out = tmp_path / cmd
        assert _run('run', cmd, '-i', archive, '-o', out, *extra) == 0, cmd
        for f in out.glob('*.csv'):
            for h in _header(f):
                assert h in _LABEL_COLUMNS or h.endswith(_UNITS), (f.name, h)


def test_pwplv_plot_one_svg_per_window(archive, tmp_path):
    out = tmp_path / 'pw'
    assert _run('run', 'pwplv', '-i', archive, '-o', out, '--pertnum', 2, '--plot') == 0
    assert len(list(out.glob('*.svg'))) == 5
    assert len(list(out.glob('*.csv'))) == 1
    rows = list(csv.DictReader(open(out / 'pwplv.csv')))
    assert len(rows) == 5 * 10          # 4 channels: 10 pairs with a <= b per window


def test_reruns_byte_identical(archive, tmp_path):
    for name in ('a', 'b'):
        assert _run('run', 'pwplv', '-i', archive, '-o', tmp_path / name, '--pertnum', 3,
                    '--seed', 5, '--plot') == 0
    for f in (tmp_path / 'a').iterdir():
        if f.name != cli.MANIFEST_NAME:
            assert f.read_bytes() == (tmp_path / 'b' / f.name).read_bytes(), f.name


def test_replay_from_manifest(archive, tmp_path):
    out = tmp_path / 'q'
    assert _run('run', 'erp-quant', '-i', archive, '-o', out, '--cof-intv', 2.5) == 0
    assert _run('replay', out / cli.MANIFEST_NAME, '-o', tmp_path / 'r') == 0
    for name in ('erp.csv', 'segments.csv', 'reference.csv'):
        assert (out / name).read_bytes() == (tmp_path / 'r' / name).read_bytes()
    meta = json.loads((tmp_path / 'r' / cli.MANIFEST_NAME).read_text())
    assert meta['params']['cof_intv'] == 2.5


def test_config_precedence(tmp_path):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text('# comment\ncof_intv = 2\nref-per = -1.2, -0.4\n')
    conf = cli.read_config(cfg)
    p = cli.resolve('erp-quant', {'cof_intv': '2.5'}, conf)
    assert p['cof_intv'] == 2.5 and p['ref_per'] == [-1.2, -0.4]
    p = cli.resolve('erp-quant', {}, {})
    assert p['cof_intv'] == 3.0 and p['ref_per'] == [-1.3, -0.3] and p['duration'] == 2.0
    with pytest.raises(cli.UsageError):
        cli.resolve('erp-quant', {}, {'pertnum': '7'})   # not an ERP parameter


def test_exit_codes(archive, tmp_path, capsys):
    assert _run('run', 'wavelets', '-o', tmp_path / 'x') == 1
    assert _run() == 1
    assert _run('run', 'erp', '-i', archive, '-o', tmp_path / 'x', '--cof-intv', -1) == 1
    assert not (tmp_path / 'x').exists()
    assert _run('run', 'erp', '-i', tmp_path / 'missing', '-o', tmp_path / 'x') == 2
    # found only once the data are read: no partial outputs may remain
    code = _run('run', 'erp-quant', '-i', archive, '-o', tmp_path / 'y',
                '--ref-per', -4.0, -3.0)
    assert code == 1 and not (tmp_path / 'y').exists()
    code = _run('run', 'emg-onset', '-i', archive, '-o', tmp_path / 'z', '--th-coeff', 1e6)
    assert code == 3 and not (tmp_path / 'z').exists()
    assert not list(tmp_path.glob('.*'))          # staging areas cleaned up
    err = capsys.readouterr().err
    assert 'ReferenceOutsideSignal' in err and 'NoOnsetDetected' in err


def _bdf_set(tmp_path, n=3):
    rng = np.random.default_rng(0)
    paths = []
    for i in range(n):
        p = tmp_path / f'trial{i}.bdf'
        write_trial_bdf(p, rng.normal(scale=20, size=(2, 256 * 4)), 256.0, ['C3', 'EMG'])
        paths.append(p)
    return paths


def test_convert_round_trip(tmp_path):
    paths = _bdf_set(tmp_path)
    out = tmp_path / 'arch'
    assert _run('convert', *paths, '-o', out, '--emg-channel', 1, '--no-drift') == 0
    ts = load_archive(out)
    assert ts.n_trials == 3 and ts.channel_labels == ('C3', 'EMG')
    assert load_archive(out) == ts


def test_convert_bad_magic_names_file(tmp_path, capsys):
    paths = _bdf_set(tmp_path)
    raw = bytearray(paths[1].read_bytes())
    raw[0] = 0
    paths[1].write_bytes(bytes(raw))
    assert _run('convert', *paths, '-o', tmp_path / 'arch') == 2
    err = capsys.readouterr().err
    assert 'BadMagic' in err and 'trial1.bdf' in err
    assert not (tmp_path / 'arch').exists()


def test_convert_without_files():
    assert _run('convert', '-o', 'nowhere') == 1
