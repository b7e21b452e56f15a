"""Batch command-line front end.

``motorsig convert`` turns BDF trial files into a trial-set archive,
``motorsig run <analysis>`` runs one analysis on an archive and writes CSV
(and optionally SVG) results, and ``motorsig replay`` re-runs an analysis
from the ``run_manifest.json`` it left behind.

Parameter precedence is command-line flag, then ``--config`` file
(``key = value`` lines), then built-in defaults. Exit status is 0 on
success, 1 for usage and validation errors, 2 for I/O and file-format
errors and 3 when a computation fails.
"""
import argparse
import csv
import json
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import defaults as D
from .errors import ComputationError, FormatError, MotorSigError, ValidationError

MANIFEST_NAME = 'run_manifest.json'
FORMAT_VERSION = 1

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_COMPUTATION = 0, 1, 2, 3


class UsageError(ValidationError):
    """Malformed command line or config file."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for I/O here
    def error(self, message):
        raise UsageError(f'{self.prog}: {message}')


# name -> (kind, default, help). Kinds: str, int, float, bool, path, floats2,
# strs2, ints2, band, strs. A default of None means "unset".
PARAMS = {
    'input': ('path', None, 'trial-set archive directory'),
    'output': ('path', None, 'output directory'),
    'plot': ('bool', False, 'also write SVG figures'),
    'seed': ('int', D.SEED, 'seed for every random draw'),
    'channel': ('str', None, 'channel label or index'),
    'band': ('band', None, "band name (e.g. 'beta') or 'lo,hi' in Hz"),
    'duration': ('float', D.DURATION_S, 'seconds kept after the trigger'),
    'span': ('floats2', D.CONN_DURATION_S, 'window span around the trigger, seconds'),
    'ref_per': ('floats2', D.REF_PER_S, 'reference period relative to the trigger, seconds'),
    'cof_intv': ('float', D.COF_INTV, 'confidence-line multiplier'),
    'method': ('str', D.TF_METHOD, 'STFT, CWT or NBCH'),
    'pertnum': ('int', D.PERTNUM, 'phase-estimation perturbation count'),
    'pair': ('strs2', None, 'channel pair; default is the reference against all'),
    'reference': ('str', D.REFERENCE_LABEL, 'reference channel for all-vs-reference PLV'),
    'pooling': ('str', 'trial-mean', "cross-trial PLV aggregation: 'trial-mean' or 'pooled'"),
    'n_segments': ('int', D.MSC_SEGMENTS, 'coherence segments per window'),
    'trial_average': ('str', 'spectra', "coherence trial averaging: 'spectra' or 'msc'"),
    'onset_channel': ('str', None, 'detect onsets on this channel instead of stored ones'),
    'W': ('int', None, 'onset STD window in samples (default 0.05 s)'),
    'th_coeff': ('float', D.TH_COEFF, 'onset threshold multiplier'),
    'remove_ecg': ('bool', False, 'subtract the ECG estimate before onset detection'),
    'n_jobs': ('int', 1, 'worker threads'),
    # synth
    'spec': ('path', None, 'JSON file with a complete generator specification'),
    'n_trials': ('int', 20, 'number of trials'),
    'n_channels': ('int', 4, 'number of EEG channels'),
    'fs': ('float', 512.0, 'sampling rate, Hz'),
    'trial_length': ('float', 6.0, 'trial length, seconds'),
    'onset': ('float', 3.0, 'movement onset, seconds from trial start'),
    'onset_jitter': ('float', 0.0, 'uniform onset jitter, +/- seconds'),
    'rhythm_hz': ('float', 10.0, 'background rhythm frequency, Hz'),
    'rhythm_amplitude': ('float', 1.0, 'background rhythm amplitude, µV'),
    'noise_power': ('float', 1.0, 'background noise power, µV²'),
    'noise_color': ('str', 'pink', "'pink' or 'white'"),
    'erd_band': ('band', None, 'band of the ERD; enables the ERD'),
    'erd_drop': ('float', 0.5, 'power ratio inside the ERD interval'),
    'erd_start': ('float', 0.0, 'ERD start relative to onset, seconds'),
    'erd_end': ('float', 0.5, 'ERD end relative to onset, seconds'),
    'coupling_pair': ('ints2', None, 'phase-coupled channel pair; enables coupling'),
    'coupling_band': ('band', D.CONN_BAND, 'band of the coupled oscillation'),
    'coupling_pre': ('float', 0.1, 'pre-onset PLV target'),
    'coupling_post': ('float', 0.9, 'post-onset PLV target'),
    'emg': ('bool', False, "append an 'EMG' channel"),
    'ecg': ('bool', False, 'add an ECG pulse train to the EMG channel'),
    'labels': ('strs', None, 'EEG channel labels'),
}

_ONSETS = ['onset_channel', 'W', 'th_coeff', 'remove_ecg']
_BASE = ['input', 'output', 'plot']
_SYNTH = ['output', 'seed', 'spec', 'n_trials', 'n_channels', 'fs', 'trial_length', 'onset',
          'onset_jitter', 'rhythm_hz', 'rhythm_amplitude', 'noise_power', 'noise_color',
          'erd_band', 'erd_drop', 'erd_start', 'erd_end', 'coupling_pair', 'coupling_band',
          'coupling_pre', 'coupling_post', 'emg', 'ecg', 'labels']

COMMANDS = {
    'erp': _BASE + ['channel', 'band', 'duration', 'ref_per', 'cof_intv'] + _ONSETS,
    'erp-quant': _BASE + ['channel', 'band', 'duration', 'ref_per', 'cof_intv'] + _ONSETS,
    'erp-tf': _BASE + ['channel', 'duration', 'method'] + _ONSETS,
    'tcplv': _BASE + ['seed', 'band', 'span', 'pair', 'reference', 'pertnum', 'pooling',
                      'n_jobs'] + _ONSETS,
    'pwplv': _BASE + ['seed', 'band', 'span', 'pertnum', 'pooling', 'n_jobs'] + _ONSETS,
    'pwcoh': _BASE + ['band', 'span', 'n_segments', 'trial_average'] + _ONSETS,
    'emg-onset': _BASE + ['channel', 'W', 'th_coeff', 'remove_ecg'],
    'emg-quant': _BASE + ['channel', 'duration'] + _ONSETS,
    'synth': _SYNTH,
}

# per-command defaults that differ from PARAMS
_COMMAND_DEFAULTS = {
    'erp': {'band': 'alpha'},
    'erp-quant': {'band': 'alpha'},
    'tcplv': {'band': D.CONN_BAND},
    'pwplv': {'band': D.CONN_BAND},
    'pwcoh': {'band': D.CONN_BAND},
    'emg-onset': {'channel': 'EMG'},
    'emg-quant': {'channel': 'EMG'},
}


# ---------------------------------------------------------------- parsing

def _split(value):
    if isinstance(value, (list, tuple)):
        value = ' '.join(str(v) for v in value)
    return [v for v in str(value).replace(',', ' ').split() if v]


def _convert(name, value):
    kind = PARAMS[name][0]
    if value is None:
        return None
    try:
        if kind == 'bool':
            if isinstance(value, bool):
                return value
            v = str(value).strip().lower()
            if v in ('1', 'true', 'yes', 'on'):
                return True
            if v in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(value)
        if kind == 'int':
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        if kind == 'float':
            return float(value)
        if kind in ('str', 'path'):
            return str(value).strip()
        parts = _split(value)
        if kind == 'strs':
            return parts
        if kind == 'band':
            if len(parts) == 1 and parts[0].lower() in D.NAMED_BANDS:
                return parts[0].lower()
            if len(parts) != 2:
                raise ValueError(value)
            return [float(parts[0]), float(parts[1])]
        if len(parts) != 2:
            raise ValueError(value)
        if kind == 'floats2':
            return [float(p) for p in parts]
        if kind == 'ints2':
            return [int(p) for p in parts]
        return parts                                    # strs2
    except (TypeError, ValueError):
        raise UsageError(f'bad value {value!r} for {name}') from None


def _key(raw):
    k = raw.strip().replace('-', '_')
    return k if k == 'W' else k.lower()


def read_config(path):
    """Parse a ``key = value`` config file into a dict of raw strings."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f'{path}: cannot read config: {exc.strerror or exc}') from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise UsageError(f'{path}:{n}: expected key = value')
        k, v = line.split('=', 1)
        out[_key(k)] = v.strip()
    return out


def resolve(command, flags=None, config=None):
    """Merge defaults, config values and flags for ``command``."""
    if command not in COMMANDS:
        raise UsageError(f'unknown analysis {command!r}')
    allowed = COMMANDS[command]
    params = {k: PARAMS[k][1] for k in allowed}
    params.update({k: v for k, v in _COMMAND_DEFAULTS.get(command, {}).items() if k in params})
    for source in (config or {}, flags or {}):
        for k, v in source.items():
            if v is None:
                continue
            if k not in params:
                raise UsageError(f'{k!r} is not a parameter of {command!r}')
            params[k] = _convert(k, v)
    for k in params:
        if isinstance(params[k], tuple):
            params[k] = list(params[k])
    return params


def _add_param(p, name):
    kind, default, helptext = PARAMS[name]
    flag = '--' + name.replace('_', '-')
    dest = name
    if kind == 'bool':
        p.add_argument(flag, dest=dest, action='store_const', const=True, default=None,
                       help=helptext)
    elif kind in ('floats2', 'strs2', 'ints2', 'band', 'strs'):
        p.add_argument(flag, dest=dest, nargs='+', default=None, help=helptext)
    else:
        extra = ['-o'] if name == 'output' else (['-i'] if name == 'input' else [])
        p.add_argument(*extra, flag, dest=dest, default=None, help=helptext)


def build_parser():
    parser = _Parser(prog='motorsig', description='Motor-cortex EEG/EMG analysis pipeline.')
    sub = parser.add_subparsers(dest='cmd', parser_class=_Parser)

    conv = sub.add_parser('convert', help='BDF trial files to a trial-set archive')
    conv.add_argument('files', nargs='*', help='one BDF file per trial, in trial order')
    conv.add_argument('-o', '--output', required=True, help='archive directory to write')
    conv.add_argument('--eeg-channels', nargs='+', type=int, default=None,
                      help='EEG channel indices (default: all except the EMG channel)')
    conv.add_argument('--emg-channel', type=int, default=None, help='EMG channel index')
    conv.add_argument('--no-drift', action='store_true', help='skip drift rejection')
    conv.add_argument('--detect-onsets', action='store_true',
                      help='detect movement onsets on the EMG channel')
    conv.add_argument('--W', type=int, default=None, help=PARAMS['W'][2])
    conv.add_argument('--th-coeff', type=float, default=D.TH_COEFF, help=PARAMS['th_coeff'][2])
    conv.add_argument('--n-jobs', type=int, default=1, help=PARAMS['n_jobs'][2])

    run = sub.add_parser('run', help='run one analysis')
    rsub = run.add_subparsers(dest='analysis', parser_class=_Parser)
    for name, params in COMMANDS.items():
        p = rsub.add_parser(name)
        p.add_argument('--config', default=None, help='key = value parameter file')
        for k in params:
            _add_param(p, k)

    rep = sub.add_parser('replay', help='re-run an analysis from its run manifest')
    rep.add_argument('manifest')
    rep.add_argument('-o', '--output', default=None, help='write to this directory instead')
    return parser


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f'{float(v):.10g}'
    return str(v)


class _Outputs:
    """Collects result files in a staging directory and publishes them at the end.

    Nothing appears in the output directory unless the whole run succeeds.
    """

    def __init__(self, outdir):
        self.outdir = Path(outdir)
        self.names = []
        self._stage = None

    @property
    def stage(self):
        if self._stage is None:
            parent = self.outdir.parent
            parent.mkdir(parents=True, exist_ok=True)
            self._stage = Path(tempfile.mkdtemp(prefix='.motorsig-', dir=parent))
        return self._stage

    def path(self, name):
        self.names.append(name)
        return self.stage / name

    def csv(self, name, header, rows):
        with open(self.path(name), 'w', newline='') as fh:
            w = csv.writer(fh, lineterminator='\n')
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def json(self, name, obj):
        with open(self.path(name), 'w') as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write('\n')

    def commit(self):
        self.outdir.mkdir(parents=True, exist_ok=True)
        if self._stage is not None:
            for entry in sorted(self._stage.iterdir()):
                target = self.outdir / entry.name
                if target.is_dir():
                    shutil.rmtree(target)
                os.replace(entry, target)
            self.discard()

    def discard(self):
        if self._stage is not None:
            shutil.rmtree(self._stage, ignore_errors=True)
            self._stage = None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


# ---------------------------------------------------------------- analyses

def _band(value):
    from .precondition import as_band
    return as_band(value if isinstance(value, str) else tuple(value))


def _load(params):
    from .trials import load_archive
    if not params.get('input'):
        raise UsageError('--input is required')
    path = Path(params['input'])
    if not path.is_dir():
        raise FormatError(f'{path}: archive directory not found')
    return load_archive(path)


def _detect(ts, ch, params):
    from .emg import ecg_extract, emg_onset
    out = []
    for x in ts.channel(ch):
        if params.get('remove_ecg'):
            x = x - ecg_extract(x, ts.fs)
        out.append(emg_onset(x, ts.fs, params.get('W'), params['th_coeff']))
    return out


def _with_onsets(ts, params):
    """Trial set carrying onsets, detected on ``onset_channel`` when requested."""
    ch = params.get('onset_channel')
    if ch is None:
        if ts.onset_samples is None:
            raise ValidationError('the archive carries no onsets; pass --onset-channel')
        return ts
    return ts.with_onsets([r.onset_sample for r in _detect(ts, ch, params)])


def _default_channel(ts, ch):
    if ch is not None:
        return ts.channel_index(ch)
    return ts.channel_index(D.REFERENCE_LABEL) if D.REFERENCE_LABEL in ts.channel_labels else 0


def _erp_outputs(out, erp, report):
    trig = erp.trigger_time_sec
    out.csv('erp.csv', ['time_s', 'time_from_trigger_s', 'power_uV2', 'power_percent'],
            zip(erp.time_vec, erp.time_vec - trig, erp.values, report.quant_erp))


def _run_erp(params, out, quantify):
    from .erp import erp_quantification, trigger_avg_erp
    band = _band(params['band'])
    ts = _with_onsets(_load(params), params)
    ch = _default_channel(ts, params['channel'])
    erp = trigger_avg_erp(ts.channel(ch), ts.onset_times, ts.fs, band, params['duration'])
    report = erp_quantification(erp, tuple(params['ref_per']), params['cof_intv'])
    _erp_outputs(out, erp, report)
    if quantify:
        trig = report.trigger_time_sec
        out.csv('segments.csv',
                ['kind', 'start_s', 'end_s', 'start_from_trigger_s', 'end_from_trigger_s',
                 'length_s', 'area_percent'],
                [(s.kind, s.start_s, s.end_s, s.start_s - trig, s.end_s - trig, s.length_s,
                  s.area) for s in report.segments])
        out.csv('reference.csv',
                ['reference_value_uV2', 'reference_std_uV2', 'cof_intv_unitless',
                 'lower_line_percent',
                 'upper_line_percent'],
                [(report.reference_value, report.reference_std, report.cof_intv,
                  report.lower_line, report.upper_line)])
    if params['plot']:
        from .plotting import plot_erp
        plot_erp(report, out.path('erp.svg'), f'{ts.channel_labels[ch]} {band}')
    return {'channel': ts.channel_labels[ch], 'n_trials': ts.n_trials}


def _run_erp_tf(params, out):
    from .erp import trigger_avg_tf_erp
    ts = _with_onsets(_load(params), params)
    ch = _default_channel(ts, params['channel'])
    tf = trigger_avg_tf_erp(ts.channel(ch), ts.onset_times, ts.fs, params['duration'],
                            params['method'])
    trig = tf.trigger_time_sec
    rows = ((f, t, t - trig, p) for i, f in enumerate(tf.freq_vec)
            for t, p in zip(tf.time_vec, tf.power[i]))
    out.csv('tf.csv', ['freq_hz', 'time_s', 'time_from_trigger_s', 'power_uV2'], rows)
    if params['plot']:
        from .plotting import plot_tf
        plot_tf(tf, out.path('tf.svg'), fmax=D.TF_FREQ_RANGE[1])
    return {'channel': ts.channel_labels[ch], 'method': tf.method}


_CONN_HEADER = ['window_start_s', 'window_end_s', 'ch_a', 'ch_b']


def _run_connectivity(params, out, which):
    from . import connectivity as C
    band = _band(params['band'])
    ts = _with_onsets(_load(params), params)
    span = tuple(params['span'])
    if which == 'tcplv':
        pair = 'all' if params['pair'] is None else tuple(params['pair'])
        res = C.tcplv(ts, None, band, span, pair, params['reference'], params['pertnum'],
                      params['pooling'], params['seed'], params['n_jobs'])
        out.csv('tcplv.csv', _CONN_HEADER + ['plv_unitless'], res.rows())
        return {'pairs': [[ts.channel_labels[a], ts.channel_labels[b]] for a, b in res.pairs]}
    if which == 'pwplv':
        res = C.pwplv(ts, None, band, span, params['pertnum'], params['pooling'],
                      params['seed'], params['n_jobs'])
    else:
        res = C.pwcoherence(ts, None, band, span, params['n_segments'], params['trial_average'])
    out.csv(f'{which}.csv', _CONN_HEADER + [f'{res.measure.lower()}_unitless'], res.rows())
    if params['plot']:
        from .plotting import plot_connectivity
        for w in range(len(res.windows)):
            plot_connectivity(res, w, out.path(f'{which}_window{w + 1}.svg'))
    return {'windows': res.windows}


def _run_emg_onset(params, out):
    ts = _load(params)
    ch = ts.channel_index(params['channel'])
    rows = [(i, r.onset_sample, r.onset_time, r.detection_sample, r.threshold)
            for i, r in enumerate(_detect(ts, ch, params))]
    out.csv('onsets.csv', ['trial_index', 'onset_sample_index', 'onset_time_s',
                           'detection_sample_index', 'threshold_uV'], rows)
    return {'channel': ts.channel_labels[ch]}


def _run_emg_quant(params, out):
    from .emg import emg_quantification
    ts = _load(params)
    ch = ts.channel_index(params['channel'])
    if params.get('onset_channel') is None and ts.onset_samples is None:
        # no stored onsets: detect them on the EMG channel itself
        ts = ts.with_onsets([r.onset_sample for r in _detect(ts, ch, params)])
    else:
        ts = _with_onsets(ts, params)
    q, _, _ = emg_quantification(ts.channel(ch), ts.onset_samples, ts.fs, params['duration'])
    trig = q.trigger_time_sec
    out.csv('emg.csv', ['time_s', 'time_from_trigger_s', 'emg_uV'],
            zip(q.time_vec, q.time_vec - trig, q.curve))
    out.csv('emg_summary.csv',
            ['peak_uV', 'peak_time_from_trigger_s', 'activation_slope_uV_per_s',
             'immediate_post_onset_slope_uV_per_s'],
            [(q.peak_magnitude, q.peak_time_sec - trig, q.activation_slope,
              q.immediate_post_onset_slope)])
    if params['plot']:
        from .plotting import plot_emg
        plot_emg(q, out.path('emg.svg'), ts.channel_labels[ch])
    return {'channel': ts.channel_labels[ch]}


def synth_spec_from_params(params):
    from .synth import CouplingSpec, EcgSpec, EmgSpec, ErdSpec, SynthSpec
    if params.get('spec'):
        try:
            d = json.loads(Path(params['spec']).read_text())
        except OSError as exc:
            raise FormatError(f"{params['spec']}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"{params['spec']}: {exc}") from None
        d['seed'] = params['seed']
        return SynthSpec.from_dict(d)
    erd = coupling = emg = None
    if params['erd_band'] is not None:
        b = _band(params['erd_band'])
        erd = ErdSpec((b.lo, b.hi), params['erd_drop'], params['erd_start'], params['erd_end'])
    if params['coupling_pair'] is not None:
        b = _band(params['coupling_band'])
        coupling = CouplingSpec(tuple(params['coupling_pair']), (b.lo, b.hi),
                                params['coupling_pre'], params['coupling_post'])
    if params['emg']:
        emg = EmgSpec(ecg=EcgSpec() if params['ecg'] else None)
    labels = tuple(params['labels']) if params['labels'] else None
    return SynthSpec(params['n_trials'], params['n_channels'], params['fs'],
                     params['trial_length'], params['onset'], params['onset_jitter'],
                     params['rhythm_hz'], params['rhythm_amplitude'], erd, coupling, emg,
                     params['noise_power'], params['noise_color'], params['seed'], labels)


def _run_synth(params, out):
    from .synth import gen_trial_set
    from .trials import save_archive
    spec = synth_spec_from_params(params).validate()
    ts, truth = gen_trial_set(spec)
    save_archive(ts, out.stage)
    out.names.extend(['manifest.json'] + [f'trial_{i:03d}.csv' for i in range(ts.n_trials)])
    out.json('ground_truth.json', {
        'onset_samples': truth.onset_samples, 'onset_times_s': truth.onset_times,
        'erd': truth.erd, 'coupling': truth.coupling, 'emg_channel': truth.emg_channel,
        'spec': spec.to_dict()})
    return {'n_trials': ts.n_trials, 'channel_labels': ts.channel_labels}


def _validate(command, params):
    """Cheap parameter checks done before anything is read or written."""
    if not params.get('output'):
        raise UsageError('--output is required')
    if command != 'synth' and not params.get('input'):
        raise UsageError('--input is required')
    if 'band' in params:
        _band(params['band'])
    for k in ('duration', 'cof_intv', 'th_coeff'):
        if k in params and not params[k] > 0:
            raise ValidationError(f'{k} must be positive, got {params[k]}')
    for k in ('pertnum', 'n_jobs', 'n_segments'):
        if k in params and params[k] < 1:
            raise ValidationError(f'{k} must be >= 1, got {params[k]}')
    if params.get('W') is not None and params['W'] < 2:
        raise ValidationError(f"W must be >= 2, got {params['W']}")
    if 'ref_per' in params:
        a, b = params['ref_per']
        if not a < b <= 0:
            raise ValidationError(f'ref_per must satisfy a < b <= 0, got {params["ref_per"]}')
    if params.get('method') is not None and params['method'].upper() not in ('STFT', 'CWT',
                                                                            'NBCH'):
        raise ValidationError(f"method must be STFT, CWT or NBCH, got {params['method']!r}")
    if command == 'synth':
        synth_spec_from_params(params).validate()


def run_analysis(command, params):
    """Run ``command`` with fully resolved ``params``; returns the output directory."""
    _validate(command, params)
    out = _Outputs(params['output'])
    try:
        if command in ('erp', 'erp-quant'):
            info = _run_erp(params, out, command == 'erp-quant')
        elif command == 'erp-tf':
            info = _run_erp_tf(params, out)
        elif command in ('tcplv', 'pwplv', 'pwcoh'):
            info = _run_connectivity(params, out, command)
        elif command == 'emg-onset':
            info = _run_emg_onset(params, out)
        elif command == 'emg-quant':
            info = _run_emg_quant(params, out)
        else:
            info = _run_synth(params, out)
        recorded = dict(params)
        if recorded.get('input'):
            recorded['input'] = str(Path(recorded['input']).resolve())
        recorded['output'] = str(Path(recorded['output']).resolve())
        out.json(MANIFEST_NAME, {'format_version': FORMAT_VERSION, 'command': command,
                                 'params': recorded, 'seed': params.get('seed'),
                                 'outputs': sorted(set(out.names + [MANIFEST_NAME])),
                                 'info': info})
        out.commit()
    except BaseException:
        out.discard()
        raise
    return Path(params['output'])


def replay(manifest_path, output=None):
    """Re-run the analysis recorded in a run manifest."""
    try:
        meta = json.loads(Path(manifest_path).read_text())
    except OSError as exc:
        raise FormatError(f'{manifest_path}: {exc.strerror or exc}') from None
    except json.JSONDecodeError as exc:
        raise FormatError(f'{manifest_path}: {exc}') from None
    if not isinstance(meta, dict) or 'command' not in meta or 'params' not in meta:
        raise FormatError(f'{manifest_path}: not a run manifest')
    params = resolve(meta['command'], config=meta['params'])
    if output is not None:
        params['output'] = str(output)
    return run_analysis(meta['command'], params)


def _convert_cmd(args):
    from .bdf_io import load_trial_set, read_bdf
    from .trials import TrialSet, save_archive
    if not args.files:
        raise UsageError('convert: at least one BDF file is required')
    eeg_channels = args.eeg_channels
    if eeg_channels is None:
        header, _ = read_bdf(args.files[0])
        eeg_channels = [c for c in range(header.num_channels) if c != args.emg_channel]
    onset_kw = {'W': args.W, 'th_coeff': args.th_coeff}
    eeg, emg, _ = load_trial_set(args.files, eeg_channels, args.emg_channel,
                                 not args.no_drift, args.detect_onsets, args.n_jobs, onset_kw)
    ts = eeg
    if emg is not None:
        ts = TrialSet([np.vstack((a, b)) for a, b in zip(eeg.trials, emg.trials)], eeg.fs,
                      eeg.channel_labels + emg.channel_labels, eeg.onset_samples, None,
                      dict(eeg.provenance))
    out = _Outputs(args.output)
    try:
        save_archive(ts, out.stage)
        out.commit()
    except BaseException:
        out.discard()
        raise
    return Path(args.output)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            raise UsageError('a command is required (convert, run or replay)')
        if args.cmd == 'convert':
            _convert_cmd(args)
        elif args.cmd == 'replay':
            replay(args.manifest, args.output)
        else:
            if args.analysis is None:
                raise UsageError(f"run: choose an analysis from {', '.join(COMMANDS)}")
            config = read_config(args.config) if args.config else {}
            flags = {k: getattr(args, k) for k in COMMANDS[args.analysis]}
            run_analysis(args.analysis, resolve(args.analysis, flags, config))
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except (FormatError, OSError) as exc:
        return _fail(exc, EXIT_IO)
    except (ComputationError, MotorSigError, FloatingPointError) as exc:
        return _fail(exc, EXIT_COMPUTATION)
    return EXIT_OK


def _fail(exc, code):
    print(f'motorsig: error: {type(exc).__name__}: {exc}', file=sys.stderr)
    return code


if __name__ == '__main__':
    sys.exit(main())
