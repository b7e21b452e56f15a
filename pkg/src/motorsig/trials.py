"""Multi-trial recordings and their on-disk archive form."""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyTrialSet, FormatError, ValidationError

ARCHIVE_MANIFEST = 'manifest.json'


@dataclass(frozen=True)
class TrialSet:
    """Trials of a multi-channel recording, one ``(n_channels, n_samples)`` array each.

    Values are in µV. ``onset_samples``/``onset_times`` hold one movement onset
    per trial when known.
    """

    trials: tuple
    fs: float
    channel_labels: tuple
    onset_samples: tuple | None = None
    onset_times: tuple | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        trials = tuple(np.atleast_2d(np.asarray(t, dtype=float)) for t in self.trials)
        if not trials:
            raise EmptyTrialSet('a trial set needs at least one trial')
        n_ch = trials[0].shape[0]
        if any(t.shape[0] != n_ch for t in trials):
            raise ValidationError('all trials must have the same channel count')
        if not self.fs > 0:
            raise ValidationError(f'fs must be positive, got {self.fs}')
        labels = tuple(str(s) for s in self.channel_labels)
        if len(labels) != n_ch:
            raise ValidationError(f'{len(labels)} labels for {n_ch} channels')
        for t in trials:
            t.setflags(write=False)
        object.__setattr__(self, 'trials', trials)
        object.__setattr__(self, 'fs', float(self.fs))
        object.__setattr__(self, 'channel_labels', labels)

        samples, times = self.onset_samples, self.onset_times
        if samples is None and times is not None:
            samples = tuple(int(round(t * self.fs)) for t in times)
        if samples is not None:
            samples = tuple(int(s) for s in samples)
            if len(samples) != len(trials):
                raise ValidationError(f'{len(samples)} onsets for {len(trials)} trials')
            for i, (s, t) in enumerate(zip(samples, trials)):
                if not 0 < s < t.shape[1] - 1:
                    raise ValidationError(f'onset {s} of trial {i} is not strictly inside the trial')
            times = tuple(s / self.fs for s in samples)
        object.__setattr__(self, 'onset_samples', samples)
        object.__setattr__(self, 'onset_times', times)

    def __eq__(self, other):
        if not isinstance(other, TrialSet):
            return NotImplemented
        return (self.fs == other.fs and self.channel_labels == other.channel_labels
                and self.onset_samples == other.onset_samples
                and len(self.trials) == len(other.trials)
                and all(np.array_equal(a, b) for a, b in zip(self.trials, other.trials)))

    __hash__ = None

    @property
    def n_trials(self):
        return len(self.trials)

    @property
    def n_channels(self):
        return self.trials[0].shape[0]

    def channel_index(self, ch):
        """Resolve a channel given by index or label."""
        if isinstance(ch, str) and not ch.lstrip('-').isdigit():
            try:
                return self.channel_labels.index(ch)
            except ValueError:
                raise ValidationError(f'no channel labelled {ch!r}') from None
        idx = int(ch)
        if not 0 <= idx < self.n_channels:
            raise ValidationError(f'channel index {idx} out of range 0..{self.n_channels - 1}')
        return idx

    def channel(self, ch):
        """List of 1-D arrays, one per trial, for a single channel."""
        i = self.channel_index(ch)
        return [t[i] for t in self.trials]

    def select(self, channels):
        idx = [self.channel_index(c) for c in channels]
        return TrialSet([t[idx] for t in self.trials], self.fs,
                        [self.channel_labels[i] for i in idx],
                        self.onset_samples, None, dict(self.provenance))

    def with_onsets(self, onset_samples):
        return TrialSet(self.trials, self.fs, self.channel_labels,
                        onset_samples, None, dict(self.provenance))


def save_archive(ts, path, provenance=None):
    """Write ``ts`` as a directory: ``manifest.json`` plus one CSV per trial."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    names = []
    for i, trial in enumerate(ts.trials):
        name = f'trial_{i:03d}.csv'
        names.append(name)
        with open(path / name, 'w', newline='') as fh:
            w = csv.writer(fh, lineterminator='\n')
            w.writerow([f'{lab}_uV' for lab in ts.channel_labels])
            for row in trial.T:
                w.writerow([f'{v:.9g}' for v in row])
    meta = {
        'format': 'motorsig-trialset/1',
        'fs': ts.fs,
        'channel_labels': list(ts.channel_labels),
        'trials': names,
        'onset_samples': None if ts.onset_samples is None else list(ts.onset_samples),
        'onset_times': None if ts.onset_times is None else list(ts.onset_times),
        'provenance': {**ts.provenance, **(provenance or {})},
    }
    with open(path / ARCHIVE_MANIFEST, 'w') as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return path


def load_archive(path):
    """Read a directory written by :func:`save_archive`."""
    path = Path(path)
    try:
        with open(path / ARCHIVE_MANIFEST) as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f'{path}: no {ARCHIVE_MANIFEST} found') from None
    except json.JSONDecodeError as exc:
        raise FormatError(f'{path / ARCHIVE_MANIFEST}: {exc}') from None
    trials = []
    for name in meta['trials']:
        data = np.loadtxt(path / name, delimiter=',', skiprows=1, ndmin=2)
        trials.append(data.T)
    return TrialSet(trials, meta['fs'], meta['channel_labels'],
                    meta.get('onset_samples'), None, meta.get('provenance') or {})
