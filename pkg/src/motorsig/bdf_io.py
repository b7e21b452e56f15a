"""BioSemi BDF reader and writer.

Layout: a 256-byte main header, 256 header bytes per channel, then
``num_records`` data records.  Each record holds, channel after channel,
``samples_per_record`` samples stored as 3-byte little-endian two's
complement integers.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (BadMagic, ChannelIndexOutOfRange, InvalidHeader, InvalidScaling,
                     LengthMismatch, MotorSigError, TruncatedPayload, ValidationError,
                     ValueOutOfDigitalRange)
from .precondition import default_drift_window, drift_reject
from .trials import TrialSet

logger = logging.getLogger(__name__)

MAGIC = b'\xffBIOSEMI'
DIGITAL_MIN_24 = -(1 << 23)
DIGITAL_MAX_24 = (1 << 23) - 1

# (name, width) of the per-channel header fields, stored field-major
_CHANNEL_FIELDS = (
    ('label', 16), ('transducer', 80), ('physical_dim', 8),
    ('physical_min', 8), ('physical_max', 8), ('digital_min', 8), ('digital_max', 8),
    ('prefilter', 80), ('samples_per_record', 8), ('reserved', 32),
)


@dataclass
class BdfChannel:
    label: str
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int
    samples_per_record: int
    physical_dim: str = 'uV'
    transducer: str = ''
    prefilter: str = ''

    @property
    def gain(self):
        return (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)

    @property
    def offset(self):
        return self.physical_min - self.gain * self.digital_min


@dataclass
class BdfHeader:
    channels: list
    num_records: int
    record_duration: float
    subject_info: str = ''
    recording_info: str = ''
    start_date: str = '01.01.00'
    start_time: str = '00.00.00'
    id_code: bytes = MAGIC
    reserved: str = '24BIT'
    extra: dict = field(default_factory=dict)

    @property
    def num_channels(self):
        return len(self.channels)

    @property
    def header_bytes(self):
        return 256 * (self.num_channels + 1)

    @property
    def fs(self):
        """Sampling rate of the first channel (Hz)."""
        return self.channels[0].samples_per_record / self.record_duration

    def validate(self):
        if self.id_code != MAGIC:
            raise BadMagic(f'identification code {self.id_code!r} is not {MAGIC!r}')
        if self.num_channels < 1:
            raise InvalidHeader('a BDF file needs at least one channel')
        if self.num_records == -1:
            raise InvalidHeader('num_records = -1 (unknown) is not supported')
        if self.num_records < 1:
            raise InvalidHeader(f'invalid num_records {self.num_records}')
        if not self.record_duration > 0:
            raise InvalidHeader(f'invalid record duration {self.record_duration}')
        for ch in self.channels:
            if ch.digital_min >= ch.digital_max:
                raise InvalidScaling(
                    f'channel {ch.label!r}: digital_min {ch.digital_min} >= digital_max {ch.digital_max}')
            if ch.physical_min >= ch.physical_max:
                raise InvalidScaling(
                    f'channel {ch.label!r}: physical_min {ch.physical_min} >= physical_max {ch.physical_max}')
            if ch.samples_per_record < 1:
                raise InvalidHeader(f'channel {ch.label!r}: samples_per_record must be >= 1')
        return self


def _text(raw):
    return raw.decode('ascii', errors='replace').strip()


def _number(raw, kind, what):
    txt = _text(raw)
    try:
        return kind(txt) if kind is float else int(float(txt))
    except ValueError:
        raise InvalidHeader(f'cannot parse {what} from {txt!r}') from None


def parse_header(data):
    """Decode the header of a BDF byte string."""
    data = memoryview(data)
    if len(data) < 256:
        raise TruncatedPayload(f'{len(data)} bytes is shorter than the 256-byte main header')
    if bytes(data[:8]) != MAGIC:
        raise BadMagic(f'identification code {bytes(data[:8])!r} is not {MAGIC!r}')
    main = bytes(data[:256])
    n_ch = _number(main[252:256], int, 'number of channels')
    if n_ch < 1:
        raise InvalidHeader(f'invalid number of channels {n_ch}')
    if len(data) < 256 * (n_ch + 1):
        raise TruncatedPayload(
            f'{len(data)} bytes is shorter than the {256 * (n_ch + 1)}-byte header')
    block = bytes(data[256:256 * (n_ch + 1)])
    cols, pos = {}, 0
    for name, width in _CHANNEL_FIELDS:
        cols[name] = [block[pos + i * width: pos + (i + 1) * width] for i in range(n_ch)]
        pos += width * n_ch
    channels = [
        BdfChannel(
            label=_text(cols['label'][i]),
            physical_min=_number(cols['physical_min'][i], float, 'physical minimum'),
            physical_max=_number(cols['physical_max'][i], float, 'physical maximum'),
            digital_min=_number(cols['digital_min'][i], int, 'digital minimum'),
            digital_max=_number(cols['digital_max'][i], int, 'digital maximum'),
            samples_per_record=_number(cols['samples_per_record'][i], int, 'samples per record'),
            physical_dim=_text(cols['physical_dim'][i]),
            transducer=_text(cols['transducer'][i]),
            prefilter=_text(cols['prefilter'][i]),
        )
        for i in range(n_ch)
    ]
    header = BdfHeader(
        channels=channels,
        num_records=_number(main[236:244], int, 'number of records'),
        record_duration=_number(main[244:252], float, 'record duration'),
        subject_info=_text(main[8:88]),
        recording_info=_text(main[88:168]),
        start_date=_text(main[168:176]),
        start_time=_text(main[176:184]),
        id_code=main[:8],
        reserved=_text(main[192:236]),
    )
    return header.validate()


def decode_int24(raw):
    """Little-endian 3-byte two's complement samples to int32."""
    b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
    v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
    return np.where(v >= 1 << 23, v - (1 << 24), v)


def encode_int24(values):
    v = np.asarray(values, dtype=np.int64) & 0xFFFFFF
    out = np.empty((v.size, 3), dtype=np.uint8)
    out[:, 0] = v & 0xFF
    out[:, 1] = (v >> 8) & 0xFF
    out[:, 2] = (v >> 16) & 0xFF
    return out.tobytes()


def parse_bdf(data, digital=False):
    """Parse a complete BDF byte string.

    Parameters
    ----------
    data : bytes
        File contents.
    digital : bool
        Return raw integer counts instead of physical values.

    Returns
    -------
    header : BdfHeader
    signals : numpy.ndarray or list of numpy.ndarray
        ``(n_channels, n_samples)`` array in physical units (µV). When the
        channels have different sample rates a list of 1-D arrays is returned.
    """
    header = parse_header(data)
    spr = np.array([ch.samples_per_record for ch in header.channels])
    record_bytes = 3 * int(spr.sum())
    need = header.header_bytes + record_bytes * header.num_records
    if len(data) < need:
        raise TruncatedPayload(
            f'header promises {need} bytes ({header.num_records} records), file has {len(data)}')
    payload = memoryview(data)[header.header_bytes:need]
    counts = decode_int24(payload).reshape(header.num_records, -1)
    bounds = np.concatenate(([0], np.cumsum(spr)))
    signals = []
    for i, ch in enumerate(header.channels):
        d = counts[:, bounds[i]:bounds[i + 1]].reshape(-1)
        signals.append(d if digital else ch.gain * d + ch.offset)
    if len(set(spr.tolist())) == 1:
        signals = np.vstack(signals)
    return header, signals


def _fmt(value, width):
    if isinstance(value, float):
        txt = repr(value) if value != int(value) else str(int(value))
        if len(txt) > width:
            txt = f'{value:.{max(1, width - 6)}g}'
    else:
        txt = str(value)
    txt = txt.encode('ascii', errors='replace')
    if len(txt) > width:
        raise InvalidHeader(f'value {value!r} does not fit a {width}-byte header field')
    return txt.ljust(width, b' ')


def to_digital(header, data):
    """Map physical values to integer counts, checking the 24-bit range."""
    out = []
    for ch, row in zip(header.channels, data):
        d = np.rint((np.asarray(row, dtype=float) - ch.offset) / ch.gain)
        if d.size and (d.min() < DIGITAL_MIN_24 or d.max() > DIGITAL_MAX_24):
            raise ValueOutOfDigitalRange(
                f'channel {ch.label!r}: values map outside the 24-bit range')
        out.append(d.astype(np.int64))
    return out


def write_bdf(header, data, digital=False):
    """Serialize ``data`` (channels x samples) under ``header`` to BDF bytes.

    With ``digital=True`` the data are integer counts written verbatim.
    """
    header.validate()
    if len(data) != header.num_channels:
        raise LengthMismatch(f'{len(data)} data rows for {header.num_channels} channels')
    for ch, row in zip(header.channels, data):
        if len(row) != ch.samples_per_record * header.num_records:
            raise LengthMismatch(
                f'channel {ch.label!r}: expected {ch.samples_per_record * header.num_records} '
                f'samples, got {len(row)}')
    if digital:
        counts = [np.asarray(r, dtype=np.int64) for r in data]
        for ch, c in zip(header.channels, counts):
            if c.size and (c.min() < DIGITAL_MIN_24 or c.max() > DIGITAL_MAX_24):
                raise ValueOutOfDigitalRange(f'channel {ch.label!r}: counts exceed 24 bits')
    else:
        counts = to_digital(header, data)

    n = header.num_channels
    main = b''.join([
        header.id_code,
        _fmt(header.subject_info, 80), _fmt(header.recording_info, 80),
        _fmt(header.start_date, 8), _fmt(header.start_time, 8),
        _fmt(header.header_bytes, 8), _fmt(header.reserved, 44),
        _fmt(header.num_records, 8), _fmt(float(header.record_duration), 8),
        _fmt(n, 4),
    ])
    chan = []
    for name, width in _CHANNEL_FIELDS:
        for ch in header.channels:
            value = '' if name == 'reserved' else getattr(ch, name)
            if name in ('physical_min', 'physical_max'):
                value = float(value)
            chan.append(_fmt(value, width))
    records = np.concatenate(
        [c.reshape(header.num_records, ch.samples_per_record)
         for ch, c in zip(header.channels, counts)], axis=1)
    return main + b''.join(chan) + encode_int24(records.reshape(-1))


def make_header(labels, fs, n_samples, physical_range=(-262144.0, 262143.0),
                digital_range=(DIGITAL_MIN_24, DIGITAL_MAX_24), record_duration=1.0):
    """Header for equally sampled channels; trailing samples are zero padded by the caller."""
    spr = int(round(fs * record_duration))
    n_rec = max(1, -(-n_samples // spr))
    channels = [BdfChannel(str(lab), float(physical_range[0]), float(physical_range[1]),
                           int(digital_range[0]), int(digital_range[1]), spr)
                for lab in labels]
    return BdfHeader(channels=channels, num_records=n_rec, record_duration=float(record_duration))


def write_trial_bdf(path, trial, fs, labels, **kw):
    """Write one trial to ``path``; the tail of the last record is zero padded."""
    trial = np.atleast_2d(np.asarray(trial, dtype=float))
    header = make_header(labels, fs, trial.shape[1], **kw)
    total = header.num_records * header.channels[0].samples_per_record
    padded = np.zeros((trial.shape[0], total))
    padded[:, :trial.shape[1]] = trial
    Path(path).write_bytes(write_bdf(header, padded))
    return header


def read_bdf(path):
    """Parse a BDF file, attaching the file name to any format error."""
    path = Path(path)
    try:
        return parse_bdf(path.read_bytes())
    except MotorSigError as exc:
        raise type(exc)(f'{path}: {exc}') from exc


def load_trial_set(file_names, eeg_channels, emg_channel=None, drift_flag=True,
                   onset_flag=False, n_jobs=1, onset_kw=None):
    """Read one trial per BDF file.

    Parameters
    ----------
    file_names : sequence of path-like
        Trial files in trial order.
    eeg_channels : sequence of int
        Indices of EEG channels to keep.
    emg_channel : int, optional
        Index of the EMG channel.
    drift_flag : bool
        Apply :func:`~motorsig.precondition.drift_reject` with its default
        windows to every kept channel.
    onset_flag : bool
        Detect a movement onset per trial on the EMG channel and attach it to
        both returned trial sets.
    n_jobs : int
        Number of files parsed concurrently.

    Returns
    -------
    eeg : TrialSet
    emg : TrialSet or None
    onsets : list of OnsetResult or None
    """
    file_names = [Path(f) for f in file_names]
    if not file_names:
        raise ValidationError('no input files given')
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            parsed = list(pool.map(read_bdf, file_names))
    else:
        parsed = [read_bdf(f) for f in file_names]

    eeg_channels = [int(c) for c in eeg_channels]
    wanted = eeg_channels + ([] if emg_channel is None else [int(emg_channel)])
    eeg_trials, emg_trials, fs = [], [], None
    for path, (header, sig) in zip(file_names, parsed):
        for c in wanted:
            if not 0 <= c < header.num_channels:
                raise ChannelIndexOutOfRange(
                    f'{path}: channel {c} not in 0..{header.num_channels - 1}')
        if fs is None:
            fs = header.fs
            labels = [header.channels[c].label for c in eeg_channels]
            emg_label = None if emg_channel is None else header.channels[emg_channel].label
        elif header.fs != fs:
            raise InvalidHeader(f'{path}: sampling rate {header.fs} differs from {fs}')
        sig = np.asarray(sig, dtype=float)
        eeg = sig[eeg_channels]
        emg = None if emg_channel is None else sig[int(emg_channel)]
        if drift_flag:
            L = default_drift_window(fs)
            eeg = np.vstack([drift_reject(row, min(L, row.size)) for row in eeg])
            if emg is not None:
                emg = drift_reject(emg, min(L, emg.size))
        eeg_trials.append(eeg)
        if emg is not None:
            emg_trials.append(emg)

    onsets = None
    onset_samples = None
    if onset_flag:
        if emg_channel is None:
            raise ValidationError('onset detection requires an EMG channel')
        from .emg import emg_onset
        onsets = [emg_onset(x, fs, **(onset_kw or {})) for x in emg_trials]
        onset_samples = [o.onset_sample for o in onsets]
        logger.info('detected onsets: %s', onset_samples)
    prov = {'source_files': [str(f) for f in file_names], 'drift_rejected': bool(drift_flag)}
    eeg_set = TrialSet(eeg_trials, fs, labels, onset_samples, None, prov)
    emg_set = None
    if emg_channel is not None:
        emg_set = TrialSet([e[None, :] for e in emg_trials], fs, [emg_label],
                           onset_samples, None, prov)
    return eeg_set, emg_set, onsets
