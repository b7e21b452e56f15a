import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile('default', deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('default')


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tone(f, fs, seconds, phase=0.0, amp=1.0):
    t = np.arange(int(round(seconds * fs))) / fs
    return amp * np.cos(2 * np.pi * f * t + phase)


def xcorr_peak_lag(x, y):
    """Lag (samples) maximizing the brute-force cross-correlation of y against x."""
    n = x.size
    lags = np.arange(-20, 21)
    vals = [np.dot(x[max(0, -k):n - max(0, k)], y[max(0, k):n - max(0, -k)]) for k in lags]
    return int(lags[int(np.argmax(vals))])


_VERDICTS = []


def record_verdict(line):
    _VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section('acceptance criteria')
        for line in _VERDICTS:
            terminalreporter.write_line(line)
