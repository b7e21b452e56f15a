"""SplitMix64 counter-based generator.

State is a single 64-bit word.  Output ``k`` (k = 0, 1, ...) of the stream
seeded with ``s`` is ``mix(s + (k + 1) * 0x9E3779B97F4A7C15)`` where::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

all arithmetic modulo 2**64.  Because the stream is a pure function of the
counter, any slice can be produced independently, which keeps parallel
generation bit-identical to serial generation on every platform.
"""
import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_seed(seed, *keys):
    """Fold integer keys into a new 64-bit seed (e.g. per trial and channel)."""
    s = int(seed) & _MASK
    for key in keys:
        s = int(_mix(np.array([(s ^ (int(key) & _MASK)) + 0x632BE59BD9B4E019 & _MASK],
                              dtype=np.uint64))[0])
    return s


def raw_uint64(seed, n, offset=0):
    """Return ``n`` consecutive raw outputs of the stream ``seed``."""
    k = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(int(seed) & _MASK) + k * _GAMMA
        return _mix(z)


def uniform(seed, n, low=0.0, high=1.0, offset=0):
    """Uniform doubles on [low, high) built from the top 53 bits."""
    u = (raw_uint64(seed, n, offset) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return low + (high - low) * u


def normal(seed, n, offset=0):
    """Standard normal deviates via Box-Muller on consecutive uniform pairs."""
    m = (n + 1) // 2
    u = uniform(seed, 2 * m, offset=2 * offset)
    u1 = 1.0 - u[0::2]  # (0, 1]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2 * np.pi * u2)
    z[1::2] = r * np.sin(2 * np.pi * u2)
    return z[:n]
