"""Counter-based RNG shared by the numba and numpy walk kernels.

Each sample path gets an independent splitmix64 stream whose state is
derived from (master seed, path index) only, so batches are bit-identical
regardless of batch layout, thread count or kernel backend.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z):
    """splitmix64 finalizer; accepts scalars or uint64 arrays."""
    z = _U64(z) if np.isscalar(z) else z.astype(np.uint64)
    z = (z ^ (z >> _U64(30))) * MIX1
    z = (z ^ (z >> _U64(27))) * MIX2
    return z ^ (z >> _U64(31))


def path_states(seed, batch):
    """Initial stream states for paths 0..batch-1 (uint64 array)."""
    idx = np.arange(1, batch + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(_U64(seed % (1 << 64)) + idx * GOLDEN)


def next_states(states):
    """Advance streams in place, return uniforms in [0, 1)."""
    with np.errstate(over="ignore"):
        states += GOLDEN
        u = mix64(states)
    return (u >> _U64(11)).astype(np.float64) * _INV_2_53


def derive_seed(master_seed, name):
    """Stable per-estimator sub-seed from a master seed and a label."""
    import zlib

    tag = zlib.crc32(name.encode("utf-8"))
    with np.errstate(over="ignore"):
        s = mix64(_U64(master_seed % (1 << 64)) ^ (_U64(tag) * GOLDEN))
    # keep within int64 so jitted kernels see one integer signature
    return int(s) & ((1 << 63) - 1)
