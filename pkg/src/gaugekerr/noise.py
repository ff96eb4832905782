"""Counter-based Gaussian noise.

Every variate is a pure function of ``(seed, trajectory, step, slot)``, so a
trajectory sees the same noise whichever worker evolves it and however the
ensemble is partitioned.  The generator is Philox4x64-10, vectorised over
counters; its output matches :class:`numpy.random.Philox` bit for bit.
"""

import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# second key word; separates this stream family from plain numpy usage
_DOMAIN = 0x6B657272


def _mulhilo(a, b):
    """Full 64x64 -> 128 bit product, returned as (hi, lo)."""
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    carry = ((ll >> _S32) + (lh & _LO32) + (hl & _LO32)) >> _S32
    hi = hh + (lh >> _S32) + (hl >> _S32) + carry
    return hi, a * b


def philox4x64(counter, key, rounds=10):
    """Apply the Philox4x64 bijection.

    ``counter`` has shape ``(4, ...)`` and ``key`` shape ``(2,)``; both are
    interpreted as uint64.  Returns an array shaped like ``counter``.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
    k0, k1 = (np.uint64(k) for k in np.asarray(key, dtype=np.uint64))
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3])


def _to_unit_open(x):
    # 53 random bits, centred in their cell: strictly inside (0, 1)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normal_pair(seed, trajectories, step, slot=0):
    """Two independent N(0, 1) arrays for the given trajectory indices.

    Box-Muller on the first two Philox output words of counter
    ``(trajectory, step, slot, 0)`` under key ``(seed, domain)``.
    """
    idx = np.asarray(trajectories, dtype=np.uint64)
    counter = (
        idx,
        np.full_like(idx, np.uint64(step)),
        np.full_like(idx, np.uint64(slot)),
        np.zeros_like(idx),
    )
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), _DOMAIN], dtype=np.uint64)
    words = philox4x64(counter, key)
    u1 = _to_unit_open(words[0])
    u2 = _to_unit_open(words[1])
    r = np.sqrt(-2.0 * np.log(u1))
    phi = 2.0 * np.pi * u2
    return r * np.cos(phi), r * np.sin(phi)


def wiener_increments(seed, trajectories, step, dt, substeps=1):
    """Real Wiener increments ``(dW1, dW2)`` of variance ``dt`` for one step.

    With ``substeps = S`` the increment is the sum of the ``S`` increments a
    run with step ``dt / S`` would use at fine steps ``step*S ... step*S+S-1``.
    Runs at different resolutions therefore share one Brownian path, which is
    what a self-convergence study needs.
    """
    z1 = 0.0
    z2 = 0.0
    for j in range(substeps):
        a, b = standard_normal_pair(seed, trajectories, step * substeps + j)
        z1 = z1 + a
        z2 = z2 + b
    scale = np.sqrt(dt / substeps)
    return z1 * scale, z2 * scale
