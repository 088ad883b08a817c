"""NumPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, or when
``CLIQUE_MEMORY_BACKEND=python`` is set. Signatures and results match the
compiled module exactly.
"""

import numpy as np


def accumulate_counts(counts, units):
    """Add one co-occurrence per ordered pair of distinct blocks of each row of ``units``."""
    units = np.asarray(units, dtype=np.int64)
    if units.size == 0:
        return
    c = units.shape[1]
    a, b = np.nonzero(~np.eye(c, dtype=bool))
    np.add.at(counts, (units[:, a].ravel(), units[:, b].ravel()), 1)


def fields(counts, v):
    active = np.flatnonzero(v)
    return counts[active].sum(axis=0, dtype=np.int64)


def sweep_sequential(counts, v, fire_level):
    state = np.array(v, dtype=np.uint8)
    h = fields(counts, state)
    for k in range(state.size):
        new = 1 if h[k] >= fire_level else 0
        if new != state[k]:
            state[k] = new
            row = counts[k].astype(np.int64)
            h += row if new else -row
    return state


def gb_step(bits, v, c, l):
    n = c * l
    hits = (bits.reshape(n, c, l) & np.asarray(v, dtype=np.uint8).reshape(1, c, l)).any(axis=2)
    return hits.all(axis=1).astype(np.uint8)


def count_unstable(counts, units, fire_level):
    units = np.asarray(units, dtype=np.int64)
    n = counts.shape[0]
    bad = 0
    for row in units:
        target = np.zeros(n, dtype=bool)
        target[row] = True
        fired = counts[row].sum(axis=0, dtype=np.int64) >= fire_level
        if not np.array_equal(fired, target):
            bad += 1
    return bad
