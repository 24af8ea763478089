"""Seeded random streams.

All randomness goes through numpy's Philox generator, a counter-based
bit generator whose output is identical on every platform.  Sub-streams
are keyed by ``(seed, *stream_ids)`` so parallel or reordered work draws the
same numbers.
"""

import numpy as np


def make_rng(seed, *stream):
    """Philox generator for ``seed`` and an optional tuple of integer stream ids."""
    if isinstance(seed, np.random.Generator):
        return seed
    key = [int(seed)] + [int(s) for s in stream]
    if any(k < 0 for k in key):
        raise ValueError("seeds and stream ids must be nonnegative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
