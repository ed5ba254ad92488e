"""Named, independent random streams derived from a single run seed.

Each phase of a run (interval rounding, offset draws, payoff noise, ...)
gets its own generator so that changing how much randomness one phase
consumes does not perturb the others. Streams are keyed by (seed, stream
index, extra ints), so the same (seed, name) always yields the same stream.
"""

from __future__ import annotations

import numpy as np

_STREAMS = {
    "instance": 0,
    "rounding": 1,
    "offsets": 2,
    "noise": 3,
    "perturb": 4,
    "misc": 5,
}


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    try:
        idx = _STREAMS[name]
    except KeyError:
        raise KeyError(f"unknown stream {name!r}; known: {sorted(_STREAMS)}") from None
    ss = np.random.SeedSequence((int(seed), idx) + tuple(int(e) for e in extra))
    return np.random.Generator(np.random.PCG64(ss))
