"""Seeded stream splitting.

Every random quantity in the package is drawn from a sub-stream of a single
root seed. A sub-stream is identified by ``(purpose, chunk)``:

* ``purpose`` is one of :data:`PATHS`, :data:`ZETA`, :data:`PSI`, :data:`AUX`;
* ``chunk`` is the index of a fixed-size block of replications
  (:data:`CHUNK` rows), so replication ``i`` always lives in chunk
  ``i // CHUNK`` at row ``i % CHUNK``.

The child stream is ``numpy.random.SeedSequence(seed, spawn_key=(purpose, chunk))``
feeding a PCG64 generator. Because the mapping from replication index to
stream does not depend on how chunks are scheduled, results are identical for
any number of worker threads.
"""

from __future__ import annotations

import numpy as np

PATHS = 0
ZETA = 1
PSI = 2
AUX = 3

CHUNK = 4096


def stream(seed: int, purpose: int, chunk: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(chunk)))
    return np.random.Generator(np.random.PCG64(ss))


def chunks(reps: int):
    """Yield ``(chunk_index, start, stop)`` covering ``range(reps)``."""
    for c, start in enumerate(range(0, reps, CHUNK)):
        yield c, start, min(start + CHUNK, reps)
