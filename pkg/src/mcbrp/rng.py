"""Counter-based random streams.

Every stochastic step in the pipeline draws from a Philox generator keyed by
(base seed, path), where the path names the consumer, e.g.
``stream(seed, "sim", row_id, feature)``.  Streams are independent of each
other and of iteration order, so fanning work out over any number of workers
reproduces the single-threaded result bit for bit.
"""

import hashlib

import numpy as np


def _as_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(base_seed: int, *path) -> np.random.Generator:
    """Return a Generator for the stream identified by (base_seed, *path).

    Path components may be ints or anything with a stable str(); strings are
    hashed with SHA-256 so unrelated paths cannot collide by accident.
    """
    entropy = [int(base_seed) & 0xFFFFFFFFFFFFFFFF] + [_as_int(p) for p in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
