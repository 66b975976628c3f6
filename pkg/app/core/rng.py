"""
Seeding helpers.

Every random draw in the toolkit goes through ``make_rng``, a numpy ``Generator``
over the PCG64 bit generator (O'Neill's permuted congruential generator, 128-bit
state, XSL-RR output). Derived seeds come from ``stable_hash``: the first eight
bytes of a SHA-256 digest over the '|'-joined string forms of its parts, read
big-endian. Both are portable, so other implementations can reproduce datasets
and run seeds exactly.
"""
import hashlib
from typing import List

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    """Create a PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & SEED_MASK))


def stable_hash(*parts) -> int:
    """
    Hash arbitrary parts into an unsigned 64-bit seed.

    Args:
        *parts: Values whose ``str`` forms identify the stream

    Returns:
        Integer in [0, 2**64)
    """
    key = "|".join(str(part) for part in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Derive ``count`` independent child seeds from a master seed."""
    children = np.random.SeedSequence(int(seed) & SEED_MASK).spawn(count)
    return [int(child.generate_state(2, dtype=np.uint64)[0]) for child in children]
