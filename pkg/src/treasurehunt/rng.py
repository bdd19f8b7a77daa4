"""Seed discipline for everything random in the package.

A single 64-bit master seed drives every run. Each consumer derives its own
independent child stream from (master seed, purpose tags), so map generation,
cost draws, tie breaks and agent choices can be reproduced in isolation:
regenerating the map never disturbs the cost sequence and vice versa.
"""

import hashlib
import random

_MASK64 = (1 << 64) - 1


def child_seed(master: int, *tags) -> int:
    """Derive a 64-bit child seed from a master seed and a tag tuple.

    Tags may be ints or strings. The derivation is a SHA-256 of the
    canonical tag encoding, so it is stable across runs and platforms.
    """
    h = hashlib.sha256()
    h.update(str(int(master) & _MASK64).encode())
    for tag in tags:
        h.update(b"|")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest()[:8], "big")


def stream(master: int, *tags) -> random.Random:
    """A fresh random.Random seeded from (master, tags)."""
    return random.Random(child_seed(master, *tags))
