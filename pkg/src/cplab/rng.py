"""Named, reproducible random sub-streams derived from one master seed.

Every random choice in the package flows through `substream`, so any
component can be re-seeded independently without touching the others.
Derivation uses SHA-256, not `hash()`, so streams are stable across
interpreter runs.
"""

import hashlib
import random


def substream_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, label: str) -> random.Random:
    return random.Random(substream_seed(seed, label))
