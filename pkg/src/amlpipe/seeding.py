"""Deterministic seed derivation for pipeline stages.

Every randomized stage gets its own 64-bit seed derived from the master seed
and a fixed stage name, so changing one stage's name never perturbs another
stage's random stream. The mixing function is the first 8 bytes
(little-endian) of SHA-256 over ``"{master}:{stage}"`` — stable across
platforms and easy to reimplement elsewhere.
"""

from __future__ import annotations

import hashlib


def derive_seed(master_seed: int, stage: str) -> int:
    """Return the 64-bit stage seed mixed from the master seed."""
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
