"""Deterministic seed derivation.

``stable_seed(global_seed, model_id, approach, run_index)`` hashes its parts
with BLAKE2b, so adding or removing a model never changes the seeds of the
others and no stage reads ambient randomness.
"""

from __future__ import annotations

import hashlib


def stable_seed(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little") & 0x7FFF_FFFF_FFFF_FFFF
