"""Deterministic, platform-independent hashing helpers.

Python's builtin ``hash()`` is salted per process, so anything that must
reproduce across runs and machines (n-gram bucketing, per-article RNG seeds)
goes through keyed blake2b instead.
"""

import hashlib


def stable_hash(*parts, seed: int = 0, bits: int = 64) -> int:
    """Hash a sequence of strings/ints/bytes to an unsigned ``bits``-bit int."""
    key = (seed % 2**64).to_bytes(8, "little")
    h = hashlib.blake2b(digest_size=bits // 8, key=key)
    for part in parts:
        data = part if isinstance(part, bytes) else str(part).encode("utf-8")
        h.update(len(data).to_bytes(4, "little"))
        h.update(data)
    return int.from_bytes(h.digest(), "little")


def stable_seed(*parts, seed: int = 0) -> int:
    """Derive a 32-bit RNG seed from arbitrary parts. Order matters."""
    return stable_hash(*parts, seed=seed) % 2**32
