"""Deterministic random-stream derivation.

All stochastic code in this package takes an explicit ``numpy.random.Generator``.
Streams are derived from a path of integer/string keys, so every component
(bank construction, per-individual evaluation, local search, experiment cells)
gets an independent stream that is reproducible regardless of execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def key_to_int(key) -> int:
    """Map an int or str stream key to a 64-bit integer."""
    if isinstance(key, (bool,)):
        raise TypeError("stream key must be int or str, got bool")
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream key must be int or str, got {type(key).__name__}")


def derive_rng(*keys) -> np.random.Generator:
    """Build a PCG64 generator from a path of keys, e.g. (seed, "bank", 3, 1)."""
    if not keys:
        raise ValueError("at least one stream key is required")
    entropy = [key_to_int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(*keys) -> int:
    """Derive a 63-bit child seed (used to label runs spawned from a plan seed)."""
    material = "/".join(str(key_to_int(k)) for k in keys).encode("ascii")
    digest = hashlib.sha256(material).digest()
    return int.from_bytes(digest[:8], "little") >> 1
