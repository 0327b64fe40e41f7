"""Deterministic seed derivation.

All randomness in the package flows from user-provided 64-bit seeds. Derived
streams (field vs mask vs weight init, experiment cells, runs) are obtained by
hashing the parent seed together with a canonical encoding of distinguishing
labels, so that every consumer gets an independent, reproducible stream and
seed collisions across an experiment plan can be checked explicitly.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def _encode(part: object) -> bytes:
    # repr() of floats round-trips in Python 3, so float labels are stable.
    # numpy scalars are folded into their Python equivalents first so that
    # e.g. np.float64(0.1) and 0.1 derive the same seed.
    if isinstance(part, bytes):
        return part
    if isinstance(part, (bool, np.bool_)):  # before int: bool subclasses int
        return b"b:" + (b"1" if part else b"0")
    if isinstance(part, (int, np.integer)):
        return b"i:" + str(int(part)).encode()
    if isinstance(part, (float, np.floating)):
        return b"f:" + repr(float(part)).encode()
    if isinstance(part, str):
        return b"s:" + part.encode()
    raise TypeError(f"unsupported seed label type: {type(part).__name__}")


def stable_seed(*parts: object) -> int:
    """Derive a uint64 seed from labels via SHA-256 (platform independent)."""
    digest = hashlib.sha256(_SEP.join(_encode(p) for p in parts)).digest()
    return int.from_bytes(digest[:8], "little")
