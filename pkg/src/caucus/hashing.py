"""Domain-separated SHA-256 helpers shared by every module."""

from __future__ import annotations

import hashlib

DIGEST_SIZE = 32
H_MAX = 2**256 - 1

TAG_CHAIN = b"caucus/chain"
TAG_ELIG = b"caucus/elig"
TAG_TIMEOUT = b"caucus/timeout"
TAG_COMBINE = b"caucus/combine"


def tagged_hash(tag: bytes, *parts: bytes) -> bytes:
    """SHA-256 over ``tag || parts[0] || parts[1] || ...``."""
    h = hashlib.sha256(tag)
    for p in parts:
        h.update(p)
    return h.digest()


def derive_seed(seed: bytes, *labels: str | int | bytes) -> bytes:
    """Derive an independent 32-byte sub-seed from ``seed`` and a label path.

    Labels are length-prefixed so that ``("ab", "c")`` and ``("a", "bc")``
    never collide.
    """
    h = hashlib.sha256(b"caucus/derive")
    h.update(len(seed).to_bytes(4, "big"))
    h.update(seed)
    for label in labels:
        if isinstance(label, int):
            raw = b"i" + label.to_bytes(8, "big", signed=True)
        elif isinstance(label, str):
            raw = b"s" + label.encode()
        else:
            raw = b"b" + label
        h.update(len(raw).to_bytes(4, "big"))
        h.update(raw)
    return h.digest()


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def to_int(b: bytes) -> int:
    return int.from_bytes(b, "big")


def seed_from_int(seed: int) -> bytes:
    """Canonical byte form of an integer master seed (``--seed <u64>``)."""
    return seed.to_bytes(8, "big")
