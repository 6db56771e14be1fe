"""Chaum-Pedersen proofs that ``log_b1(y1) == log_b2(y2)``.

Non-interactive via Fiat-Shamir. The challenge binds a context tag so a proof
made for one dealer/slot/round cannot be replayed in another.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .groups import Element, GroupParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DleqProof:
    e: int
    z: int
    tag: bytes = b""

    def to_bytes(self, group: GroupParams) -> bytes:
        return group.scalar_to_bytes(self.e) + group.scalar_to_bytes(self.z)

    @classmethod
    def from_bytes(cls, group: GroupParams, data: bytes, tag: bytes = b"") -> "DleqProof":
        n = group.scalar_size
        if len(data) != 2 * n:
            raise ValueError(f"proof must be {2 * n} bytes, got {len(data)}")
        return cls(group.scalar_from_bytes(data[:n]), group.scalar_from_bytes(data[n:]), tag)

    def hex(self, group: GroupParams) -> str:
        return self.to_bytes(group).hex()


def _challenge(group: GroupParams, tag: bytes, *elems: Element) -> int:
    parts = [len(tag).to_bytes(4, "big"), tag]
    parts.extend(group.serialize(x) for x in elems)
    return group.hash_to_scalar(b"caucus/dleq", *parts)


def dleq_prove(
    group: GroupParams,
    b1: Element,
    y1: Element,
    b2: Element,
    y2: Element,
    w: int,
    nonce_seed: bytes,
    tag: bytes = b"",
) -> DleqProof:
    """Prove knowledge of ``w`` with ``y1 = b1^w`` and ``y2 = b2^w``."""
    # nonce depends on the statement and witness too, so reusing nonce_seed
    # across statements never reuses k
    statement = b"".join(group.serialize(x) for x in (b1, y1, b2, y2))
    k = 1 + group.hash_to_scalar(
        b"caucus/dleq-nonce", nonce_seed, tag, statement, group.scalar_to_bytes(w)
    ) % (group.q - 1)
    a1 = group.exp(b1, k)
    a2 = group.exp(b2, k)
    e = _challenge(group, tag, b1, y1, b2, y2, a1, a2)
    z = (k + e * w) % group.q
    return DleqProof(e, z, tag)


def dleq_verify(
    group: GroupParams, b1: Element, y1: Element, b2: Element, y2: Element, proof: DleqProof
) -> bool:
    for name, x in (("b1", b1), ("y1", y1), ("b2", b2), ("y2", y2)):
        if not group.is_member(x):
            log.debug("dleq reject: %s is not a group member", name)
            return False
    if not (0 <= proof.e < group.q and 0 <= proof.z < group.q):
        log.debug("dleq reject: proof scalar out of range")
        return False
    neg_e = group.q - proof.e
    a1 = group.multi_exp([(b1, proof.z), (y1, neg_e)])
    a2 = group.multi_exp([(b2, proof.z), (y2, neg_e)])
    ok = proof.e == _challenge(group, proof.tag, b1, y1, b2, y2, a1, a2)
    if not ok:
        log.debug("dleq reject: challenge mismatch")
    return ok
