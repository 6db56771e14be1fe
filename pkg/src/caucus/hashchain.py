"""Hash-chain commitments to a participant's private randomness.

A participant picks a seed ``s`` and publishes the head ``H^rnd_max(s)``. In
round ``rnd`` it may reveal ``h_rnd = H^(rnd_max - rnd)(s)``; anyone checks the
reveal by hashing it ``rnd`` more times and comparing with the head.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Sequence

from .hashing import DIGEST_SIZE, TAG_CHAIN, tagged_hash

log = logging.getLogger(__name__)

RND_MAX_CAP = 2**20


class ChainParameterError(ValueError):
    pass


def chain_hash(x: bytes) -> bytes:
    return tagged_hash(TAG_CHAIN, x)


def iterate(x: bytes, times: int) -> bytes:
    """``H^times(x)``; inlined because the simulator spends most time here."""
    sha = hashlib.sha256
    for _ in range(times):
        x = sha(TAG_CHAIN + x).digest()
    return x


@dataclass(frozen=True)
class ChainCommitment:
    head: bytes
    rnd_max: int


@dataclass(frozen=True)
class LayerReveal:
    h_rnd: bytes
    rnd: int


def _check_seed(seed: bytes) -> None:
    if not seed:
        raise ChainParameterError("seed must be nonempty")


def commit_chain(seed: bytes, rnd_max: int, cap: int = RND_MAX_CAP) -> ChainCommitment:
    _check_seed(seed)
    if not 1 <= rnd_max <= cap:
        raise ChainParameterError(f"rnd_max={rnd_max} outside [1, {cap}]")
    return ChainCommitment(iterate(seed, rnd_max), rnd_max)


def layer(seed: bytes, rnd: int, rnd_max: int) -> LayerReveal:
    _check_seed(seed)
    if not 1 <= rnd <= rnd_max:
        raise ChainParameterError(f"rnd={rnd} outside [1, {rnd_max}]")
    return LayerReveal(iterate(seed, rnd_max - rnd), rnd)


def verify_layer(commitment: ChainCommitment, reveal: LayerReveal) -> bool:
    if not 1 <= reveal.rnd <= commitment.rnd_max:
        log.debug("layer reject: rnd=%d outside [1, %d]", reveal.rnd, commitment.rnd_max)
        return False
    if len(reveal.h_rnd) != DIGEST_SIZE:
        return False
    return iterate(reveal.h_rnd, reveal.rnd) == commitment.head


def verify_layers(commitment: ChainCommitment, reveals: Sequence[LayerReveal]) -> bool:
    """Check many reveals of one chain in O(rnd_max) hashes overall.

    The lowest-round reveal is checked against the head and each later one
    against its predecessor, which is equivalent to checking each against
    the head.
    """
    anchor_rnd, anchor = 0, commitment.head
    for r in sorted(reveals, key=lambda r: r.rnd):
        if not 1 <= r.rnd <= commitment.rnd_max or len(r.h_rnd) != DIGEST_SIZE:
            return False
        if r.rnd == anchor_rnd:
            if r.h_rnd != anchor:
                return False
            continue
        if iterate(r.h_rnd, r.rnd - anchor_rnd) != anchor:
            return False
        anchor_rnd, anchor = r.rnd, r.h_rnd
    return True


class HashChain:
    """A fully materialized chain for one seed; layers are O(1) lookups.

    ``layers[j] = H^j(seed)`` so round ``rnd`` reads ``layers[rnd_max - rnd]``.
    """

    def __init__(self, seed: bytes, rnd_max: int, cap: int = RND_MAX_CAP):
        _check_seed(seed)
        if not 1 <= rnd_max <= cap:
            raise ChainParameterError(f"rnd_max={rnd_max} outside [1, {cap}]")
        self.seed = seed
        self.rnd_max = rnd_max
        sha = hashlib.sha256
        layers = [seed]
        x = seed
        for _ in range(rnd_max):
            x = sha(TAG_CHAIN + x).digest()
            layers.append(x)
        self._layers = tuple(layers)

    @property
    def commitment(self) -> ChainCommitment:
        return ChainCommitment(self._layers[-1], self.rnd_max)

    def h(self, rnd: int) -> bytes:
        if not 1 <= rnd <= self.rnd_max:
            raise ChainParameterError(f"rnd={rnd} outside [1, {self.rnd_max}]")
        return self._layers[self.rnd_max - rnd]

    def layer(self, rnd: int) -> LayerReveal:
        return LayerReveal(self.h(rnd), rnd)
