"""Round-by-round leader election on top of the beacon.

A registered participant with chain seed ``s`` is eligible in round ``rnd``
when ``H(elig || R_rnd xor h_rnd) < target`` where ``h_rnd`` is its chain
layer for that round and ``target = H_max // n_rnd``. Anyone can check a
reveal against the published chain head; the winning reveal is folded into
the beacon. When several participants reveal, the smallest ``h_rnd`` wins.

Straw-man mode drops the beacon from the predicate and compares the top
``strawman_width`` bits of ``h_rnd`` directly against the target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .beacon import (
    CEREMONY_INIT,
    BeaconState,
    HistoryEntry,
    eligibility_digest,
    fold_reveal,
    init_beacon,
    timeout_advance,
)
from .hashchain import ChainCommitment, HashChain, LayerReveal, iterate, layer
from .hashing import DIGEST_SIZE, H_MAX, to_int
from .records import Record

log = logging.getLogger(__name__)

CAUCUS = "caucus"
STRAWMAN = "strawman"


class ElectionError(ValueError):
    pass


class RegistrationError(ElectionError):
    pass


class UndefinedTargetError(ElectionError):
    """No eligible participants, so the round has no target."""


@dataclass(frozen=True)
class ElectionParams:
    join_delay: int = 5
    deposit: int = 1
    timeout: int = 1
    mode: str = CAUCUS
    strawman_width: int = 16

    def __post_init__(self):
        if self.join_delay < 1:
            raise ElectionError("join delay x must be >= 1")
        if self.mode not in (CAUCUS, STRAWMAN):
            raise ElectionError(f"unknown mode {self.mode!r}")
        if not 1 <= self.strawman_width <= 256:
            raise ElectionError("strawman_width must be in [1, 256]")


@dataclass(frozen=True)
class Registration:
    index: int
    commitment: ChainCommitment
    rnd_joined: int
    deposit: int
    weight: int = 1
    forfeited: bool = False
    # last layer this participant revealed and had accepted: (rnd, h).
    # Checking a new reveal against it is equivalent to checking against the
    # head because that layer was itself checked against the head.
    checkpoint: tuple[int, bytes] | None = None


@dataclass(frozen=True)
class RevealMsg:
    i: int
    reveal: LayerReveal

    @property
    def h(self) -> bytes:
        return self.reveal.h_rnd

    @property
    def rnd(self) -> int:
        return self.reveal.rnd


@dataclass(frozen=True)
class PrivateState:
    seed: bytes
    rnd_max: int
    index: int
    chain: HashChain | None = None

    def h(self, rnd: int) -> bytes:
        if self.chain is not None:
            return self.chain.h(rnd)
        return layer(self.seed, rnd, self.rnd_max).h_rnd


@dataclass(frozen=True)
class PublicState:
    params: ElectionParams
    registrations: tuple[Registration, ...] = ()
    beacon: BeaconState | None = None
    rnd: int = 0

    def is_eligible_at(self, reg: Registration, rnd: int | None = None) -> bool:
        rnd = self.rnd if rnd is None else rnd
        return (
            not reg.forfeited
            and reg.rnd_joined <= rnd - self.params.join_delay
            and 1 <= rnd <= reg.commitment.rnd_max
        )

    def eligible(self, rnd: int | None = None) -> list[Registration]:
        return [r for r in self.registrations if self.is_eligible_at(r, rnd)]

    @property
    def n_rnd(self) -> int:
        return len(self.eligible())

    def registration(self, i: int) -> Registration | None:
        if 0 <= i < len(self.registrations):
            return self.registrations[i]
        return None

    def target_for(self, i: int) -> int:
        """This round's target for participant ``i`` (weighted share of H_max)."""
        elig = self.eligible()
        if not elig:
            raise UndefinedTargetError(f"no eligible participants in round {self.rnd}")
        total = sum(r.weight for r in elig)
        w = self.registrations[i].weight
        if self.params.mode == STRAWMAN:
            return (w << self.params.strawman_width) // total
        return w * H_MAX // total

    def targets(self) -> dict[int, int]:
        """Per-participant targets for every eligible participant this round."""
        return {r.index: self.target_for(r.index) for r in self.eligible()}


def setup(params: ElectionParams | None = None) -> PublicState:
    return PublicState(params or ElectionParams())


def start(state: PublicState, beacon: BeaconState) -> PublicState:
    """Install the initial beacon; the election proper begins at its round."""
    if state.beacon is not None:
        raise ElectionError("beacon already initialized")
    return replace(state, beacon=beacon, rnd=beacon.rnd)


def register(state: PublicState, commitment: ChainCommitment, deposit: int, weight: int = 1) -> PublicState:
    """Append a registration.

    Before the beacon exists (the ceremony registration phase) the join delay
    counts as served by round 1; afterwards a registrant joins at the current
    round and waits ``join_delay`` rounds.
    """
    if deposit < state.params.deposit:
        raise RegistrationError(f"deposit {deposit} below minimum {state.params.deposit}")
    if weight < 1:
        raise RegistrationError("weight must be >= 1")
    if any(r.commitment.head == commitment.head for r in state.registrations):
        raise RegistrationError("duplicate chain head")
    joined = state.rnd if state.beacon is not None else 1 - state.params.join_delay
    reg = Registration(len(state.registrations), commitment, joined, deposit, weight)
    return replace(state, registrations=state.registrations + (reg,))


def compute_target(n_rnd: int) -> int:
    """``floor((2^256 - 1) / n_rnd)``; big-endian bytes via :func:`target_bytes`."""
    if n_rnd < 1:
        raise UndefinedTargetError("n_rnd = 0: round has no target")
    return H_MAX // n_rnd


def target_bytes(n_rnd: int) -> bytes:
    return compute_target(n_rnd).to_bytes(DIGEST_SIZE, "big")


def eligibility_value(state: PublicState, h: bytes) -> int:
    """The quantity compared against the target (mode dependent)."""
    if state.params.mode == STRAWMAN:
        return to_int(h) >> (256 - state.params.strawman_width)
    return eligibility_digest(state.beacon.R, h)


def check_eligibility(priv: PrivateState, state: PublicState) -> RevealMsg | None:
    reg = state.registration(priv.index)
    if reg is None or not state.is_eligible_at(reg):
        log.debug("participant %s not eligible in round %d", priv.index, state.rnd)
        return None
    h = priv.h(state.rnd)
    if eligibility_value(state, h) < state.target_for(priv.index):
        return RevealMsg(priv.index, LayerReveal(h, state.rnd))
    return None


def _layer_matches(reg: Registration, reveal: LayerReveal) -> bool:
    if not 1 <= reveal.rnd <= reg.commitment.rnd_max or len(reveal.h_rnd) != DIGEST_SIZE:
        return False
    cp = reg.checkpoint
    if cp is not None and cp[0] < reveal.rnd:
        return iterate(reveal.h_rnd, reveal.rnd - cp[0]) == cp[1]
    return iterate(reveal.h_rnd, reveal.rnd) == reg.commitment.head


def check_reveal(state: PublicState, msg: RevealMsg) -> tuple[bool, str]:
    """Pure validity check of a reveal against the current public state."""
    if state.beacon is None:
        return False, "beacon uninitialized"
    reg = state.registration(msg.i)
    if reg is None:
        return False, "unknown participant"
    if msg.rnd != state.rnd:
        return False, "wrong round"
    if reg.forfeited:
        return False, "forfeited"
    if reg.rnd_joined > state.rnd - state.params.join_delay:
        return False, "join delay"
    if msg.rnd > reg.commitment.rnd_max:
        return False, "chain exhausted"
    if not _layer_matches(reg, msg.reveal):
        return False, "layer mismatch"
    if eligibility_value(state, msg.h) >= state.target_for(msg.i):
        return False, "not eligible"
    return True, "ok"


def _with_checkpoints(state: PublicState, msgs: Iterable[RevealMsg]) -> tuple[Registration, ...]:
    regs = list(state.registrations)
    for m in msgs:
        regs[m.i] = replace(regs[m.i], checkpoint=(m.rnd, m.h))
    return tuple(regs)


def verify_reveal(state: PublicState, msg: RevealMsg) -> tuple[bool, PublicState]:
    """Accept a single reveal and fold it, or leave the state untouched."""
    ok, reason = check_reveal(state, msg)
    if not ok:
        log.debug("reveal from %d rejected: %s", msg.i, reason)
        return False, state
    beacon = fold_reveal(state.beacon, msg.h, msg.i)
    return True, replace(state, beacon=beacon, rnd=beacon.rnd,
                         registrations=_with_checkpoints(state, [msg]))


@dataclass(frozen=True)
class RoundOutcome:
    rnd: int
    winner: int | None
    h: bytes | None = None
    skipped: bool = False

    @property
    def pending(self) -> bool:
        return self.winner is None and not self.skipped


def pick_winner(reveals: Sequence[RevealMsg]) -> RevealMsg | None:
    """Smallest ``h`` as a big-endian integer; exact ties go to the lower index."""
    if not reveals:
        return None
    return min(reveals, key=lambda m: (to_int(m.h), m.i))


def resolve_round(
    state: PublicState, reveals: Sequence[RevealMsg], deadline_reached: bool = True
) -> tuple[RoundOutcome, PublicState]:
    """Close a round given reveals that already passed :func:`check_reveal`."""
    first: dict[int, RevealMsg] = {}
    for m in reveals:
        first.setdefault(m.i, m)
    valid = list(first.values())
    win = pick_winner(valid)
    if win is None:
        if not deadline_reached:
            return RoundOutcome(state.rnd, None), state
        beacon = timeout_advance(state.beacon)
        return RoundOutcome(state.rnd, None, skipped=True), replace(state, beacon=beacon, rnd=beacon.rnd)
    beacon = fold_reveal(state.beacon, win.h, win.i)
    regs = _with_checkpoints(state, valid)
    return RoundOutcome(state.rnd, win.i, win.h), replace(state, beacon=beacon, rnd=beacon.rnd, registrations=regs)


def forfeit(state: PublicState, i: int) -> PublicState:
    regs = list(state.registrations)
    regs[i] = replace(regs[i], forfeited=True)
    return replace(state, registrations=tuple(regs))


# -- event log ----------------------------------------------------------------


def genesis_record(params: ElectionParams) -> Record:
    return {
        "kind": "genesis",
        "join_delay": params.join_delay,
        "deposit": params.deposit,
        "timeout": params.timeout,
        "mode": params.mode,
        "strawman_width": params.strawman_width,
    }


def register_record(reg: Registration, rnd: int) -> Record:
    return {
        "kind": "register",
        "round": rnd,
        "i": reg.index,
        "head": reg.commitment.head.hex(),
        "rnd_max": reg.commitment.rnd_max,
        "deposit": reg.deposit,
        "weight": reg.weight,
        "rnd_joined": reg.rnd_joined,
    }


def beacon_init_record(beacon: BeaconState) -> Record:
    return {"kind": "beacon-init", "round": beacon.rnd, "source": beacon.entry.source, "R": beacon.R.hex()}


def reveal_record(msg: RevealMsg, ok: bool, reason: str) -> Record:
    rec = {"kind": "reveal-accepted" if ok else "reveal-rejected", "round": msg.rnd, "i": msg.i, "h": msg.h.hex()}
    if not ok:
        rec["reason"] = reason
    return rec


def outcome_record(outcome: RoundOutcome, state_after: PublicState, n_rnd: int) -> Record:
    if outcome.skipped:
        return {"kind": "round-skipped", "round": outcome.rnd, "n_rnd": n_rnd, "R": state_after.beacon.R.hex()}
    return {"kind": "winner", "round": outcome.rnd, "i": outcome.winner, "h": outcome.h.hex(),
            "n_rnd": n_rnd, "R": state_after.beacon.R.hex()}


@dataclass
class ElectionReplay:
    ok: bool
    state: PublicState | None = None
    divergence: str | None = None
    round: int | None = None
    line: int | None = None
    targets: dict[int, dict[int, int]] = field(default_factory=dict)
    submissions: dict[int, set[int]] = field(default_factory=dict)


def replay_election(records: Sequence[Record]) -> ElectionReplay:
    """Re-derive the final state from an event log and check every claim.

    Each reveal is re-checked, each round re-resolved, and the resulting
    beacon compared with the logged one. The first disagreement is reported
    with its round.
    """
    if not records or records[0].get("kind") != "genesis":
        return ElectionReplay(False, divergence="log must start with a genesis record", line=1)
    g = records[0]
    try:
        params = ElectionParams(g["join_delay"], g["deposit"], g["timeout"], g["mode"], g["strawman_width"])
    except (KeyError, ElectionError) as exc:
        return ElectionReplay(False, divergence=f"bad genesis: {exc}", line=1)
    state = setup(params)
    pending: list[RevealMsg] = []
    targets: dict[int, dict[int, int]] = {}
    submissions: dict[int, set[int]] = {}

    def fail(msg: str, lineno: int, rnd=None) -> ElectionReplay:
        return ElectionReplay(False, state, msg, rnd, lineno, targets, submissions)

    for lineno, r in enumerate(records[1:], start=2):
        kind = r.get("kind")
        rnd = r.get("round")
        try:
            if kind == "register":
                commitment = ChainCommitment(bytes.fromhex(r["head"]), r["rnd_max"])
                state = register(state, commitment, r["deposit"], r["weight"])
                if state.registrations[-1].index != r["i"] or state.registrations[-1].rnd_joined != r["rnd_joined"]:
                    return fail("registration record disagrees with replay", lineno, rnd)
            elif kind == "beacon-init":
                R = bytes.fromhex(r["R"])
                if r["source"] == "constant-init":
                    beacon = init_beacon("constant_zero")
                    if beacon.R != R:
                        return fail("constant init beacon is not zero", lineno, rnd)
                else:
                    beacon = BeaconState(R, 1, HistoryEntry(1, R, CEREMONY_INIT))
                state = start(state, beacon)
            elif kind in ("reveal-accepted", "reveal-rejected"):
                msg = RevealMsg(r["i"], LayerReveal(bytes.fromhex(r["h"]), rnd))
                ok, reason = check_reveal(state, msg)
                if ok != (kind == "reveal-accepted"):
                    expected = "accepted" if ok else "rejected"
                    return fail(f"reveal by {r['i']} should be {expected} ({reason})", lineno, rnd)
                if ok:
                    pending.append(msg)
            elif kind in ("winner", "round-skipped"):
                if rnd != state.rnd:
                    return fail(f"expected round {state.rnd}", lineno, rnd)
                n_rnd = state.n_rnd
                targets[rnd] = state.targets() if n_rnd else {}
                submissions[rnd] = {m.i for m in pending}
                outcome, state = resolve_round(state, pending, deadline_reached=True)
                pending = []
                if n_rnd != r["n_rnd"]:
                    return fail("n_rnd differs", lineno, rnd)
                if (kind == "winner") != (outcome.winner is not None):
                    return fail("round outcome differs", lineno, rnd)
                if kind == "winner" and (outcome.winner != r["i"] or outcome.h.hex() != r["h"]):
                    return fail("winner differs", lineno, rnd)
                if state.beacon.R.hex() != r["R"]:
                    return fail("beacon value differs", lineno, rnd)
            else:
                return fail(f"unknown record kind {kind!r}", lineno, rnd)
        except (KeyError, ValueError, TypeError) as exc:
            return fail(f"{type(exc).__name__}: {exc}", lineno, rnd)
    return ElectionReplay(True, state, targets=targets, submissions=submissions)
