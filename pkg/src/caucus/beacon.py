"""The evolving public random value R.

``R`` starts from the ceremony output (or all zeros in bootstrap mode) and is
then updated once per round: XOR-folded with the winner's revealed layer, or
rehashed when the round times out. The full history is kept so any observer
can recompute every transition and audit withheld wins after the fact.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .hashchain import ChainCommitment, LayerReveal, verify_layers
from .hashing import DIGEST_SIZE, TAG_ELIG, TAG_TIMEOUT, tagged_hash, to_int, xor_bytes
from .pvss import CeremonyFailed

log = logging.getLogger(__name__)

ZERO = bytes(DIGEST_SIZE)

CEREMONY_INIT = "ceremony-init"
CONSTANT_INIT = "constant-init"
FOLD = "fold"
TIMEOUT = "timeout"


class BeaconError(ValueError):
    pass


@dataclass(frozen=True)
class HistoryEntry:
    """``R`` is the beacon value in force for round ``rnd``."""

    rnd: int
    R: bytes
    source: str
    participant: int | None = None
    h: bytes | None = None


@dataclass(frozen=True)
class BeaconState:
    R: bytes
    rnd: int
    entry: HistoryEntry
    parent: "BeaconState | None" = field(default=None, repr=False, compare=False)

    @property
    def history(self) -> list[HistoryEntry]:
        out = []
        node: BeaconState | None = self
        while node is not None:
            out.append(node.entry)
            node = node.parent
        out.reverse()
        return out

    def _next(self, R: bytes, source: str, participant=None, h=None) -> "BeaconState":
        entry = HistoryEntry(self.rnd + 1, R, source, participant, h)
        return BeaconState(R, self.rnd + 1, entry, self)


def init_beacon(mode: str = "constant_zero", transcript=None) -> BeaconState:
    """``mode`` is ``"ceremony"`` (needs a complete transcript) or ``"constant_zero"``."""
    if mode == "constant_zero":
        return BeaconState(ZERO, 1, HistoryEntry(1, ZERO, CONSTANT_INIT))
    if mode == "ceremony":
        if transcript is None or not transcript.complete:
            raise CeremonyFailed("ceremony transcript is missing or incomplete")
        R1 = transcript.beacon
        return BeaconState(R1, 1, HistoryEntry(1, R1, CEREMONY_INIT))
    raise BeaconError(f"unknown init mode {mode!r}")


def fold_reveal(state: BeaconState, h_rnd: bytes, participant: int | None = None) -> BeaconState:
    if len(h_rnd) != len(state.R):
        raise BeaconError(f"h has {len(h_rnd)} bytes, beacon has {len(state.R)}")
    return state._next(xor_bytes(state.R, h_rnd), FOLD, participant, h_rnd)


def timeout_advance(state: BeaconState) -> BeaconState:
    return state._next(tagged_hash(TAG_TIMEOUT, state.R), TIMEOUT)


def eligibility_digest(R: bytes, h: bytes) -> int:
    """``H(elig || R xor h)`` as a big-endian integer."""
    return to_int(tagged_hash(TAG_ELIG, xor_bytes(R, h)))


def replay_history(history: Sequence[HistoryEntry]) -> int | None:
    """Recompute every transition; return the first divergent round or ``None``."""
    if not history:
        return None
    first = history[0]
    if first.source == CONSTANT_INIT and first.R != ZERO:
        return first.rnd
    if first.source not in (CONSTANT_INIT, CEREMONY_INIT):
        return first.rnd
    R = first.R
    for prev, e in zip(history, history[1:]):
        if e.rnd != prev.rnd + 1:
            return e.rnd
        if e.source == FOLD:
            if e.h is None or len(e.h) != len(R):
                return e.rnd
            R = xor_bytes(R, e.h)
        elif e.source == TIMEOUT:
            R = tagged_hash(TAG_TIMEOUT, R)
        else:
            return e.rnd
        if R != e.R:
            return e.rnd
    return None


CSV_FIELDS = ("rnd", "R", "source", "participant", "h")


def history_to_csv(history: Sequence[HistoryEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for e in history:
        w.writerow([e.rnd, e.R.hex(), e.source,
                    "" if e.participant is None else e.participant,
                    "" if e.h is None else e.h.hex()])
    return buf.getvalue()


def history_from_csv(text: str) -> list[HistoryEntry]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(HistoryEntry(
            int(row["rnd"]),
            bytes.fromhex(row["R"]),
            row["source"],
            int(row["participant"]) if row["participant"] else None,
            bytes.fromhex(row["h"]) if row["h"] else None,
        ))
    return out


# -- retroactive withholding audit -------------------------------------------

DISCLOSURE_NOTE = (
    "pre-image lists are disclosed once, at the end of the scenario; "
    "the disclosure schedule is an interpretation"
)


@dataclass(frozen=True)
class Finding:
    participant: int
    rnd: int
    h: bytes


@dataclass
class AuditReport:
    findings: list[Finding]
    forfeited: dict[int, bool]
    unauditable: set[int]
    note: str = DISCLOSURE_NOTE

    def to_records(self) -> list[dict]:
        recs: list[dict] = [{"kind": "audit", "note": self.note, "findings": len(self.findings),
                             "unauditable": ",".join(str(i) for i in sorted(self.unauditable))}]
        recs += [{"kind": "finding", "participant": f.participant, "rnd": f.rnd, "h": f.h.hex()}
                 for f in self.findings]
        recs += [{"kind": "forfeit", "participant": i, "forfeited": flag}
                 for i, flag in sorted(self.forfeited.items())]
        return recs


def _target_for(targets: Mapping, k: int, i: int) -> int | None:
    t = targets.get(k)
    if isinstance(t, Mapping):
        return t.get(i)
    return t


def audit_withholding(
    history: Sequence[HistoryEntry],
    commitments: Mapping[int, ChainCommitment],
    revealed_layers: Mapping[int, Sequence[LayerReveal]],
    targets: Mapping[int, int | Mapping[int, int]],
    submissions: Mapping[int, set[int]] | None = None,
) -> AuditReport:
    """Find rounds where a participant was eligible but did not submit.

    ``targets[k]`` is the round-``k`` target (or a per-participant mapping).
    ``submissions[k]`` lists everyone who submitted a valid reveal in round
    ``k``; when omitted only the fold winners recorded in ``history`` count.
    A participant with any layer that fails verification, or with no layers,
    is skipped and reported as unauditable.
    """
    R_at = {e.rnd: e.R for e in history}
    closed = {e.rnd - 1 for e in history if e.source in (FOLD, TIMEOUT)}
    if submissions is None:
        submissions = {}
        for e in history:
            if e.source == FOLD:
                submissions.setdefault(e.rnd - 1, set()).add(e.participant)

    findings: list[Finding] = []
    unauditable: set[int] = set()
    for i in sorted(commitments):
        layers = revealed_layers.get(i, [])
        if not layers or not verify_layers(commitments[i], layers):
            unauditable.add(i)
            continue
        for lr in sorted(layers, key=lambda x: x.rnd):
            k = lr.rnd
            if k not in closed or k not in R_at:
                continue
            target = _target_for(targets, k, i)
            if target is None:
                continue
            if eligibility_digest(R_at[k], lr.h_rnd) < target and i not in submissions.get(k, ()):
                findings.append(Finding(i, k, lr.h_rnd))
    forfeited = {i: any(f.participant == i for f in findings) for i in sorted(commitments)}
    if findings:
        log.info("audit: %d withheld eligible rounds", len(findings))
    return AuditReport(findings, forfeited, unauditable)
