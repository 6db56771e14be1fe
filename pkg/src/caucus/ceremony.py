"""The beacon-initialization ceremony and its append-only transcript.

Phases run strictly in order: register -> distribute -> recover -> combine.
Deadlines ``t_reg``, ``t_com`` and ``t_scr`` are round counts. A dealer that
misses ``t_com`` or whose bundle is rejected forfeits its deposit and is left
out of the combination; a participant that publishes no decrypted share
before ``t_scr`` forfeits as well.

Two acceptance policies:

* ``onchain``: the coordinator verifies every bundle and decrypted share.
* ``voting``: participants verify off-line and vote; a subject is accepted
  once strictly more than n/2 voters approve. Anything still pending at the
  phase deadline is rejected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

from .dleq import DleqProof
from .groups import (
    Element, GroupParams, Keypair, element_from_hex, element_hex, elements_from_hex, elements_hex, get_group,
)
from .hashing import derive_seed, tagged_hash
from .pvss import (
    ACCEPTED,
    PENDING,
    REJECTED,
    CeremonyFailed,
    DecryptedShare,
    ShareBundle,
    Subject,
    VoteRecord,
    combine_secrets,
    deal,
    decrypt_share,
    default_threshold,
    reconstruct_secret,
    tally_votes,
    verify_bundle,
    verify_decrypted,
)
from .records import Record, RecordError, canonical

log = logging.getLogger(__name__)

PHASES = ("register", "distribute", "recover", "combine")
POLICIES = ("onchain", "voting")
BEHAVIORS = ("online", "offline", "late", "cheat")


class TranscriptOrderError(ValueError):
    pass


def _proofs_hex(group: GroupParams, proofs: Sequence[DleqProof]) -> str:
    return ",".join(p.hex(group) for p in proofs)


def _proofs_from_hex(group: GroupParams, s: str) -> list[DleqProof]:
    return [DleqProof.from_bytes(group, bytes.fromhex(x)) for x in s.split(",")] if s else []


def bundle_record(group: GroupParams, bundle: ShareBundle, rnd: int) -> Record:
    return {
        "kind": "bundle",
        "phase": "distribute",
        "dealer": bundle.dealer,
        "round": rnd,
        "n": bundle.n,
        "t": bundle.t,
        "enc": elements_hex(group, bundle.encrypted),
        "v": elements_hex(group, bundle.commitments),
        "proofs": _proofs_hex(group, bundle.proofs),
    }


def bundle_from_record(group: GroupParams, r: Record) -> ShareBundle:
    return ShareBundle(
        dealer=r["dealer"],
        encrypted=tuple(elements_from_hex(group, r["enc"])),
        commitments=tuple(elements_from_hex(group, r["v"])),
        proofs=tuple(_proofs_from_hex(group, r["proofs"])),
        t=r["t"],
        n=r["n"],
    )


def share_record(group: GroupParams, share: DecryptedShare, rnd: int) -> Record:
    return {
        "kind": "share",
        "phase": "recover",
        "dealer": share.dealer,
        "i": share.i,
        "round": rnd,
        "share": element_hex(group, share.share),
        "proof": share.proof.hex(group),
    }


def share_from_record(group: GroupParams, r: Record) -> DecryptedShare:
    return DecryptedShare(
        r["i"],
        element_from_hex(group, r["share"]),
        DleqProof.from_bytes(group, bytes.fromhex(r["proof"])),
        r["dealer"],
    )


@dataclass
class CeremonyTranscript:
    """Append-only ceremony log plus the state it implies.

    ``append`` is the single writer: it enforces phase order, folds the record
    into a running digest (the public codeword seed) and updates the derived
    state. It does not verify cryptography; that is the job of the ceremony
    runner and of :func:`replay_ceremony`.
    """

    group: GroupParams
    n: int
    t: int
    policy: str = "onchain"
    deadlines: tuple[int, int, int] = (1, 1, 1)
    context: bytes = b""

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        self._phase = 0
        self.digest = tagged_hash(b"caucus/transcript", self.context)
        self.pks: dict[int, Element] = {}
        self.bundles: dict[int, ShareBundle] = {}
        self.bundle_seeds: dict[int, bytes] = {}
        self.accepted: list[int] = []
        self.votes: list[VoteRecord] = []
        self.shares: dict[int, dict[int, DecryptedShare]] = {}
        self.share_verdicts: dict[tuple[int, int], str] = {}
        self.secrets: dict[int, Element] = {}
        self.forfeited: dict[int, str] = {}
        self.beacon: bytes | None = None
        self.records: list[Record] = []
        self.append(
            {
                "kind": "ceremony",
                "phase": "register",
                "group": self.group.name,
                "n": self.n,
                "t": self.t,
                "policy": self.policy,
                "t_reg": self.deadlines[0],
                "t_com": self.deadlines[1],
                "t_scr": self.deadlines[2],
                "context": self.context.hex(),
            }
        )

    @property
    def phase(self) -> str:
        return PHASES[self._phase]

    def append(self, record: Record) -> None:
        phase = record.get("phase")
        if phase not in PHASES:
            raise TranscriptOrderError(f"record without a valid phase: {record.get('kind')}")
        idx = PHASES.index(phase)
        if idx < self._phase:
            raise TranscriptOrderError(f"{record['kind']!r} in phase {phase!r} after phase {self.phase!r}")
        self._phase = idx
        self.records.append(record)
        self.digest = tagged_hash(b"caucus/transcript", self.digest, canonical(record))
        self._apply(record)

    def _apply(self, r: Record) -> None:
        kind = r["kind"]
        g = self.group
        if kind == "register":
            self.pks[r["i"]] = element_from_hex(g, r["pk"])
        elif kind == "bundle":
            self.bundles[r["dealer"]] = bundle_from_record(g, r)
            self.bundle_seeds[r["dealer"]] = self.digest
        elif kind == "vote":
            self.votes.append(VoteRecord(r["voter"], Subject.parse(r["subject"]), r["verdict"]))
        elif kind == "verdict":
            subj = Subject.parse(r["subject"])
            if subj.kind == "bundle":
                if r["outcome"] == ACCEPTED:
                    self.accepted.append(subj.dealer)
            else:
                self.share_verdicts[(subj.dealer, subj.index)] = r["outcome"]
        elif kind == "forfeit":
            self.forfeited.setdefault(r["participant"], r["reason"])
        elif kind == "share":
            self.shares.setdefault(r["dealer"], {})[r["i"]] = share_from_record(g, r)
        elif kind == "recovery":
            self.secrets[r["dealer"]] = element_from_hex(g, r["secret"])
        elif kind == "combine":
            self.beacon = bytes.fromhex(r["R"])
        elif kind != "ceremony":
            raise RecordError(f"unknown transcript record kind {kind!r}")

    def accepted_shares(self, dealer: int) -> list[DecryptedShare]:
        return [
            s for i, s in sorted(self.shares.get(dealer, {}).items())
            if self.share_verdicts.get((dealer, i)) == ACCEPTED
        ]

    @property
    def complete(self) -> bool:
        """Beacon present, every accepted dealer recovered, and R_1 consistent."""
        if self.beacon is None or not self.accepted:
            return False
        if any(d not in self.secrets for d in self.accepted):
            return False
        return combine_secrets(self.group, [self.secrets[d] for d in sorted(self.accepted)]) == self.beacon

    @classmethod
    def from_records(cls, records: Sequence[Record]) -> "CeremonyTranscript":
        """Rebuild the derived state from records without re-verifying them."""
        tr = _from_header(records)
        for lineno, r in enumerate(records[1:], start=2):
            try:
                tr.append(r)
            except (KeyError, ValueError) as exc:
                raise RecordError(str(exc), lineno) from None
        return tr


def _from_header(records: Sequence[Record]) -> CeremonyTranscript:
    if not records or records[0].get("kind") != "ceremony":
        raise RecordError("transcript must start with a 'ceremony' record", 1)
    head = records[0]
    try:
        tr = CeremonyTranscript(
            get_group(head["group"]),
            head["n"],
            head["t"],
            head["policy"],
            (head["t_reg"], head["t_com"], head["t_scr"]),
            bytes.fromhex(head["context"]),
        )
    except (KeyError, ValueError) as exc:
        raise RecordError(f"bad ceremony header: {exc}", 1) from None
    if canonical(tr.records[0]) != canonical(head):
        raise RecordError("ceremony header is not canonical", 1)
    return tr


def _tamper(group: GroupParams, bundle: ShareBundle) -> ShareBundle:
    """Multiply the third committed share (or the last if n < 3) by g."""
    k = min(2, bundle.n - 1)
    v = list(bundle.commitments)
    v[k] = group.mul(v[k], group.g)
    return ShareBundle(bundle.dealer, bundle.encrypted, tuple(v), bundle.proofs, bundle.t, bundle.n)


def _liveness_report(reason: str, beh: Mapping[int, str], n: int, t: int, **extra) -> dict:
    offline = sorted(i for i in beh if beh[i] == "offline")
    report = {"reason": reason, "n": n, "t": t, "offline": len(offline),
              "offline_participants": ",".join(map(str, offline)), "tolerable_offline": n - t}
    report.update(extra)
    return report


def run_ceremony(
    group: GroupParams,
    keypairs: Sequence[Keypair],
    seed: bytes,
    t: int | None = None,
    policy: str = "onchain",
    behaviors: Mapping[int, str] | None = None,
    deadlines: tuple[int, int, int] = (1, 1, 1),
    context: bytes = b"",
) -> CeremonyTranscript:
    """Run the whole ceremony for participants ``1..n`` (``keypairs[i-1]``).

    ``behaviors`` maps a participant index to ``online`` (default),
    ``offline`` (registers, then never acts), ``late`` (deals after the
    distribution deadline) or ``cheat`` (deals a tampered bundle).

    Raises :class:`CeremonyFailed` with a liveness report when some accepted
    dealer's secret cannot be recovered or no dealer is accepted.
    """
    n = len(keypairs)
    t = default_threshold(n) if t is None else t
    behaviors = dict(behaviors or {})
    for i, b in behaviors.items():
        if b not in BEHAVIORS:
            raise ValueError(f"participant {i}: unknown behavior {b!r}")
    beh = {i: behaviors.get(i, "online") for i in range(1, n + 1)}
    acts = [i for i in range(1, n + 1) if beh[i] != "offline"]
    t_reg, t_com, t_scr = deadlines
    com_end = t_reg + t_com
    scr_end = com_end + t_scr

    tr = CeremonyTranscript(group, n, t, policy, deadlines, context)
    for i, kp in enumerate(keypairs, start=1):
        tr.append({"kind": "register", "phase": "register", "i": i, "round": 1, "pk": element_hex(group, kp.pk)})
    pks = [kp.pk for kp in keypairs]

    def decide(subject: Subject, ok: bool, late: bool, voters: Sequence[int], phase: str) -> str:
        if late:
            outcome, reason = REJECTED, "late"
        elif policy == "onchain":
            outcome, reason = (ACCEPTED, "verified") if ok else (REJECTED, "invalid")
        else:
            # honest voters all reach the same deterministic verdict, so
            # verification runs once per subject
            for voter in voters:
                if voter == subject.owner:
                    continue
                tr.append({"kind": "vote", "phase": phase, "voter": voter, "subject": subject.key(), "verdict": ok})
            outcome = tally_votes(tr.votes, n, subject)
            reason = "votes"
            if outcome == PENDING:
                outcome, reason = REJECTED, "timeout"
        tr.append({"kind": "verdict", "phase": phase, "subject": subject.key(), "outcome": outcome, "reason": reason})
        return outcome

    # distribution
    for j in range(1, n + 1):
        if beh[j] == "offline":
            continue
        s = group.hash_to_scalar(b"caucus/dealer-secret", derive_seed(seed, "secret", j))
        bundle = deal(group, s, pks, t, derive_seed(seed, "deal", j), dealer=j, context=context)
        if beh[j] == "cheat":
            bundle = _tamper(group, bundle)
        rnd = com_end + 1 if beh[j] == "late" else t_reg + 1
        tr.append(bundle_record(group, bundle, rnd))
        late = rnd > com_end
        ok = (not late) and verify_bundle(group, bundle, pks, tr.bundle_seeds[j], context)
        outcome = decide(Subject("bundle", j), ok, late, acts, "distribute")
        if outcome != ACCEPTED:
            tr.append({"kind": "forfeit", "phase": "distribute", "participant": j,
                       "reason": "late bundle" if late else "bundle rejected"})
    for j in range(1, n + 1):
        if j not in tr.bundles:
            tr.append({"kind": "forfeit", "phase": "distribute", "participant": j, "reason": "missed t_com"})

    # recovery
    for j in sorted(tr.accepted):
        bundle = tr.bundles[j]
        for i in acts:
            share = decrypt_share(group, bundle, keypairs[i - 1], i, pks, context=context)
            tr.append(share_record(group, share, com_end + 1))
            ok = verify_decrypted(group, share, pks[i - 1], bundle.encrypted[i - 1], context)
            decide(Subject("share", j, i), ok, False, acts, "recover")
        shares = tr.accepted_shares(j)
        if len(shares) < t:
            report = _liveness_report("liveness violation: too few decrypted shares", beh, n, t,
                                      dealer=j, shares=len(shares))
            log.warning("ceremony failed: %s", report)
            raise CeremonyFailed(report["reason"], tr, report)
        tr.append({"kind": "recovery", "phase": "recover", "dealer": j,
                   "secret": element_hex(group, reconstruct_secret(group, shares, t))})
    if tr.accepted:
        for i in range(1, n + 1):
            if i not in acts:
                tr.append({"kind": "forfeit", "phase": "recover", "participant": i, "reason": "missed t_scr"})

    if not tr.accepted:
        report = _liveness_report("liveness violation: no dealer accepted", beh, n, t)
        raise CeremonyFailed(report["reason"], tr, report)
    dealers = sorted(tr.accepted)
    R1 = combine_secrets(group, [tr.secrets[d] for d in dealers])
    tr.append({"kind": "combine", "phase": "combine", "R": R1.hex(),
               "dealers": ",".join(str(d) for d in dealers), "round": scr_end})
    return tr


@dataclass
class ReplayResult:
    ok: bool
    final: bytes | None = None
    divergence: str | None = None
    line: int | None = None
    round: int | None = None


def replay_ceremony(records: Sequence[Record]) -> ReplayResult:
    """Re-verify a ceremony transcript from scratch.

    Every verdict, recovered secret and the final ``R_1`` are recomputed
    from the public records and compared with what the transcript claims.
    """
    try:
        tr = _from_header(records)
    except RecordError as exc:
        return ReplayResult(False, divergence=str(exc), line=1)
    group = tr.group
    head = records[0]
    com_end = head["t_reg"] + head["t_com"]
    pks_list = lambda: [tr.pks[i] for i in range(1, tr.n + 1)]  # noqa: E731

    rnd = 1
    for lineno, r in enumerate(records[1:], start=2):
        # records without a round (votes, verdicts) belong to the last one seen
        rnd = r["round"] if isinstance(r.get("round"), int) else rnd
        try:
            tr.append(r)
            kind = r["kind"]
            if kind == "verdict":
                subj = Subject.parse(r["subject"])
                if subj.kind == "bundle":
                    b = tr.bundles[subj.dealer]
                    late = records_round(tr, subj.dealer) > com_end
                    ok = not late and verify_bundle(group, b, pks_list(), tr.bundle_seeds[subj.dealer], tr.context)
                else:
                    s = tr.shares[subj.dealer][subj.index]
                    b = tr.bundles[subj.dealer]
                    ok = verify_decrypted(group, s, tr.pks[subj.index], b.encrypted[subj.index - 1], tr.context)
                    late = False
                expected = _expected_outcome(tr, subj, ok, late)
                if expected != r["outcome"]:
                    return ReplayResult(False, divergence=f"verdict for {subj.key()} should be {expected}", line=lineno,
                                        round=rnd)
            elif kind == "recovery":
                S = reconstruct_secret(group, tr.accepted_shares(r["dealer"]), tr.t)
                if S != tr.secrets[r["dealer"]]:
                    return ReplayResult(False, line=lineno,
                                        divergence=f"recovered secret of dealer {r['dealer']} differs",
                                        round=rnd)
            elif kind == "combine":
                R = combine_secrets(group, [tr.secrets[d] for d in sorted(tr.accepted)])
                if R != tr.beacon:
                    return ReplayResult(False, divergence="combined beacon differs", line=lineno, round=rnd)
        except (KeyError, ValueError, IndexError, TypeError) as exc:
            return ReplayResult(False, divergence=f"{type(exc).__name__}: {exc}", line=lineno, round=rnd)
    if not tr.complete:
        return ReplayResult(False, final=tr.beacon, divergence="transcript incomplete", line=len(records),
                            round=rnd)
    return ReplayResult(True, final=tr.beacon)


def records_round(tr: CeremonyTranscript, dealer: int) -> int:
    for r in tr.records:
        if r["kind"] == "bundle" and r["dealer"] == dealer:
            return r["round"]
    raise KeyError(dealer)


def _expected_outcome(tr: CeremonyTranscript, subj: Subject, ok: bool, late: bool) -> str:
    if late:
        return REJECTED
    if tr.policy == "onchain":
        return ACCEPTED if ok else REJECTED
    outcome = tally_votes(tr.votes, tr.n, subj)
    return REJECTED if outcome == PENDING else outcome
