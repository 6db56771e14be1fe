"""Command-line entry point: ``caucus <verb> [options]``.

Exit status is 0 on success, 1 when a verification or protocol check fails,
and 2 for usage, parse or missing-file errors. Errors are also written to
stderr as one JSON record.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .beacon import audit_withholding, history_to_csv
from .ceremony import replay_ceremony, run_ceremony
from .config import ConfigError, SimConfig, parse_config
from .election import replay_election
from .groups import element_hex, get_group, keygen
from .hashchain import LayerReveal
from .hashing import seed_from_int
from .pvss import CeremonyFailed
from .records import RecordError, dumps, read_records, write_records
from .simulator import LivenessViolation, grind_analysis, grind_seeds, run_full

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read(path: str) -> list[dict]:
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    return read_records(path)


# -- verbs ---------------------------------------------------------------------


def cmd_keygen(args) -> int:
    group = get_group(args.group)
    kp = keygen(group, seed_from_int(args.seed))
    rec = {"kind": "keypair", "group": group.name, "seed": args.seed,
           "sk": group.scalar_to_bytes(kp.sk).hex(), "pk": element_hex(group, kp.pk)}
    out = _out_dir(args.out) / "key.jsonl"
    write_records(out, [rec])
    print(json.dumps({"pk": rec["pk"], "path": str(out)}))
    return OK


def _read_roster(path: str) -> list[tuple[int, int, str]]:
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    rows = []
    for lineno, row in enumerate(csv.DictReader(io.StringIO(Path(path).read_text())), start=2):
        try:
            rows.append((int(row["index"]), int(row["seed"], 0), (row.get("behavior") or "online").strip()))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"roster line {lineno}: expected columns index,seed,behavior ({exc})") from None
    rows.sort()
    if [r[0] for r in rows] != list(range(1, len(rows) + 1)):
        raise UsageError("roster indices must be 1..n")
    return rows


def cmd_ceremony(args) -> int:
    group = get_group(args.group)
    roster = _read_roster(args.roster)
    kps = [keygen(group, seed_from_int(seed)) for _, seed, _ in roster]
    behaviors = {i: b for i, _, b in roster if b != "online"}
    out = _out_dir(args.out)
    try:
        tr = run_ceremony(group, kps, seed_from_int(args.seed), t=args.threshold or None,
                          policy=args.policy, behaviors=behaviors)
    except CeremonyFailed as exc:
        if exc.transcript is not None:
            write_records(out / "transcript.jsonl", exc.transcript.records)
        raise VerificationFailed(str(exc), report=exc.report) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_records(out / "transcript.jsonl", tr.records)
    print(json.dumps({"beacon": tr.beacon.hex(), "accepted": tr.accepted, "path": str(out / "transcript.jsonl")}))
    return OK


def cmd_simulate(args) -> int:
    if args.config:
        if not Path(args.config).is_file():
            raise UsageError(f"no such file: {args.config}")
        config = parse_config(args.config)
    else:
        config = SimConfig()
    overrides = {k: v for k, v in (("seed", args.seed), ("group", args.group), ("mode", args.mode),
                                   ("rounds", args.rounds)) if v is not None}
    config = replace(config, **overrides)
    out = _out_dir(args.out)
    try:
        sim = run_full(config)
    except LivenessViolation as exc:
        if exc.transcript is not None:
            write_records(out / "transcript.jsonl", exc.transcript.records)
        raise VerificationFailed(str(exc), report=exc.report) from None
    metrics = sim.metrics()
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(metrics.csv_rows())
    (out / "metrics.csv").write_text(buf.getvalue())
    write_records(out / "summary.jsonl", [metrics.summary()])
    write_records(out / "events.jsonl", sim.events)
    write_records(out / "disclosures.jsonl", sim.disclosures())
    (out / "beacon.csv").write_text(history_to_csv(sim.state.beacon.history))
    if sim.transcript is not None:
        write_records(out / "transcript.jsonl", sim.transcript.records)
    print(json.dumps(metrics.summary()))
    return OK


def cmd_grind(args) -> int:
    res = grind_seeds(args.rnd_max, args.trials, args.p, seed_from_int(args.seed), args.width)
    # default threshold: three above the mean
    k = args.k if args.k is not None else int(Fraction(args.p) * args.rnd_max) + 3
    an = grind_analysis(args.rnd_max, args.p, k)
    print(json.dumps({"m_best": res.m_best, "best_seed": res.best_seed.hex(), "k": k,
                      "alpha": an.alpha, "expected_trials": an.expected_trials,
                      "successes": sum(m > k for m in res.scores), "trials": args.trials}))
    return OK


def cmd_audit(args) -> int:
    events = _read(args.events)
    disclosures = _read(args.disclosures)
    rep = replay_election(events)
    if not rep.ok:
        raise VerificationFailed("event log does not replay", divergence=rep.divergence, round=rep.round,
                                 line=rep.line)
    layers: dict[int, list[LayerReveal]] = {}
    for lineno, d in enumerate(disclosures, start=1):
        try:
            layers.setdefault(d["i"], []).append(LayerReveal(bytes.fromhex(d["h"]), d["round"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"disclosure line {lineno}: {exc}") from None
    state = rep.state
    commitments = {r.index: r.commitment for r in state.registrations}
    report = audit_withholding(state.beacon.history, commitments, layers, rep.targets, rep.submissions)
    write_records(Path(args.out), report.to_records())
    print(json.dumps({"findings": len(report.findings), "unauditable": sorted(report.unauditable)}))
    return OK


def cmd_replay(args) -> int:
    records = _read(args.log)
    if records and records[0].get("kind") == "ceremony":
        res = replay_ceremony(records)
        if not res.ok:
            raise VerificationFailed("mismatch", divergence=res.divergence, round=res.round, line=res.line)
        print(json.dumps({"status": "match", "kind": "ceremony", "final": res.final.hex()}))
        return OK
    res = replay_election(records)
    if not res.ok:
        raise VerificationFailed("mismatch", divergence=res.divergence, round=res.round, line=res.line)
    print(json.dumps({"status": "match", "kind": "election", "round": res.state.rnd,
                      "final": res.state.beacon.R.hex()}))
    return OK


# -- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="caucus", description="Caucus leader election toolkit")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, seed_default=0, group=True):
        sp.add_argument("--seed", type=_u64, default=seed_default)
        if group:
            sp.add_argument("--group", choices=("toy", "strong"), default="strong")

    sp = sub.add_parser("keygen", help="derive a keypair from a seed")
    common(sp)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_keygen)

    sp = sub.add_parser("ceremony", help="run the beacon-initialization ceremony for a roster")
    common(sp)
    sp.add_argument("--roster", required=True, help="CSV with columns index,seed,behavior")
    sp.add_argument("--threshold", type=int, default=0)
    sp.add_argument("--policy", choices=("onchain", "voting"), default="onchain")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_ceremony)

    sp = sub.add_parser("simulate", help="run one simulation")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=_u64)
    sp.add_argument("--group", choices=("toy", "strong"))
    sp.add_argument("--mode", choices=("strawman", "caucus"))
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("grind", help="straw-man grinding demonstration")
    common(sp, group=False)
    sp.add_argument("--rnd-max", type=int, default=32)
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--p", default="1/4")
    sp.add_argument("--width", type=int, default=16)
    sp.add_argument("--k", type=int)
    sp.add_argument("--mode", choices=("strawman",), default="strawman")
    sp.set_defaults(func=cmd_grind)

    sp = sub.add_parser("audit", help="check disclosed layers for withheld wins")
    sp.add_argument("--events", required=True)
    sp.add_argument("--disclosures", required=True)
    sp.add_argument("--out", required=True, help="output path for the audit report")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("replay", help="re-derive the final state of an event log or transcript")
    sp.add_argument("log")
    sp.set_defaults(func=cmd_replay)
    return p


def _error(kind: str, message: str, **detail) -> None:
    rec = {"kind": "error", "error": kind, "message": message}
    rec.update({k: v for k, v in detail.items() if v is not None and not isinstance(v, dict)})
    for k, v in detail.items():
        if isinstance(v, dict):
            rec.update({f"{k}_{kk}": vv for kk, vv in v.items() if isinstance(vv, (str, int, bool))})
    sys.stderr.write(dumps([rec]))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            _error("usage", "invalid arguments")
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except VerificationFailed as exc:
        _error("verification", str(exc), **exc.detail)
        return FAILED
    except (UsageError, ConfigError, RecordError, FileNotFoundError, ValueError) as exc:
        _error("parse", str(exc))
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
