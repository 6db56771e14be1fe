"""Line-delimited flat records: the on-disk unit of audit and replay.

Each line is one JSON object whose values are strings, ints or bools.
Cryptographic fields are hex strings; lists of them are comma-joined.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

Record = dict


class RecordError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def canonical(record: Record) -> bytes:
    return json.dumps(record, sort_keys=True, separators=(",", ":")).encode()


def check_flat(record: Record) -> None:
    for k, v in record.items():
        if not isinstance(k, str):
            raise RecordError(f"non-string key {k!r}")
        if v is not None and not isinstance(v, (str, int, bool)):
            raise RecordError(f"field {k!r} is not flat: {type(v).__name__}")


def dumps(records: Iterable[Record]) -> str:
    lines = []
    for r in records:
        check_flat(r)
        lines.append(canonical(r).decode())
    return "".join(line + "\n" for line in lines)


def loads(text: str) -> list[Record]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(f"malformed record: {exc.msg}", lineno) from None
        if not isinstance(rec, dict) or "kind" not in rec:
            raise RecordError("record must be an object with a 'kind' field", lineno)
        check_flat(rec)
        out.append(rec)
    return out


def write_records(path: str | Path, records: Iterable[Record]) -> None:
    Path(path).write_text(dumps(records))


def read_records(path: str | Path) -> list[Record]:
    return loads(Path(path).read_text())
