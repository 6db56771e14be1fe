"""Simulation configuration and its plain-text file format.

Config files are ``key = value`` lines; ``#`` starts a comment. Every key is
optional and unknown keys are rejected, so a typo never silently falls back
to a default. Recognized keys (defaults in brackets)::

    n               participants [10]
    adversaries     how many of them are adversarial, < n [0]
    strategy        honest | offline | withholder | grinder | grinder(<trials>) [honest]
    grind_trials    seeds a grinder tries per registration [2000]
    grind_horizon   rounds a grinder scores each seed over; 0 = whole run [0]
    rounds          election rounds to simulate [100]
    rnd_max         hash-chain length; 0 = rounds + join_delay + 1 [0]
    join_delay      rounds before a registration becomes eligible (x) [5]
    group           toy | strong [strong]
    seed            master seed, unsigned 64-bit [0]
    mode            caucus | strawman [caucus]
    ceremony        true | false; false uses the constant-zero beacon [true]
    threshold       PVSS threshold t; 0 = ceil(n/2) [0]
    policy          onchain | voting [onchain]
    deposit         minimum registration deposit [1]
    timeout         rounds before a winnerless round is skipped [1]
    strawman_width  digest bits compared in straw-man mode [16]
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

STRATEGIES = ("honest", "offline", "withholder", "grinder")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class SimConfig:
    n: int = 10
    adversaries: int = 0
    strategy: str = "honest"
    grind_trials: int = 2000
    grind_horizon: int = 0
    rounds: int = 100
    rnd_max: int = 0
    join_delay: int = 5
    group: str = "strong"
    seed: int = 0
    mode: str = "caucus"
    ceremony: bool = True
    threshold: int = 0
    policy: str = "onchain"
    deposit: int = 1
    timeout: int = 1
    strawman_width: int = 16

    def __post_init__(self):
        validate(self)

    @property
    def chain_length(self) -> int:
        return self.rnd_max or self.rounds + self.join_delay + 1

    @property
    def t(self) -> int:
        return self.threshold or -(-self.n // 2)

    @property
    def honest(self) -> list[int]:
        return list(range(self.n - self.adversaries))

    @property
    def adversarial(self) -> list[int]:
        return list(range(self.n - self.adversaries, self.n))


def validate(c: SimConfig) -> None:
    def bad(key: str, msg: str):
        raise ConfigError(msg, key)

    if c.n < 1:
        bad("n", "need at least one participant")
    if not 0 <= c.adversaries < c.n:
        bad("adversaries", f"must satisfy 0 <= adversaries < n (n={c.n})")
    if c.strategy not in STRATEGIES:
        bad("strategy", f"expected one of {STRATEGIES}")
    if c.grind_trials < 1:
        bad("grind_trials", "must be >= 1")
    if c.grind_horizon < 0:
        bad("grind_horizon", "must be >= 0")
    if c.rounds < 0:
        bad("rounds", "must be >= 0")
    if c.join_delay < 1:
        bad("join_delay", "must be >= 1")
    if c.rnd_max and c.rnd_max < 1:
        bad("rnd_max", "must be >= 1")
    if c.group not in ("toy", "strong"):
        bad("group", "expected toy or strong")
    if not 0 <= c.seed < 2**64:
        bad("seed", "must be an unsigned 64-bit integer")
    if c.mode not in ("caucus", "strawman"):
        bad("mode", "expected caucus or strawman")
    if c.threshold and not 1 <= c.threshold <= c.n:
        bad("threshold", f"must be in [1, n={c.n}]")
    if c.policy not in ("onchain", "voting"):
        bad("policy", "expected onchain or voting")
    if c.deposit < 0:
        bad("deposit", "must be >= 0")
    if c.timeout < 1:
        bad("timeout", "must be >= 1")
    if not 1 <= c.strawman_width <= 256:
        bad("strawman_width", "must be in [1, 256]")


_TYPES = {f.name: f.type for f in fields(SimConfig)}
_GRINDER = re.compile(r"^grinder\((\d+)\)$")


def _coerce(key: str, raw: str, line: int):
    typ = _TYPES[key]
    if typ in ("int", int):
        try:
            return int(raw, 0)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}", key, line) from None
    if typ in ("bool", bool):
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}", key, line)
    return raw


def parse_config_text(text: str) -> SimConfig:
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, raw = (part.strip() for part in line.partition("="))
        if key not in _TYPES:
            raise ConfigError("unknown key", key, lineno)
        if key in values:
            raise ConfigError("duplicate key", key, lineno)
        if key == "strategy" and (m := _GRINDER.match(raw)):
            values["strategy"] = "grinder"
            values["grind_trials"] = int(m.group(1))
            lines["grind_trials"] = lineno
        else:
            values[key] = _coerce(key, raw, lineno)
        lines[key] = lineno
    try:
        return SimConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.key, lines.get(exc.key)) from None


def parse_config(path: str | Path) -> SimConfig:
    return parse_config_text(Path(path).read_text())


def dump_config(c: SimConfig) -> str:
    out = []
    for f in fields(SimConfig):
        v = getattr(c, f.name)
        out.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(out) + "\n"


def with_overrides(c: SimConfig, **kw) -> SimConfig:
    return replace(c, **{k: v for k, v in kw.items() if v is not None})
