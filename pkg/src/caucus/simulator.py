"""Deterministic multi-party simulation of the election.

Rounds are synchronous: every participant decides on its reveal, the reveals
are checked, then the round is resolved. A master seed fixes everything:
chain seeds, ceremony keys and secrets, and grinder candidates are all
derived from it, so two runs with the same config are bit-identical.

Adversarial behaviors (applied to the last ``adversaries`` participants):

* ``offline``: absent from the ceremony and never reveals.
* ``withholder``: takes part in the ceremony but never reveals, even when
  eligible. Every such round is counted so the audit can be checked.
* ``grinder``: registers only once the beacon exists, trying
  ``grind_trials`` seeds and keeping the one predicted to win most often over
  its horizon. In straw-man mode the prediction is exact; in caucus mode the
  best it can do is assume the beacon only ever times out from its current
  value. It then sits out the join delay like everyone else.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

from .beacon import AuditReport, audit_withholding, eligibility_digest, init_beacon
from .ceremony import CeremonyTranscript, run_ceremony
from .config import SimConfig
from .election import (
    STRAWMAN,
    ElectionParams,
    PrivateState,
    PublicState,
    beacon_init_record,
    check_eligibility,
    check_reveal,
    eligibility_value,
    genesis_record,
    outcome_record,
    register,
    register_record,
    resolve_round,
    reveal_record,
    setup,
    start,
)
from .groups import get_group, keygen
from .hashchain import HashChain, LayerReveal
from .hashing import H_MAX, TAG_CHAIN, TAG_ELIG, TAG_TIMEOUT, derive_seed, seed_from_int, tagged_hash
from .pvss import CeremonyFailed
from .records import Record
from .stats import InsufficientDataError, accuracy_base_rate, binomial_tail, expected_grind_trials, fairness_statistic

log = logging.getLogger(__name__)


class LivenessViolation(RuntimeError):
    """The run cannot proceed; ``report`` says why."""

    def __init__(self, report: dict, transcript: CeremonyTranscript | None = None):
        super().__init__(report.get("reason", "liveness violation"))
        self.report = report
        self.transcript = transcript


@dataclass
class SimulationMetrics:
    n: int
    rounds: int
    wins: list[int]
    skips: int
    roles: list[str]
    ceremony_completed: bool
    chi2: float | None = None
    p_value: float | None = None
    grinder_m_best: int | None = None
    grinder_m_expected: float | None = None
    grinder_wins: int | None = None
    grinder_round_wins: int | None = None
    grinder_eligible: int | None = None
    prediction_advantage: float | None = None
    audit_findings: int = 0
    withheld: int = 0
    final_R: str = ""

    @property
    def total_wins(self) -> int:
        return sum(self.wins)

    def win_share(self, i: int) -> float:
        return self.wins[i] / self.total_wins if self.total_wins else 0.0

    @property
    def grinder_share(self) -> float | None:
        if not self.grinder_round_wins:
            return None
        return self.grinder_wins / self.grinder_round_wins

    def csv_rows(self) -> list[list]:
        rows = [["participant", "role", "wins", "share"]]
        for i in range(self.n):
            rows.append([i, self.roles[i], self.wins[i], f"{self.win_share(i):.6f}"])
        return rows

    def summary(self) -> dict:
        out = {
            "kind": "summary",
            "n": self.n,
            "rounds": self.rounds,
            "wins_total": self.total_wins,
            "skips": self.skips,
            "ceremony_completed": self.ceremony_completed,
            "audit_findings": self.audit_findings,
            "withheld": self.withheld,
            "final_R": self.final_R,
        }
        for key in ("chi2", "p_value", "grinder_m_best", "grinder_m_expected", "grinder_wins",
                    "grinder_round_wins", "grinder_eligible", "prediction_advantage"):
            v = getattr(self, key)
            if v is not None:
                out[key] = repr(v) if isinstance(v, float) else v
        return out


@dataclass
class GrindStats:
    m_best: int
    m_expected: float
    first_round: int
    horizon: int


def _role(config: SimConfig, owner: int) -> str:
    return config.strategy if owner in config.adversarial else "honest"


class Simulation:
    """One isolated, replayable run. Call :meth:`initialize`, then :meth:`step`."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.master = seed_from_int(config.seed)
        self.group = get_group(config.group)
        self.params = ElectionParams(config.join_delay, config.deposit, config.timeout, config.mode,
                                     config.strawman_width)
        self.state: PublicState = setup(self.params)
        self.events: list[Record] = [genesis_record(self.params)]
        self.transcript: CeremonyTranscript | None = None
        self.roles = [_role(config, o) for o in range(config.n)]
        self.chains: dict[int, HashChain] = {}
        self.priv: dict[int, PrivateState] = {}
        self.owner_of: dict[int, int] = {}
        self.wins = [0] * config.n
        self.skips = 0
        self.withheld: list[tuple[int, int]] = []
        self.targets_log: dict[int, dict[int, int]] = {}
        self.submissions: dict[int, set[int]] = {}
        self.beacon_at: dict[int, bytes] = {}
        self.grind: GrindStats | None = None
        self.grinder_wins = 0
        self.grinder_round_wins = 0
        self.grinder_eligible = 0
        self.audit: AuditReport | None = None
        self.initialized = False

    # -- setup -------------------------------------------------------------

    def _register(self, owner: int, chain: HashChain) -> None:
        self.state = register(self.state, chain.commitment, self.config.deposit)
        idx = self.state.registrations[-1].index
        self.chains[owner] = chain
        self.priv[owner] = PrivateState(chain.seed, chain.rnd_max, idx, chain)
        self.owner_of[idx] = owner
        self.events.append(register_record(self.state.registrations[-1], self.state.rnd))

    def initialize(self) -> None:
        c = self.config
        late = [o for o in c.adversarial if c.strategy == "grinder"]
        for owner in range(c.n):
            if owner not in late:
                self._register(owner, HashChain(derive_seed(self.master, "chain", owner), c.chain_length))
        if c.ceremony:
            kps = [keygen(self.group, derive_seed(self.master, "key", o)) for o in range(c.n)]
            behaviors = {o + 1: "offline" for o in c.adversarial if c.strategy == "offline"}
            try:
                self.transcript = run_ceremony(self.group, kps, derive_seed(self.master, "ceremony"), t=c.t,
                                               policy=c.policy, behaviors=behaviors,
                                               context=b"sim|%d" % c.seed)
            except CeremonyFailed as exc:
                raise LivenessViolation(exc.report, exc.transcript) from exc
            beacon = init_beacon("ceremony", self.transcript)
        else:
            beacon = init_beacon("constant_zero")
        self.state = start(self.state, beacon)
        self.events.append(beacon_init_record(beacon))
        for owner in late:
            self._register(owner, self._grind(owner))
        self.initialized = True

    def _grind(self, owner: int) -> HashChain:
        """Pick the candidate chain with the most predicted wins over the horizon."""
        c = self.config
        st = self.state
        first = st.rnd + c.join_delay
        last = min(c.chain_length, c.rounds)
        if c.grind_horizon:
            last = min(last, first + c.grind_horizon - 1)
        horizon = list(range(first, last + 1))
        n_after = len(st.registrations) + 1
        sha = hashlib.sha256
        if c.mode == STRAWMAN:
            shift = 256 - c.strawman_width
            thr = (1 << c.strawman_width) // n_after
            p = thr / (1 << c.strawman_width)

            def predicted(h: bytes, r: int) -> bool:
                return (int.from_bytes(h, "big") >> shift) < thr
        else:
            thr = H_MAX // n_after
            p = thr / 2**256
            # only deterministic forecast available: every round times out
            forecast = {}
            R = st.beacon.R
            for r in range(st.rnd, last + 1):
                forecast[r] = int.from_bytes(R, "big")
                R = tagged_hash(TAG_TIMEOUT, R)

            def predicted(h: bytes, r: int) -> bool:
                x = (forecast[r] ^ int.from_bytes(h, "big")).to_bytes(32, "big")
                return int.from_bytes(sha(TAG_ELIG + x).digest(), "big") < thr

        best, best_score = None, -1
        L = c.chain_length
        for trial in range(c.grind_trials):
            seed = derive_seed(self.master, "grind", owner, trial)
            # layers[j] = H^j(seed); round r uses layers[L - r]
            layers = [seed]
            x = seed
            for _ in range(L):
                x = sha(TAG_CHAIN + x).digest()
                layers.append(x)
            score = sum(1 for r in horizon if predicted(layers[L - r], r))
            if score > best_score:
                best, best_score = seed, score
        self.grind = GrindStats(best_score, len(horizon) * p, first, len(horizon))
        return HashChain(best, L)

    # -- rounds --------------------------------------------------------------

    def step(self) -> None:
        if not self.initialized:
            self.initialize()
        st = self.state
        rnd = st.rnd
        x = self.params.join_delay
        self.beacon_at[rnd] = st.beacon.R
        eligible = st.eligible()
        n_rnd = len(eligible)
        self.targets_log[rnd] = st.targets() if n_rnd else {}

        reveals = []
        for reg in eligible:
            owner = self.owner_of[reg.index]
            msg = check_eligibility(self.priv[owner], st)
            if msg is None:
                continue
            role = self.roles[owner]
            if role == "grinder" and self.grind.first_round <= rnd < self.grind.first_round + self.grind.horizon:
                self.grinder_eligible += 1
            if role == "offline":
                continue
            if role == "withholder":
                self.withheld.append((reg.index, rnd))
                continue
            reveals.append(msg)

        accepted = []
        for m in reveals:
            ok, reason = check_reveal(st, m)
            self.events.append(reveal_record(m, ok, reason))
            if ok:
                accepted.append(m)
        self.submissions[rnd] = {m.i for m in accepted}

        outcome, new = resolve_round(st, accepted, deadline_reached=True)
        if outcome.pending:
            raise RuntimeError(f"round {rnd} stalled")
        grinder_live = self.grind is not None and rnd >= self.grind.first_round
        if outcome.winner is not None:
            reg = st.registrations[outcome.winner]
            if rnd - reg.rnd_joined < x:
                raise RuntimeError(f"participant {outcome.winner} won round {rnd} inside its join delay")
            owner = self.owner_of[outcome.winner]
            self.wins[owner] += 1
            if grinder_live:
                self.grinder_round_wins += 1
                if self.roles[owner] == "grinder":
                    self.grinder_wins += 1
        else:
            self.skips += 1
        self.events.append(outcome_record(outcome, new, n_rnd))
        self.state = new

    def run_audit(self) -> AuditReport:
        """Everyone discloses their layers for the rounds they were eligible in."""
        commitments = {r.index: r.commitment for r in self.state.registrations}
        layers: dict[int, list[LayerReveal]] = {}
        for k, targets in self.targets_log.items():
            for idx in targets:
                layers.setdefault(idx, []).append(self.chains[self.owner_of[idx]].layer(k))
        history = self.state.beacon.history
        self.audit = audit_withholding(history, commitments, layers, self.targets_log, self.submissions)
        return self.audit

    def disclosures(self) -> list[Record]:
        out = []
        for k, targets in sorted(self.targets_log.items()):
            for idx in sorted(targets):
                out.append({"kind": "disclosure", "i": idx, "round": k,
                            "h": self.chains[self.owner_of[idx]].h(k).hex(), "target": f"{targets[idx]:x}"})
        return out

    def metrics(self) -> SimulationMetrics:
        c = self.config
        m = SimulationMetrics(
            n=c.n,
            rounds=c.rounds,
            wins=list(self.wins),
            skips=self.skips,
            roles=list(self.roles),
            ceremony_completed=self.transcript is not None and self.transcript.complete,
            withheld=len(self.withheld),
            final_R=self.state.beacon.R.hex(),
        )
        try:
            m.chi2, m.p_value = fairness_statistic(self.wins, [1 / c.n] * c.n)
        except (InsufficientDataError, ValueError):
            pass
        if self.grind is not None:
            m.grinder_m_best = self.grind.m_best
            m.grinder_m_expected = self.grind.m_expected
            m.grinder_wins = self.grinder_wins
            m.grinder_round_wins = self.grinder_round_wins
            m.grinder_eligible = self.grinder_eligible
        if self.audit is None:
            self.run_audit()
        m.audit_findings = len(self.audit.findings)
        return m


def run_simulation(config: SimConfig) -> SimulationMetrics:
    sim = Simulation(config)
    sim.initialize()
    for _ in range(config.rounds):
        sim.step()
    return sim.metrics()


def run_full(config: SimConfig) -> Simulation:
    """Like :func:`run_simulation` but returns the simulation for its logs."""
    sim = Simulation(config)
    sim.initialize()
    for _ in range(config.rounds):
        sim.step()
    sim.run_audit()
    return sim


def trial_seed(master: int, trial: int) -> int:
    return int.from_bytes(derive_seed(seed_from_int(master), "trial", trial)[:8], "big")


def run_trials(config: SimConfig, trials: int, workers: int = 1) -> list[SimulationMetrics]:
    """Independent trials with seeds derived from ``config.seed``; order is stable."""
    configs = [replace(config, seed=trial_seed(config.seed, k)) for k in range(trials)]
    if workers <= 1:
        return [run_simulation(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_simulation, configs))


# -- straw-man grinding (standalone) ------------------------------------------


@dataclass
class GrindResult:
    best_seed: bytes
    m_best: int
    scores: list[int] = field(repr=False)
    threshold: int = 0


def _exact_threshold(p: Fraction | float | str, width: int) -> int:
    p = Fraction(p)
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    thr = p * (1 << width)
    if thr.denominator != 1:
        raise ValueError(f"p={p} is not exact at {width} bits")
    return int(thr)


def strawman_m(seed: bytes, rnd_max: int, threshold: int, width: int = 16) -> int:
    """``M(s)``: rounds 1..rnd_max whose straw-man layer is below the target."""
    sha = hashlib.sha256
    shift = 256 - width
    x = seed
    m = 0
    for _ in range(rnd_max):
        # visits H^0(s) .. H^(rnd_max-1)(s), i.e. h_rnd for rnd = rnd_max .. 1
        if (int.from_bytes(x, "big") >> shift) < threshold:
            m += 1
        x = sha(TAG_CHAIN + x).digest()
    return m


def grind_seeds(rnd_max: int, trials: int, p, rng_seed: bytes, width: int = 16) -> GrindResult:
    """Try ``trials`` seeds and keep the one with the largest ``M(s)``."""
    thr = _exact_threshold(p, width)
    best, best_m, scores = b"", -1, []
    for trial in range(trials):
        seed = derive_seed(rng_seed, "grind", trial)
        m = strawman_m(seed, rnd_max, thr, width)
        scores.append(m)
        if m > best_m:
            best, best_m = seed, m
    return GrindResult(best, best_m, scores, thr)


@dataclass
class GrindAnalysis:
    alpha: float
    expected_trials: float
    expected_hashes: float


def grind_analysis(rnd_max: int, p, k: int) -> GrindAnalysis:
    """``alpha = Pr[M > k]`` for ``M ~ Bin(rnd_max, p)`` and the cost to hit it."""
    alpha = binomial_tail(rnd_max, Fraction(p), k)
    trials = expected_grind_trials(alpha)
    return GrindAnalysis(alpha, trials, rnd_max * trials)


# -- prediction advantage ------------------------------------------------------


@dataclass
class PredictionResult:
    accuracy: float
    base_rate: float
    advantage: float
    sigma: float
    rounds: int
    eligible_rate: float


Observer = Callable[["Simulation", int], bool]


def _observer(strategy: str, lead: int) -> Observer:
    def never(sim: Simulation, idx: int) -> bool:
        return False

    def public(sim: Simulation, idx: int) -> bool:
        # best public stand-in for h_rnd: the latest layer this participant has
        # revealed, or the chain head
        st = sim.state
        reg = st.registrations[idx]
        known = reg.checkpoint[1] if reg.checkpoint else reg.commitment.head
        return eligibility_value(st, known) < st.target_for(idx)

    def self_ahead(sim: Simulation, idx: int) -> bool:
        # the chain owner predicting ``lead`` rounds ahead, before R_rnd is fixed
        st = sim.state
        h = sim.chains[sim.owner_of[idx]].h(st.rnd)
        if st.params.mode == STRAWMAN:
            return eligibility_value(st, h) < st.target_for(idx)
        R_old = sim.beacon_at.get(st.rnd - lead, sim.beacon_at[min(sim.beacon_at)])
        return eligibility_digest(R_old, h) < st.target_for(idx)

    table = {"never": never, "public": public, "self": self_ahead}
    try:
        return table[strategy]
    except KeyError:
        raise ValueError(f"unknown observer strategy {strategy!r}") from None


def prediction_advantage(
    config: SimConfig, probe_rounds: int, strategy: str = "public", owner: int | None = None, lead: int | None = None
) -> PredictionResult:
    """Empirical advantage of an observer guessing one participant's eligibility.

    Advantage is ``|accuracy - base|`` where ``base`` is the accuracy of a
    guesser that says yes as often as this observer but independently of the
    truth. The ``self`` strategy is the participant itself predicting ``lead``
    rounds ahead (default: the join delay).
    """
    if config.n - config.adversaries < 2 and strategy != "self":
        raise ValueError("need at least two honest participants")
    sim = Simulation(replace(config, rounds=probe_rounds))
    sim.initialize()
    if owner is None:
        owner = config.adversarial[0] if strategy == "self" and config.adversaries else 0
    observe = _observer(strategy, config.join_delay if lead is None else lead)
    guesses, truths = [], []
    for _ in range(probe_rounds):
        sim.beacon_at[sim.state.rnd] = sim.state.beacon.R
        st = sim.state
        idx = sim.priv[owner].index
        if st.is_eligible_at(st.registrations[idx]):
            truth = check_eligibility(sim.priv[owner], st) is not None
            guesses.append(observe(sim, idx))
            truths.append(truth)
        sim.step()
    acc, base, sigma = accuracy_base_rate(guesses, truths)
    return PredictionResult(acc, base, abs(acc - base), sigma, len(truths), sum(truths) / len(truths))


def fairness_tolerance(p: float, rounds: int, k: float = 3.0) -> float:
    return k * math.sqrt(p * (1 - p) / rounds)
