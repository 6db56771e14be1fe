import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caucus.beacon import init_beacon
from caucus.election import (
    ElectionParams,
    PrivateState,
    RegistrationError,
    RevealMsg,
    UndefinedTargetError,
    check_eligibility,
    check_reveal,
    compute_target,
    forfeit,
    pick_winner,
    register,
    replay_election,
    resolve_round,
    setup,
    start,
    target_bytes,
    verify_reveal,
)
from caucus.hashchain import HashChain, LayerReveal
from caucus.hashing import H_MAX


def seed(label: bytes) -> bytes:
    return hashlib.sha256(label).digest()


def test_setup():
    s = setup()
    assert s.n_rnd == 0 and s == setup()
    assert s.params.join_delay == 5
    with pytest.raises(UndefinedTargetError):
        compute_target(s.n_rnd)


def test_targets():
    assert compute_target(1) == 2**256 - 1
    assert target_bytes(2) == b"\x7f" + b"\xff" * 31
    assert compute_target(7) == (2**256 - 1) // 7
    # independent check of floor division: 7*T <= H_max < 7*(T+1)
    T = compute_target(7)
    assert 7 * T <= H_MAX < 7 * (T + 1)


def test_registration_delay():
    s = start(setup(ElectionParams(join_delay=2)), init_beacon())
    s = register(s, HashChain(seed(b"a"), 10).commitment, 1)
    reg = s.registrations[0]
    assert reg.rnd_joined == 1
    assert not s.is_eligible_at(reg, 2)
    assert s.is_eligible_at(reg, 3)
    assert not s.is_eligible_at(reg, 11)  # past the chain's end


def test_registration_rejections():
    s = setup()
    c = HashChain(seed(b"a"), 10).commitment
    with pytest.raises(RegistrationError):
        register(s, c, 0)
    s = register(s, c, 1)
    with pytest.raises(RegistrationError):
        register(s, c, 5)


def test_genesis_registration_is_eligible_at_round_one():
    s = register(setup(), HashChain(seed(b"a"), 10).commitment, 1)
    s = start(s, init_beacon())
    assert s.n_rnd == 1


def solo(rounds=10):
    chain = HashChain(seed(b"solo"), rounds)
    s = start(register(setup(), chain.commitment, 1), init_beacon())
    return s, PrivateState(chain.seed, rounds, 0, chain)


def test_solo_participant_always_eligible():
    s, priv = solo()
    for _ in range(10):
        msg = check_eligibility(priv, s)
        assert msg is not None
        ok, s2 = verify_reveal(s, msg)
        assert ok and s2.rnd == s.rnd + 1 and s2.beacon.R != s.beacon.R
        s = s2


def test_delay_gate_overrides_hash():
    s = start(setup(), init_beacon())
    chain = HashChain(seed(b"late"), 20)
    s = register(s, chain.commitment, 1)
    assert check_eligibility(PrivateState(chain.seed, 20, 0, chain), s) is None
    ok, reason = check_reveal(s, RevealMsg(0, chain.layer(1)))
    assert not ok and reason == "join delay"


def three_party(label=b"t", rounds=12):
    chains = [HashChain(seed(label + b"%d" % i), rounds) for i in range(3)]
    s = setup()
    for c in chains:
        s = register(s, c.commitment, 1)
    s = start(s, init_beacon())
    return s, chains


def brute_force_winner(R, layers):
    T = H_MAX // len(layers)
    elig = [i for i, h in enumerate(layers)
            if int.from_bytes(hashlib.sha256(b"caucus/elig" + bytes(a ^ b for a, b in zip(R, h))).digest(), "big") < T]
    if not elig:
        return None
    return min(elig, key=lambda i: (layers[i], i))


def test_three_party_matches_brute_force():
    s, chains = three_party()
    for _ in range(12):
        k = s.rnd
        layers = [c.h(k) for c in chains]
        expected = brute_force_winner(s.beacon.R, layers)
        msgs = [m for m in (check_eligibility(PrivateState(b"", 12, i, c), s) for i, c in enumerate(chains)) if m]
        for m in msgs:
            assert check_reveal(s, m) == (True, "ok")
        outcome, s = resolve_round(s, msgs)
        assert outcome.winner == expected
        assert outcome.skipped == (expected is None)


def test_reveal_rejections_do_not_mutate():
    s, chains = three_party(b"r")
    k = s.rnd
    losers = [i for i, c in enumerate(chains) if check_eligibility(PrivateState(b"", 12, i, c), s) is None]
    assert losers, "pick another seed: everyone eligible"
    i = losers[0]
    ok, s2 = verify_reveal(s, RevealMsg(i, chains[i].layer(k)))
    assert not ok and s2 is s
    ok, reason = check_reveal(s, RevealMsg(i, chains[i].layer(k)))
    assert reason == "not eligible"
    # layer from the wrong depth
    ok, reason = check_reveal(s, RevealMsg(0, LayerReveal(chains[0].h(k + 1), k)))
    assert not ok and reason == "layer mismatch"
    assert check_reveal(s, RevealMsg(0, chains[0].layer(k + 1)))[1] == "wrong round"
    assert check_reveal(s, RevealMsg(7, chains[0].layer(k)))[1] == "unknown participant"
    assert check_reveal(forfeit(s, 0), RevealMsg(0, chains[0].layer(k)))[1] == "forfeited"


def test_pick_winner_ordering():
    a = RevealMsg(0, LayerReveal(b"\x7a" + bytes(31), 1))
    b = RevealMsg(1, LayerReveal(b"\x03" + bytes(31), 1))
    assert pick_winner([a, b]) is b
    tie = RevealMsg(0, LayerReveal(b"\x03" + bytes(31), 1))
    assert pick_winner([b, tie]) is tie
    assert pick_winner([]) is None


@settings(max_examples=50)
@given(st.lists(st.binary(min_size=32, max_size=32), min_size=1, max_size=8))
def test_pick_winner_sort_oracle(hs):
    msgs = [RevealMsg(i, LayerReveal(h, 1)) for i, h in enumerate(hs)]
    assert pick_winner(msgs).i == sorted(range(len(hs)), key=lambda i: (hs[i], i))[0]


def test_timeout_path():
    s, _ = three_party()
    outcome, s2 = resolve_round(s, [])
    assert outcome.skipped and s2.rnd == s.rnd + 1
    assert s2.beacon.R == hashlib.sha256(b"caucus/timeout" + s.beacon.R).digest()
    pending, s3 = resolve_round(s, [], deadline_reached=False)
    assert pending.pending and s3 is s


def test_first_reveal_per_participant_counts():
    s, priv = solo()
    m = check_eligibility(priv, s)
    fake = RevealMsg(0, LayerReveal(bytes(32), s.rnd))
    outcome, _ = resolve_round(s, [m, fake])
    assert outcome.h == m.h


def test_strawman_predicate():
    p = ElectionParams(mode="strawman", strawman_width=16)
    chains = [HashChain(seed(b"w%d" % i), 30) for i in range(4)]
    s = setup(p)
    for c in chains:
        s = register(s, c.commitment, 1)
    s = start(s, init_beacon())
    assert s.target_for(0) == 1 << 14
    for i, c in enumerate(chains):
        msg = check_eligibility(PrivateState(b"", 30, i, c), s)
        assert (msg is not None) == (int.from_bytes(c.h(1)[:2], "big") < 1 << 14)


def test_weighted_targets():
    s = setup()
    s = register(s, HashChain(seed(b"a"), 5).commitment, 1, weight=3)
    s = register(s, HashChain(seed(b"b"), 5).commitment, 1, weight=1)
    s = start(s, init_beacon())
    assert s.target_for(0) == 3 * H_MAX // 4 and s.target_for(1) == H_MAX // 4


def test_chain_exhaustion_drops_out():
    s, priv = solo(rounds=3)
    for _ in range(3):
        _, s = verify_reveal(s, check_eligibility(priv, s))
    assert s.rnd == 4 and s.n_rnd == 0
    with pytest.raises(UndefinedTargetError):
        s.target_for(0)


def test_replay_election_from_simulation():
    from caucus.config import SimConfig
    from caucus.simulator import run_full

    sim = run_full(SimConfig(n=4, rounds=60, ceremony=False))
    res = replay_election(sim.events)
    assert res.ok and res.state.beacon.R == sim.state.beacon.R
    assert res.state.beacon.history == sim.state.beacon.history
    assert replay_election([]).ok is False
