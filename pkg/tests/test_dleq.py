import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caucus.dleq import DleqProof, dleq_prove, dleq_verify
from caucus.groups import STRONG, TOY


def statement(group, w):
    return group.g, group.exp(group.g, w), group.h, group.exp(group.h, w)


@pytest.mark.parametrize("group", [TOY, STRONG], ids=["toy", "strong"])
def test_zero_witness(group):
    b1, y1, b2, y2 = statement(group, 0)
    assert y1 == y2 == group.identity
    proof = dleq_prove(group, b1, y1, b2, y2, 0, b"n")
    assert dleq_verify(group, b1, y1, b2, y2, proof)


@settings(max_examples=500, deadline=None)
@given(w=st.integers(0, 100), nonce=st.binary(min_size=1, max_size=8), tag=st.binary(max_size=8))
def test_completeness_toy(w, nonce, tag):
    b1, y1, b2, y2 = statement(TOY, w)
    assert dleq_verify(TOY, b1, y1, b2, y2, dleq_prove(TOY, b1, y1, b2, y2, w, nonce, tag))


@settings(max_examples=20, deadline=None)
@given(w=st.integers(0, STRONG.q - 1))
def test_completeness_strong(w):
    b1, y1, b2, y2 = statement(STRONG, w)
    assert dleq_verify(STRONG, b1, y1, b2, y2, dleq_prove(STRONG, b1, y1, b2, y2, w, b"n"))


def test_wrong_witness_toy():
    # proof for w checked against the statement for w+1; 1/q floor per trial
    spurious = 0
    for k in range(50):
        w = k % 100 + 1
        b1, y1, b2, y2 = statement(TOY, w)
        proof = dleq_prove(TOY, b1, y1, b2, y2, w, b"s%d" % k)
        spurious += dleq_verify(TOY, *statement(TOY, w + 1), proof)
    assert spurious <= 2


def test_mixed_statement_rejected_strong():
    b1, y1, b2, _ = statement(STRONG, 5)
    y2 = STRONG.exp(STRONG.h, 6)
    # a dishonest prover can still run the algorithm; verification must fail
    proof = dleq_prove(STRONG, b1, y1, b2, y2, 5, b"x")
    assert not dleq_verify(STRONG, b1, y1, b2, y2, proof)


@pytest.mark.parametrize("group", [TOY, STRONG], ids=["toy", "strong"])
def test_perturbations(group):
    w = 17
    b1, y1, b2, y2 = statement(group, w)
    p = dleq_prove(group, b1, y1, b2, y2, w, b"n", b"ctx")
    assert dleq_verify(group, b1, y1, b2, y2, p)
    assert not dleq_verify(group, b1, y1, b2, y2, DleqProof(p.e, (p.z + 1) % group.q, p.tag))
    assert not dleq_verify(group, b1, y1, b2, y2, DleqProof((p.e + 1) % group.q, p.z, p.tag))
    assert not dleq_verify(group, b1, y1, b2, y2, DleqProof(p.e, p.z, b"other"))
    assert not dleq_verify(group, b1, group.mul(y1, group.g), b2, y2, p)


def test_non_member_rejected():
    b1, y1, b2, y2 = statement(TOY, 3)
    p = dleq_prove(TOY, b1, y1, b2, y2, 3, b"n")
    assert not dleq_verify(TOY, b1, 2, b2, y2, p)  # 2 lies outside the order-101 subgroup
    assert not dleq_verify(TOY, b1, y1, b2, y2, DleqProof(p.e, TOY.q, p.tag))


@pytest.mark.parametrize("group", [TOY, STRONG], ids=["toy", "strong"])
def test_proof_encoding_roundtrip(group):
    b1, y1, b2, y2 = statement(group, 9)
    p = dleq_prove(group, b1, y1, b2, y2, 9, b"n", b"t")
    data = p.to_bytes(group)
    assert len(data) == 2 * group.scalar_size
    assert DleqProof.from_bytes(group, data, b"t") == p
    assert p.hex(group) == data.hex()


def test_nonce_depends_on_statement():
    # same nonce seed, different witnesses: the commitments must differ
    p1 = dleq_prove(STRONG, *statement(STRONG, 1), 1, b"same")
    p2 = dleq_prove(STRONG, *statement(STRONG, 2), 2, b"same")
    assert p1.e != p2.e
