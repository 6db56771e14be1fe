"""SCRAPE-style publicly verifiable secret sharing.

Generator roles: ``pk_i = h^sk_i``, committed shares ``v_i = g^p(i)``,
encrypted shares ``s_hat_i = pk_i^p(i)``. The distribution proof is
DLEQ(g, v_i, pk_i, s_hat_i) and the recovery proof is
DLEQ(h, pk_i, s_tilde_i, s_hat_i), so decrypted shares are ``h^p(i)`` and
Lagrange interpolation in the exponent yields ``h^s``.

Every share carries its own proof and challenge; there is no aggregated
challenge and no dealer pre-commitment to the secret.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .dleq import DleqProof, dleq_prove, dleq_verify
from .groups import Element, GroupParams, Keypair
from .hashing import TAG_COMBINE, derive_seed, tagged_hash


class PvssError(ValueError):
    """Parameter error in dealing, decryption or reconstruction."""


class BundleStructureError(PvssError):
    """A bundle whose list lengths or threshold are inconsistent."""


class InsufficientSharesError(PvssError):
    pass


class CeremonyFailed(RuntimeError):
    """The ceremony cannot produce a beacon value."""

    def __init__(self, message: str, transcript=None, report: dict | None = None):
        super().__init__(message)
        self.transcript = transcript
        self.report = report or {}


def default_threshold(n: int) -> int:
    return math.ceil(n / 2)


def dist_tag(context: bytes, dealer: int, i: int) -> bytes:
    return b"caucus/pvss/dist|" + context + b"|%d|%d" % (dealer, i)


def rec_tag(context: bytes, dealer: int, i: int) -> bytes:
    return b"caucus/pvss/rec|" + context + b"|%d|%d" % (dealer, i)


@dataclass(frozen=True)
class ShareBundle:
    dealer: int
    encrypted: tuple  # s_hat_1..s_hat_n
    commitments: tuple  # v_1..v_n
    proofs: tuple[DleqProof, ...]
    t: int
    n: int

    def check_structure(self) -> None:
        if not (len(self.encrypted) == len(self.commitments) == len(self.proofs) == self.n):
            raise BundleStructureError(
                f"bundle from dealer {self.dealer}: list lengths "
                f"{len(self.encrypted)}/{len(self.commitments)}/{len(self.proofs)} != n={self.n}"
            )
        if not 1 <= self.t <= self.n:
            raise BundleStructureError(f"threshold t={self.t} outside [1, {self.n}]")


@dataclass(frozen=True)
class DecryptedShare:
    i: int
    share: Element
    proof: DleqProof
    dealer: int = 0


def poly_eval(coeffs: Sequence[int], x: int, q: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


def share_polynomial(group: GroupParams, s: int, t: int, nonce_seed: bytes) -> list[int]:
    """Coefficients ``[s, a_1, ..., a_{t-1}]`` derived from ``nonce_seed``."""
    coeffs = [s % group.q]
    for j in range(1, t):
        coeffs.append(group.hash_to_scalar(b"caucus/pvss/coef", derive_seed(nonce_seed, j)))
    return coeffs


def deal(
    group: GroupParams,
    s: int,
    pks: Sequence[Element],
    t: int,
    nonce_seed: bytes,
    dealer: int = 0,
    context: bytes = b"",
) -> ShareBundle:
    """Share ``s`` among ``len(pks)`` participants at evaluation points 1..n."""
    n = len(pks)
    if t < 1 or t > n:
        raise PvssError(f"need 1 <= t <= n, got t={t}, n={n}")
    coeffs = share_polynomial(group, s, t, nonce_seed)
    encrypted, commitments, proofs = [], [], []
    for i, pk in enumerate(pks, start=1):
        si = poly_eval(coeffs, i, group.q)
        v = group.exp(group.g, si)
        sh = group.exp(pk, si)
        proof = dleq_prove(
            group, group.g, v, pk, sh, si, derive_seed(nonce_seed, "proof", i), dist_tag(context, dealer, i)
        )
        encrypted.append(sh)
        commitments.append(v)
        proofs.append(proof)
    return ShareBundle(dealer, tuple(encrypted), tuple(commitments), tuple(proofs), t, n)


def sample_dual_codeword(n: int, t: int, seed: bytes, q: int) -> list[int]:
    """Random codeword of the dual of the Reed-Solomon code at points 1..n.

    ``c_i = u_i * m(i)`` with ``u_i = prod_{j != i} (i - j)^-1`` and ``m`` of
    degree at most ``n - t - 1``. Orthogonal to the evaluations of every
    polynomial of degree below ``t``.
    """
    if not 1 <= t <= n:
        raise PvssError(f"need 1 <= t <= n, got t={t}, n={n}")
    m = [
        int.from_bytes(tagged_hash(b"caucus/pvss/dual", derive_seed(seed, j)), "big") % q
        for j in range(n - t)
    ]
    out = []
    for i in range(1, n + 1):
        denom = 1
        for j in range(1, n + 1):
            if j != i:
                denom = denom * (i - j) % q
        u = pow(denom, -1, q)
        out.append(u * poly_eval(m, i, q) % q)
    return out


def verify_bundle(
    group: GroupParams,
    bundle: ShareBundle,
    pks: Sequence[Element],
    codeword_seed: bytes,
    context: bytes = b"",
) -> bool:
    """Check every distribution proof, then the dual-code consistency check."""
    bundle.check_structure()
    if len(pks) != bundle.n:
        raise BundleStructureError(f"{len(pks)} public keys for a bundle with n={bundle.n}")
    for i in range(bundle.n):
        # the verifier supplies the context tag; a proof made elsewhere fails
        proof = DleqProof(bundle.proofs[i].e, bundle.proofs[i].z, dist_tag(context, bundle.dealer, i + 1))
        if not dleq_verify(group, group.g, bundle.commitments[i], pks[i], bundle.encrypted[i], proof):
            return False
    return dual_code_check(group, bundle.commitments, bundle.t, codeword_seed)


def dual_code_check(group: GroupParams, commitments: Sequence[Element], t: int, codeword_seed: bytes) -> bool:
    """``prod v_i^{c_i} == 1`` for a dual codeword drawn from ``codeword_seed``."""
    c = sample_dual_codeword(len(commitments), t, codeword_seed, group.q)
    return group.multi_exp(zip(commitments, c)) == group.identity


def decrypt_share(
    group: GroupParams,
    bundle: ShareBundle,
    kp: Keypair,
    i: int,
    pks: Sequence[Element] | None = None,
    nonce_seed: bytes | None = None,
    context: bytes = b"",
) -> DecryptedShare:
    """Decrypt slot ``i`` (1-based) of ``bundle`` with ``kp``."""
    if not 1 <= i <= bundle.n:
        raise PvssError(f"slot {i} outside [1, {bundle.n}]")
    if pks is not None and pks[i - 1] != kp.pk:
        raise PvssError(f"keypair does not own slot {i}")
    if kp.sk % group.q == 0:
        raise PvssError("secret key is zero")
    sh = bundle.encrypted[i - 1]
    st = group.exp(sh, pow(kp.sk, -1, group.q))
    if nonce_seed is None:
        nonce_seed = group.scalar_to_bytes(kp.sk) + group.serialize(sh)
    proof = dleq_prove(group, group.h, kp.pk, st, sh, kp.sk, nonce_seed, rec_tag(context, bundle.dealer, i))
    return DecryptedShare(i, st, proof, bundle.dealer)


def verify_decrypted(
    group: GroupParams, share: DecryptedShare, pk: Element, s_hat: Element, context: bytes = b""
) -> bool:
    proof = DleqProof(share.proof.e, share.proof.z, rec_tag(context, share.dealer, share.i))
    return dleq_verify(group, group.h, pk, share.share, s_hat, proof)


def lagrange_at_zero(indices: Sequence[int], q: int) -> list[int]:
    """``lambda_i = prod_{j != i} j / (j - i)`` mod q over ``indices``."""
    out = []
    for i in indices:
        num, den = 1, 1
        for j in indices:
            if j != i:
                num = num * j % q
                den = den * (j - i) % q
        out.append(num * pow(den, -1, q) % q)
    return out


def reconstruct_secret(group: GroupParams, shares: Iterable[DecryptedShare], t: int) -> Element:
    """``h^s`` from the first ``t`` shares in ascending index order."""
    by_index = sorted(shares, key=lambda s: s.i)
    idx = [s.i for s in by_index]
    if len(set(idx)) != len(idx):
        raise PvssError("duplicate share indices")
    if len(by_index) < t:
        raise InsufficientSharesError(f"{len(by_index)} shares, need t={t}")
    chosen = by_index[:t]
    lambdas = lagrange_at_zero([s.i for s in chosen], group.q)
    return group.multi_exp((s.share, lam) for s, lam in zip(chosen, lambdas))


def combine_secrets(group: GroupParams, dealer_secrets: Sequence[Element]) -> bytes:
    """Beacon seed ``R_1`` from recovered dealer secrets in ascending dealer order."""
    if not dealer_secrets:
        raise CeremonyFailed("no dealer secrets to combine")
    return tagged_hash(TAG_COMBINE, *(group.serialize(S) for S in dealer_secrets))


# -- voting-based acceptance ----------------------------------------------

ACCEPTED = "accepted"
REJECTED = "rejected"
PENDING = "pending"


@dataclass(frozen=True)
class Subject:
    """What a vote is about: a dealer's bundle or one decrypted share."""

    kind: str  # "bundle" | "share"
    dealer: int
    index: int = 0

    @property
    def owner(self) -> int:
        return self.dealer if self.kind == "bundle" else self.index

    def key(self) -> str:
        return f"{self.kind}:{self.dealer}:{self.index}"

    @classmethod
    def parse(cls, key: str) -> "Subject":
        kind, dealer, index = key.split(":")
        return cls(kind, int(dealer), int(index))


@dataclass(frozen=True)
class VoteRecord:
    voter: int
    subject: Subject
    verdict: bool


def tally_votes(votes: Iterable[VoteRecord], n: int, subject: Subject) -> str:
    """Accept once strictly more than n/2 distinct voters approve.

    The first vote per voter stands; votes by the subject's owner are ignored.
    """
    seen: dict[int, bool] = {}
    for v in votes:
        if v.subject != subject or v.voter == subject.owner or v.voter in seen:
            continue
        seen[v.voter] = v.verdict
    pos = sum(1 for ok in seen.values() if ok)
    neg = len(seen) - pos
    if 2 * pos > n:
        return ACCEPTED
    if neg >= math.ceil(n / 2):
        return REJECTED
    return PENDING
