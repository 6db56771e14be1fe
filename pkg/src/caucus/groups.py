"""Prime-order groups used by the PVSS ceremony and DLEQ proofs.

Two groups share one interface:

* ``TOY``: the order-101 subgroup of (Z/607Z)*. Small enough that tests can
  brute-force discrete logs and enumerate every share subset.
* ``STRONG``: secp256k1, the curve the on-chain deployment targets.

Elements are opaque to protocol code; only the group knows whether they are
ints or affine points. The identity of secp256k1 is represented as ``None``.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

Element = Any


class GroupError(ValueError):
    """Raised on malformed or non-member group encodings."""


class GroupParams(ABC):
    """A cyclic group of prime order ``q`` with independent generators g, h."""

    name: str
    q: int
    element_size: int

    @property
    @abstractmethod
    def g(self) -> Element: ...

    @property
    @abstractmethod
    def h(self) -> Element: ...

    @property
    @abstractmethod
    def identity(self) -> Element: ...

    @abstractmethod
    def mul(self, a: Element, b: Element) -> Element: ...

    @abstractmethod
    def exp(self, a: Element, k: int) -> Element: ...

    @abstractmethod
    def is_member(self, a: Element) -> bool: ...

    @abstractmethod
    def serialize(self, a: Element) -> bytes: ...

    @abstractmethod
    def deserialize(self, data: bytes) -> Element: ...

    def inv(self, a: Element) -> Element:
        return self.exp(a, self.q - 1)

    def multi_exp(self, pairs: Iterable[tuple[Element, int]]) -> Element:
        acc = self.identity
        for base, k in pairs:
            acc = self.mul(acc, self.exp(base, k))
        return acc

    @property
    def scalar_size(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def scalar_to_bytes(self, k: int) -> bytes:
        return (k % self.q).to_bytes(self.scalar_size, "big")

    def scalar_from_bytes(self, data: bytes) -> int:
        if len(data) != self.scalar_size:
            raise GroupError(f"scalar must be {self.scalar_size} bytes, got {len(data)}")
        k = int.from_bytes(data, "big")
        if k >= self.q:
            raise GroupError("scalar out of range")
        return k

    def hash_to_scalar(self, *parts: bytes) -> int:
        """H2s: a 256-bit digest of the domain-tagged input, reduced mod q."""
        h = hashlib.sha256(b"caucus/h2s")
        for p in parts:
            h.update(p)
        return int.from_bytes(h.digest(), "big") % self.q

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} q={self.q}>"


class ToyGroup(GroupParams):
    """Order-``q`` subgroup of integers modulo ``p`` with ``p = k*q + 1``."""

    def __init__(self, p: int = 607, q: int = 101, name: str = "toy"):
        if (p - 1) % q:
            raise ValueError("q must divide p - 1")
        self.name = name
        self.p = p
        self.q = q
        self.cofactor = (p - 1) // q
        self.element_size = (p.bit_length() + 7) // 8
        self._g = self._find_generator()
        self._h = self._hash_to_element(b"caucus/toy/h")

    def _find_generator(self) -> int:
        for a in range(2, self.p):
            if pow(a, self.q, self.p) == 1:
                return a
        raise ValueError("no element of order q")  # pragma: no cover

    def _hash_to_element(self, tag: bytes) -> int:
        ctr = 0
        while True:
            d = hashlib.sha256(tag + ctr.to_bytes(4, "big")).digest()
            x = int.from_bytes(d, "big") % self.p
            ctr += 1
            if x == 0:
                continue
            y = pow(x, self.cofactor, self.p)
            if y not in (1, self._g):
                return y

    @property
    def g(self) -> int:
        return self._g

    @property
    def h(self) -> int:
        return self._h

    @property
    def identity(self) -> int:
        return 1

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def exp(self, a: int, k: int) -> int:
        return pow(a, k % self.q, self.p)

    def is_member(self, a: Element) -> bool:
        return isinstance(a, int) and 0 < a < self.p and pow(a, self.q, self.p) == 1

    def serialize(self, a: int) -> bytes:
        return a.to_bytes(self.element_size, "big")

    def deserialize(self, data: bytes) -> int:
        if len(data) != self.element_size:
            raise GroupError(f"element must be {self.element_size} bytes")
        a = int.from_bytes(data, "big")
        if not self.is_member(a):
            raise GroupError(f"{a} is not in the order-{self.q} subgroup")
        return a


# secp256k1 domain parameters (SEC 2, section 2.4.1)
_P = 2**256 - 2**32 - 977
_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
_GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

_WINDOW = 4


def _jac_double(P):
    X, Y, Z = P
    if Y == 0:
        return (0, 0, 0)
    YY = Y * Y % _P
    S = 4 * X * YY % _P
    M = 3 * X * X % _P
    X3 = (M * M - 2 * S) % _P
    Y3 = (M * (S - X3) - 8 * YY * YY) % _P
    Z3 = 2 * Y * Z % _P
    return (X3, Y3, Z3)


def _jac_add_affine(P, Q):
    """Jacobian ``P`` plus affine ``Q`` (``Q`` not the identity)."""
    X1, Y1, Z1 = P
    if Z1 == 0:
        return (Q[0], Q[1], 1)
    x2, y2 = Q
    ZZ = Z1 * Z1 % _P
    U2 = x2 * ZZ % _P
    S2 = y2 * ZZ * Z1 % _P
    H = (U2 - X1) % _P
    R = (S2 - Y1) % _P
    if H == 0:
        if R == 0:
            return _jac_double(P)
        return (0, 0, 0)
    HH = H * H % _P
    HHH = HH * H % _P
    V = X1 * HH % _P
    X3 = (R * R - HHH - 2 * V) % _P
    Y3 = (R * (V - X3) - Y1 * HHH) % _P
    Z3 = Z1 * H % _P
    return (X3, Y3, Z3)


def _to_affine(P):
    X, Y, Z = P
    if Z == 0:
        return None
    zi = pow(Z, -1, _P)
    zi2 = zi * zi % _P
    return (X * zi2 % _P, Y * zi2 * zi % _P)


def _window_table(Q) -> list:
    """Affine multiples ``[Q, 2Q, ..., (2^w - 1)Q]``; ``None`` marks identity."""
    table = [Q]
    acc = (Q[0], Q[1], 1)
    for _ in range(2**_WINDOW - 2):
        acc = _jac_add_affine(acc, Q)
        table.append(_to_affine(acc))
    return table


class Secp256k1(GroupParams):
    """The secp256k1 curve; elements are affine ``(x, y)`` tuples or ``None``."""

    def __init__(self):
        self.name = "strong"
        self.q = _N
        self.p = _P
        self.element_size = 33
        self._g = (_GX, _GY)
        self._h = self._hash_to_point(b"caucus/secp256k1/h")
        self._fixed: dict = {}

    def _lift_x(self, x: int, odd: bool):
        rhs = (pow(x, 3, _P) + 7) % _P
        y = pow(rhs, (_P + 1) // 4, _P)
        if y * y % _P != rhs:
            return None
        if (y & 1) != odd:
            y = _P - y
        return (x, y)

    def _hash_to_point(self, tag: bytes):
        ctr = 0
        while True:
            d = hashlib.sha256(tag + ctr.to_bytes(4, "big")).digest()
            ctr += 1
            x = int.from_bytes(d, "big")
            if x >= _P:
                continue
            pt = self._lift_x(x, odd=False)
            if pt is not None:
                return pt

    @property
    def g(self):
        return self._g

    @property
    def h(self):
        return self._h

    @property
    def identity(self):
        return None

    def is_member(self, a: Element) -> bool:
        if a is None:
            return True
        if not (isinstance(a, tuple) and len(a) == 2):
            return False
        x, y = a
        if not (isinstance(x, int) and isinstance(y, int) and 0 <= x < _P and 0 <= y < _P):
            return False
        # cofactor 1: every curve point has order n
        return (y * y - x * x * x - 7) % _P == 0

    def mul(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        return _to_affine(_jac_add_affine((a[0], a[1], 1), b))

    def inv(self, a):
        if a is None:
            return None
        return (a[0], (-a[1]) % _P)

    def _fixed_table(self, base) -> list[list] | None:
        """Per-window tables for g and h so their powers need no doublings."""
        if base != self._g and base != self._h:
            return None
        key = base
        if key not in self._fixed:
            tables = []
            cur = base
            for _ in range(0, 256, _WINDOW):
                tables.append(_window_table(cur))
                # advance cur by 2^w
                J = (cur[0], cur[1], 1)
                for _ in range(_WINDOW):
                    J = _jac_double(J)
                cur = _to_affine(J)
            self._fixed[key] = tables
        return self._fixed[key]

    def exp(self, a, k: int):
        k %= _N
        if a is None or k == 0:
            return None
        fixed = self._fixed_table(a)
        if fixed is not None:
            acc = (0, 0, 0)
            mask = 2**_WINDOW - 1
            i = 0
            while k:
                d = k & mask
                if d:
                    acc = _jac_add_affine(acc, fixed[i][d - 1])
                k >>= _WINDOW
                i += 1
            return _to_affine(acc)
        return self.multi_exp([(a, k)])

    def multi_exp(self, pairs: Iterable[tuple[Element, int]]):
        """Interleaved windowed exponentiation sharing the doublings."""
        items = []
        for base, k in pairs:
            k %= _N
            if base is None or k == 0:
                continue
            items.append((_window_table(base), k))
        if not items:
            return None
        nbits = max(k.bit_length() for _, k in items)
        nwin = (nbits + _WINDOW - 1) // _WINDOW
        mask = 2**_WINDOW - 1
        acc = (0, 0, 0)
        for w in range(nwin - 1, -1, -1):
            if acc[2]:
                for _ in range(_WINDOW):
                    acc = _jac_double(acc)
            shift = w * _WINDOW
            for table, k in items:
                d = (k >> shift) & mask
                if d and table[d - 1] is not None:
                    acc = _jac_add_affine(acc, table[d - 1])
        return _to_affine(acc)

    def serialize(self, a) -> bytes:
        if a is None:
            return bytes(33)
        x, y = a
        return bytes([2 + (y & 1)]) + x.to_bytes(32, "big")

    def deserialize(self, data: bytes):
        if len(data) != 33:
            raise GroupError("secp256k1 element must be 33 bytes")
        if data == bytes(33):
            return None
        prefix = data[0]
        if prefix not in (2, 3):
            raise GroupError(f"bad point prefix {prefix:#x}")
        x = int.from_bytes(data[1:], "big")
        if x >= _P:
            raise GroupError("x coordinate out of range")
        pt = self._lift_x(x, odd=bool(prefix & 1))
        if pt is None:
            raise GroupError("x coordinate not on curve")
        return pt


TOY = ToyGroup()
STRONG = Secp256k1()

GROUPS: dict[str, GroupParams] = {"toy": TOY, "strong": STRONG}


def get_group(name: str) -> GroupParams:
    try:
        return GROUPS[name]
    except KeyError:
        raise ValueError(f"unknown group {name!r}; expected one of {sorted(GROUPS)}") from None


@dataclass(frozen=True)
class Keypair:
    sk: int
    pk: Element


def keygen(group: GroupParams, rng_seed: bytes) -> Keypair:
    """Deterministic keypair with ``sk`` in ``[1, q)`` and ``pk = h^sk``."""
    if not rng_seed:
        raise ValueError("rng_seed must be nonempty")
    d = hashlib.sha256(b"caucus/keygen" + rng_seed).digest()
    sk = 1 + int.from_bytes(d, "big") % (group.q - 1)
    return Keypair(sk, group.exp(group.h, sk))


def element_hex(group: GroupParams, a: Element) -> str:
    return group.serialize(a).hex()


def element_from_hex(group: GroupParams, s: str) -> Element:
    return group.deserialize(bytes.fromhex(s))


def elements_hex(group: GroupParams, xs: Sequence[Element]) -> str:
    return ",".join(element_hex(group, x) for x in xs)


def elements_from_hex(group: GroupParams, s: str) -> list[Element]:
    return [element_from_hex(group, part) for part in s.split(",")] if s else []
