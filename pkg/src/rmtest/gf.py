"""Finite fields F_q, q = p^ell, with elements encoded as small integers.

An element's integer index, read in base p, is the coefficient vector of a
polynomial residue modulo the field's defining polynomial (constant term is
the least significant digit).  Prime fields use plain modular arithmetic;
extension fields use memoized addition/multiplication tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

__all__ = [
    "FieldError",
    "FieldSpec",
    "FieldElem",
    "DEFAULT_MODULI",
    "make_field",
    "parse_field",
    "add",
    "mul",
    "inv",
    "enumerate_field",
]

# Monic irreducible polynomials, constant term first, leading 1 included.
DEFAULT_MODULI: dict[int, tuple[int, ...]] = {
    4: (1, 1, 1),
    8: (1, 1, 0, 1),
    9: (2, 2, 1),
    16: (1, 1, 0, 0, 1),
    25: (2, 4, 1),
    27: (1, 2, 0, 1),
    32: (1, 0, 1, 0, 0, 1),
}

_TABLE_LIMIT = 256


class FieldError(ValueError):
    """Invalid field configuration or mixing elements of different fields."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _prime_power(q: int) -> tuple[int, int]:
    if q < 2:
        raise FieldError(f"field size must be >= 2, got {q}")
    p = 2
    while q % p:
        p += 1
    ell, rest = 0, q
    while rest % p == 0:
        rest //= p
        ell += 1
    if rest != 1:
        raise FieldError(f"{q} is not a prime power")
    return p, ell


def _poly_mod(a: list[int], m: tuple[int, ...], p: int) -> list[int]:
    # m monic, constant term first
    a = list(a)
    dm = len(m) - 1
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i] % p
        if c:
            for j in range(dm + 1):
                a[i - dm + j] = (a[i - dm + j] - c * m[j]) % p
    return [x % p for x in a[:dm]] + [0] * max(0, dm - len(a))


def _is_irreducible(m: tuple[int, ...], p: int) -> bool:
    deg = len(m) - 1
    for d in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            divisor = tuple(low) + (1,)
            if not any(_poly_mod(list(m), divisor, p)):
                return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The finite field F_q with q = p**ell.

    ``modulus`` lists the coefficients of the monic defining polynomial,
    constant term first and leading 1 included; it is ``(0, 1)`` for prime
    fields (the polynomial x, so residues are constants).
    """

    p: int
    ell: int = 1
    modulus: tuple[int, ...] = dc_field(default=())

    def __post_init__(self) -> None:
        if not _is_prime(self.p):
            raise FieldError(f"characteristic {self.p} is not prime")
        if self.ell < 1:
            raise FieldError(f"extension degree must be >= 1, got {self.ell}")
        mod = tuple(int(c) for c in self.modulus)
        if self.ell == 1:
            if mod not in ((), (0, 1)):
                raise FieldError("prime fields take no modulus")
            mod = (0, 1)
        else:
            if len(mod) == self.ell:
                mod = mod + (1,)
            if len(mod) != self.ell + 1 or mod[-1] != 1:
                raise FieldError(f"modulus must be monic of degree {self.ell}: {self.modulus}")
            if any(not 0 <= c < self.p for c in mod):
                raise FieldError(f"modulus coefficients must lie in [0, {self.p})")
            if not _is_irreducible(mod, self.p):
                raise FieldError(f"modulus {mod} is reducible over F_{self.p}")
        object.__setattr__(self, "modulus", mod)

    @property
    def q(self) -> int:
        return self.p**self.ell

    @property
    def is_prime(self) -> bool:
        return self.ell == 1

    def __repr__(self) -> str:
        if self.is_prime:
            return f"F_{self.q}"
        return f"F_{self.q}[{','.join(map(str, self.modulus))}]"

    def config_string(self) -> str:
        s = f"q={self.q}"
        if not self.is_prime:
            s += " modulus=" + ",".join(map(str, self.modulus))
        return s

    # -- scalar arithmetic on integer indices ---------------------------------

    def _digits(self, a: int) -> list[int]:
        return [(a // self.p**i) % self.p for i in range(self.ell)]

    def _undigits(self, ds: list[int]) -> int:
        return sum(int(d) * self.p**i for i, d in enumerate(ds))

    def _check(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.q:
            raise FieldError(f"{a} is not an element of {self!r}")
        return a

    def add(self, a: int, b: int) -> int:
        if self.is_prime:
            return (a + b) % self.p
        return int(self.add_table[a, b])

    def sub(self, a: int, b: int) -> int:
        if self.is_prime:
            return (a - b) % self.p
        return int(self.sub_table[a, b])

    def neg(self, a: int) -> int:
        if self.is_prime:
            return (-a) % self.p
        return int(self.neg_table[a])

    def mul(self, a: int, b: int) -> int:
        if self.is_prime:
            return (a * b) % self.p
        if self.q <= _TABLE_LIMIT:
            return int(self.mul_table[a, b])
        return self._poly_mul(a, b)

    def _poly_mul(self, a: int, b: int) -> int:
        da, db = self._digits(a), self._digits(b)
        prod = [0] * (2 * self.ell - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] += x * y
        return self._undigits(_poly_mod(prod, self.modulus, self.p))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        if self.is_prime:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.q - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def elements(self) -> range:
        return range(self.q)

    # -- tables and vectorized arithmetic ---------------------------------------

    @cached_property
    def add_table(self) -> np.ndarray:
        q = self.q
        digits = np.array([self._digits(a) for a in range(q)], dtype=np.int64)
        s = (digits[:, None, :] + digits[None, :, :]) % self.p
        weights = self.p ** np.arange(self.ell, dtype=np.int64)
        return (s @ weights).astype(np.int64)

    @cached_property
    def neg_table(self) -> np.ndarray:
        digits = np.array([self._digits(a) for a in range(self.q)], dtype=np.int64)
        weights = self.p ** np.arange(self.ell, dtype=np.int64)
        return (((-digits) % self.p) @ weights).astype(np.int64)

    @cached_property
    def sub_table(self) -> np.ndarray:
        return self.add_table[:, self.neg_table]

    @cached_property
    def mul_table(self) -> np.ndarray:
        q = self.q
        if self.is_prime:
            r = np.arange(q, dtype=np.int64)
            return np.outer(r, r) % q
        t = np.zeros((q, q), dtype=np.int64)
        for a in range(1, q):
            for b in range(a, q):
                t[a, b] = t[b, a] = self._poly_mul(a, b)
        return t

    @cached_property
    def inv_table(self) -> np.ndarray:
        """inv_table[a] = a^{-1}; entry 0 is 0 by convention."""
        t = np.zeros(self.q, dtype=np.int64)
        for a in range(1, self.q):
            t[a] = self.inv(a)
        return t

    def vadd(self, a, b) -> np.ndarray:
        if self.is_prime:
            return (np.asarray(a) + np.asarray(b)) % self.p
        return self.add_table[a, b]

    def vsub(self, a, b) -> np.ndarray:
        if self.is_prime:
            return (np.asarray(a) - np.asarray(b)) % self.p
        return self.sub_table[a, b]

    def vneg(self, a) -> np.ndarray:
        if self.is_prime:
            return (-np.asarray(a)) % self.p
        return self.neg_table[a]

    def vmul(self, a, b) -> np.ndarray:
        if self.is_prime:
            return (np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)) % self.p
        return self.mul_table[a, b]

    def vinv(self, a) -> np.ndarray:
        return self.inv_table[a]

    def matmul(self, a, b) -> np.ndarray:
        """Matrix product over F_q; works on stacked (batched) operands too."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.is_prime:
            # int64 accumulation is exact for any inner dimension we use
            return (a @ b) % self.p
        out = None
        for j in range(a.shape[-1]):
            term = self.mul_table[a[..., :, j : j + 1], b[..., j : j + 1, :]]
            out = term if out is None else self.add_table[out, term]
        if out is None:
            return np.zeros(a.shape[:-1] + b.shape[-1:], dtype=np.int64)
        return out

    def vsum(self, a, axis: int = -1) -> np.ndarray:
        """Field sum along an axis."""
        a = np.asarray(a, dtype=np.int64)
        if self.is_prime:
            return a.sum(axis=axis) % self.p
        a = np.moveaxis(a, axis, 0)
        out = np.zeros(a.shape[1:], dtype=np.int64)
        for row in a:
            out = self.add_table[out, row]
        return out

    def vpow(self, a, e: int) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        return self.power_table[a, e % (self.q - 1) or (self.q - 1)] if e > 0 else self.vpow(self.vinv(a), -e)

    @cached_property
    def power_table(self) -> np.ndarray:
        """power_table[a, e] = a**e for 0 <= e <= q-1 (with 0**0 = 1)."""
        q = self.q
        t = np.zeros((q, q), dtype=np.int64)
        t[:, 0] = 1
        for e in range(1, q):
            t[:, e] = self.vmul(t[:, e - 1], np.arange(q))
        return t

    def elem(self, index: int) -> "FieldElem":
        return FieldElem(self, self._check(index))


@dataclass(frozen=True)
class FieldElem:
    """A field element: an integer index bound to its FieldSpec."""

    field: FieldSpec
    index: int

    def __post_init__(self) -> None:
        if not 0 <= self.index < self.field.q:
            raise FieldError(f"{self.index} is not an element of {self.field!r}")

    def _other(self, other: "FieldElem | int") -> int:
        if isinstance(other, FieldElem):
            if other.field != self.field:
                raise FieldError(f"cannot combine elements of {self.field!r} and {other.field!r}")
            return other.index
        return self.field._check(other)

    def __add__(self, other):
        return FieldElem(self.field, self.field.add(self.index, self._other(other)))

    def __sub__(self, other):
        return FieldElem(self.field, self.field.sub(self.index, self._other(other)))

    def __mul__(self, other):
        return FieldElem(self.field, self.field.mul(self.index, self._other(other)))

    def __truediv__(self, other):
        return FieldElem(self.field, self.field.div(self.index, self._other(other)))

    def __neg__(self):
        return FieldElem(self.field, self.field.neg(self.index))

    def __pow__(self, e: int):
        return FieldElem(self.field, self.field.pow(self.index, e))

    __radd__ = __add__
    __rmul__ = __mul__

    def __int__(self) -> int:
        return self.index

    def __repr__(self) -> str:
        return f"{self.index}@{self.field!r}"


def make_field(q: int, modulus: tuple[int, ...] | list[int] | None = None) -> FieldSpec:
    """Build F_q, using the built-in modulus table when none is given."""
    p, ell = _prime_power(int(q))
    if ell == 1:
        if modulus:
            raise FieldError("prime fields take no modulus")
        return FieldSpec(p, 1)
    if modulus is None:
        if q not in DEFAULT_MODULI:
            raise FieldError(f"no built-in modulus for q={q}; pass modulus=<coefficients>")
        modulus = DEFAULT_MODULI[q]
    return FieldSpec(p, ell, tuple(int(c) for c in modulus))


def parse_field(text: str) -> FieldSpec:
    """Parse ``"q=<int> [modulus=c0,c1,...]"`` (constant term first)."""
    kv = {}
    for tok in text.split():
        if "=" not in tok:
            raise FieldError(f"bad field token {tok!r}")
        k, v = tok.split("=", 1)
        kv[k.strip()] = v.strip()
    if "q" not in kv:
        raise FieldError("field spec needs q=<int>")
    try:
        q = int(kv["q"])
        mod = tuple(int(c) for c in kv["modulus"].split(",")) if "modulus" in kv else None
    except ValueError as exc:
        raise FieldError(f"bad field spec {text!r}: {exc}") from None
    return make_field(q, mod)


def add(a: FieldElem, b: FieldElem) -> FieldElem:
    return a + b


def mul(a: FieldElem, b: FieldElem) -> FieldElem:
    return a * b


def inv(a: FieldElem) -> FieldElem:
    return FieldElem(a.field, a.field.inv(a.index))


def enumerate_field(spec: FieldSpec) -> list[FieldElem]:
    return [FieldElem(spec, i) for i in range(spec.q)]
