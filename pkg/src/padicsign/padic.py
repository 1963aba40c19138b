"""Exact p-adic substrate: residue rings Z/p^m, small finite fields F_{p^f},
Legendre symbols, Teichmueller lifts and certified p-adic binomial coefficients.

Elements of ``Zmod``/``GF`` are plain Python ints (``GF(p, 2)`` encodes
c0 + c1*x as ``c0 + p*c1``), so numpy int64 arrays of them vectorize; the
ring object owns the arithmetic.  ``ResidueElement`` wraps a residue together
with its certified precision exponent and propagates precision pessimistically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InputError, PrecisionError

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def check_odd_prime(p: int) -> None:
    if p == 2 or not is_prime(p):
        raise InputError(f"p = {p} is not an odd prime")


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) in {-1, 0, +1}."""
    check_odd_prime(p)
    a %= p
    if a == 0:
        return 0
    s = pow(a, (p - 1) // 2, p)
    return 1 if s == 1 else -1


def smallest_nonresidue(p: int) -> int:
    """Smallest positive quadratic non-residue mod p."""
    for n in range(2, p):
        if legendre(n, p) == -1:
            return n
    raise InputError(f"no non-residue found for p = {p}")


@lru_cache(maxsize=None)
def smallest_primitive_root_mod_p2(p: int) -> int:
    """Smallest integer generating (Z/p^2)^x, hence Z_p^x topologically."""
    check_odd_prime(p)
    order = p * (p - 1)
    fac = set()
    n = order
    d = 2
    while d * d <= n:
        while n % d == 0:
            fac.add(d)
            n //= d
        d += 1
    if n > 1:
        fac.add(n)
    for g in range(2, p * p):
        if g % p == 0:
            continue
        if all(pow(g, order // q, p * p) != 1 for q in fac):
            return g
    raise InputError(f"no primitive root mod {p}^2")


def vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise InputError("valuation of 0 requested")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_factorial(k: int, p: int) -> int:
    """v_p(k!) by Legendre's formula."""
    v, q = 0, p
    while q <= k:
        v += k // q
        q *= p
    return v


# ---------------------------------------------------------------------------
# coefficient rings (vector-capable)
# ---------------------------------------------------------------------------


class Zmod:
    """The chain ring Z/p^m with int-encoded elements in [0, p^m)."""

    is_field = False

    def __init__(self, p: int, m: int):
        check_odd_prime(p)
        if m < 1:
            raise InputError("precision exponent m must be >= 1")
        self.p = p
        self.m = m
        self.q = p**m
        if self.q >= 2**31:
            raise InputError(f"p^m = {self.q} too large for vectorized arithmetic")
        self.char = self.q
        self.one = 1
        self.zero = 0

    @property
    def key(self):
        return ("Zmod", self.p, self.m)

    def __repr__(self):
        return f"Zmod({self.p}, {self.m})"

    def __eq__(self, other):
        return isinstance(other, Zmod) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def add(self, a, b):
        return (a + b) % self.q

    def sub(self, a, b):
        return (a - b) % self.q

    def mul(self, a, b):
        return (a * b) % self.q

    def neg(self, a):
        return (-a) % self.q

    def is_unit(self, a) -> bool:
        return int(a) % self.p != 0

    def inv(self, a):
        a = int(a) % self.q
        if a % self.p == 0:
            raise InputError(f"{a} is not a unit mod {self.p}^{self.m}")
        return pow(a, -1, self.q)

    def unit_valuation(self, a):
        """(v, u) with a = p^v * u, u a unit; a must be nonzero."""
        a = int(a) % self.q
        if a == 0:
            raise InputError("0 has no unit part")
        v = vp(a, self.p)
        return v, (a // self.p**v) % self.q

    def from_int(self, n: int) -> int:
        return n % self.q

    def from_fraction(self, x: Fraction) -> int:
        if x.denominator % self.p == 0:
            raise InputError(f"{x} is not p-integral at p = {self.p}")
        return x.numerator * pow(x.denominator, -1, self.q) % self.q

    def residue_field(self) -> "GF":
        return GF(self.p, 1)

    def reduce_mod_p(self, a):
        return a % self.p

    # vectorized variants (numpy int64 arrays)
    def vadd(self, a, b):
        return (a + b) % self.q

    def vsub(self, a, b):
        return (a - b) % self.q

    def vmul(self, a, b):
        return (a * b) % self.q

    def vneg(self, a):
        return (-a) % self.q

    def vscale(self, c, a):
        return (int(c) * a) % self.q

    def length_of(self, a) -> int:
        """Length of the cyclic module generated by a (= m - v_p(a))."""
        a = int(a) % self.q
        return 0 if a == 0 else self.m - vp(a, self.p)


class GF:
    """F_{p^f} for f in {1, 2}; f = 2 uses the fixed polynomial x^2 = n0
    with n0 the smallest non-residue mod p, so encodings are canonical."""

    is_field = True

    def __init__(self, p: int, f: int = 1):
        check_odd_prime(p)
        if f not in (1, 2):
            raise InputError("only extension degrees f in {1, 2} supported")
        self.p = p
        self.f = f
        self.q = p**f
        self.char = p
        self.m = 1
        self.one = 1
        self.zero = 0
        self.n0 = smallest_nonresidue(p) if f == 2 else None

    @property
    def key(self):
        return ("GF", self.p, self.f)

    def __repr__(self):
        return f"GF({self.p}^{self.f})" if self.f > 1 else f"GF({self.p})"

    def __eq__(self, other):
        return isinstance(other, GF) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def coords(self, a):
        return (int(a) % self.p, int(a) // self.p)

    def from_coords(self, c0: int, c1: int = 0) -> int:
        return c0 % self.p + self.p * (c1 % self.p)

    def from_int(self, n: int) -> int:
        return n % self.p

    def from_fraction(self, x: Fraction) -> int:
        return self.from_int(x.numerator * pow(x.denominator, -1, self.p))

    def add(self, a, b):
        if self.f == 1:
            return (a + b) % self.p
        p = self.p
        return (a % p + b % p) % p + p * ((a // p + b // p) % p)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def neg(self, a):
        if self.f == 1:
            return (-a) % self.p
        p = self.p
        return (-a) % p + p * ((-(a // p)) % p)

    def mul(self, a, b):
        if self.f == 1:
            return (a * b) % self.p
        p, n0 = self.p, self.n0
        a0, a1 = a % p, a // p
        b0, b1 = b % p, b // p
        return (a0 * b0 + n0 * a1 * b1) % p + p * ((a0 * b1 + a1 * b0) % p)

    def is_unit(self, a) -> bool:
        return int(a) != 0

    def inv(self, a):
        a = int(a)
        if a == 0:
            raise InputError("0 is not invertible")
        if self.f == 1:
            return pow(a, self.p - 2, self.p)
        # norm trick: (a0 + a1 x)^{-1} = (a0 - a1 x) / (a0^2 - n0 a1^2)
        p, n0 = self.p, self.n0
        a0, a1 = a % p, a // p
        nrm = (a0 * a0 - n0 * a1 * a1) % p
        ninv = pow(nrm, p - 2, p)
        return (a0 * ninv) % p + p * ((-a1 * ninv) % p)

    def pow(self, a, e: int):
        if e < 0:
            return self.pow(self.inv(a), -e)
        r, b = self.one, a
        while e:
            if e & 1:
                r = self.mul(r, b)
            b = self.mul(b, b)
            e >>= 1
        return r

    def elements(self):
        return range(self.q)

    # vectorized variants
    def vadd(self, a, b):
        if self.f == 1:
            return (a + b) % self.p
        p = self.p
        return (a % p + b % p) % p + p * ((a // p + b // p) % p)

    def vsub(self, a, b):
        return self.vadd(a, self.vneg(b))

    def vneg(self, a):
        if self.f == 1:
            return (-a) % self.p
        p = self.p
        return (-a) % p + p * ((-(a // p)) % p)

    def vmul(self, a, b):
        if self.f == 1:
            return (a * b) % self.p
        p, n0 = self.p, self.n0
        a0, a1 = a % p, a // p
        b0, b1 = b % p, b // p
        return (a0 * b0 + n0 * a1 * b1) % p + p * ((a0 * b1 + a1 * b0) % p)

    def vscale(self, c, a):
        if self.f == 1:
            return (int(c) * a) % self.p
        return self.vmul(np.full(a.shape, int(c), dtype=a.dtype), a)

    def unit_valuation(self, a):
        if int(a) == 0:
            raise InputError("0 has no unit part")
        return 0, int(a)

    def length_of(self, a) -> int:
        return 0 if int(a) == 0 else 1

    def residue_field(self) -> "GF":
        return self

    def reduce_mod_p(self, a):
        return a


def ring_from_descriptor(p: int, m: int = 1, f: int = 1):
    """Coefficient ring from a (p, m, f) descriptor; f > 1 forces m = 1."""
    if f > 1:
        if m != 1:
            raise InputError("ramified precision m > 1 with f > 1 unsupported")
        return GF(p, f)
    return Zmod(p, m) if m > 1 else GF(p, 1)


# ---------------------------------------------------------------------------
# element-level wrappers with certified precision
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidueElement:
    """A residue a mod p^m together with its certified precision exponent m."""

    p: int
    m: int
    val: int

    def __post_init__(self):
        check_odd_prime(self.p)
        if self.m < 1:
            raise PrecisionError("precision exhausted: m < 1")
        object.__setattr__(self, "val", self.val % self.p**self.m)

    @property
    def modulus(self) -> int:
        return self.p**self.m

    def _coerce(self, other) -> "ResidueElement":
        if isinstance(other, ResidueElement):
            if other.p != self.p:
                raise InputError("mixed primes")
            return other
        return ResidueElement(self.p, self.m, int(other))

    def _with(self, val: int, m: int) -> "ResidueElement":
        return ResidueElement(self.p, m, val % self.p**m)

    def __add__(self, other):
        o = self._coerce(other)
        m = min(self.m, o.m)
        return self._with(self.val + o.val, m)

    __radd__ = __add__

    def __neg__(self):
        return self._with(-self.val, self.m)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        m = min(self.m, o.m)
        return self._with(self.val * o.val, m)

    __rmul__ = __mul__

    def is_unit(self) -> bool:
        return self.val % self.p != 0

    def inverse(self) -> "ResidueElement":
        if not self.is_unit():
            raise InputError(f"{self.val} is not a unit at p = {self.p}")
        return self._with(pow(self.val, -1, self.modulus), self.m)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return self._with(pow(self.val, e, self.modulus), self.m)

    def __eq__(self, other):
        """Equality at the common certified precision."""
        o = self._coerce(other)
        m = min(self.m, o.m)
        return (self.val - o.val) % self.p**m == 0

    def __hash__(self):
        return hash((self.p, self.m, self.val))

    def __repr__(self):
        return f"{self.val} mod {self.p}^{self.m}"


@dataclass(frozen=True)
class FiniteFieldElement:
    """Element of F_{p^f}, f <= 2, in the canonical fixed-polynomial encoding."""

    p: int
    f: int
    code: int

    def __post_init__(self):
        object.__setattr__(self, "code", int(self.code) % self.p**self.f)

    @property
    def field(self) -> GF:
        return GF(self.p, self.f)

    def _c(self, other) -> int:
        if isinstance(other, FiniteFieldElement):
            if (other.p, other.f) != (self.p, self.f):
                raise InputError("mixed fields")
            return other.code
        return self.field.from_int(int(other))

    def __add__(self, other):
        return FiniteFieldElement(self.p, self.f, self.field.add(self.code, self._c(other)))

    __radd__ = __add__

    def __neg__(self):
        return FiniteFieldElement(self.p, self.f, self.field.neg(self.code))

    def __sub__(self, other):
        return self + (-FiniteFieldElement(self.p, self.f, self._c(other)))

    def __mul__(self, other):
        return FiniteFieldElement(self.p, self.f, self.field.mul(self.code, self._c(other)))

    __rmul__ = __mul__

    def inverse(self):
        return FiniteFieldElement(self.p, self.f, self.field.inv(self.code))

    def __truediv__(self, other):
        return self * FiniteFieldElement(self.p, self.f, self._c(other)).inverse()

    def __eq__(self, other):
        return self.code == self._c(other)

    def __hash__(self):
        return hash((self.p, self.f, self.code))

    def __repr__(self):
        if self.f == 1:
            return f"{self.code} in GF({self.p})"
        c0, c1 = self.code % self.p, self.code // self.p
        return f"({c0} + {c1}*x) in GF({self.p}^2)"


# ---------------------------------------------------------------------------
# Teichmueller lifts and p-adic binomial coefficients
# ---------------------------------------------------------------------------


def teichmuller(a: int, p: int, m: int) -> ResidueElement:
    """The unique (p-1)-th root of unity mod p^m congruent to a mod p."""
    check_odd_prime(p)
    if a % p == 0:
        raise InputError("Teichmueller lift needs a unit")
    q = p**m
    x = a % q
    for _ in range(m + 1):
        x = pow(x, p, q)
    return ResidueElement(p, m, x)


def padic_binomial(a: ResidueElement, k: int) -> ResidueElement:
    """Binomial coefficient C(a, k) of a p-adic integer known mod p^m.

    The product a(a-1)...(a-k+1) is determined mod p^m, so dividing by k!
    certifies the result mod p^{m - v_p(k!)}; precision 0 is an error.
    """
    if k < 0:
        raise InputError("k must be nonnegative")
    if k == 0:
        return ResidueElement(a.p, a.m, 1)
    p, m = a.p, a.m
    v = vp_factorial(k, p)
    m_out = m - v
    if m_out < 1:
        raise PrecisionError(
            f"C(a, {k}) mod {p}^{m}: output precision {m_out} exhausted (v_p(k!) = {v})"
        )
    mod_work = p**m
    num = 1
    for j in range(k):
        num = num * ((a.val - j) % mod_work) % mod_work
    kfac = 1
    for j in range(2, k + 1):
        kfac *= j
    kfac_unit = kfac // p**v
    # the true product a(a-1)...(a-k+1) lies in p^v Z_p, so its residue
    # mod p^m (with v < m) is divisible by p^v
    out = (num // p**v) * pow(kfac_unit, -1, p**m_out) % p**m_out
    return ResidueElement(p, m_out, out)


def exact_binomial_mod(x: Fraction, k: int, ring) -> int:
    """C(x, k) for an exactly-known p-integral rational x, as a ring element.

    The denominator k! is handled at boosted working precision, so no
    precision is lost (contrast ``padic_binomial`` for finitely-known a).
    """
    p = ring.p
    if isinstance(x, int):
        x = Fraction(x)
    if x.denominator % p == 0:
        raise InputError(f"{x} is not p-integral")
    num = Fraction(1)
    for j in range(k):
        num *= x - j
    for j in range(2, k + 1):
        num /= j
    # num = C(x, k) is a p-integral rational (binomials preserve Z_p)
    if num.denominator % p == 0:
        raise InputError(f"C({x}, {k}) unexpectedly non-integral at {p}")
    if ring.is_field and ring.f > 1:
        return ring.from_int(num.numerator * pow(num.denominator, -1, p))
    q = ring.q if isinstance(ring, Zmod) else p
    return num.numerator * pow(num.denominator, -1, q) % q
