"""Exact arithmetic in Z[zeta_{p^n}] on the power basis.

Division by the quadratic Gauss sum g is carried out as multiplication by g
followed by exact division by the integer g^2 = p* = (-1/p) p, so no
fractional representations ever appear; any nonzero remainder is a hard
certification error.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import InputError, MathCheckError
from .padic import check_odd_prime, legendre


def _phi(p: int, n: int) -> int:
    return p ** (n - 1) * (p - 1)


@dataclass(frozen=True)
class CyclotomicInt:
    """Element of Z[zeta_{p^n}] with exact integer coefficients.

    ``coeffs`` has length phi(p^n) and is reduced against the cyclotomic
    polynomial Phi_{p^n}(X) = sum_{k<p} X^{k p^{n-1}}.
    """

    p: int
    n: int
    coeffs: tuple

    def __post_init__(self):
        check_odd_prime(self.p)
        if self.n < 1:
            raise InputError("conductor exponent n must be >= 1")
        if len(self.coeffs) != _phi(self.p, self.n):
            raise InputError("coefficient vector has wrong length")

    # -- construction -----------------------------------------------------

    @staticmethod
    def zero(p: int, n: int = 1) -> "CyclotomicInt":
        return CyclotomicInt(p, n, (0,) * _phi(p, n))

    @staticmethod
    def integer(c: int, p: int, n: int = 1) -> "CyclotomicInt":
        v = [0] * _phi(p, n)
        v[0] = c
        return CyclotomicInt(p, n, tuple(v))

    @staticmethod
    def root_power(p: int, n: int, e: int) -> "CyclotomicInt":
        """zeta_{p^n}^e, reduced to the power basis."""
        e %= p**n
        phi = _phi(p, n)
        if e < phi:
            v = [0] * phi
            v[e] = 1
            return CyclotomicInt(p, n, tuple(v))
        return CyclotomicInt._reduce(p, n, {e: 1})

    @staticmethod
    def _reduce(p: int, n: int, expo: dict) -> "CyclotomicInt":
        """Reduce an exponent->coefficient dict via zeta^{p^n} = 1 and
        zeta^{phi} = -(1 + zeta^{p^{n-1}} + ... + zeta^{(p-2) p^{n-1}})."""
        phi = _phi(p, n)
        step = p ** (n - 1)
        order = p**n
        work = [0] * order
        for e, c in expo.items():
            work[e % order] += c
        for e in range(order - 1, phi - 1, -1):
            c = work[e]
            if c == 0:
                continue
            work[e] = 0
            base = e - phi  # zeta^e = zeta^{base} * zeta^{phi}
            for k in range(p - 1):
                work[(base + k * step) % order] -= c
        return CyclotomicInt(p, n, tuple(work[:phi]))

    # -- ring structure ----------------------------------------------------

    def _match(self, other: "CyclotomicInt") -> None:
        if not isinstance(other, CyclotomicInt) or other.p != self.p or other.n != self.n:
            raise InputError("mixed cyclotomic rings")

    def __add__(self, other):
        self._match(other)
        return CyclotomicInt(self.p, self.n, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return CyclotomicInt(self.p, self.n, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return CyclotomicInt(self.p, self.n, tuple(other * a for a in self.coeffs))
        self._match(other)
        expo: dict = {}
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if b == 0:
                    continue
                e = i + j
                expo[e] = expo.get(e, 0) + a * b
        return CyclotomicInt._reduce(self.p, self.n, expo)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, int):
            other = CyclotomicInt.integer(other, self.p, self.n)
        self._match(other)
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.p, self.n, self.coeffs))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def galois(self, b: int) -> "CyclotomicInt":
        """sigma_b: zeta -> zeta^b, for b coprime to p."""
        if b % self.p == 0:
            raise InputError("Galois exponent must be coprime to p")
        expo: dict = {}
        for i, c in enumerate(self.coeffs):
            if c:
                e = (i * b) % self.p**self.n
                expo[e] = expo.get(e, 0) + c
        return CyclotomicInt._reduce(self.p, self.n, expo)

    def divide_exact_int(self, d: int) -> "CyclotomicInt":
        if any(c % d for c in self.coeffs):
            raise MathCheckError(f"exact division by {d} failed")
        return CyclotomicInt(self.p, self.n, tuple(c // d for c in self.coeffs))

    def rational_value(self) -> int:
        """The integer this element equals, or raise if not rational."""
        if any(c for c in self.coeffs[1:]):
            raise MathCheckError("element is not a rational integer")
        return self.coeffs[0]

    def lift_conductor(self, n_new: int) -> "CyclotomicInt":
        """Image under Z[zeta_{p^n}] -> Z[zeta_{p^{n_new}}], zeta -> zeta^{p^{n_new-n}}."""
        if n_new < self.n:
            raise InputError("can only lift to a larger conductor")
        if n_new == self.n:
            return self
        shift = self.p ** (n_new - self.n)
        expo = {i * shift: c for i, c in enumerate(self.coeffs) if c}
        return CyclotomicInt._reduce(self.p, n_new, expo)

    def __repr__(self):
        terms = [f"{c}*z^{i}" for i, c in enumerate(self.coeffs) if c]
        body = " + ".join(terms) if terms else "0"
        return f"CyclotomicInt({self.p}^{self.n}: {body})"


@lru_cache(maxsize=None)
def quadratic_gauss_sum(p: int) -> CyclotomicInt:
    """g = sum_{a in F_p^x} (a/p) zeta_p^a, satisfying g^2 = (-1/p) p."""
    check_odd_prime(p)
    expo = {a: legendre(a, p) for a in range(1, p)}
    return CyclotomicInt._reduce(p, 1, expo)


def p_star(p: int) -> int:
    return legendre(-1, p) * p


def certify_sign_from_gauss_quotient(x: CyclotomicInt) -> int:
    """Certify x = s * g for the quadratic Gauss sum g and return s in {+1,-1}.

    Computed as x * g / p*, which must be exactly +-1 in Z[zeta]; anything
    else is a certification failure.
    """
    p = x.p
    g = quadratic_gauss_sum(p).lift_conductor(x.n)
    q = (x * g).divide_exact_int(p_star(p))
    s = q.rational_value()
    if s not in (1, -1):
        raise MathCheckError(f"Gauss-sum quotient is {s}, not a sign")
    return s
