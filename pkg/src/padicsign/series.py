"""Truncated Laurent series over a finite coefficient ring, with the
substitution operators phi (X -> (1+X)^p - 1), sigma_b (X -> (1+X)^b - 1)
and the canonical left inverse psi of phi.

Every series carries a certified X-precision ``n_eff``: coefficients at
exponents in [lo, n_eff) are exact ring elements, coefficients at >= n_eff
are unknown.  Results propagate the minimum certified precision of their
inputs; nothing is ever silently rounded.

psi over Z/p^m is computed by p-adic lifting: the decomposition
f = sum_{i<p} (1+X)^i phi(x_i) is solved mod p by per-block triangular
exponent extraction (phi(X) = X^p in characteristic p) and lifted through
powers of p; each lifting step is exact linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InputError, MathCheckError, PrecisionError, TailBoundError
from .padic import GF, Zmod, exact_binomial_mod

BIG = 10**9  # n_eff marker for exactly-known series


def _as_exponent(b) -> Fraction:
    if isinstance(b, Fraction):
        return b
    if isinstance(b, int):
        return Fraction(b)
    raise InputError(f"substitution exponent must be an exact int/Fraction, got {type(b)}")


def _ring_from_key(key):
    kind, p, mf = key
    return Zmod(p, mf) if kind == "Zmod" else GF(p, mf)


@dataclass(frozen=True)
class TruncatedLaurentSeries:
    """Coefficient codes for exponents lo .. lo+len(coeffs)-1, certified below n_eff."""

    ring: object
    lo: int
    coeffs: tuple
    n_eff: int

    @staticmethod
    def make(ring, lo: int, codes, n_eff: int = BIG) -> "TruncatedLaurentSeries":
        """Build from already-encoded coefficients (ints are taken mod p^m /
        interpreted as GF codes mod q)."""
        q = ring.q
        arr = [int(c) % q for c in codes]
        hi = lo + len(arr)
        if n_eff < hi:
            arr = arr[: max(0, n_eff - lo)]
        while arr and arr[0] == 0:
            arr = arr[1:]
            lo += 1
        while arr and arr[-1] == 0:
            arr = arr[:-1]
        if not arr:
            lo = 0
        return TruncatedLaurentSeries(ring, lo, tuple(arr), n_eff)

    @staticmethod
    def from_ints(ring, lo: int, ints, n_eff: int = BIG) -> "TruncatedLaurentSeries":
        """Build from human integers (meaningful for GF(p,2): -1 -> p-1)."""
        return TruncatedLaurentSeries.make(ring, lo, [ring.from_int(int(c)) for c in ints], n_eff)

    @staticmethod
    def zero(ring, n_eff: int = BIG) -> "TruncatedLaurentSeries":
        return TruncatedLaurentSeries(ring, 0, (), n_eff)

    @staticmethod
    def one(ring) -> "TruncatedLaurentSeries":
        return TruncatedLaurentSeries(ring, 0, (1,), BIG)

    @staticmethod
    def monomial(ring, e: int, c: int = 1) -> "TruncatedLaurentSeries":
        return TruncatedLaurentSeries.make(ring, e, [ring.from_int(c)])

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def valuation(self) -> int:
        return self.lo if self.coeffs else self.n_eff

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs)

    def coeff(self, e: int) -> int:
        if e >= self.n_eff:
            raise PrecisionError(f"coefficient at X^{e} not certified (n_eff = {self.n_eff})")
        if e < self.lo or e >= self.hi:
            return 0
        return self.coeffs[e - self.lo]

    def truncate(self, n: int) -> "TruncatedLaurentSeries":
        if n >= self.n_eff:
            return self
        return TruncatedLaurentSeries.make(self.ring, self.lo, self.coeffs, n)

    def _match(self, other):
        if self.ring != other.ring:
            raise InputError("mixed coefficient rings")

    def __add__(self, other):
        self._match(other)
        n_eff = min(self.n_eff, other.n_eff)
        if self.is_zero():
            return other.truncate(n_eff)
        if other.is_zero():
            return self.truncate(n_eff)
        R = self.ring
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        arr = [0] * (hi - lo)
        for i, c in enumerate(self.coeffs):
            arr[self.lo - lo + i] = c
        for i, c in enumerate(other.coeffs):
            j = other.lo - lo + i
            arr[j] = R.add(arr[j], c)
        return TruncatedLaurentSeries.make(R, lo, arr, n_eff)

    def __neg__(self):
        R = self.ring
        return TruncatedLaurentSeries(R, self.lo, tuple(R.neg(c) for c in self.coeffs), self.n_eff)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, code: int) -> "TruncatedLaurentSeries":
        """Multiply by a ring element given as a code."""
        R = self.ring
        return TruncatedLaurentSeries.make(
            R, self.lo, [R.mul(code, c) for c in self.coeffs], self.n_eff
        )

    def scale_int(self, n: int) -> "TruncatedLaurentSeries":
        return self.scale(self.ring.from_int(n))

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale_int(other)
        self._match(other)
        R = self.ring
        if self.is_zero() or other.is_zero():
            return TruncatedLaurentSeries.zero(R, min(self.n_eff, other.n_eff))
        # unknown tail of one factor first pollutes exponent n_eff + val(other)
        n_eff = BIG
        if self.n_eff < BIG:
            n_eff = min(n_eff, self.n_eff + other.valuation)
        if other.n_eff < BIG:
            n_eff = min(n_eff, other.n_eff + self.valuation)
        a = np.array(self.coeffs, dtype=np.int64)
        b = np.array(other.coeffs, dtype=np.int64)
        c = _ring_convolve(R, a, b)
        return TruncatedLaurentSeries.make(R, self.lo + other.lo, c.tolist(), n_eff)

    __rmul__ = __mul__

    def shift(self, e: int) -> "TruncatedLaurentSeries":
        """Multiply by X^e."""
        if self.is_zero():
            return TruncatedLaurentSeries.zero(self.ring, self.n_eff + e if self.n_eff < BIG else BIG)
        return TruncatedLaurentSeries(
            self.ring, self.lo + e, self.coeffs, self.n_eff + e if self.n_eff < BIG else BIG
        )

    def eq_certified(self, other) -> bool:
        """Coefficientwise equality below the common certified precision."""
        self._match(other)
        n = min(self.n_eff, other.n_eff)
        lo = min(self.valuation, other.valuation)
        # beyond both supports all certified coefficients are zero
        upper = min(n, max(self.hi, other.hi))
        if lo >= upper:
            return True
        return all(self.coeff(e) == other.coeff(e) for e in range(lo, upper))

    def __repr__(self):
        terms = [f"{c}*X^{self.lo + i}" for i, c in enumerate(self.coeffs) if c]
        body = (" + ".join(terms[:8]) + (" + ..." if len(terms) > 8 else "")) if terms else "0"
        ne = "exact" if self.n_eff >= BIG else f"O(X^{self.n_eff})"
        return f"<{body} ({ne}) over {self.ring}>"


def _ring_convolve(R, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if isinstance(R, GF) and R.f == 2:
        p, n0 = R.p, R.n0
        a0, a1 = a % p, a // p
        b0, b1 = b % p, b // p
        c0 = (np.convolve(a0, b0) + n0 * np.convolve(a1, b1)) % p
        c1 = (np.convolve(a0, b1) + np.convolve(a1, b0)) % p
        return c0 + p * c1
    q = R.q
    if min(len(a), len(b)) * int(q - 1) ** 2 < 2**62:
        return np.convolve(a, b) % q
    # int64 could overflow: fall back to exact object arithmetic
    seg = np.convolve(a.astype(object), b.astype(object))
    return np.array([int(x) % q for x in seg], dtype=np.int64)


# ---------------------------------------------------------------------------
# binomial series
# ---------------------------------------------------------------------------


def binom_series(a, N: int, ring=None) -> TruncatedLaurentSeries:
    """(1+X)^a = sum_k C(a,k) X^k truncated at X^N.

    Exactly-known exponents (int, or Fraction with p-unit denominator) lose
    no precision.  A ``ResidueElement`` exponent known mod p^m yields
    coefficient k certified only mod p^{m - v_p(k!)}; the series is returned
    over the weakest certified coefficient ring, and an exhausted coefficient
    raises ``PrecisionError``.
    """
    from .padic import ResidueElement, padic_binomial

    if isinstance(a, ResidueElement):
        vals, m_min = [], a.m
        for k in range(N):
            ck = padic_binomial(a, k)
            m_min = min(m_min, ck.m)
            vals.append(ck.val)
        R = Zmod(a.p, m_min)
        return TruncatedLaurentSeries.make(R, 0, [v % R.q for v in vals], N)
    if ring is None:
        raise InputError("binom_series with an exact exponent needs an explicit ring")
    x = _as_exponent(a)
    if x.denominator % ring.p == 0:
        raise InputError(f"exponent {x} is not p-integral")
    if x.denominator == 1 and x >= 0:
        n = int(x)
        coeffs = [exact_binomial_mod(x, k, ring) for k in range(min(N, n + 1))]
        return TruncatedLaurentSeries.make(ring, 0, coeffs, BIG if n < N else N)
    return TruncatedLaurentSeries.make(ring, 0, [exact_binomial_mod(x, k, ring) for k in range(N)], N)


@lru_cache(maxsize=None)
def _one_plus_x_pow(ring_key, num: int, den: int, N: int) -> TruncatedLaurentSeries:
    ring = _ring_from_key(ring_key)
    return binom_series(Fraction(num, den), N, ring)


def one_plus_x_pow(ring, b, N: int) -> TruncatedLaurentSeries:
    """(1+X)^b to X-precision N for an exact p-integral exponent b (cached)."""
    b = _as_exponent(b)
    return _one_plus_x_pow(ring.key, b.numerator, b.denominator, N)


# ---------------------------------------------------------------------------
# inversion and substitution
# ---------------------------------------------------------------------------


def _as_poly(s: TruncatedLaurentSeries) -> TruncatedLaurentSeries:
    """The stored representative viewed as an exact Laurent polynomial."""
    return TruncatedLaurentSeries.make(s.ring, s.lo, s.coeffs, BIG)


def _poly_cut(s: TruncatedLaurentSeries, n: int) -> TruncatedLaurentSeries:
    """Drop coefficients at exponents >= n, keeping the exact-polynomial marker."""
    if s.hi <= n:
        return s
    return TruncatedLaurentSeries.make(s.ring, s.lo, s.coeffs[: max(0, n - s.lo)], BIG)


def invert_series(f: TruncatedLaurentSeries, N: int) -> TruncatedLaurentSeries:
    """h with f*h = 1, certified so that (f*h - 1) vanishes below X^N.

    Newton iteration on polynomial representatives: over a field seeded from
    the normalized geometric inverse, over Z/p^m additionally lifted from the
    mod-p inverse (the unit group of (Z/p^m)((X)) is larger than
    X^Z * R[[X]]^x, so the leading coefficient may be divisible by p).  The
    result is verified by multiplying back; failure is a hard error.
    """
    R = f.ring
    if f.is_zero():
        raise InputError("cannot invert 0")
    if isinstance(R, GF):
        h = _invert_unit_series(f, N)
    else:
        Rp = GF(R.p, 1)
        fp = TruncatedLaurentSeries.make(Rp, f.lo, [c % R.p for c in f.coeffs], f.n_eff)
        if fp.is_zero():
            raise InputError("series with nilpotent leading part is not invertible")
        gap = fp.valuation - f.valuation
        steps = max(1, (R.m - 1).bit_length())
        n_work = N + (R.m - 1) * max(1, gap) + 4
        if f.n_eff < n_work + max(0, -f.lo):
            raise PrecisionError(
                f"inversion to X^{N} needs input certified to {n_work + max(0, -f.lo)}"
            )
        inv_p = _invert_unit_series(fp, n_work)
        h = TruncatedLaurentSeries.make(R, inv_p.lo, inv_p.coeffs, BIG)  # lift mod-p seed
        fpoly = _as_poly(f)
        two = TruncatedLaurentSeries.make(R, 0, [2])
        for _ in range(steps):
            # 1 - f*h' = (1 - f*h)^2: each step doubles p-adic correctness
            h = _poly_cut(h * (two - fpoly * h), n_work)
    err = (_as_poly(f) * h - TruncatedLaurentSeries.one(R)).truncate(N)
    if not err.is_zero():
        raise MathCheckError("series inversion failed verification")
    return TruncatedLaurentSeries.make(R, h.lo, h.coeffs, N)


def _invert_unit_series(f: TruncatedLaurentSeries, N: int) -> TruncatedLaurentSeries:
    """Inverse over a field, where the leading coefficient is a unit."""
    R = f.ring
    v = f.valuation
    n_target = N + abs(v) + 1
    if f.n_eff < min(BIG, n_target + v):
        raise PrecisionError(f"inversion to X^{N} needs input certified to {n_target + v}")
    c0i = R.inv(f.coeffs[0])
    g = TruncatedLaurentSeries.make(R, 0, [R.mul(c0i, c) for c in f.coeffs], BIG)  # 1 + t
    inv = TruncatedLaurentSeries.one(R)
    prec = 1
    two = TruncatedLaurentSeries.make(R, 0, [2])
    while prec < n_target:
        prec = min(2 * prec, n_target)
        # Newton doubling: correctness below X^prec is a theorem
        inv = _poly_cut(inv * (two - g * inv), prec)
    return TruncatedLaurentSeries.make(
        R, inv.lo - v, [R.mul(c0i, c) for c in inv.coeffs], n_target - abs(v) - v
    )


@lru_cache(maxsize=None)
def _subst_powers(ring_key, num: int, den: int, lo: int, hi: int, N: int):
    """dict e -> T^e (certified to >= N) for e in [lo, hi), T = (1+X)^b - 1."""
    ring = _ring_from_key(ring_key)
    b = Fraction(num, den)
    m, p = ring.m, ring.p
    margin = N + 2 + 2 * max(0, -lo) * (m if isinstance(ring, Zmod) else 1)
    # headroom for the inversion's mod-p seed and lifting guard
    t_prec = margin + (m - 1) * (p - 1) + 2 * p + 10
    T = (one_plus_x_pow(ring, b, t_prec) - TruncatedLaurentSeries.one(ring)).truncate(t_prec)
    powers = {0: TruncatedLaurentSeries.one(ring)}
    acc = None
    for e in range(1, hi):
        acc = T if acc is None else (acc * T).truncate(margin + max(0, acc.valuation))
        powers[e] = acc
    if lo < 0:
        Tinv = invert_series(T, margin)
        acc = None
        for e in range(-1, lo - 1, -1):
            acc = Tinv if acc is None else (acc * Tinv).truncate(margin + min(0, acc.valuation))
            powers[e] = acc
    return powers


def substitute(
    f: TruncatedLaurentSeries, b, N: int, tail_bound: int | None = None
) -> TruncatedLaurentSeries:
    """f((1+X)^b - 1) truncated at X-precision N, for exact p-integral b."""
    R = f.ring
    b = _as_exponent(b)
    if f.is_zero():
        return TruncatedLaurentSeries.zero(R, min(f.n_eff, N))
    if tail_bound is not None and f.lo < -tail_bound:
        raise TailBoundError(f"substitution input valuation {f.lo} below -{tail_bound}")
    powers = _subst_powers(R.key, b.numerator, b.denominator, min(f.lo, 0), max(f.hi, 1), N)
    out = TruncatedLaurentSeries.zero(R)
    for i, c in enumerate(f.coeffs):
        if c:
            out = out + powers[f.lo + i].scale(c)
    # for unit b the substitution preserves valuations, so the uncertified
    # tail of f pollutes only exponents >= f.n_eff
    return out.truncate(min(N, f.n_eff))


def sigma_apply(
    f: TruncatedLaurentSeries, b, N: int | None = None, tail_bound: int | None = None
) -> TruncatedLaurentSeries:
    """Gamma-action sigma_b for a p-adic unit exponent b."""
    R = f.ring
    b = _as_exponent(b)
    if b.numerator % R.p == 0:
        raise InputError("sigma exponent must be a p-adic unit")
    if N is None:
        N = f.n_eff if f.n_eff < BIG else max(f.hi, 1)
    return substitute(f, b, N, tail_bound)


def phi_apply(f: TruncatedLaurentSeries, tail_bound: int | None = None) -> TruncatedLaurentSeries:
    """Frobenius phi(f) = f((1+X)^p - 1).

    In characteristic p this is exponent dilation by p.  Over Z/p^m the
    computation is exact on the stored window; the certified precision is
    p * n_eff in either case (knowing f below X^n pins phi(f) below X^{pn}).
    """
    R = f.ring
    p = R.p
    n_out = p * f.n_eff if f.n_eff < BIG else BIG
    if f.is_zero():
        return TruncatedLaurentSeries.zero(R, n_out)
    if tail_bound is not None and f.lo < -tail_bound:
        raise TailBoundError(f"phi input valuation {f.lo} below -{tail_bound}")
    if isinstance(R, GF):
        arr = [0] * ((len(f.coeffs) - 1) * p + 1)
        for i, c in enumerate(f.coeffs):
            arr[i * p] = c
        return TruncatedLaurentSeries.make(R, p * f.lo, arr, n_out)
    N_work = min(n_out, p * f.hi + R.m * (p - 1) + p)
    powers = _subst_powers(R.key, p, 1, min(f.lo, 0), max(f.hi, 1), N_work)
    out = TruncatedLaurentSeries.zero(R)
    for i, c in enumerate(f.coeffs):
        if c:
            out = out + powers[f.lo + i].scale(c)
    return out.truncate(n_out)


# ---------------------------------------------------------------------------
# psi
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _extraction_matrix_inv(p: int):
    """Inverse mod p of the unipotent matrix M[k][i] = C(i,k), 0 <= k,i < p.

    Per exponent block e = p j + k (0 <= k < p) a char-p series satisfies
    coeff(p j + k) = sum_i C(i,k) x_{i,j}, an upper-triangular system with
    unit diagonal, hence solvable over any coefficient ring.
    """
    M = [[comb(i, k) % p for i in range(p)] for k in range(p)]
    A = [row[:] + [1 if r == idx else 0 for r in range(p)] for idx, row in enumerate(M)]
    for col in range(p):
        inv = pow(A[col][col], p - 2, p)
        A[col] = [a * inv % p for a in A[col]]
        for r in range(p):
            if r != col and A[r][col]:
                fac = A[r][col]
                A[r] = [(a - fac * bb) % p for a, bb in zip(A[r], A[col])]
    return tuple(tuple(row[p:]) for row in A)


def _psi_out_precision(n_eff: int, p: int) -> int:
    if n_eff >= BIG:
        return BIG
    return (n_eff - p) // p + 1


def _psi_components_mod_p(f: TruncatedLaurentSeries):
    """All x_i with f = sum_i (1+X)^i x_i(X^p), over a characteristic-p ring."""
    R = f.ring
    p = R.p
    n_out = _psi_out_precision(f.n_eff, p)
    if f.is_zero():
        return [TruncatedLaurentSeries.zero(R, n_out)] * p
    Minv = _extraction_matrix_inv(p)
    lo, hi = f.lo, f.hi
    j_lo = lo // p if lo >= 0 else -((-lo + p - 1) // p)
    j_hi = (hi - 1) // p + 1
    comps = [dict() for _ in range(p)]
    for j in range(j_lo, j_hi):
        block = [f.coeffs[p * j + k - lo] if lo <= p * j + k < hi else 0 for k in range(p)]
        if not any(block):
            continue
        for i in range(p):
            xi = 0
            for k in range(p):
                if Minv[i][k] and block[k]:
                    xi = R.add(xi, R.mul(R.from_int(Minv[i][k]), block[k]))
            if xi:
                comps[i][j] = int(xi)
    out = []
    for i in range(p):
        d = comps[i]
        if not d:
            out.append(TruncatedLaurentSeries.zero(R, n_out))
            continue
        jmin, jmax = min(d), max(d)
        out.append(
            TruncatedLaurentSeries.make(R, jmin, [d.get(j, 0) for j in range(jmin, jmax + 1)], n_out)
        )
    return out


def psi_apply(f: TruncatedLaurentSeries) -> TruncatedLaurentSeries:
    """psi(f) = x_0 of the decomposition f = sum_{i<p}(1+X)^i phi(x_i).

    Certified X-precision drops to roughly n_eff/p; if no coefficient at all
    is certified the call raises ``PrecisionError``.
    """
    R = f.ring
    p = R.p
    n_out = _psi_out_precision(f.n_eff, p)
    if n_out != BIG and n_out <= min(0, f.valuation // p) and not f.is_zero():
        raise PrecisionError(f"psi output precision {n_out} leaves nothing computable")
    if isinstance(R, GF):
        return _psi_components_mod_p(f)[0]
    m = R.m
    Rp = GF(p, 1)
    residual = f
    x0 = TruncatedLaurentSeries.zero(R, n_out)
    for t in range(m):
        scale = p**t
        if any(c % scale for c in residual.coeffs):
            raise MathCheckError(f"psi lifting residual not divisible by p^{t}")
        red = TruncatedLaurentSeries.make(
            Rp, residual.lo, [(c // scale) % p for c in residual.coeffs], residual.n_eff
        )
        comps = _psi_components_mod_p(red)
        lift0 = TruncatedLaurentSeries.make(
            R, comps[0].lo, [scale * c for c in comps[0].coeffs], comps[0].n_eff
        )
        x0 = x0 + lift0
        if t == m - 1:
            break
        image = TruncatedLaurentSeries.zero(R)
        for i in range(p):
            if comps[i].is_zero():
                continue
            ci = TruncatedLaurentSeries.make(R, comps[i].lo, comps[i].coeffs, BIG)
            term = phi_apply(ci)
            if i:
                term = one_plus_x_pow(R, i, i + 1) * term
            image = image + term
        residual = (residual - image.scale_int(scale)).truncate(residual.n_eff)
    return x0.truncate(n_out)
