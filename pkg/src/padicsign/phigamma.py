"""Etale (phi,Gamma)-modules of rank <= 2 over R((X)), Herr-complex
cohomology, and the cup-product (Tate) pairing with a one-time calibration
against the class-field-theory evaluation oracle.

The Herr complex of D with Gamma-generator sigma_a is

    D --((phi-1), (sigma-1))--> D + D --((sigma-1), -(phi-1))--> D.

Cohomology is solved on exponent windows [-B, N): operators are materialized
exactly (phi) or to a certified precision covering the whole output window
(sigma, psi), kernels are kernels of those exact maps restricted to
window-supported inputs, and coboundaries are taken over an enlarged domain
window and intersected with the window pair space.  Ranks are accepted only
after stabilizing across three window growths and passing the
Euler-characteristic check h0 - h1 + h2 = -rank * length(R).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InputError, MathCheckError, PrecisionError, StabilizationError
from .linalg import gf_rank, gf_rref, image_length, kernel, solve
from .padic import GF, Zmod, smallest_primitive_root_mod_p2
from .series import (
    BIG,
    TruncatedLaurentSeries as TLS,
    one_plus_x_pow,
    phi_apply,
    psi_apply,
    sigma_apply,
)


# ---------------------------------------------------------------------------
# characters of Z_p^x with ring values
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _unit_dlog_table(p: int, k: int, a: int):
    mod = p**k
    order = (p - 1) * p ** (k - 1)
    table = {}
    acc = 1
    for t in range(order):
        table[acc] = t
        acc = acc * a % mod
    if len(table) != order:
        raise MathCheckError(f"{a} does not generate (Z/{p}^{k})^x")
    return table


def unit_dlog(b, p: int, k: int, a: int) -> int:
    """t with a^t = b in (Z/p^k)^x, for an exact p-unit b (int or Fraction)."""
    b = Fraction(b)
    mod = p**k
    bint = b.numerator * pow(b.denominator, -1, mod) % mod
    table = _unit_dlog_table(p, k, a)
    if bint not in table:
        raise InputError(f"{b} is not a unit mod {p}^{k}")
    return table[bint]


@dataclass(frozen=True)
class UnitCharacter:
    """A character of Z_p^x valued in the coefficient ring, stored by its
    value at the fixed topological generator a."""

    ring: object
    a: int
    value_at_gen: int

    @property
    def order(self) -> int:
        R = self.ring
        acc, n = self.value_at_gen, 1
        while acc != R.one:
            acc = R.mul(acc, self.value_at_gen)
            n += 1
            if n > 4 * R.q:
                raise MathCheckError("character value is not a root of unity")
        return n

    def value_at(self, b) -> int:
        R = self.ring
        p = R.p
        n = self.order
        k = 1
        while ((p - 1) * p ** (k - 1)) % n:
            k += 1
        t = unit_dlog(b, p, k, self.a) % n
        out, base = R.one, self.value_at_gen
        while t:
            if t & 1:
                out = R.mul(out, base)
            base = R.mul(base, base)
            t >>= 1
        return out

    def tame_exponent(self) -> int:
        """r with residual value abar^r at the generator (defined mod the
        order of abar in the residue field)."""
        R = self.ring
        Rp = R.residue_field()
        target = R.reduce_mod_p(self.value_at_gen)
        abar = Rp.from_int(self.a)
        acc = Rp.one
        for r in range(Rp.q):
            if acc == target:
                return r
            acc = Rp.mul(acc, abar)
        raise MathCheckError("residual value not in the tame image")


# ---------------------------------------------------------------------------
# the module class
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhiGammaModule:
    """Rank <= 2 etale module: phi acts by ``phi matrix o series Frobenius``,
    sigma_b by a semilinear matrix (character values on the diagonal, a
    cocycle entry for extensions) composed with the series substitution."""

    ring: object
    rank: int
    a: int
    chars: tuple  # per rank-one factor: (value_at_p, value_at_gen) codes
    cocycle: tuple | None  # (c_phi, c_sigma) over the twist, or None
    tag: str  # rank1 | sum | extension
    tail_bound: int = 0  # 0: use the default 2p + 8

    def __post_init__(self):
        if self.tail_bound <= 0:
            object.__setattr__(self, "tail_bound", 2 * self.ring.p + 8)

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def rank1(ring, value_at_p: int, value_at_gen: int, a: int | None = None,
              tail_bound: int = 0) -> "PhiGammaModule":
        a = smallest_primitive_root_mod_p2(ring.p) if a is None else a
        for v in (value_at_p, value_at_gen):
            if not ring.is_unit(v):
                raise InputError("character values must be units")
        return PhiGammaModule(ring, 1, a, ((value_at_p, value_at_gen),), None, "rank1",
                              tail_bound)

    @staticmethod
    def cyclotomic(ring, a: int | None = None) -> "PhiGammaModule":
        """E(cyc): value 1 at p, abar at the generator."""
        a = smallest_primitive_root_mod_p2(ring.p) if a is None else a
        return PhiGammaModule.rank1(ring, ring.one, ring.from_int(a), a)

    @staticmethod
    def direct_sum(D1: "PhiGammaModule", D2: "PhiGammaModule") -> "PhiGammaModule":
        if D1.ring != D2.ring or D1.a != D2.a:
            raise InputError("sum factors must share ring and generator")
        if D1.rank != 1 or D2.rank != 1:
            raise InputError("only rank-one factors are supported")
        return PhiGammaModule(D1.ring, 2, D1.a, (D1.chars[0], D2.chars[0]), None, "sum",
                              max(D1.tail_bound, D2.tail_bound))

    @staticmethod
    def extension(D1: "PhiGammaModule", D2: "PhiGammaModule", c_phi: TLS, c_sigma: TLS,
                  tail_bound: int = 0) -> "PhiGammaModule":
        """Extension of D2 by D1:
        phi = [[d1(p), d2(p) c_phi], [0, d2(p)]],
        sigma = [[d1(abar), d2(abar) c_sigma], [0, d2(abar)]];
        (c_phi, c_sigma) must be a Herr 1-cocycle of the twist E(d1/d2),
        which is exactly commutation of the two matrices."""
        if D1.ring != D2.ring or D1.a != D2.a:
            raise InputError("extension factors must share ring and generator")
        D = PhiGammaModule(D1.ring, 2, D1.a, (D1.chars[0], D2.chars[0]),
                           (c_phi, c_sigma), "extension", tail_bound)
        tw = D.twist_module()
        ncheck = max(c_phi.hi, c_sigma.hi, 6) + 2 * D1.ring.p
        err = tw.d1_apply(([c_phi], [c_sigma]))[0]
        if not err.truncate(min(ncheck, err.n_eff)).is_zero():
            raise MathCheckError("extension data is not a 1-cocycle of the twist")
        return D

    def twist_module(self) -> "PhiGammaModule":
        """E(d1/d2) for rank-two constructions."""
        R = self.ring
        (p1, g1), (p2, g2) = self.chars
        return PhiGammaModule.rank1(R, R.mul(p1, R.inv(p2)), R.mul(g1, R.inv(g2)),
                                    self.a, self.tail_bound)

    def dual_twist(self) -> "PhiGammaModule":
        """Hom(D, E(cyc)): contragredient matrices twisted by the cyclotomic
        character; for an extension the factors swap and the cocycle entries
        change sign."""
        R = self.ring
        abar = R.from_int(self.a)
        if self.rank == 1:
            (pv, gv) = self.chars[0]
            return PhiGammaModule.rank1(R, R.inv(pv), R.mul(abar, R.inv(gv)),
                                        self.a, self.tail_bound)
        (p1, g1), (p2, g2) = self.chars
        c1 = (R.inv(p2), R.mul(abar, R.inv(g2)))
        c2 = (R.inv(p1), R.mul(abar, R.inv(g1)))
        cocycle = None
        if self.cocycle is not None:
            cocycle = (-self.cocycle[0], -self.cocycle[1])
        return PhiGammaModule(R, 2, self.a, (c1, c2), cocycle,
                              self.tag, self.tail_bound)

    def factor(self, i: int) -> "PhiGammaModule":
        return PhiGammaModule.rank1(self.ring, *self.chars[i], self.a, self.tail_bound)

    def unit_character(self, i: int) -> UnitCharacter:
        return UnitCharacter(self.ring, self.a, self.chars[i][1])

    def entry_depth(self) -> int:
        """How far below exponent zero the matrix entries reach."""
        if self.cocycle is None:
            return 0
        return max(0, -min(f.lo for f in self.cocycle if not f.is_zero()) if any(not f.is_zero() for f in self.cocycle) else 0)

    def det_char(self) -> tuple:
        R = self.ring
        if self.rank == 1:
            return self.chars[0]
        (p1, g1), (p2, g2) = self.chars
        return (R.mul(p1, p2), R.mul(g1, g2))

    def is_symplectic_self_dual(self) -> bool:
        """Standard det-form equivariance needs det = cyclotomic: value 1 at
        p and abar at the generator."""
        R = self.ring
        dp, dg = self.det_char()
        return self.rank == 2 and dp == R.one and dg == R.from_int(self.a)

    # -- semilinear actions -----------------------------------------------------

    def _phi_matrix(self):
        R = self.ring
        if self.rank == 1:
            return [[TLS.make(R, 0, [self.chars[0][0]])]]
        (p1, _), (p2, _) = self.chars
        c01 = self.cocycle[0].scale(p2) if self.cocycle is not None else TLS.zero(R)
        return [[TLS.make(R, 0, [p1]), c01], [TLS.zero(R), TLS.make(R, 0, [p2])]]

    def _phi_matrix_inverse(self):
        R = self.ring
        if self.rank == 1:
            return [[TLS.make(R, 0, [R.inv(self.chars[0][0])])]]
        (p1, _), (p2, _) = self.chars
        i1, i2 = R.inv(p1), R.inv(p2)
        c01 = (self.cocycle[0].scale(R.neg(R.mul(p2, R.mul(i1, i2))))
               if self.cocycle is not None else TLS.zero(R))
        # inverse of [[p1, p2 c],[0, p2]] = [[1/p1, -(c p2)/(p1 p2)],[0, 1/p2]]
        return [[TLS.make(R, 0, [i1]), c01], [TLS.zero(R), TLS.make(R, 0, [i2])]]

    def _sigma_matrix(self, b, n_prec: int):
        R = self.ring
        b = Fraction(b)
        if self.rank == 1:
            return [[TLS.make(R, 0, [self.unit_character(0).value_at(b)])]]
        v1 = self.unit_character(0).value_at(b)
        v2 = self.unit_character(1).value_at(b)
        c01 = TLS.zero(R)
        if self.cocycle is not None:
            c01 = self._cocycle_at(b, n_prec).scale(v2)
        return [[TLS.make(R, 0, [v1]), c01], [TLS.zero(R), TLS.make(R, 0, [v2])]]

    def _cocycle_at(self, b: Fraction, n_prec: int) -> TLS:
        if b == Fraction(self.a):
            return self.cocycle[1]
        return _cocycle_value(self, b, n_prec)

    def phi_elt(self, elt, tail_bound: int | None = None):
        mat = self._phi_matrix()
        bound = self.tail_bound if tail_bound is None else tail_bound
        rho = [phi_apply(f, bound) for f in elt]
        return [_row_apply(self.ring, mat[i], rho) for i in range(self.rank)]

    def psi_elt(self, elt):
        inv = self._phi_matrix_inverse()
        mixed = [_row_apply(self.ring, inv[i], elt) for i in range(self.rank)]
        return [psi_apply(f) for f in mixed]

    def sigma_elt(self, elt, b=None, n_prec: int | None = None):
        b = Fraction(self.a) if b is None else Fraction(b)
        if n_prec is None:
            finite = [f.n_eff for f in elt if f.n_eff < BIG]
            n_prec = min(finite) if finite else max(
                2 * max((f.hi for f in elt), default=4), 16
            )
        mat = self._sigma_matrix(b, n_prec)
        # sigma preserves valuations; the tail bound only guards phi
        rho = [sigma_apply(f, b, n_prec, None) for f in elt]
        return [_row_apply(self.ring, mat[i], rho) for i in range(self.rank)]

    # -- Herr differentials -----------------------------------------------------

    def d0_apply(self, elt):
        ph = self.phi_elt(elt)
        sg = self.sigma_elt(elt)
        return ([x - y for x, y in zip(ph, elt)], [x - y for x, y in zip(sg, elt)])

    def d1_apply(self, pair, n_prec: int | None = None):
        a_elt, b_elt = pair
        sg = self.sigma_elt(a_elt, None, n_prec)
        ph = self.phi_elt(b_elt)
        return [(x - y) - (u - v) for x, y, u, v in zip(sg, a_elt, ph, b_elt)]


def _row_apply(ring, row, vec):
    out = None
    for entry, f in zip(row, vec):
        if entry.is_zero() or f.is_zero():
            continue
        term = entry * f
        out = term if out is None else out + term
    if out is None:
        n_eff = min([x.n_eff for x in vec], default=BIG)
        return TLS.zero(ring, n_eff)
    return out


def _cocycle_value(D: PhiGammaModule, b: Fraction, n_prec: int) -> TLS:
    """c_sigma(b) for the extension cocycle by twisted-norm doubling:
    c(gh) = c(g) + eta(g) sigma_g(c(h)) along the binary expansion of an
    integer exponent u with a^u = b deep enough that sigma_{a^u} agrees with
    sigma_b below the working precision."""
    R = D.ring
    p = R.p
    extra = (R.m + 2) if isinstance(R, Zmod) else 1
    M = 1
    while p**M < n_prec:
        M += 1
    u = unit_dlog(b, p, M + extra, D.a)
    eta = D.twist_module().unit_character(0)
    c_a = D.cocycle[1]
    t_cur, c_cur = 0, TLS.zero(R)
    for bit in bin(u)[2:] if u else "0":
        if t_cur:
            c_cur = _cocycle_combine(D, eta, t_cur, c_cur, c_cur, n_prec)
        t_cur *= 2
        if bit == "1":
            c_cur = _cocycle_combine(D, eta, t_cur, c_cur, c_a, n_prec)
            t_cur += 1
    return c_cur.truncate(n_prec)


def _cocycle_combine(D, eta, t1, c1, c2, n_prec):
    """c(a^{t1} * a^{t2-part}) = c1 + eta(a^{t1}) sigma_{a^{t1}}(c2)."""
    R = D.ring
    if t1 == 0:
        return (c1 + c2).truncate(n_prec)
    k = 1
    while R.p**k < 2 * n_prec + 2 * R.m * R.p:
        k += 1
    a_t1 = Fraction(pow(D.a, t1, R.p**k))
    moved = sigma_apply(c2, a_t1, n_prec, D.tail_bound)
    return (c1 + moved.scale(eta.value_at(a_t1))).truncate(n_prec)


# ---------------------------------------------------------------------------
# windows and materialized operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Window:
    B: int  # allowed exponents start at -B
    N: int  # exclusive upper bound

    @property
    def size(self) -> int:
        return self.B + self.N

    def index(self, e: int) -> int:
        return e + self.B

    def contains(self, e: int) -> bool:
        return -self.B <= e < self.N


def elt_to_vec(elt, win: Window) -> np.ndarray:
    out = np.zeros(len(elt) * win.size, dtype=np.int64)
    for i, f in enumerate(elt):
        for k, c in enumerate(f.coeffs):
            e = f.lo + k
            if not win.contains(e):
                if c and e < min(win.N, f.n_eff):
                    raise PrecisionError(f"element support X^{e} outside window")
                continue
            out[i * win.size + win.index(e)] = c
    return out


def vec_to_elt(ring, vec: np.ndarray, win: Window, rank: int, n_eff: int = BIG):
    return [
        TLS.make(ring, -win.B, vec[i * win.size : (i + 1) * win.size].tolist(), n_eff)
        for i in range(rank)
    ]


def pair_to_vec(pair, win: Window) -> np.ndarray:
    return np.concatenate([elt_to_vec(pair[0], win), elt_to_vec(pair[1], win)])


def vec_to_pair(ring, vec: np.ndarray, win: Window, rank: int, n_eff: int = BIG):
    half = rank * win.size
    return (vec_to_elt(ring, vec[:half], win, rank, n_eff),
            vec_to_elt(ring, vec[half:], win, rank, n_eff))


class ModuleWindowOps:
    """Materialized operator matrices on a window, cached per instance.

    The window's own depth is taken as the phi tail bound: internal solves
    (deep coboundary domains) legitimately exceed the module's configured
    working bound."""

    def __init__(self, D: PhiGammaModule, win: Window):
        self.D = D
        self.win = win
        self._cache: dict = {}

    def _basis_elt(self, i: int, e: int):
        elt = [TLS.zero(self.D.ring) for _ in range(self.D.rank)]
        elt[i] = TLS.monomial(self.D.ring, e)
        return elt

    def out_window(self) -> Window:
        """Window containing the exact support of phi on the domain window
        (the widest of the three operators), padded by the depth of the
        module's matrix entries (extension cocycles reach below zero)."""
        p, m = self.D.ring.p, self.D.ring.m
        spread = (m - 1) * (p - 1) + p + 2 + self.D.entry_depth()
        return Window(self.win.B * p + spread, self.win.N * p + spread)

    def _materialize(self, apply_fn, out_win: Window, cert_rows: int):
        """(matrix, certified_rows): rows at exponents >= the returned bound
        are not trustworthy (truncated extension data shortens them)."""
        D, win = self.D, self.win
        M = np.zeros((D.rank * out_win.size, D.rank * win.size), dtype=np.int64)
        cert = cert_rows
        for i in range(D.rank):
            for e in range(-win.B, win.N):
                col = i * win.size + win.index(e)
                out = apply_fn(self._basis_elt(i, e))
                for j, f in enumerate(out):
                    cert = min(cert, f.n_eff)
                    for k, c in enumerate(f.coeffs):
                        ee = f.lo + k
                        if out_win.contains(ee):
                            M[j * out_win.size + out_win.index(ee), col] = c
                        elif c and ee < -out_win.B:
                            raise PrecisionError("operator support below output window")
        return M, cert

    def matrix(self, name: str):
        """(matrix, out_window, certified_row_bound) for phi/sigma/psi."""
        if name in self._cache:
            return self._cache[name]
        D = self.D
        out_win = self.out_window()
        if name == "phi":
            M, cert = self._materialize(
                lambda e: D.phi_elt(e, tail_bound=self.win.B + 1), out_win, out_win.N
            )
        elif name == "sigma":
            M, cert = self._materialize(
                lambda e: [f.truncate(out_win.N) for f in D.sigma_elt(e, None, out_win.N)],
                out_win, out_win.N,
            )
        elif name == "psi":
            # psi of an exact windowed element over exact matrices is exact
            # and contracts support, so the output window is fully certified
            out_win = Window(self.win.B + 2, self.win.N + 2)
            M, cert = self._materialize(D.psi_elt, out_win, out_win.N)
        else:
            raise InputError(f"unknown operator {name}")
        self._cache[name] = (M, out_win, cert)
        return self._cache[name]

    def identity_into(self, out_win: Window) -> np.ndarray:
        M = np.zeros((self.D.rank * out_win.size, self.D.rank * self.win.size), dtype=np.int64)
        for i in range(self.D.rank):
            for e in range(-self.win.B, self.win.N):
                if out_win.contains(e):
                    M[i * out_win.size + out_win.index(e), i * self.win.size + self.win.index(e)] = 1
        return M


def restriction_matrix(rank: int, src: Window, dst: Window) -> np.ndarray:
    """Coordinate projection from src-window vectors to dst-window vectors."""
    M = np.zeros((rank * dst.size, rank * src.size), dtype=np.int64)
    for i in range(rank):
        for e in range(-dst.B, dst.N):
            if src.contains(e):
                M[i * dst.size + dst.index(e), i * src.size + src.index(e)] = 1
    return M


# ---------------------------------------------------------------------------
# Herr cohomology on truncation towers
#
# Both differentials of the (phi, sigma)-complex only involve lower or equal
# exponents, so they descend exactly to the finite quotients
# T_n = X^{-B} R[[X]] / X^{>= n} (outputs live in a deeper window below, and
# are capped above at n).  The complex of D is the filtered colimit over B
# of the inverse limit over n of these finite complexes; for finite
# coefficient rings Mittag-Leffler gives
#     H^i = stabilized image of H^i(C_{n + step}) -> H^i(C_n),
# which is what the solver computes, certified by stabilization across
# window growths and the Euler characteristic.
# ---------------------------------------------------------------------------


@dataclass
class HerrCohomologySpace:
    lengths: tuple  # (h0, h1, h2) as Z_p-lengths (log_p sizes)
    basis: list  # H^1 basis: certified cocycle pairs (a, b) (field rings)
    window: Window
    history: list  # [(N, lengths)] stabilization report
    euler_ok: bool


def default_schedule(D: PhiGammaModule):
    p = D.ring.p
    base = max(4 * p, 12)
    return [Window(min(p + 3 + t, D.tail_bound - 2), base + t * p) for t in range(9)]


def herr_cohomology(D: PhiGammaModule, schedule=None) -> HerrCohomologySpace:
    """Lengths (h0, h1, h2) and an H^1 basis of certified cocycle pairs.

    Rank-one modules are solved on truncation towers directly.  Direct sums
    are componentwise.  Extensions use the long exact cohomology sequence of
    0 -> D1 -> D -> D2 -> 0 with constructive connecting maps against the
    rank-one engine, which keeps every solve inside spaces where the tower
    computation is certified.  Euler characteristic is checked on every
    accepted result.
    """
    R = D.ring
    if isinstance(R, GF) and R.f > 1:
        raise InputError("windowed solver supports chain rings and prime fields")
    if D.tag == "rank1":
        return _herr_rank1(D, schedule)
    if D.tag == "sum":
        return _herr_sum(D, schedule)
    return _herr_extension(D, schedule)


class _TowerMaps:
    """Capped differentials of the truncation quotient T(B, N)."""

    def __init__(self, D: PhiGammaModule, win: Window):
        self.D = D
        self.win = win
        ops = ModuleWindowOps(D, win)
        PHI, out_phi, cert_phi = ops.matrix("phi")
        SIG, out_sig, cert_sig = ops.matrix("sigma")
        assert out_phi == out_sig
        if min(cert_phi, cert_sig) < win.N:
            raise PrecisionError(
                f"module data certified to {min(cert_phi, cert_sig)} < window {win.N}; "
                "rebuild the extension cocycle at higher precision"
            )
        self.out = Window(out_phi.B, win.N)  # cap above at N, keep the depth
        cap = restriction_matrix(D.rank, out_phi, self.out)
        emb = restriction_matrix(D.rank, win, self.out)
        q = D.ring.q
        self.d0_phi = (cap @ PHI - emb) % q
        self.d0_sig = (cap @ SIG - emb) % q
        self.D0 = np.vstack([self.d0_phi, self.d0_sig])
        self.D1 = np.hstack([self.d0_sig, (-self.d0_phi) % q])


def _len_unit(R):
    return R.f if isinstance(R, GF) else R.m


def _span_length(R, rows) -> int:
    if rows.shape[0] == 0:
        return 0
    return image_length(R, rows.T)


def _complement_rows(rank: int, src: Window, keep: Window) -> np.ndarray:
    rows = []
    for i in range(rank):
        for e in range(-src.B, src.N):
            if not keep.contains(e):
                r = np.zeros(rank * src.size, dtype=np.int64)
                r[i * src.size + src.index(e)] = 1
                rows.append(r)
    if not rows:
        return np.zeros((0, rank * src.size), dtype=np.int64)
    return np.stack(rows)


def _herr_at_window(D: PhiGammaModule, win: Window):
    """One tower step for a rank-one module: capped kernels compared along
    both the precision and the depth direction, coboundaries from the deep
    domain."""
    R = D.ring
    q = R.q
    rank = D.rank
    p = R.p
    step = max(p + 2, win.N)
    big = Window(win.B, win.N + step)
    t1 = _TowerMaps(D, win)
    t2 = _TowerMaps(D, big)
    proj_dom = restriction_matrix(rank, big, win)

    # H^0: image of ker(d0 on T_big) inside T_win
    K0 = kernel(R, t2.D0)
    K0w = (K0 @ proj_dom.T) % q if K0.shape[0] else K0.reshape(0, rank * win.size)
    h0 = _span_length(R, K0w)

    # H^1 candidates from the big window
    proj_pair = np.zeros((2 * rank * win.size, 2 * rank * big.size), dtype=np.int64)
    proj_pair[: rank * win.size, : rank * big.size] = proj_dom
    proj_pair[rank * win.size :, rank * big.size :] = proj_dom
    Z1 = kernel(R, t2.D1)
    Z1w = (Z1 @ proj_pair.T) % q if Z1.shape[0] else Z1.reshape(0, 2 * rank * win.size)
    emb = restriction_matrix(rank, win, t1.out)
    emb_pair = np.zeros((2 * rank * t1.out.size, 2 * rank * win.size), dtype=np.int64)
    emb_pair[: rank * t1.out.size, : rank * win.size] = emb
    emb_pair[rank * t1.out.size :, rank * win.size :] = emb
    Z1o = (Z1w @ emb_pair.T) % q if Z1w.shape[0] else Z1w.reshape(0, 2 * rank * t1.out.size)
    # second kernel source from a deeper window to starve bottom-anchored junk
    deep_big = Window(win.B + p + 2, big.N)
    t3 = _TowerMaps(D, deep_big)
    Z1d = kernel(R, t3.D1)
    proj_dd = restriction_matrix(rank, deep_big, win)
    proj_pair_d = np.zeros((2 * rank * win.size, 2 * rank * deep_big.size), dtype=np.int64)
    proj_pair_d[: rank * win.size, : rank * deep_big.size] = proj_dd
    proj_pair_d[rank * win.size :, rank * deep_big.size :] = proj_dd
    Z1dw = (Z1d @ proj_pair_d.T) % q if Z1d.shape[0] else Z1d.reshape(0, 2 * rank * win.size)
    Z1do = (Z1dw @ emb_pair.T) % q if Z1dw.shape[0] else Z1dw.reshape(0, 2 * rank * t1.out.size)
    # coboundaries from the deep domain
    deep_dom = Window(t1.out.B, win.N)
    ops_deep = ModuleWindowOps(D, deep_dom)
    PH_d, out_d, cert_d = ops_deep.matrix("phi")
    SG_d, _, cert_s = ops_deep.matrix("sigma")
    if min(cert_d, cert_s) < win.N:
        raise PrecisionError("extension data too short for the coboundary domain")
    cap_d = restriction_matrix(rank, out_d, t1.out)
    emb_dd = restriction_matrix(rank, deep_dom, t1.out)
    B1 = np.hstack([
        ((cap_d @ PH_d - emb_dd) % q).T,
        ((cap_d @ SG_d - emb_dd) % q).T,
    ])
    b1_len = _span_length(R, B1)
    w1 = _span_length(R, np.vstack([B1, Z1o]))
    w2 = _span_length(R, np.vstack([B1, Z1do]))
    w12 = _span_length(R, np.vstack([B1, Z1o, Z1do]))
    h1 = (w1 + w2 - w12) - b1_len

    # H^2 = H^0 of the dual twist by local duality
    Ddual = D.dual_twist()
    td = _TowerMaps(Ddual, big)
    K2 = kernel(R, td.D0)
    K2w = (K2 @ proj_dom.T) % q if K2.shape[0] else K2.reshape(0, rank * win.size)
    h2 = _span_length(R, K2w)

    basis = []
    if isinstance(R, GF):
        basis = _h1_basis_field(R, D, win, Z1w, Z1o, Z1do, B1)
    return (h0, h1, h2), basis


def _h1_basis_field(R, D, win: Window, Z1w, Z1o, Z1do, B1rows):
    """Representatives: candidates from the shallow kernel that also lie in
    the span of the deep kernel modulo coboundaries, taken independent."""
    stack, pivots = gf_rref(R, B1rows)
    img = stack[: len(pivots)]
    deep_stack, deep_piv = gf_rref(R, np.vstack([img, Z1do]) if Z1do.shape[0] else img)
    deep_basis = deep_stack[: len(deep_piv)]
    reps, reps_o = [], []
    for row, row_o in zip(Z1w, Z1o):
        in_deep = gf_rank(R, np.vstack([deep_basis, row_o[None, :]])) == len(deep_piv)
        if not in_deep:
            continue
        cand = np.vstack([img] + [r[None, :] for r in reps_o] + [row_o[None, :]])
        if gf_rank(R, cand) > len(pivots) + len(reps_o):
            reps.append(row)
            reps_o.append(row_o)
    return [vec_to_pair(R, r, win, D.rank, win.N) for r in reps]


def _euler_check(D, lengths, history):
    R = D.ring
    h0, h1, h2 = lengths
    length_R = R.m * (R.f if isinstance(R, GF) else 1)
    if (h0 - h1 + h2) != -D.rank * length_R:
        raise MathCheckError(
            f"Euler characteristic {h0 - h1 + h2} != {-D.rank * length_R}: {history}"
        )


def _herr_rank1(D: PhiGammaModule, schedule=None) -> HerrCohomologySpace:
    R = D.ring
    if schedule is None:
        schedule = default_schedule(D)
    history = []
    prev, stable = None, 0
    for win in schedule:
        lengths, basis = _herr_at_window(D, win)
        history.append((win.N, lengths))
        stable = stable + 1 if lengths == prev else 0
        prev = lengths
        h0, h1, h2 = lengths
        length_R = R.m * (R.f if isinstance(R, GF) else 1)
        euler_ok = (h0 - h1 + h2) == -D.rank * length_R
        if stable >= 2 and euler_ok:
            return HerrCohomologySpace(lengths, basis, win, history, True)
    raise StabilizationError(
        f"Herr lengths did not stabilize with the right Euler characteristic: {history}"
    )


def _embed_pair(pair, rank: int, slot: int, ring):
    zero = TLS.zero(ring)
    a_e, b_e = pair
    a = [zero] * rank
    b = [zero] * rank
    a[slot] = a_e[0]
    b[slot] = b_e[0]
    return (a, b)


def _herr_sum(D: PhiGammaModule, schedule=None) -> HerrCohomologySpace:
    c1 = herr_cohomology(D.factor(0), schedule)
    c2 = herr_cohomology(D.factor(1), schedule)
    lengths = tuple(x + y for x, y in zip(c1.lengths, c2.lengths))
    basis = [_embed_pair(w, 2, 0, D.ring) for w in c1.basis] + [
        _embed_pair(w, 2, 1, D.ring) for w in c2.basis
    ]
    win = c1.window if c1.window.N >= c2.window.N else c2.window
    history = [("sum", c1.lengths, c2.lengths)]
    _euler_check(D, lengths, history)
    return HerrCohomologySpace(lengths, basis, win, history, True)


def class_coordinates(D1: PhiGammaModule, coh1: HerrCohomologySpace, pair, allow_fail=False):
    """Coordinates of a certified rank-one cocycle pair in the H^1 basis of
    coh1, by solving  pair = sum_i c_i basis_i + coboundary  on the window.
    Returns None when allow_fail and the class is not in the span."""
    R = D1.ring
    q = R.q
    depth = max(
        [coh1.window.B]
        + [-f.lo for side in pair for f in side if not f.is_zero()]
    )
    win = Window(depth + 1, coh1.window.N)
    t1 = _TowerMaps(D1, win)
    deep_dom = Window(t1.out.B, win.N)
    ops_deep = ModuleWindowOps(D1, deep_dom)
    PH_d, out_d, _ = ops_deep.matrix("phi")
    SG_d, _, _ = ops_deep.matrix("sigma")
    cap_d = restriction_matrix(1, out_d, t1.out)
    emb_dd = restriction_matrix(1, deep_dom, t1.out)
    B1cols = np.vstack([
        ((cap_d @ PH_d - emb_dd) % q),
        ((cap_d @ SG_d - emb_dd) % q),
    ])  # columns indexed by deep-domain c; rows = out-pair coords
    emb = restriction_matrix(1, win, t1.out)

    def to_out(pr):
        a_e, b_e = pr
        av = elt_to_vec([f.truncate(win.N) for f in a_e], win)
        bv = elt_to_vec([f.truncate(win.N) for f in b_e], win)
        return np.concatenate([(emb @ av) % q, (emb @ bv) % q])

    cols = [to_out(w) for w in coh1.basis]
    Mat = np.column_stack(cols + [B1cols[:, j] for j in range(B1cols.shape[1])]) if cols or B1cols.shape[1] else np.zeros((2 * t1.out.size, 0), dtype=np.int64)
    rhs = to_out(pair)
    sol = solve(R, Mat, rhs)
    if sol is None:
        if allow_fail:
            return None
        raise PrecisionError("class not expressible in the basis on this window")
    return [int(sol[i]) % q for i in range(len(cols))]


def _herr_extension(D: PhiGammaModule, schedule=None) -> HerrCohomologySpace:
    R = D.ring
    q = R.q
    if not isinstance(R, GF):
        raise InputError("extension cohomology is implemented over field coefficients")
    D1, D2 = D.factor(0), D.factor(1)
    coh1 = herr_cohomology(D1, schedule)
    coh2 = herr_cohomology(D2, schedule)
    h0_1, h1_1, h2_1 = coh1.lengths
    h0_2, h1_2, h2_2 = coh2.lengths

    # delta0: H^0(D2) -> H^1(D1): the invariant 1 maps to the class of the
    # D1-component of d0(0, 1), i.e. the extension class itself
    rank_d0 = 0
    if h0_2:
        zinv = _h0_generator(D2, coh2.window)
        img_phi = (D.phi_elt([TLS.zero(R), zinv])[0]).truncate(coh1.window.N)
        img_sig = D.sigma_elt([TLS.zero(R), zinv], None, coh1.window.N + 4)[0].truncate(
            coh1.window.N
        )
        coords = class_coordinates(D1, coh1, ([img_phi], [img_sig]))
        rank_d0 = 1 if any(coords) else 0
    h0_D = h0_1 + h0_2 - rank_d0 * _len_unit(R)

    # lifts of H^1(D2)-classes: solve jointly for combinations of quotient
    # classes and first components making a certified cocycle of D
    lifted_classes = _lift_quotient_classes(D, coh2.basis)
    ker_d1 = len(lifted_classes) * _len_unit(R)

    # image of H^1(D1) modulo delta0
    sub_classes = [_embed_pair(w, 2, 0, R) for w in coh1.basis]
    image_dim = h1_1 - rank_d0 * _len_unit(R)

    h1_D = image_dim + ker_d1
    # h2 via the dual twist (an extension again, but only h0 is needed)
    Ddual = D.dual_twist()
    h2_D = _h0_direct(Ddual)
    lengths = (h0_D, h1_D, h2_D)
    history = [("les", coh1.lengths, coh2.lengths, rank_d0, ker_d1)]
    _euler_check(D, lengths, history)
    basis = _select_extension_basis(D, coh1, sub_classes, lifted_classes, rank_d0)
    win = coh1.window if coh1.window.N >= coh2.window.N else coh2.window
    return HerrCohomologySpace(lengths, basis, win, history, True)


def _h0_generator(D2: PhiGammaModule, win: Window):
    """The phi- and sigma-fixed element of a rank-one module with h0 = 1
    (the trivial character): the constant 1."""
    R = D2.ring
    if D2.chars[0] != (R.one, R.one):
        raise MathCheckError("nontrivial rank-one module with invariants")
    return TLS.one(R)


def _h0_direct(D: PhiGammaModule) -> int:
    """h0 by the exact capped kernel, stabilized over the default schedule."""
    R = D.ring
    q = R.q
    prev, stable = None, 0
    for win in default_schedule(D):
        big = Window(win.B, win.N + max(R.p + 2, win.N))
        t2 = _TowerMaps(D, big)
        K0 = kernel(R, t2.D0)
        proj = restriction_matrix(D.rank, big, win)
        K0w = (K0 @ proj.T) % q if K0.shape[0] else K0.reshape(0, D.rank * win.size)
        h0 = _span_length(R, K0w)
        stable = stable + 1 if h0 == prev else 0
        prev = h0
        if stable >= 2:
            return h0
    raise StabilizationError("h0 did not stabilize")


def _lift_quotient_classes(D: PhiGammaModule, basis2, n_target: int | None = None):
    """Combinations of quotient classes that lift to certified cocycles of
    the extension: solve jointly for coefficients c_j and first components
    (A1, B1) with d1((A1, sum c_j a2_j), (B1, sum c_j b2_j)) = 0; the
    kernel's coefficient-projection spans ker(delta^1)."""
    R = D.ring
    q = R.q
    if not basis2:
        return []
    n_b = min(x.n_eff for w2 in basis2 for x in (w2[0][0], w2[1][0]))
    D1 = D.factor(0)
    goal = max(default_schedule(D)[2].N, 12) if n_target is None else n_target
    win = Window(D.tail_bound - 2, min(n_b, goal))
    ops1 = ModuleWindowOps(D1, win)
    SIG1, out_s, _ = ops1.matrix("sigma")
    PHI1, out_p, _ = ops1.matrix("phi")
    assert out_s == out_p
    I1 = ops1.identity_into(out_s)
    couplings = []
    cap_rows = win.N
    for w2 in basis2:
        a2, b2 = w2[0][0], w2[1][0]
        full = D.d1_apply(([TLS.zero(R), a2], [TLS.zero(R), b2]), n_prec=min(n_b, win.N))
        cap_rows = min(cap_rows, full[0].n_eff)
        couplings.append(full[0])
    cap = restriction_matrix(1, out_s, Window(out_s.B, cap_rows))
    M_sig = (cap @ ((SIG1 - I1) % q)) % q
    M_phi = (cap @ ((PHI1 - I1) % q)) % q
    coup_cols = np.column_stack([
        elt_to_vec([f.truncate(cap_rows)], Window(out_s.B, cap_rows)) for f in couplings
    ])
    Mat = np.hstack([M_sig, (-M_phi) % q, coup_cols % q])
    K = kernel(R, Mat)
    n_unknowns = 2 * win.size
    out = []
    c_rows = []
    for row in K:
        c_part = row[n_unknowns:]
        if not np.any(c_part):
            continue
        if c_rows:
            cand = np.vstack(c_rows + [c_part[None, :]])
            if _span_length(R, cand) <= _span_length(R, np.vstack(c_rows)):
                continue
        c_rows.append(c_part[None, :])
        A1 = vec_to_elt(R, row[: win.size], win, 1, cap_rows)[0]
        B1 = vec_to_elt(R, row[win.size : n_unknowns], win, 1, cap_rows)[0]
        a_comb = TLS.zero(R)
        b_comb = TLS.zero(R)
        for cj, w2 in zip(c_part, basis2):
            if cj:
                a_comb = a_comb + w2[0][0].scale(int(cj))
                b_comb = b_comb + w2[1][0].scale(int(cj))
        pair = ([A1, a_comb.truncate(cap_rows)], [B1, b_comb.truncate(cap_rows)])
        err = D.d1_apply(pair, n_prec=cap_rows)
        ncheck = min(cap_rows, min(f.n_eff for f in err))
        for f in err:
            if not f.truncate(ncheck).is_zero():
                raise MathCheckError("quotient-class lift failed verification")
        out.append(pair)
    return out


def _select_extension_basis(D, coh1, sub_classes, lifted_classes, rank_d0):
    """Sub-module classes (modulo the connecting image) then lifted quotient
    classes; in the generic case rank_d0 = 0 and everything survives."""
    if rank_d0 == 0:
        return sub_classes + lifted_classes
    # drop sub-classes falling into the image of delta0: keep a complement
    # of the right size deterministically
    keep = len(sub_classes) - rank_d0
    return sub_classes[:keep] + lifted_classes


def cocycle_representatives(D: PhiGammaModule, n_def: int, B: int | None = None):
    """H^1 basis representatives of a (rank-one) module solved directly at
    X-precision n_def, for use as extension data: certified cocycle pairs
    long enough that a rank-two extension built from them supports windowed
    solves up to roughly (n_def - p*B)/1 rows."""
    R = D.ring
    if not isinstance(R, GF):
        raise InputError("extension data extraction needs field coefficients")
    B = D.tail_bound - 2 if B is None else B
    win = Window(B, n_def)
    lengths, basis = _herr_at_window(D, win)
    return basis


def lift_to_psi_fixed(D: PhiGammaModule, pair, n_cert: int | None = None):
    """y in D^{psi=1} (certified truncation) representing the class of the
    cocycle pair (a, b): solve psi(b - (sigma-1)c) = b - (sigma-1)c for a
    window element c and return y = b - (sigma-1)c.  Raises PrecisionError
    when the class is not in the image of the psi-fixed part (then the
    capped system is inconsistent at every window)."""
    R = D.ring
    q = R.q
    a_e, b_e = pair
    n_b = min([f.n_eff for f in b_e if f.n_eff < BIG] + [BIG])
    win = Window(D.tail_bound - 1, n_b if n_cert is None else min(n_cert, n_b))
    ops = ModuleWindowOps(D, win)
    SIG, out_s, _ = ops.matrix("sigma")
    PSI, out_p, cert_p = ops.matrix("psi")
    emb_s = ops.identity_into(out_s)
    dsig = (SIG - emb_s) % q
    # condition rows: psi certified on out_p, and only below what the
    # certified precision of (sigma-1)c and b supports
    rows_n = min(cert_p, (win.N - R.p) // R.p + 1 + win.N)  # psi rows exact
    cap_p = restriction_matrix(D.rank, out_p, Window(out_p.B, min(out_p.N, rows_n)))
    # (psi - 1) applied to b - (sigma-1)c = 0:
    #   (psi-1)(sigma-1) c = (psi-1) b
    PS_out = ModuleWindowOps(D, out_s)
    PSI_b, out_pb, _ = PS_out.matrix("psi")
    emb_sp = restriction_matrix(D.rank, out_s, out_pb)
    psi_minus_1_sigma = (PSI_b @ dsig - emb_sp @ dsig) % q
    bvec = elt_to_vec([f.truncate(out_s.N) for f in b_e], out_s)
    rhs_full = ((PSI_b - emb_sp) @ bvec) % q
    cap_rows = restriction_matrix(D.rank, out_pb, Window(out_pb.B, win.N // R.p + 1))
    M = (cap_rows @ psi_minus_1_sigma) % q
    rhs = (cap_rows @ rhs_full) % q
    c = solve(R, M, rhs)
    if c is None:
        raise PrecisionError("class does not lift to the psi-fixed part on this window")
    cvec = vec_to_elt(R, c, win, D.rank)
    sc = D.sigma_elt(cvec, None, win.N)
    y = [bb - (s - cc) for bb, s, cc in zip(b_e, sc, cvec)]
    # certificate: psi(y) = y at the certified precision
    py = D.psi_elt(y)
    ncheck = min(min(f.n_eff for f in py), win.N // R.p + 1)
    for yy, pp in zip(y, py):
        if not (pp - yy).truncate(ncheck).is_zero():
            raise MathCheckError("psi-fixed lift failed verification")
    return y


# ---------------------------------------------------------------------------
# cup product and the Tate pairing
# ---------------------------------------------------------------------------


def _det_form(ring, x_elt, y_elt) -> TLS:
    """x1 y2 - x2 y1: the symplectic form into the cyclotomic line."""
    return x_elt[0] * y_elt[1] - x_elt[1] * y_elt[0]


def cup_value(D: PhiGammaModule, x_pair, y_pair, n_prec: int | None = None) -> TLS:
    """Cup product composed with the determinant form: for H^1 classes
    x = (a, b), y = (a', b') the degree-two value is
    form(a, phi(b')) - form(b, sigma_a(a')) in E(cyc)."""
    if D.rank != 2 or not D.is_symplectic_self_dual():
        raise InputError("cup pairing needs a symplectic self-dual rank-2 module")
    a_e, b_e = x_pair
    ap_e, bp_e = y_pair
    t1 = _det_form(D.ring, a_e, D.phi_elt(bp_e))
    t2 = _det_form(D.ring, b_e, D.sigma_elt(ap_e, None, n_prec))
    return t1 - t2


class CyclotomicH2:
    """The H^2 functional of E(cyc): the residue map
    f -> coefficient of X^{-1} in f/(1+X), i.e. res(f dlog(1+X)),
    scaled by a normalizer frozen against the evaluation oracle.

    The residue kills both (phi-1)- and (sigma-1)-coboundaries (re-verified
    on random inputs at calibration time), so it is well defined on classes.
    """

    def __init__(self, ring, a: int | None = None, win: Window | None = None):
        if not ring.is_field:
            raise InputError("pairing calibration implemented over field coefficients")
        self.ring = ring
        self.Dcyc = PhiGammaModule.cyclotomic(ring, a)
        p = ring.p
        self.win = win if win is not None else Window(8, max(4 * p, 16))
        self._normalizer = ring.one  # replaced by calibration
        self._verify_residue_invariance()

    def raw_value(self, f: TLS) -> int:
        n = max(f.hi, 2) + abs(min(f.lo, 0)) + 2
        g = f * one_plus_x_pow(self.ring, -1, n)
        return g.coeff(-1)

    def value(self, f: TLS) -> int:
        return self.ring.mul(self._normalizer, self.raw_value(f))

    def _verify_residue_invariance(self):
        import random

        rng = random.Random(17)
        R = self.ring
        D = self.Dcyc
        for _ in range(12):
            g = TLS.make(R, rng.randrange(-5, 1), [rng.randrange(R.q) for _ in range(10)])
            co_phi = D.phi_elt([g])[0] - g
            co_sig = (D.sigma_elt([g], None, self.win.N + 40)[0] - g)
            if self.raw_value(co_phi) != 0 or self.raw_value(co_sig.truncate(co_sig.n_eff)) != 0:
                raise MathCheckError("residue functional failed coboundary invariance")


@lru_cache(maxsize=None)
def calibrated_h2(ring_key, a: int) -> CyclotomicH2:
    from .series import _ring_from_key

    ring = _ring_from_key(ring_key)
    h2 = CyclotomicH2(ring, a)
    _calibrate(h2)
    return h2


def _calibrate(h2: CyclotomicH2) -> None:
    """Freeze the H^2 normalization against the evaluation oracle.

    Inside H^1(E(cyc)) the image of the psi-fixed part is the unit-Kummer
    line (the universal norms).  The oracle pairs the unit class to 0 with
    the unramified homomorphism class and to a unit with the Gamma-direction
    class; the normalizer makes the latter equal to 1 for the
    deterministically scaled unit representative."""
    R = h2.ring
    Dt = h2.Dcyc
    Dtriv = PhiGammaModule.rank1(R, R.one, R.one, Dt.a)
    Dsum = PhiGammaModule.direct_sum(Dt, Dtriv)
    if not Dsum.is_symplectic_self_dual():
        raise MathCheckError("calibration module is not self-dual")
    coh = herr_cohomology(Dt)
    if len(coh.basis) != 2:
        raise MathCheckError("H^1(E(cyc)) should be two-dimensional")
    one, zero = TLS.one(R), TLS.zero(R)
    u_class = ([one], [zero])   # unramified homomorphism class of E(triv)
    r_class = ([zero], [one])   # Gamma-direction class

    def pair_raw(x_cyc, hom):
        xa = (list(x_cyc[0]) + [zero], list(x_cyc[1]) + [zero])
        ha = ([zero] + list(hom[0]), [zero] + list(hom[1]))
        return h2.raw_value(cup_value(Dsum, xa, ha, n_prec=h2.win.N + 4))

    w1, w2 = coh.basis
    vals_r = [pair_raw(w1, r_class), pair_raw(w2, r_class)]
    # the class of p (the universal norm): pairs to 0 with the
    # Gamma-direction homomorphism and lifts to the psi-fixed part
    if vals_r[0] == 0:
        alpha, beta = R.one, R.zero
    elif vals_r[1] == 0:
        alpha, beta = R.zero, R.one
    else:
        alpha, beta = R.one, R.neg(R.mul(vals_r[0], R.inv(vals_r[1])))
    p_pair = (
        [w1[0][0].scale(alpha) + w2[0][0].scale(beta)],
        [w1[1][0].scale(alpha) + w2[1][0].scale(beta)],
    )
    lift_to_psi_fixed(Dt, p_pair)
    # anchor: (class of p, unramified homomorphism class) = 1
    kappa = pair_raw(p_pair, u_class)
    if not R.is_unit(kappa):
        raise MathCheckError("calibration pairing degenerate")
    h2._normalizer = R.inv(kappa)
    h2.p_class_pair = p_pair
    h2.h1_cyc = coh


def tate_pairing(D: PhiGammaModule, x_pair, y_pair) -> int:
    """Calibrated Tate pairing of H^1 classes (cocycle pairs) of a generic
    symplectic self-dual rank-2 module over a prime-field ring."""
    h2 = calibrated_h2(D.ring.key, D.a)
    return h2.value(cup_value(D, x_pair, y_pair, n_prec=h2.win.N + 4))


def gram_matrix(D: PhiGammaModule, basis) -> np.ndarray:
    h2 = calibrated_h2(D.ring.key, D.a)
    n = h2.win.N + 4
    k = len(basis)
    G = np.zeros((k, k), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            G[i, j] = h2.value(cup_value(D, basis[i], basis[j], n_prec=n))
    return G
