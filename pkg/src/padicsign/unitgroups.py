"""Unit groups of quadratic extensions K/Q_p modulo powers of delta, and
finite-order characters of K^x trivial on Q_p^x (anticyclotomic characters).

K = Q_p(delta) with delta^2 in Q_p fixed canonically per kind:
  * unram        : delta^2 = u0, the smallest non-residue unit mod p;
  * ram-minus-p  : delta^2 = -p;
  * ram-minus-pu : delta^2 = -p*u0.

Elements of O_K/delta^N are pairs x + y*delta.  The principal-unit part U is
presented by a filtered echelon closure of explicit generators, giving exact
discrete logarithms and the full relation lattice.  Quotienting by the
closure of the Z_p^x-image (and by mu_p cap K^x, nontrivial exactly for
p = 3, delta^2 = -3) must leave a cyclic p-group Z/p^s; its characters of
p-power order are the anticyclotomic characters, evaluated anywhere in the
filtration as exact roots of unity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .cyclotomic import CyclotomicInt
from .errors import InputError, MathCheckError
from .linalg import smith_normal_form
from .padic import (
    check_odd_prime,
    smallest_nonresidue,
    smallest_primitive_root_mod_p2,
    teichmuller,
    vp,
)

KINDS = ("unram", "ram-minus-p", "ram-minus-pu")


@dataclass(frozen=True)
class QuadExtension:
    """The quadratic extension Q_p(delta) with delta^2 in Q_p."""

    p: int
    kind: str

    def __post_init__(self):
        check_odd_prime(self.p)
        if self.kind not in KINDS:
            raise InputError(f"kind must be one of {KINDS}")

    @property
    def ramified(self) -> bool:
        return self.kind != "unram"

    @property
    def delta_sq(self) -> int:
        u0 = smallest_nonresidue(self.p)
        if self.kind == "unram":
            return u0
        if self.kind == "ram-minus-p":
            return -self.p
        return -self.p * u0

    def omega(self, x: int) -> int:
        """omega_{K/Q_p}(x), evaluated as the tame Hilbert symbol (x, delta^2)_p."""
        from .oracles import hilbert_symbol_tame, split_padic

        d = self.delta_sq
        vd = 1 if self.ramified else 0
        ud = (d // self.p**vd) % self.p
        return hilbert_symbol_tame(split_padic(x, self.p), (vd, ud), self.p)


class OKModDelta:
    """Arithmetic in O_K/delta^N as pairs (x, y) = x + y*delta.

    Moduli: unramified x, y mod p^N (the relevant uniformizer is p);
    ramified x mod p^{ceil(N/2)}, y mod p^{ceil((N-1)/2)} since v(delta) = 1
    and v(p) = 2.
    """

    def __init__(self, K: QuadExtension, N: int):
        self.K = K
        self.N = N
        p = K.p
        if K.ramified:
            self.mx = (N + 1) // 2
            self.my = max(1, N // 2)
        else:
            self.mx = self.my = N
        self.qx = p**self.mx
        self.qy = p**self.my
        self.d = K.delta_sq

    def reduce(self, x: int, y: int):
        return (x % self.qx, y % self.qy)

    def one(self):
        return (1, 0)

    def mul(self, a, b):
        x1, y1 = a
        x2, y2 = b
        return self.reduce(x1 * x2 + self.d * y1 * y2, x1 * y2 + x2 * y1)

    def pow(self, a, e: int):
        if e < 0:
            return self.pow(self.inv(a), -e)
        r, b = self.one(), a
        while e:
            if e & 1:
                r = self.mul(r, b)
            b = self.mul(b, b)
            e >>= 1
        return r

    def is_unit(self, a) -> bool:
        x, y = self.reduce(*a)
        if self.K.ramified:
            return x % self.K.p != 0
        return (x * x - self.d * y * y) % self.K.p != 0

    def inv(self, a):
        x, y = self.reduce(*a)
        nrm = (x * x - self.d * y * y) % self.qx
        ninv = pow(nrm, -1, self.qx)
        return self.reduce(x * ninv, -y * ninv)

    def principal_lead(self, u):
        """(i, coord) for a principal unit: i = depth of u - 1 in the
        delta-adic filtration (i = N means u = 1), coord the leading-layer
        coordinate: an int mod p (ramified) or a pair (unramified).

        The layer identifications gr_i = F_p (resp. F_p^2) are fixed but not
        canonical; only consistency matters for the group computations.
        """
        p = self.K.p
        x, y = self.reduce(*u)
        x = (x - 1) % self.qx
        if not self.K.ramified:
            if x == 0 and y == 0:
                return self.N, None
            i = min(vp(x, p) if x else self.N, vp(y, p) if y else self.N)
            if i >= self.N:
                return self.N, None
            return i, ((x // p**i) % p, (y // p**i) % p)
        vx = 2 * vp(x, p) if x else 2 * self.mx
        vy = 2 * vp(y, p) + 1 if y else 2 * self.my + 1
        i = min(vx, vy)
        if i >= self.N:
            return self.N, None
        j = i // 2
        coord = (x // p**j) % p if i % 2 == 0 else (y // p**j) % p
        return i, coord

    def layer_element(self, i: int, coord: int = 1):
        """A principal unit with leading layer exactly i: 1 + coord*delta^i
        computed with the true power delta^i."""
        if not (1 <= i < self.N):
            raise InputError("layer index out of range")
        if not self.K.ramified:
            # two independent directions per layer; this is the (1, 0) one
            return self.reduce(1 + coord * self.K.p**i, 0)
        j = i // 2
        dj = self.d**j
        if i % 2 == 0:
            return self.reduce(1 + coord * dj, 0)
        return self.reduce(1, coord * dj)

    def layer_element_second(self, i: int, coord: int = 1):
        """The (0, 1)-direction of an unramified layer: 1 + coord*p^i*delta."""
        if self.K.ramified:
            raise InputError("second layer direction only exists unramified")
        return self.reduce(1, coord * self.K.p**i)


def zeta3_element(ok: OKModDelta):
    """zeta_3 = (-1 + delta)/2 in Q_3(sqrt(-3))."""
    inv2 = pow(2, -1, ok.qx)
    z = ok.reduce(-inv2, inv2)
    if ok.pow(z, 3) != ok.one():
        raise MathCheckError("zeta_3 construction failed")
    return z


def _solve_layer(p: int, pivot_coords, c):
    """Express the layer coordinate c over pivot coordinates (mod p).

    Ramified layers are F_p-lines (one pivot); unramified layers are
    F_p^2 with up to two pivots.  Returns the exponent list or None.
    """
    if not isinstance(c, tuple):
        c1 = pivot_coords[0]
        return [(c * pow(c1, -1, p)) % p]
    if len(pivot_coords) == 1:
        (a0, a1) = pivot_coords[0]
        # c parallel to a?
        if (c[0] * a1 - c[1] * a0) % p != 0:
            return None
        if a0 % p:
            return [(c[0] * pow(a0, -1, p)) % p]
        return [(c[1] * pow(a1, -1, p)) % p]
    (a0, a1), (b0, b1) = pivot_coords
    det = (a0 * b1 - a1 * b0) % p
    dinv = pow(det, -1, p)
    e1 = ((c[0] * b1 - c[1] * b0) * dinv) % p
    e2 = ((a0 * c[1] - a1 * c[0]) * dinv) % p
    return [e1, e2]


class UnitGroupPresentation:
    """(O_K/delta^N)^x = mu_{q-1} x U with exact discrete logs on the
    principal part U, its relation lattice in Smith normal form, and the
    projection onto the cyclic anticyclotomic quotient Z/p^s."""

    def __init__(self, K: QuadExtension, N: int):
        if N < 2:
            raise InputError("modulus exponent N must be >= 2")
        self.K = K
        self.N = N
        p = K.p
        ok = self.ok = OKModDelta(K, N)

        if K.ramified:
            g0 = smallest_primitive_root_mod_p2(p) % p
            self.teich_gen = (teichmuller(g0, p, ok.mx).val, 0)
            self._residue_table = {
                pow(self.teich_gen[0], k, p): k for k in range(p - 1)
            }
            q_res = p
            self.principal_gens = [ok.layer_element(i) for i in (1, 2, 3) if i < N]
        else:
            self.teich_gen, self._residue_table = self._teichmuller_f2(ok)
            q_res = p * p
            self.principal_gens = [ok.layer_element(1), ok.layer_element_second(1)]

        self._build_echelon()
        expected = N - 1 if K.ramified else 2 * (N - 1)
        if self._n_positions != expected:
            raise InputError(
                f"N = {N} separates only {self._n_positions} of {expected} layers"
            )
        self.order = (q_res - 1) * p**self._n_positions
        self._build_relations_and_quotient()

    # -- construction -------------------------------------------------------

    @staticmethod
    def _teichmuller_f2(ok: OKModDelta):
        """Teichmueller lift of a generator of F_{p^2}^x, plus residue dlogs."""
        p = ok.K.p
        q = p * p

        def rmul(a, b):
            return ((a[0] * b[0] + ok.d * a[1] * b[1]) % p, (a[0] * b[1] + a[1] * b[0]) % p)

        gen = None
        for x0 in range(p):
            for y0 in range(p):
                if x0 == 0 and y0 == 0:
                    continue
                e, acc = 1, (x0, y0)
                while acc != (1, 0):
                    acc = rmul(acc, (x0, y0))
                    e += 1
                if e == q - 1:
                    gen = (x0, y0)
                    break
            if gen:
                break
        t = gen
        for _ in range(ok.mx + 2):
            t = ok.pow(t, q)
        if ok.pow(t, q - 1) != ok.one():
            raise MathCheckError("Teichmueller lift failed")
        table = {}
        acc = ok.one()
        for k in range(q - 1):
            table[(acc[0] % p, acc[1] % p)] = k
            acc = ok.mul(acc, t)
        return t, table

    def _build_echelon(self):
        ok, p, N = self.ok, self.K.p, self.N
        gens = self.principal_gens
        self._pivots = {}  # layer -> list of (element, vec, coord)
        self._echelon_relations = []
        work = [(g, [1 if k == i else 0 for k in range(len(gens))]) for i, g in enumerate(gens)]
        cap = 1 if self.K.ramified else 2
        while work:
            u, vec = work.pop()
            guard = 0
            while True:
                guard += 1
                if guard > 8 * N * p:
                    raise MathCheckError("echelon reduction did not terminate")
                i, c = ok.principal_lead(u)
                if i >= N:
                    if any(vec):
                        self._echelon_relations.append(vec)
                    break
                entries = self._pivots.setdefault(i, [])
                exps = _solve_layer(p, [e[2] for e in entries], c) if entries else None
                if exps is None:
                    if len(entries) >= cap:
                        raise MathCheckError("layer pivot overflow")
                    entries.append((u, vec, c))
                    work.append((ok.pow(u, p), [p * x for x in vec]))
                    break
                depth_before = i
                for e, (g1, v1, _c1) in zip(exps, entries):
                    if e:
                        u = ok.mul(u, ok.pow(g1, -e))
                        vec = [x - e * y for x, y in zip(vec, v1)]
                if ok.principal_lead(u)[0] <= depth_before:
                    raise MathCheckError("layer reduction did not deepen")
        self._n_positions = sum(len(v) for v in self._pivots.values())

    def _build_relations_and_quotient(self):
        p = self.K.p
        g = len(self.principal_gens)
        rels = [list(r) for r in self._echelon_relations]
        for i in sorted(self._pivots):
            for (u, vec, _c) in self._pivots[i]:
                w = self.principal_dlog(self.ok.pow(u, p))
                rels.append([p * a - b for a, b in zip(vec, w)])
        self.relation_matrix = rels
        D, _U, _V = smith_normal_form(rels)
        self.relation_snf = [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0))]

        kill = [list(r) for r in rels]
        kill.append(self.principal_dlog(self.ok.reduce(1 + p, 0)))
        self.zp_image_vectors = [kill[-1]]
        if self.K.kind == "ram-minus-p" and p == 3:
            kill.append(self.principal_dlog(zeta3_element(self.ok)))
            self.zp_image_vectors.append(kill[-1])
        # quotient Z^g / (row span): transpose so the lattice is a column
        # span, then U A V = D gives Z^g/L = sum Z/D_ii via x -> Ux
        B = [[kill[r][c] for r in range(len(kill))] for c in range(g)]
        D2, U2, _V2 = smith_normal_form(B)
        s_found = []
        proj = None
        for i in range(g):
            d = D2[i][i] if i < len(D2) and i < len(D2[i]) else 0
            if d == 0:
                raise MathCheckError("anticyclotomic quotient unexpectedly infinite")
            if d == 1:
                continue
            v = vp(d, p)
            if p**v != d:
                raise MathCheckError(f"invariant factor {d} is not a p-power")
            s_found.append(v)
            proj = list(U2[i])
        if len(s_found) > 1:
            raise MathCheckError(f"anticyclotomic quotient not cyclic: {s_found}")
        self.gamma_exponent = s_found[0] if s_found else 0
        self._proj_row = proj if proj is not None else [0] * g

    # -- discrete logs and the gamma coordinate ------------------------------

    def principal_dlog(self, u) -> list:
        """Exponent vector over principal_gens (well-defined mod relations)."""
        ok, p, N = self.ok, self.K.p, self.N
        vec = [0] * len(self.principal_gens)
        guard = 0
        while True:
            guard += 1
            if guard > 8 * N * p:
                raise MathCheckError("discrete log did not terminate")
            i, c = ok.principal_lead(u)
            if i >= N:
                return vec
            entries = self._pivots.get(i)
            if not entries:
                raise MathCheckError(f"no pivot at layer {i}")
            exps = _solve_layer(p, [e[2] for e in entries], c)
            if exps is None:
                raise MathCheckError(f"unreducible coordinate at layer {i}")
            for e, (g1, v1, _c1) in zip(exps, entries):
                if e:
                    u = ok.mul(u, ok.pow(g1, -e))
                    vec = [x + e * y for x, y in zip(vec, v1)]

    def dlog(self, u) -> tuple[int, list]:
        """(alpha, vec) with u = t^alpha * prod(gens^vec) mod delta^N."""
        ok = self.ok
        if not ok.is_unit(u):
            raise InputError("discrete log of a non-unit")
        u = ok.reduce(*u)
        p = self.K.p
        key = u[0] % p if self.K.ramified else (u[0] % p, u[1] % p)
        if key not in self._residue_table:
            raise MathCheckError("residue discrete log failed")
        alpha = self._residue_table[key]
        rest = ok.mul(u, ok.pow(self.teich_gen, -alpha))
        return alpha, self.principal_dlog(rest)

    def gamma_coordinate(self, u) -> int:
        """Image of a unit in the anticyclotomic quotient Z/p^s."""
        _, vec = self.dlog(u)
        return self.gamma_coordinate_of_vec(vec)

    def gamma_coordinate_of_vec(self, vec) -> int:
        mod = self.K.p**self.gamma_exponent
        return sum(r * v for r, v in zip(self._proj_row, vec)) % mod


@lru_cache(maxsize=None)
def build_unit_group(K: QuadExtension, N: int) -> UnitGroupPresentation:
    return UnitGroupPresentation(K, N)


def required_depth(K: QuadExtension, n: int) -> int:
    """Depth certifying conductors of order-p^n characters: the a-priori
    conductor bound plus a spare layer.  The bound is 2n ramified and n+1
    unramified, except over Q_3(sqrt(-3)) where mu_3 sits in the first
    filtration layer and shifts every conductor by 2."""
    if K.ramified:
        shift = 2 if (K.p == 3 and K.kind == "ram-minus-p") else 0
        return 2 * n + 2 + shift
    return n + 2


# ---------------------------------------------------------------------------
# anticyclotomic characters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PadicCharacter:
    """chi of p-power order p^n, trivial on Q_p^x and on K-torsion, with
    chi(delta) = 1; evaluated through the gamma coordinate as
    chi(u) = zeta_{p^n}^{j * (gamma(u) mod p^n)}."""

    K: QuadExtension
    depth: int
    n: int
    j: int

    def __post_init__(self):
        if self.n < 0:
            raise InputError("order exponent must be >= 0")
        if self.n > 0 and self.j % self.K.p == 0:
            raise InputError("exponent j must be a unit for exact order p^n")
        object.__setattr__(self, "j", self.j % self.K.p**self.n if self.n else 0)

    @property
    def ug(self) -> UnitGroupPresentation:
        return build_unit_group(self.K, self.depth)

    @property
    def order(self) -> int:
        return self.K.p**self.n

    def is_trivial(self) -> bool:
        return self.n == 0

    def evaluate(self, u) -> CyclotomicInt:
        """chi(u) for a unit u of O_K, as an exact cyclotomic integer."""
        p = self.K.p
        if self.n == 0:
            return CyclotomicInt.integer(1, p, 1)
        ug = self.ug
        if ug.gamma_exponent < self.n:
            raise InputError("presentation too shallow for this character")
        g = ug.gamma_coordinate(u) % p**self.n
        return CyclotomicInt.root_power(p, self.n, self.j * g)

    def value_at_delta(self) -> CyclotomicInt:
        """Declared (ramified) or computed (unramified) value at delta; the
        anticyclotomic constraints force 1 either way."""
        p = self.K.p
        if self.K.ramified or self.n == 0:
            return CyclotomicInt.integer(1, p, max(self.n, 1))
        val = self.evaluate((0, 1))  # delta = 0 + 1*delta, a unit
        if val != CyclotomicInt.integer(1, p, self.n):
            raise MathCheckError("anticyclotomic character nontrivial at delta")
        return val

    def conductor(self) -> int:
        """Smallest m with chi trivial on 1 + delta^m O_K (0 for trivial chi)."""
        if self.n == 0:
            return 0
        ug = self.ug
        p, N = self.K.p, self.depth
        pn = p**self.n
        last_nontrivial = 0
        for i in range(1, N):
            vals = [ug.gamma_coordinate(ug.ok.layer_element(i))]
            if not self.K.ramified:
                vals.append(ug.gamma_coordinate(ug.ok.layer_element_second(i)))
            if any((self.j * v) % pn for v in vals):
                last_nontrivial = i
        if last_nontrivial + 1 >= N:
            raise InputError("presentation too shallow to certify the conductor")
        return last_nontrivial + 1

    def power(self, b: int) -> "PadicCharacter":
        """chi^b for an integer exponent (p | b lowers the order)."""
        p = self.K.p
        if self.n == 0:
            return self
        jb = (self.j * b) % p**self.n
        if jb == 0:
            return PadicCharacter(self.K, self.depth, 0, 0)
        v = vp(jb, p)
        return PadicCharacter(self.K, self.depth, self.n - v, jb // p**v)

    def inverse(self) -> "PadicCharacter":
        return self.power(-1)

    def char_id(self) -> tuple:
        """Serialized identity: (p, kind, order, exponent vector on the
        principal generators)."""
        ug = self.ug
        pn = self.K.p**self.n
        vec = tuple((self.j * r) % pn for r in ug._proj_row)
        return (self.K.p, self.K.kind, self.order, vec)


def anticyclotomic_characters(K: QuadExtension, n: int, depth: int | None = None):
    """All anticyclotomic characters of exact order p^n, sorted by exponent."""
    if n == 0:
        return [PadicCharacter(K, required_depth(K, 1), 0, 0)]
    N = required_depth(K, n) if depth is None else depth
    ug = build_unit_group(K, N)
    if ug.gamma_exponent < n:
        raise InputError(
            f"depth N = {N} only supports order exponent {ug.gamma_exponent} < {n}"
        )
    p = K.p
    return [PadicCharacter(K, N, n, j) for j in range(1, p**n) if j % p]


def conductor(chi: PadicCharacter) -> int:
    return chi.conductor()


def evaluate(chi: PadicCharacter, u) -> CyclotomicInt:
    return chi.evaluate(u)
