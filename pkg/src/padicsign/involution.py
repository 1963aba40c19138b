"""The averaged-twist involution on D^{psi=0}, its transport to H^1, and the
eigenspace sign decomposition of generic symplectic self-dual rank-2 modules.

The operator on psi-zero elements is the truncated limit

    w(x) = lim_n  sum_{i in (Z/p^n)^x} (1+X)^{1/i} sigma_{-1/i^2}
                   (phi^n psi^n ((1+X)^{-i} x)),

Gamma-equivariant with inversion and an involution on self-dual modules.
Transported through psi-fixed representatives it induces the involution on
H^1 whose +-1 eigenspaces are the two Lagrangian lines; on reducible modules
the labels are anchored independently by the sub-line rules (path B) and
must agree with the eigenvalue labels (path A).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, MathCheckError, PrecisionError, StabilizationError
from .linalg import solve
from .padic import GF
from .series import BIG, TruncatedLaurentSeries as TLS, one_plus_x_pow
from .phigamma import (
    HerrCohomologySpace,
    ModuleWindowOps,
    PhiGammaModule,
    Window,
    _herr_at_window,
    _lift_quotient_classes,
    calibrated_h2,
    cup_value,
    elt_to_vec,
    gram_matrix,
    herr_cohomology,
    lift_to_psi_fixed,
    restriction_matrix,
    vec_to_elt,
)

# Global eigenvalue-label convention, frozen once against the reducible
# corollaries (path B); every decomposition re-verifies it.
LSD_LABEL_SIGN = 1


def default_w_limit(p: int, N: int) -> int:
    n = 1
    while p ** (n + 1) * 6 <= N and n < 3:
        n += 1
    return n


def w_star(D: PhiGammaModule, x, n_limit: int):
    """The truncated-limit value at level n_limit (no certificate)."""
    R = D.ring
    p = R.p
    n_eff_in = min([f.n_eff for f in x if f.n_eff < BIG] + [BIG])
    N_mult = n_eff_in if n_eff_in < BIG else max(max((f.hi for f in x), default=8), 8)
    out = None
    for i in range(1, p**n_limit):
        if i % p == 0:
            continue
        t = [one_plus_x_pow(R, Fraction(-i), N_mult + abs(f.lo) + 2) * f for f in x]
        for _ in range(n_limit):
            t = D.psi_elt(t)
        for _ in range(n_limit):
            t = D.phi_elt(t)
        t = D.sigma_elt(t, Fraction(-1, i * i), None)
        t = [one_plus_x_pow(R, Fraction(1, i), max(f.hi, 2) + abs(min(f.lo, 0)) + 2) * f
             for f in t]
        out = t if out is None else [u + v for u, v in zip(out, t)]
    return out


@dataclass
class WStarResult:
    value: list
    n_limit: int
    agreement_precision: int  # X-precision of agreement between n-1 and n


def w_star_certified(D: PhiGammaModule, x, n_limit: int, min_agree: int = 4) -> WStarResult:
    """w(x) with the stabilization certificate: the values at limit indices
    n_limit - 1 and n_limit must agree on their common certified range."""
    if n_limit < 2:
        raise InputError("certified evaluation needs n_limit >= 2")
    lo_val = w_star(D, x, n_limit - 1)
    hi_val = w_star(D, x, n_limit)
    agree = BIG
    for u, v in zip(lo_val, hi_val):
        n = min(u.n_eff, v.n_eff)
        agree = min(agree, n)
        if not (u - v).truncate(n).is_zero():
            d = u - v
            first_bad = d.valuation
            agree = min(agree, first_bad)
    if agree < min_agree:
        raise StabilizationError(
            f"w-operator limit not stabilized: agreement only below X^{agree}"
        )
    return WStarResult(hi_val, n_limit, agree)


def psi_zero_project(D: PhiGammaModule, r):
    """(1 - phi psi) r: a psi-zero element built from arbitrary r."""
    pr = D.phi_elt(D.psi_elt(r))
    return [a - b for a, b in zip(r, pr)]


# ---------------------------------------------------------------------------
# high-precision H^1 bases
# ---------------------------------------------------------------------------


def h1_basis_at_precision(D: PhiGammaModule, N: int):
    """H^1 basis pairs certified to X-precision about N, built per module
    construction (rank-one tower solve at the large window; direct sums
    embed factor bases; extensions embed the sub-basis and re-lift quotient
    classes at the large window)."""
    R = D.ring
    if D.tag == "rank1":
        win = Window(D.tail_bound - 2, N)
        _, basis = _herr_at_window(D, win)
        return basis
    if D.tag == "sum":
        zero = TLS.zero(R)
        b1 = h1_basis_at_precision(D.factor(0), N)
        b2 = h1_basis_at_precision(D.factor(1), N)
        out = [([w[0][0], zero], [w[1][0], zero]) for w in b1]
        out += [([zero, w[0][0]], [zero, w[1][0]]) for w in b2]
        return out
    b1 = h1_basis_at_precision(D.factor(0), N)
    zero = TLS.zero(R)
    sub = [([w[0][0], zero], [w[1][0], zero]) for w in b1]
    b2 = h1_basis_at_precision(D.factor(1), N)
    lifted = _lift_quotient_classes(D, b2, n_target=N)
    coh = herr_cohomology(D)
    want = coh.lengths[1] // _unit(R)
    basis = _filter_extension_basis(D, sub, lifted, want)
    if len(basis) != want:
        raise PrecisionError(
            f"high-precision basis has {len(basis)} classes, expected {want}"
        )
    return basis


def _unit(R):
    return R.f if isinstance(R, GF) else R.m


def _filter_extension_basis(D, sub, lifted, want):
    """Drop sub-classes that die in the extension (connecting image)."""
    if len(sub) + len(lifted) == want:
        return sub + lifted
    return sub[: want - len(lifted)] + lifted


# ---------------------------------------------------------------------------
# the induced involution on H^1
# ---------------------------------------------------------------------------


@dataclass
class InvolutionStep:
    z: list  # psi-fixed representative of the image class
    w_cert: WStarResult
    solve_precision: int


def w_involution_on_class(D: PhiGammaModule, pair, n_limit: int) -> InvolutionStep:
    """Transport of the averaged-twist operator: lift the class to
    y in D^{psi=1}, form v = (1 - phi) y, apply the certified operator, and
    solve (1 - phi) z = w(v) with psi(z) = z for the image representative."""
    R = D.ring
    q = R.q
    y = lift_to_psi_fixed(D, pair)
    v = [a - b for a, b in zip(y, D.phi_elt(y))]
    # certificate: v is psi-zero
    pv = D.psi_elt(v)
    nv = min(f.n_eff for f in pv)
    for f in pv:
        if not f.truncate(nv).is_zero():
            raise MathCheckError("(1 - phi) of a psi-fixed element is not psi-zero")
    cert = w_star_certified(D, v, n_limit)
    w_val = cert.value
    n_w = min([f.n_eff for f in w_val if f.n_eff < BIG] + [cert.agreement_precision])
    win = Window(D.tail_bound - 1, max(8, n_w))
    ops = ModuleWindowOps(D, win)
    PHI, out_p, cert_phi = ops.matrix("phi")
    PSI, out_q, cert_psi = ops.matrix("psi")
    I_p = ops.identity_into(out_p)
    I_q = ops.identity_into(out_q)
    rows_phi = min(n_w, cert_phi)
    rows_psi = min(cert_psi, max(2, (win.N - R.p) // R.p + 1))
    cap_phi = restriction_matrix(D.rank, out_p, Window(out_p.B, rows_phi))
    cap_psi = restriction_matrix(D.rank, out_q, Window(out_q.B, rows_psi))
    M = np.vstack([
        (cap_phi @ ((I_p - PHI) % q)) % q,
        (cap_psi @ ((PSI - I_q) % q)) % q,
    ])
    rhs = np.concatenate([
        elt_to_vec([f.truncate(rows_phi) for f in w_val], Window(out_p.B, rows_phi)),
        np.zeros(cap_psi.shape[0], dtype=np.int64),
    ])
    sol = solve(R, M, rhs)
    if sol is None:
        raise PrecisionError(
            "(1 - phi) z = w(v) with psi(z) = z is not solvable on this window "
            "(image not in the expected cyclic-module range)"
        )
    z = vec_to_elt(R, sol, win, D.rank, rows_phi)
    return InvolutionStep(z, cert, rows_phi)


def psi_fixed_to_pair(D: PhiGammaModule, z, n_cert: int):
    """The cocycle pair (A, z) of a psi-fixed representative: A solves
    (sigma - 1) A = (phi - 1) z with psi(A) = 0 (which pins it inside
    D^{psi=0}, where sigma - 1 is bijective)."""
    R = D.ring
    q = R.q
    v = [a - b for a, b in zip(D.phi_elt(z), z)]
    win = Window(D.tail_bound - 1, n_cert)
    ops = ModuleWindowOps(D, win)
    SIG, out_s, cert_s = ops.matrix("sigma")
    PSI, out_q, cert_q = ops.matrix("psi")
    I_s = ops.identity_into(out_s)
    rows_sig = min(n_cert, cert_s, min(f.n_eff for f in v) if v else n_cert)
    cap_s = restriction_matrix(D.rank, out_s, Window(out_s.B, rows_sig))
    cap_q = restriction_matrix(D.rank, out_q, Window(out_q.B, min(cert_q, max(2, win.N // R.p))))
    M = np.vstack([
        (cap_s @ ((SIG - I_s) % q)) % q,
        (cap_q @ PSI) % q,
    ])
    rhs = np.concatenate([
        elt_to_vec([f.truncate(rows_sig) for f in v], Window(out_s.B, rows_sig)),
        np.zeros(cap_q.shape[0], dtype=np.int64),
    ])
    sol = solve(R, M, rhs)
    if sol is None:
        raise PrecisionError("transport component not solvable on the window")
    A = vec_to_elt(R, sol, win, D.rank, rows_sig)
    return (A, list(z))


def class_coordinates_by_pairing(D: PhiGammaModule, basis_pairs, G: np.ndarray, z_pair):
    """Coordinates of a class in the basis through the perfect Gram matrix:
    c = G^{-1} (<z, b_1>, ..., <z, b_k>)."""
    R = D.ring
    h2 = calibrated_h2(R.key, D.a)
    vals = np.array(
        [h2.value(cup_value(D, z_pair, b, n_prec=h2.win.N + 4)) for b in basis_pairs],
        dtype=np.int64,
    )
    c = solve(R, G.T % R.q, vals)
    if c is None:
        raise MathCheckError("Gram matrix failed to invert on coordinates")
    return c


# ---------------------------------------------------------------------------
# local sign decomposition
# ---------------------------------------------------------------------------


@dataclass
class SignDecomposition:
    basis: list  # H^1 basis pairs
    gram: np.ndarray
    w_matrix: np.ndarray
    plus_line: np.ndarray  # coordinates of the +1 eigenvector in the basis
    minus_line: np.ndarray
    plus_isotropic: bool
    minus_isotropic: bool
    cross_unit: bool
    anti_isometry: bool
    path_b: dict | None  # {'line_coords':, 'label':, 'source':} when reducible
    paths_agree: bool | None
    certificates: dict


def _eigvec(R, W, eig):
    q = R.q
    M = (W - eig * np.eye(W.shape[0], dtype=np.int64)) % q
    from .linalg import kernel as _kernel

    K = _kernel(R, M)
    if K.shape[0] != 1:
        raise MathCheckError(f"eigenspace for {eig} has rank {K.shape[0]} != 1")
    return K[0]


def _is_isotropic(R, G, vec) -> bool:
    val = 0
    for i in range(len(vec)):
        for j in range(len(vec)):
            val = R.add(val, R.mul(R.mul(int(vec[i]), int(vec[j])), int(G[i, j])))
    return val == 0


def _pair_value(R, G, u, v) -> int:
    val = 0
    for i in range(len(u)):
        for j in range(len(v)):
            val = R.add(val, R.mul(R.mul(int(u[i]), int(v[j])), int(G[i, j])))
    return val


def sub_line_label(D: PhiGammaModule) -> tuple[int, str]:
    """Path-B label of the sub-line per the reducible sign rules: +1 when
    the sub-character is the cyclotomic one, otherwise (-1)^r for tame
    exponent r."""
    R = D.ring
    ch = D.unit_character(0)
    r = ch.tame_exponent()
    lam_trivial = D.chars[0][0] == R.one
    cyclotomic_sub = lam_trivial and (r % (R.p - 1)) == 1 and R.reduce_mod_p(
        D.chars[0][1]
    ) == R.residue_field().from_int(D.a)
    if cyclotomic_sub:
        return 1, "cyclotomic-sub"
    return (-1) ** (r % 2), "tame-exponent"


def lsd_decompose(D: PhiGammaModule, n_limit: int | None = None, N: int | None = None,
                  require_path_b: bool = False) -> SignDecomposition:
    """Eigenspace decomposition of the transported involution, with the
    Lagrangian certificates and (for reducible modules) the independent
    sub-line labels; the two paths must agree."""
    R = D.ring
    p = R.p
    if D.rank != 2 or not D.is_symplectic_self_dual():
        raise InputError("decomposition needs a symplectic self-dual rank-2 module")
    coh = herr_cohomology(D)
    if coh.lengths[0] != 0:
        raise InputError("module is anomalous (nonzero invariants); genericity required")
    if N is None:
        N = 200 if p == 3 else (200 if p == 5 else 120)
    if n_limit is None:
        n_limit = default_w_limit(p, N)
    basis = h1_basis_at_precision(D, N)
    if len(basis) != 2:
        raise MathCheckError(f"H^1 basis has {len(basis)} classes, expected 2")
    G = gram_matrix(D, basis)
    q = R.q
    detG = (int(G[0, 0]) * int(G[1, 1]) - int(G[0, 1]) * int(G[1, 0])) % q
    if not R.is_unit(detG):
        raise MathCheckError("Tate pairing Gram matrix is not unimodular")
    cols = []
    steps = []
    for b in basis:
        step = w_involution_on_class(D, b, n_limit)
        steps.append(step)
        z_pair = psi_fixed_to_pair(D, step.z, step.solve_precision)
        cols.append(class_coordinates_by_pairing(D, basis, G, z_pair))
    W = np.column_stack(cols) % q
    W2 = (W @ W) % q
    if not np.array_equal(W2, np.eye(2, dtype=np.int64)):
        raise MathCheckError(f"transported operator is not an involution: W^2 = {W2.tolist()}")
    if np.array_equal(W % q, np.eye(2, dtype=np.int64) % q) or np.array_equal(
        W % q, (-np.eye(2, dtype=np.int64)) % q
    ):
        raise MathCheckError("involution is scalar; decomposition impossible")
    anti = np.array_equal((W.T @ G @ W) % q, (-G) % q)
    v_plus = _eigvec(R, W, LSD_LABEL_SIGN)
    v_minus = _eigvec(R, W, -LSD_LABEL_SIGN)
    iso_p = _is_isotropic(R, G, v_plus)
    iso_m = _is_isotropic(R, G, v_minus)
    cross = R.is_unit(_pair_value(R, G, v_plus, v_minus))
    path_b = None
    agree = None
    if D.tag in ("sum", "extension"):
        label, source = sub_line_label(D)
        sub_coords = np.array([1, 0], dtype=np.int64)  # basis[0] is the sub-line
        target = v_plus if label == 1 else v_minus
        agree = _same_line(R, target, sub_coords)
        path_b = {"line_coords": sub_coords.tolist(), "label": label, "source": source}
        if D.tag == "sum":
            label2 = (-1) ** (D.unit_character(1).tame_exponent() % 2)
            other = v_plus if label2 == 1 else v_minus
            agree = agree and _same_line(R, other, np.array([0, 1], dtype=np.int64))
            path_b["second_label"] = label2
        if require_path_b and not agree:
            raise MathCheckError("path A (eigenvalues) and path B (sub-line) disagree")
    return SignDecomposition(
        basis=basis,
        gram=G,
        w_matrix=W,
        plus_line=v_plus,
        minus_line=v_minus,
        plus_isotropic=iso_p,
        minus_isotropic=iso_m,
        cross_unit=cross,
        anti_isometry=bool(anti),
        path_b=path_b,
        paths_agree=agree,
        certificates={
            "w_limit": n_limit,
            "w_agreement": [s.w_cert.agreement_precision for s in steps],
            "solve_precision": [s.solve_precision for s in steps],
            "basis_precision": N,
            "gram_det_unit": True,
        },
    )


def _same_line(R, u, v) -> bool:
    return (int(u[0]) * int(v[1]) - int(u[1]) * int(v[0])) % R.q == 0
