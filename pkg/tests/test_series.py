"""Truncated Laurent series: binomial series, phi / psi / sigma operators,
and their algebraic contracts at certified precision."""

import random
from fractions import Fraction

import pytest

from padicsign.errors import InputError, PrecisionError
from padicsign.padic import GF, ResidueElement, Zmod
from padicsign.series import (
    BIG,
    TruncatedLaurentSeries as TLS,
    binom_series,
    invert_series,
    one_plus_x_pow,
    phi_apply,
    psi_apply,
    sigma_apply,
)

RINGS = [GF(3, 1), GF(5, 1), Zmod(3, 2), Zmod(5, 3), GF(3, 2)]


def random_series(R, rng, lo=-3, width=12, n_eff=None):
    codes = [rng.randrange(R.q) for _ in range(width)]
    return TLS.make(R, lo, codes, BIG if n_eff is None else n_eff)


def test_binom_series_exact_integer():
    R = Zmod(3, 3)
    f = binom_series(3, 10, R)
    # (1+X)^3 exactly
    assert f.coeffs == (1, 3, 3, 1)
    assert f.n_eff == BIG


def test_binom_series_geometric():
    R = GF(5, 1)
    f = binom_series(-1, 8, R)
    assert [f.coeff(k) for k in range(8)] == [pow(-1, k, 5) for k in range(8)]


def test_binom_series_half_mod9():
    a = ResidueElement(3, 2, 5)  # 1/2 mod 9
    f = binom_series(a, 3)
    assert f.coeff(0) == 1 and f.coeff(1) == 5
    # C(1/2, 2) = (1/2)(-1/2)/2 = -1/8 = 1 mod 9
    assert f.coeff(2) == 1
    g = binom_series(Fraction(1, 2), 3, Zmod(3, 2))
    assert g.coeffs == f.coeffs


def test_binom_series_exact_fraction_no_loss():
    R = Zmod(3, 4)
    f = binom_series(Fraction(1, 2), 30, R)
    sq = (f * f).truncate(30)
    target = TLS.make(R, 0, [1, 1])
    assert sq.eq_certified(target.truncate(30))


def test_series_mul_precision():
    R = GF(3, 1)
    f = TLS.make(R, 0, [1, 1], n_eff=2)
    g = TLS.make(R, 2, [1])
    assert (f * g).n_eff == 4  # unknown tail shifts with the other valuation


def test_invert_series_unit_leading():
    R = Zmod(5, 3)
    f = TLS.make(R, -2, [2, 1, 3, 4])
    h = invert_series(f, 12)
    assert (f * h - TLS.one(R)).truncate(12).is_zero()


def test_invert_series_p_leading():
    # leading coefficient p: invertible in (Z/p^m)((X)) but not in X^Z R[[X]]^x
    R = Zmod(3, 3)
    f = TLS.make(R, 1, [3, 0, 0, 1])  # 3X + X^4
    h = invert_series(f, 10)
    assert (f * h - TLS.one(R)).truncate(10).is_zero()


@pytest.mark.parametrize("R", RINGS)
def test_phi_examples(R):
    p = R.p
    x = TLS.monomial(R, 1)
    fx = phi_apply(x)
    expected = (one_plus_x_pow(R, p, p + 1) - TLS.one(R)).truncate(BIG)
    assert fx.eq_certified(expected)
    assert phi_apply(TLS.one(R)).eq_certified(TLS.one(R))


def test_phi_mod_p_is_dilation():
    R = GF(5, 1)
    f = TLS.make(R, -2, [1, 2, 0, 3])
    g = phi_apply(f)
    assert g.lo == -10 and g.coeff(-10) == 1 and g.coeff(-5) == 2 and g.coeff(5) == 3


@pytest.mark.parametrize("R", RINGS)
def test_psi_examples(R):
    p = R.p
    assert psi_apply(TLS.one(R)).eq_certified(TLS.one(R))
    for i in range(1, p):
        f = one_plus_x_pow(R, i, i + 1).truncate(40)
        assert psi_apply(f).is_zero()


@pytest.mark.parametrize("R", RINGS)
def test_psi_phi_identity_random(R):
    rng = random.Random(hash(R.key) & 0xFFFF)
    for _ in range(100):
        f = random_series(R, rng, lo=rng.randrange(-3, 1), width=10, n_eff=None)
        g = psi_apply(phi_apply(f))
        assert g.eq_certified(f)


@pytest.mark.parametrize("R", [GF(3, 1), Zmod(3, 2), GF(5, 1)])
def test_psi_twisted_components(R):
    # psi((1+X)^i phi(g)) = g for i = 0 and 0 for 0 < i < p
    rng = random.Random(7)
    p = R.p
    for _ in range(25):
        g = random_series(R, rng, lo=0, width=6)
        base = phi_apply(g)
        for i in range(p):
            f = (one_plus_x_pow(R, i, i + 1) * base) if i else base
            out = psi_apply(f)
            if i == 0:
                assert out.eq_certified(g)
            else:
                assert out.is_zero()


@pytest.mark.parametrize("R", RINGS)
def test_projection_formula(R):
    rng = random.Random(hash(R.key) & 0xFFF)
    for _ in range(30):
        f = random_series(R, rng, lo=0, width=5)
        g = random_series(R, rng, lo=-2, width=8)
        lhs = psi_apply(phi_apply(f) * g)
        rhs = f * psi_apply(g)
        assert lhs.eq_certified(rhs)


def test_sigma_identity_and_composition():
    R = Zmod(5, 2)
    rng = random.Random(3)
    for _ in range(20):
        f = random_series(R, rng, lo=-2, width=8)
        assert sigma_apply(f, 1, 20).eq_certified(f.truncate(20))
        a, b = 7, 11
        lhs = sigma_apply(sigma_apply(f, a, 30), b, 20)
        rhs = sigma_apply(f, a * b, 20)
        assert lhs.eq_certified(rhs)


def test_sigma_phi_commute():
    for R in [GF(3, 1), Zmod(3, 2), GF(5, 1)]:
        rng = random.Random(R.p)
        for _ in range(15):
            f = random_series(R, rng, lo=-1, width=6)
            lhs = sigma_apply(phi_apply(f), 7, 25)
            rhs = phi_apply(sigma_apply(f, 7, 25)).truncate(25)
            assert lhs.eq_certified(rhs)


def test_sigma_fractional_exponent():
    # sigma_b for b = -1/4, a p-adic unit at p = 3
    R = Zmod(3, 3)
    f = TLS.make(R, 0, [0, 1])  # X
    g = sigma_apply(f, Fraction(-1, 4), 10)
    # (1+X)^{-1/4} - 1 = -(1/4) X + ...
    assert g.coeff(1) == R.from_fraction(Fraction(-1, 4))
    h = sigma_apply(g, Fraction(-4, 1), 8)
    assert h.eq_certified(f.truncate(8))


def test_sigma_rejects_non_unit():
    R = GF(3, 1)
    with pytest.raises(InputError):
        sigma_apply(TLS.one(R), 3, 5)


def test_psi_mod_p_matches_zmod_reduction():
    # the mod-p extraction is the lifting base case and must agree with the
    # Z/p^m computation reduced mod p
    rng = random.Random(17)
    Rm = Zmod(3, 3)
    Rp = GF(3, 1)
    for _ in range(25):
        f = random_series(Rm, rng, lo=-2, width=9)
        fp = TLS.make(Rp, f.lo, [c % 3 for c in f.coeffs], f.n_eff)
        a = psi_apply(f)
        b = psi_apply(fp)
        ar = TLS.make(Rp, a.lo, [c % 3 for c in a.coeffs], a.n_eff)
        assert ar.eq_certified(b)


def test_psi_precision_certificate():
    R = GF(3, 1)
    f = TLS.make(R, 0, [1] * 9, n_eff=9)
    out = psi_apply(f)
    assert out.n_eff == (9 - 3) // 3 + 1
