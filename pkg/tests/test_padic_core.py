"""Core arithmetic: residues, finite fields, Legendre, Teichmueller,
p-adic binomials and the quadratic Gauss sum."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padicsign.cyclotomic import (
    CyclotomicInt,
    certify_sign_from_gauss_quotient,
    p_star,
    quadratic_gauss_sum,
)
from padicsign.errors import InputError, PrecisionError
from padicsign.padic import (
    GF,
    FiniteFieldElement,
    ResidueElement,
    Zmod,
    legendre,
    padic_binomial,
    smallest_primitive_root_mod_p2,
    teichmuller,
    vp_factorial,
)

PRIMES = [3, 5, 7, 11, 13]


def test_legendre_examples():
    assert legendre(2, 7) == 1  # squares mod 7 are {1,2,4}
    assert legendre(5, 7) == -1
    for p in PRIMES:
        assert legendre(1, p) == 1
        assert legendre(p, p) == 0


def test_legendre_rejects_nonprime():
    with pytest.raises(InputError):
        legendre(3, 9)
    with pytest.raises(InputError):
        legendre(3, 2)


@pytest.mark.parametrize("p", PRIMES)
def test_legendre_multiplicative_exhaustive(p):
    for a in range(1, p):
        for b in range(1, p):
            assert legendre(a * b, p) == legendre(a, p) * legendre(b, p)


@given(
    st.sampled_from([3, 5, 7]),
    st.integers(min_value=-(10**6), max_value=10**6),
    st.integers(min_value=-(10**6), max_value=10**6),
    st.integers(min_value=-(10**6), max_value=10**6),
)
@settings(max_examples=300)
def test_residue_ring_axioms(p, a, b, c):
    m = 4
    x, y, z = (ResidueElement(p, m, v) for v in (a, b, c))
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + y == y + x
    assert x * y == y * x


def test_residue_units_and_division():
    x = ResidueElement(3, 2, 5)
    assert x.is_unit()
    assert x * x.inverse() == 1
    assert not ResidueElement(3, 2, 6).is_unit()
    with pytest.raises(InputError):
        ResidueElement(3, 2, 3).inverse()


def test_residue_precision_propagation():
    a = ResidueElement(5, 3, 7)
    b = ResidueElement(5, 1, 2)
    assert (a * b).m == 1
    assert (a + b).m == 1


@pytest.mark.parametrize("p", [3, 5, 7])
def test_finite_field_axioms_randomized(p):
    rng = random.Random(p)
    F = GF(p, 2)
    for _ in range(2500):
        a, b, c = (rng.randrange(F.q) for _ in range(3))
        assert F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        if a != 0:
            assert F.mul(a, F.inv(a)) == 1
    # multiplicative group has order q - 1
    x = FiniteFieldElement(p, 2, F.from_coords(1, 1))
    acc = x
    order = 1
    while acc != 1:
        acc = acc * x
        order += 1
    assert (F.q - 1) % order == 0


def test_finite_field_element_ops():
    e = FiniteFieldElement(3, 2, 5)
    assert e - e == FiniteFieldElement(3, 2, 0)
    assert (e / e) == FiniteFieldElement(3, 2, 1)


def test_teichmuller_examples():
    assert teichmuller(1, 7, 3) == ResidueElement(7, 3, 1)
    t = teichmuller(2, 5, 2)
    assert t.val == 7  # 7^4 = 2401 = 1 + 96*25
    assert t ** 4 == 1
    for p in [3, 5, 7]:
        for a in range(1, p):
            w = teichmuller(a, p, 4)
            assert w ** (p - 1) == 1
            assert w.val % p == a % p


def test_padic_binomial_trivial_and_integer():
    a = ResidueElement(5, 3, 17)
    assert padic_binomial(a, 0) == 1
    # C(p, k) for integer a = p matches the integer binomial
    from math import comb

    b = ResidueElement(5, 3, 5)
    for k in range(6):
        assert padic_binomial(b, k) == comb(5, k) % 125


def test_padic_binomial_half():
    # 1/2 mod 9 is 5; C(1/2, 1) = 1/2 = 5 mod 9
    a = ResidueElement(3, 2, 5)
    c = padic_binomial(a, 1)
    assert c.val == 5 and c.m == 2


def test_padic_binomial_pascal():
    rng = random.Random(11)
    for p in [3, 5]:
        m = 4
        for _ in range(40):
            a = ResidueElement(p, m, rng.randrange(p**m))
            for k in range(1, 8):
                lhs = padic_binomial(a, k)
                rhs = padic_binomial(a - 1, k - 1) + padic_binomial(a - 1, k)
                assert lhs == rhs  # equality at common certified precision


def test_padic_binomial_precision_exhaustion():
    a = ResidueElement(3, 1, 2)
    with pytest.raises(PrecisionError):
        padic_binomial(a, 3)  # v_3(3!) = 1 eats the whole certificate
    assert vp_factorial(3, 3) == 1


def test_primitive_root():
    for p in PRIMES:
        g = smallest_primitive_root_mod_p2(p)
        seen = {pow(g, k, p * p) for k in range(p * (p - 1))}
        assert len(seen) == p * (p - 1)


# -- cyclotomic integers ----------------------------------------------------


def test_gauss_sum_small():
    g3 = quadratic_gauss_sum(3)
    # zeta - zeta^2 in the power basis {1, zeta}: zeta^2 = -1 - zeta
    assert g3.coeffs == (1, 2)
    assert (g3 * g3).rational_value() == -3


@pytest.mark.parametrize("p", PRIMES)
def test_gauss_sum_square(p):
    g = quadratic_gauss_sum(p)
    assert (g * g).rational_value() == p_star(p)
    # conjugation identity g * sigma_{-1}(g) = (-1/p) p* = p
    assert (g * g.galois(-1)).rational_value() == p


def test_gauss_quotient_certification():
    for p in PRIMES:
        g = quadratic_gauss_sum(p)
        for b in range(1, p):
            s = certify_sign_from_gauss_quotient(g.galois(b))
            assert s == legendre(b, p)


def test_cyclotomic_ring_ops():
    z = CyclotomicInt.root_power(5, 2, 1)
    w = CyclotomicInt.root_power(5, 2, 24)
    assert z * w == CyclotomicInt.integer(1, 5, 2)
    tot = CyclotomicInt.zero(5, 1)
    for e in range(5):
        tot = tot + CyclotomicInt.root_power(5, 1, e)
    assert tot.is_zero()  # 1 + zeta + ... + zeta^4 = 0


def test_cyclotomic_lift_conductor():
    g = quadratic_gauss_sum(3)
    lifted = g.lift_conductor(2)
    assert (lifted * lifted).rational_value() == -3
