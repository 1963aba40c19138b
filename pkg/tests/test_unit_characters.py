"""Unit groups of quadratic extensions and anticyclotomic characters."""

import random

import pytest

from padicsign.cyclotomic import CyclotomicInt
from padicsign.errors import InputError
from padicsign.unitgroups import (
    KINDS,
    PadicCharacter,
    QuadExtension,
    anticyclotomic_characters,
    build_unit_group,
    required_depth,
    zeta3_element,
)

EXTS = [QuadExtension(p, kind) for p in (3, 5, 7) for kind in KINDS]


@pytest.mark.parametrize("K", EXTS)
def test_unit_group_order(K):
    N = 5
    ug = build_unit_group(K, N)
    p = K.p
    if K.ramified:
        assert ug.order == (p - 1) * p ** (N - 1)
    else:
        assert ug.order == (p * p - 1) * p ** (2 * (N - 1))


def test_depth_too_small_rejected():
    with pytest.raises(InputError):
        build_unit_group(QuadExtension(3, "ram-minus-p"), 1)


def test_zeta3_torsion_present():
    # mu_3 lies inside 1 + delta O_K exactly for Q_3(sqrt(-3))
    ug = build_unit_group(QuadExtension(3, "ram-minus-p"), 6)
    z = zeta3_element(ug.ok)
    assert ug.ok.pow(z, 3) == ug.ok.one() and z != ug.ok.one()
    i, _ = ug.ok.principal_lead(z)
    assert 1 <= i < 6


@pytest.mark.parametrize("K", EXTS)
def test_dlog_roundtrip(K):
    rng = random.Random(K.p + len(K.kind))
    ug = build_unit_group(K, 5)
    ok = ug.ok
    for _ in range(25):
        u = None
        while u is None or not ok.is_unit(u):
            u = (rng.randrange(ok.qx), rng.randrange(ok.qy))
        alpha, vec = ug.dlog(u)
        re = ok.pow(ug.teich_gen, alpha)
        for g, e in zip(ug.principal_gens, vec):
            re = ok.mul(re, ok.pow(g, e))
        assert re == ok.reduce(*u)


@pytest.mark.parametrize("K", EXTS)
@pytest.mark.parametrize("n", [0, 1, 2])
def test_character_counts(K, n):
    chars = anticyclotomic_characters(K, n)
    p = K.p
    expected = 1 if n == 0 else p**n - p ** (n - 1)
    assert len(chars) == expected


@pytest.mark.parametrize("K", EXTS)
def test_character_group_cyclic(K):
    # order-dividing-p^n anticyclotomic characters form a cyclic group of
    # order p^n: generated by any exact-order character
    n = 2
    chars = anticyclotomic_characters(K, n)
    chi = chars[0]
    seen = {chi.power(b).char_id() for b in range(1, K.p**n + 1)}
    assert len(seen) == K.p**n


def test_conductors_unramified():
    for p in (3, 5, 7):
        K = QuadExtension(p, "unram")
        for n in (1, 2):
            assert {c.conductor() for c in anticyclotomic_characters(K, n)} == {n + 1}


def test_conductors_ramified_generic():
    # order p^n gives conductor 2n for the generic ramified kinds; the
    # torsion case Q_3(sqrt(-3)) is shifted by 2 (mu_3 eats the first layer)
    for p, kind, n, expect in [
        (3, "ram-minus-pu", 1, 2),
        (3, "ram-minus-pu", 2, 4),
        (5, "ram-minus-p", 1, 2),
        (5, "ram-minus-pu", 2, 4),
        (7, "ram-minus-p", 2, 4),
        (3, "ram-minus-p", 1, 4),
        (3, "ram-minus-p", 2, 6),
    ]:
        K = QuadExtension(p, kind)
        chars = anticyclotomic_characters(K, n, depth=required_depth(K, n) + 2)
        assert {c.conductor() for c in chars} == {expect}, (p, kind, n)


def test_conductors_even_ramified():
    for K in EXTS:
        if not K.ramified:
            continue
        for n in (1, 2):
            for c in anticyclotomic_characters(K, n):
                assert c.conductor() % 2 == 0


def test_conductor_shift_law():
    # a(chi^{-delta^2}) = a(chi) - 2 when chi^p != 1
    for p in (3, 5, 7):
        for kind in ("ram-minus-p", "ram-minus-pu"):
            K = QuadExtension(p, kind)
            for chi in anticyclotomic_characters(K, 2):
                shifted = chi.power(-K.delta_sq)
                assert shifted.order == p
                assert shifted.conductor() == chi.conductor() - 2


def test_conductor_galois_stable():
    for K in [QuadExtension(5, "ram-minus-p"), QuadExtension(5, "unram")]:
        for chi in anticyclotomic_characters(K, 2):
            a = chi.conductor()
            for b in range(1, 25):
                if b % 5:
                    assert chi.power(b).conductor() == a


@pytest.mark.parametrize("K", EXTS)
def test_evaluate_multiplicative(K):
    rng = random.Random(1 + K.p)
    chi = anticyclotomic_characters(K, 2)[0]
    ok = chi.ug.ok
    for _ in range(20):
        a = b = None
        while a is None or not ok.is_unit(a):
            a = (rng.randrange(ok.qx), rng.randrange(ok.qy))
        while b is None or not ok.is_unit(b):
            b = (rng.randrange(ok.qx), rng.randrange(ok.qy))
        assert chi.evaluate(ok.mul(a, b)) == chi.evaluate(a) * chi.evaluate(b)


@pytest.mark.parametrize("K", EXTS)
def test_trivial_on_zp_units(K):
    chi = anticyclotomic_characters(K, 1)[0]
    one = CyclotomicInt.integer(1, K.p, 1)
    ok = chi.ug.ok
    for u in range(2, 40):
        if u % K.p:
            assert chi.evaluate(ok.reduce(u, 0)) == one


@pytest.mark.parametrize("K", EXTS)
def test_value_at_delta_is_one(K):
    for n in (1, 2):
        for chi in anticyclotomic_characters(K, n)[:4]:
            v = chi.value_at_delta()
            assert v == CyclotomicInt.integer(1, K.p, max(n, 1))


def test_evaluate_primitive_on_conductor_layer():
    # chi(1 + delta^{a(chi)-1}) is a primitive p-th root of unity
    for K in [QuadExtension(3, "ram-minus-p"), QuadExtension(5, "ram-minus-pu"),
              QuadExtension(7, "ram-minus-p")]:
        p = K.p
        for n in (1, 2):
            for chi in anticyclotomic_characters(K, n)[:3]:
                a = chi.conductor()
                val = chi.evaluate(chi.ug.ok.layer_element(a - 1))
                assert val != CyclotomicInt.integer(1, p, n)
                one = CyclotomicInt.integer(1, p, n)
                acc = one
                for _ in range(p):
                    acc = acc * val
                assert acc == one
