"""Brauer classes and common slots.

Oracles:
  * odd p: brute-force primitive solutions of z^2 = a x^2 + b y^2 mod p^3
    (complete for v_p(a), v_p(b) <= 1, which the samples respect);
  * frozen classical place sets over Q, checked for reciprocity;
  * the norm subgroup of F_5((s))((u))(sqrt(s)): random norms must land in
    exactly the square classes the symbol machinery declares split;
  * a hand-derived pair of division algebras over F_5((s))((u))((w)) whose
    six-slot form is anisotropic, so no common slot can exist.
"""

from fractions import Fraction
import random

import pytest

from quatower.exceptions import UncertifiedDecision, UnsupportedLayer, ZeroElement
from quatower.fields import FieldTower, square_class_decompose, norm_group_member
from quatower.brauer import (
    hilbert_symbol_q, q_ramification_places, symbol_class, brauer_equal,
    is_split, square_class_reps, least_nonresidue, common_slot, _factor,
)


def brute_hilbert_odd_p(a, b, p):
    """(a,b)_p by exhaustive primitive solutions mod p^3; valid for
    v_p(a), v_p(b) <= 1."""
    m = p ** 3
    sq_all = {(z * z) % m for z in range(m)}
    sq_unit = {(z * z) % m for z in range(m) if z % p}
    for x in range(m):
        for y in range(m):
            s = (a * x * x + b * y * y) % m
            if x % p or y % p:
                if s in sq_all:
                    return 1
            elif s in sq_unit:
                return 1
    return -1


def test_factor():
    assert _factor(1) == {}
    assert _factor(49) == {7: 2}
    assert _factor(2 * 2 * 3 * 25 * 49 * 11) == {2: 2, 3: 1, 5: 2, 7: 2, 11: 1}


def test_hilbert_odd_p_against_brute_force():
    rng = random.Random(5)
    for p in (3, 5):
        cases = 0
        while cases < 12:
            a = rng.randint(-12, 12)
            b = rng.randint(-12, 12)
            if a == 0 or b == 0:
                continue
            if a % p ** 2 == 0 or b % p ** 2 == 0:
                continue
            got = hilbert_symbol_q(Fraction(a), Fraction(b), p)
            assert got == brute_hilbert_odd_p(a, b, p), (a, b, p)
            cases += 1
    # a couple of p = 7 cases, chosen to hit both signs
    assert hilbert_symbol_q(Fraction(7), Fraction(3), 7) == \
        brute_hilbert_odd_p(7, 3, 7)
    assert hilbert_symbol_q(Fraction(7), Fraction(-1), 7) == \
        brute_hilbert_odd_p(7, -1, 7)


def test_frozen_place_sets():
    assert q_ramification_places(Fraction(-1), Fraction(-1)) == \
        frozenset({2, 'inf'})
    assert q_ramification_places(Fraction(3), Fraction(-2)) == frozenset()
    assert q_ramification_places(Fraction(2), Fraction(3)) == frozenset({2, 3})
    assert q_ramification_places(Fraction(-1), Fraction(3)) == frozenset({2, 3})
    assert q_ramification_places(Fraction(-1), Fraction(-3)) == \
        frozenset({3, 'inf'})
    assert q_ramification_places(Fraction(-1), Fraction(-2)) == \
        frozenset({2, 'inf'})


def test_reciprocity_parity_random():
    rng = random.Random(17)
    for _ in range(200):
        a = Fraction(rng.randint(-30, 30), rng.randint(1, 12))
        b = Fraction(rng.randint(-30, 30), rng.randint(1, 12))
        if a == 0 or b == 0:
            continue
        q_ramification_places(a, b)  # asserts even parity internally


def test_symbol_class_over_q():
    T = FieldTower.rationals()
    m1 = T.elt(-1)
    assert not is_split(symbol_class(m1, m1))
    assert is_split(symbol_class(T.elt(2), T.elt(7)))   # 2+7=9
    assert brauer_equal(symbol_class(m1, m1), symbol_class(m1, T.elt(-2)))
    assert not brauer_equal(symbol_class(m1, m1), symbol_class(m1, T.elt(-3)))


def test_identity_shortcuts():
    T = FieldTower.rationals().add_laurent('x')
    x = T.gen(1)
    assert is_split(symbol_class(x, -x))
    assert is_split(symbol_class(x, x ** 2 * (1 + x)))  # b a square there
    assert is_split(symbol_class(7 + 0 * x, 1 - (7 + 0 * x)))  # Steinberg
    assert is_split(symbol_class(x, 1 + x))  # unit with square residue


def test_laurent_tower_f5():
    T = FieldTower.prime_field(5).add_laurent('s').add_laurent('u')
    s = T.gen(1).lift_to(2)
    u = T.gen(2)
    cs_u = symbol_class(s, u)
    assert not is_split(cs_u)
    assert brauer_equal(cs_u, symbol_class(s, s * u))
    assert brauer_equal(cs_u, symbol_class(u, s * u))
    assert is_split(symbol_class(s, u * u))
    # -1 is a square mod 5, so (s,s) splits
    assert is_split(symbol_class(s, s))


def test_norm_subgroup_oracle():
    # z is a norm from F(sqrt(s)) iff (s, z) splits; sample norms and
    # compare coverage with the machinery's verdict on all 8 classes
    T = FieldTower.prime_field(5).add_laurent('s').add_laurent('u')
    s2 = T.gen(1).lift_to(2)
    rng = random.Random(23)
    reps = square_class_reps(T, 2)
    seen = set()
    for _ in range(120):
        c = T.random_element(rng, 2, 3)
        d = T.random_element(rng, 2, 3)
        n = c * c - s2 * d * d
        if n.is_zero():
            continue
        dec = square_class_decompose(n)
        cls = (dec.unit.is_square(), dec.bits)
        seen.add(cls)
        assert is_split(symbol_class(s2, n)), "norm declared nonsplit"
    # norms c^2 - s*d^2 have even u-valuation (the two halves cannot
    # share a leading term) and trivial unit class (-1 is a square mod 5),
    # so the norm group here is exactly {1, s} modulo squares: index 4,
    # not the index 2 of one-dimensional local fields
    split_reps = [r for r in reps if is_split(symbol_class(s2, r))]
    assert len(split_reps) == 2
    split_keys = set()
    for r in split_reps:
        dec = square_class_decompose(r)
        split_keys.add((dec.unit.is_square(), dec.bits))
    assert seen == split_keys  # every split class realized, no others


def test_bimultiplicativity_consistency():
    T = FieldTower.prime_field(5).add_laurent('s').add_laurent('u')
    rng = random.Random(29)
    reps = square_class_reps(T, 2)
    nonsq = [r for r in reps if not r.is_square()]
    for _ in range(60):
        a = rng.choice(nonsq)
        b = T.random_element(rng, 2, 2)
        c = T.random_element(rng, 2, 2)
        if b.is_zero() or c.is_zero():
            continue
        lhs = brauer_equal(symbol_class(a, b), symbol_class(a, c))
        rhs = is_split(symbol_class(a, b * c))
        assert lhs == rhs


def test_norm_group_member_entry_point():
    T = FieldTower.rationals().add_laurent('x')
    x = T.gen(1)
    assert norm_group_member(x, -x)
    assert norm_group_member(x, 1 + x)
    assert not norm_group_member(x, x)      # -1 not a Q-square
    assert norm_group_member(x, x * (-1 - x))


def test_ratfunc_soundness_discipline():
    T = FieldTower.rationals().add_ratfunc('x')
    x = T.gen(1)
    # (x, x+1) is trivial after completion but ramified at x = -1:
    # the library must refuse, not guess
    with pytest.raises(UncertifiedDecision):
        is_split(symbol_class(x, 1 + x))
    # sound False: nonsquare-constant residue
    assert not is_split(symbol_class(x, T.elt(3, 1)))
    # exact True: constant slots
    assert is_split(symbol_class(T.elt(2, 1), T.elt(7, 1)))
    assert not is_split(symbol_class(T.elt(-1, 1), T.elt(-1, 1)))


def test_square_class_reps():
    T = FieldTower.prime_field(5).add_laurent('s').add_laurent('u')
    reps = square_class_reps(T, 2)
    assert len(reps) == 8
    for i, r in enumerate(reps):
        for q in reps[i + 1:]:
            assert not (r * q).is_square()
    assert least_nonresidue(5) == 2
    with pytest.raises(UnsupportedLayer):
        square_class_reps(FieldTower.rationals().add_laurent('t'), 1)


def test_common_slot_found():
    T = FieldTower.prime_field(5).add_laurent('s').add_laurent('u')
    s = T.gen(1).lift_to(2)
    u = T.gen(2)
    res = common_slot((s, s * u), (u, s * u))
    assert res.status == 'found'
    # re-verify the certificate
    assert brauer_equal(symbol_class(s, s * u), symbol_class(res.mu, res.z1))
    assert brauer_equal(symbol_class(u, s * u), symbol_class(res.mu, res.z2))


def test_common_slot_none_certified():
    # over F_5((s))((u))((w)) the pair (n,s), (u,w) has anisotropic
    # six-dimensional slot form, so no common slot exists; the search is
    # exhaustive over the 16 square classes and certifies that
    T = (FieldTower.prime_field(5)
         .add_laurent('s').add_laurent('u').add_laurent('w'))
    n = T.elt(least_nonresidue(5), 3)
    s = T.gen(1).lift_to(3)
    u = T.gen(2).lift_to(3)
    w = T.gen(3)
    assert not is_split(symbol_class(n, s))
    assert not is_split(symbol_class(u, w))
    res = common_slot((n, s), (u, w))
    assert res.status == 'none'
    assert res.checked == 15


def test_common_slot_unknown_over_q():
    T = FieldTower.rationals()
    a = T.elt(-1)
    res = common_slot((a, a), (T.elt(-2), T.elt(-5)))
    assert res.status in ('found', 'unknown')
    if res.status == 'found':
        assert brauer_equal(symbol_class(a, a), symbol_class(res.mu, res.z1))


def test_zero_slot_rejected():
    T = FieldTower.rationals()
    with pytest.raises(ZeroElement):
        symbol_class(T.elt(0), T.elt(3))
