import random

import pytest

from quatower.fields import FieldTower, norm_group_member
from quatower.quat import QuaternionAlgebra, find_orthogonal_pure_with_square
from quatower.herm import QuatMatrix, InvolutionAlgebra
from quatower.brauer import symbol_class, brauer_equal
from quatower.towerforms import (
    HalfInt, quat_valuation, ScaledSum, nu_W,
    block_similitude_perturbation, descend_symmetric_root,
    build_form_ladder, common_slot_for_class, theorem_main_check,
    SeriesSimilitudeModel, reindex_even, multiplier_leading_decomposition,
    sample_series_similitudes, ramified_square_norm_report,
    ramified_cubic_square_class_check,
)
from quatower.exceptions import (
    QuatowerError, NameCollision, NotSymmetric, WrongSquare,
    OddValuationMultiplier, VerificationFailed, NotSimilitude,
    SplitAlgebra, UnsupportedCombination, ZeroElement, SizeMismatch,
    SingularElement, PrecisionLost,
)


def k0():
    return FieldTower.prime_field(5).add_laurent('s').add_laurent('u')


def base_algebra(T):
    return QuaternionAlgebra(T.gen(1).lift_to(2), T.gen(2))


def two_slot_ladder():
    Q = base_algebra(k0())
    return build_form_ladder(Q, [Q.i(), Q.j()])


def three_slot_ladder():
    # slot squares s, u, u: a common slot exists (mu = su)
    Q = base_algebra(k0())
    return build_form_ladder(Q, [Q.i(), Q.j(), Q.j()])


def diagonal_root(lad):
    """Diagonal symmetric square root of lam = su over the top field."""
    Q_top = lad.top.Q
    T_top = Q_top.tower
    lvl = Q_top.level
    lam = T_top.elt(lad.Q.a, lvl) * T_top.elt(lad.Q.b, lvl)
    entries = []
    for q in lad.pures:
        q_top = Q_top.elt(*[T_top.elt(c, lvl) for c in q.c])
        entries.append(find_orthogonal_pure_with_square(q_top, lam,
                                                        height=2))
    return QuatMatrix.diagonal(Q_top, entries), lam


# ----------------------------------------------------------------------
# half-integer filtration values
# ----------------------------------------------------------------------

def test_halfint_arithmetic_and_order():
    a, b = HalfInt(3), HalfInt(4)
    assert repr(a) == "3/2" and repr(b) == "2"
    assert b == 2 and not a == 2
    assert a < b and a <= a and b <= 2
    assert a + b == HalfInt(7) and a + 1 == HalfInt(5)
    assert hash(HalfInt(4)) == hash(HalfInt(4))


def test_filtration_on_basis_vectors():
    lad = three_slot_ladder()
    ss = lad.sums[-1]
    Q2 = ss.composite.Q
    m = ss.composite.m
    assert (ss.mv, ss.mvp) == (2, 1)
    for r in range(m):
        e = [Q2.one() if j == r else Q2.zero() for j in range(m)]
        nu = nu_W(ss, e)
        assert nu == (HalfInt(0) if r < ss.mv else HalfInt(1))
        # the norm identity on basis vectors, exactly
        hv = ss.composite.form_value(e, e)
        assert quat_valuation(hv) == nu.twice
    mixed = [Q2.one(), Q2.zero(), Q2.one()]
    assert nu_W(ss, mixed) == HalfInt(0)
    scaled = [Q2.zero(), Q2.zero(), Q2.one() * ss.t]
    assert nu_W(ss, scaled) == HalfInt(3)
    with pytest.raises(ZeroElement):
        nu_W(ss, [Q2.zero()] * m)
    with pytest.raises(SizeMismatch):
        nu_W(ss, [Q2.one()])


def test_norm_identity_every_level():
    lad = three_slot_ladder()
    reps = lad.norm_evidence(samples=25, height=1, seed=7)
    assert [r['level'] for r in reps] == [1, 2, 3]
    for rep in reps:
        assert rep['samples'] == 25
        assert rep['norm_identity_failures'] == 0
        assert rep['compat_failures'] == 0
        assert rep['isotropic_samples'] == 0


# ----------------------------------------------------------------------
# ladder construction
# ----------------------------------------------------------------------

def test_ladder_shape_and_slot_squares():
    lad = three_slot_ladder()
    assert lad.n == 3
    assert lad.top.m == 3
    assert lad.top.kind == 'orthogonal'
    sq = lad.slot_squares()
    assert sq[0] == lad.Q.a and sq[1] == lad.Q.b and sq[2] == lad.Q.b
    # disc of <t1 q1, t2 q2, t3 q3> is s u u = s modulo squares
    T_top = lad.top.Q.tower
    s_top = T_top.elt(lad.Q.a, lad.top.Q.level)
    assert (lad.top.discriminant() * s_top).is_square()


def test_ladder_rejections():
    T = k0()
    s = T.gen(1).lift_to(2)
    # (s, s) ~ (s, -1) and -1 is a square mod 5
    split = QuaternionAlgebra(s, s)
    with pytest.raises(SplitAlgebra):
        build_form_ladder(split, [split.i()])
    Q = base_algebra(T)
    with pytest.raises(QuatowerError):
        build_form_ladder(Q, [])
    with pytest.raises(WrongSquare):
        build_form_ladder(Q, [Q.one() + Q.i()])
    with pytest.raises(SingularElement):
        build_form_ladder(Q, [Q.zero()])
    with pytest.raises(NameCollision):
        build_form_ladder(Q, [Q.i()], names=['s'])
    with pytest.raises(NameCollision):
        build_form_ladder(Q, [Q.i(), Q.j()], names=['t1', 't1'])


# ----------------------------------------------------------------------
# descent of symmetric roots
# ----------------------------------------------------------------------

def test_descend_diagonal_root():
    lad = two_slot_ladder()
    ss = lad.sums[-1]
    ghat, lam = diagonal_root(lad)
    assert ss.composite.sigma(ghat) == ghat
    g, gp, lam0 = descend_symmetric_root(ss, ghat)
    assert g.m == 1 and gp.m == 1
    E = ss.inv_v.Q.tower
    lvl = ss.inv_v.Q.level
    assert lam0 == E.elt(lad.Q.a, lvl) * E.elt(lad.Q.b, lvl)
    # the split-off entry anticommutes with the unscaled slot
    w = gp.rows[0][0]
    qj = ss.inv_vp.gram[0]
    assert (w * qj + qj * w).is_zero()
    assert (g * g).scalar_value() == lam0
    assert (gp * gp).scalar_value() == lam0


def test_descend_scaling_and_conjugation_invariance():
    lad = three_slot_ladder()
    ss = lad.sums[-1]
    ghat, lam = diagonal_root(lad)
    base = descend_symmetric_root(ss, ghat)
    one = ss.tower.one(ss.level)
    scaled = ghat.scale(one + ss.t)
    got = descend_symmetric_root(ss, scaled)
    assert got[0] == base[0] and got[1] == base[1] and got[2] == base[2]
    # conjugate by S = 1 + t N across the two slots with equal pures;
    # the correction enters above the extraction order
    Q_top = lad.top.Q
    S, Sinv, mult = block_similitude_perturbation(lad.top, 1, 2,
                                                  Q_top.j(), ss.t)
    assert not mult == one
    conj = S * ghat * Sinv
    assert any(not conj.rows[r][c].is_zero()
               for r in range(3) for c in range(3) if r != c)
    assert lad.top.sigma(conj) == conj
    assert (conj * conj).scalar_value() == (ghat * ghat).scalar_value()
    got = descend_symmetric_root(ss, conj)
    assert got[0] == base[0] and got[1] == base[1] and got[2] == base[2]


def test_block_perturbation_needs_compatible_slots():
    lad = two_slot_ladder()
    with pytest.raises(UnsupportedCombination):
        block_similitude_perturbation(lad.top, 0, 1, lad.top.Q.j(), 1)


def test_descend_rejections():
    lad = two_slot_ladder()
    ss = lad.sums[-1]
    Q2 = ss.composite.Q
    flip = QuatMatrix(Q2, [[Q2.zero(), Q2.one()],
                           [Q2.one(), Q2.zero()]])
    with pytest.raises(NotSymmetric):
        descend_symmetric_root(ss, flip)
    # symmetric but with non-scalar square: entry squares s and u differ
    mixed = QuatMatrix.diagonal(Q2, [Q2.j(), Q2.i()])
    assert ss.composite.sigma(mixed) == mixed
    with pytest.raises(WrongSquare):
        descend_symmetric_root(ss, mixed)
    ss0 = lad.sums[0]
    with pytest.raises(UnsupportedCombination):
        descend_symmetric_root(ss0, QuatMatrix.identity(ss0.composite.Q, 1))


def test_descend_odd_valuation_multiplier():
    # <q, t q> with the same slot on both sides: the off-diagonal root
    # [[0, t], [1, 0]] is symmetric with square t of odd valuation
    Q = base_algebra(k0())
    inv_q = InvolutionAlgebra(Q, [Q.i()])
    ss = ScaledSum(inv_q, inv_q, 't')
    Q2 = ss.composite.Q
    ghat = QuatMatrix(Q2, [[Q2.zero(), Q2.elt(ss.t)],
                           [Q2.one(), Q2.zero()]])
    assert ss.composite.sigma(ghat) == ghat
    assert (ghat * ghat).scalar_value() == ss.t
    with pytest.raises(OddValuationMultiplier):
        descend_symmetric_root(ss, ghat)


# ----------------------------------------------------------------------
# common slots
# ----------------------------------------------------------------------

def test_common_slot_found_and_certified_none():
    Q = base_algebra(k0())
    s, u = Q.a, Q.b
    rep = common_slot_for_class(Q, [s, u, u])
    assert rep.status == 'found'
    assert (rep.mu * s * u).is_square()
    assert rep.note.startswith('exhaustive')
    # quaternion slots are read off through their square scalars
    rep_q = common_slot_for_class(Q, [Q.elt(s), u, u])
    assert rep_q.status == 'found' and rep_q.mu == rep.mu
    rep2 = common_slot_for_class(Q, [s, u, -(s * u)])
    assert rep2.status == 'none'
    assert rep2.checked == 7


def test_common_slot_bounded_over_rationals():
    T = FieldTower.rationals().add_laurent('x')
    x = T.gen(1)
    two = T.elt(2, 1)
    Q = QuaternionAlgebra(two, x)
    rep = common_slot_for_class(Q, [two, x])
    assert rep.status in ('found', 'unknown')
    assert rep.note.startswith('bounded')
    if rep.status == 'found':
        for a in (two, x):
            assert brauer_equal(symbol_class(a, rep.mu), Q.brauer_class())
    # constant slots against (3, x): no bounded candidate works, and
    # the bounded route never claims a certificate
    Q3 = QuaternionAlgebra(T.elt(3, 1), x)
    rep3 = common_slot_for_class(Q3, [two])
    assert rep3.status == 'unknown'
    assert rep3.checked == 3


# ----------------------------------------------------------------------
# the obstruction check, both outcomes
# ----------------------------------------------------------------------

def test_obstruction_check_positive_instance():
    lad = three_slot_ladder()
    rep = theorem_main_check(lad)
    assert rep['slot_status'] == 'found'
    su = lad.Q.a * lad.Q.b
    assert (rep['slot_mu'] * su).is_square()
    assert rep['root_classes_checked'] == 63
    assert rep['root_representable_classes'] == 1
    assert rep['bounds'] == {'grid_height': 2, 'retry_height': 4}
    assert rep['agreement'] == 'slot and root found, descent verified'
    stages = rep['descent']
    assert [st['level'] for st in stages] == [3, 2, 1]
    for st in stages:
        lam = st['lam']
        assert lam == lam.tower.elt(su, lam.level)
        assert st['anticommutes'] and st['class_match']


def test_obstruction_check_negative_instance():
    # slot squares s, u, -su: no single class matches all three, and no
    # nonsquare over the top is representable on every slot plane
    Q = base_algebra(k0())
    lad = build_form_ladder(Q, [Q.i(), Q.j(), Q.k()])
    rep = theorem_main_check(lad)
    assert rep['slot_status'] == 'none'
    assert rep['slot_classes_checked'] == 7
    assert rep['root_classes_checked'] == 63
    assert rep['root_representable_classes'] == 0
    assert rep['agreement'] == 'both empty'
    assert rep['descent'] is None


def test_obstruction_check_rejects_similar_slots():
    Q = base_algebra(k0())
    lad = build_form_ladder(Q, [Q.i(), Q.i()])
    with pytest.raises(UnsupportedCombination):
        theorem_main_check(lad)


def test_obstruction_check_needs_enumerable_square_classes():
    T = FieldTower.rationals().add_laurent('x')
    Q = QuaternionAlgebra(T.elt(2, 1), T.gen(1))
    lad = build_form_ladder(Q, [Q.i(), Q.j()])
    with pytest.raises(UnsupportedCombination):
        theorem_main_check(lad)


# ----------------------------------------------------------------------
# multiplier decomposition over the series extension
# ----------------------------------------------------------------------

def series_model():
    Q = base_algebra(k0())
    return SeriesSimilitudeModel(InvolutionAlgebra(Q, [Q.i()]))


def test_reindex_even_exact():
    m = series_model()
    xi = m.xi
    T, lvl = m.tower, m.level
    e = (xi ** 4 + T.elt(2, lvl) * xi ** 2) / (T.one(lvl) - xi ** 2)
    fx = reindex_even(e, m.sq_tower, m.sq_level)
    x = m.x
    TX, lx = m.sq_tower, m.sq_level
    assert fx == (x ** 2 + TX.elt(2, lx) * x) / (TX.one(lx) - x)
    assert reindex_even(T.zero(lvl), m.sq_tower, m.sq_level).is_zero()
    with pytest.raises(VerificationFailed):
        reindex_even(xi + xi ** 2, m.sq_tower, m.sq_level)
    with pytest.raises(PrecisionLost):
        reindex_even((T.one(lvl) + xi).hensel_sqrt(4),
                     m.sq_tower, m.sq_level)


def test_multiplier_decomposition_examples():
    m = series_model()
    Q = m.inv.Q
    one_dn = Q.tower.one(Q.level)
    ident = QuatMatrix.identity(Q, 1)
    # xi itself: trivial leading similitude, factor reindexes to -x
    mu0, factor = multiplier_leading_decomposition(
        m, m.lift(ident).scale(m.xi))
    assert mu0 == one_dn
    assert reindex_even(factor, m.sq_tower, m.sq_level) == -m.x
    # a constant similitude built from an anticommuting pure
    g = QuatMatrix.diagonal(Q, [Q.j()])
    mu0, factor = multiplier_leading_decomposition(m, m.lift(g))
    assert mu0 == Q.b
    assert factor == m.tower.one(m.level)
    # the product picks up both parts
    c = m.xi * (m.tower.one(m.level) + m.xi ** 2)
    mu0, factor = multiplier_leading_decomposition(m, m.lift(g).scale(c))
    assert mu0 == Q.b
    x = m.x
    want = -x * (m.sq_tower.one(m.sq_level) + x) ** 2
    assert reindex_even(factor, m.sq_tower, m.sq_level) == want


def test_multiplier_decomposition_sampled():
    m = series_model()
    rng = random.Random(23)
    for ghat in sample_series_similitudes(m, rng, 30):
        mu0, factor = multiplier_leading_decomposition(m, ghat)
        mu_hat = (m.tau(ghat) * ghat).scalar_value()
        assert factor * m.lift_scalar(mu0) == mu_hat
        assert norm_group_member(
            m.x, reindex_even(factor, m.sq_tower, m.sq_level))


def test_multiplier_rejects_non_similitude():
    m = series_model()
    Q = m.inv.Q
    g = QuatMatrix.diagonal(Q, [Q.one() + Q.j()])
    with pytest.raises(NotSimilitude):
        multiplier_leading_decomposition(m, m.lift(g))


# ----------------------------------------------------------------------
# ramified realizations and norms from above
# ----------------------------------------------------------------------

def test_ramified_square_norms_finite_base():
    k = FieldTower.prime_field(5)
    rep = ramified_square_norm_report(k, 2, [1], samples=6, prec=6, seed=3)
    assert rep['closed_form_matches']
    assert rep['x_equals_minus_norm_unit_mod_squares']
    assert rep['routes_agree']
    assert rep['all_in_union']
    assert len(rep['samples']) == 6
    for row in rep['samples']:
        assert row['in_union'] == (row['member']
                                   or row['member_after_coset'])


def test_ramified_square_norms_rational_base():
    k = FieldTower.rationals()
    rep = ramified_square_norm_report(k, 3, [2, 1], samples=4, prec=5,
                                      seed=9)
    assert rep['closed_form_matches']
    assert rep['x_equals_minus_norm_unit_mod_squares']
    assert rep['routes_agree']
    assert rep['all_in_union']
    with pytest.raises(QuatowerError):
        ramified_square_norm_report(k, 0, [1])


def test_ramified_cubic_square_class():
    k = FieldTower.prime_field(5)
    rep = ramified_cubic_square_class_check(k, 2, [1], Q_symbol=(2, 3),
                                            seed=5)
    assert rep['square_class_transfer']
    assert rep['intertwine_samples'] == 8
    assert rep['diagonal_root'] == {'symmetric_for_both': True,
                                    'square_matches': True}
    bare = ramified_cubic_square_class_check(k, 3, [1, 2])
    assert bare == {'square_class_transfer': True}
