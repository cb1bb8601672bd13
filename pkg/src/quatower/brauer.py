"""Brauer classes of quaternion symbols over tower fields.

The class of a symbol (a, b) is computed by peeling valued layers: writing
a = u*t^alpha, b = w*t^beta at the top layer,

    (a, b) = (u_bar, w_bar)  +  ( t, u_bar^beta * w_bar^alpha * (-1)^(alpha*beta) )

so a class is a recursion tree with one residue-field square class per
layer and a base class at the bottom.  Over complete layers (laurent) this
pair is a complete invariant.  Over ratfunc layers the same computation
describes the class after completion; that direction is one-sided, so each
layer carries an exactness flag and queries refuse to certify answers the
computation cannot support (UncertifiedDecision) instead of guessing.

Base classes: over Q the class is the finite set of places (primes, 'inf')
with Hilbert symbol -1, computed from valuations and residues; over F_p
every quaternion algebra splits, so the base class is trivial.

A pairwise common-slot search sits on top: over an F_p base with laurent
layers only, square classes are finite, so the search is exhaustive and a
negative answer is a certificate.  Elsewhere the search is height-bounded
and honest about it.
"""

from fractions import Fraction

from .exceptions import (
    ZeroElement, UnsupportedLayer, UncertifiedDecision, QuatowerError,
    ExactSqrtUnavailable,
)
from .fields import FieldTower, FieldElement, FracDom, QuadDom


# ----------------------------------------------------------------------
# rational Hilbert symbols
# ----------------------------------------------------------------------

def _factor(n):
    n = abs(n)
    out = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    p = 5
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 4 if p % 6 == 1 else 2  # 5,7,11,13,... skip multiples of 3
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _vp_and_unit(q, p):
    """q a nonzero Fraction: (v_p(q), unit part as Fraction)."""
    v = 0
    num, den = q.numerator, q.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v, Fraction(num, den)


def _legendre(u, p):
    r = pow(u % p, (p - 1) // 2, p)
    return 1 if r == 1 else -1


def _unit_mod(q, m):
    """Fraction with numerator and denominator prime to m, reduced mod m."""
    return (q.numerator * pow(q.denominator, -1, m)) % m


def hilbert_symbol_q(a, b, place):
    """Hilbert symbol (a, b) at a rational place: a prime or 'inf'."""
    if a == 0 or b == 0:
        raise ZeroElement("symbol slot is zero")
    if place == 'inf':
        return -1 if (a < 0 and b < 0) else 1
    p = place
    alpha, u = _vp_and_unit(a, p)
    beta, w = _vp_and_unit(b, p)
    if p != 2:
        s = 1
        if beta % 2:
            s *= _legendre(_unit_mod(u, p), p)
        if alpha % 2:
            s *= _legendre(_unit_mod(w, p), p)
        if (alpha * beta) % 2:
            s *= _legendre(p - 1, p)
        return s
    u8, w8 = _unit_mod(u, 8), _unit_mod(w, 8)
    eps_u, eps_w = (u8 % 4 == 3), (w8 % 4 == 3)
    om_u, om_w = (u8 in (3, 5)), (w8 in (3, 5))
    e = (eps_u and eps_w) + alpha * om_w + beta * om_u
    return -1 if e % 2 else 1


def q_ramification_places(a, b):
    """Finite set of places where (a, b) is nonsplit, as a frozenset."""
    if a == 0 or b == 0:
        raise ZeroElement("symbol slot is zero")
    support = {2}
    for q in (a, b):
        support.update(_factor(q.numerator))
        support.update(_factor(q.denominator))
    bad = {p for p in support if hilbert_symbol_q(a, b, p) == -1}
    if hilbert_symbol_q(a, b, 'inf') == -1:
        bad.add('inf')
    assert len(bad) % 2 == 0, "Hilbert reciprocity violated: bug"
    return frozenset(bad)


# ----------------------------------------------------------------------
# class trees
# ----------------------------------------------------------------------

class BrauerClass:
    """Recursive invariant of a quaternion class over a tower field.

    level 0:   places (frozenset) over Q, or the trivial set over F_p.
    level > 0: sub (class one level down) and delta (a unit one level
               down); the layer contribution is trivial iff delta is a
               square.  exact_here records whether this layer's reading
               is faithful for the non-completed field.
    """

    def __init__(self, tower, level, places=None, sub=None, delta=None,
                 exact_here=True, split_shortcut=False):
        self.tower = tower
        self.level = level
        self.places = places
        self.sub = sub
        self.delta = delta
        self.exact_here = exact_here
        self.split_shortcut = split_shortcut

    def exact(self):
        if self.split_shortcut or self.level == 0:
            return self.exact_here
        return self.exact_here and self.sub.exact()

    def trivial_verdict(self):
        """Structural triviality of the computed invariant (soundness of
        the answer is the caller's business, via exact())."""
        if self.split_shortcut:
            return True
        if self.level == 0:
            return not self.places
        if not self.sub.trivial_verdict():
            return False
        return self.delta.is_square()

    def describe(self):
        if self.split_shortcut:
            return "split (identity shortcut)"
        if self.level == 0:
            if self.places is not None:
                ps = sorted(self.places, key=lambda x: (isinstance(x, str), x))
                return "places %s" % (ps if ps else "{}")
            return "trivial (finite base field)"
        name = self.tower.layer(self.level).name
        return "[%s-layer residue %s%s | %s]" % (
            name, self.delta.to_str(),
            "" if self.exact_here else " (completed)",
            self.sub.describe())

    def __repr__(self):
        return "BrauerClass(%s)" % self.describe()


def _split_class(tower, level):
    return BrauerClass(tower, level, split_shortcut=True)


def symbol_class(a, b):
    """Brauer class of the quaternion symbol (a, b)."""
    a, b = a._unify(b)
    if a.is_zero() or b.is_zero():
        raise ZeroElement("symbol slot is zero")
    t, lvl = a.tower, a.level

    # identity shortcuts, valid over every field and exact:
    #   (a, b) splits when a or b is a square, when -ab is a square
    #   ((a,-a) pattern), and when b*(1-a) is a square (Steinberg).
    try:
        if a.is_square() or b.is_square() or (-(a * b)).is_square():
            return _split_class(t, lvl)
        one = t.one(lvl)
        if not (one - a).is_zero() and (b * (one - a)).is_square():
            return _split_class(t, lvl)
    except (UncertifiedDecision, ExactSqrtUnavailable):
        pass

    if lvl == 0:
        if t.base == 'Q':
            return BrauerClass(t, 0, places=q_ramification_places(a.rep, b.rep))
        return BrauerClass(t, 0, places=frozenset())

    layer = t.layer(lvl)
    if layer.kind == 'quad':
        raise UnsupportedLayer(
            "no residue structure at a quadratic layer; work below it or "
            "use the identity shortcuts")

    alpha = a.valuation()
    beta = b.valuation()
    ua, ub = a.shift(-alpha), b.shift(-beta)
    ra, rb = ua.residue(), ub.residue()
    delta = t.one(lvl - 1)
    if beta % 2:
        delta = delta * ra
    if alpha % 2:
        delta = delta * rb
    if (alpha * beta) % 2:
        delta = -delta
    sub = symbol_class(ra, rb)

    exact_here = True
    if layer.kind == 'ratfunc':
        # faithful only when both slots are constants modulo squares
        try:
            exact_here = (alpha % 2 == 0 and beta % 2 == 0
                          and (ua / ra.lift_to(lvl)).is_square()
                          and (ub / rb.lift_to(lvl)).is_square())
        except ExactSqrtUnavailable:
            exact_here = False
    return BrauerClass(t, lvl, sub=sub, delta=delta, exact_here=exact_here)


def _struct_equal(c1, c2):
    t1, t2 = c1.trivial_verdict(), c2.trivial_verdict()
    if c1.split_shortcut or c2.split_shortcut:
        return t1 == t2
    if c1.level != c2.level:
        raise QuatowerError("classes at different levels")
    if c1.level == 0:
        return c1.places == c2.places
    if not _struct_equal(c1.sub, c2.sub):
        return False
    return (c1.delta * c2.delta).is_square()


def brauer_equal(c1, c2):
    """Equality of classes.  False is always sound; True is only returned
    when both computations were exact, otherwise UncertifiedDecision."""
    if not _struct_equal(c1, c2):
        return False
    if c1.exact() and c2.exact():
        return True
    raise UncertifiedDecision("classes agree after completion, which does "
                              "not certify equality here")


def is_split(c):
    """Splitness of a class.  False is always sound; True requires the
    computation to have been exact."""
    if not c.trivial_verdict():
        return False
    if c.exact():
        return True
    raise UncertifiedDecision("class is trivial after completion, which "
                              "does not certify splitness here")


# ----------------------------------------------------------------------
# square-class enumeration (F_p base, laurent layers only)
# ----------------------------------------------------------------------

def least_nonresidue(p):
    for n in range(2, p):
        if pow(n, (p - 1) // 2, p) != 1:
            return n
    raise QuatowerError("no nonresidue mod %d?" % p)


def square_class_reps(tower, level):
    """All square classes of the level as elements: n^e0 * prod t_i^e_i
    with n the least nonresidue of the base.  Requires an F_p base and
    laurent layers only; then the list is complete."""
    if tower.base == 'Q':
        raise UnsupportedLayer("square classes of Q are infinite")
    for l in tower.layers[:level]:
        if l.kind != 'laurent':
            raise UnsupportedLayer("finite enumeration needs laurent layers")
    n = tower.elt(least_nonresidue(tower.base[1]), level)
    gens = [tower.gen(i + 1).lift_to(level) for i in range(level)]
    reps = [tower.one(level)]
    for g in [n] + gens:
        reps = reps + [r * g for r in reps]
    return reps


# ----------------------------------------------------------------------
# common slot search
# ----------------------------------------------------------------------

class SlotResult:
    def __init__(self, status, mu=None, z1=None, z2=None, checked=0, note=""):
        assert status in ('found', 'none', 'unknown')
        self.status = status
        self.mu = mu
        self.z1 = z1
        self.z2 = z2
        self.checked = checked
        self.note = note

    def __repr__(self):
        if self.status == 'found':
            return "SlotResult(found, mu=%s)" % self.mu.to_str()
        return "SlotResult(%s, checked=%d%s)" % (
            self.status, self.checked, ", " + self.note if self.note else "")


def _presents_with_slot(cls, mu, zs):
    """z with class == (mu, z), or None.  UncertifiedDecision bubbles up
    only for inexact layers, which the finite case never has."""
    for z in zs:
        try:
            if brauer_equal(cls, symbol_class(mu, z)):
                return z
        except UncertifiedDecision:
            continue
        except ZeroElement:
            continue
    return None


def common_slot(pair1, pair2):
    """Search for mu with (a1,b1) ~ (mu, z1) and (a2,b2) ~ (mu, z2).

    Over an F_p base with laurent layers only the search is exhaustive
    over square classes: 'found' and 'none' are both certificates.  Over
    other towers a bounded candidate list built from the given slots is
    tried and failure is reported as 'unknown'.
    """
    a1, b1 = pair1
    a2, b2 = pair2
    a1, b1 = a1._unify(b1)
    a2, b2 = a2._unify(b2)
    if a1.tower.sig() != a2.tower.sig() or a1.level != a2.level:
        a1, a2 = a1._unify(a2)
        b1, b2 = b1._unify(b2)
    t, lvl = a1.tower, a1.level
    c1 = symbol_class(a1, b1)
    c2 = symbol_class(a2, b2)

    finite = (t.base != 'Q'
              and all(l.kind == 'laurent' for l in t.layers[:lvl]))
    if finite:
        reps = square_class_reps(t, lvl)
        nontrivial = [r for r in reps if not r.is_square()]
        checked = 0
        for mu in nontrivial:
            checked += 1
            z1 = _presents_with_slot(c1, mu, reps)
            if z1 is None:
                continue
            z2 = _presents_with_slot(c2, mu, reps)
            if z2 is not None:
                return SlotResult('found', mu=mu, z1=z1, z2=z2, checked=checked)
        return SlotResult('none', checked=checked,
                          note="exhaustive over %d square classes" % len(reps))

    # bounded heuristic: products of the given slots and -1
    atoms = [a1, b1, a2, b2, -t.one(lvl)]
    cands, seen = [], set()
    for i in range(1 << len(atoms)):
        m = t.one(lvl)
        for j, at in enumerate(atoms):
            if i >> j & 1:
                m = m * at
        try:
            if m.is_zero() or m.is_square():
                continue
        except ExactSqrtUnavailable:
            pass
        try:
            k = hash(m)
        except QuatowerError:
            k = None
        if k is not None and k in seen:
            continue
        if k is not None:
            seen.add(k)
        cands.append(m)
    zs = cands + [t.one(lvl)]
    checked = 0
    for mu in cands:
        checked += 1
        z1 = _presents_with_slot(c1, mu, zs)
        if z1 is None:
            continue
        z2 = _presents_with_slot(c2, mu, zs)
        if z2 is not None:
            return SlotResult('found', mu=mu, z1=z1, z2=z2, checked=checked)
    return SlotResult('unknown', checked=checked,
                      note="bounded search over slot products only")
