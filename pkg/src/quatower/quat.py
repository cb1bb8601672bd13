"""Quaternion algebras (a, b) over tower fields.

Basis 1, i, j, ij with i^2 = a, j^2 = b, ji = -ij.  Elements carry four
coordinates at a fixed tower level; all arithmetic is exact.  A pure
(trace-zero) element q satisfies q^2 = a x1^2 + b x2^2 - a b x3^2, a
scalar, which drives the constructive searches: two coordinates walk a
deterministic grid and the third is solved exactly by a squareness test.
"""

from .exceptions import (
    ZeroElement, NotPure, ZeroDivisorInverse, ConstructionNotFound,
    QuatowerError, ExactSqrtUnavailable,
)
from .fields import FieldTower, FieldElement
from .brauer import symbol_class, is_split


class QuaternionAlgebra:

    def __init__(self, a, b):
        a, b = a._unify(b)
        if a.is_zero() or b.is_zero():
            raise ZeroElement("structure constants must be nonzero")
        self.a = a
        self.b = b
        self.tower = a.tower
        self.level = a.level

    def coerce_scalar(self, x):
        if isinstance(x, FieldElement):
            return x.in_tower(self.tower).lift_to(self.level)
        return self.tower.elt(x, self.level)

    def elt(self, x0, x1=0, x2=0, x3=0):
        return Quaternion(self, tuple(self.coerce_scalar(x) for x in
                                      (x0, x1, x2, x3)))

    def zero(self):
        return self.elt(0)

    def one(self):
        return self.elt(1)

    def i(self):
        return self.elt(0, 1)

    def j(self):
        return self.elt(0, 0, 1)

    def k(self):
        return self.elt(0, 0, 0, 1)

    def basis(self):
        return (self.one(), self.i(), self.j(), self.k())

    def brauer_class(self):
        return symbol_class(self.a, self.b)

    def is_division(self):
        """May raise UncertifiedDecision over layers where splitness is
        undecidable by residues."""
        return not is_split(self.brauer_class())

    def same_algebra(self, other):
        return (self.tower.sig() == other.tower.sig()
                and self.level == other.level
                and self.a == other.a and self.b == other.b)

    def random(self, rng, height):
        cs = tuple(self.tower.random_element(rng, self.level, height)
                   for _ in range(4))
        return Quaternion(self, cs)

    def __repr__(self):
        return "QuaternionAlgebra(%s, %s over %s)" % (
            self.a.to_str(), self.b.to_str(),
            self.tower.level_name(self.level))


class Quaternion:

    __slots__ = ("alg", "c")

    def __init__(self, alg, coords):
        assert len(coords) == 4
        self.alg = alg
        self.c = tuple(coords)

    def _coerce(self, other):
        if isinstance(other, Quaternion):
            if not self.alg.same_algebra(other.alg):
                raise QuatowerError("quaternions from different algebras")
            return other
        return Quaternion(self.alg, (self.alg.coerce_scalar(other),
                                     self.alg.tower.zero(self.alg.level),
                                     self.alg.tower.zero(self.alg.level),
                                     self.alg.tower.zero(self.alg.level)))

    def __add__(self, other):
        o = self._coerce(other)
        return Quaternion(self.alg, tuple(x + y for x, y in zip(self.c, o.c)))

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(self.alg, tuple(-x for x in self.c))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        a, b = self.alg.a, self.alg.b
        x0, x1, x2, x3 = self.c
        y0, y1, y2, y3 = o.c
        z0 = x0 * y0 + a * (x1 * y1) + b * (x2 * y2) - a * b * (x3 * y3)
        z1 = x0 * y1 + x1 * y0 - b * (x2 * y3) + b * (x3 * y2)
        z2 = x0 * y2 + x2 * y0 + a * (x1 * y3) - a * (x3 * y1)
        z3 = x0 * y3 + x1 * y2 - x2 * y1 + x3 * y0
        return Quaternion(self.alg, (z0, z1, z2, z3))

    def __rmul__(self, other):
        # scalars commute; quaternion * quaternion never lands here
        return self * other

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except QuatowerError:
            return NotImplemented
        return all(x == y for x, y in zip(self.c, o.c))

    def __hash__(self):
        return hash((self.alg.a, self.alg.b, self.c))

    def is_zero(self):
        return all(x.is_zero() for x in self.c)

    def conj(self):
        x0, x1, x2, x3 = self.c
        return Quaternion(self.alg, (x0, -x1, -x2, -x3))

    def trd(self):
        return self.c[0] + self.c[0]

    def nrd(self):
        a, b = self.alg.a, self.alg.b
        x0, x1, x2, x3 = self.c
        return x0 * x0 - a * (x1 * x1) - b * (x2 * x2) + a * b * (x3 * x3)

    def scalar_part(self):
        return self.c[0]

    def pure_part(self):
        z = self.alg.tower.zero(self.alg.level)
        return Quaternion(self.alg, (z,) + self.c[1:])

    def is_pure(self):
        return self.c[0].is_zero()

    def is_scalar(self):
        return all(x.is_zero() for x in self.c[1:])

    def as_scalar(self):
        if not self.is_scalar():
            raise QuatowerError("not a scalar: %r" % self)
        return self.c[0]

    def inv(self):
        n = self.nrd()
        if n.is_zero():
            if self.is_zero():
                raise ZeroDivisionError("inverse of zero")
            raise ZeroDivisorInverse("reduced norm vanishes")
        return self.conj() * n.inv()

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o.inv()

    def __pow__(self, n):
        if n < 0:
            return self.inv() ** (-n)
        acc = self.alg.one()
        base = self
        while n:
            if n & 1:
                acc = acc * base
            base = base * base if n > 1 else base
            n >>= 1
        return acc

    def square_scalar(self):
        """q^2 as a field element, for pure q."""
        if not self.is_pure():
            raise NotPure("element has a scalar part")
        return (self * self).as_scalar()

    def to_str(self):
        names = ("1", "i", "j", "ij")
        parts = []
        for x, n in zip(self.c, names):
            if x.is_zero():
                continue
            xs = x.to_str()
            if n == "1":
                parts.append(xs)
            elif xs == "1":
                parts.append(n)
            else:
                parts.append("(%s)*%s" % (xs, n))
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return "<%s in %r>" % (self.to_str(), self.alg)


def anticommutes(p, q):
    return (p * q + q * p).is_zero()


def pairing(p, q):
    """pq + qp for pures: a scalar, the polarization of q -> q^2."""
    s = p * q + q * p
    return s.as_scalar()


def anticommutant_plane(q):
    """Two pure elements p1, p2 with p1 q = -q p1, p2 q = -q p2 and
    p1 p2 = -p2 p1, spanning the pures orthogonal to q.  Needs q pure
    with q^2 != 0."""
    A = q.alg
    if not q.is_pure():
        raise NotPure("orthogonal plane of a non-pure element")
    qq = q.square_scalar()
    if qq.is_zero():
        raise ZeroElement("q^2 = 0: no orthogonal decomposition")
    cands = []
    for p in (A.i(), A.j(), A.k()):
        proj = p - q * (pairing(p, q) / (qq + qq))
        if not proj.is_zero():
            cands.append(proj)
    # pick two independent ones (coordinates are 3-vectors over the field)
    def indep(u, v):
        for r in range(1, 4):
            for s in range(r + 1, 4):
                d = u.c[r] * v.c[s] - u.c[s] * v.c[r]
                if not d.is_zero():
                    return True
        return False
    for ii in range(len(cands)):
        for jj in range(ii + 1, len(cands)):
            p1, p2 = cands[ii], cands[jj]
            if not indep(p1, p2):
                continue
            c1 = p1.square_scalar()
            if c1.is_zero():
                continue
            p2o = p2 - p1 * (pairing(p2, p1) / (c1 + c1))
            if p2o.is_zero():
                continue
            assert anticommutes(p1, q) and anticommutes(p2o, q)
            assert anticommutes(p1, p2o)
            return p1, p2o
    raise ConstructionNotFound("no anticommuting plane found; q^2 = 0 "
                               "directions everywhere (split algebra)")


# ----------------------------------------------------------------------
# deterministic search grids
# ----------------------------------------------------------------------

def default_grid(tower, level, height):
    """Small field elements in a deterministic order: integers by height,
    base fractions, then generator monomials g, 1/g, c*g, 1+g, 1-g."""
    out = [tower.elt(0, level)]
    for h in range(1, height + 1):
        out.append(tower.elt(h, level))
        out.append(tower.elt(-h, level))
    if tower.base == 'Q':
        from fractions import Fraction
        for den in range(2, height + 1):
            for num in range(1, height + 1):
                if Fraction(num, den).denominator == 1:
                    continue
                out.append(tower.elt(Fraction(num, den), level))
                out.append(tower.elt(Fraction(-num, den), level))
    gens = [tower.gen(i + 1).lift_to(level) for i in range(level)]
    for g in gens:
        out.append(g)
        out.append(-g)
        out.append(g.inv())
        for h in range(2, height + 1):
            out.append(g * h)
        out.append(1 + g)
        out.append(1 - g)
    return out


def find_pure_with_square(A, lam, height=3, grid=None):
    """Pure q in A with q^2 = lam, or ConstructionNotFound.

    Walks all pairs from the grid in two of the three pure coordinates and
    solves the third exactly: from (x2, x3), x1^2 = (lam - b x2^2 +
    a b x3^2)/a, and cyclically.  Failure certifies that no solution has
    two coordinates on the grid and an exactly representable third."""
    lam = A.coerce_scalar(lam)
    if lam.is_zero():
        raise ZeroElement("looking for a nilpotent pure; not supported")
    a, b = A.a, A.b
    grid = list(grid) if grid is not None else default_grid(A.tower, A.level, height)

    def try_coord(sq):
        if sq.is_zero():
            return sq
        try:
            if not sq.is_square():
                return None
        except ExactSqrtUnavailable:
            return None
        return sq.sqrt()

    pairs = [(u, v) for u in grid for v in grid]
    for u, v in pairs:
        # solve x1 from (x2, x3) = (u, v)
        r = try_coord((lam - b * u * u + a * b * v * v) / a)
        if r is not None:
            q = A.elt(0, r, u, v)
            if q.square_scalar() == lam:
                return q
        # solve x2 from (x1, x3) = (u, v)
        r = try_coord((lam - a * u * u + a * b * v * v) / b)
        if r is not None:
            q = A.elt(0, u, r, v)
            if q.square_scalar() == lam:
                return q
        # solve x3 from (x1, x2) = (u, v)
        r = try_coord((a * u * u + b * v * v - lam) / (a * b))
        if r is not None:
            q = A.elt(0, u, v, r)
            if q.square_scalar() == lam:
                return q
    raise ConstructionNotFound(
        "no pure element with square %s: exhausted %d grid pairs in each "
        "of three coordinate modes" % (lam.to_str(), len(pairs)))


def find_orthogonal_pure_with_square(q, mu, height=3, grid=None):
    """Pure g with g q = -q g and g^2 = mu, via the anticommutant plane:
    g = alpha p1 + beta p2 needs alpha^2 c1 + beta^2 c2 = mu with
    c_i = p_i^2; one coefficient walks the grid, the other is solved."""
    A = q.alg
    mu = A.coerce_scalar(mu)
    p1, p2 = anticommutant_plane(q)
    c1 = p1.square_scalar()
    c2 = p2.square_scalar()
    grid = list(grid) if grid is not None else default_grid(A.tower, A.level, height)

    def solve(cfix, pfix, cother, pother):
        for alpha in grid:
            val = (mu - alpha * alpha * cfix) / cother
            if val.is_zero():
                g = pfix * alpha
            else:
                try:
                    if not val.is_square():
                        continue
                except ExactSqrtUnavailable:
                    continue
                beta = val.sqrt()
                if beta is None:
                    continue
                g = pfix * alpha + pother * beta
            if not g.is_zero() and g.square_scalar() == mu:
                return g
        return None

    g = solve(c1, p1, c2, p2)
    if g is None:
        g = solve(c2, p2, c1, p1)
    if g is None:
        raise ConstructionNotFound(
            "no pure square root of %s anticommuting with the given "
            "element within the grid" % mu.to_str())
    assert anticommutes(g, q)
    return g


def pure_triple_slot(F, a1, a2, level=None):
    """From the symbol (a1, a2), a third slot carried by an explicit pure
    element:

        q3 = (1-a1)(1+a2) i + 2 a1 j + 2 ij,
        q3^2 = a1 (1-a1) ((1-a2)^2 - a1 (1+a2)^2) =: a3.

    Returns (q3, a3) with the square identity verified exactly; raises
    ConstructionNotFound if the instance is degenerate (a3 = 0)."""
    if level is None:
        level = F.height()
    if not isinstance(a1, FieldElement):
        a1 = F.elt(a1, level)
    if not isinstance(a2, FieldElement):
        a2 = F.elt(a2, level)
    A = QuaternionAlgebra(a1, a2)
    a1e, a2e = A.a, A.b
    one = A.tower.one(A.level)
    q3 = A.elt(0, (one - a1e) * (one + a2e), a1e + a1e, 2)
    a3 = a1e * (one - a1e) * ((one - a2e) ** 2 - a1e * (one + a2e) ** 2)
    if a3.is_zero():
        raise ConstructionNotFound("degenerate slots: the pure square vanishes")
    got = q3.square_scalar()
    assert got == a3, "pure-square identity failed: bug"
    return q3, a3
