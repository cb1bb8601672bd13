"""Exact arithmetic in towers of valued fields.

A tower starts at Q or at F_p (p an odd prime) and stacks three kinds of
layer on top:

  * laurent  -- k((t)).  Elements are kept as exact rational functions in
                t (a subfield of the full Laurent field that is closed
                under every operation we perform); the t-adic valuation
                and the residue of a rational function agree with the ones
                of its series expansion, so valuation/residue/square-class
                questions are decided exactly.  Square roots that only
                exist as infinite series (Hensel lifts) are carried as
                truncated series views with a stated precision.
  * ratfunc  -- k(x) with x transcendental.  Same representation, but no
                completeness: a unit with square residue need not be a
                square, so squareness is decided by polynomial square
                roots instead of residues.
  * quadext  -- k(sqrt(a)) for a a non-square of the level below.
                Elements are pairs c + d*sqrt(a).

Representations are canonical (fractions are gcd-reduced with monic
denominator, pairs are componentwise), so equality is structural.  All
reps are built from tuples, Fractions and ints and therefore hashable.

The element class is a thin wrapper (tower, level, rep) with operator
overloading; levels unify by lifting, towers unify when one is a prefix of
the other.
"""

from fractions import Fraction
import math

from .exceptions import (
    BadCharacteristic, SquareRadicand, NameCollision, TowerMismatch,
    ZeroElement, ZeroDenominator, NotDescendable, ExactSqrtUnavailable,
    OddValuation, ResidueNotSquare, UnsupportedLayer, PrecisionLost,
    QuatowerError,
)


# ----------------------------------------------------------------------
# polynomial helpers (dense, low-to-high, over an arbitrary dom)
# ----------------------------------------------------------------------

def _pnorm(dom, f):
    f = list(f)
    while f and dom.is_zero(f[-1]):
        f.pop()
    return tuple(f)


def _padd(dom, f, g):
    n = max(len(f), len(g))
    z = dom.zero()
    out = []
    for i in range(n):
        a = f[i] if i < len(f) else z
        b = g[i] if i < len(g) else z
        out.append(dom.add(a, b))
    return _pnorm(dom, out)


def _pneg(dom, f):
    return tuple(dom.neg(c) for c in f)


def _psub(dom, f, g):
    return _padd(dom, f, _pneg(dom, g))


def _pmul(dom, f, g):
    if not f or not g:
        return ()
    if len(g) == 1 and dom.eq(g[0], dom.one()):
        return _pnorm(dom, f)
    if len(f) == 1 and dom.eq(f[0], dom.one()):
        return _pnorm(dom, g)
    out = [dom.zero()] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if dom.is_zero(a):
            continue
        for j, b in enumerate(g):
            if not dom.is_zero(b):
                out[i + j] = dom.add(out[i + j], dom.mul(a, b))
    return _pnorm(dom, out)


def _pscale(dom, f, c):
    if dom.is_zero(c):
        return ()
    return _pnorm(dom, [dom.mul(a, c) for a in f])


def _pshift(dom, f, k):
    if not f:
        return ()
    return (dom.zero(),) * k + tuple(f)


def _pdivmod(dom, f, g):
    g = _pnorm(dom, g)
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    if len(g) == 1:
        ilc = dom.inv(g[0])
        return _pscale(dom, _pnorm(dom, f), ilc), ()
    kg = _pmonomial_deg(dom, g)
    if kg is not None:
        f = _pnorm(dom, f)
        ilc = dom.inv(g[kg])
        return (_pscale(dom, f[kg:], ilc), _pnorm(dom, f[:kg]))
    r = list(_pnorm(dom, f))
    q = [dom.zero()] * max(0, len(r) - len(g) + 1)
    ilc = dom.inv(g[-1])
    while len(r) >= len(g):
        c = dom.mul(r[-1], ilc)
        k = len(r) - len(g)
        q[k] = c
        for i, b in enumerate(g):
            r[k + i] = dom.sub_(r[k + i], dom.mul(c, b))
        while r and dom.is_zero(r[-1]):
            r.pop()
    return _pnorm(dom, q), _pnorm(dom, r)


def _pmonic(dom, f):
    if not f:
        return f
    if dom.eq(f[-1], dom.one()):
        return f
    return _pscale(dom, f, dom.inv(f[-1]))


def _pmonomial_deg(dom, f):
    """k when f = c x^k with one nonzero coefficient, else None."""
    k = None
    for i, c in enumerate(f):
        if not dom.is_zero(c):
            if k is not None:
                return None
            k = i
    return k


def _pgcd(dom, f, g):
    f, g = _pnorm(dom, f), _pnorm(dom, g)
    if not f:
        return _pmonic(dom, g)
    if not g:
        return _pmonic(dom, f)
    # a nonzero constant is coprime to everything
    if len(f) == 1 or len(g) == 1:
        return (dom.one(),)
    kf = _pmonomial_deg(dom, f)
    if kf is not None:
        return _pshift(dom, (dom.one(),), min(kf, _plow(dom, g)))
    kg = _pmonomial_deg(dom, g)
    if kg is not None:
        return _pshift(dom, (dom.one(),), min(kg, _plow(dom, f)))
    while g:
        f, g = g, _pdivmod(dom, f, g)[1]
    return _pmonic(dom, f)


def _plow(dom, f):
    for i, c in enumerate(f):
        if not dom.is_zero(c):
            return i
    return None


def _peval(dom, f, x):
    acc = dom.zero()
    for c in reversed(f):
        acc = dom.add(dom.mul(acc, x), c)
    return acc


def _psqrt(dom, f):
    """Exact polynomial square root, or None.

    Coefficient recursion from the top; needs only sqrt of the leading
    coefficient, so it works in any characteristic != 2 (no derivative
    tricks, hence no trouble with p-th power polynomials).
    """
    f = _pnorm(dom, f)
    if not f:
        return ()
    d = len(f) - 1
    if d % 2:
        return None
    m = d // 2
    lc = dom.sqrt(f[-1])
    if lc is None:
        return None
    z = dom.zero()
    q = [z] * (m + 1)
    q[m] = lc
    t2 = dom.inv(dom.add(lc, lc))
    for i in range(m - 1, -1, -1):
        s = f[i + m] if i + m < len(f) else z
        for j in range(i + 1, m):
            s = dom.sub_(s, dom.mul(q[j], q[i + m - j]))
        q[i] = dom.mul(s, t2)
    q = _pnorm(dom, q)
    if _pmul(dom, q, q) != f:
        return None
    return q


def _series_inv(dom, c, n):
    """First n coefficients of 1/(c0 + c1 X + ...), c0 != 0."""
    i0 = dom.inv(c[0])
    out = [i0]
    z = dom.zero()
    for k in range(1, n):
        s = z
        for j in range(1, min(k, len(c) - 1) + 1):
            if j < len(c):
                s = dom.add(s, dom.mul(c[j], out[k - j]))
        out.append(dom.neg(dom.mul(i0, s)))
    return out


# ----------------------------------------------------------------------
# base domains
# ----------------------------------------------------------------------

class QDom:
    kind = 'Q'
    sub = None

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def from_int(self, n):
        return Fraction(n)

    def add(self, a, b):
        return a + b

    def sub_(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return 1 / a

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def eq(self, a, b):
        return a == b

    def is_zero(self, a):
        return a == 0

    def key(self, a):
        # positives sort before negatives so canonical square roots come
        # out nonnegative
        return (a < 0, abs(a.numerator), a.denominator)

    def sqrt(self, a):
        if a < 0:
            return None
        n, d = a.numerator, a.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
        return None

    def is_square(self, a):
        if a == 0:
            raise ZeroElement("square class of zero")
        return self.sqrt(a) is not None

    def rand(self, rng, height):
        n = rng.randint(-height, height)
        d = rng.randint(1, height)
        return Fraction(n, d)

    def to_str(self, a):
        return str(a)


class FpDom:
    kind = 'Fp'
    sub = None

    def __init__(self, p):
        if p == 2:
            raise BadCharacteristic("residue characteristic 2 is out of scope")
        if p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
            raise BadCharacteristic("modulus %d is not prime" % p)
        self.p = p

    def zero(self):
        return 0

    def one(self):
        return 1

    def from_int(self, n):
        return n % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub_(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, self.p - 2, self.p)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def eq(self, a, b):
        return (a - b) % self.p == 0

    def is_zero(self, a):
        return a % self.p == 0

    def key(self, a):
        return a % self.p

    def sqrt(self, a):
        # Tonelli-Shanks; canonical branch is the smaller representative.
        p = self.p
        a %= p
        if a == 0:
            return 0
        if pow(a, (p - 1) // 2, p) != 1:
            return None
        if p % 4 == 3:
            r = pow(a, (p + 1) // 4, p)
        else:
            q, s = p - 1, 0
            while q % 2 == 0:
                q //= 2
                s += 1
            z = 2
            while pow(z, (p - 1) // 2, p) != p - 1:
                z += 1
            m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
            while t != 1:
                i, tt = 0, t
                while tt != 1:
                    tt = tt * tt % p
                    i += 1
                b = pow(c, 1 << (m - i - 1), p)
                m, c = i, b * b % p
                t, r = t * c % p, r * b % p
        return min(r, p - r)

    def is_square(self, a):
        if a % self.p == 0:
            raise ZeroElement("square class of zero")
        return pow(a, (self.p - 1) // 2, self.p) == 1

    def rand(self, rng, height):
        return rng.randrange(self.p)

    def to_str(self, a):
        return str(a % self.p)


# ----------------------------------------------------------------------
# layer domains
# ----------------------------------------------------------------------

class FracDom:
    """Rational functions in one generator over the level below.

    Used for both laurent and ratfunc layers; the two differ only in what
    'is_square' means and in which extra operations (residue-based) are
    legitimate, which the element layer keys off `kind`.
    """

    def __init__(self, sub, name, kind):
        assert kind in ('laurent', 'ratfunc')
        self.sub = sub
        self.name = name
        self.kind = kind

    def normalize(self, num, den):
        s = self.sub
        num, den = _pnorm(s, num), _pnorm(s, den)
        if not den:
            raise ZeroDenominator("denominator is zero")
        if not num:
            return ((), (s.one(),))
        if len(num) > 1 and len(den) > 1:
            g = _pgcd(s, num, den)
            if len(g) > 1:
                num = _pdivmod(s, num, g)[0]
                den = _pdivmod(s, den, g)[0]
        lc = den[-1]
        if not s.eq(lc, s.one()):
            c = s.inv(lc)
            num = _pscale(s, num, c)
            den = _pscale(s, den, c)
        return (num, den)

    def zero(self):
        return ((), (self.sub.one(),))

    def one(self):
        return ((self.sub.one(),), (self.sub.one(),))

    def from_int(self, n):
        return self.embed(self.sub.from_int(n))

    def embed(self, c):
        if self.sub.is_zero(c):
            return self.zero()
        return ((c,), (self.sub.one(),))

    def project(self, a):
        num, den = a
        if len(num) > 1 or len(den) > 1:
            raise NotDescendable("element involves generator %s" % self.name)
        if not num:
            return self.sub.zero()
        return self.sub.div(num[0], den[0])

    def gen(self):
        s = self.sub
        return ((s.zero(), s.one()), (s.one(),))

    def add(self, a, b):
        s = self.sub
        if not a[0]:
            return b
        if not b[0]:
            return a
        if a[1] == b[1]:
            return self.normalize(_padd(s, a[0], b[0]), a[1])
        n = _padd(s, _pmul(s, a[0], b[1]), _pmul(s, b[0], a[1]))
        return self.normalize(n, _pmul(s, a[1], b[1]))

    def sub_(self, a, b):
        return self.add(a, self.neg(b))

    def neg(self, a):
        return (_pneg(self.sub, a[0]), a[1])

    def mul(self, a, b):
        s = self.sub
        n1, d1 = a
        n2, d2 = b
        if not n1 or not n2:
            return self.zero()
        one = self.one()
        if a == one:
            return b
        if b == one:
            return a
        # cross-cancel before multiplying to keep degrees down
        g1 = _pgcd(s, n1, d2)
        if len(g1) > 1:
            n1 = _pdivmod(s, n1, g1)[0]
            d2 = _pdivmod(s, d2, g1)[0]
        g2 = _pgcd(s, n2, d1)
        if len(g2) > 1:
            n2 = _pdivmod(s, n2, g2)[0]
            d1 = _pdivmod(s, d1, g2)[0]
        return self.normalize(_pmul(s, n1, n2), _pmul(s, d1, d2))

    def inv(self, a):
        if not a[0]:
            raise ZeroDivisionError("inverse of zero")
        return self.normalize(a[1], a[0])

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def eq(self, a, b):
        return a == b

    def is_zero(self, a):
        return not a[0]

    def key(self, a):
        s = self.sub
        return (len(a[0]), tuple(s.key(c) for c in a[0]),
                len(a[1]), tuple(s.key(c) for c in a[1]))

    def valuation(self, a):
        if not a[0]:
            return None
        return _plow(self.sub, a[0]) - _plow(self.sub, a[1])

    def residue(self, a):
        s = self.sub
        if not a[0]:
            return s.zero()
        v = self.valuation(a)
        if v < 0:
            raise QuatowerError("residue of an element with negative valuation")
        if v > 0:
            return s.zero()
        return s.div(a[0][_plow(s, a[0])], a[1][_plow(s, a[1])])

    def shift(self, a, k):
        """a * gen**k (exact)."""
        if not a[0]:
            return a
        if k >= 0:
            return self.normalize(_pshift(self.sub, a[0], k), a[1])
        return self.normalize(a[0], _pshift(self.sub, a[1], -k))

    def coeff_window(self, a, upto):
        """(val, coeffs) with coefficients for exponents val..upto-1, exact."""
        s = self.sub
        if not a[0]:
            return (0, [])
        wn, wd = _plow(s, a[0]), _plow(s, a[1])
        val = wn - wd
        n = upto - val
        if n <= 0:
            return (val, [])
        nn = list(a[0][wn:])
        dd = list(a[1][wd:])
        inv = _series_inv(s, dd, n)
        out = []
        z = s.zero()
        for k in range(n):
            acc = z
            for j in range(0, min(k, len(nn) - 1) + 1):
                acc = s.add(acc, s.mul(nn[j], inv[k - j]))
            out.append(acc)
        return (val, out)

    def sqrt(self, a):
        """Exact square root as a rational function, or None.

        For laurent layers this can be None while the element *is* a
        square of the complete field; callers that only need existence
        should use is_square.
        """
        s = self.sub
        if not a[0]:
            return self.zero()
        prod = _pmul(s, a[0], a[1])
        r = _psqrt(s, prod)
        if r is None:
            return None
        return self.normalize(r, a[1])

    def is_square(self, a):
        if not a[0]:
            raise ZeroElement("square class of zero")
        s = self.sub
        if self.kind == 'laurent':
            v = self.valuation(a)
            if v % 2:
                return False
            u = self.shift(a, -v)
            return s.is_square(self.residue(u))
        # ratfunc: a = n/d is a square iff n*d is a square polynomial
        prod = _pmul(s, a[0], a[1])
        if _psqrt(s, prod) is not None:
            return True
        lc = prod[-1]
        ok_lc = False
        try:
            ok_lc = s.is_square(lc)
        except ZeroElement:
            pass
        if ok_lc and s.sqrt(lc) is None:
            raise ExactSqrtUnavailable(
                "leading coefficient is a square with no exact representation")
        return False

    def rand(self, rng, height):
        s = self.sub
        for _ in range(50):
            num = [s.rand(rng, height) for _ in range(rng.randint(1, 3))]
            den = [s.rand(rng, height) for _ in range(rng.randint(1, 2))]
            if _pnorm(s, den):
                return self.normalize(num, den)
        return self.one()

    def rand_unit(self, rng, height):
        """Random element of valuation 0 (laurent layers)."""
        s = self.sub
        def nzconst():
            while True:
                c = s.rand(rng, height)
                if not s.is_zero(c):
                    return c
        num = [nzconst()] + [s.rand(rng, height) for _ in range(rng.randint(0, 2))]
        den = [nzconst()] + [s.rand(rng, height) for _ in range(rng.randint(0, 1))]
        return self.normalize(num, den)

    def to_str(self, a):
        if not a[0]:
            return "0"
        sn = self._poly_str(a[0])
        if a[1] == (self.sub.one(),):
            return sn
        return "(%s)/(%s)" % (sn, self._poly_str(a[1]))

    def _poly_str(self, f):
        s = self.sub
        parts = []
        for i, c in enumerate(f):
            if s.is_zero(c):
                continue
            cs = s.to_str(c)
            if i == 0:
                parts.append(cs)
            else:
                x = self.name if i == 1 else "%s^%d" % (self.name, i)
                parts.append(x if cs == "1" else "%s*%s" % (
                    cs if ('+' not in cs and '/' not in cs.lstrip('-')) else "(%s)" % cs, x))
        return " + ".join(parts) if parts else "0"


class QuadDom:
    """Quadratic extension by sqrt(rad); elements are pairs c + d*sqrt."""

    kind = 'quad'

    def __init__(self, sub, rad, name):
        self.sub = sub
        self.rad = rad
        self.name = name
        if sub.is_zero(rad):
            raise SquareRadicand("radicand is zero")
        if sub.is_square(rad):
            raise SquareRadicand("radicand is already a square below")

    def zero(self):
        return (self.sub.zero(), self.sub.zero())

    def one(self):
        return (self.sub.one(), self.sub.zero())

    def from_int(self, n):
        return (self.sub.from_int(n), self.sub.zero())

    def embed(self, c):
        return (c, self.sub.zero())

    def project(self, a):
        if not self.sub.is_zero(a[1]):
            raise NotDescendable("element involves %s" % self.name)
        return a[0]

    def gen(self):
        return (self.sub.zero(), self.sub.one())

    def add(self, a, b):
        s = self.sub
        return (s.add(a[0], b[0]), s.add(a[1], b[1]))

    def sub_(self, a, b):
        s = self.sub
        return (s.sub_(a[0], b[0]), s.sub_(a[1], b[1]))

    def neg(self, a):
        s = self.sub
        return (s.neg(a[0]), s.neg(a[1]))

    def mul(self, a, b):
        s = self.sub
        c = s.add(s.mul(a[0], b[0]), s.mul(self.rad, s.mul(a[1], b[1])))
        d = s.add(s.mul(a[0], b[1]), s.mul(a[1], b[0]))
        return (c, d)

    def conj(self, a):
        return (a[0], self.sub.neg(a[1]))

    def norm(self, a):
        s = self.sub
        return s.sub_(s.mul(a[0], a[0]), s.mul(self.rad, s.mul(a[1], a[1])))

    def inv(self, a):
        s = self.sub
        n = self.norm(a)
        if s.is_zero(n):
            if self.is_zero(a):
                raise ZeroDivisionError("inverse of zero")
            raise QuatowerError("norm form degenerate: radicand became a square?")
        ni = s.inv(n)
        return (s.mul(a[0], ni), s.neg(s.mul(a[1], ni)))

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def eq(self, a, b):
        return a == b

    def is_zero(self, a):
        s = self.sub
        return s.is_zero(a[0]) and s.is_zero(a[1])

    def key(self, a):
        return (self.sub.key(a[0]), self.sub.key(a[1]))

    def _sub_sqrt_strict(self, x):
        s = self.sub
        if s.is_zero(x):
            return s.zero()
        r = s.sqrt(x)
        if r is None and s.is_square(x):
            raise ExactSqrtUnavailable(
                "needed square root exists only as a series below the "
                "quadratic layer %s" % self.name)
        return r

    def sqrt(self, a):
        s = self.sub
        c, d = a
        if self.is_zero(a):
            return self.zero()
        if s.is_zero(d):
            r = self._sub_sqrt_strict(c)
            if r is not None:
                return (r, s.zero())
            r = self._sub_sqrt_strict(s.div(c, self.rad))
            if r is not None:
                return (s.zero(), r)
            return None
        n = self._sub_sqrt_strict(self.norm(a))
        if n is None:
            return None
        half = s.inv(s.from_int(2))
        for nn in (n, s.neg(n)):
            c2 = s.mul(s.add(c, nn), half)
            if s.is_zero(c2):
                continue
            r = self._sub_sqrt_strict(c2)
            if r is not None:
                cand = (r, s.div(d, s.add(r, r)))
                if self.eq(self.mul(cand, cand), a):
                    return cand
        return None

    def is_square(self, a):
        if self.is_zero(a):
            raise ZeroElement("square class of zero")
        return self.sqrt(a) is not None

    def rand(self, rng, height):
        s = self.sub
        return (s.rand(rng, height), s.rand(rng, height))

    def to_str(self, a):
        s = self.sub
        if self.is_zero(a):
            return "0"
        parts = []
        if not s.is_zero(a[0]):
            parts.append(s.to_str(a[0]))
        if not s.is_zero(a[1]):
            ds = s.to_str(a[1])
            parts.append(self.name if ds == "1"
                         else "%s*%s" % (ds if '+' not in ds else "(%s)" % ds, self.name))
        return " + ".join(parts)


# ----------------------------------------------------------------------
# towers
# ----------------------------------------------------------------------

class Layer:
    __slots__ = ("kind", "name", "radicand")

    def __init__(self, kind, name, radicand=None):
        self.kind = kind
        self.name = name
        self.radicand = radicand  # rep at the level below, quad only

    def sig(self):
        return (self.kind, self.name, self.radicand)


class FieldTower:
    """Immutable description of a tower plus the stacked domain objects."""

    def __init__(self, base, layers=()):
        self.base = base  # 'Q' or ('Fp', p)
        self.layers = tuple(layers)
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise NameCollision("duplicate generator names: %r" % names)
        doms = [QDom() if base == 'Q' else FpDom(base[1])]
        for l in self.layers:
            subd = doms[-1]
            if l.kind in ('laurent', 'ratfunc'):
                doms.append(FracDom(subd, l.name, l.kind))
            elif l.kind == 'quad':
                doms.append(QuadDom(subd, l.radicand, l.name))
            else:
                raise UnsupportedLayer("unknown layer kind %r" % l.kind)
        self.doms = doms

    # -- constructors ---------------------------------------------------

    @staticmethod
    def rationals():
        return FieldTower('Q')

    @staticmethod
    def prime_field(p):
        return FieldTower(('Fp', p))

    def _extended(self, layer):
        return FieldTower(self.base, self.layers + (layer,))

    def add_laurent(self, name):
        return self._extended(Layer('laurent', name))

    def add_ratfunc(self, name):
        return self._extended(Layer('ratfunc', name))

    def add_quadratic(self, radicand, name):
        """radicand: FieldElement at the current top level of this tower."""
        if isinstance(radicand, FieldElement):
            if radicand.tower.sig() != self.sig() or radicand.level != self.height():
                radicand = radicand.in_tower(self).lift_to(self.height())
            rep = radicand.rep
        else:
            rep = self.elt(radicand, self.height()).rep
        return self._extended(Layer('quad', name, rep))

    def drop_layer(self, idx):
        """Tower without layer idx (1-based level).  Only safe when no
        quadratic layer above idx could see its generator; we restrict to
        dropping layers with only laurent/ratfunc layers above."""
        for l in self.layers[idx:]:
            if l.kind == 'quad':
                raise UnsupportedLayer("cannot drop below a quadratic layer")
        return FieldTower(self.base, self.layers[:idx - 1] + self.layers[idx:])

    # -- structure ------------------------------------------------------

    def sig(self):
        return (self.base, tuple(l.sig() for l in self.layers))

    def __eq__(self, other):
        return isinstance(other, FieldTower) and self.sig() == other.sig()

    def __hash__(self):
        return hash(self.sig())

    def height(self):
        return len(self.layers)

    def dom(self, level):
        return self.doms[level]

    def layer(self, level):
        return self.layers[level - 1]

    def is_prefix_of(self, other):
        return (self.base == other.base
                and self.sig()[1] == other.sig()[1][:len(self.layers)])

    def characteristic(self):
        return 0 if self.base == 'Q' else self.base[1]

    def level_name(self, level):
        if level == 0:
            return "Q" if self.base == 'Q' else "F%d" % self.base[1]
        parts = [self.level_name(0)]
        for l in self.layers[:level]:
            if l.kind == 'laurent':
                parts.append("((%s))" % l.name)
            elif l.kind == 'ratfunc':
                parts.append("(%s)" % l.name)
            else:
                parts.append("(%s)" % l.name)
        return "".join(parts)

    # -- element factories ----------------------------------------------

    def elt(self, value, level=0):
        d0 = self.doms[0]
        if isinstance(value, FieldElement):
            return value.in_tower(self).lift_to(level)
        if isinstance(value, Fraction):
            if self.base == 'Q':
                rep = value
            else:
                rep = d0.div(d0.from_int(value.numerator),
                             d0.from_int(value.denominator))
        else:
            rep = d0.from_int(int(value))
        e = FieldElement(self, 0, rep)
        return e.lift_to(level)

    def gen(self, level):
        if level < 1 or level > self.height():
            raise TowerMismatch("no layer at level %d" % level)
        return FieldElement(self, level, self.doms[level].gen())

    def gen_by_name(self, name):
        for i, l in enumerate(self.layers):
            if l.name == name:
                return self.gen(i + 1)
        raise TowerMismatch("no generator named %r" % name)

    def zero(self, level=0):
        return FieldElement(self, level, self.doms[level].zero())

    def one(self, level=0):
        return FieldElement(self, level, self.doms[level].one())

    def random_element(self, rng, level, height, unit=False):
        d = self.doms[level]
        if unit and isinstance(d, FracDom) and d.kind == 'laurent':
            return FieldElement(self, level, d.rand_unit(rng, height))
        return FieldElement(self, level, d.rand(rng, height))

    def __repr__(self):
        return "FieldTower(%s)" % self.level_name(self.height())


# ----------------------------------------------------------------------
# elements
# ----------------------------------------------------------------------

class FieldElement:
    """(tower, level, rep) with optional truncated-series view.

    rep is None exactly when the element is series-backed (a Hensel lift);
    then series = (val, coeffs, prec) at the top laurent layer of `level`,
    meaning  sum coeffs[i] * t**(val+i)  with error O(t**prec).
    """

    __slots__ = ("tower", "level", "rep", "series")

    def __init__(self, tower, level, rep, series=None):
        self.tower = tower
        self.level = level
        self.rep = rep
        self.series = series

    # -- plumbing ---------------------------------------------------------

    def dom(self):
        return self.tower.doms[self.level]

    def is_exact(self):
        return self.rep is not None

    def in_tower(self, tower):
        if self.tower is tower or self.tower.sig() == tower.sig():
            return FieldElement(tower, self.level, self.rep, self.series)
        if self.tower.is_prefix_of(tower):
            return FieldElement(tower, self.level, self.rep, self.series)
        # shrinking into a prefix is fine when the element lives low enough
        if tower.is_prefix_of(self.tower) and self.level <= tower.height():
            return FieldElement(tower, self.level, self.rep, self.series)
        raise TowerMismatch("element of %r used in %r" % (self.tower, tower))

    def lift_to(self, level):
        if level < self.level:
            return self.descend_to(level)
        if level == self.level:
            return self
        if not self.is_exact():
            raise QuatowerError("cannot lift a series-backed element")
        rep = self.rep
        for j in range(self.level, level):
            rep = self.tower.doms[j + 1].embed(rep)
        return FieldElement(self.tower, level, rep)

    def descend_to(self, level):
        if level > self.level:
            return self.lift_to(level)
        if not self.is_exact():
            raise QuatowerError("cannot descend a series-backed element")
        rep = self.rep
        for j in range(self.level, level, -1):
            rep = self.tower.doms[j].project(rep)
        return FieldElement(self.tower, level, rep)

    @staticmethod
    def _coercible(other):
        return isinstance(other, (int, Fraction, FieldElement))

    def _unify(self, other):
        if not isinstance(other, FieldElement):
            other = self.tower.elt(other)
        if other.tower is not self.tower:
            if self.tower.sig() == other.tower.sig():
                other = other.in_tower(self.tower)
            elif self.tower.is_prefix_of(other.tower):
                return other._unify(self)[::-1]
            elif other.tower.is_prefix_of(self.tower):
                other = other.in_tower(self.tower)
            else:
                raise TowerMismatch("incompatible towers")
        lv = max(self.level, other.level)
        return self.lift_to(lv), other.lift_to(lv)

    # -- series support ---------------------------------------------------

    def _top_laurent(self):
        if self.level == 0 or self.tower.layer(self.level).kind != 'laurent':
            raise UnsupportedLayer("series need a laurent layer on top")
        return self.dom()

    def window(self, upto):
        """(val, coeffs list, prec) covering exponents < upto."""
        d = self._top_laurent()
        if self.is_exact():
            val, cs = d.coeff_window(self.rep, upto)
            return (val, cs, upto)
        val, cs, prec = self.series
        if prec < upto:
            raise PrecisionLost("series carries %d, need %d" % (prec, upto))
        return (val, list(cs[:max(0, upto - val)]), upto)

    def available_prec(self):
        return None if self.is_exact() else self.series[2]

    def to_series(self, prec):
        val, cs, p = self.window(prec)
        return FieldElement(self.tower, self.level, None, (val, tuple(cs), p))

    def vanishes_to(self, prec):
        """True if the element is 0 modulo t**prec (exact or within the
        carried precision)."""
        val, cs, _ = self.window(prec)
        d = self._top_laurent().sub
        return all(d.is_zero(c) for c in cs)

    def _series_binop(self, other, op):
        a, b = self._unify(other)
        d = a._top_laurent()
        s = d.sub
        precs = [x.available_prec() for x in (a, b) if x.available_prec() is not None]
        if not precs:
            raise QuatowerError("series op on exact operands")
        P = min(precs)
        va, ca, _ = a.window(P)
        vb, cb, _ = b.window(P)
        if op in ('add', 'sub'):
            val = min(va, vb) if (ca or cb) else 0
            n = P - val
            z = s.zero()
            out = [z] * n
            for i, c in enumerate(ca):
                out[va - val + i] = c
            for i, c in enumerate(cb):
                c2 = s.neg(c) if op == 'sub' else c
                out[vb - val + i] = s.add(out[vb - val + i], c2)
            return FieldElement(a.tower, a.level, None, (val, tuple(out), P))
        if op == 'mul':
            # after windowing at P both operands carry error O(t^P); the
            # product error is O(t^(P+min(leads)))
            def lead(v, cs):
                for i, c in enumerate(cs):
                    if not s.is_zero(c):
                        return v + i
                return P
            la, lb = lead(va, ca), lead(vb, cb)
            Pr = P + min(la, lb)
            val = va + vb
            n = Pr - val
            z = s.zero()
            out = [z] * max(n, 0)
            for i, x in enumerate(ca):
                if s.is_zero(x):
                    continue
                for j, y in enumerate(cb):
                    if i + j < len(out):
                        out[i + j] = s.add(out[i + j], s.mul(x, y))
            return FieldElement(a.tower, a.level, None, (val, tuple(out), Pr))
        raise QuatowerError("bad series op")

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not self._coercible(other):
            return NotImplemented
        a, b = self._unify(other)
        if a.is_exact() and b.is_exact():
            return FieldElement(a.tower, a.level, a.dom().add(a.rep, b.rep))
        return a._series_binop(b, 'add')

    __radd__ = __add__

    def __neg__(self):
        if self.is_exact():
            return FieldElement(self.tower, self.level, self.dom().neg(self.rep))
        val, cs, p = self.series
        s = self._top_laurent().sub
        return FieldElement(self.tower, self.level, None,
                            (val, tuple(s.neg(c) for c in cs), p))

    def __sub__(self, other):
        if not self._coercible(other):
            return NotImplemented
        a, b = self._unify(other)
        if a.is_exact() and b.is_exact():
            return FieldElement(a.tower, a.level, a.dom().sub_(a.rep, b.rep))
        return a._series_binop(b, 'sub')

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not self._coercible(other):
            return NotImplemented
        a, b = self._unify(other)
        if a.is_exact() and b.is_exact():
            return FieldElement(a.tower, a.level, a.dom().mul(a.rep, b.rep))
        return a._series_binop(b, 'mul')

    __rmul__ = __mul__

    def inv(self):
        if self.is_exact():
            return FieldElement(self.tower, self.level, self.dom().inv(self.rep))
        val, cs, p = self.series
        d = self._top_laurent()
        s = d.sub
        i = 0
        while i < len(cs) and s.is_zero(cs[i]):
            i += 1
        if i == len(cs):
            raise ZeroDivisionError("inverse of a series that vanishes to precision")
        v = val + i
        rel = p - v
        ic = _series_inv(s, list(cs[i:]), rel)
        return FieldElement(self.tower, self.level, None, (-v, tuple(ic), rel - v))

    def __truediv__(self, other):
        if not self._coercible(other):
            return NotImplemented
        a, b = self._unify(other)
        return a * b.inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    def __pow__(self, n):
        if n == 0:
            return self.tower.one(self.level)
        if n < 0:
            return self.inv() ** (-n)
        acc = None
        base = self
        while n:
            if n & 1:
                acc = base if acc is None else acc * base
            base = base * base if n > 1 else base
            n >>= 1
        return acc

    def __eq__(self, other):
        if not self._coercible(other):
            return NotImplemented
        try:
            a, b = self._unify(other)
        except (TowerMismatch, QuatowerError):
            return NotImplemented
        if a.is_exact() and b.is_exact():
            return a.dom().eq(a.rep, b.rep)
        raise QuatowerError("equality of series-backed elements is undecidable; "
                            "compare with vanishes_to")

    def __hash__(self):
        if not self.is_exact():
            raise QuatowerError("series-backed elements are unhashable")
        return hash((self.tower.sig(), self.level, self.rep))

    def is_zero(self):
        if self.is_exact():
            return self.dom().is_zero(self.rep)
        return all(self._top_laurent().sub.is_zero(c) for c in self.series[1])

    # -- valued-field structure --------------------------------------------

    def valuation(self):
        """Generator-adic valuation at the top layer of this level."""
        if self.level == 0 or self.tower.layer(self.level).kind == 'quad':
            raise UnsupportedLayer("valuation needs laurent/ratfunc on top")
        if self.is_exact():
            if self.dom().is_zero(self.rep):
                raise ZeroElement("valuation of zero")
            return self.dom().valuation(self.rep)
        val, cs, p = self.series
        s = self._top_laurent().sub
        for i, c in enumerate(cs):
            if not s.is_zero(c):
                return val + i
        raise PrecisionLost("element vanishes to carried precision %d" % p)

    def residue(self):
        """Reduction mod the top maximal ideal, as an element one level down."""
        if self.level == 0 or self.tower.layer(self.level).kind == 'quad':
            raise UnsupportedLayer("residue needs laurent/ratfunc on top")
        if self.is_exact():
            return FieldElement(self.tower, self.level - 1,
                                self.dom().residue(self.rep))
        val, cs, p = self.series
        s = self._top_laurent().sub
        if val > 0:
            return FieldElement(self.tower, self.level - 1, s.zero())
        if p <= 0:
            raise PrecisionLost("window does not reach the constant term")
        for c in cs[:-val]:
            if not s.is_zero(c):
                raise QuatowerError("residue of negative-valuation element")
        idx = -val
        c = cs[idx] if idx < len(cs) else s.zero()
        return FieldElement(self.tower, self.level - 1, c)

    def shift(self, k):
        """self * t**k at the top laurent/ratfunc layer, exact and cheap."""
        if not self.is_exact():
            val, cs, p = self.series
            return FieldElement(self.tower, self.level, None, (val + k, cs, p + k))
        return FieldElement(self.tower, self.level, self.dom().shift(self.rep, k))

    def unit_part(self):
        return self.shift(-self.valuation())

    def is_square(self):
        if self.is_zero():
            raise ZeroElement("square class of zero")
        if not self.is_exact():
            raise QuatowerError("squareness of series-backed elements not supported")
        return self.dom().is_square(self.rep)

    def sqrt(self):
        """Exact square root at this level, or None."""
        if not self.is_exact():
            raise QuatowerError("sqrt of series-backed element")
        if self.is_zero():
            return self.tower.zero(self.level)
        r = self.dom().sqrt(self.rep)
        if r is None:
            return None
        d = self.dom()
        # canonical branch: smaller key
        rn = d.neg(r)
        if d.key(rn) < d.key(r):
            r = rn
        return FieldElement(self.tower, self.level, r)

    def hensel_sqrt(self, precision):
        """Square root in the complete field, as a truncated series.

        Requires a laurent top layer, even valuation, and a residue (of the
        unit part) that is a square one level down.  The branch is fixed by
        taking the residue square root with the smaller representation key.
        Satisfies v(r*r - self) >= precision.
        """
        d = self._top_laurent()
        s = d.sub
        v = self.valuation()
        if v % 2:
            raise OddValuation("valuation %d is odd" % v)
        w = v // 2
        n = precision - v
        if n <= 0:
            raise PrecisionLost("precision %d not beyond valuation %d" % (precision, v))
        uval, ucs, _ = self.shift(-v).window(n)
        # pad window to exactly n coefficients starting at exponent 0
        z = s.zero()
        u = [z] * n
        for i, c in enumerate(ucs):
            if 0 <= uval + i < n:
                u[uval + i] = c
        r0full = u[0]
        if s.is_zero(r0full):
            raise ZeroElement("unit part has zero residue?")
        try:
            ok = s.is_square(r0full)
        except ExactSqrtUnavailable:
            raise
        if not ok:
            raise ResidueNotSquare("residue %s is not a square" % s.to_str(r0full))
        r0 = s.sqrt(r0full)
        if r0 is None:
            raise ExactSqrtUnavailable("residue square root has no exact rep")
        r0n = s.neg(r0)
        if s.key(r0n) < s.key(r0):
            r0 = r0n
        inv2r0 = s.inv(s.add(r0, r0))
        r = [r0]
        for k in range(1, n):
            acc = u[k]
            for i in range(1, k):
                acc = s.sub_(acc, s.mul(r[i], r[k - i]))
            r.append(s.mul(acc, inv2r0))
        return FieldElement(self.tower, self.level, None, (w, tuple(r), w + n))

    # -- conversions / display ----------------------------------------------

    def to_str(self):
        if self.is_exact():
            return self.dom().to_str(self.rep)
        val, cs, p = self.series
        d = self._top_laurent()
        s = d.sub
        name = d.name
        parts = []
        for i, c in enumerate(cs):
            if s.is_zero(c):
                continue
            e = val + i
            cstr = s.to_str(c)
            if e == 0:
                parts.append(cstr)
            else:
                t = name if e == 1 else "%s^%d" % (name, e)
                parts.append(t if cstr == "1" else "(%s)*%s" % (cstr, t))
        parts.append("O(%s^%d)" % (name, p))
        return " + ".join(parts)

    def __repr__(self):
        return "<%s @%s>" % (self.to_str(), self.tower.level_name(self.level))


# ----------------------------------------------------------------------
# tower-level operations
# ----------------------------------------------------------------------

def valuation_and_residue(e, level=None):
    """(v, residue) of e at the laurent/ratfunc layer `level` (default: its
    own level).  e is descended first, so higher layers must not occur."""
    if level is not None and level != e.level:
        e = e.descend_to(level)
    if e.is_zero():
        raise ZeroElement("valuation of zero")
    v = e.valuation()
    r = e.unit_part().residue()
    return v, r


class SquareClassDecomposition:
    """e == unit * prod(gen_i ** bit_i) * (square), bits listed bottom-up."""

    def __init__(self, unit, bits, recomposed):
        self.unit = unit
        self.bits = bits
        self.recomposed = recomposed

    def __repr__(self):
        return "SquareClassDecomposition(unit=%s, bits=%r)" % (
            self.unit.to_str(), self.bits)


def square_class_decompose(e):
    """Write e, modulo squares, as base-unit times a squarefree monomial in
    the uniformizers.  Only valid over towers whose layers are all laurent."""
    t = e.tower
    if e.is_zero():
        raise ZeroElement("square class of zero")
    for l in t.layers[:e.level]:
        if l.kind != 'laurent':
            raise UnsupportedLayer("square-class ladder needs laurent layers only")
    bits = []
    cur = e
    for lvl in range(e.level, 0, -1):
        v = cur.valuation()
        bits.append(v % 2)
        cur = cur.shift(-v).residue()
    bits.reverse()
    unit = cur
    rec = unit.lift_to(e.level)
    for i, b in enumerate(bits):
        if b:
            rec = rec * t.gen(i + 1).lift_to(e.level)
    dec = SquareClassDecomposition(unit, tuple(bits), rec)
    assert (e / rec).is_square(), "square-class recomposition failed"
    return dec


def quad_norm(e):
    """Norm to the level below a quadratic top layer: (c+d*s) -> c^2 - a*d^2."""
    d = e.dom()
    if not isinstance(d, QuadDom):
        raise UnsupportedLayer("quad_norm needs a quadratic layer on top")
    return FieldElement(e.tower, e.level - 1, d.norm(e.rep))


def flip_gen(e, glevel=None):
    """Field automorphism negating the generator of layer `glevel`
    (default: the element's level); laurent and ratfunc layers only.
    Everything below the layer is fixed, generators above keep their
    names, so odd-degree coefficients change sign and nothing else."""
    if glevel is None:
        glevel = e.level
    t = e.tower
    if glevel < 1 or glevel > e.level:
        raise UnsupportedLayer("no layer at level %d to negate" % glevel)
    if t.layer(glevel).kind not in ('laurent', 'ratfunc'):
        raise UnsupportedLayer("level %d has no generator to negate"
                               % glevel)
    for l in t.layers[glevel:e.level]:
        if l.kind == 'quad':
            raise UnsupportedLayer("quadratic layer above the negated one")
    if not e.is_exact():
        if e.level != glevel:
            raise QuatowerError("series-backed flip works only at the "
                                "series layer itself")
        val, coeffs, prec = e.series
        sub = t.doms[glevel].sub
        flipped = tuple(sub.neg(c) if (val + i) % 2 else c
                        for i, c in enumerate(coeffs))
        return FieldElement(t, e.level, None, (val, flipped, prec))

    def walk(level, rep):
        d = t.doms[level]
        if level == glevel:
            num = tuple(d.sub.neg(c) if i % 2 else c
                        for i, c in enumerate(rep[0]))
            den = tuple(d.sub.neg(c) if i % 2 else c
                        for i, c in enumerate(rep[1]))
        else:
            num = tuple(walk(level - 1, c) for c in rep[0])
            den = tuple(walk(level - 1, c) for c in rep[1])
        return d.normalize(num, den)

    return FieldElement(t, e.level, walk(e.level, e.rep))


def quad_conj(e, qlevel=None):
    """Galois conjugation of the quadratic layer `qlevel` (default: e.level),
    applied functorially through any laurent/ratfunc layers above it."""
    if qlevel is None:
        qlevel = e.level
    t = e.tower
    if t.layer(qlevel).kind != 'quad':
        raise UnsupportedLayer("level %d is not quadratic" % qlevel)
    if not e.is_exact():
        raise QuatowerError("conjugation of series-backed element")

    def walk(level, rep):
        if level == qlevel:
            return t.doms[level].conj(rep)
        d = t.doms[level]
        if isinstance(d, FracDom):
            num = tuple(walk(level - 1, c) for c in rep[0])
            den = tuple(walk(level - 1, c) for c in rep[1])
            return (num, den)
        return (walk(level - 1, rep[0]), walk(level - 1, rep[1]))

    return FieldElement(t, e.level, walk(e.level, e.rep))


def strip_quad_layer(e, qlevel):
    """Move e into the tower with quadratic layer qlevel removed.  Fails
    (NotDescendable) if any sqrt coordinate at that depth is nonzero."""
    t = e.tower
    if t.layer(qlevel).kind != 'quad':
        raise UnsupportedLayer("level %d is not quadratic" % qlevel)
    small = t.drop_layer(qlevel)
    if not e.is_exact():
        raise QuatowerError("cannot strip a series-backed element")
    sub = t.doms[qlevel].sub

    def walk(level, rep):
        if level == qlevel:
            if not sub.is_zero(rep[1]):
                raise NotDescendable("element involves %s" % t.layer(qlevel).name)
            return rep[0]
        d = t.doms[level]
        if isinstance(d, FracDom):
            return (tuple(walk(level - 1, c) for c in rep[0]),
                    tuple(walk(level - 1, c) for c in rep[1]))
        return (walk(level - 1, rep[0]), walk(level - 1, rep[1]))

    if e.level < qlevel:
        return FieldElement(small, e.level, e.rep)
    return FieldElement(small, e.level - 1, walk(e.level, e.rep))


class ElemDom:
    """Adapter exposing the dom protocol over exact FieldElement values,
    so the generic polynomial helpers work with element coefficients
    (characteristic polynomials, polynomial square roots over a level)."""

    def __init__(self, tower, level):
        self.tower = tower
        self.level = level
        self.sub = None
        self.kind = 'elem'

    def zero(self):
        return self.tower.zero(self.level)

    def one(self):
        return self.tower.one(self.level)

    def from_int(self, n):
        return self.tower.elt(n, self.level)

    def add(self, a, b):
        return a + b

    def sub_(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        return a.inv()

    def div(self, a, b):
        return a / b

    def eq(self, a, b):
        return a == b

    def is_zero(self, a):
        return a.is_zero()

    def key(self, a):
        return a.dom().key(a.rep)

    def sqrt(self, a):
        if a.is_zero():
            return self.zero()
        return a.sqrt()

    def is_square(self, a):
        return a.is_square()

    def to_str(self, a):
        return a.to_str()


def norm_group_member(a, z):
    """Is z a norm from the quadratic extension by sqrt(a)?  Decided through
    the quaternion symbol (a, z) being split."""
    from .brauer import symbol_class, is_split
    a2, z2 = a._unify(z)
    return is_split(symbol_class(a2, z2))
