"""Scalar extension of an involution algebra by a square root.

Take A = M_m(Q) with the adjoint involution sigma of a diagonal form, and
a scalar `a` that is not a square in the ground field.  Adjoining a
central u with u^2 = a produces B = A + A u; the involution extends by
twisting with the conjugation of the scalar extension:

    tau(b0 + b1 u) = sigma(b0) - sigma(b1) u.

Elements stay as coefficient pairs (b0, b1) over the original tower,
so all arithmetic is exact and no quadratic field layer is needed.

The point of the construction: tau is hyperbolic exactly when A contains
a sigma-symmetric s with s^2 = a, except for one genuinely exceptional
configuration (split algebra, symplectic involution, degree 2 mod 4)
where tau is hyperbolic for free but no such s can exist, every
symmetric element being a root of its odd-degree half characteristic
polynomial.  The dictionary between the two sides is explicit:

    s  |-->  e = (1/2) + s u / (2a),      an idempotent with tau(e) = 1-e;
    e = e0 + e1 u with e1 invertible  |-->  s = e0 * e1^(-1).

Both directions re-verify their defining identities exactly before
returning.  The search side (`hyperbolicity_check`) hunts for s through
two hand-sized families: diagonal matrices of pure quaternions
anticommuting with the form entry at their slot, and two-by-two
transposition blocks; an honest not-found report carries the bounds.

There is also a formal-series variant of the same extension, where the
new scalar is a Laurent generator xi with xi^2 = x; isotropy then
transfers between the two sides through leading coefficients, which
`isotropy_transfer_check` exercises on samples.
"""

import random

from .exceptions import (
    SquareRadicand, WrongSquare, SingularE2, NotSymmetric, ExceptionalCase,
    SingularElement, ZeroElement, ConstructionNotFound, UncertifiedDecision,
    VerificationFailed, QuatowerError,
)
from .fields import flip_gen
from .quat import QuaternionAlgebra, find_orthogonal_pure_with_square
from .herm import QuatMatrix, InvolutionAlgebra
from .brauer import is_split


class UnitaryExtension:
    """Pairs (b0, b1) over an InvolutionAlgebra, with a central u, u^2=a."""

    def __init__(self, inv, a):
        self.inv = inv
        a = inv.Q.coerce_scalar(a)
        if a.is_zero():
            raise ZeroElement("extension by a square root of zero")
        if a.is_square():
            raise SquareRadicand("radicand %s is a square; the extension "
                                 "is not a field" % a.to_str())
        self.a = a

    def elt(self, b0, b1=None):
        m = self.inv.m
        if not isinstance(b0, QuatMatrix):
            b0 = QuatMatrix.identity(self.inv.Q, m).scale(b0) \
                if not _is_zeroish(b0) else QuatMatrix.zero(self.inv.Q, m)
        if b1 is None:
            b1 = QuatMatrix.zero(self.inv.Q, m)
        elif not isinstance(b1, QuatMatrix):
            b1 = QuatMatrix.identity(self.inv.Q, m).scale(b1) \
                if not _is_zeroish(b1) else QuatMatrix.zero(self.inv.Q, m)
        return UnitaryElement(self, b0, b1)

    def zero(self):
        return self.elt(QuatMatrix.zero(self.inv.Q, self.inv.m))

    def one(self):
        return self.elt(QuatMatrix.identity(self.inv.Q, self.inv.m))

    def u(self):
        return UnitaryElement(self, QuatMatrix.zero(self.inv.Q, self.inv.m),
                              QuatMatrix.identity(self.inv.Q, self.inv.m))

    def tau(self, x):
        return UnitaryElement(self, self.inv.sigma(x.b0),
                              -self.inv.sigma(x.b1))

    def random(self, rng, height):
        return UnitaryElement(self, self.inv.random_matrix(rng, height),
                              self.inv.random_matrix(rng, height))


def _is_zeroish(x):
    try:
        return x == 0
    except TypeError:
        return False


class UnitaryElement:

    def __init__(self, ext, b0, b1):
        self.ext = ext
        self.b0 = b0
        self.b1 = b1

    def _coerce(self, other):
        if isinstance(other, UnitaryElement):
            return other
        return self.ext.elt(other)

    def __add__(self, other):
        o = self._coerce(other)
        return UnitaryElement(self.ext, self.b0 + o.b0, self.b1 + o.b1)

    __radd__ = __add__

    def __neg__(self):
        return UnitaryElement(self.ext, -self.b0, -self.b1)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        a = self.ext.a
        return UnitaryElement(
            self.ext,
            self.b0 * o.b0 + (self.b1 * o.b1).scale(a),
            self.b0 * o.b1 + self.b1 * o.b0)

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except (QuatowerError, TypeError):
            return NotImplemented
        return self.b0 == o.b0 and self.b1 == o.b1

    def is_zero(self):
        return self.b0.is_zero() and self.b1.is_zero()

    def __repr__(self):
        return "UnitaryElement(%r + (%r) u)" % (self.b0, self.b1)


# ----------------------------------------------------------------------
# the embedding <-> idempotent dictionary
# ----------------------------------------------------------------------

def idempotent_from_embedding(ext, s):
    """From sigma-symmetric s with s^2 = a: the idempotent
    e = 1/2 + s u/(2a), which satisfies tau(e) = 1 - e.  Both identities
    are re-verified exactly."""
    inv, a = ext.inv, ext.a
    if not isinstance(s, QuatMatrix):
        raise WrongSquare("embedding witness must be a matrix")
    if not (inv.sigma(s) == s):
        raise NotSymmetric("witness is not sigma-symmetric")
    ss = (s * s).scalar_value()
    if ss is None or not (ss == a):
        raise WrongSquare("witness square is not the radicand")
    half = inv.Q.tower.elt(1, inv.Q.level) / inv.Q.tower.elt(2, inv.Q.level)
    e = UnitaryElement(ext,
                       QuatMatrix.identity(inv.Q, inv.m).scale(half),
                       s.scale(half / a))
    if not (e * e == e):
        raise VerificationFailed("constructed e is not idempotent")
    if not (ext.tau(e) == ext.one() - e):
        raise VerificationFailed("constructed e misses tau(e) = 1 - e")
    return e


def embedding_from_idempotent(ext, e):
    """From an idempotent e = e0 + e1 u with tau(e) = 1 - e: the element
    s = e0 * e1^(-1), sigma-symmetric with s^2 = a.  The u-part must be
    invertible (SingularE2 otherwise; that is where hyperbolic pieces of
    the unextended involution would hide)."""
    inv, a = ext.inv, ext.a
    if not (e * e == e):
        raise WrongSquare("input is not an idempotent")
    if not (ext.tau(e) == ext.one() - e):
        raise NotSymmetric("input does not satisfy tau(e) = 1 - e")
    e0, e1 = e.b0, e.b1
    # the two component identities that make the extraction work
    ident = QuatMatrix.identity(inv.Q, inv.m)
    if not (inv.sigma(e0) == ident - e0):
        raise VerificationFailed("component identity sigma(e0) = 1 - e0 "
                                 "failed")
    if not (inv.sigma(e0) * e0 == (inv.sigma(e1) * e1).scale(a)):
        raise VerificationFailed("component identity sigma(e0) e0 = "
                                 "a sigma(e1) e1 failed")
    try:
        e1i = inv.inverse(e1)
    except (SingularElement, ZeroElement):
        raise SingularE2("u-component of the idempotent is singular")
    s = e0 * e1i
    if not (inv.sigma(s) == s):
        raise VerificationFailed("extracted s is not sigma-symmetric")
    ss = (s * s).scalar_value()
    if ss is None or not (ss == a):
        raise VerificationFailed("extracted s does not square to the "
                                 "radicand")
    return s


# ----------------------------------------------------------------------
# searching for an embedded square root
# ----------------------------------------------------------------------

def _transposition_witness(Q, gr, gs, a, height):
    """u, v for an off-diagonal block g[r][s] = u, g[s][r] = v that is
    sigma-symmetric with block square a: v = gs^(-1) conj(u) gr and
    u v = a.  Small integer coordinates only; None when exhausted."""
    rng = range(-height, height + 1)
    one = Q.tower.one(Q.level)
    for c0 in rng:
        for c1 in rng:
            for c2 in rng:
                for c3 in rng:
                    if c0 == c1 == c2 == c3 == 0:
                        continue
                    u = Q.elt(*[Q.coerce_scalar(c) for c in (c0, c1, c2, c3)])
                    v = gs.inv() * u.conj() * gr
                    prod = u * v
                    if prod.is_scalar() and prod.as_scalar() == a:
                        return u, v
    return None


def symmetric_square_root_search(inv, a, height=2):
    """sigma-symmetric s in M_m(Q) with s^2 = a, or None.

    Families tried, in order:
      - orthogonal kind: diagonal s with pure entries anticommuting with
        the matching form entry (entry squares solve a conic per slot);
      - both kinds: block-diagonal assembly of 2x2 transposition blocks,
        with leftover diagonal slots filled from the first family.
    """
    a = inv.Q.coerce_scalar(a)
    m = inv.m
    Q = inv.Q
    diag = []
    for r in range(m):
        w = None
        if inv.kind == 'orthogonal':
            try:
                w = find_orthogonal_pure_with_square(inv.gram[r], a,
                                                     height=height)
            except (ConstructionNotFound, ZeroElement):
                w = None
        diag.append(w)
    if all(w is not None for w in diag):
        return QuatMatrix.diagonal(Q, diag)
    # pair up the slots without a diagonal witness
    missing = [r for r in range(m) if diag[r] is None]
    entries = [[Q.zero() for _ in range(m)] for _ in range(m)]
    for r in range(m):
        if diag[r] is not None:
            entries[r][r] = diag[r]
    while len(missing) >= 2:
        r, s = missing[0], missing[1]
        got = _transposition_witness(Q, inv.gram[r], inv.gram[s], a, height)
        if got is None:
            return None
        u, v = got
        entries[r][s] = u
        entries[s][r] = v
        missing = missing[2:]
    if missing:
        return None
    cand = QuatMatrix(Q, entries)
    if not (inv.sigma(cand) == cand):
        raise VerificationFailed("assembled candidate is not symmetric: bug")
    sq = (cand * cand).scalar_value()
    if sq is None or not (sq == a):
        raise VerificationFailed("assembled candidate square is wrong: bug")
    return cand


class HyperbolicityReport:

    def __init__(self, status, s=None, e=None, ext=None, reason="",
                 height=0):
        assert status in ('hyperbolic', 'not_found')
        self.status = status
        self.s = s
        self.e = e
        self.ext = ext
        self.reason = reason
        self.height = height

    def __repr__(self):
        if self.status == 'hyperbolic':
            return "HyperbolicityReport(hyperbolic, s=%r)" % (self.s,)
        return "HyperbolicityReport(not_found, %s)" % self.reason


def hyperbolicity_check(inv, a, height=2):
    """Is the extension of (M_m(Q), sigma) by u with u^2 = a hyperbolic?

    Returns HyperbolicityReport('hyperbolic') with the embedded square
    root s and the verified idempotent when the search succeeds, or an
    honest ('not_found') report with the search bounds.  Raises
    ExceptionalCase for the one configuration (certified split algebra,
    symplectic involution, degree 2 mod 4) where the extension is
    hyperbolic but no embedded square root can exist."""
    ext = UnitaryExtension(inv, a)
    a = ext.a
    if inv.kind == 'symplectic' and inv.m % 2 == 1:
        try:
            split = is_split(inv.Q.brauer_class())
        except UncertifiedDecision:
            split = None
        if split:
            raise ExceptionalCase(
                "split symplectic of degree %d: hyperbolic without an "
                "embedded square root" % (2 * inv.m),
                detail={'degree': 2 * inv.m, 'radicand': a.to_str()})
    s = symmetric_square_root_search(inv, a, height=height)
    if s is None:
        return HyperbolicityReport(
            'not_found', ext=ext, height=height,
            reason="no symmetric square root of %s in the diagonal and "
                   "transposition families at height %d" % (a.to_str(),
                                                            height))
    e = idempotent_from_embedding(ext, s)
    return HyperbolicityReport('hyperbolic', s=s, e=e, ext=ext,
                               height=height)


def exceptional_case_scan(inv, a, height=1):
    """Exhaustive scan over matrices with small integer quaternion
    coordinates: returns (witness, checked) where witness is a symmetric
    square root of `a` or None.  Cost grows as (2*height+1)^(4*m^2); meant
    for m = 1 and the exceptional configuration, where None is the
    expected answer."""
    a = inv.Q.coerce_scalar(a)
    Q = inv.Q
    m = inv.m
    cells = 4 * m * m
    rng = range(-height, height + 1)
    width = 2 * height + 1
    total = width ** cells
    checked = 0
    for idx in range(total):
        coords = []
        rem = idx
        for _ in range(cells):
            coords.append(rem % width - height)
            rem //= width
        rows = []
        at = 0
        for r in range(m):
            row = []
            for s in range(m):
                row.append(Q.elt(*[Q.coerce_scalar(c)
                                   for c in coords[at:at + 4]]))
                at += 4
            rows.append(row)
        g = QuatMatrix(Q, rows)
        checked += 1
        if g.is_zero():
            continue
        if not (inv.sigma(g) == g):
            continue
        sq = (g * g).scalar_value()
        if sq is not None and sq == a:
            return g, checked
    return None, checked


# ----------------------------------------------------------------------
# the formal-series variant: isotropy transfer
# ----------------------------------------------------------------------

def series_extension(inv, name="_xi"):
    """The same involution algebra with one Laurent layer added on top;
    the twisted involution there is entry-by-entry flip of the new
    generator composed with sigma."""
    T2 = inv.Q.tower.add_laurent(name)
    lvl = T2.height()
    Q2 = QuaternionAlgebra(T2.elt(inv.Q.a, lvl), T2.elt(inv.Q.b, lvl))
    gram2 = [Q2.elt(*[T2.elt(c, lvl) for c in g.c]) for g in inv.gram]
    return InvolutionAlgebra(Q2, gram2), T2, lvl


def lift_matrix(inv2, T2, lvl, g):
    return QuatMatrix(inv2.Q, [[inv2.Q.elt(*[T2.elt(c, lvl) for c in q.c])
                                for q in row] for row in g.rows])


def twisted_involution(inv2, lvl, y):
    """tau(y) = flip of the top generator applied to sigma(y) entrywise."""
    s = inv2.sigma(y)
    return QuatMatrix(inv2.Q,
                      [[type(q)(q.alg, tuple(flip_gen(c, lvl) for c in q.c))
                        for q in row] for row in s.rows])


def _matrix_valuation(g):
    vals = []
    for row in g.rows:
        for q in row:
            for c in q.c:
                if not c.is_zero():
                    vals.append(c.valuation())
    if not vals:
        raise ZeroElement("valuation of the zero matrix")
    return min(vals)


def _matrix_coefficient(inv_dn, g, k):
    """Coefficient matrix of gen^k, living in the unextended algebra.
    Entries must have valuation >= k."""
    rows = []
    for row in g.rows:
        out = []
        for q in row:
            coords = []
            for c in q.c:
                if c.is_zero():
                    coords.append(inv_dn.Q.tower.zero(inv_dn.Q.level))
                    continue
                sh = c.shift(-k)
                if sh.valuation() > 0:
                    coords.append(inv_dn.Q.tower.zero(inv_dn.Q.level))
                else:
                    coords.append(sh.residue().in_tower(inv_dn.Q.tower))
            out.append(inv_dn.Q.elt(*coords))
        rows.append(out)
    return QuatMatrix(inv_dn.Q, rows)


def isotropy_transfer_check(inv, idemp=None, samples=10, height=2, seed=0,
                            name="_xi"):
    """Exercise the two directions of isotropy transfer between (A, sigma)
    and its extension by a formal square root xi of a new scalar.

    With `idemp` (a hyperbolic idempotent of sigma: sigma(e) = 1 - e):
    builds tau-isotropic series samples y = e * r, verifies tau(y) y = 0
    exactly, then extracts the leading coefficient of each y and verifies
    it is sigma-isotropic downstairs and nonzero.

    Without `idemp`: for rank one over a division algebra, sigma is
    anisotropic outright, and the check verifies the valuation identity
    v(tau(y) y) = 2 v(y) on exact samples, which is the anisotropy of the
    extension made quantitative.

    Returns a dict with counts."""
    inv2, T2, lvl = series_extension(inv, name)
    rng = random.Random(seed)
    xi = T2.gen(lvl)
    report = {'mode': 'isotropic' if idemp is not None else 'anisotropic',
              'samples': 0}
    if idemp is not None:
        eL = lift_matrix(inv2, T2, lvl, idemp)
        sig_e = inv.sigma(idemp)
        if not (sig_e == QuatMatrix.identity(inv.Q, inv.m) - idemp):
            raise NotSymmetric("idemp is not a hyperbolic idempotent")
        done = 0
        while done < samples:
            # r = r0 + r1 xi + r2 xi^2 with small exact coefficients
            parts = []
            for d in range(3):
                rd = lift_matrix(inv2, T2, lvl,
                                 inv.random_matrix(rng, height))
                parts.append(rd.scale(xi ** d) if d else rd)
            r = parts[0] + parts[1] + parts[2]
            y = eL * r
            if y.is_zero():
                continue
            ty = twisted_involution(inv2, lvl, y)
            if not (ty * y).is_zero():
                raise VerificationFailed("sample from a hyperbolic "
                                         "idempotent is not isotropic")
            v = _matrix_valuation(y)
            lead = _matrix_coefficient(inv, y, v)
            if lead.is_zero():
                raise VerificationFailed("leading coefficient extraction "
                                         "lost the sample")
            if not (inv.sigma(lead) * lead).is_zero():
                raise VerificationFailed("leading coefficient is not "
                                         "sigma-isotropic downstairs")
            done += 1
        report['samples'] = done
        return report
    if inv.m != 1 or not inv.Q.is_division():
        raise UncertifiedDecision(
            "anisotropy downstairs is only certified for rank one over a "
            "division algebra; pass a hyperbolic idempotent otherwise")
    done = 0
    while done < samples:
        parts = []
        deg = rng.randint(0, 2)
        shift = rng.randint(-1, 1)
        acc = None
        for d in range(deg + 1):
            rd = lift_matrix(inv2, T2, lvl, inv.random_matrix(rng, height))
            term = rd.scale(xi ** (shift + d)) \
                if (shift + d) != 0 else rd
            acc = term if acc is None else acc + term
        y = acc
        if y.is_zero():
            continue
        ty = twisted_involution(inv2, lvl, y)
        prod = ty * y
        if prod.is_zero():
            raise VerificationFailed("anisotropic extension produced a "
                                     "zero product")
        if _matrix_valuation(prod) != 2 * _matrix_valuation(y):
            raise VerificationFailed("valuation identity v(tau(y)y) = "
                                     "2 v(y) failed")
        done += 1
    report['samples'] = done
    return report
