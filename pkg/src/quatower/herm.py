"""Matrix algebras over a quaternion algebra with an adjoint involution.

A = M_m(Q) carries the adjoint involution of a diagonal form with entries
gamma_1..gamma_m:

    sigma(g)[r][s] = gamma_r^(-1) * conj(g[s][r]) * gamma_s.

All gamma pure (conj = -gamma) gives the involutions of orthogonal kind on
the degree-2m algebra; all gamma scalar gives the symplectic kind.

Everything quantitative goes through one splitting device: a 2x2 matrix
model of Q over the field extended (when necessary) by a square root of
one structure constant.  Reduced norms are determinants there,
characteristic polynomials come from a Hessenberg reduction with exact
field arithmetic, and matrix inverses are Gaussian elimination in the
model, mapped back and re-verified.
"""

import random

from .exceptions import (
    ZeroElement, SizeMismatch, SingularElement, NotSimilitude,
    SymplecticInput, NotSymmetric, NonSquareCharPoly, OracleFailure,
    UnsupportedCombination, QuatowerError, ExactSqrtUnavailable,
    ConstructionNotFound, UncertifiedDecision, NotDescendable,
    VerificationFailed,
)
from .fields import (
    FieldTower, ElemDom, _pnorm, _padd, _pmul, _pneg, _psqrt,
)
from .quat import (
    Quaternion, QuaternionAlgebra, anticommutant_plane,
    find_orthogonal_pure_with_square, default_grid,
)


# ----------------------------------------------------------------------
# exact linear algebra over a tower level
# ----------------------------------------------------------------------

def fmat_identity(dom, n):
    return [[dom.one() if i == j else dom.zero() for j in range(n)]
            for i in range(n)]


def fmat_mul(dom, A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = dom.zero()
            for t in range(k):
                acc = dom.add(acc, dom.mul(A[i][t], B[t][j]))
            row.append(acc)
        out.append(row)
    return out


def fmat_inverse(dom, A):
    """Gauss-Jordan with pivot search; SingularElement if not invertible."""
    n = len(A)
    M = [list(row) + list(I_row) for row, I_row in zip(A, fmat_identity(dom, n))]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not dom.is_zero(M[r][col]):
                piv = r
                break
        if piv is None:
            raise SingularElement("matrix is singular")
        M[col], M[piv] = M[piv], M[col]
        ip = dom.inv(M[col][col])
        M[col] = [dom.mul(x, ip) for x in M[col]]
        for r in range(n):
            if r == col or dom.is_zero(M[r][col]):
                continue
            f = M[r][col]
            M[r] = [dom.sub_(x, dom.mul(f, y)) for x, y in zip(M[r], M[col])]
    return [row[n:] for row in M]


def fmat_det(dom, A):
    n = len(A)
    M = [list(r) for r in A]
    det = dom.one()
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not dom.is_zero(M[r][col]):
                piv = r
                break
        if piv is None:
            return dom.zero()
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = dom.neg(det)
        det = dom.mul(det, M[col][col])
        ip = dom.inv(M[col][col])
        for r in range(col + 1, n):
            if dom.is_zero(M[r][col]):
                continue
            f = dom.mul(M[r][col], ip)
            M[r] = [dom.sub_(x, dom.mul(f, y)) for x, y in zip(M[r], M[col])]
    return det


def fmat_charpoly(dom, A):
    """Monic characteristic polynomial (low-to-high tuple) via Hessenberg
    reduction; exact over any field."""
    n = len(A)
    H = [list(r) for r in A]
    for col in range(n - 2):
        piv = None
        for r in range(col + 1, n):
            if not dom.is_zero(H[r][col]):
                piv = r
                break
        if piv is None:
            continue
        if piv != col + 1:
            H[col + 1], H[piv] = H[piv], H[col + 1]
            for r in range(n):
                H[r][col + 1], H[r][piv] = H[r][piv], H[r][col + 1]
        ip = dom.inv(H[col + 1][col])
        for r in range(col + 2, n):
            if dom.is_zero(H[r][col]):
                continue
            f = dom.mul(H[r][col], ip)
            for c in range(n):
                H[r][c] = dom.sub_(H[r][c], dom.mul(f, H[col + 1][c]))
            for rr in range(n):
                H[rr][col + 1] = dom.add(H[rr][col + 1],
                                         dom.mul(f, H[rr][r]))
    # charpoly recurrence on the Hessenberg form
    polys = [(dom.one(),)]  # p_0 = 1
    for k in range(1, n + 1):
        xminus = (dom.neg(H[k - 1][k - 1]), dom.one())
        p = _pmul(dom, xminus, polys[k - 1])
        prod = dom.one()
        for i in range(k - 1, 0, -1):
            prod = dom.mul(prod, H[i][i - 1])
            term = dom.mul(H[i - 1][k - 1], prod)
            p = _padd(dom, p, _pneg(dom, _pmul(dom, (term,), polys[i - 1])))
        polys.append(p)
    out = list(polys[n])
    while len(out) < n + 1:
        out.append(dom.zero())
    return tuple(out)


def fpoly_eval_matrix(dom, poly, A):
    n = len(A)
    out = [[dom.zero()] * n for _ in range(n)]
    acc = fmat_identity(dom, n)
    for c in poly:
        for i in range(n):
            for j in range(n):
                out[i][j] = dom.add(out[i][j], dom.mul(c, acc[i][j]))
        acc = fmat_mul(dom, acc, A)
    return out


# ----------------------------------------------------------------------
# the 2x2 split model
# ----------------------------------------------------------------------

def _sqrt_or_none(e):
    try:
        return e.sqrt()
    except ExactSqrtUnavailable:
        return None


class SplitModel:
    """2x2 matrix model of Q = (a, b): i -> diag(r, -r), j -> [[0,1],[b,0]]
    with r^2 = a.  When neither structure constant has an exact square
    root at the level, the tower is extended by one quadratic layer (the
    slot must then be a genuine nonsquare).  If a has no exact root but b
    does, the roles of the slots are swapped internally."""

    def __init__(self, A):
        self.A = A
        self.swap = False
        a, b = A.a, A.b
        r = _sqrt_or_none(a)
        if r is None:
            rb = _sqrt_or_none(b)
            if rb is not None:
                self.swap = True
                a, b = b, a
                r = rb
        self.extended = False
        if r is None:
            name = "_sq%d" % (A.tower.height() + 1)
            big = A.tower
            lifted_a = a
            if A.level < A.tower.height():
                raise UnsupportedCombination(
                    "splitting below the top of the tower is not supported")
            big = big.add_quadratic(a, name)
            self.extended = True
            self.tower = big
            self.level = A.level + 1
            r = big.gen(self.level)
            lifted = lambda e: e.in_tower(big).lift_to(self.level)
            self.a = lifted(a)
            self.b = lifted(b)
        else:
            self.tower = A.tower
            self.level = A.level
            self.a = a
            self.b = b
        self.r = r
        self.dom = ElemDom(self.tower, self.level)

    def _up(self, e):
        return e.in_tower(self.tower).lift_to(self.level)

    def quat_to_mat(self, q):
        x0, x1, x2, x3 = q.c
        if self.swap:
            x1, x2, x3 = x2, x1, -x3
        x0, x1, x2, x3 = (self._up(x) for x in (x0, x1, x2, x3))
        r, b = self.r, self.b
        return [[x0 + x1 * r, x2 + x3 * r],
                [b * (x2 - x3 * r), x0 - x1 * r]]

    def mat_to_quat(self, M):
        r, b = self.r, self.b
        two = self.tower.elt(2, self.level)
        x0 = (M[0][0] + M[1][1]) / two
        x1 = (M[0][0] - M[1][1]) / (two * r)
        x2 = (M[0][1] + M[1][0] / b) / two
        x3 = (M[0][1] - M[1][0] / b) / (two * r)
        if self.swap:
            x1, x2, x3 = x2, x1, -x3
        coords = []
        for x in (x0, x1, x2, x3):
            try:
                coords.append(x.descend_to(self.A.level)
                              .in_tower(self.A.tower))
            except NotDescendable:
                raise VerificationFailed("matrix is not in the image of the "
                                         "quaternion embedding")
        q = Quaternion(self.A, tuple(coords))
        return q

    def down_scalar(self, e):
        """Field element of the model, descended to the base level."""
        try:
            return e.descend_to(self.A.level).in_tower(self.A.tower)
        except NotDescendable:
            raise VerificationFailed("scalar does not descend: it involves "
                                     "the splitting square root")

    def qmat_to_mat(self, g):
        m = g.m
        n = 2 * m
        out = [[None] * n for _ in range(n)]
        for r in range(m):
            for s in range(m):
                blk = self.quat_to_mat(g.rows[r][s])
                for u in range(2):
                    for v in range(2):
                        out[2 * r + u][2 * s + v] = blk[u][v]
        return out

    def mat_to_qmat(self, M, alg_m):
        m = alg_m
        rows = []
        for r in range(m):
            row = []
            for s in range(m):
                blk = [[M[2 * r + u][2 * s + v] for v in range(2)]
                       for u in range(2)]
                row.append(self.mat_to_quat(blk))
            rows.append(row)
        return QuatMatrix(self.A, rows)


# ----------------------------------------------------------------------
# quaternion matrices
# ----------------------------------------------------------------------

class QuatMatrix:

    __slots__ = ("alg", "m", "rows")

    def __init__(self, alg, rows):
        self.alg = alg
        self.m = len(rows)
        for r in rows:
            if len(r) != self.m:
                raise SizeMismatch("matrix must be square")
        self.rows = tuple(tuple(r) for r in rows)

    @staticmethod
    def identity(alg, m):
        return QuatMatrix(alg, [[alg.one() if i == j else alg.zero()
                                 for j in range(m)] for i in range(m)])

    @staticmethod
    def zero(alg, m):
        return QuatMatrix(alg, [[alg.zero()] * m for _ in range(m)])

    @staticmethod
    def diagonal(alg, entries):
        m = len(entries)
        return QuatMatrix(alg, [[entries[i] if i == j else alg.zero()
                                 for j in range(m)] for i in range(m)])

    def _coerce(self, other):
        if isinstance(other, QuatMatrix):
            if other.m != self.m:
                raise SizeMismatch("matrix sizes differ")
            return other
        # scalar (field element / int / quaternion) times identity
        if isinstance(other, Quaternion):
            q = other
        else:
            q = self.alg.elt(other)
        return QuatMatrix.diagonal(self.alg, [q] * self.m)

    def __add__(self, other):
        o = self._coerce(other)
        return QuatMatrix(self.alg, [[x + y for x, y in zip(r1, r2)]
                                     for r1, r2 in zip(self.rows, o.rows)])

    __radd__ = __add__

    def __neg__(self):
        return QuatMatrix(self.alg, [[-x for x in r] for r in self.rows])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        m = self.m
        out = []
        for r in range(m):
            row = []
            for s in range(m):
                acc = self.alg.zero()
                for k in range(m):
                    acc = acc + self.rows[r][k] * o.rows[k][s]
                row.append(acc)
            out.append(row)
        return QuatMatrix(self.alg, out)

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except (QuatowerError, TypeError):
            return NotImplemented
        return all(x == y for r1, r2 in zip(self.rows, o.rows)
                   for x, y in zip(r1, r2))

    def is_zero(self):
        return all(x.is_zero() for r in self.rows for x in r)

    def scale(self, c):
        q = self.alg.elt(c) if not isinstance(c, Quaternion) else c
        return QuatMatrix(self.alg, [[x * q for x in r] for r in self.rows])

    def apply(self, vec):
        if len(vec) != self.m:
            raise SizeMismatch("vector length differs")
        return [sum_q(self.alg, [self.rows[r][k] * vec[k]
                                 for k in range(self.m)])
                for r in range(self.m)]

    def scalar_value(self):
        """The field element c with self = c * I, or None."""
        c = self.rows[0][0]
        if not c.is_scalar():
            return None
        for r in range(self.m):
            for s in range(self.m):
                x = self.rows[r][s]
                if r == s:
                    if not (x == c):
                        return None
                elif not x.is_zero():
                    return None
        return c.as_scalar()

    def entrywise(self, f):
        return QuatMatrix(self.alg, [[f(x) for x in r] for r in self.rows])

    def to_str(self):
        return "[" + "; ".join(
            ", ".join(x.to_str() for x in r) for r in self.rows) + "]"

    def __repr__(self):
        return "<QuatMatrix %s>" % self.to_str()


def sum_q(alg, qs):
    acc = alg.zero()
    for q in qs:
        acc = acc + q
    return acc


# ----------------------------------------------------------------------
# involution algebras
# ----------------------------------------------------------------------

class InvolutionAlgebra:
    """M_m(Q) with the adjoint involution of a diagonal form."""

    def __init__(self, Q, gram):
        self.Q = Q
        self.m = len(gram)
        self.gram = tuple(Q.elt(g) if not isinstance(g, Quaternion) else g
                          for g in gram)
        kinds = set()
        for g in self.gram:
            if g.is_zero():
                raise ZeroElement("form entry is zero")
            if g.is_pure():
                if g.nrd().is_zero():
                    raise SingularElement("form entry is not invertible")
                kinds.add('skew')
            elif g.is_scalar():
                kinds.add('sym')
            else:
                raise UnsupportedCombination(
                    "form entries must be pure or scalar")
        if len(kinds) != 1:
            raise UnsupportedCombination(
                "mixed pure and scalar form entries")
        self.kind = 'orthogonal' if kinds == {'skew'} else 'symplectic'
        self._gram_inv = tuple(g.inv() for g in self.gram)
        self._split = None

    def split_model(self):
        if self._split is None:
            self._split = SplitModel(self.Q)
        return self._split

    def identity(self):
        return QuatMatrix.identity(self.Q, self.m)

    def sigma(self, g):
        if g.m != self.m:
            raise SizeMismatch("matrix size differs from algebra degree")
        out = []
        for r in range(self.m):
            row = []
            for s in range(self.m):
                row.append(self._gram_inv[r] * g.rows[s][r].conj()
                           * self.gram[s])
            out.append(row)
        return QuatMatrix(self.Q, out)

    def form_value(self, x, y):
        """h(x, y) = sum conj(x_r) gamma_r y_r on coordinate vectors."""
        if len(x) != self.m or len(y) != self.m:
            raise SizeMismatch("vector length differs from form rank")
        return sum_q(self.Q, [x[r].conj() * self.gram[r] * y[r]
                              for r in range(self.m)])

    def random_matrix(self, rng, height):
        return QuatMatrix(self.Q, [[self.Q.random(rng, height)
                                    for _ in range(self.m)]
                                   for _ in range(self.m)])

    def random_symmetric(self, rng, height):
        """sigma-symmetric element: s + sigma(s) plus a scalar."""
        s = self.random_matrix(rng, height)
        c = self.Q.tower.random_element(rng, self.Q.level, height)
        return s + self.sigma(s) + QuatMatrix.identity(self.Q, self.m).scale(c)

    def reduced_norm(self, g):
        sm = self.split_model()
        M = sm.qmat_to_mat(g)
        d = fmat_det(sm.dom, M)
        return sm.down_scalar(d)

    def reduced_charpoly(self, g):
        sm = self.split_model()
        M = sm.qmat_to_mat(g)
        cp = fmat_charpoly(sm.dom, M)
        return tuple(sm.down_scalar(c) for c in cp)

    def inverse(self, g):
        sm = self.split_model()
        M = sm.qmat_to_mat(g)
        Minv = fmat_inverse(sm.dom, M)
        gi = sm.mat_to_qmat(Minv, self.m)
        if not (g * gi == QuatMatrix.identity(self.Q, self.m)):
            raise VerificationFailed("inverse verification failed")
        return gi

    # -- similitudes -----------------------------------------------------

    def multiplier(self, g):
        mu = (self.sigma(g) * g).scalar_value()
        if mu is None:
            raise NotSimilitude("sigma(g) g is not scalar")
        if mu.is_zero():
            raise NotSimilitude("multiplier is zero")
        return mu

    def classify_similitude(self, g):
        """(parity, mu) with parity 'proper' iff Nrd(g) = mu^m."""
        mu = self.multiplier(g)
        nrd = self.reduced_norm(g)
        target = mu ** self.m
        if nrd == target:
            return 'proper', mu
        if nrd == -target:
            return 'improper', mu
        raise VerificationFailed("similitude norm is neither +mu^m nor "
                                 "-mu^m: bug")

    def discriminant(self):
        """Square class of the product of the squares of the form entries;
        orthogonal kind only."""
        if self.kind != 'orthogonal':
            raise SymplecticInput("discriminant needs the orthogonal kind")
        _disc_formula_validated()
        acc = self.Q.tower.one(self.Q.level)
        for g in self.gram:
            acc = acc * g.square_scalar()
        return acc

    def pfaffian_charpoly(self, g):
        """For sigma-symmetric g of the symplectic kind: the degree-m monic
        polynomial whose square is the reduced characteristic polynomial."""
        if self.kind != 'symplectic':
            raise SymplecticInput("pfaffian data needs the symplectic kind")
        if not (self.sigma(g) == g):
            raise NotSymmetric("element is not sigma-symmetric")
        cp = self.reduced_charpoly(g)
        dom = ElemDom(self.Q.tower, self.Q.level)
        root = _psqrt(dom, _pnorm(dom, cp))
        if root is None:
            raise NonSquareCharPoly("reduced characteristic polynomial is "
                                    "not a square")
        if not (root[-1] == dom.one()):
            root = tuple(dom.neg(c) for c in root)
        assert root[-1] == dom.one()
        assert len(root) == self.m + 1
        return root


def discriminant_via_split_form(inv):
    """Independent reading of the discriminant for a split Q whose first
    slot has an exact square root: push the involution to M_2m(F), solve
    for the symmetric Gram matrix S of the adjoint involution, and return
    the signed determinant class (-1)^(N(N-1)/2) det(S).

    Used as an oracle against discriminant(); OracleFailure when the
    instance cannot be split over the base field."""
    if inv.kind != 'orthogonal':
        raise SymplecticInput("discriminant needs the orthogonal kind")
    sm = inv.split_model()
    if sm.extended:
        raise OracleFailure("oracle needs a split algebra with an exact "
                            "root of a structure constant")
    n = 2 * inv.m
    dom = sm.dom
    # unknown S (n x n): S * sigma(X) = X^T * S for all X in a basis.
    # Build the linear system over the field: variables S[i][j].
    rowsys = []
    basis = []
    for r in range(inv.m):
        for s in range(inv.m):
            for q in (inv.Q.one(), inv.Q.i(), inv.Q.j(), inv.Q.k()):
                E = [[inv.Q.zero()] * inv.m for _ in range(inv.m)]
                E[r][s] = q
                basis.append(QuatMatrix(inv.Q, E))
    mats = []
    for X in basis:
        MX = sm.qmat_to_mat(X)
        MS = sm.qmat_to_mat(inv.sigma(X))
        mats.append((MX, MS))
    # equations: sum_k S[i][k] MS[k][j] - sum_k MX[k][i] S[k][j] = 0
    nv = n * n
    for MX, MS in mats:
        for i in range(n):
            for j in range(n):
                row = [dom.zero()] * nv
                for k in range(n):
                    row[i * n + k] = dom.add(row[i * n + k], MS[k][j])
                    row[k * n + j] = dom.sub_(row[k * n + j], MX[k][i])
                rowsys.append(row)
    sol = _nullspace_vector(dom, rowsys, nv)
    if sol is None:
        raise OracleFailure("no invariant bilinear form found")
    S = [[sol[i * n + j] for j in range(n)] for i in range(n)]
    # must come out symmetric for the orthogonal kind
    for i in range(n):
        for j in range(n):
            if not (S[i][j] == S[j][i]):
                raise OracleFailure("recovered form is not symmetric")
    d = fmat_det(dom, S)
    if d.is_zero():
        raise OracleFailure("recovered form is degenerate")
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return d * sign


_DISC_ORACLE_STATE = {'checked': False, 'ok': False}


def _disc_formula_validated():
    """One-time self check of the closed-form discriminant against the
    split-matrix oracle on small rational instances.  Cached; every
    discriminant() call goes through here and refuses to answer if the
    two readings ever disagree."""
    if _DISC_ORACLE_STATE['checked']:
        if not _DISC_ORACLE_STATE['ok']:
            raise OracleFailure("discriminant self check failed; refusing "
                                "to report discriminants")
        return
    _DISC_ORACLE_STATE['checked'] = True
    tower = FieldTower.rationals()
    Q = QuaternionAlgebra(tower.elt(4), tower.elt(3))
    cases = [
        [Q.i()],
        [Q.j()],
        [Q.i(), Q.j()],
    ]
    for gram in cases:
        inv = InvolutionAlgebra(Q, gram)
        closed = inv.Q.tower.one(inv.Q.level)
        for g in inv.gram:
            closed = closed * g.square_scalar()
        orac = discriminant_via_split_form(inv)
        if not (closed * orac).is_square():
            raise OracleFailure("discriminant formula disagrees with the "
                                "split-form oracle on a rational instance")
    _DISC_ORACLE_STATE['ok'] = True


def _nullspace_vector(dom, rows, nv):
    """One nonzero solution of the homogeneous system, or None."""
    M = [list(r) for r in rows if any(not dom.is_zero(x) for x in r)]
    pivots = []
    rank = 0
    for col in range(nv):
        piv = None
        for r in range(rank, len(M)):
            if not dom.is_zero(M[r][col]):
                piv = r
                break
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        ip = dom.inv(M[rank][col])
        M[rank] = [dom.mul(x, ip) for x in M[rank]]
        for r in range(len(M)):
            if r != rank and not dom.is_zero(M[r][col]):
                f = M[r][col]
                M[r] = [dom.sub_(x, dom.mul(f, y))
                        for x, y in zip(M[r], M[rank])]
        pivots.append(col)
        rank += 1
        if rank == nv:
            return None
    free = [c for c in range(nv) if c not in pivots]
    if not free:
        return None
    fc = free[0]
    sol = [dom.zero()] * nv
    sol[fc] = dom.one()
    for r, pc in enumerate(pivots):
        sol[pc] = dom.neg(M[r][fc])
    return sol


# ----------------------------------------------------------------------
# improper similitude search
# ----------------------------------------------------------------------

class SimilitudeReport:

    def __init__(self, status, g=None, mu=None, parity=None, reason="",
                 checked=0):
        assert status in ('found', 'impossible', 'not_found')
        self.status = status
        self.g = g
        self.mu = mu
        self.parity = parity
        self.reason = reason
        self.checked = checked

    def __repr__(self):
        if self.status == 'found':
            return "SimilitudeReport(found, mu=%s, %s)" % (
                self.mu.to_str(), self.parity)
        return "SimilitudeReport(%s: %s)" % (self.status, self.reason)


def _slot_norm_witness(Q, gamma, mu, grid):
    """w = x + y*gamma in the quadratic slot F(gamma) with nrd(w) = mu,
    i.e. x^2 - gamma^2 y^2 = mu; or None.  For such w the adjoint
    involution of <gamma> restricts to conjugation: sigma(w) w = nrd(w)."""
    gg = gamma.square_scalar()
    for x in grid:
        rhs = (x * x - mu) / gg
        if rhs.is_zero():
            w = Q.elt(x)
        else:
            try:
                if not rhs.is_square():
                    continue
            except ExactSqrtUnavailable:
                continue
            y = rhs.sqrt()
            if y is None:
                # square class without an exact finite representative
                continue
            w = Q.elt(x) + gamma * y
        if not w.is_zero() and w.nrd() == mu:
            return w
    for y in grid:
        if y.is_zero():
            continue
        rhs = mu + gg * y * y
        if rhs.is_zero():
            continue
        try:
            if not rhs.is_square():
                continue
        except ExactSqrtUnavailable:
            continue
        x = rhs.sqrt()
        if x is None:
            continue
        w = Q.elt(x) + gamma * y
        if w.nrd() == mu:
            return w
    return None


def improper_similitude_search(inv, height=2, tries=80, seed=0):
    """Look for an improper similitude of an orthogonal-kind involution.

    An improper similitude forces the quaternion algebra to be split by
    the discriminant extension, so a division algebra with trivial
    discriminant admits none: that case returns 'impossible' immediately.
    Rank one is settled by any pure anticommuting with the form entry.
    Higher ranks search diagonal witnesses with a common multiplier mu:
    entry r either anticommutes with gamma_r and squares to mu (its
    reduced norm is then -mu) or lies in the quadratic slot F(gamma_r)
    with reduced norm +mu; the whole diagonal is improper exactly when an
    odd number of entries take the anticommuting branch.  Paired
    transposition blocks are tried after that, then the search gives up
    honestly ('not_found' is not a nonexistence certificate)."""
    if inv.kind != 'orthogonal':
        raise SymplecticInput("improper similitudes of the symplectic kind "
                              "do not exist (all are proper)")
    Q = inv.Q
    m = inv.m
    disc = inv.discriminant()
    try:
        disc_trivial = disc.is_square()
    except ExactSqrtUnavailable:
        disc_trivial = None
    division = None
    try:
        division = Q.is_division()
    except UncertifiedDecision:
        pass
    if disc_trivial and division:
        return SimilitudeReport(
            'impossible',
            reason="division algebra, trivial discriminant: the "
                   "discriminant extension cannot split it")

    checked = 0
    if m == 1:
        p1, _ = anticommutant_plane(inv.gram[0])
        g = QuatMatrix(Q, [[p1]])
        parity, mu = inv.classify_similitude(g)
        assert parity == 'improper'
        return SimilitudeReport('found', g=g, mu=mu, parity=parity,
                                checked=1)

    grid = default_grid(Q.tower, Q.level, height)
    mu_cands, seen = [], set()
    for c in grid:
        if c.is_zero():
            continue
        for cand in (c, c * inv.gram[0].square_scalar()):
            k = (cand.level, cand.rep)
            if k not in seen:
                seen.add(k)
                mu_cands.append(cand)

    for mu in mu_cands:
        checked += 1
        anti, slot = [], []
        for r in range(m):
            try:
                anti.append(find_orthogonal_pure_with_square(
                    inv.gram[r], mu, height=height))
            except (ConstructionNotFound, ZeroElement):
                anti.append(None)
            slot.append(_slot_norm_witness(Q, inv.gram[r], mu, grid))
        if any(a is None and s is None for a, s in zip(anti, slot)):
            continue
        entries = [s if s is not None else a for a, s in zip(anti, slot)]
        odd = sum(1 for r in range(m) if entries[r] is anti[r]) % 2
        if not odd:
            flip = next((r for r in range(m)
                         if anti[r] is not None and slot[r] is not None),
                        None)
            if flip is None:
                continue
            entries[flip] = (anti[flip] if entries[flip] is slot[flip]
                             else slot[flip])
        g = QuatMatrix.diagonal(Q, entries)
        try:
            parity, mu_got = inv.classify_similitude(g)
        except NotSimilitude:
            continue
        if parity == 'improper':
            return SimilitudeReport('found', g=g, mu=mu_got,
                                    parity=parity, checked=checked)

    # transposition blocks: g swaps two coordinates with weights u, v and
    # carries a diagonal witness elsewhere
    rng = random.Random(seed)
    qgrid = [Q.one(), Q.i(), Q.j(), Q.k(),
             Q.i() + Q.j(), Q.i() + Q.k(), Q.j() + Q.k()]
    for _ in range(tries):
        r, s = 0, 1
        u = qgrid[rng.randrange(len(qgrid))]
        v = qgrid[rng.randrange(len(qgrid))]
        mu_q = inv._gram_inv[s] * u.conj() * inv.gram[r] * u
        if not mu_q.is_scalar():
            continue
        mu = mu_q.as_scalar()
        if mu.is_zero():
            continue
        check = inv._gram_inv[r] * v.conj() * inv.gram[s] * v
        if not (check.is_scalar() and check.as_scalar() == mu):
            continue
        rows = [[Q.zero()] * m for _ in range(m)]
        rows[r][s] = u
        rows[s][r] = v
        ok = True
        for t in range(m):
            if t in (r, s):
                continue
            try:
                w = find_orthogonal_pure_with_square(inv.gram[t], mu,
                                                     height=height)
            except (ConstructionNotFound, ZeroElement):
                w = _slot_norm_witness(Q, inv.gram[t], mu, grid)
                if w is None:
                    ok = False
                    break
            rows[t][t] = w
        if not ok:
            continue
        g = QuatMatrix(Q, rows)
        checked += 1
        try:
            parity, mu_got = inv.classify_similitude(g)
        except NotSimilitude:
            continue
        if parity == 'improper':
            return SimilitudeReport('found', g=g, mu=mu_got, parity=parity,
                                    checked=checked)
    return SimilitudeReport(
        'not_found', checked=checked,
        reason="no improper similitude within the candidate family "
               "(height %d, %d random block trials)" % (height, tries))
