"""Exception taxonomy for the whole library.

Everything raised on purpose derives from QuatowerError so callers can
catch one thing.  The more specific classes mark conditions that callers
are expected to branch on (e.g. SingularE2 during the idempotent round
trip, OddValuationMultiplier during descent).
"""


class QuatowerError(Exception):
    pass


# --- tower construction / element plumbing ---

class BadCharacteristic(QuatowerError):
    """Residue characteristic 2 (or a non-prime modulus) was requested."""


class SquareRadicand(QuatowerError):
    """A quadratic layer's radicand is already a square below."""


class NameCollision(QuatowerError):
    """Two layers of one tower share a generator name."""


class TowerMismatch(QuatowerError):
    """Operands live in incompatible towers or levels."""


class ZeroElement(QuatowerError):
    """Operation undefined at zero (valuation, residue, square class)."""


class ZeroDenominator(QuatowerError):
    pass


class NotDescendable(QuatowerError):
    """Element genuinely involves a layer it was asked to forget."""


class ExactSqrtUnavailable(QuatowerError):
    """The element is a square, but only as an infinite series; no exact
    representation exists at this layer."""


# --- valuation / Hensel ---

class OddValuation(QuatowerError):
    pass


class ResidueNotSquare(QuatowerError):
    pass


class UnsupportedLayer(QuatowerError):
    """Operation requires a Laurent (or Laurent/rational-function) layer."""


class PrecisionLost(QuatowerError):
    """A series-backed element was asked for more digits than it carries."""


# --- Brauer bookkeeping ---

class UncertifiedDecision(QuatowerError):
    """A split/equality question cannot be answered soundly over this
    tower (rational-function layer with non-constant unit parts)."""


# --- quaternion / matrix level ---

class NotPure(QuatowerError):
    pass


class SplitAlgebra(QuatowerError):
    pass


class ZeroDivisorInverse(QuatowerError):
    """Tried to invert a nonzero element of a split algebra with Nrd 0."""


class ConstructionNotFound(QuatowerError):
    """A bounded search exhausted its grid without a witness."""


class SizeMismatch(QuatowerError):
    pass


class ZeroEntry(QuatowerError):
    """A diagonal Gram entry is zero (degenerate form)."""


class SingularElement(QuatowerError):
    pass


# --- involution / similitude level ---

class NotSimilitude(QuatowerError):
    pass


class SymplecticInput(QuatowerError):
    """Operation defined only for orthogonal involutions."""


class NotSymmetric(QuatowerError):
    pass


class NonSquareCharPoly(QuatowerError):
    pass


class OracleFailure(QuatowerError):
    """A build-time self-check (e.g. the discriminant formula against the
    split-case computation) failed; the library refuses to answer."""


# --- unitary extension ---

class WrongSquare(QuatowerError):
    """Candidate s does not satisfy s**2 = a."""


class SingularE2(QuatowerError):
    """The u-component of the idempotent is not invertible, so no
    embedding can be extracted from it."""


class ExceptionalCase(QuatowerError):
    """Split algebra, degree 2 mod 4, symplectic involution: hyperbolicity
    of the extension does not imply an embedded square root."""

    def __init__(self, msg, detail=None):
        super().__init__(msg)
        self.detail = detail or {}


# --- descent / theorem checking ---

class OddValuationMultiplier(QuatowerError):
    """g**2 has odd valuation, so no leading-block descent exists (the two
    constituent forms are similar, a degenerate input)."""


class VerificationFailed(QuatowerError):
    """An identity the mathematics promises did not hold exactly.  Always a
    bug or a violated precondition; never swallowed."""


class ContradictionFound(QuatowerError):
    """Two independently certified facts disagree (e.g. a refutation search
    found a witness although no common slot exists)."""


# --- cli ---

class ParseError(QuatowerError):
    pass


class UnknownSuite(QuatowerError):
    pass


class UnsupportedCombination(QuatowerError):
    pass
