"""
Exception hierarchy for xlk.
Every failure the library reports is an XlkError subclass carrying diagnostics.
"""

from typing import Any, Dict, Optional


class XlkError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})


# ============================================
# EXACT ALGEBRA
# ============================================

class DomainError(XlkError):
    """Raised when an operation is applied outside its domain."""
    pass


class ParseError(XlkError):
    """Raised when text input cannot be parsed."""
    pass


class UnboundGeneratorError(XlkError):
    """Raised when a word uses a generator with no assigned matrix."""
    pass


# ============================================
# BRAIDS
# ============================================

class StrandMismatchError(XlkError):
    """Raised when braid, involution or tuple strand counts disagree."""
    pass


class ClosureNotKnotError(XlkError):
    """Raised when the closure of b·star(b) has more than one component."""
    pass


# ============================================
# TRACE COORDINATES
# ============================================

class UnequalTraceError(XlkError):
    """Raised when a triple does not have a common trace."""
    pass


class ReducibilityError(XlkError):
    """Raised when trace coordinates lie on the reducible locus."""
    pass


class DegenerateLiftError(XlkError):
    """Raised when a lift is not unique (double root or parabolic meridian)."""
    pass


class MeridianTraceZeroError(XlkError):
    """Raised when the meridian trace is zero."""
    pass


class NoPointsError(XlkError):
    """Raised when no solver start produced an acceptable point."""
    pass


# ============================================
# DIAGRAMS AND TANGLES
# ============================================

class ConventionError(XlkError):
    """Raised when an internal sign or normalization check fails."""
    pass


class TangleOrientationError(XlkError):
    """Raised when a tangle cannot be oriented compatibly with a crossing."""
    pass


class NotAKnotError(XlkError):
    """Raised when a closure is a link rather than a knot."""
    pass


class TrivialKnotError(NotAKnotError):
    """Raised when a closure is the unknot."""
    pass


class UnassignedArcError(XlkError):
    """Raised when a residual is requested for a partial assignment."""
    pass


class PropagationError(XlkError):
    """Raised when Wirtinger propagation is stuck or inconsistent."""
    pass


class RileyRootError(XlkError):
    """Raised when no Riley root off the abelian locus exists."""
    pass


# ============================================
# CERTIFICATION
# ============================================

class NoIntertwinerError(XlkError):
    """Raised when two triples have different characters."""
    pass


class DegenerateIntertwinerError(XlkError):
    """Raised when the intertwiner solution space is not one-dimensional."""
    pass


class InconclusiveCheckError(XlkError):
    """Raised when a check's hypothesis margin is violated."""
    pass


class IndeterminateRankError(XlkError):
    """Raised when the singular value gap is too small to decide a rank."""
    pass


class StencilResidualError(XlkError):
    """Raised when a finite-difference stencil point is not a representation."""
    pass


class RelationResidualError(XlkError):
    """Raised when mapping-torus or closure relations fail."""
    pass


class SolverDivergenceError(XlkError):
    """Raised when a Newton-type solve does not converge."""
    pass


class CertificateError(XlkError):
    """Raised when a certificate is malformed or fails re-verification."""
    pass
