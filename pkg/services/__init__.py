"""
Services package for xlk.
Contains exact algebra, braids, trace coordinates, diagrams, tangles,
the two constructions and the certificate checks.
"""

from .braids import BraidWord, Involution, InvolutionKind, artin_act, closure_is_knot, star, turks_head
from .certificate import Certificate, canonical_json, compute_digest, validate_certificate
from .certify import (
    CharCoordinateSet,
    HypothesisReport,
    KleinCase,
    assemble_closure_rep,
    check_A_squared,
    hypothesis_check,
    intertwiner,
    irreducible,
    jacobian_rank,
    klein_classify,
)
from .constructions import construction1_family, parabolic_family
from .diagrams import PDCode, load_pd, propagate, wirtinger_residual
from .errors import XlkError
from .matrices import FreeWord, Mat2
from .polynomials import LaurentPoly, gaussian
from .tangles import RationalTangle, TwoBridge, c_closure, riley_polynomial, tangle_replace
from .trace_coords import TraceCoord, act, coords_from_triple, find_U_points, lift_triple, quotient_claim_check

__all__ = [
    "BraidWord",
    "Involution",
    "InvolutionKind",
    "artin_act",
    "closure_is_knot",
    "star",
    "turks_head",
    "Certificate",
    "canonical_json",
    "compute_digest",
    "validate_certificate",
    "CharCoordinateSet",
    "HypothesisReport",
    "KleinCase",
    "assemble_closure_rep",
    "check_A_squared",
    "hypothesis_check",
    "intertwiner",
    "irreducible",
    "jacobian_rank",
    "klein_classify",
    "construction1_family",
    "parabolic_family",
    "PDCode",
    "load_pd",
    "propagate",
    "wirtinger_residual",
    "XlkError",
    "FreeWord",
    "Mat2",
    "gaussian",
    "LaurentPoly",
    "RationalTangle",
    "TwoBridge",
    "c_closure",
    "riley_polynomial",
    "tangle_replace",
    "TraceCoord",
    "act",
    "coords_from_triple",
    "find_U_points",
    "lift_triple",
    "quotient_claim_check",
]
