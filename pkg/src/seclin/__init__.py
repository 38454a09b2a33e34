"""Secure linearly separable distributed computing.

A master splits ``K`` user requests ``F`` (over a prime field or the reals)
into ``F = D E``: server ``n`` computes ``E[n, :] . w`` and user ``k``
combines the responses in ``Sup(d_k)``.  This package builds and checks such
factorizations, appends common randomness so users learn only their own
request, simulates the protocol and audits leakage.
"""

from .field import FieldElement, FieldError, FieldSpec
from .linalg import Matrix, ShapeError, null_space_basis, rank
from .scheme import (
    BroadcastSchedule, CostReport, Scheme, SchemeError, check_nondegeneracy, costs,
    derive_schedule, load_scheme,
)
from .secrecy import (
    SecrecyReport, check_corollary1, check_lemma1, check_theorem1, check_theorem2, full_report,
)
from .transform import InsecureFactorizationError, SecrecyWarning, SecuredScheme, secure, unsecured

__version__ = "0.1.0"

__all__ = [
    "BroadcastSchedule", "CostReport", "FieldElement", "FieldError", "FieldSpec",
    "InsecureFactorizationError", "Matrix", "Scheme", "SchemeError", "SecrecyReport",
    "SecrecyWarning", "SecuredScheme", "ShapeError", "check_corollary1", "check_lemma1",
    "check_nondegeneracy", "check_theorem1", "check_theorem2", "costs", "derive_schedule",
    "full_report", "load_scheme", "null_space_basis", "rank", "secure", "unsecured",
]
