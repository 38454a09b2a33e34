"""Secure an admissible scheme by injecting common randomness along Null(D).

``secure`` appends a basis ``C`` of the right null space of ``D`` to the
encoding matrix, giving ``E_aug = [E | C]``.  Since ``D @ C = 0`` every
legitimate decode cancels the randomness while the communication and
computation costs stay those of the original ``(D, E)``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .linalg import Matrix, ShapeError
from .scheme import Scheme, SchemeError, _matrix, read_json, scheme_from_dict
from .field import FieldError


class InsecureFactorizationError(SchemeError):
    """The decoding matrix fails the reduced-rank condition for some user."""

    def __init__(self, user: int, rank: int, K: int):
        self.user, self.rank, self.K = user, rank, K
        super().__init__(
            f"insecure factorization: user {user + 1} reduced-rank = {rank} < K-1 = {K - 1}"
        )


class SecrecyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SecuredScheme:
    """A scheme plus its randomness coefficient matrix ``C`` (N x x).

    Construction does not validate; call :meth:`validate` (``secure`` and
    :func:`secured_from_dict` do) so deliberately faulty instances can be
    built for fault-injection tests.
    """

    base: Scheme
    C: Matrix

    @property
    def x(self) -> int:
        return self.C.cols

    @property
    def E_aug(self) -> Matrix:
        return self.base.E.hstack(self.C)

    @property
    def field(self):
        return self.base.field

    def validate(self) -> "SecuredScheme":
        s = self.base
        if self.C.rows != s.N:
            raise SchemeError(f"dimension violation: C has {self.C.rows} rows, N = {s.N}")
        if self.C.field != s.field:
            raise SchemeError(f"C is over {self.C.field}, scheme is over {s.field}")
        if not s.D.matmul(self.C).is_zero():
            raise SchemeError("inconsistent randomness: D @ C != 0")
        r = self.C.rank()
        if r > s.N - s.K:
            # cannot happen with D @ C = 0 and rank(D) = K; kept as a tripwire
            raise SchemeError(f"internal inconsistency: rank(C) = {r} > N-K = {s.N - s.K}")
        return self

    def to_dict(self) -> dict[str, Any]:
        d = self.base.to_dict()
        d["C"] = self.C.to_json()
        return d


def unsecured(s: Scheme) -> SecuredScheme:
    """Wrap a raw scheme with no randomness (``x = 0``)."""
    return SecuredScheme(s, Matrix([[] for _ in range(s.N)], s.field, cols=0))


def secure(s: Scheme, strict: bool = True) -> SecuredScheme:
    """Append ``C = null_space_basis(D)`` to ``E``.

    With ``strict`` a user failing the reduced-rank condition raises
    :class:`InsecureFactorizationError`; otherwise the scheme is secured
    anyway (useful for studying leaks) with a :class:`SecrecyWarning`.
    """
    from .scheme import check_nondegeneracy
    from .secrecy import check_theorem1

    for k, res in enumerate(check_theorem1(s)):
        if not res.ok:
            if strict:
                raise InsecureFactorizationError(k, res.dred_rank, s.K)
            warnings.warn(str(InsecureFactorizationError(k, res.dred_rank, s.K)), SecrecyWarning)

    for k, ok in enumerate(check_nondegeneracy(s)):
        if not ok:
            warnings.warn(
                f"user {k + 1}: observed encoding rows are rank deficient; "
                "rank condition met but the non-degeneracy assumption is violated",
                SecrecyWarning,
            )

    C = s.D.null_space_basis()
    if C.cols == 0:
        warnings.warn("N = K: Null(D) is trivial, no randomness capacity", SecrecyWarning)
    return SecuredScheme(s, C).validate()


@dataclass(frozen=True)
class ServerTask:
    server: int
    messages: tuple[int, ...]
    randomness: tuple[int, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "server": self.server + 1,
            "messages": [m + 1 for m in self.messages],
            "randomness": [r + 1 for r in self.randomness],
        }


def augmented_tasks(ss: SecuredScheme) -> list[ServerTask]:
    """Per server: which messages and which randomness symbols it needs."""
    L = ss.base.L
    E_aug = ss.E_aug
    out = []
    for n in range(E_aug.rows):
        sup = E_aug.support(n)
        out.append(ServerTask(n, tuple(j for j in sup if j < L), tuple(j - L for j in sup if j >= L)))
    return out


def secured_from_dict(doc: dict) -> SecuredScheme:
    s = scheme_from_dict(doc)
    if "C" not in doc:
        raise SchemeError("missing key 'C' (not a secured scheme)")
    raw = doc["C"]
    if isinstance(raw, list) and all(isinstance(r, list) and not r for r in raw):
        C = Matrix(raw, s.field, cols=0)
    else:
        C = _matrix(doc, "C", s.field)
    return SecuredScheme(s, C).validate()


def load_any(path) -> SecuredScheme:
    """Load a scheme file; raw schemes come back wrapped with ``x = 0``."""
    doc = read_json(path)
    if isinstance(doc, dict) and "C" in doc:
        return secured_from_dict(doc)
    return unsecured(scheme_from_dict(doc))


def is_secured_doc(doc: dict) -> bool:
    return isinstance(doc, dict) and "C" in doc


def dump_secured(ss: SecuredScheme, path=None) -> str:
    text = json.dumps(ss.to_dict(), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def reduce_mod(ss: SecuredScheme, p: int) -> SecuredScheme:
    try:
        base = ss.base.reduce_mod(p)
        C = ss.C.reduce_mod(p)
    except (FieldError, ShapeError) as exc:
        raise SchemeError(str(exc)) from exc
    return SecuredScheme(base, C).validate()
