"""The (N, K, L) linearly separable computing scheme ``F = D E``.

A :class:`Scheme` is validated on construction: dimensions, the exact
factorization ``D @ E == F``, and full row rank of ``D``.  Supports,
broadcast sets, and the communication/computation costs derive from the
nonzero patterns of ``D`` and ``E``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .field import FieldError, FieldSpec
from .linalg import Matrix, ShapeError


class SchemeError(ValueError):
    """A scheme document or object violates the system-model invariants."""


@dataclass(frozen=True, eq=True)
class Scheme:
    field: FieldSpec
    F: Matrix
    D: Matrix
    E: Matrix

    def __post_init__(self):
        K, L = self.F.shape
        if self.D.rows != K:
            raise SchemeError(f"dimension violation: D has {self.D.rows} rows, F has {K}")
        N = self.D.cols
        if self.E.shape != (N, L):
            raise SchemeError(f"dimension violation: E is {self.E.shape}, expected ({N}, {L})")
        for name, m in (("F", self.F), ("D", self.D), ("E", self.E)):
            if m.field != self.field:
                raise SchemeError(f"{name} is over {m.field}, scheme is over {self.field}")
        if K < 1:
            raise SchemeError("dimension violation: need at least one user")
        if N < K or L < K:
            raise SchemeError(f"dimension violation: need N >= K and L >= K (N={N}, K={K}, L={L})")
        if self.D.matmul(self.E) != self.F:
            raise SchemeError("inconsistent factorization: D @ E != F")
        r = self.D.rank()
        if r < K:
            raise SchemeError(f"rank-deficient decoder: rank(D) = {r} < K = {K}")

    @classmethod
    def from_lists(cls, field: FieldSpec, F, D, E) -> "Scheme":
        return cls(field, Matrix(F, field), Matrix(D, field), Matrix(E, field))

    @property
    def N(self) -> int:
        return self.D.cols

    @property
    def K(self) -> int:
        return self.D.rows

    @property
    def L(self) -> int:
        return self.F.cols

    def user_support(self, k: int) -> tuple[int, ...]:
        """Zero-based servers whose responses user ``k`` receives."""
        return self.D.support(k)

    def weight(self, k: int) -> int:
        return len(self.D.support(k))

    def reduce_mod(self, p: int) -> "Scheme":
        """Reinterpret an integer/rational scheme over GF(p); re-validates."""
        return Scheme(FieldSpec.gf(p), self.F.reduce_mod(p), self.D.reduce_mod(p), self.E.reduce_mod(p))

    def to_dict(self) -> dict[str, Any]:
        return {
            "field": self.field.tag,
            "N": self.N,
            "K": self.K,
            "L": self.L,
            "F": self.F.to_json(),
            "D": self.D.to_json(),
            "E": self.E.to_json(),
        }


@dataclass(frozen=True)
class BroadcastSchedule:
    tau: tuple[tuple[int, ...], ...]  # users served by each server
    sup_d: tuple[tuple[int, ...], ...]  # servers heard by each user

    def to_dict(self, one_based: bool = True) -> dict[str, Any]:
        o = 1 if one_based else 0
        return {
            "tau": [[u + o for u in t] for t in self.tau],
            "sup_d": [[n + o for n in s] for s in self.sup_d],
        }


@dataclass(frozen=True)
class CostReport:
    delta: Fraction
    gamma: Fraction
    per_user_access: tuple[int, ...]
    per_message_replication: tuple[int, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta": _frac(self.delta),
            "gamma": _frac(self.gamma),
            "w_H(d_k)": list(self.per_user_access),
            "w_H(E(:,l))": list(self.per_message_replication),
        }


def _frac(q: Fraction) -> str:
    return str(q)


def derive_schedule(s: Scheme) -> BroadcastSchedule:
    return BroadcastSchedule(
        tau=tuple(s.D.col_support(n) for n in range(s.N)),
        sup_d=tuple(s.D.support(k) for k in range(s.K)),
    )


def costs(s: Scheme) -> CostReport:
    access = tuple(s.weight(k) for k in range(s.K))
    repl = tuple(len(s.E.col_support(l)) for l in range(s.L))
    return CostReport(
        delta=Fraction(sum(access), s.K * s.N),
        gamma=Fraction(max(repl), s.N),
        per_user_access=access,
        per_message_replication=repl,
    )


def check_nondegeneracy(s: Scheme) -> list[bool]:
    """Per user: do the encoding rows it observes have full row rank?"""
    out = []
    for k in range(s.K):
        sup = s.user_support(k)
        out.append(s.E.select_rows(sup).rank() == len(sup))
    return out


# -- serialization --------------------------------------------------------

def _matrix(doc: dict, key: str, field: FieldSpec) -> Matrix:
    if key not in doc:
        raise SchemeError(f"missing key {key!r}")
    raw = doc[key]
    if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
        raise SchemeError(f"{key} must be a list of rows")
    try:
        return Matrix(raw, field)
    except (FieldError, ShapeError) as exc:
        raise SchemeError(f"{key}: {exc}") from exc


def parse_field(doc: dict) -> FieldSpec:
    try:
        return FieldSpec.parse(doc.get("field", "real"))
    except FieldError as exc:
        raise SchemeError(str(exc)) from exc


def scheme_from_dict(doc: dict) -> Scheme:
    if not isinstance(doc, dict):
        raise SchemeError("scheme document must be a JSON object")
    field = parse_field(doc)
    F, D, E = (_matrix(doc, k, field) for k in ("F", "D", "E"))
    for key, actual in (("K", D.rows), ("N", D.cols), ("L", F.cols)):
        if key in doc and doc[key] != actual:
            raise SchemeError(f"dimension violation: declared {key}={doc[key]} but matrices give {actual}")
    return Scheme(field, F, D, E)


def load_scheme(path) -> Scheme:
    return scheme_from_dict(read_json(path))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemeError(f"{path}: invalid JSON ({exc})") from exc


def dump_scheme(s: Scheme, path=None) -> str:
    text = json.dumps(s.to_dict(), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
