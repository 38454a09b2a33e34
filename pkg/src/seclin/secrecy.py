"""Decidable secrecy criteria for a scheme ``F = D E``.

* reduced-rank condition: ``rank(D without the columns user k observes) >= K - 1``
* visible-randomness rank: ``rank(C(Sup(d_k), :)) == w_H(d_k) - 1``
* access bound: ``w_H(d_k) <= N - K + 1``
* communication-cost converse: ``delta <= 1 - (K - 1) / N``

Every check returns its witness ranks alongside the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Any

from .linalg import Matrix
from .scheme import Scheme, check_nondegeneracy, costs

if TYPE_CHECKING:
    from .transform import SecuredScheme


@dataclass(frozen=True)
class ReducedRank:
    ok: bool
    dred_rank: int


@dataclass(frozen=True)
class VisibleRandomnessRank:
    ok: bool
    rank: int
    required: int

    @property
    def status(self) -> str:
        if self.ok:
            return "ok"
        # rank above w_H - 1 contradicts D @ C = 0 for this user
        return "rank too low (leak)" if self.rank < self.required else "rank too high (inconsistent)"


@dataclass(frozen=True)
class CostConverse:
    ok: bool
    delta: Fraction
    bound: Fraction


def reduced_ranks(D: Matrix) -> list[int]:
    """Per user: rank of ``D`` after deleting the columns that user observes."""
    return [D.delete_cols(D.support(k)).rank() for k in range(D.rows)]


def check_theorem1(s: Scheme) -> list[ReducedRank]:
    return [ReducedRank(r >= s.K - 1, r) for r in reduced_ranks(s.D)]


def check_lemma1(ss: "SecuredScheme") -> list[VisibleRandomnessRank]:
    s = ss.base
    out = []
    for k in range(s.K):
        sup = s.user_support(k)
        r = ss.C.select_rows(sup).rank()
        need = len(sup) - 1
        out.append(VisibleRandomnessRank(r == need, r, need))
    return out


def check_corollary1(s: Scheme) -> list[bool]:
    return [s.weight(k) <= s.N - s.K + 1 for k in range(s.K)]


def check_theorem2(s: Scheme) -> CostConverse:
    delta = costs(s).delta
    bound = 1 - Fraction(s.K - 1, s.N)
    return CostConverse(delta <= bound, delta, bound)


@dataclass(frozen=True)
class UserVerdict:
    user: int
    w_H: int
    corollary1_ok: bool
    theorem1_ok: bool
    dred_rank: int
    nondegenerate: bool
    lemma1_ok: bool | None = None
    lemma1_rank: int | None = None
    required_rank: int | None = None
    lemma1_status: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d = {
            "user": self.user + 1,
            "w_H": self.w_H,
            "corollary1_ok": self.corollary1_ok,
            "theorem1_ok": self.theorem1_ok,
            "dred_rank": self.dred_rank,
            "nondegenerate": self.nondegenerate,
        }
        if self.lemma1_ok is None:
            d["lemma1"] = "n/a"
        else:
            d.update(lemma1_ok=self.lemma1_ok, lemma1_rank=self.lemma1_rank,
                     required_rank=self.required_rank, lemma1_status=self.lemma1_status)
        if not self.nondegenerate:
            d["note"] = "observed encoding rows rank deficient; sufficiency of the rank condition not guaranteed"
        return d


@dataclass(frozen=True)
class SecrecyReport:
    per_user: tuple[UserVerdict, ...]
    theorem2_ok: bool
    delta: Fraction
    delta_bound: Fraction
    secured: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def all_ok(self) -> bool:
        users = all(u.corollary1_ok and u.theorem1_ok and (u.lemma1_ok is not False) for u in self.per_user)
        return users and self.theorem2_ok

    def failures(self) -> list[str]:
        out = []
        for u in self.per_user:
            if not u.corollary1_ok:
                out.append(f"user {u.user + 1}: access bound violated (w_H = {u.w_H})")
            if not u.theorem1_ok:
                out.append(f"user {u.user + 1}: reduced-rank condition violated (rank {u.dred_rank})")
            if u.lemma1_ok is False:
                out.append(f"user {u.user + 1}: visible randomness {u.lemma1_status} "
                           f"(rank {u.lemma1_rank}, need {u.required_rank})")
        if not self.theorem2_ok:
            out.append(f"theorem2 (cost converse) violated: delta = {self.delta} > {self.delta_bound}")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_user": [u.to_dict() for u in self.per_user],
            "global": {
                "theorem2_ok": self.theorem2_ok,
                "delta": str(self.delta),
                "delta_bound": str(self.delta_bound),
            },
            "secured": self.secured,
            "all_ok": self.all_ok,
        }


def full_report(s: Scheme, ss: "SecuredScheme | None" = None) -> SecrecyReport:
    t1 = check_theorem1(s)
    c1 = check_corollary1(s)
    nd = check_nondegeneracy(s)
    l1 = check_lemma1(ss) if ss is not None else None
    users = []
    for k in range(s.K):
        kw = dict(user=k, w_H=s.weight(k), corollary1_ok=c1[k], theorem1_ok=t1[k].ok,
                  dred_rank=t1[k].dred_rank, nondegenerate=nd[k])
        if l1 is not None:
            kw.update(lemma1_ok=l1[k].ok, lemma1_rank=l1[k].rank,
                      required_rank=l1[k].required, lemma1_status=l1[k].status)
        users.append(UserVerdict(**kw))
    t2 = check_theorem2(s)
    return SecrecyReport(tuple(users), t2.ok, t2.delta, t2.bound, secured=ss is not None)
