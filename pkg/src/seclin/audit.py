"""Leakage measurement for secured schemes.

Over GF(p) the conditional mutual information ``I(W; A_k | <f_k, w>)`` is
computed by enumerating every ``(w, c)``.  With ``S = <f_k, w>`` (a function
of ``w``) and ``n`` enumerated states,

    n * I = sum_{w,a} c log c - sum_{a,s} c log c + sum_s c log c - sum_w c log c

where each sum runs over the joint counts of the named variables.  The
right side is an integer combination of logarithms of integers, so
factoring the counts gives an exact prime-exponent vector: the leakage is
exactly zero iff every exponent vanishes.

Over the reals the module gives the closed-form Gaussian leakage and the
eigenvalue bound ``(w_H - 1)/2 * log(1 + M_k sigma_w^2 / sigma_c^2)`` in nats.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .linalg import sym_eigs
from .transform import SecuredScheme

MAX_STATES = 10**8
_BINCOUNT_LIMIT = 1 << 26


class AuditError(ValueError):
    pass


class EnumerationInfeasible(AuditError):
    def __init__(self, states: int, limit: int):
        self.states, self.limit = states, limit
        super().__init__(f"enumeration infeasible: {states} states exceeds limit {limit}")


class LemmaViolation(AuditError):
    """Visible randomness is rank deficient: some message direction is unmasked."""


# -- exact enumeration over GF(p) ---------------------------------------------

def _factorize(n: int) -> dict[int, int]:
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _add_clogc(exps: Counter, hist: dict[int, int], sign: int) -> None:
    """Accumulate ``sign * sum mult * v * log v`` as prime exponents."""
    for v, mult in hist.items():
        if v <= 1:
            continue
        for q, e in _factorize(int(v)).items():
            exps[q] += sign * mult * int(v) * e


def _hist(counts: np.ndarray) -> dict[int, int]:
    counts = counts[counts > 0]
    vals, mult = np.unique(counts, return_counts=True)
    return {int(v): int(m) for v, m in zip(vals, mult)}


@dataclass(frozen=True)
class ExactLeakage:
    user: int
    bits: float
    exact_zero: bool
    states: int
    exponents: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "user": self.user + 1,
            "exact_leakage": self.bits,
            "unit": "bits",
            "exact_zero": self.exact_zero,
            "states": self.states,
        }


def _digits(idx: np.ndarray, p: int, width: int) -> np.ndarray:
    out = np.empty((idx.size, width), dtype=np.int64)
    v = idx.copy()
    for i in range(width):
        out[:, i] = v % p
        v //= p
    return out


def exact_leakage_gf(
    ss: SecuredScheme, k: int, max_states: int = MAX_STATES, chunk: int = 1 << 20
) -> ExactLeakage:
    """Exhaustive ``I(W; A_k | <f_k, w>)`` in bits for user ``k`` (zero-based)."""
    if not ss.field.is_finite:
        raise AuditError("exhaustive audit needs a GF(p) scheme (use a modulus)")
    s = ss.base
    p, L, x = ss.field.p, s.L, ss.x
    states = p ** (L + x)
    if states > max_states:
        raise EnumerationInfeasible(states, max_states)

    sup = s.user_support(k)
    m = len(sup)
    rows = ss.E_aug.select_rows(sup).to_numpy(np.int64) if m else np.zeros((0, L + x), np.int64)
    Mw, Mc = rows[:, :L], rows[:, L:]
    f = np.array([int(v) for v in s.F.row(k)], dtype=np.int64)
    pw = np.array([p**i for i in range(m)], dtype=np.int64)
    n_codes = p**m
    n_c = p**x

    c_part = (_digits(np.arange(n_c, dtype=np.int64), p, x) @ Mc.T) % p  # (n_c, m)

    use_bincount = n_codes * p <= _BINCOUNT_LIMIT
    as_counts = np.zeros(n_codes * p, dtype=np.int64) if use_bincount else None
    as_counter: Counter = Counter()
    aw_hist: Counter = Counter()

    n_w = p**L
    w_block = max(1, chunk // n_c)
    for w0 in range(0, n_w, w_block):
        w_idx = np.arange(w0, min(n_w, w0 + w_block), dtype=np.int64)
        wd = _digits(w_idx, p, L)
        w_part = (wd @ Mw.T) % p  # (nw, m)
        a = (w_part[:, None, :] + c_part[None, :, :]) % p
        code = a @ pw  # (nw, n_c)
        sval = (wd @ f) % p  # (nw,)

        key = code * p + sval[:, None]
        if use_bincount:
            as_counts += np.bincount(key.ravel(), minlength=n_codes * p)
        else:
            u, cnt = np.unique(key.ravel(), return_counts=True)
            as_counter.update(dict(zip(u.tolist(), cnt.tolist())))

        srt = np.sort(code, axis=1)
        new_run = np.ones(srt.shape, dtype=bool)
        new_run[:, 1:] = srt[:, 1:] != srt[:, :-1]
        starts = np.flatnonzero(new_run.ravel())
        runs = np.diff(np.append(starts, srt.size))
        aw_hist.update(_hist(runs))

    if use_bincount:
        as_arr = as_counts
    else:
        as_arr = np.array(list(as_counter.values()), dtype=np.int64)
        keys = np.array(list(as_counter.keys()), dtype=np.int64)
    s_counts = (as_counts.reshape(n_codes, p).sum(axis=0) if use_bincount
                else np.bincount(keys % p, weights=as_arr, minlength=p).astype(np.int64))

    exps: Counter = Counter()
    _add_clogc(exps, dict(aw_hist), +1)
    _add_clogc(exps, _hist(as_arr), -1)
    _add_clogc(exps, _hist(s_counts), +1)
    _add_clogc(exps, {n_c: n_w}, -1)
    exps = {q: e for q, e in exps.items() if e != 0}

    bits = math.fsum(e * math.log2(q) for q, e in exps.items()) / states if exps else 0.0
    return ExactLeakage(k, bits, not exps, states, exps)


# -- real field: index sets, bound, exact Gaussian ------------------------------

def select_Sk(ss: SecuredScheme, k: int, rule: str = "drop-redundant") -> tuple[int, ...]:
    """Servers whose randomness rows form a maximal independent set for user ``k``.

    ``"greedy"`` scans the support left to right keeping rows that raise the
    rank.  ``"drop-redundant"`` removes the lowest-index response that is
    fixed by the others together with the requested value, which requires
    the remaining rows to be independent; it falls back to greedy when no
    single removal achieves that.
    """
    sup = ss.base.user_support(k)
    C = ss.C

    def greedy():
        chosen: list[int] = []
        r = 0
        for n in sup:
            if C.select_rows(chosen + [n]).rank() > r:
                chosen.append(n)
                r += 1
        return tuple(chosen)

    if rule == "greedy":
        return greedy()
    if rule != "drop-redundant":
        raise ValueError(f"unknown rule {rule!r}")
    if not sup:
        return ()
    r = C.select_rows(sup).rank()
    if r == len(sup) - 1:
        for n in sup:
            rest = tuple(i for i in sup if i != n)
            if C.select_rows(rest).rank() == r:
                return rest
    return greedy()


@dataclass(frozen=True)
class BoundResult:
    user: int
    bound: float
    M_k: float | None
    S_k: tuple[int, ...]
    lambda_max_X: float | None
    lambda_min_Y: float | None
    w_H: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "user": self.user + 1,
            "bound": self.bound,
            "unit": "nats",
            "M_k": self.M_k,
            "S_k": [n + 1 for n in self.S_k],
            "lambda_max(X_k X_k^T)": self.lambda_max_X,
            "lambda_min(Y_k Y_k^T)": self.lambda_min_Y,
            "w_H": self.w_H,
        }


def _require_real(ss: SecuredScheme):
    if ss.field.is_finite:
        raise AuditError("Gaussian leakage applies to real-field schemes only")


def _require_visible_rank(ss: SecuredScheme, k: int):
    sup = ss.base.user_support(k)
    r = ss.C.select_rows(sup).rank()
    if r != len(sup) - 1:
        raise LemmaViolation(
            f"lemma1 violated for user {k + 1}: rank(C(Sup)) = {r}, need {len(sup) - 1}; "
            "unbounded leakage direction"
        )


def gram_factors(ss: SecuredScheme, k: int, rule: str = "drop-redundant"):
    """``(S_k, X_k X_k^T, Y_k Y_k^T)`` with exact entries."""
    S = select_Sk(ss, k, rule)
    X = ss.base.E.select_rows(S)
    Y = ss.C.select_rows(S)
    return S, X @ X.T, Y @ Y.T


def leakage_bound_real(
    ss: SecuredScheme, k: int, sigma_w: float, sigma_c: float,
    tol: float = 1e-10, rule: str = "drop-redundant",
) -> BoundResult:
    _require_real(ss)
    w = ss.base.weight(k)
    if w <= 1:
        return BoundResult(k, 0.0, None, (), None, None, w)
    _require_visible_rank(ss, k)
    S, XX, YY = gram_factors(ss, k, rule)
    lam_x = sym_eigs(XX, tol)[-1]
    lam_y = sym_eigs(YY, tol)[0]
    if lam_y <= tol:
        raise LemmaViolation(f"lemma1 violated for user {k + 1}: lambda_min(Y Y^T) = {lam_y:.3g}")
    M = lam_x / lam_y
    bound = (w - 1) / 2 * math.log1p(M * sigma_w**2 / sigma_c**2)
    return BoundResult(k, bound, M, S, lam_x, lam_y, w)


def exact_leakage_gaussian(
    ss: SecuredScheme, k: int, sigma_w: float, sigma_c: float, rule: str = "drop-redundant"
) -> float:
    """Closed-form ``I(W; A_k | <f_k, w>)`` in nats for Gaussian ``w`` and ``c``.

    One observed response is dropped because it is determined by the rest
    and the requested value.  For the remaining rows ``B = [X | Y]``:
    ``I = 1/2 log det(I + sigma_w^2 (sigma_c^2 Y Y^T)^-1 X P X^T)`` with
    ``P`` the projector orthogonal to ``f_k``.
    """
    _require_real(ss)
    s = ss.base
    if s.weight(k) <= 1:
        return 0.0
    _require_visible_rank(ss, k)
    S = select_Sk(ss, k, rule)
    X = s.E.select_rows(S).to_numpy()
    Y = ss.C.select_rows(S).to_numpy()
    f = np.array([float(v) for v in s.F.row(k)])
    ff = float(f @ f)
    P = np.eye(s.L) - (np.outer(f, f) / ff if ff > 0 else 0.0)
    signal = sigma_w**2 * (X @ P @ X.T)
    noise = sigma_c**2 * (Y @ Y.T)
    try:
        chol = np.linalg.cholesky(noise)
    except np.linalg.LinAlgError as exc:
        raise LemmaViolation(f"user {k + 1}: randomness covariance on rows {[n + 1 for n in S]} is singular") from exc
    Li = np.linalg.inv(chol)
    G = Li @ signal @ Li.T
    ev = np.linalg.eigvalsh((G + G.T) / 2)
    return 0.5 * math.fsum(math.log1p(max(v, 0.0)) for v in ev)


def epsilon_to_sigma(
    ss: SecuredScheme, k: int, sigma_w: float, eps: float, rule: str = "drop-redundant"
) -> float:
    """Smallest ``sigma_c`` whose bound for user ``k`` is at most ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = ss.base.weight(k)
    if w < 2:
        raise ValueError(f"user {k + 1} observes a single response; any sigma_c gives zero leakage")
    M = leakage_bound_real(ss, k, 1.0, 1.0, rule=rule).M_k
    return math.sqrt(M * sigma_w**2 / math.expm1(2 * eps / (w - 1)))


# -- reports ------------------------------------------------------------------

_REPORT_KEYS = (
    ("exact_leakage", "exact_leakage"), ("exact_zero", "exact_zero"), ("bound", "bound"),
    ("M_k", "M_k"), ("lambda_max_X", "lambda_max(X_k X_k^T)"),
    ("lambda_min_Y", "lambda_min(Y_k Y_k^T)"), ("sigma_c_for_eps", "sigma_c_for_eps"),
    ("error", "error"),
)


@dataclass
class UserLeakage:
    user: int
    w_H: int
    exact_leakage: float | None = None
    unit: str = "nats"
    exact_zero: bool | None = None
    bound: float | None = None
    M_k: float | None = None
    S_k: tuple[int, ...] = ()
    lambda_max_X: float | None = None
    lambda_min_Y: float | None = None
    sigma_c_for_eps: float | None = None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d = {"user": self.user + 1, "w_H": self.w_H, "unit": self.unit}
        for key, name in _REPORT_KEYS:
            v = getattr(self, key)
            if v is not None:
                d[name] = v
        if self.S_k:
            d["S_k"] = [n + 1 for n in self.S_k]
        return d


@dataclass
class LeakageReport:
    field: str
    per_user: list[UserLeakage]
    sigma_w: float | None = None
    sigma_c: float | None = None
    eps: float | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"field": self.field}
        for key in ("sigma_w", "sigma_c", "eps"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        d["per_user"] = [u.to_dict() for u in self.per_user]
        return d


def gf_report(ss: SecuredScheme, users: Iterable[int] | None = None,
              max_states: int = MAX_STATES) -> LeakageReport:
    users = range(ss.base.K) if users is None else users
    out = []
    for k in users:
        r = exact_leakage_gf(ss, k, max_states)
        out.append(UserLeakage(k, ss.base.weight(k), r.bits, "bits", r.exact_zero))
    return LeakageReport(ss.field.tag, out)


def real_report(ss: SecuredScheme, sigma_w: float, sigma_c: float,
                users: Iterable[int] | None = None, exact: bool = True,
                bound: bool = True, eps: float | None = None,
                rule: str = "drop-redundant") -> LeakageReport:
    users = range(ss.base.K) if users is None else users
    out = []
    for k in users:
        u = UserLeakage(k, ss.base.weight(k))
        try:
            if bound:
                b = leakage_bound_real(ss, k, sigma_w, sigma_c, rule=rule)
                u.bound, u.M_k, u.S_k = b.bound, b.M_k, b.S_k
                u.lambda_max_X, u.lambda_min_Y = b.lambda_max_X, b.lambda_min_Y
            if exact:
                u.exact_leakage = exact_leakage_gaussian(ss, k, sigma_w, sigma_c, rule=rule)
                if not bound:
                    u.S_k = select_Sk(ss, k, rule)
            if eps is not None and u.w_H >= 2:
                u.sigma_c_for_eps = epsilon_to_sigma(ss, k, sigma_w, eps, rule=rule)
        except LemmaViolation as exc:
            u.error = str(exc)
        out.append(u)
    return LeakageReport(ss.field.tag, out, sigma_w, sigma_c, eps)
