"""In-process execution of the master/server/user protocol.

One trial samples messages ``w`` and common randomness ``c``, lets every
server emit its single response ``A_n = e_aug_n . [w, c]``, and has each
user aggregate ``d_k . A`` using only the responses in its support.

Randomness comes from numpy's PCG64 generator seeded with ``[seed, trial]``.
Gaussian draws use Box-Muller on its uniforms so the sampling procedure is
fixed independently of numpy's normal-sampler implementation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .transform import SecuredScheme

DEFAULT_TOL = 1e-6


def box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` standard normal draws from pairs of uniforms."""
    m = (n + 1) // 2
    u1 = rng.random(m)
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:n]


@dataclass(frozen=True)
class TrialOutcome:
    seed: tuple[int, ...]
    responses: tuple
    expected: tuple
    recovered: tuple
    match: tuple[bool, ...]

    @property
    def errors(self) -> tuple[float, ...]:
        return tuple(abs(float(r) - float(e)) for r, e in zip(self.recovered, self.expected))


def _sample(ss: SecuredScheme, rng, sigma_w: float, sigma_c: float):
    L, x = ss.base.L, ss.x
    if ss.field.is_finite:
        p = ss.field.p
        w = [int(v) for v in rng.integers(0, p, size=L)]
        c = [int(v) for v in rng.integers(0, p, size=x)]
    else:
        z = box_muller(rng, L + x)
        w = list(sigma_w * z[:L])
        c = list(sigma_c * z[L:])
    return w, c


def _dot(row, vec, p):
    acc = sum(int(a) * b for a, b in zip(row, vec) if a != 0) if p else \
        math.fsum(float(a) * b for a, b in zip(row, vec) if a != 0)
    return acc % p if p else acc


def run_trial(
    ss: SecuredScheme,
    seed: int | Sequence[int] = 0,
    sigma_w: float = 1.0,
    sigma_c: float = 1.0,
    tol: float = DEFAULT_TOL,
    messages: Sequence | None = None,
    randomness: Sequence | None = None,
) -> TrialOutcome:
    """Run one protocol round; ``messages``/``randomness`` override sampling."""
    s = ss.base
    p = ss.field.p
    if p is None and (sigma_w <= 0 or sigma_c <= 0):
        raise ValueError("sigma_w and sigma_c must be positive over the reals")
    seed_t = tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    rng = np.random.default_rng(list(seed_t))
    w, c = _sample(ss, rng, sigma_w, sigma_c)
    if messages is not None:
        w = [s.field.coerce(v) if p else float(v) for v in messages]
    if randomness is not None:
        c = [s.field.coerce(v) if p else float(v) for v in randomness]
    if len(w) != s.L or len(c) != ss.x:
        raise ValueError(f"need {s.L} messages and {ss.x} randomness symbols")
    w_aug = list(w) + list(c)

    E_aug = ss.E_aug
    # one-shot: exactly one response per server
    A = [_dot(E_aug.row(n), w_aug, p) for n in range(s.N)]

    expected, recovered, match = [], [], []
    for k in range(s.K):
        sup = set(s.user_support(k))
        seen = [A[n] if n in sup else 0 for n in range(s.N)]
        rec = _dot(s.D.row(k), seen, p)
        exp = _dot(s.F.row(k), w, p)
        expected.append(exp)
        recovered.append(rec)
        if p:
            match.append(rec == exp)
        else:
            match.append(abs(rec - exp) <= tol * (1.0 + abs(exp)))
    return TrialOutcome(seed_t, tuple(A), tuple(expected), tuple(recovered), tuple(match))


@dataclass(frozen=True)
class BatchResult:
    trials: int
    seed: int
    success_rate: tuple[float, ...]
    max_abs_error: tuple[float, ...]
    max_rel_error: tuple[float, ...]
    sigma_ratio: float | None
    outcomes: tuple[TrialOutcome, ...]

    @property
    def all_correct(self) -> bool:
        return all(r == 1.0 for r in self.success_rate)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "trials": self.trials,
            "seed": self.seed,
            "success_rate": [{"user": k + 1, "rate": r} for k, r in enumerate(self.success_rate)],
            "max_abs_error": list(self.max_abs_error),
            "max_rel_error": list(self.max_rel_error),
            "all_correct": self.all_correct,
        }
        if self.sigma_ratio is not None:
            d["sigma_c/sigma_w"] = self.sigma_ratio
        return d


def run_batch(
    ss: SecuredScheme,
    trials: int,
    seed: int = 0,
    sigma_w: float = 1.0,
    sigma_c: float = 1.0,
    tol: float = DEFAULT_TOL,
) -> BatchResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    K = ss.base.K
    hits = [0] * K
    max_abs = [0.0] * K
    max_rel = [0.0] * K
    outcomes = []
    for t in range(trials):
        out = run_trial(ss, (seed, t), sigma_w, sigma_c, tol)
        outcomes.append(out)
        for k in range(K):
            hits[k] += out.match[k]
            if not ss.field.is_finite:
                err = abs(out.recovered[k] - out.expected[k])
                max_abs[k] = max(max_abs[k], err)
                max_rel[k] = max(max_rel[k], err / (1.0 + abs(out.expected[k])))
    return BatchResult(
        trials=trials,
        seed=seed,
        success_rate=tuple(h / trials for h in hits),
        max_abs_error=tuple(max_abs),
        max_rel_error=tuple(max_rel),
        sigma_ratio=None if ss.field.is_finite else sigma_c / sigma_w,
        outcomes=tuple(outcomes),
    )


def write_trial_csv(result: BatchResult, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["trial", "user", "expected", "recovered", "match"])
        for t, out in enumerate(result.outcomes):
            for k in range(len(out.expected)):
                wr.writerow([t, k + 1, _fmt(out.expected[k]), _fmt(out.recovered[k]), int(out.match[k])])


def _fmt(v):
    return f"{v:.12g}" if isinstance(v, float) else str(v)
