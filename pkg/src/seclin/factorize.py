"""Closed-form decoding-matrix families that satisfy the reduced-rank condition.

* systematic ``D = [I_K | P]`` with randomness ``C = [-P ; I_{N-K}]``
* circulant ``D`` (rows are cyclic shifts of one generator row)
* identity ``D = I_K`` and the decentralized ``D = F, E = I``

Every constructor returns a validated :class:`~seclin.scheme.Scheme`;
secrecy is then checked through the usual report rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .linalg import Matrix, ShapeError
from .scheme import Scheme, SchemeError
from .secrecy import reduced_ranks


def systematic_decoder(K: int, P: Matrix) -> Matrix:
    if P.rows != K:
        raise ShapeError(f"P must have K = {K} rows, got {P.rows}")
    return Matrix.identity(K, P.field).hstack(P)


def systematic_randomness(P: Matrix) -> Matrix:
    """``C = [-P ; I_{N-K}]``, a basis of Null([I_K | P])."""
    return (-P).vstack(Matrix.identity(P.cols, P.field))


def systematic_factorize(F: Matrix, P: Matrix, E_bot: Matrix | None = None) -> Scheme:
    """``D = [I_K | P]`` and ``E = [F - P E_bot ; E_bot]`` (``E_bot = 0`` by default)."""
    K, L = F.shape
    D = systematic_decoder(K, P)
    if E_bot is None:
        E_bot = Matrix.zeros(P.cols, L, F.field)
    if E_bot.shape != (P.cols, L):
        raise ShapeError(f"E_bot must be {(P.cols, L)}, got {E_bot.shape}")
    E_top = F - P @ E_bot if P.cols else F
    return Scheme(F.field, F, D, E_top.vstack(E_bot))


def to_systematic(s: Scheme) -> tuple[Scheme, tuple[int, ...]]:
    """Re-factorize ``F`` with a systematic decoder derived from ``D``.

    Servers are reordered pivot columns first (returned as ``order``); with
    ``rref(D) = [I | P]`` in that order, the non-pivot servers keep their
    encoding rows as ``E_bot`` and the pivot servers take ``F - P E_bot``.
    Costs generally change; the caller should recompute them.
    """
    red, pivots = s.D.rref()
    rest = tuple(j for j in range(s.N) if j not in pivots)
    order = tuple(pivots) + rest
    P = red.select_rows(range(s.K)).select_cols(rest) if rest else Matrix([[] for _ in range(s.K)], s.field, cols=0)
    E_bot = s.E.select_rows(rest) if rest else None
    return systematic_factorize(s.F, P, E_bot), order


@dataclass(frozen=True)
class CyclicCheck:
    is_circulant: bool
    shift: int | None
    theorem1_ok: bool
    reduced_ranks: tuple[int, ...]

    def to_dict(self):
        return {
            "is_circulant": self.is_circulant,
            "shift": self.shift,
            "theorem1_ok": self.theorem1_ok,
            "reduced_ranks": list(self.reduced_ranks),
        }


def _shift(row: tuple, s: int) -> tuple:
    n = len(row)
    return tuple(row[(j - s) % n] for j in range(n))


def check_cyclic(D: Matrix) -> CyclicCheck:
    """Detect a constant cyclic row shift and verify the rank condition directly."""
    ranks = reduced_ranks(D)
    ok = all(r >= D.rows - 1 for r in ranks)
    shift = None
    if D.rows == 1:
        shift = 1
    else:
        for s in range(1, D.cols):
            if all(D.row(i + 1) == _shift(D.row(i), s) for i in range(D.rows - 1)):
                shift = s
                break
    return CyclicCheck(shift is not None, shift, ok, tuple(ranks))


def circulant(generator, K: int, field) -> Matrix:
    g = tuple(field.coerce(v) for v in generator)
    return Matrix([_shift(g, i) for i in range(K)], field)


def identity_scheme(F: Matrix, variant: str = "assigned") -> Scheme:
    """``"assigned"``: D = I_K, E = F.  ``"decentralized"``: D = F, E = I_L."""
    K, L = F.shape
    if variant == "assigned":
        return Scheme(F.field, F, Matrix.identity(K, F.field), F)
    if variant == "decentralized":
        r = F.rank()
        if r < K:
            raise SchemeError(f"decentralized variant needs rank(F) = K, got {r} < {K}")
        return Scheme(F.field, F, F, Matrix.identity(L, F.field))
    raise ValueError(f"unknown variant {variant!r}")
