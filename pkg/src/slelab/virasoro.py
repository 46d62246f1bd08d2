"""Highest-weight Virasoro modules at finite level.

Conventions: ``[L_n, L_m] = (m - n) L_{n+m} + (n^3 - n) / 12 delta_{n+m,0} c``,
``L_n |> = 0`` for ``n >= 1`` and ``L_0 |> = -h |>``.  A vector is a map from
non-increasing tuples ``(k1, k2, ...)`` to coefficients, the tuple standing
for ``L_{-k1} L_{-k2} ... |>``.  The Witt field ``ell_n`` is represented by
``L_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .fieldalg import Direction, WittField

LEVEL_CAP = 6
TOL = 1e-12


@dataclass(frozen=True)
class HighestWeight:
    h: float
    c: float


def hc_from_kappa(kappa: float, direction=Direction.FORWARD) -> HighestWeight:
    """Weights making ``(2 L_-2 +- kappa/2 L_-1^2)|>`` singular."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    s = Direction(direction).sign
    h = -(s * kappa - 6) / (s * 2 * kappa)
    return HighestWeight(h, h * (s * 3 * kappa - 8))


class LevelOverflow(ValueError):
    pass


@dataclass
class VermaVector:
    terms: dict[tuple[int, ...], float] = field(default_factory=dict)
    level_cap: int = LEVEL_CAP

    def __post_init__(self):
        clean = {}
        for k, c in self.terms.items():
            k = tuple(k)
            if any(a < 1 for a in k) or list(k) != sorted(k, reverse=True):
                raise ValueError(f"non-canonical monomial {k}")
            if sum(k) > self.level_cap:
                raise LevelOverflow(f"monomial {k} exceeds level cap {self.level_cap}")
            if c != 0.0:
                clean[k] = clean.get(k, 0.0) + float(c)
        self.terms = clean

    @classmethod
    def vacuum(cls, level_cap: int = LEVEL_CAP) -> "VermaVector":
        return cls({(): 1.0}, level_cap)

    def __getitem__(self, k) -> float:
        return self.terms.get(tuple(k), 0.0)

    def __add__(self, other: "VermaVector") -> "VermaVector":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return VermaVector(out, max(self.level_cap, other.level_cap))

    def __mul__(self, s: float) -> "VermaVector":
        return VermaVector({k: s * c for k, c in self.terms.items()}, self.level_cap)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_zero(self, tol: float = TOL) -> bool:
        return self.max_abs() <= tol

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, c in sorted(self.terms.items(), key=lambda kc: (-sum(kc[0]), kc[0])):
            mono = " ".join(f"L_-{a}" for a in k)
            parts.append(f"{c:+.12g}" + (f" {mono}" if mono else ""))
        return " ".join(parts) + " |>"


@lru_cache(maxsize=None)
def _act(n: int, word: tuple[int, ...], h: float, c: float) -> tuple[tuple[tuple[int, ...], float], ...]:
    """``L_n`` applied to the ordered monomial ``word`` (indices ``k`` of ``L_-k``)."""
    if not word:
        if n >= 1:
            return ()
        if n == 0:
            return (((), -h),)
        return (((-n,), 1.0),)
    k1, rest = word[0], word[1:]
    m = -k1
    if n < 0 and -n >= k1:
        return (((-n,) + word, 1.0),)
    out: dict[tuple[int, ...], float] = {}
    # L_n L_m rest = L_m (L_n rest) + [L_n, L_m] rest
    for w, a in _act(n, rest, h, c):
        for w2, b in _act(m, w, h, c):
            out[w2] = out.get(w2, 0.0) + a * b
    coef = m - n
    if coef != 0:
        for w, a in _act(n + m, rest, h, c):
            out[w] = out.get(w, 0.0) + coef * a
    if n + m == 0 and c:
        out[rest] = out.get(rest, 0.0) + (n ** 3 - n) / 12 * c
    return tuple((w, v) for w, v in out.items() if v != 0.0)


def apply_generator(n: int, v: VermaVector, hw: HighestWeight) -> VermaVector:
    """Normal-ordered ``L_n v``; raises ``LevelOverflow`` past the cap."""
    out: dict[tuple[int, ...], float] = {}
    for word, a in v.terms.items():
        if sum(word) - n > v.level_cap:
            raise LevelOverflow(f"L_{n} on level {sum(word)} exceeds cap {v.level_cap}")
        for w, b in _act(n, word, float(hw.h), float(hw.c)):
            out[w] = out.get(w, 0.0) + a * b
    return VermaVector(out, v.level_cap)


def apply_field(f: WittField, v: VermaVector, hw: HighestWeight) -> VermaVector:
    """``sum_n f_n L_n v``."""
    out = VermaVector({}, v.level_cap)
    for n, a in f:
        out = out + apply_generator(n, v, hw) * a
    return out


def ahat_vacuum(delta: WittField, sigma: WittField, hw: HighestWeight, level_cap: int = LEVEL_CAP) -> VermaVector:
    """``(delta^ + 1/2 sigma^2)|>``."""
    vac = VermaVector.vacuum(level_cap)
    s1 = apply_field(sigma, vac, hw)
    return apply_field(delta, vac, hw) + apply_field(sigma, s1, hw) * 0.5


def ahat_closed_form(delta: WittField, sigma: WittField, h: float) -> dict[tuple[int, ...], float]:
    """Coefficients of ``A|>`` written out at level two."""
    return {
        (2,): delta[-2],
        (1, 1): sigma[-1] ** 2 / 2,
        (1,): delta[-1] - sigma[-1] * sigma[0] * (h + 0.5),
        (): h * (-delta[0] + sigma[-1] * sigma[1] + 0.5 * h * sigma[0] ** 2),
    }


def normalized_constant(kappa: float, direction, d0: float, s0: float, s1: float) -> float:
    """Constant term of ``A|>`` for ``delta = +-(2 l_-2 + ... + d0 l_0 + ...)`` and
    ``sigma = sqrt(kappa) (-l_-1 + s0 l_0 + s1 l_1)`` at the singular weights."""
    s = Direction(direction).sign
    return (kappa - s * 6) * (s * 4 * d0 + (-s * 6 + kappa) * s0 ** 2 + 4 * kappa * s1) / (8 * kappa)


def singular_vector(kappa: float, direction=Direction.FORWARD, level_cap: int = LEVEL_CAP) -> VermaVector:
    s = Direction(direction).sign
    return VermaVector({(2,): 2.0, (1, 1): s * kappa / 2}, level_cap)


def singular_check(kappa: float, direction=Direction.FORWARD, hw: HighestWeight | None = None,
                   tol: float = TOL) -> bool:
    """``L_1`` and ``L_2`` annihilate ``(2 L_-2 +- kappa/2 L_-1^2)|>``."""
    if hw is None:
        hw = hc_from_kappa(kappa, direction)
    v = singular_vector(kappa, direction)
    scale = max(1.0, abs(kappa), abs(hw.h), abs(hw.c))
    return all(apply_generator(n, v, hw).max_abs() <= tol * scale * scale for n in (1, 2))


def martingale_condition(delta: WittField, sigma: WittField, kappa: float, direction=Direction.FORWARD,
                         tol: float = TOL) -> bool:
    """``A|>`` is a multiple of the singular vector at the weights of ``kappa``."""
    hw = hc_from_kappa(kappa, direction)
    a = ahat_vacuum(delta, sigma, hw)
    sv = singular_vector(kappa, direction)
    lam = a[(2,)] / sv[(2,)]
    return (a + sv * (-lam)).max_abs() <= tol * max(1.0, a.max_abs())
