"""Holomorphic vector fields as finite combinations of the Witt basis.

The basis field ``ell(n)`` has half-plane representation ``z**(n + 1)``.  A
driving field ``sigma`` lives in the span of modes -1, 0, 1 (complete fields)
and a drift field ``delta`` in the span of -2..1 with a simple pole at the
source point ``z = 0`` (semicomplete fields).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

EPS_CLS = 1e-10


class FieldKind(str, Enum):
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"
    ELLIPTIC = "elliptic"


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.FORWARD else -1


@dataclass(frozen=True)
class WittField:
    """Finite real combination ``sum c_n ell_n``; zero entries are dropped."""

    coeffs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(n): float(c) for n, c in dict(self.coeffs).items() if c != 0.0}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    # construction -------------------------------------------------------
    @classmethod
    def from_modes(cls, **kw: float) -> "WittField":
        """``WittField.from_modes(m2=2, p1=-1)`` style helper; ``m`` is minus."""
        out = {}
        for key, c in kw.items():
            sign = -1 if key[0] == "m" else 1
            out[sign * int(key[1:])] = c
        return cls(out)

    @classmethod
    def parse(cls, text: str) -> "WittField":
        """Parse the ``"n:coeff,n:coeff"`` text form."""
        out: dict[int, float] = {}
        text = text.strip()
        if not text:
            return cls({})
        for part in text.split(","):
            n, sep, c = part.partition(":")
            if not sep:
                raise ValueError(f"bad field term {part!r}; expected n:coeff")
            out[int(n)] = out.get(int(n), 0.0) + float(c)
        return cls(out)

    def to_text(self) -> str:
        return ",".join(f"{n}:{c!r}" for n, c in self.coeffs.items())

    # algebra ------------------------------------------------------------
    def __getitem__(self, n: int) -> float:
        return self.coeffs.get(n, 0.0)

    def __iter__(self):
        return iter(self.coeffs.items())

    @property
    def support(self) -> set[int]:
        return set(self.coeffs)

    def __add__(self, other: "WittField") -> "WittField":
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out.get(n, 0.0) + c
        return WittField(out)

    def __neg__(self) -> "WittField":
        return WittField({n: -c for n, c in self.coeffs.items()})

    def __sub__(self, other: "WittField") -> "WittField":
        return self + (-other)

    def __mul__(self, s: float) -> "WittField":
        return WittField({n: s * c for n, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, WittField) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "WittField(0)"
        return "WittField(" + " + ".join(f"{c:g}*l[{n}]" for n, c in self.coeffs.items()) + ")"

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    # half-plane representation ------------------------------------------
    def __call__(self, z):
        """Value of the field in the half-plane chart."""
        return sum(c * z ** (n + 1) for n, c in self.coeffs.items())

    def derivative(self, z):
        return sum(c * (n + 1) * z ** n for n, c in self.coeffs.items() if n != -1)

    def second_derivative(self, z):
        return sum(c * (n + 1) * n * z ** (n - 1) for n, c in self.coeffs.items() if n not in (-1, 0))


def ell(n: int, c: float = 1.0) -> WittField:
    return WittField({n: c})


def bracket(v: WittField, w: WittField) -> WittField:
    """Lie bracket ``[v, w] = v w' - w v'`` via ``[l_n, l_m] = (m - n) l_{n+m}``."""
    out: dict[int, float] = {}
    for n, a in v.coeffs.items():
        for m, b in w.coeffs.items():
            if m != n:
                out[n + m] = out.get(n + m, 0.0) + (m - n) * a * b
    return WittField(out)


# classification ---------------------------------------------------------


@dataclass(frozen=True)
class FieldClass:
    kind: FieldKind
    discriminant: float


def _check_support(v: WittField, allowed: Iterable[int], what: str) -> None:
    extra = v.support - set(allowed)
    if extra:
        raise ValueError(f"{what} has modes {sorted(extra)} outside {sorted(allowed)}")


def delta2(sigma: WittField) -> FieldClass:
    """Discriminant ``sigma_0**2/4 - sigma_1 sigma_{-1}`` of a complete field.

    This is minus the determinant of the sl(2) generator of the flow, so it is
    invariant under Moebius changes of basis.
    """
    _check_support(sigma, (-1, 0, 1), "complete field")
    s_m1, s0, s1 = sigma[-1], sigma[0], sigma[1]
    d = 0.25 * s0 * s0 - s1 * s_m1
    scale = sigma.max_abs() ** 2
    if abs(d) <= EPS_CLS * scale:
        return FieldClass(FieldKind.PARABOLIC, d)
    return FieldClass(FieldKind.HYPERBOLIC if d > 0 else FieldKind.ELLIPTIC, d)


def delta3(delta: WittField) -> FieldClass:
    """Discriminant of a semicomplete field with a pole at the source.

    The value equals the discriminant of ``z * delta(z)`` divided by
    ``delta_{-2}``.  The kind follows the zero geometry, i.e. the sign of the
    cubic discriminant ``delta_{-2} * value``, which also covers reverse
    (negative ``delta_{-2}``) fields.
    """
    _check_support(delta, (-2, -1, 0, 1), "semicomplete field")
    d_m2, d_m1, d0, d1 = delta[-2], delta[-1], delta[0], delta[1]
    if d_m2 == 0.0:
        raise ValueError("semicomplete field needs a nonzero l_{-2} coefficient")
    val = (
        18 * d_m1 * d0 * d1
        - 4 * d0 ** 3
        + d_m1 ** 2 * d0 ** 2 / d_m2
        - 4 * d_m1 ** 3 * d1 / d_m2
        - 27 * d_m2 * d1 ** 2
    )
    scale = delta.max_abs() ** 3
    if abs(val) <= EPS_CLS * scale:
        return FieldClass(FieldKind.PARABOLIC, val)
    disc = val * d_m2
    return FieldClass(FieldKind.HYPERBOLIC if disc > 0 else FieldKind.ELLIPTIC, val)


# normalization ----------------------------------------------------------


@dataclass(frozen=True)
class SleParams:
    kappa: float
    nu: float = 0.0
    direction: Direction = Direction.FORWARD

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


def normalize(delta: WittField, sigma: WittField) -> tuple[WittField, WittField, SleParams]:
    """Bring a pair to the form ``dG = d dt + s (sqrt(kappa) dB + nu dt)``.

    Returns ``(d, s, params)`` with ``d_{-2} = +-2``, ``s_{-1} = -1`` and the
    drift condition ``+-d_{-1} + 3 s_0 = 0`` holding for ``d - nu s``.
    """
    d_m2, s_m1 = delta[-2], sigma[-1]
    if d_m2 == 0.0 or s_m1 == 0.0:
        raise ValueError("need nonzero delta_{-2} and sigma_{-1}")
    sign = 1 if d_m2 > 0 else -1
    kappa = 2.0 * s_m1 ** 2 / abs(d_m2)
    c = 2.0 / abs(d_m2)
    d = delta * c
    s = sigma * (-1.0 / s_m1)
    nu = -3.0 * sign * s[0] - d[-1]
    direction = Direction.FORWARD if sign > 0 else Direction.REVERSE
    return d, s, SleParams(kappa, nu, direction)


def kappa_nu(delta: WittField, sigma: WittField) -> SleParams:
    """Diffusivity and drift of the SLE driven by ``sigma`` times a standard BM.

    ``nu`` is the coefficient of the normalized ``sigma`` in the drift, so that
    ``2 l_{-2} - nu l_{-1}`` with ``-sqrt(kappa) l_{-1}`` returns ``nu``.
    """
    return normalize(delta, sigma)[2]


# elementary transforms --------------------------------------------------


@dataclass(frozen=True)
class DriverTransform:
    """Symbolic driver rewrite ``u_t -> a u_{b t} + d t``."""

    a: float = 1.0
    b: float = 1.0
    d: float = 0.0

    def apply(self, u):
        return lambda t: self.a * u(self.b * t) + self.d * t


@dataclass(frozen=True)
class ElementaryTransform:
    tag: str
    c: float

    def __post_init__(self):
        if self.tag not in ("V", "T", "D", "R", "S", "P"):
            raise ValueError(f"unknown transform {self.tag!r}")
        if self.tag == "T" and not self.c > 0:
            raise ValueError("T_c needs c > 0")
        if self.tag == "V" and self.c == 0:
            raise ValueError("V_c needs c != 0")


def _poly_shift(f: WittField, c: float, modes: Iterable[int]) -> WittField:
    # R_c rows: coefficients of the pushforward by z -> z/(1 + c z)
    out = {}
    for n in modes:
        acc = 0.0
        for m, coef in f.coeffs.items():
            if m <= n:
                k = n - m
                # (1 - c w)^{1 - m} expanded, term w^k
                acc += coef * math.comb(1 - m, k) * (-c) ** k if 1 - m >= k else 0.0
        out[n] = acc
    return WittField(out)


def apply_elementary(
    t: ElementaryTransform,
    delta: WittField,
    sigma: WittField,
    driver: DriverTransform = DriverTransform(),
) -> tuple[WittField, WittField, DriverTransform]:
    c = t.c
    if t.tag == "V":
        return delta, sigma * c, DriverTransform(driver.a / c, driver.b, driver.d / c)
    if t.tag == "T":
        return delta * c, sigma, DriverTransform(driver.a, driver.b * c, driver.d * c)
    if t.tag == "D":
        return delta - sigma * c, sigma, DriverTransform(driver.a, driver.b, driver.d + c)
    if t.tag == "R":
        return _poly_shift(delta, c, (-2, -1, 0, 1)), _poly_shift(sigma, c, (-1, 0, 1)), driver
    if t.tag == "S":
        scale = lambda f: WittField({n: math.exp(n * c) * a for n, a in f.coeffs.items()})
        return scale(delta), scale(sigma), driver
    # P_c = V_{e^c} o T_{e^{2c}} o S_c
    out = (delta, sigma, driver)
    for tag, p in (("S", c), ("T", math.exp(2 * c)), ("V", math.exp(c))):
        out = apply_elementary(ElementaryTransform(tag, p), *out)
    return out


# commutation invariants -------------------------------------------------


def commutation_invariants(delta: WittField, sigma: WittField):
    """Solve ``[[d,s],d] = x5 [[[d,s],s],s] + x4 [[d,s],s] + x3 [d,s] + x2 d + x1 s + w``.

    Modes -5..-1 are matched, leaving a remainder ``w`` vanishing at the
    source.  The system is triangular with pivots built from ``delta_{-2}`` and
    ``sigma_{-1}``, so it is regular whenever both are nonzero.
    """
    if delta[-2] == 0.0 or sigma[-1] == 0.0:
        raise ValueError("need nonzero delta_{-2} and sigma_{-1}")
    ds = bracket(delta, sigma)
    dss = bracket(ds, sigma)
    dsss = bracket(dss, sigma)
    lhs = bracket(ds, delta)
    basis = [dsss, dss, ds, delta, sigma]
    modes = [-5, -4, -3, -2, -1]
    a = np.array([[b[m] for b in basis] for m in modes])
    rhs = np.array([lhs[m] for m in modes])
    x = np.linalg.solve(a, rhs)
    w = lhs
    for coef, b in zip(x, basis):
        w = w - b * float(coef)
    w = WittField({n: c for n, c in w.coeffs.items() if n >= 0 or abs(c) > 1e-12 * (1 + lhs.max_abs())})
    x5, x4, x3, x2, x1 = (float(v) for v in x)
    return (x1, x2, x3, x4, x5), w


# Ito correction ---------------------------------------------------------


def ito_drift(delta: WittField, sigma: WittField, chart, z: complex) -> complex:
    """Ito drift ``delta + sigma sigma' / 2`` evaluated in ``chart``."""
    from . import charts

    sv = charts.field_in_chart(sigma, chart, z)
    dsv = charts.field_derivative_in_chart(sigma, chart, z)
    return charts.field_in_chart(delta, chart, z) + 0.5 * sv * dsv


# named fields used throughout -------------------------------------------

CHORDAL_DELTA = WittField({-2: 2.0})
DIPOLAR_DELTA = WittField({-2: 2.0, 0: -2.0})
RADIAL_DELTA = WittField({-2: 2.0, 0: 2.0})
CHORDAL_SIGMA = WittField({-1: -1.0})
DIPOLAR_SIGMA = WittField({-1: -1.0, 1: 1.0})
RADIAL_SIGMA = WittField({-1: -1.0, 1: -1.0})
