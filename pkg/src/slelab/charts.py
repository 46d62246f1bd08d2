"""Charts of the reference domain and covariant evaluation.

Every chart is related to the half-plane hub ``H`` by a map ``tau`` sending
chart coordinates to half-plane coordinates:

* disk ``D``: ``tau(z) = i (1 - z) / (1 + z)`` (source ``z = 1``, infinity ``z = -1``)
* strip ``S = {0 < Im z < pi}``: ``tau(z) = tanh(z / 2)``
* log chart ``L`` (upper half-plane mod 2 pi): ``tau(z) = tan(z / 2)``, i.e. ``e^{iz}`` into the disk
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

from .fieldalg import WittField


class Chart(str, Enum):
    HALFPLANE = "halfplane"
    DISK = "disk"
    STRIP = "strip"
    LOG = "log"

    @classmethod
    def parse(cls, name) -> "Chart":
        if isinstance(name, Chart):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown chart {name!r}; expected halfplane|disk|strip|log") from None


class _Infinity:
    """Point at infinity of the Riemann sphere."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INF"


INF = _Infinity()


def is_inf(z) -> bool:
    return z is INF


def _to_h(chart: Chart, z):
    if chart is Chart.HALFPLANE:
        return z
    if z is INF:
        raise ValueError(f"infinity is not a point of the {chart.value} chart")
    if chart is Chart.DISK:
        if z == -1:
            return INF
        return 1j * (1 - z) / (1 + z)
    if chart is Chart.STRIP:
        c = cmath.cosh(z / 2)
        if c == 0:
            return INF
        return cmath.tanh(z / 2)
    c = cmath.cos(z / 2)
    if c == 0:
        return INF
    return cmath.tan(z / 2)


def _from_h(chart: Chart, w):
    if chart is Chart.HALFPLANE:
        return w
    if chart is Chart.DISK:
        if w is INF:
            return -1.0 + 0j
        return (1j - w) / (1j + w)
    if w is INF:
        return 1j * math.pi if chart is Chart.STRIP else math.pi + 0j
    if chart is Chart.STRIP:
        return 2 * cmath.atanh(w)
    if w == 1j:
        raise ValueError("the interior fixed point has no log-chart coordinate")
    return 2 * cmath.atan(w)


def transition(src, dst, z):
    """Map a point from chart ``src`` to chart ``dst`` through the half-plane."""
    src, dst = Chart.parse(src), Chart.parse(dst)
    if src is dst:
        return z
    return _from_h(dst, _to_h(src, z))


def tau_derivatives(chart: Chart, z) -> tuple[complex, complex, complex]:
    """``(tau, tau', tau'')`` of the map from ``chart`` to the half-plane."""
    chart = Chart.parse(chart)
    if chart is Chart.HALFPLANE:
        return z, 1.0, 0.0
    if chart is Chart.DISK:
        u = 1 + z
        return 1j * (1 - z) / u, -2j / u ** 2, 4j / u ** 3
    if chart is Chart.STRIP:
        t = cmath.tanh(z / 2)
        d1 = 0.5 * (1 - t * t)
        return t, d1, -t * d1
    t = cmath.tan(z / 2)
    d1 = 0.5 * (1 + t * t)
    return t, d1, t * d1


def field_in_chart(v: WittField, chart, z) -> complex:
    """``v^psi(z) = v^H(tau(z)) / tau'(z)``."""
    chart = Chart.parse(chart)
    t, d1, _ = tau_derivatives(chart, z)
    if -2 in v.support and t == 0:
        raise ZeroDivisionError("field evaluated at its pole")
    return v(t) / d1


def field_derivative_in_chart(v: WittField, chart, z) -> complex:
    chart = Chart.parse(chart)
    t, d1, d2 = tau_derivatives(chart, z)
    return v.derivative(t) - v(t) * d2 / d1 ** 2


def disk_basis(n: int, z) -> complex:
    """Closed form of ``ell_n`` in the disk chart."""
    return -(1j ** n) / 2 * (1 - z) ** (1 + n) * (1 + z) ** (1 - n)


# pre-pre-Schwarzian forms --------------------------------------------------


@dataclass(frozen=True)
class PpsOrder:
    """Transformation weights ``(mu, mu_star)`` of a pre-pre-Schwarzian."""

    mu: complex
    mu_star: complex

    @classmethod
    def chi(cls, chi: float) -> "PpsOrder":
        # eta -> eta - chi arg(d)
        return cls(0.5j * chi, -0.5j * chi)

    @classmethod
    def q(cls, q: float) -> "PpsOrder":
        # eta -> eta + Q log|d|
        return cls(0.5 * q, 0.5 * q)

    @classmethod
    def for_sle(cls, kappa: float, forward: bool = True) -> "PpsOrder":
        rk = math.sqrt(kappa)
        if forward:
            return cls(1j * (4 - kappa) / (4 * rk), -1j * (4 - kappa) / (4 * rk))
        mu = (4 + kappa) / (4 * rk)
        return cls(mu, mu)

    def term(self, log_d: complex) -> float:
        """``mu log d + mu_star conj(log d)``, real for admissible orders."""
        return (self.mu * log_d + self.mu_star * log_d.conjugate()).real


def pps_push(value: float, order: PpsOrder, map_derivative: complex) -> float:
    if map_derivative == 0:
        raise ZeroDivisionError("map derivative vanishes")
    return value + order.term(cmath.log(map_derivative))


def chi_of(kappa: float) -> float:
    return 2 / math.sqrt(kappa) - math.sqrt(kappa) / 2


def q_of(kappa: float) -> float:
    return 2 / math.sqrt(kappa) + math.sqrt(kappa) / 2


def unwrap_log(points: list[complex], period: float = 2 * math.pi) -> list[complex]:
    """Shift real parts by multiples of ``period`` so consecutive points stay close."""
    out: list[complex] = []
    for p in points:
        if out:
            k = round((out[-1].real - p.real) / period)
            p = p + k * period
        out.append(p)
    return out


def log_tau_prime(chart, z) -> complex:
    """``log tau'(z)`` on a branch continuous over the chart's fundamental domain."""
    chart = Chart.parse(chart)
    if chart is Chart.HALFPLANE:
        return 0j
    if chart is Chart.DISK:
        # tau' = -2i / (1 + z)^2 and Re(1 + z) > 0 on the disk
        return math.log(2) - 0.5j * math.pi - 2 * cmath.log(1 + z)
    if chart is Chart.STRIP:
        # tau' = sech^2(z/2) / 2 and Re cosh(z/2) > 0 on the strip
        return -math.log(2) - 2 * cmath.log(cmath.cosh(z / 2))
    # tau' = sec^2(z/2) / 2; continuous for |Re z| < pi
    return -math.log(2) - 2 * cmath.log(cmath.cos(z / 2))
