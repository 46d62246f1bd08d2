"""One-parameter flows ``H_s[v]`` of holomorphic vector fields."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .charts import Chart, field_in_chart
from .fieldalg import WittField

TOL_ODE = 1e-10


@dataclass(frozen=True)
class MoebiusMap:
    """Real unit-determinant map ``z -> (a z + b) / (c z + d)`` of the half-plane."""

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0

    def __call__(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        return 1.0 / (self.c * z + self.d) ** 2

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        """Composition ``self o other``, renormalized to determinant one."""
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        return MoebiusMap.normalized(a, b, c, d)

    @classmethod
    def normalized(cls, a, b, c, d) -> "MoebiusMap":
        det = a * d - b * c
        if not det > 0:
            raise ValueError("orientation-reversing or singular Moebius matrix")
        s = 1.0 / math.sqrt(det)
        return cls(a * s, b * s, c * s, d * s)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])


IDENTITY = MoebiusMap()


def generator_matrix(sigma: WittField) -> tuple[float, float, float, float]:
    """sl(2) generator ``[[s0/2, s_{-1}], [-s1, -s0/2]]`` of a complete field."""
    extra = sigma.support - {-1, 0, 1}
    if extra:
        raise ValueError(f"complete field expected, got modes {sorted(extra)}")
    return 0.5 * sigma[0], sigma[-1], -sigma[1], -0.5 * sigma[0]


def mobius_of_complete(sigma: WittField, s: float) -> MoebiusMap:
    """Exact flow ``exp(s M)`` using ``M**2 = (Delta_2) I``."""
    p, q, r, _ = generator_matrix(sigma)
    w2 = (p * p + q * r) * s * s  # (s M)^2 = w2 * I
    if abs(w2) < 1e-8:
        # series: cosh w ~ 1 + w2/2 + w2^2/24, sinh(w)/w ~ 1 + w2/6 + w2^2/120
        ch = 1 + w2 / 2 + w2 * w2 / 24
        sh = 1 + w2 / 6 + w2 * w2 / 120
    elif w2 > 0:
        w = math.sqrt(w2)
        ch, sh = math.cosh(w), math.sinh(w) / w
    else:
        w = math.sqrt(-w2)
        ch, sh = math.cos(w), math.sin(w) / w
    a = ch + sh * s * p
    d = ch - sh * s * p
    b = sh * s * q
    c = sh * s * r
    return MoebiusMap.normalized(a, b, c, d)


class FlowExit(RuntimeError):
    """The flow left the domain (hit a pole) before the requested time."""

    def __init__(self, t_exit: float, z):
        super().__init__(f"flow left the domain at t={t_exit:.6g}")
        self.t_exit = t_exit
        self.z = z


def flow_point(v: WittField, t: float, z: complex, chart=Chart.HALFPLANE, tol: float = TOL_ODE) -> complex:
    """``H_t[v](z)`` in ``chart``; complete fields are flowed exactly."""
    chart = Chart.parse(chart)
    if t == 0:
        return complex(z)
    if v.support <= {-1, 0, 1} and chart is Chart.HALFPLANE:
        return complex(mobius_of_complete(v, t)(z))

    has_pole = -2 in v.support or any(n < -2 for n in v.support)

    def rhs(_s, y):
        w = complex(y[0], y[1])
        f = field_in_chart(v, chart, w)
        return [f.real, f.imag]

    scale = 1.0 + abs(z)
    events = []
    if has_pole and chart is Chart.HALFPLANE:
        def near_pole(_s, y):
            return math.hypot(y[0], y[1]) - 1e-7 * scale
        near_pole.terminal = True
        events.append(near_pole)

    sol = solve_ivp(
        rhs, (0.0, t), [complex(z).real, complex(z).imag],
        method="DOP853", rtol=tol, atol=tol * scale, events=events or None,
    )
    if sol.status == 1 or not sol.success:
        te = float(sol.t[-1])
        raise FlowExit(te, complex(sol.y[0, -1], sol.y[1, -1]))
    return complex(sol.y[0, -1], sol.y[1, -1])


def root_branch(g2: complex, z: complex, tol: float = 1e-12) -> complex:
    """Square root of ``g2`` continuing the half-plane point ``z``."""
    g = cmath.sqrt(g2)
    if abs(g.imag) > tol * abs(g):
        return g if g.imag > 0 else -g
    return g if g.real * z.real >= 0 else -g


def chordal_exact(t: float, z: complex) -> complex:
    """``sqrt(z**2 + 4 t)`` with the branch continuous from ``z``.

    Points strictly inside the slit ``(0, 2i sqrt(t))`` are rejected.
    """
    z = complex(z)
    if t > 0 and z.real == 0 and 0 < z.imag < 2 * math.sqrt(t) * (1 - 1e-14):
        raise ValueError("point lies on the slit")
    return root_branch(z * z + 4 * t, z)


def template_flow(kind: int, s: float, z):
    """Closed-form flows of the classical drifts in the half-plane.

    ``kind`` 0: ``2 l_{-2}`` (chordal), 1: ``2 l_{-2} - 2 l_0`` (dipolar),
    2: ``2 l_{-2} + 2 l_0`` (radial).  ``s`` may be negative.
    """
    if kind == 0:
        g2 = z * z + 4 * s
    elif kind == 1:
        g2 = 1 - math.exp(-4 * s) * (1 - z * z)
    else:
        g2 = math.exp(4 * s) * (1 + z * z) - 1
    return root_branch(g2, z)
