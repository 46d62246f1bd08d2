"""Deterministic (delta, sigma)-Loewner chains by composition of step maps.

A chain on a partition ``0 = t_0 < ... < t_N`` is ``G = Gbar_N o ... o Gbar_1``,
each step map approximating the flow over ``[t_{n-1}, t_n]`` driven by the
increment ``du = u(t_n) - u(t_{n-1})``.  Joint points are pull-backs of the
source ``a = 0`` (half-plane chart) through inverse step maps.

Three step variants are provided:

* ``LINEAR``: exact flow of ``delta + (du/dt) sigma`` (numerical ODE),
* ``PIECEWISE``: ``H_du[sigma] o H_dt[delta]`` (driver constant, jump at the end),
* ``CLASSIFIED``: split ``v = delta + (du/dt) sigma`` as ``dbar + sbar`` where
  ``dbar`` is a Moebius conjugate of the chordal, dipolar or radial drift with
  zeros shared with ``v`` and ``sbar`` is complete; both flows are closed form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .charts import Chart, transition, unwrap_log
from .fieldalg import FieldKind, WittField, delta3
from .flows import (
    FlowExit,
    MoebiusMap,
    flow_point,
    mobius_of_complete,
    template_flow,
)

SOURCE = 0.0 + 0.0j
TEMPLATE_FIELDS = {
    0: WittField({-2: 2.0}),
    1: WittField({-2: 2.0, 0: -2.0}),
    2: WittField({-2: 2.0, 0: 2.0}),
}
ODE_KIND = -1


class Variant(str, Enum):
    LINEAR = "linear"
    PIECEWISE = "piecewise"
    CLASSIFIED = "classified"


class SwallowedPoint(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"point swallowed at step {step}")
        self.step = step


class StepUnderflow(RuntimeError):
    pass


# field splitting --------------------------------------------------------


def pushforward_fix0(v: WittField, alpha: float, beta: float) -> WittField:
    """Pushforward by ``M(z) = z / (alpha + beta z)``, which fixes the source.

    ``l_n`` maps to ``alpha**n w**(n+1) (1 - beta w)**(1-n)``.
    """
    out: dict[int, float] = {}
    for n, c in v.coeffs.items():
        pref = c * alpha ** n
        for k in range(0, 2 - n):
            out[n + k] = out.get(n + k, 0.0) + pref * math.comb(1 - n, k) * (-beta) ** k
    return WittField(out)


@dataclass(frozen=True)
class Template:
    """Semicomplete field ``lam * M_* (classical drift of ``kind``)``."""

    kind: int
    lam: float
    m: MoebiusMap

    @property
    def alpha_beta(self) -> tuple[float, float]:
        # m = [[1, 0], [beta, alpha]] / sqrt(alpha)
        s = self.m.a
        return self.m.d / s, self.m.c / s

    def field(self) -> WittField:
        alpha, beta = self.alpha_beta
        return pushforward_fix0(TEMPLATE_FIELDS[self.kind], alpha, beta) * self.lam

    def flow(self, s: float, z):
        minv = self.m.inverse()
        return self.m(template_flow(self.kind, self.lam * s, minv(z)))


def _fix0_map(alpha: float, beta: float) -> MoebiusMap:
    return MoebiusMap.normalized(1.0, 0.0, beta, alpha)


def split_field(v: WittField) -> tuple[Template, WittField]:
    """Split a semicomplete ``v`` into a classical template plus a complete rest."""
    cls = delta3(v)
    v_m2 = v[-2]
    roots = np.roots([v_m2, v[-1], v[0], v[1]])
    if cls.kind is FieldKind.HYPERBOLIC:
        r = np.sort(roots.real)[::-1]
        alpha, beta = (r[0] - r[-1]) / 2, (r[0] + r[-1]) / 2
        kind = 1
    elif cls.kind is FieldKind.ELLIPTIC:
        rc = roots[np.argmin(roots.imag)]
        alpha, beta = -rc.imag, rc.real
        kind = 2
        if not alpha > 0:
            # rounding put the pair on the real axis; fall back to parabolic
            kind = 0
    else:
        kind = 0
    if kind == 0:
        if len(roots) < 3:
            beta = 0.0 if len(roots) < 2 else float(np.mean(roots.real))
        else:
            pairs = [(0, 1), (0, 2), (1, 2)]
            i, j = min(pairs, key=lambda p: abs(roots[p[0]] - roots[p[1]]))
            beta = float((roots[i].real + roots[j].real) / 2)
        alpha = 1.0
    alpha, beta = float(alpha), float(beta)
    lam = v_m2 * alpha * alpha / 2
    tpl = Template(kind, lam, _fix0_map(alpha, beta))
    rest = v - tpl.field()
    rest = WittField({n: c for n, c in rest.coeffs.items() if n != -2})
    return tpl, rest


def as_template(delta: WittField, rtol: float = 1e-12) -> Optional[Template]:
    """Return ``delta`` as a template if its complete remainder vanishes."""
    tpl, rest = split_field(delta)
    if rest.max_abs() <= rtol * max(1.0, delta.max_abs()):
        return tpl
    return None


# step maps ----------------------------------------------------------------


def _branch(g2: complex, z: complex) -> complex:
    g = cmath.sqrt(g2)
    if abs(g.imag) > 1e-12 * abs(g):
        return g if g.imag > 0 else -g
    return g if g.real * z.real >= 0 else -g


def _sqrt_branch_vec(g2: np.ndarray, z: np.ndarray) -> np.ndarray:
    g = np.sqrt(g2)
    interior = np.abs(g.imag) > 1e-12 * np.abs(g)
    flip = np.where(interior, g.imag < 0, g.real * z.real < 0)
    return np.where(flip, -g, g)


@dataclass
class StepMap:
    """One step ``z -> Q(F(P(z)))`` with Moebius ``P, Q`` and a semicomplete flow ``F``."""

    variant: Variant
    dt: float
    du: float
    delta: WittField
    sigma: WittField
    jump_first: bool = False
    kind: int = field(init=False)
    p: MoebiusMap = field(init=False)
    q: MoebiusMap = field(init=False)
    tau: float = field(init=False)
    ode_field: Optional[WittField] = field(init=False, default=None)

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError("dt must be nonnegative")
        ident = MoebiusMap()
        if self.dt == 0:
            if self.du != 0:
                raise ValueError("a jump needs a positive time step")
            self.kind, self.p, self.q, self.tau = 0, ident, ident, 0.0
            return
        if self.variant is Variant.LINEAR:
            v = self.delta + self.sigma * (self.du / self.dt)
            self.kind, self.p, self.q, self.tau = ODE_KIND, ident, ident, self.dt
            self.ode_field = v
            return
        if self.variant is Variant.PIECEWISE:
            tpl = as_template(self.delta)
            jump = mobius_of_complete(self.sigma, self.du)
            if tpl is None:
                self.kind, self.tau, self.ode_field = ODE_KIND, self.dt, self.delta
                inner, outer = ident, ident
            else:
                self.kind, self.tau = tpl.kind, tpl.lam * self.dt
                inner, outer = tpl.m.inverse(), tpl.m
        else:
            v = self.delta + self.sigma * (self.du / self.dt)
            tpl, rest = split_field(v)
            jump = mobius_of_complete(rest, self.dt)
            self.kind, self.tau = tpl.kind, tpl.lam * self.dt
            inner, outer = tpl.m.inverse(), tpl.m
        if self.jump_first:
            self.p, self.q = inner @ jump, outer
        else:
            self.p, self.q = inner, jump @ outer

    # core flows --------------------------------------------------------
    def _flow(self, s: float, z: complex) -> complex:
        if self.kind == ODE_KIND:
            return flow_point(self.ode_field, s, z)
        return template_flow(self.kind, s, z)

    def __call__(self, z: complex) -> complex:
        return self.q(self._flow(self.tau, self.p(z)))

    def derivative(self, z: complex) -> complex:
        x = self.p(z)
        if self.kind == ODE_KIND:
            h = 1e-6 * (1 + abs(x))
            df = (self._flow(self.tau, x + h) - self._flow(self.tau, x - h)) / (2 * h)
            y = self._flow(self.tau, x)
        else:
            y = template_flow(self.kind, self.tau, x)
            if self.kind == 0:
                df = x / y
            elif self.kind == 1:
                df = math.exp(-4 * self.tau) * x / y
            else:
                df = math.exp(4 * self.tau) * x / y
        return self.q.derivative(y) * df * self.p.derivative(z)

    def inverse(self, w: complex) -> complex:
        q, p = self.q, self.p
        x = (q.d * w - q.b) / (q.a - q.c * w)
        if self.kind == ODE_KIND:
            y = ode_inverse(self.ode_field, self.tau, x)
        else:
            y = template_flow(self.kind, -self.tau, x)
        return (p.d * y - p.b) / (p.a - p.c * y)

    def inverse_vec(self, w: np.ndarray) -> np.ndarray:
        q, p = self.q, self.p
        x = (q.d * w - q.b) / (q.a - q.c * w)
        if self.kind == ODE_KIND:
            y = np.array([self.inverse(complex(wi)) for wi in w])
            return y
        if self.kind == 0:
            g2 = x * x - 4 * self.tau
        elif self.kind == 1:
            g2 = 1 - math.exp(4 * self.tau) * (1 - x * x)
        else:
            g2 = math.exp(-4 * self.tau) * (1 + x * x) - 1
        y = _sqrt_branch_vec(g2, x)
        return (p.d * y - p.b) / (p.a - p.c * y)

    def inverse_data(self) -> tuple:
        """Flat tuple used by the scalar pull-back loop."""
        q, p = self.q, self.p
        if self.kind == 1:
            c = math.exp(4 * self.tau)
        elif self.kind == 2:
            c = math.exp(-4 * self.tau)
        else:
            c = 4 * self.tau
        return (q.a, q.b, q.c, q.d, self.kind, c, p.a, p.b, p.c, p.d)

    def reversed(self) -> "StepMap":
        """Exact inverse step in the reverse chain ``(-delta, sigma, -du)``."""
        return StepMap(self.variant, self.dt, -self.du, -self.delta, self.sigma, not self.jump_first)


def step_map(delta: WittField, sigma: WittField, dt: float, du: float, variant=Variant.CLASSIFIED) -> StepMap:
    return StepMap(Variant(variant), float(dt), float(du), delta, sigma)


def inverse_from_source(v: WittField, s: float, frac: float = 1e-6) -> complex:
    """``H_{-s}[v](0)``: leave the pole along the flow line, then integrate."""
    s0 = frac * s
    z0 = 1j * math.sqrt(2 * v[-2] * s0) - (2.0 / 3.0) * v[-1] * s0
    return flow_point(v, -(s - s0), z0)


def ode_inverse(v: WittField, s: float, x: complex) -> complex:
    """``H_{-s}[v](x)``; boundary points that reach the pole continue up the slit."""
    if x == SOURCE:
        return inverse_from_source(v, s)
    try:
        return flow_point(v, -s, x)
    except FlowExit as exc:
        rest = s - abs(exc.t_exit)
        if abs(complex(x).imag) > 1e-12 * abs(x) or rest <= 0:
            raise
        return inverse_from_source(v, rest)


def delta_inverse_from_source(delta: WittField, s: float) -> complex:
    """Tip ``H_s[delta]^{-1}(a)`` of the arc grown by ``delta`` in time ``s``."""
    if s == 0:
        return SOURCE
    tpl = as_template(delta)
    if tpl is not None:
        return tpl.flow(-s, SOURCE)
    return inverse_from_source(delta, s)


# chains -------------------------------------------------------------------


@dataclass
class Partition:
    times: list[float]

    def __post_init__(self):
        t = list(map(float, self.times))
        if len(t) < 2 or t[0] != 0.0 or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("partition must start at 0, be strictly increasing and have N >= 1")
        self.times = t

    @property
    def n(self) -> int:
        return len(self.times) - 1

    @classmethod
    def uniform(cls, t_end: float, n: int) -> "Partition":
        return cls([t_end * k / n for k in range(n + 1)])


@dataclass
class Trace:
    """Joint points ``(index, kind, t, position)`` in ``chart`` and optional arcs."""

    points: list[tuple[int, str, float, complex]]
    chart: Chart = Chart.HALFPLANE
    arcs: list[np.ndarray] = field(default_factory=list)
    truncated: bool = False
    dt_history: list[float] = field(default_factory=list)

    def kind(self, k: str) -> list[complex]:
        return [p[3] for p in self.points if p[1] == k]

    def a_points(self) -> np.ndarray:
        return np.array(self.kind("a"), dtype=complex)

    def b_points(self) -> np.ndarray:
        return np.array(self.kind("b"), dtype=complex)


@dataclass
class LoewnerChain:
    delta: WittField
    sigma: WittField
    chart: Chart = Chart.HALFPLANE
    variant: Variant = Variant.CLASSIFIED
    steps: list[StepMap] = field(default_factory=list)
    times: list[float] = field(default_factory=lambda: [0.0])
    values: list[float] = field(default_factory=lambda: [0.0])
    swallow_eps: float = 1e-9
    _inv: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        self.chart = Chart.parse(self.chart)
        self.variant = Variant(self.variant)
        self._inv = [st.inverse_data() for st in self.steps]

    @property
    def n(self) -> int:
        return len(self.steps)

    @property
    def t_end(self) -> float:
        return self.times[-1]

    def make_step(self, dt: float, du: float) -> StepMap:
        return StepMap(self.variant, dt, du, self.delta, self.sigma)

    def append(self, step: StepMap, t: float, u: float) -> None:
        self.steps.append(step)
        self._inv.append(step.inverse_data())
        self.times.append(float(t))
        self.values.append(float(u))

    # evaluation -------------------------------------------------------
    def evaluate(self, z: complex, upto: Optional[int] = None) -> complex:
        """``G = Gbar_n o ... o Gbar_1`` in the half-plane chart."""
        n = self.n if upto is None else upto
        w = complex(z)
        for k in range(n):
            w = self.steps[k](w)
            if abs(w) < self.swallow_eps or (z.imag > 0 and w.imag <= 0):
                raise SwallowedPoint(k + 1)
        return w

    def evaluate_with_log_derivative(self, z: complex, upto: Optional[int] = None) -> tuple[complex, complex]:
        """``(G(z), log G'(z))`` with the logarithm accumulated step by step."""
        n = self.n if upto is None else upto
        w, dlog = complex(z), 0j
        for k in range(n):
            st = self.steps[k]
            dlog += cmath.log(st.derivative(w))
            w = st(w)
            if abs(w) < self.swallow_eps or (z.imag > 0 and w.imag <= 0):
                raise SwallowedPoint(k + 1)
        return w, dlog

    def evaluate_inverse(self, w: complex, upto: Optional[int] = None) -> complex:
        return self.pullback(w, self.n if upto is None else upto)

    def pullback(self, w: complex, n: int) -> complex:
        """``Gbar_1^{-1} o ... o Gbar_n^{-1}(w)``."""
        steps, inv = self.steps, self._inv
        w = complex(w)
        sqrt, exp = cmath.sqrt, math.exp
        for k in range(n - 1, -1, -1):
            qa, qb, qc, qd, kind, c, pa, pb, pc, pd = inv[k]
            if kind < 0:
                w = steps[k].inverse(w)
                continue
            x = (qd * w - qb) / (qa - qc * w)
            if kind == 0:
                g = sqrt(x * x - c)
            elif kind == 1:
                g = sqrt(1 - c * (1 - x * x))
            else:
                g = sqrt(c * (1 + x * x) - 1)
            gi = g.imag
            if gi > 1e-12 * abs(g):
                pass
            elif gi < -1e-12 * abs(g):
                g = -g
            elif g.real * x.real < 0:
                g = -g
            w = (pd * g - pb) / (pa - pc * g)
        return w

    def to_chart(self, w):
        return transition(Chart.HALFPLANE, self.chart, w)

    def a_point(self, n: int) -> complex:
        return self.pullback(SOURCE, n)

    def b_point(self, n: int) -> complex:
        dt = self.times[n + 1] - self.times[n]
        return self.pullback(delta_inverse_from_source(self.delta, dt), n)


def build_chain(
    delta: WittField,
    sigma: WittField,
    driver: Callable[[float], float],
    partition: Partition,
    variant=Variant.CLASSIFIED,
    chart=Chart.HALFPLANE,
) -> LoewnerChain:
    driver = _as_callable(driver)
    chain = LoewnerChain(delta, sigma, chart, variant)
    chain.values[0] = float(driver(0.0))
    for t0, t1 in zip(partition.times, partition.times[1:]):
        u1 = float(driver(t1))
        chain.append(chain.make_step(t1 - t0, u1 - chain.values[-1]), t1, u1)
    return chain


def _as_callable(driver):
    if hasattr(driver, "value_at"):
        return driver.value_at
    return lambda t: driver(float(t))


def evaluate(chain: LoewnerChain, z: complex) -> complex:
    return chain.evaluate(z)


def evaluate_inverse(chain: LoewnerChain, w: complex) -> complex:
    return chain.evaluate_inverse(w)


# joint points -------------------------------------------------------------


def joint_points_h(chain: LoewnerChain, include_b: bool = False, arc_samples: int = 0):
    """All a-points (and optionally b-points and arcs) in the half-plane chart.

    The pull-backs share work: step ``k`` is applied to every point whose
    pull-back passes through it, one vectorized call per step.
    """
    n = chain.n
    a = np.zeros(n + 1, dtype=complex)
    nb = n if include_b else 0
    m = max(arc_samples, 0)
    b = np.zeros(nb, dtype=complex)
    arcs = np.zeros((nb, m), dtype=complex) if m else None
    dts = np.diff(chain.times)
    if include_b:
        for j in range(n):
            b[j] = delta_inverse_from_source(chain.delta, dts[j])
            if m:
                for i in range(m):
                    arcs[j, i] = delta_inverse_from_source(chain.delta, dts[j] * i / (m - 1)) if m > 1 else b[j]
    for k in range(n, 0, -1):
        st = chain.steps[k - 1]
        a[k:] = st.inverse_vec(a[k:])
        if include_b and k <= n - 1:
            b[k:] = st.inverse_vec(b[k:])
            if m:
                sub = arcs[k:].ravel()
                arcs[k:] = st.inverse_vec(sub).reshape(arcs[k:].shape)
    return a, b, arcs


def trace_joints(chain: LoewnerChain, include_b: bool = False, arc_samples: int = 0) -> Trace:
    if chain.n == 0:
        raise ValueError("empty chain")
    a, b, arcs = joint_points_h(chain, include_b, arc_samples)
    pts: list[tuple[int, str, float, complex]] = []
    for i, w in enumerate(a):
        pts.append((i, "a", chain.times[i], w))
        if include_b and i < len(b):
            pts.append((i, "b", chain.times[i + 1], b[i]))
    chart = chain.chart
    if chart is not Chart.HALFPLANE:
        conv = [complex(transition(Chart.HALFPLANE, chart, p[3])) for p in pts]
        if chart is Chart.LOG:
            conv = unwrap_log(conv)
        pts = [(p[0], p[1], p[2], c) for p, c in zip(pts, conv)]
    arc_list = []
    if arcs is not None:
        for row in arcs:
            arc_list.append(np.array([transition(Chart.HALFPLANE, chart, complex(w)) for w in row]))
    return Trace(pts, chart, arc_list, dt_history=[st.dt for st in chain.steps])


# distances ---------------------------------------------------------------


def chart_distance(chart: Chart, w1: complex, w2: complex) -> float:
    p1 = transition(Chart.HALFPLANE, chart, w1)
    p2 = transition(Chart.HALFPLANE, chart, w2)
    if chart is Chart.LOG:
        d = p1 - p2
        d = d - 2 * math.pi * round(d.real / (2 * math.pi))
        return abs(d)
    return abs(p1 - p2)


# routine R ---------------------------------------------------------------


@dataclass
class PendingPoint:
    t_prime: float = 0.0
    B_prime: float = 0.0
    active: bool = False


class RecursionCap(RuntimeError):
    pass


class _Stop(Exception):
    pass


class RoutineR:
    """Recursive resolution-controlled partition builder.

    ``metric`` selects the spacing measured for a candidate step from the last
    accepted time ``t_x`` to ``t_y``: ``"a"`` consecutive a-points, ``"b"`` the
    arc ``d(gamma_{x,b}, gamma_{x,a})``, ``"sum"`` the two-leg sum
    ``d(gamma_{y,a}, gamma_{x,b}) + d(gamma_{x,b}, gamma_{x,a})``.
    """

    MAX_DEPTH = 64

    def __init__(self, chain: LoewnerChain, driver, d_min: float, d_max: float,
                 n_max: int = 10 ** 9, metric: str = "a"):
        if not 0 < d_min < d_max:
            raise ValueError("need 0 < d_min < d_max")
        if metric not in ("a", "b", "sum"):
            raise ValueError(f"unknown metric {metric!r}")
        self.chain = chain
        self.driver = _as_callable(driver)
        self.d_min, self.d_max = d_min, d_max
        self.n_max = n_max
        self.metric = metric
        self.pending = PendingPoint()
        self.last_a = chain.a_point(chain.n)
        self.truncated = False
        self.evaluations = 0
        # exact dyadic time of the last accepted knot; floats run out of
        # resolution where the slit nearly touches itself
        self.t_x = Fraction(chain.times[-1])
        self.halvings = 0

    def _candidate(self, t_y: float, b_y: float):
        ch = self.chain
        dt = float(t_y - self.t_x)
        step = ch.make_step(dt, b_y - ch.values[-1])
        n = ch.n
        self.evaluations += 1
        if self.metric == "a":
            w = ch.pullback(step.inverse(SOURCE), n)
            d = chart_distance(ch.chart, w, self.last_a)
        else:
            wb = ch.pullback(delta_inverse_from_source(ch.delta, dt), n)
            d = chart_distance(ch.chart, wb, self.last_a)
            w = None
            if self.metric == "sum":
                w = ch.pullback(step.inverse(SOURCE), n)
                d += chart_distance(ch.chart, w, wb)
            if w is None:
                w = ch.pullback(step.inverse(SOURCE), n)
        return step, w, d

    def _commit(self, step, w, t_y, b_y):
        self.chain.append(step, float(t_y), b_y)
        self.t_x = t_y
        self.last_a = w
        if self.chain.n >= self.n_max:
            self.truncated = True
            raise _Stop

    def _run(self, t_y: Fraction, b_y: float) -> bool:
        while True:
            step, w, d = self._candidate(t_y, b_y)
            if d > self.d_max:
                self.halvings += 1
                if self.halvings > self.MAX_DEPTH:
                    raise RecursionCap("recursion depth exceeded; d_min too small for this driver")
                left = self.pending.t_prime if self.pending.active else self.t_x
                t_z = (left + t_y) / 2
                b_z = float(self.driver(t_z))
                self._run(t_z, b_z)
                continue
            self.halvings = 0
            if d >= self.d_min:
                self._commit(step, w, t_y, b_y)
                self.pending = PendingPoint()
                return False
            self.pending = PendingPoint(t_y, b_y, True)
            return True

    def run(self, t_end: float, finalize: bool = True) -> bool:
        """Fill ``[t_x, t_end]``; returns True if stopped by ``n_max``.

        With ``finalize=False`` a too-short final point stays pending so a
        later call can continue exactly where this one stopped.
        """
        t_end = Fraction(t_end)
        try:
            short = self._run(t_end, float(self.driver(t_end)))
            if finalize and short and self.t_x < t_end:
                step, w, _ = self._candidate(t_end, float(self.driver(t_end)))
                self._commit(step, w, t_end, float(self.driver(t_end)))
        except _Stop:
            pass
        return self.truncated


def adaptive_chain(delta, sigma, driver, d_min, d_max, chart=Chart.HALFPLANE, t_end=1.0,
                   variant=Variant.CLASSIFIED, metric="a", n_max=10 ** 9) -> tuple[LoewnerChain, bool]:
    if not 0 < d_min < d_max:
        raise ValueError("need 0 < d_min < d_max")
    driver = _as_callable(driver)
    chain = LoewnerChain(delta, sigma, chart, variant, swallow_eps=10 * d_min)
    chain.values[0] = float(driver(0.0))
    r = RoutineR(chain, driver, d_min, d_max, n_max=n_max, metric=metric)
    truncated = r.run(t_end)
    return chain, truncated


def adaptive_partition(delta, sigma, driver, d_min, d_max, chart=Chart.HALFPLANE, t_end=1.0,
                       variant=Variant.CLASSIFIED, metric="a") -> tuple[Partition, Trace]:
    chain, truncated = adaptive_chain(delta, sigma, driver, d_min, d_max, chart, t_end, variant, metric)
    tr = trace_joints(chain)
    tr.truncated = truncated
    return Partition(chain.times), tr


# reversal -----------------------------------------------------------------


def reverse_chain(chain: LoewnerChain, T: Optional[float] = None) -> LoewnerChain:
    """Chain of ``(-delta, sigma)`` driven by ``u_{T-t} - u_T``.

    The reversed driver approximant jumps at the start of each interval, so
    every reversed step is the exact inverse of the matching original step and
    the time-``T`` maps are mutually inverse.
    """
    if T is None:
        T = chain.t_end
    try:
        n = next(i for i, t in enumerate(chain.times) if abs(t - T) <= 1e-12 * max(1.0, T))
    except StopIteration:
        raise ValueError("T must be a partition knot of the chain") from None
    out = LoewnerChain(-chain.delta, chain.sigma, chain.chart, chain.variant, swallow_eps=chain.swallow_eps)
    u_T = chain.values[n]
    for k in range(n, 0, -1):
        st = chain.steps[k - 1]
        t_new = T - chain.times[k - 1]
        out.append(st.reversed(), t_new, chain.values[k - 1] - u_T)
    return out
