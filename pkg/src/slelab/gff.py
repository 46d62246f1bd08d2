"""Gaussian free field side of the SLE coupling.

Covariance kernels ``Gamma`` are scalars in both arguments; the mean ``eta``
is a pre-pre-Schwarzian of order ``(mu, conj mu)`` and transforms as
``eta^psi(z) = eta^H(tau(z)) + 2 Re(mu log tau'(z))``.

The coupling of ``(delta, sigma)``-SLE with the field is equivalent to

    L_delta eta + 1/2 L_sigma^2 eta = 0
    L_delta Gamma(z, w) + L_sigma eta(z) L_sigma eta(w) = 0
    L_sigma Gamma(z, w) = 0

(up to a constant, resp. ``beta(z) + beta(w)``, for Neumann-type spaces).
``eta`` is built from its holomorphic part ``eta = 2 Re eta+`` with
``eta+' = (j+ - mu sigma') / sigma``, where ``j+ = L_sigma eta+`` is
``-i/z + i alpha`` (forward) or ``-1/z - alpha`` (reverse) in the half-plane.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .charts import (Chart, PpsOrder, field_derivative_in_chart, field_in_chart, log_tau_prime,
                     transition)
from .fieldalg import Direction, WittField, ell
from .drivers import stream
from .flows import generator_matrix, mobius_of_complete
from .zipper import LoewnerChain, _sqrt_branch_vec, split_field

H_FD = 1e-5
# outer step for derivatives of finite-difference values; roundoff of the
# inner difference would dominate at H_FD
H_FD_NESTED = 1e-3


# kernels ------------------------------------------------------------------


class Kernel(str, Enum):
    D = "GammaD"
    N = "GammaN"
    DN = "GammaDN"
    TW = "GammaTw"


_DEFINING_CHART = {Kernel.D: Chart.HALFPLANE, Kernel.N: Chart.HALFPLANE,
                   Kernel.DN: Chart.STRIP, Kernel.TW: Chart.LOG}


def _log_abs(z) -> float:
    return math.log(abs(z))


def _gamma_d_h(z, w):
    return -_log_abs(z - w) + _log_abs(z - w.conjugate())


def _gamma_d_disk(z, w):
    return -_log_abs(z - w) + _log_abs(1 - z * w.conjugate())


def _gamma_n_h(z, w):
    return -_log_abs(z - w) - _log_abs(z - w.conjugate())


def _gamma_dn_strip(z, w):
    return -_log_abs(cmath.tanh((z - w) / 4)) + _log_abs(cmath.tanh((z - w.conjugate()) / 4))


def _gamma_dn_h(z, w):
    sz, sw = cmath.sqrt(1 - z * z), cmath.sqrt(1 - w * w)
    a = 1 - z.conjugate() * w + sz.conjugate() * sw
    b = 1 - z * w + sz * sw
    return -_log_abs(z - w) + _log_abs(z - w.conjugate()) - _log_abs(a) + _log_abs(b)


def _gamma_tw_log(z, w):
    return -_log_abs(cmath.tan((z - w) / 4)) + _log_abs(cmath.tan((z - w.conjugate()) / 4))


def _gamma_tw_disk(z, w):
    # double-valued: the sign flips when either point winds around the centre
    rz, rw = cmath.sqrt(z), cmath.sqrt(w)
    return (-_log_abs(rz - rw) + _log_abs(rz + rw)
            + _log_abs(1 - rz * rw.conjugate()) - _log_abs(1 + rz * rw.conjugate()))


def _gamma_tw_h(z, w):
    sz, sw = cmath.sqrt(1 + z * z), cmath.sqrt(1 + w * w)
    a = 1 + z.conjugate() * w + sz.conjugate() * sw
    b = 1 + z * w + sz * sw
    return -_log_abs(z - w) + _log_abs(z - w.conjugate()) - _log_abs(a) + _log_abs(b)


_CLOSED_FORMS: dict[tuple[Kernel, Chart], Callable] = {
    (Kernel.D, Chart.HALFPLANE): _gamma_d_h,
    (Kernel.D, Chart.DISK): _gamma_d_disk,
    (Kernel.N, Chart.HALFPLANE): _gamma_n_h,
    (Kernel.DN, Chart.STRIP): _gamma_dn_strip,
    (Kernel.DN, Chart.HALFPLANE): _gamma_dn_h,
    (Kernel.TW, Chart.LOG): _gamma_tw_log,
    (Kernel.TW, Chart.DISK): _gamma_tw_disk,
    (Kernel.TW, Chart.HALFPLANE): _gamma_tw_h,
}


def kernel_eval(k: Kernel, chart, z: complex, w: complex,
                beta: Optional[Callable[[complex], float]] = None) -> float:
    """Closed-form ``Gamma^psi(z, w)``; charts without one go through the defining chart.

    ``beta`` adds the ``beta(z) + beta(w)`` freedom of ``GammaN``.
    """
    k, chart = Kernel(k), Chart.parse(chart)
    z, w = complex(z), complex(w)
    if z == w:
        raise ValueError("kernel evaluated on the diagonal")
    f = _CLOSED_FORMS.get((k, chart))
    if f is not None:
        val = f(z, w)
    else:
        home = _DEFINING_CHART[k]
        val = _CLOSED_FORMS[(k, home)](complex(transition(chart, home, z)),
                                       complex(transition(chart, home, w)))
    if beta is not None:
        if k is not Kernel.N:
            raise ValueError("beta freedom only applies to GammaN")
        val += beta(z) + beta(w)
    return val


# eta catalog ----------------------------------------------------------------


def _sigma_type(sigma: WittField) -> str:
    """``"1"``, ``"1-z2"`` or ``"1+z2"`` for ``-sqrt(kappa)`` times those polynomials."""
    s_m1, s0, s1 = sigma[-1], sigma[0], sigma[1]
    if s0 != 0 or sigma.support - {-1, 0, 1}:
        raise ValueError("sigma must be a multiple of l_-1, l_-1 - l_1 or l_-1 + l_1")
    if s1 == 0:
        return "1"
    if math.isclose(s1, -s_m1, rel_tol=1e-12):
        return "1-z2"
    if math.isclose(s1, s_m1, rel_tol=1e-12):
        return "1+z2"
    raise ValueError("sigma must be a multiple of l_-1, l_-1 - l_1 or l_-1 + l_1")


@dataclass
class CouplingCase:
    """A ``(delta, sigma)`` pair with its field ``(Gamma, eta)``."""

    name: str
    delta: WittField
    sigma: WittField
    kappa: float
    nu: float
    direction: Direction
    alpha: float
    kernel: Kernel
    chart: Chart = Chart.HALFPLANE  # defining chart of eta
    order: PpsOrder = field(init=False)

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        self.direction = Direction(self.direction)
        self.chart = Chart.parse(self.chart)
        self.order = PpsOrder.for_sle(self.kappa, self.direction is Direction.FORWARD)

    @property
    def forward(self) -> bool:
        return self.direction is Direction.FORWARD

    @property
    def mu(self) -> complex:
        return self.order.mu

    @property
    def mu_star(self) -> complex:
        return self.order.mu_star

    @property
    def neumann(self) -> bool:
        """Residuals are taken modulo constants / ``beta(z) + beta(w)``."""
        return self.kernel is Kernel.N

    # eta in the defining chart --------------------------------------------
    def eta_home(self, z: complex) -> float:
        z = complex(z)
        rk, a = math.sqrt(self.kappa), self.alpha
        if self.chart is Chart.STRIP:
            return -2 / rk * cmath.phase(cmath.tanh(z / 4)) + a / rk * z.imag
        if self.chart is Chart.LOG:
            return -2 / rk * cmath.phase(cmath.tan(z / 4)) + a / rk * z.imag
        if z.imag <= 0:
            raise ValueError("eta is evaluated at interior points only")
        kind = _sigma_type(self.sigma)
        if self.forward:
            chi = self.order.mu.imag * 2
            val = -2 / rk * cmath.phase(z)
            if kind == "1":
                return val + 2 * a / rk * z.imag
            if kind == "1-z2":
                return (val + (1 / rk + chi) * cmath.phase(1 - z * z)
                        + 2 * a / rk * cmath.atanh(z).imag)
            # arg(1 + z^2) split so the cut runs from i straight up
            arg = cmath.phase(1 - 1j * z) + cmath.phase(1 + 1j * z)
            return val + (1 / rk + chi) * arg + 2 * a / rk * cmath.atan(z).imag
        q = self.order.mu.real * 2
        val = 2 / rk * _log_abs(z)
        if kind == "1":
            return val + 2 * a / rk * z.real
        if kind == "1-z2":
            return (val - (1 / rk + q) * _log_abs(1 - z * z)
                    + 2 * a / rk * cmath.atanh(z).real)
        re_atan = 0.5 * (cmath.phase(1 + 1j * z) - cmath.phase(1 - 1j * z))
        return val - (1 / rk + q) * _log_abs(1 + z * z) + 2 * a / rk * re_atan

    @property
    def winding_coefficient(self) -> float:
        """Coefficient of the multivalued ``arg(1 + i z)`` in the half-plane eta.

        Radial-type eta winds around the interior fixed point ``i``; paths that
        circle it need the continued branch rather than the principal one.
        """
        if self.chart is not Chart.HALFPLANE or _sigma_type(self.sigma) != "1+z2":
            return 0.0
        rk = math.sqrt(self.kappa)
        if self.forward:
            return 1 / rk + self.order.mu.imag * 2
        return self.alpha / rk

    def j_plus(self, z: complex) -> complex:
        """``L_sigma eta+`` in the defining chart and its derivative."""
        a = self.alpha
        if self.chart is Chart.STRIP:
            s = cmath.sinh(z / 2)
            return -1j / s + 1j * a, 0.5j * cmath.cosh(z / 2) / (s * s)
        if self.chart is Chart.LOG:
            s = cmath.sin(z / 2)
            return -1j / s + 1j * a, 0.5j * cmath.cos(z / 2) / (s * s)
        if self.forward:
            return -1j / z + 1j * a, 1j / (z * z)
        return -1 / z - a, 1 / (z * z)


def _sqk(kappa):
    return math.sqrt(kappa)


def coupling_case(name: str, direction="forward", kappa: float = 4.0, nu: float = 0.0,
                  xi: Optional[float] = None, delta0: float = 1.0, delta1: float = 0.3) -> CouplingCase:
    """Catalog entry.  ``xi`` parametrizes the fixed-time-change and
    fixed-point cases (defaults to ``nu``); ``delta0, delta1`` shape the
    generic ``kappa = 6`` drift."""
    d = Direction(direction)
    s = d.sign
    rk = _sqk(kappa)
    x = nu if xi is None else xi
    l = ell
    minus = l(-1) - l(1)
    plus = l(-1) + l(1)
    if name == "chordal":
        return CouplingCase(name, l(-2, 2 * s) - l(-1, nu), l(-1, -rk), kappa, nu, d, -nu / 2, _nd(d))
    if name == "chordal-tc":
        return CouplingCase(name, l(-2, 2 * s) + l(0, 2 * x), l(-1, -rk), kappa, x, d, 0.0, _nd(d))
    if name == "dipolar":
        return CouplingCase(name, (l(-2) - l(0)) * (2 * s) - minus * nu, minus * (-rk), kappa, nu, d,
                            -nu / 2, _nd(d))
    if name in ("fixed-pt-r", "fixed-pt-l"):
        m = 1 if name == "fixed-pt-r" else -1
        delta = (l(-2, 2 * s) + l(-1, m * (kappa - 6 * s)) + l(0, 2 * (3 * s - kappa + s * x))
                 + l(1, m * (-2 * s + kappa - 2 * s * x)))
        return CouplingCase(name, delta, minus * (-rk), kappa, x, d, m * (kappa - 6 * s) / 2, _nd(d))
    if name == "radial":
        return CouplingCase(name, (l(-2) + l(0)) * (2 * s) - plus * nu, plus * (-rk), kappa, nu, d,
                            -nu / 2, _nd(d))
    if name == "kappa6":
        if d is not Direction.FORWARD:
            raise ValueError("the generic kappa=6 case is forward only")
        return CouplingCase(name, l(-2, 2) + l(0, delta0) + l(1, delta1), l(-1, -rk), kappa, 0.0, d,
                            0.0, Kernel.D)
    if name == "dn":
        return CouplingCase(name, (l(-2) - l(0)) * 2 - minus * nu, minus * (-rk), kappa, nu,
                            Direction.FORWARD, -nu / 2, Kernel.DN, Chart.STRIP)
    if name == "twisted":
        return CouplingCase(name, (l(-2) + l(0)) * 2 - plus * nu, plus * (-rk), kappa, nu,
                            Direction.FORWARD, -nu / 2, Kernel.TW, Chart.LOG)
    raise ValueError(f"unknown coupling case {name!r}")


def _nd(d: Direction) -> Kernel:
    return Kernel.D if d is Direction.FORWARD else Kernel.N


TABLE_CASES = ("chordal", "chordal-tc", "dipolar", "fixed-pt-r", "fixed-pt-l", "radial")
ALL_CASES = TABLE_CASES + ("kappa6", "dn", "twisted")


def eta_eval(case: CouplingCase, chart, z: complex) -> float:
    """``eta^psi(z)`` with ``C = 0`` in the case's defining chart."""
    chart = Chart.parse(chart)
    home = case.chart
    if chart is home:
        return case.eta_home(z)
    # push through the half-plane hub: eta^psi = eta^home(T(z)) + 2 Re(mu log T'(z))
    # where T = tau_home^{-1} o tau_psi
    w = complex(transition(chart, home, z))
    log_d = log_tau_prime(chart, z) - log_tau_prime(home, w)
    return case.eta_home(w) + case.order.term(log_d)


# Lie derivatives -------------------------------------------------------------


def wirtinger(f: Callable[[complex], float], z: complex, h: Optional[float] = None) -> complex:
    """``d f / dz`` of a real function by central differences, one Richardson step."""
    z = complex(z)
    if h is None:
        h = H_FD * (1 + abs(z))

    def central(step):
        fx = (f(z + step) - f(z - step)) / (2 * step)
        fy = (f(z + 1j * step) - f(z - 1j * step)) / (2 * step)
        return 0.5 * (fx - 1j * fy)

    return (4 * central(h / 2) - central(h)) / 3


def lie_eta(v: WittField, eta: Callable[[complex], float], mu: complex, chart, z: complex) -> float:
    """``L_v eta = 2 Re(v d eta + mu v')`` for a real ``(mu, conj mu)`` form."""
    vz = field_in_chart(v, chart, z)
    dv = field_derivative_in_chart(v, chart, z)
    return 2 * (vz * wirtinger(eta, z) + mu * dv).real


def lie_scalar(v: WittField, f: Callable[[complex], float], chart, z: complex,
               h: Optional[float] = None) -> float:
    return 2 * (field_in_chart(v, chart, z) * wirtinger(f, z, h)).real


def lie_kernel(v: WittField, gamma: Callable[[complex, complex], float], chart, z: complex, w: complex) -> float:
    """``L_v Gamma(z, w)`` for a scalar kernel."""
    dz = wirtinger(lambda p: gamma(p, w), z)
    dw = wirtinger(lambda p: gamma(z, p), w)
    return 2 * (field_in_chart(v, chart, z) * dz + field_in_chart(v, chart, w) * dw).real


def lie_deriv(v: WittField, target, chart, *points) -> float:
    """Dispatch on ``target``: a ``CouplingCase`` (its eta) or a ``Kernel``."""
    chart = Chart.parse(chart)
    if isinstance(target, CouplingCase):
        return lie_eta(v, lambda p: eta_eval(target, chart, p), target.mu, chart, points[0])
    k = Kernel(target)
    return lie_kernel(v, lambda a, b: kernel_eval(k, chart, a, b), chart, points[0], points[1])


# residuals -----------------------------------------------------------------


def _fit_separable(r: np.ndarray, pairs: list[tuple[int, int]], n: int) -> np.ndarray:
    """Residual of the least-squares fit ``r_ij ~ b_i + b_j``."""
    a = np.zeros((len(pairs), n))
    for row, (i, j) in enumerate(pairs):
        a[row, i] += 1
        a[row, j] += 1
    coef, *_ = np.linalg.lstsq(a, r, rcond=None)
    return r - a @ coef


def residual_values(case: CouplingCase, points: Sequence[complex], chart=None,
                    method: str = "fd") -> tuple[np.ndarray, np.ndarray, np.ndarray, list]:
    """Raw residuals of the three coupling equations.

    ``method="fd"`` differentiates ``eta`` and ``Gamma`` numerically;
    ``"closed"`` uses ``eta+'`` and ``j+`` in the defining chart.
    """
    chart = case.chart if chart is None else Chart.parse(chart)
    pts = [complex(p) for p in points]
    delta, sigma, mu = case.delta, case.sigma, case.mu

    def eta(p):
        return eta_eval(case, chart, p)

    def gamma(a, b):
        return kernel_eval(case.kernel, chart, a, b)

    if method == "fd":
        def j(p):
            return lie_eta(sigma, eta, mu, chart, p)

        r1 = np.array([lie_eta(delta, eta, mu, chart, p)
                       + 0.5 * lie_scalar(sigma, j, chart, p, H_FD_NESTED * (1 + abs(p)))
                       for p in pts])
    elif method == "closed":
        if chart is not case.chart:
            raise ValueError("closed-form residuals are evaluated in the defining chart")

        def j(p):
            return 2 * case.j_plus(p)[0].real

        r1 = []
        for p in pts:
            jp, djp = case.j_plus(p)
            sz, dsz = field_in_chart(sigma, chart, p), field_derivative_in_chart(sigma, chart, p)
            dz, ddz = field_in_chart(delta, chart, p), field_derivative_in_chart(delta, chart, p)
            deta = (jp - mu * dsz) / sz
            r1.append(2 * (dz * deta + mu * ddz).real + (sz * djp).real)
        r1 = np.array(r1)
    else:
        raise ValueError(f"unknown method {method!r}")

    jv = [j(p) for p in pts]
    pairs = list(itertools.combinations(range(len(pts)), 2))
    r2 = np.array([lie_kernel(delta, gamma, chart, pts[a], pts[b]) + jv[a] * jv[b] for a, b in pairs])
    r3 = np.array([lie_kernel(sigma, gamma, chart, pts[a], pts[b]) for a, b in pairs])
    return r1, r2, r3, pairs


def coupling_residuals(case: CouplingCase, points: Sequence[complex], chart=None,
                       method: str = "fd") -> tuple[float, float, float]:
    """Max-abs residuals ``(r1, r2, r3)``; Neumann cases fit out their freedom first."""
    r1, r2, r3, pairs = residual_values(case, points, chart, method)
    if case.neumann:
        r1 = r1 - r1.mean()
        r2 = _fit_separable(r2, pairs, len(points))
        r3 = _fit_separable(r3, pairs, len(points))
    return tuple(float(np.max(np.abs(r), initial=0.0)) for r in (r1, r2, r3))


def sample_points(case: CouplingCase, n: int, rng: np.random.Generator) -> list[complex]:
    """Interior points of the defining chart, away from poles and branch cuts."""
    out: list[complex] = []
    while len(out) < n:
        if case.chart is Chart.STRIP:
            z = complex(rng.uniform(-3, 3), rng.uniform(0.3, math.pi - 0.3))
        elif case.chart is Chart.LOG:
            z = complex(rng.uniform(-2.5, 2.5), rng.uniform(0.3, 2.5))
        else:
            z = complex(rng.uniform(-1.5, 1.5), rng.uniform(0.3, 2.0))
            if abs(z.real) < 0.15 and z.imag > 0.85:
                continue  # cut of the ramified radial eta
            if abs(z - 1j) < 0.3:
                continue
        if all(abs(z - p) > 0.05 for p in out):
            out.append(z)
    return out


# correlation functions ---------------------------------------------------------


def _matchings(items: tuple):
    """All partitions of ``items`` into pairs and singletons."""
    if not items:
        yield [], []
        return
    first, rest = items[0], items[1:]
    for pairs, singles in _matchings(rest):
        yield pairs, [first] + singles
    for k, other in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for pairs, singles in _matchings(remaining):
            yield [(first, other)] + pairs, singles


def schwinger(points: Sequence[complex], gamma: Callable[[complex, complex], float],
              eta: Callable[[complex], float]) -> float:
    """Wick sum over pairings (``Gamma``) and singletons (``eta``)."""
    pts = [complex(p) for p in points]
    if not 1 <= len(pts) <= 4:
        raise ValueError("schwinger supports 1 to 4 points")
    if len(set(pts)) != len(pts):
        raise ValueError("coincident points")
    total = 0.0
    for pairs, singles in _matchings(tuple(range(len(pts)))):
        term = 1.0
        for a, b in pairs:
            term *= gamma(pts[a], pts[b])
        for a in singles:
            term *= eta(pts[a])
        total += term
    return total


# martingale observable -------------------------------------------------------


def m1_eval(case: CouplingCase, chain: LoewnerChain, z: complex) -> float:
    """``(G_t^{-1})_* eta (z) = eta(G_t(z)) + 2 Re(mu log G_t'(z))`` in the half-plane."""
    if case.chart is not Chart.HALFPLANE:
        raise ValueError("m1_eval works in the half-plane chart")
    w, dlog = chain.evaluate_with_log_derivative(z)
    return case.eta_home(w) + case.order.term(dlog)


class Welford:
    """Streaming mean and variance; ``merge`` combines independent accumulators."""

    def __init__(self):
        self.n, self.mean, self.m2 = 0, 0.0, 0.0

    def add(self, x: float) -> None:
        self.n += 1
        d = x - self.mean
        self.mean += d / self.n
        self.m2 += d * (x - self.mean)

    def merge(self, other: "Welford") -> "Welford":
        out = Welford()
        out.n = self.n + other.n
        if out.n == 0:
            return out
        d = other.mean - self.mean
        out.mean = self.mean + d * other.n / out.n
        out.m2 = self.m2 + other.m2 + d * d * self.n * other.n / out.n
        return out

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1) / self.n)


@dataclass
class MartingaleResult:
    mean: float
    stderr: float
    eta0: float
    n_paths: int
    stopped: int
    flagged: bool
    offset: float = 0.0  # deterministic drift c t allowed for Neumann-type cases

    @property
    def target(self) -> float:
        return self.eta0 + self.offset

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == self.target else math.inf
        return abs(self.mean - self.target) / self.stderr


@dataclass
class McConfig:
    n_steps: int = 100
    d_min: float = 1e-3
    seed: int = 0
    chi_shift: float = 0.0  # nonzero values build a deliberately wrong observable


def _jump_arrays(sigma: WittField, du: np.ndarray):
    """Vectorized ``exp(du M)`` entries for a complete ``sigma``."""
    p, q, r, _ = generator_matrix(sigma)
    disc = p * p + q * r
    if disc > 0:
        w = math.sqrt(disc) * du
        ch, sh = np.cosh(w), np.sinh(w) / math.sqrt(disc)
    elif disc < 0:
        w = math.sqrt(-disc) * du
        ch, sh = np.cos(w), np.sin(w) / math.sqrt(-disc)
    else:
        ch, sh = np.ones_like(du), du
    return ch + sh * p, sh * q, sh * r, ch - sh * p


def generator_constant(case: CouplingCase, z: complex) -> float:
    """``L_delta eta + 1/2 L_sigma^2 eta`` at ``z``; a constant for Neumann-type cases."""
    r1, *_ = residual_values(case, [z], method="closed")
    return float(r1[0])


def mc_martingale(case: CouplingCase, z: complex, t: float, n_paths: int,
                  cfg: Optional[McConfig] = None) -> MartingaleResult:
    """Ensemble mean and standard error of the stopped ``M1_t(z)``.

    Paths use the piecewise step (flow along the template part of ``delta``,
    then its complete remainder, then jump along ``sigma``) with a standard
    Brownian driver, ``sqrt(kappa)`` sitting in ``sigma``.  A path is stopped when ``|G^H(z)|`` falls below ``10 d_min``
    and keeps its value at that step.  Path ``p`` draws from stream
    ``(seed, p)``, so ensembles split across workers merge exactly.

    For Neumann-type cases eta solves the generator equation only up to a
    constant ``c``, so the stopped mean is compared with ``eta(z) + c t``
    (exact when no path stops).
    """
    cfg = cfg or McConfig()
    if case.chart is not Chart.HALFPLANE:
        raise ValueError("mc_martingale works in the half-plane chart")
    order = case.order
    if cfg.chi_shift:
        order = PpsOrder(order.mu + 0.5j * cfg.chi_shift, order.mu_star - 0.5j * cfg.chi_shift)
    eta0 = case.eta_home(z)
    if t == 0:
        return MartingaleResult(eta0, 0.0, eta0, n_paths, 0, False)
    tpl, rest = split_field(case.delta)
    dt = t / cfg.n_steps
    # the complete part of delta (drift terms) runs as its own Moebius stage
    drift = mobius_of_complete(rest, dt) if rest.max_abs() > 0 else None
    du = np.array([stream(cfg.seed, p).normal(0.0, math.sqrt(dt), cfg.n_steps) for p in range(n_paths)])
    m, minv = tpl.m, tpl.m.inverse()
    tau = tpl.lam * dt
    grow = {0: 1.0, 1: math.exp(-4 * tau), 2: math.exp(4 * tau)}[tpl.kind]
    w = np.full(n_paths, complex(z))
    dlog = np.zeros(n_paths, dtype=complex)
    wind = case.winding_coefficient
    theta = np.full(n_paths, cmath.phase(1 + 1j * complex(z)))
    alive = np.ones(n_paths, dtype=bool)
    eps = 10 * cfg.d_min
    for k in range(cfg.n_steps):
        x = minv(w)
        dx = minv.derivative(w)
        if tpl.kind == 0:
            g2 = x * x + 4 * tau
        elif tpl.kind == 1:
            g2 = 1 - grow * (1 - x * x)
        else:
            g2 = grow * (1 + x * x) - 1
        g = _sqrt_branch_vec(g2, x)
        dg = grow * x / g
        y = m(g)
        dy = m.derivative(g)
        if drift is not None:
            dy = dy * drift.derivative(y)
            y = drift(y)
        a, b, c, d = _jump_arrays(case.sigma, du[:, k])
        w_new = (a * y + b) / (c * y + d)
        step_d = dx * dg * dy / (c * y + d) ** 2
        dlog = np.where(alive, dlog + np.log(step_d), dlog)
        if wind:
            theta = np.where(alive, theta + np.angle((1 + 1j * w_new) / (1 + 1j * w)), theta)
        w = np.where(alive, w_new, w)
        alive &= (np.abs(w) >= eps) & (w.imag > 0)
    acc = Welford()
    for wi, li, th in zip(w, dlog, theta):
        if wi.imag <= 0:
            acc.add(math.nan)
            continue
        branch = wind * (th - cmath.phase(1 + 1j * wi)) if wind else 0.0
        acc.add(case.eta_home(wi) + branch + order.term(li))
    stopped = int(n_paths - alive.sum())
    offset = generator_constant(case, z) * t if case.neumann else 0.0
    return MartingaleResult(acc.mean, acc.stderr, eta0, n_paths, stopped, stopped > 0.2 * n_paths, offset)


# grid sampler ----------------------------------------------------------------


def _mode_list(n_modes: int) -> list[tuple[int, int]]:
    m = int(math.isqrt(n_modes)) + 2
    while True:
        modes = sorted(((i, j) for i in range(1, m + 1) for j in range(1, m + 1)),
                       key=lambda ij: (ij[0] ** 2 + ij[1] ** 2, ij))
        cut = modes[n_modes - 1][0] ** 2 + modes[n_modes - 1][1] ** 2 if n_modes <= len(modes) else None
        if cut is not None and cut < (m + 1) ** 2:
            return modes[:n_modes]
        m *= 2


def gff_grid_sample(n_modes: int, seed: int = 0, n_grid: int = 65) -> np.ndarray:
    """Truncated spectral sample of the Dirichlet field on ``[0, pi]^2``.

    ``Phi = sum_ij xi_ij c sin(i x) sin(j y) / sqrt(i^2 + j^2)`` over the
    ``n_modes`` lowest modes, with ``c = 2 sqrt(2 / pi)`` so that the
    covariance tends to ``Gamma_D`` of the square.  Returns an
    ``(n_grid, n_grid)`` array on the uniform grid including the boundary.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    modes = np.array(_mode_list(n_modes))
    rng = np.random.Generator(np.random.Philox(key=seed))
    xi = rng.standard_normal(len(modes))
    x = np.linspace(0.0, math.pi, n_grid)
    coef = xi * GRID_NORM / np.sqrt((modes ** 2).sum(axis=1))
    si = np.sin(np.outer(modes[:, 0], x))  # (modes, grid)
    sj = np.sin(np.outer(modes[:, 1], x))
    out = np.einsum("m,mi,mj->ij", coef, si, sj)
    out[0, :] = out[-1, :] = out[:, 0] = out[:, -1] = 0.0
    return out


GRID_NORM = 2 * math.sqrt(2 / math.pi)


def grid_covariance(n_modes: int, p: complex, q: complex) -> float:
    """Covariance of ``gff_grid_sample`` values at ``p = x + iy`` and ``q``."""
    modes = np.array(_mode_list(n_modes))
    i, j = modes[:, 0], modes[:, 1]
    e = np.sin(i * p.real) * np.sin(j * p.imag) * np.sin(i * q.real) * np.sin(j * q.imag)
    return float(GRID_NORM ** 2 * np.sum(e / (i ** 2 + j ** 2)))


def square_gamma_d(p: complex, q: complex, n_terms: int = 200) -> float:
    """``Gamma_D`` of the square ``(0, pi)^2`` from the one-dimensional series."""
    y1, y2 = min(p.imag, q.imag), max(p.imag, q.imag)
    total = 0.0
    for n in range(1, n_terms + 1):
        # 1d Green function of -d^2/dy^2 + n^2 on (0, pi), written to avoid overflow
        g = (math.exp(-n * (y2 - y1)) * (1 - math.exp(-2 * n * y1)) * (1 - math.exp(-2 * n * (math.pi - y2)))
             / (2 * n * (1 - math.exp(-2 * n * math.pi))))
        total += math.sin(n * p.real) * math.sin(n * q.real) * g
    return 2 * math.pi * (2 / math.pi) * total
