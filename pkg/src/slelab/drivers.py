"""Driving functions with lazy, memoized refinement.

A ``DriverPath`` records knots ``(t, value)``.  Querying a new time between
two knots samples the conditional bridge; querying past the last knot samples
a fresh increment.  Recorded knots never change, so a path refined during a
simulation can be re-queried consistently.

Random numbers come from counter-based Philox streams keyed by the path seed
and the knot-insertion counter, which makes paths reproducible independently
of how many other paths exist.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for ``(seed, index)``.

    Both numbers go into the 128-bit Philox key; putting ``index`` in the
    counter instead would make neighbouring streams overlap.
    """
    key = ((seed & (2 ** 64 - 1)) << 64) | (index & (2 ** 64 - 1))
    return np.random.Generator(np.random.Philox(key=key))


def _stable_positive(a: float, rng: np.random.Generator, size=None):
    """Positive ``a``-stable variable with Laplace transform ``exp(-s**a)``, ``0 < a <= 1``."""
    x = rng.uniform(-math.pi / 2, math.pi / 2, size)
    y = rng.exponential(1.0, size)
    if a == 1.0:
        return np.ones_like(x) if size is not None else 1.0
    shifted = a * (x + math.pi / 2)
    return (np.sin(shifted) / np.cos(x) ** (1 / a)
            * (np.cos(x - shifted) / y) ** ((1 - a) / a))


def levy_subordinator(alpha: float, t: float, rng: np.random.Generator, size=None):
    """Sample ``Y_t`` such that ``B_{Y_t}`` is the symmetric ``alpha``-stable process.

    ``Y_t = 2 t**(2/alpha) X`` with ``X`` positive ``alpha/2``-stable, giving
    ``E exp(i theta B_{Y_t}) = exp(-t |theta|**alpha)``.
    """
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    if not t > 0:
        raise ValueError("t must be positive")
    return 2.0 * t ** (2.0 / alpha) * _stable_positive(alpha / 2, rng, size)


def levy_increment(alpha: float, t: float, rng: np.random.Generator, size=None):
    y = levy_subordinator(alpha, t, rng, size)
    return rng.normal(0.0, 1.0, size) * np.sqrt(y)


def levy_bridge(alpha: float, t0: float, v0: float, t1: float, v1: float, t: float,
                rng: np.random.Generator) -> float:
    """Value at ``t`` given the endpoints, via two independent subordinators.

    The Brownian bridge from ``0`` to ``v1 - v0`` over subordinated time
    ``Y + Y'`` is read off at ``Y``, where ``Y ~ Y_{t-t0}`` and ``Y' ~ Y_{t1-t}``.
    """
    if not t0 < t < t1:
        raise ValueError("need t0 < t < t1")
    y = float(levy_subordinator(alpha, t - t0, rng))
    y2 = float(levy_subordinator(alpha, t1 - t, rng))
    total = y + y2
    mean = (v1 - v0) * y / total
    var = y * y2 / total
    return v0 + mean + math.sqrt(max(var, 0.0)) * float(rng.normal())


@dataclass
class DriverPath:
    """Driver ``u_t`` of one of three kinds.

    * ``"det"``: ``u = fn(t)``
    * ``"bm"``: ``u = sqrt(kappa) B_t + nu t``
    * ``"levy"``: symmetric ``alpha``-stable process (values are right limits)
    """

    kind: str = "bm"
    kappa: float = 1.0
    nu: float = 0.0
    alpha: float = 2.0
    seed: int = 0
    fn: Optional[Callable[[float], float]] = None
    times: list[float] = field(default_factory=lambda: [0.0])
    values: list[float] = field(default_factory=lambda: [0.0])
    inserted: int = 0

    def __post_init__(self):
        if self.kind not in ("det", "bm", "levy"):
            raise ValueError(f"unknown driver kind {self.kind!r}")
        if self.kind == "det" and self.fn is None:
            raise ValueError("deterministic driver needs fn")
        if self.kind == "levy" and not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    @classmethod
    def deterministic(cls, fn: Callable[[float], float]) -> "DriverPath":
        return cls(kind="det", fn=fn)

    @classmethod
    def brownian(cls, kappa: float, nu: float = 0.0, seed: int = 0) -> "DriverPath":
        return cls(kind="bm", kappa=kappa, nu=nu, seed=seed)

    @classmethod
    def levy(cls, alpha: float, seed: int = 0) -> "DriverPath":
        return cls(kind="levy", alpha=alpha, seed=seed)

    def record(self, t: float, v: float) -> None:
        """Insert a knot by hand (used to pin endpoints)."""
        i = bisect.bisect_left(self.times, t)
        if i < len(self.times) and self.times[i] == t:
            if self.values[i] != v:
                raise ValueError("knot already recorded with a different value")
            return
        self.times.insert(i, t)
        self.values.insert(i, float(v))

    def _rng(self) -> np.random.Generator:
        g = stream(self.seed, self.inserted)
        self.inserted += 1
        return g

    def value_at(self, t) -> float:
        """Value at ``t``; ``t`` may be a ``Fraction`` for sub-ulp refinement."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if self.kind == "det":
            return float(self.fn(float(t)))
        times = self.times
        i = bisect.bisect_left(times, t)
        if i < len(times) and times[i] == t:
            return self.values[i]
        rng = self._rng()
        if i == len(times):
            t0, v0 = times[-1], self.values[-1]
            dt = t - t0
            if self.kind == "bm":
                v = v0 + self.nu * dt + math.sqrt(self.kappa * dt) * float(rng.normal())
            else:
                v = v0 + float(levy_increment(self.alpha, dt, rng))
        else:
            t0, v0, t1, v1 = times[i - 1], self.values[i - 1], times[i], self.values[i]
            if self.kind == "bm":
                w = (t - t0) / (t1 - t0)
                sd = math.sqrt(self.kappa * (t - t0) * (t1 - t) / (t1 - t0))
                v = v0 + w * (v1 - v0) + sd * float(rng.normal())
            else:
                v = levy_bridge(self.alpha, t0, v0, t1, v1, t, rng)
        times.insert(i, t)
        self.values.insert(i, v)
        return v

    __call__ = value_at


def value_at(path: DriverPath, t: float) -> float:
    return path.value_at(t)


def parse_driver(spec: str, seed: int = 0, registry: Optional[dict] = None) -> DriverPath:
    """Parse ``det:<name>``, ``bm:kappa=4,nu=0`` or ``levy:alpha=1.9``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "det":
        reg = registry if registry is not None else DETERMINISTIC
        if rest not in reg:
            raise ValueError(f"unknown deterministic driver {rest!r}; known: {sorted(reg)}")
        return DriverPath.deterministic(reg[rest])
    opts = {}
    for part in filter(None, rest.split(",")):
        k, sep, v = part.partition("=")
        if not sep:
            raise ValueError(f"bad driver option {part!r}")
        opts[k.strip()] = float(v)
    if kind == "bm":
        return DriverPath.brownian(opts.get("kappa", 1.0), opts.get("nu", 0.0), seed)
    if kind == "levy":
        return DriverPath.levy(opts.get("alpha", 2.0), seed)
    raise ValueError(f"unknown driver kind {kind!r}")


DETERMINISTIC: dict[str, Callable[[float], float]] = {
    "zero": lambda t: 0.0,
    "quartic": lambda t: -4 * t * t * (t - 1) * (t - 2),
    "sin": lambda t: math.sin(t),
    "linear": lambda t: t,
}
