"""Adaptive SLE sampling on top of routine R.

The chain ``dG = delta(G) dt + sigma(G) du`` is driven by
``u = sqrt(kappa) B_t + nu t`` (or a symmetric stable process for trees).
Driver knots are sampled on demand by bridges, so the partition is refined
only where the slit needs resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .charts import Chart
from .drivers import DriverPath
from .fieldalg import SleParams, WittField
from .zipper import LoewnerChain, RoutineR, Trace, Variant, trace_joints


@dataclass
class SimConfig:
    d_min: float = 5e-3
    d_max: float = 1e-2
    n_max: int = 2000
    T: float = 1e8
    chart: Chart = Chart.HALFPLANE
    seed: int = 0
    arc_samples: int = 8

    def __post_init__(self):
        if not 0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if not self.T > 0:
            raise ValueError("T must be positive")
        self.chart = Chart.parse(self.chart)


class Sampler:
    """A resumable run: the chain, its driver and the routine-R state."""

    def __init__(self, delta: WittField, sigma: WittField, driver: DriverPath, cfg: SimConfig,
                 variant=Variant.CLASSIFIED, metric: str = "a"):
        self.cfg = cfg
        self.driver = driver
        self.chain = LoewnerChain(delta, sigma, cfg.chart, variant, swallow_eps=10 * cfg.d_min)
        self.chain.values[0] = driver.value_at(0.0)
        self.routine = RoutineR(self.chain, driver, cfg.d_min, cfg.d_max, cfg.n_max, metric)

    @property
    def truncated(self) -> bool:
        return self.routine.truncated

    def run_to(self, t_end: float, finalize: bool = True) -> "Sampler":
        self.routine.run(t_end, finalize=finalize)
        return self

    def trace(self, include_b: bool = False, arc_samples: int = 0) -> Trace:
        tr = trace_joints(self.chain, include_b, arc_samples)
        tr.truncated = self.truncated
        return tr


def simulate_sle(delta: WittField, sigma: WittField, params: SleParams, cfg: SimConfig,
                 driver: Optional[DriverPath] = None) -> Trace:
    """Resolution-controlled trace of the ``(delta, sigma)``-SLE.

    Consecutive a-points end up between ``d_min`` and ``d_max`` apart in
    ``cfg.chart`` (the final point is exempt).  ``driver`` overrides the
    Brownian driver built from ``params`` and ``cfg.seed``.
    """
    if driver is None:
        driver = DriverPath.brownian(params.kappa, params.nu, cfg.seed)
    return Sampler(delta, sigma, driver, cfg).run_to(cfg.T).trace()


def simulate_levy_tree(delta: WittField, sigma: WittField, alpha: float, cfg: SimConfig,
                       driver: Optional[DriverPath] = None) -> Trace:
    """Best-effort slit tree of a stable-driven chain.

    Steps flow along ``delta`` first and jump along ``sigma`` last, giving
    b-points (branch ends before each jump) and flow-line arcs.  Adaptivity
    is keyed on the arc length ``d(gamma_b, gamma_a)``.  Side branches that
    grow entirely between two knots are not recovered.
    """
    if not 0 < alpha < 2 and driver is None:
        raise ValueError("alpha must lie in (0, 2)")
    if driver is None:
        driver = DriverPath.levy(alpha, cfg.seed)
    s = Sampler(delta, sigma, driver, cfg, variant=Variant.PIECEWISE, metric="b").run_to(cfg.T)
    return s.trace(include_b=True, arc_samples=cfg.arc_samples)
