"""Numerical (delta, sigma)-SLE: Witt-algebra fields, zipper chains, adaptive sampling,
GFF coupling checks and Virasoro highest-weight computations."""

from .charts import Chart
from .fieldalg import SleParams, WittField, delta2, delta3, ell
from .zipper import LoewnerChain, Partition, Trace, Variant, build_chain

__all__ = ["Chart", "WittField", "SleParams", "delta2", "delta3", "ell",
           "LoewnerChain", "Partition", "Trace", "Variant", "build_chain"]
