"""Renormalization numerics for golden-mean Siegel disks of dissipative
complex Henon maps: series arithmetic, the 1D fixed point and its spectrum,
the 2D pair operator, renormalization arcs, boundary oracles, and the
angular-deviation diagnostics."""

from .series import AnalyticMap1D, DiskDomain, EllipseDomain
from .pairs import Pair1D

__all__ = ["AnalyticMap1D", "DiskDomain", "EllipseDomain", "Pair1D"]
__version__ = "0.1.0"
