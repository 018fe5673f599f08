"""Pairs of analytic maps (eta, xi) and the pair-level primitives.

A pair is the basic object of the one-dimensional renormalization: eta lives
on a Z-type domain (ellipse chart around the orbit sausage), xi on a W-type
disk.  Criticality and almost-commutation are tracked as scalar defects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRescaleError
from .series import AnalyticMap1D, argument_principle_zeros, sup_norm, sup_distance

DEGENERATE_TOL = 1e-13


@dataclass(frozen=True)
class Pair1D:
    """Ordered pair (eta, xi) of analytic maps."""

    eta: AnalyticMap1D
    xi: AnalyticMap1D

    def norm(self, samples=512):
        return 0.5 * (sup_norm(self.eta, samples) + sup_norm(self.xi, samples))

    # -- defect functionals -------------------------------------------

    def criticality_defects(self):
        """(eta'(0), xi'(0)); both vanish for critical pairs."""
        return (
            complex(self.eta.derivative().eval(0.0)),
            complex(self.xi.derivative().eval(0.0)),
        )

    def commutator_defects(self):
        """([eta,xi](0), [eta,xi]''(0)) evaluated from derivative series."""
        eta, xi = self.eta, self.xi
        d1e, d1x = eta.derivative(), xi.derivative()
        d2e, d2x = d1e.derivative(), d1x.derivative()
        e0 = complex(eta.eval(0.0))
        x0 = complex(xi.eval(0.0))
        d0 = complex(eta.eval(x0)) - complex(xi.eval(e0))
        dpp = (
            complex(d2e.eval(x0)) * complex(d1x.eval(0.0)) ** 2
            + complex(d1e.eval(x0)) * complex(d2x.eval(0.0))
            - complex(d2x.eval(e0)) * complex(d1e.eval(0.0)) ** 2
            - complex(d1x.eval(e0)) * complex(d2e.eval(0.0))
        )
        return d0, dpp

    def normalization_defect(self):
        """xi(0) - 1."""
        return complex(self.xi.eval(0.0)) - 1.0

    def constraint_vector(self):
        """The five complex constraints cutting out the almost-commuting space."""
        ce, cx = self.criticality_defects()
        d0, dpp = self.commutator_defects()
        return np.array([ce, cx, d0, dpp, self.normalization_defect()])

    def is_almost_commuting(self, tol=1e-10):
        v = self.constraint_vector()
        return bool(np.max(np.abs(v)) < tol)

    def check_critical_point_unique(self, radius=0.25, samples=1024):
        """Argument-principle count of critical points near 0 (wants 1 each)."""
        ne = argument_principle_zeros(self.eta.derivative(), 0.0, radius, samples)
        nx = argument_principle_zeros(self.xi.derivative(), 0.0, radius, samples)
        return ne, nx

    # -- serialization --------------------------------------------------

    def to_json_dict(self):
        return {"eta": self.eta.to_json_dict(), "xi": self.xi.to_json_dict()}

    @classmethod
    def from_json_dict(cls, d):
        return cls(
            AnalyticMap1D.from_json_dict(d["eta"]),
            AnalyticMap1D.from_json_dict(d["xi"]),
        )


def rescale_pair(zeta: Pair1D) -> Pair1D:
    """Conjugate by s(x) = lam*x with lam = xi-slot value at 0.

    The output xi-slot satisfies xi(0) = 1 exactly; the transport of
    coefficients is exact in both charts (no refit).
    """
    lam = complex(zeta.xi.eval(0.0))
    if abs(lam) < DEGENERATE_TOL:
        raise DegenerateRescaleError(f"rescaling constant {lam} is degenerate")
    eta = zeta.eta.scale_input(lam) * (1.0 / lam)
    xi = zeta.xi.scale_input(lam) * (1.0 / lam)
    xi = xi.add_constant(1.0 - complex(xi.eval(0.0)))
    return Pair1D(eta, xi)


def pair_distance(a: Pair1D, b: Pair1D, samples=512):
    """Mean of the sup-distances of the two slots on a's domains."""
    return 0.5 * (
        sup_distance(a.eta, b.eta, samples) + sup_distance(a.xi, b.xi, samples)
    )


def coefficient_distance(a: Pair1D, b: Pair1D):
    """Max coefficient deviation; requires identical domains and degrees."""
    if a.eta.domain != b.eta.domain or a.xi.domain != b.xi.domain:
        raise ValueError("coefficient distance requires identical domains")
    de = np.max(np.abs(a.eta.coeffs - b.eta.coeffs))
    dx = np.max(np.abs(a.xi.coeffs - b.xi.coeffs))
    return float(max(de, dx))
