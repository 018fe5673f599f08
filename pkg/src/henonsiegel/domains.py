"""Calibrated validity domains for the renormalization pair space.

The source text never fixes the domains; these were calibrated empirically
against the exact Fibonacci-return pairs of the golden quadratic: the first
map is analytic on a sausage around [0, 1] (Bernstein-ellipse chart, nearest
singular structure at Bernstein parameter ~2.1), the second on a disk about
-0.13 - 0.40i (conjugate-reflected on odd steps).  Early renormalization
levels of Henon-type seeds are entire or nearly so but their evaluation
clusters sit elsewhere, so a three-stage ladder widens the domains there.

All constants are plain data; overriding them is supported everywhere
through the ``pair_domains`` helper, and every report embeds the values
actually used.
"""

from __future__ import annotations

from dataclasses import dataclass

from .series import DiskDomain, EllipseDomain

# Asymptotic (fixed-point) domains.
Z_STD = EllipseDomain(-0.46 + 0.0j, 1.18 + 0.0j, 1.38)
W_STD = DiskDomain(-0.13 - 0.40j, 0.50)

# Wider mid-ladder domains for levels 2-3 of a seed orbit.
Z_MID = EllipseDomain(-0.55 + 0.0j, 1.30 + 0.0j, 1.55)
W_MID = DiskDomain(0.0 - 0.42j, 0.90)

# Generous domains for levels 0-1, where the maps are entire polynomials
# (disks suffice; the sausage chart only matters once analyticity bites).
Z_WIDE = DiskDomain(0.35 + 0.10j, 2.20)
W_WIDE = DiskDomain(0.10 + 0.00j, 1.90)


@dataclass(frozen=True)
class PairDomains:
    z: object
    w: object

    def conjugate(self):
        return PairDomains(self.z.conjugate(), self.w.conjugate())

    def descriptor(self):
        return {"z": self.z.descriptor(), "w": self.w.descriptor()}


LADDER = (
    PairDomains(Z_WIDE, W_WIDE),
    PairDomains(Z_WIDE, W_WIDE),
    PairDomains(Z_MID, W_MID),
    PairDomains(Z_MID, W_MID),
)


def pair_domains(level=None):
    """Domains for a given renormalization level (None or >= 4: asymptotic)."""
    if level is None or level >= len(LADDER):
        return PairDomains(Z_STD, W_STD)
    return LADDER[level]
