"""Truncated-series arithmetic for analytic maps of one complex variable.

Maps are stored as coefficients in a normalized chart attached to a validity
domain.  Two domain kinds are supported:

* ``DiskDomain`` -- Taylor coefficients in u = (z - center)/radius; the
  series lives on the closed disk |u| <= 1.
* ``EllipseDomain`` -- Chebyshev coefficients in l(z), the affine variable
  sending the focal segment [f1, f2] to [-1, 1]; the series lives on the
  closed Bernstein ellipse E_rho = {|l + sqrt(l^2-1)| <= rho}.

The ellipse chart exists because the renormalization fixed point's first map
is analytic on a sausage-shaped neighbourhood of [0, 1] that no single disk
covers; a Bernstein ellipse does, with a wide analyticity margin.

All compositions are computed by sampling on the target domain boundary,
evaluating the chain pointwise, and refitting coefficients by FFT inversion.
Direct coefficient manipulation is reserved for the operations where it is
exact (translation, linear rescale, conjugation, differentiation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from numpy.polynomial import polynomial as _poly

from .errors import (
    CompositionDomainError,
    DomainError,
    NonInvertibleError,
    SeriesTailError,
)

DEFAULT_DEGREE = 80
DEFAULT_SAMPLES = 512
TAIL_TOL = 1e-12
INV_TOL = 1e-10
MEMBERSHIP_SLACK = 1.0 + 1e-9


def _bernstein_param(ell):
    """Bernstein ellipse parameter of points in the l-plane (>= 1)."""
    ell = np.asarray(ell, dtype=complex)
    w = ell + np.sqrt(ell - 1.0) * np.sqrt(ell + 1.0)
    r = np.abs(w)
    with np.errstate(divide="ignore"):
        return np.maximum(r, 1.0 / np.where(r == 0, np.inf, r))


@dataclass(frozen=True)
class DiskDomain:
    """Closed disk |z - center| <= radius."""

    center: complex
    radius: float

    kind = "disk"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    def param(self, z):
        return (np.asarray(z, dtype=complex) - self.center) / self.radius

    def membership(self, z):
        """<= 1 inside the domain, > 1 outside."""
        return np.abs(self.param(z))

    def contains(self, z, slack=MEMBERSHIP_SLACK):
        return bool(np.all(self.membership(z) <= slack))

    def nodes(self, m):
        th = 2.0 * np.pi * np.arange(m) / m
        return self.center + self.radius * np.exp(1j * th)

    def interior_point(self):
        return self.center

    def conjugate(self):
        return DiskDomain(np.conj(self.center), self.radius)

    def scale_input(self, lam):
        """Domain of x -> f(lam*x) when f lives on this domain."""
        return DiskDomain(self.center / lam, self.radius / abs(lam))

    def shift_input(self, a):
        """Domain of x -> f(x + a)."""
        return DiskDomain(self.center - a, self.radius)

    def descriptor(self):
        return {
            "kind": "disk",
            "center": [self.center.real, self.center.imag],
            "radius": float(self.radius),
        }


@dataclass(frozen=True)
class EllipseDomain:
    """Closed Bernstein ellipse with foci f1, f2 and parameter rho > 1."""

    f1: complex
    f2: complex
    rho: float

    kind = "ellipse"

    def __post_init__(self):
        if not self.rho > 1.0:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if self.f1 == self.f2:
            raise ValueError("coincident foci; use DiskDomain instead")

    def param(self, z):
        """Affine variable l(z) with l(f1) = -1, l(f2) = +1."""
        z = np.asarray(z, dtype=complex)
        return (2.0 * z - self.f1 - self.f2) / (self.f2 - self.f1)

    def membership(self, z):
        """<= 1 inside the domain, > 1 outside (Bernstein parameter / rho)."""
        return _bernstein_param(self.param(z)) / self.rho

    def contains(self, z, slack=MEMBERSHIP_SLACK):
        return bool(np.all(self.membership(z) <= slack))

    def nodes(self, m):
        th = 2.0 * np.pi * np.arange(m) / m
        w = self.rho * np.exp(1j * th)
        ell = 0.5 * (w + 1.0 / w)
        return 0.5 * (self.f1 + self.f2) + 0.5 * (self.f2 - self.f1) * ell

    def interior_point(self):
        return 0.5 * (self.f1 + self.f2)

    def conjugate(self):
        return EllipseDomain(np.conj(self.f1), np.conj(self.f2), self.rho)

    def scale_input(self, lam):
        return EllipseDomain(self.f1 / lam, self.f2 / lam, self.rho)

    def shift_input(self, a):
        return EllipseDomain(self.f1 - a, self.f2 - a, self.rho)

    def descriptor(self):
        return {
            "kind": "ellipse",
            "f1": [self.f1.real, self.f1.imag],
            "f2": [self.f2.real, self.f2.imag],
            "rho": float(self.rho),
        }


def domain_from_descriptor(d):
    if d["kind"] == "disk":
        return DiskDomain(complex(*d["center"]), d["radius"])
    if d["kind"] == "ellipse":
        return EllipseDomain(complex(*d["f1"]), complex(*d["f2"]), d["rho"])
    raise ValueError(f"unknown domain kind {d['kind']!r}")


class AnalyticMap1D:
    """A truncated analytic map attached to a validity domain.

    ``coeffs[k]`` multiplies u^k (disk chart) or T_k(l) (ellipse chart).
    Values are immutable after construction; all operations return new maps.
    """

    __slots__ = ("coeffs", "domain")

    def __init__(self, coeffs, domain):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d array")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "domain", domain)

    def __setattr__(self, *a):
        raise AttributeError("AnalyticMap1D is immutable")

    @property
    def degree(self):
        return self.coeffs.size - 1

    # -- construction -------------------------------------------------

    @classmethod
    def fit(cls, fun, domain, degree=DEFAULT_DEGREE, samples=None):
        """Fit by sampling ``fun`` on the domain boundary and FFT inversion."""
        m = samples or max(4 * (degree + 1), 256)
        vals = np.asarray(fun(domain.nodes(m)), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise DomainError("function values not finite on fit nodes")
        b = np.fft.fft(vals) / m
        if domain.kind == "disk":
            coeffs = b[: degree + 1]
        else:
            k = np.arange(degree + 1)
            coeffs = 2.0 * b[: degree + 1] / domain.rho ** k
            coeffs[0] = b[0]
        return cls(coeffs, domain)

    @classmethod
    def from_power_series(cls, taylor0, domain, degree=None):
        """Build from Taylor coefficients at 0 (mostly for polynomial inputs)."""
        taylor0 = np.asarray(taylor0, dtype=complex)
        deg = degree if degree is not None else max(taylor0.size - 1, 2)
        return cls.fit(lambda z: _poly.polyval(z, taylor0), domain, degree=deg)

    @classmethod
    def identity(cls, domain, degree=2):
        return cls.from_power_series([0.0, 1.0], domain, degree=degree)

    @classmethod
    def constant(cls, value, domain, degree=2):
        return cls.from_power_series([value], domain, degree=degree)

    # -- evaluation ---------------------------------------------------

    def __call__(self, z, check=False):
        return self.eval(z, check=check)

    def eval(self, z, check=False):
        """Evaluate the truncated series; optionally enforce domain membership."""
        if check and not self.domain.contains(z):
            worst = float(np.max(self.domain.membership(z)))
            raise DomainError(
                f"evaluation point outside domain (membership {worst:.6f} > 1)"
            )
        t = self.domain.param(z)
        if self.domain.kind == "disk":
            return _poly.polyval(t, self.coeffs)
        return _cheb.chebval(t, self.coeffs)

    def eval_at_zero(self):
        return complex(self.eval(0.0))

    # -- exact coefficient operations ----------------------------------

    def derivative(self):
        """d/dz of the series, on the same domain."""
        if self.domain.kind == "disk":
            d = _poly.polyder(self.coeffs) / self.domain.radius
        else:
            d = _cheb.chebder(self.coeffs) * (2.0 / (self.domain.f2 - self.domain.f1))
        if d.size == 0:
            d = np.zeros(1, dtype=complex)
        return AnalyticMap1D(d, self.domain)

    def translate_input(self, a):
        """x -> f(x + a); exact (domain moves, coefficients unchanged)."""
        return AnalyticMap1D(self.coeffs, self.domain.shift_input(a))

    def scale_input(self, lam):
        """x -> f(lam * x); exact in both charts."""
        if lam == 0:
            raise ValueError("lam must be nonzero")
        dom = self.domain.scale_input(lam)
        if self.domain.kind == "disk":
            phase = (lam / abs(lam)) ** np.arange(self.coeffs.size)
            return AnalyticMap1D(self.coeffs * phase, dom)
        return AnalyticMap1D(self.coeffs, dom)

    def add_constant(self, a):
        c = self.coeffs.copy()
        c[0] += a
        return AnalyticMap1D(c, self.domain)

    def __mul__(self, scalar):
        return AnalyticMap1D(self.coeffs * scalar, self.domain)

    __rmul__ = __mul__

    def __sub__(self, other):
        if not isinstance(other, AnalyticMap1D) or other.domain != self.domain:
            raise ValueError("subtraction requires identical domains")
        n = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(n, dtype=complex)
        a[: self.coeffs.size] = self.coeffs
        a[: other.coeffs.size] -= other.coeffs
        return AnalyticMap1D(a, self.domain)

    def conjugate_by_conj(self):
        """c o f o c with c(x) = conj(x); an involution, exact."""
        return AnalyticMap1D(np.conj(self.coeffs), self.domain.conjugate())

    def refit(self, domain, degree=None, samples=None):
        """Re-expand on another domain (must lie within analyticity)."""
        deg = degree if degree is not None else self.degree
        return AnalyticMap1D.fit(lambda z: self.eval(z), domain, deg, samples)

    # -- diagnostics ----------------------------------------------------

    def tail_estimate(self, k=4):
        """Sup-norm scale of the last k coefficients on the domain."""
        tail = self.coeffs[-k:]
        if self.domain.kind == "disk":
            return float(np.max(np.abs(tail)))
        idx = np.arange(self.coeffs.size - tail.size, self.coeffs.size)
        w = 0.5 * (self.domain.rho ** idx + self.domain.rho ** (-idx))
        return float(np.max(np.abs(tail) * w))

    def check_tail(self, tol=TAIL_TOL):
        t = self.tail_estimate()
        if t > tol:
            raise SeriesTailError(f"tail estimate {t:.3e} exceeds tolerance {tol:.1e}")
        return t

    def taylor_at(self, z0, degree=8, radius=0.1):
        """Taylor coefficients at an interior point, by local refit.

        The radius trades truncation against roundoff amplification
        (~eps/radius^degree); keep degree*|log10 radius| well under 16.
        """
        small = DiskDomain(z0, radius)
        loc = AnalyticMap1D.fit(lambda z: self.eval(z), small, degree)
        return loc.coeffs / radius ** np.arange(degree + 1)

    def roots_in_domain(self, slack=1.0):
        """Roots of the truncated series inside the domain (companion matrix)."""
        c = self.coeffs.copy()
        m = np.max(np.abs(c))
        if m == 0:
            return np.array([], dtype=complex)
        c = np.where(np.abs(c) > 1e-300, c, 0.0)
        while c.size > 1 and c[-1] == 0:
            c = c[:-1]
        if c.size <= 1:
            return np.array([], dtype=complex)
        if self.domain.kind == "disk":
            t_roots = _poly.polyroots(c)
            keep = np.abs(t_roots) <= slack * MEMBERSHIP_SLACK
            return self.domain.center + self.domain.radius * t_roots[keep]
        t_roots = _cheb.chebroots(c)
        keep = _bernstein_param(t_roots) <= self.domain.rho * slack * MEMBERSHIP_SLACK
        mid = 0.5 * (self.domain.f1 + self.domain.f2)
        half = 0.5 * (self.domain.f2 - self.domain.f1)
        return mid + half * t_roots[keep]

    # -- serialization ----------------------------------------------------

    def to_json_dict(self):
        return {
            "degree": self.degree,
            "domain": self.domain.descriptor(),
            "coeffs": [[z.real, z.imag] for z in self.coeffs],
        }

    @classmethod
    def from_json_dict(cls, d):
        coeffs = np.array([complex(re, im) for re, im in d["coeffs"]])
        return cls(coeffs, domain_from_descriptor(d["domain"]))

    def __repr__(self):
        return (
            f"AnalyticMap1D(degree={self.degree}, domain={self.domain!r}, "
            f"f(0)={self.eval_at_zero():.6g})"
        )


# -- module-level operations ---------------------------------------------


def fit_samples(values, domain, degree):
    """Recover chart coefficients from values on ``domain.nodes(len(values))``."""
    values = np.asarray(values, dtype=complex)
    m = values.size
    if not np.all(np.isfinite(values)):
        raise DomainError("sample values not finite")
    b = np.fft.fft(values) / m
    if domain.kind == "disk":
        return b[: degree + 1]
    k = np.arange(degree + 1)
    coeffs = 2.0 * b[: degree + 1] / domain.rho ** k
    coeffs[0] = b[0]
    return coeffs


def compose(
    f: AnalyticMap1D,
    g: AnalyticMap1D,
    out_domain=None,
    degree=None,
    samples=None,
    check=True,
    tail_tol=None,
):
    """Truncated series of f o g, refit on ``out_domain`` (default: g.domain).

    The inner map is sampled on the output boundary; the range must stay in
    f's domain or a CompositionDomainError is raised -- the signal that a
    renormalization word left its validity region.
    """
    dom = out_domain or g.domain
    deg = degree if degree is not None else max(f.degree, g.degree)
    m = samples or max(4 * (deg + 1), 256)
    x = dom.nodes(m)
    gx = g.eval(x)
    if check:
        memb = f.domain.membership(gx)
        worst = float(np.max(memb))
        if worst > MEMBERSHIP_SLACK:
            raise CompositionDomainError(
                f"inner map leaves outer domain (membership {worst:.4f} > 1)"
            )
    vals = f.eval(gx)
    b = np.fft.fft(vals) / m
    if dom.kind == "disk":
        coeffs = b[: deg + 1]
    else:
        k = np.arange(deg + 1)
        coeffs = 2.0 * b[: deg + 1] / dom.rho ** k
        coeffs[0] = b[0]
    out = AnalyticMap1D(coeffs, dom)
    if tail_tol is not None:
        out.check_tail(tail_tol)
    return out


def eval_map(f: AnalyticMap1D, x, check=True):
    """Spec-surface evaluation with the domain precondition enforced."""
    return f.eval(x, check=check)


def conjugate_by_conj(f: AnalyticMap1D):
    return f.conjugate_by_conj()


def sup_norm(f: AnalyticMap1D, samples=DEFAULT_SAMPLES):
    """Max of |f| over boundary samples (maximum principle)."""
    return float(np.max(np.abs(f.eval(f.domain.nodes(samples)))))


def sup_distance(f: AnalyticMap1D, g: AnalyticMap1D, samples=DEFAULT_SAMPLES):
    """Sup of |f - g| over the smaller common region (f's domain boundary
    if shared, else the intersection probed on f's nodes that g covers)."""
    z = f.domain.nodes(samples)
    if not g.domain.contains(z, slack=1.5):
        keep = g.domain.membership(z) <= 1.0
        if not np.any(keep):
            raise DomainError("domains of compared maps do not overlap on samples")
        z = z[keep]
    return float(np.max(np.abs(f.eval(z) - g.eval(z))))


def invert_local(
    f: AnalyticMap1D,
    target_domain,
    branch_seed=None,
    degree=None,
    samples=None,
    inv_tol=INV_TOL,
    newton_steps=60,
):
    """Series of the inverse branch of f on ``target_domain`` (values of f).

    The branch is selected by ``branch_seed``: a point t0 with f(t0) inside
    the target domain (default: a root of f(t) = target centre chosen inside
    f's domain, nearest to its interior anchor).  Points are solved by
    vectorized Newton continuation around the sampling circle; a derivative
    collapse raises NonInvertibleError.
    """
    deg = degree if degree is not None else f.degree
    m = samples or max(4 * (deg + 1), 256)
    x = target_domain.nodes(m)
    fp = f.derivative()

    if branch_seed is None:
        anchor = target_domain.interior_point()
        cand = f.add_constant(-anchor).roots_in_domain()
        if cand.size == 0:
            raise NonInvertibleError(
                "no preimage of the target centre found inside the source domain"
            )
        branch_seed = cand[np.argmin(np.abs(cand - f.domain.interior_point()))]

    # continuation: walk from the anchor out to the boundary circle, then around
    t = np.full(m, complex(branch_seed))
    targets = [target_domain.interior_point() * np.ones(m), x]
    for tgt in targets:
        for _ in range(newton_steps):
            fv = f.eval(t)
            dv = fp.eval(t)
            bad = np.abs(dv) < 1e-13
            if np.any(bad):
                raise NonInvertibleError(
                    "derivative vanished during inversion (critical point in region)"
                )
            step = (fv - tgt) / dv
            t = t - step
            if np.max(np.abs(step)) < 1e-14:
                break
        else:
            raise NonInvertibleError("Newton inversion failed to converge")
    if not f.domain.contains(t, slack=1.05):
        raise NonInvertibleError("inverse branch left the source domain")

    b = np.fft.fft(t) / m
    if target_domain.kind == "disk":
        coeffs = b[: deg + 1]
    else:
        k = np.arange(deg + 1)
        coeffs = 2.0 * b[: deg + 1] / target_domain.rho ** k
        coeffs[0] = b[0]
    inv = AnalyticMap1D(coeffs, target_domain)

    # round-trip validation on off-node points
    probe = target_domain.nodes(97)
    err = float(np.max(np.abs(f.eval(inv.eval(probe)) - probe)))
    if err > inv_tol:
        raise NonInvertibleError(
            f"round-trip error {err:.3e} exceeds tolerance {inv_tol:.1e}"
        )
    return inv


def argument_principle_zeros(f: AnalyticMap1D, center, radius, samples=1024):
    """Number of zeros of f in a disk, by winding of f on its boundary.

    Requires |f| bounded away from 0 on the circle; used to certify 'simple
    unique critical point' claims by counting zeros of f'.
    """
    th = 2.0 * np.pi * np.arange(samples) / samples
    z = center + radius * np.exp(1j * th)
    vals = f.eval(z)
    if np.min(np.abs(vals)) < 1e-11:
        raise NonInvertibleError(
            "argument-principle circle passes too close to a zero"
        )
    dphase = np.angle(vals[np.r_[1:samples, 0]] / vals)
    winding = np.sum(dphase) / (2.0 * np.pi)
    n = int(np.rint(winding))
    if abs(winding - n) > 1e-6:
        raise NonInvertibleError(f"winding number {winding} is not close to an integer")
    return n
