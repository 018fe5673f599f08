"""Bivariate truncated series and two-component maps on product domains.

A scalar ``BiSeries`` stores coefficients c[j, k] against the tensor basis
phi_j(x) phi_k(y), where each factor chart is the 1D normalized one (powers
of the disk parameter, or Chebyshev in the ellipse variable).  Vector maps
C^2 -> C^2 are pairs of scalar series sharing one product domain.

Fitting samples the distinguished boundary (tensor of the factor node sets)
and inverts by 2D FFT with the per-axis coefficient recovery of the 1D case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from numpy.polynomial import polynomial as _poly

from .errors import DomainError
from .series import AnalyticMap1D, DiskDomain, EllipseDomain, MEMBERSHIP_SLACK


@dataclass(frozen=True)
class ProductDomain:
    """Cartesian product of two 1D domains (disk or ellipse charts)."""

    x: object
    y: object

    def membership(self, xs, ys):
        return np.maximum(self.x.membership(xs), self.y.membership(ys))

    def contains(self, xs, ys, slack=MEMBERSHIP_SLACK):
        return bool(np.all(self.membership(xs, ys) <= slack))

    def nodes(self, mx, my):
        return self.x.nodes(mx), self.y.nodes(my)

    def scale_input(self, lam):
        return ProductDomain(self.x.scale_input(lam), self.y.scale_input(lam))

    def shift_x(self, a):
        return ProductDomain(self.x.shift_input(a), self.y)

    def descriptor(self):
        return {"x": self.x.descriptor(), "y": self.y.descriptor()}


def _axis_recover(b, dom, degree, axis):
    """Per-axis coefficient recovery after an FFT along ``axis``."""
    sl = [slice(None)] * b.ndim
    sl[axis] = slice(0, degree + 1)
    out = b[tuple(sl)]
    if dom.kind == "disk":
        return out
    k = np.arange(degree + 1)
    scale = 2.0 / dom.rho ** k
    scale[0] = 1.0
    shape = [1] * b.ndim
    shape[axis] = degree + 1
    return out * scale.reshape(shape)


def _axis_weights(dom, degree):
    k = np.arange(degree + 1, dtype=float)
    if dom.kind == "disk":
        return np.ones(degree + 1)
    return 0.5 * (dom.rho**k + dom.rho ** (-k))


def _eval_basis_pointwise(t, coeffs_1d_stack, kind):
    """Evaluate sum_j d[j, ...] phi_j(t) for per-point coefficient stacks."""
    n = coeffs_1d_stack.shape[0]
    if kind == "disk":
        acc = coeffs_1d_stack[n - 1]
        for j in range(n - 2, -1, -1):
            acc = acc * t + coeffs_1d_stack[j]
        return acc
    b1 = np.zeros_like(coeffs_1d_stack[0])
    b2 = np.zeros_like(b1)
    for j in range(n - 1, 0, -1):
        b1, b2 = coeffs_1d_stack[j] + 2.0 * t * b1 - b2, b1
    return coeffs_1d_stack[0] + t * b1 - b2


class BiSeries:
    """Scalar bivariate truncated series on a product domain."""

    __slots__ = ("coeffs", "domain")

    def __init__(self, coeffs, domain: ProductDomain):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 2:
            raise ValueError("BiSeries coefficients must be 2-d (x-deg, y-deg)")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "domain", domain)

    def __setattr__(self, *a):
        raise AttributeError("BiSeries is immutable")

    @property
    def degrees(self):
        return self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1

    @classmethod
    def fit(cls, fun, domain: ProductDomain, degx, degy, mx=None, my=None):
        mx = mx or max(2 * (degx + 1), 64)
        my = my or max(2 * (degy + 1), 32)
        xs, ys = domain.nodes(mx, my)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        vals = np.asarray(fun(X, Y), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise DomainError("bivariate fit produced non-finite samples")
        b = np.fft.fft2(vals) / (mx * my)
        b = _axis_recover(b, domain.x, degx, axis=0)
        b = _axis_recover(b, domain.y, degy, axis=1)
        return cls(b, domain)

    def eval(self, xs, ys, check=False):
        xs = np.asarray(xs, dtype=complex)
        ys = np.asarray(ys, dtype=complex)
        if check and not self.domain.contains(xs, ys):
            worst = float(np.max(self.domain.membership(xs, ys)))
            raise DomainError(f"2D evaluation outside domain (membership {worst:.4f})")
        tx = self.domain.x.param(xs)
        ty = self.domain.y.param(ys)
        # contract the y-axis first: d[j] = sum_k c[j,k] phi_k(ty)
        if self.domain.y.kind == "disk":
            d = _poly.polyval(ty, self.coeffs.T)
        else:
            d = _cheb.chebval(ty, self.coeffs.T)
        return _eval_basis_pointwise(tx, d, self.domain.x.kind)

    def section_y(self, y0=0.0):
        """The 1D series x -> f(x, y0)."""
        ty = complex(self.domain.y.param(y0))
        if self.domain.y.kind == "disk":
            c = _poly.polyval(ty, self.coeffs.T)
        else:
            c = _cheb.chebval(ty, self.coeffs.T)
        return AnalyticMap1D(c, self.domain.x)

    def dy(self):
        """Partial derivative in y (coefficient operation)."""
        if self.domain.y.kind == "disk":
            d = _poly.polyder(self.coeffs, axis=1) / self.domain.y.radius
        else:
            d = _cheb.chebder(self.coeffs, axis=1) * (
                2.0 / (self.domain.y.f2 - self.domain.y.f1)
            )
        if d.shape[1] == 0:
            d = np.zeros((self.coeffs.shape[0], 1), dtype=complex)
        return BiSeries(d, self.domain)

    def dx(self):
        if self.domain.x.kind == "disk":
            d = _poly.polyder(self.coeffs, axis=0) / self.domain.x.radius
        else:
            d = _cheb.chebder(self.coeffs, axis=0) * (
                2.0 / (self.domain.x.f2 - self.domain.x.f1)
            )
        if d.shape[0] == 0:
            d = np.zeros((1, self.coeffs.shape[1]), dtype=complex)
        return BiSeries(d, self.domain)

    def add_x_function(self, series_1d: AnalyticMap1D):
        """Add a function of x alone (same x-chart) to this series."""
        if series_1d.domain != self.domain.x:
            raise ValueError("x-chart mismatch")
        c = self.coeffs.copy()
        n = min(c.shape[0], series_1d.coeffs.size)
        c[:n, 0] += series_1d.coeffs[:n]
        return BiSeries(c, self.domain)

    def scale_input(self, lam):
        """(x, y) -> f(lam x, lam y); exact coefficient transport."""
        dom = self.domain.scale_input(lam)
        c = self.coeffs
        if self.domain.x.kind == "disk":
            c = c * ((lam / abs(lam)) ** np.arange(c.shape[0]))[:, None]
        if self.domain.y.kind == "disk":
            c = c * ((lam / abs(lam)) ** np.arange(c.shape[1]))[None, :]
        return BiSeries(c, dom)

    def __mul__(self, scalar):
        return BiSeries(self.coeffs * scalar, self.domain)

    __rmul__ = __mul__

    def __sub__(self, other):
        if not isinstance(other, BiSeries) or other.domain != self.domain:
            raise ValueError("subtraction requires identical domains")
        nx = max(self.coeffs.shape[0], other.coeffs.shape[0])
        ny = max(self.coeffs.shape[1], other.coeffs.shape[1])
        a = np.zeros((nx, ny), dtype=complex)
        a[: self.coeffs.shape[0], : self.coeffs.shape[1]] = self.coeffs
        a[: other.coeffs.shape[0], : other.coeffs.shape[1]] -= other.coeffs
        return BiSeries(a, self.domain)

    def tail_estimate(self, band=3):
        wx = _axis_weights(self.domain.x, self.coeffs.shape[0] - 1)
        wy = _axis_weights(self.domain.y, self.coeffs.shape[1] - 1)
        w = np.abs(self.coeffs) * wx[:, None] * wy[None, :]
        return float(max(np.max(w[-band:, :]), np.max(w[:, -band:])))

    def sup_norm(self, mx=96, my=48):
        xs, ys = self.domain.nodes(mx, my)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return float(np.max(np.abs(self.eval(X, Y))))

    def to_json_dict(self):
        return {
            "degrees": list(self.degrees),
            "domain": self.domain.descriptor(),
            "coeffs": [[[z.real, z.imag] for z in row] for row in self.coeffs],
        }


class AnalyticMap2D:
    """Two-component analytic map on a product domain."""

    __slots__ = ("f1", "f2")

    def __init__(self, f1: BiSeries, f2: BiSeries):
        if f1.domain != f2.domain:
            raise ValueError("components must share one domain")
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)

    def __setattr__(self, *a):
        raise AttributeError("AnalyticMap2D is immutable")

    @property
    def domain(self):
        return self.f1.domain

    @classmethod
    def fit(cls, fun, domain, degx, degy, mx=None, my=None):
        """Fit both components of (x, y) -> (u, v) = fun(x, y)."""
        mx = mx or max(2 * (degx + 1), 64)
        my = my or max(2 * (degy + 1), 32)
        xs, ys = domain.nodes(mx, my)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        u, v = fun(X, Y)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DomainError("2D map fit produced non-finite samples")
        out = []
        for vals in (u, v):
            b = np.fft.fft2(np.asarray(vals, dtype=complex)) / (mx * my)
            b = _axis_recover(b, domain.x, degx, axis=0)
            b = _axis_recover(b, domain.y, degy, axis=1)
            out.append(BiSeries(b, domain))
        return cls(out[0], out[1])

    def eval(self, xs, ys, check=False):
        return self.f1.eval(xs, ys, check=check), self.f2.eval(xs, ys, check=check)

    def apply(self, state, check=False):
        return self.eval(state[0], state[1], check=check)

    def p1(self):
        """First-component section at y = 0 (a 1D map on the x-chart)."""
        return self.f1.section_y(0.0)

    def p2(self):
        return self.f2.section_y(0.0)

    def scale_input(self, lam):
        return AnalyticMap2D(self.f1.scale_input(lam), self.f2.scale_input(lam))

    def sup_norm(self, mx=96, my=48):
        """sup over the distinguished boundary; |(u, v)| is max-component,
        which makes the diagonal embedding an exact isometry."""
        xs, ys = self.domain.nodes(mx, my)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        u, v = self.eval(X, Y)
        return float(np.max(np.maximum(np.abs(u), np.abs(v))))

    def y_norm(self, mx=96, my=48):
        """sup of |d/dy (f1, f2)| over the distinguished boundary."""
        d1, d2 = self.f1.dy(), self.f2.dy()
        xs, ys = self.domain.nodes(mx, my)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return float(
            np.max(np.maximum(np.abs(d1.eval(X, Y)), np.abs(d2.eval(X, Y))))
        )

    def diag_norm(self, mx=96, my=48):
        xs, ys = self.domain.nodes(mx, my)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        u, v = self.eval(X, Y)
        return float(np.max(np.abs(u - v)))

    def tail_estimate(self, band=3):
        return max(self.f1.tail_estimate(band), self.f2.tail_estimate(band))

    def to_json_dict(self):
        return {"f1": self.f1.to_json_dict(), "f2": self.f2.to_json_dict()}
