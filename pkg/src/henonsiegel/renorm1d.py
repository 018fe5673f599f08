"""One-dimensional renormalization of almost-commuting pairs.

The operator acting on pairs (eta, xi) recombines Fibonacci words and
rescales so the xi-slot fixes 1.  A single step is anti-analytic (it
conjugates by x -> conj(x)); its square collapses to
``rescale o word-recombination`` with no conjugation, which is what the
Newton solver differentiates.  The expanding eigenvalue of that squared
differential is the universality constant of the golden-mean Siegel class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadratic
from .domains import PairDomains, pair_domains
from .errors import (
    CompositionDomainError,
    DegenerateRescaleError,
    HenonSiegelError,
    ProjectionFailureError,
)
from .pairs import Pair1D, coefficient_distance, pair_distance, rescale_pair
from .series import (
    AnalyticMap1D,
    DiskDomain,
    EllipseDomain,
    compose,
    fit_samples,
    sup_distance,
)
from .words import ETA, XI, MultiIndexWord, apply_word, word

NEWTON_TOL = 1e-11
AC_TOL = 1e-10
FD_STEP = 1e-6


# -- elementary operator pieces -------------------------------------------


def _chain(zeta: Pair1D, letters, z, stage=""):
    """Apply a letter sequence to an array of points with domain checks."""
    for i, letter in enumerate(letters):
        f = zeta.eta if letter == ETA else zeta.xi
        memb = f.domain.membership(z)
        worst = float(np.max(memb))
        if worst > 1.0 + 1e-9:
            raise CompositionDomainError(
                f"{stage}: letter {i} ({letter}) leaves its domain "
                f"(membership {worst:.4f})"
            )
        z = f.eval(z)
    return z


def prerenorm(zeta: Pair1D, slot1_domain=None, degree=None, samples=None) -> Pair1D:
    """(eta, xi) -> (eta o xi, eta), no rescaling.

    The second slot is eta itself (its domain simply changes roles).  The
    first slot is refit on ``slot1_domain``; by default the largest disk
    centred at the xi-domain's centre on which the composition is defined.
    """
    deg = degree if degree is not None else max(zeta.eta.degree, zeta.xi.degree)
    if slot1_domain is None:
        slot1_domain = _auto_compose_domain(zeta.eta, zeta.xi)
    slot1 = compose(zeta.eta, zeta.xi, out_domain=slot1_domain, degree=deg,
                    samples=samples)
    return Pair1D(slot1, zeta.eta)


def _auto_compose_domain(outer, inner):
    """Largest shrink of the inner domain toward 0 that composition allows.

    Both renormalization domains contain 0 and the xi-slot fixes 1 inside
    the eta-domain, so shrinking toward the basepoint always terminates.
    """
    dom = inner.domain
    lo, hi = 1e-3, 1.0
    if _compose_ok(outer, inner, _shrink(dom, hi)):
        return dom
    if not _compose_ok(outer, inner, _shrink(dom, lo)):
        raise CompositionDomainError(
            "no shrink of the inner domain toward 0 supports the composition"
        )
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _compose_ok(outer, inner, _shrink(dom, mid)):
            lo = mid
        else:
            hi = mid
    return _shrink(dom, 0.98 * lo)


def _shrink(dom, t, anchor=0.0):
    if dom.kind == "disk":
        return DiskDomain(anchor + t * (dom.center - anchor), t * dom.radius)
    return EllipseDomain(
        anchor + t * (dom.f1 - anchor), anchor + t * (dom.f2 - anchor), dom.rho
    )


def _compose_ok(outer, inner, dom, m=64):
    z = inner.eval(dom.nodes(m))
    return outer.domain.contains(z)


def renorm_even(
    zeta: Pair1D,
    steps: int = 2,
    out_domains: PairDomains | None = None,
    degree=None,
    samples=None,
) -> Pair1D:
    """R^steps for even ``steps``: rescaled word recombination, analytic.

    slot1 = zeta^{word(steps)}, slot2 = zeta^{word(steps-1)}, conjugated by
    s(x) = m x with m = zeta^{word(steps-1)}(0), then xi(0) forced to 1.
    """
    if steps % 2 != 0 or steps < 2:
        raise ValueError("renorm_even needs a positive even step count")
    out = out_domains or pair_domains()
    deg = degree if degree is not None else max(zeta.eta.degree, zeta.xi.degree)
    mspl = samples or max(4 * (deg + 1), 256)

    w1, w0 = word(steps), word(steps - 1)
    m = complex(apply_word(zeta, w0, 0.0, check=False))
    if abs(m) < 1e-13:
        raise DegenerateRescaleError(f"rescaling constant {m} is degenerate")

    x1 = out.z.nodes(mspl)
    v1 = _chain(zeta, w1.letters, m * x1, stage=f"R^{steps} slot1") / m
    eta_new = AnalyticMap1D(fit_samples(v1, out.z, deg), out.z)

    x2 = out.w.nodes(mspl)
    v2 = _chain(zeta, w0.letters, m * x2, stage=f"R^{steps} slot2") / m
    xi_new = AnalyticMap1D(fit_samples(v2, out.w, deg), out.w)
    xi_new = xi_new.add_constant(1.0 - complex(xi_new.eval(0.0)))
    return Pair1D(eta_new, xi_new)


def renorm2(zeta, out_domains=None, degree=None, samples=None):
    return renorm_even(zeta, 2, out_domains, degree, samples)


def renorm4(zeta, out_domains=None, degree=None, samples=None):
    return renorm_even(zeta, 4, out_domains, degree, samples)


def renorm(zeta: Pair1D, out_domains: PairDomains | None = None, degree=None,
           samples=None) -> Pair1D:
    """One anti-analytic renormalization step.

    Output slots are conj o q o conj where q = rescale((eta o xi, eta)); the
    default output domains are derived from the input ones (the natural
    domains of a single step are rotated by the rescaling constant, so they
    cannot be the standard ladder domains).
    """
    deg = degree if degree is not None else max(zeta.eta.degree, zeta.xi.degree)
    mspl = samples or max(4 * (deg + 1), 256)
    lam = complex(zeta.eta.eval(0.0))
    if abs(lam) < 1e-13:
        raise DegenerateRescaleError("eta(0) = 0 makes the rescale degenerate")

    if out_domains is None:
        r_star = _largest_radius_into(zeta.xi, zeta.eta.domain)
        z_out = DiskDomain(0.0, 0.95 * r_star / abs(lam))
        ze = zeta.eta.domain
        w_out = EllipseDomain(
            np.conj(ze.f1 / lam), np.conj(ze.f2 / lam), 1.0 + 0.95 * (ze.rho - 1.0)
        )
        out_domains = PairDomains(z_out, w_out)

    x1 = out_domains.z.nodes(mspl)
    y1 = np.conj(x1)
    v1 = _chain(zeta, (XI, ETA), lam * y1, stage="R slot1") / lam
    eta_new = AnalyticMap1D(fit_samples(np.conj(v1), out_domains.z, deg),
                            out_domains.z)

    x2 = out_domains.w.nodes(mspl)
    y2 = np.conj(x2)
    v2 = _chain(zeta, (ETA,), lam * y2, stage="R slot2") / lam
    xi_new = AnalyticMap1D(fit_samples(np.conj(v2), out_domains.w, deg),
                           out_domains.w)
    xi_new = xi_new.add_constant(1.0 - complex(xi_new.eval(0.0)))
    return Pair1D(eta_new, xi_new)


def _largest_radius_into(f, target_domain, m=96):
    """Largest r with D(0, r) inside f's domain and f(D(0, r)) inside target."""
    lo, hi = 0.0, None
    r = 0.05
    while True:
        z = r * np.exp(2j * np.pi * np.arange(m) / m)
        ok = f.domain.contains(z) and target_domain.contains(f.eval(z))
        if ok:
            lo = r
            r *= 1.25
            if r > 1e3:
                break
        else:
            hi = r
            break
    if lo == 0.0:
        raise CompositionDomainError("no disk about 0 maps into the target domain")
    if hi is None:
        return lo
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        z = mid * np.exp(2j * np.pi * np.arange(m) / m)
        if f.domain.contains(z) and target_domain.contains(f.eval(z)):
            lo = mid
        else:
            hi = mid
    return lo


# -- seed from the degenerate quadratic ------------------------------------


def seed_pair(level=8, degree=80, domains=None, samples=None) -> Pair1D:
    """The level-n Fibonacci-return pair of the golden quadratic, fitted.

    Level 8 (an even level well inside the asymptotic regime) is the default
    Newton seed; the underlying evaluators are exact polynomial iterations.
    """
    if level % 2 != 0:
        raise ValueError("seed levels are even (odd levels live on conjugated "
                         "domains)")
    dom = domains or pair_domains(level)
    eta_f, xi_f = quadratic.pair_evaluators(level)
    eta = AnalyticMap1D.fit(eta_f, dom.z, degree, samples)
    xi = AnalyticMap1D.fit(xi_f, dom.w, degree, samples)
    xi = xi.add_constant(1.0 - complex(xi.eval(0.0)))
    return Pair1D(eta, xi)


# -- almost-commuting projection -------------------------------------------


def _corrected_pair(zeta: Pair1D, p, domains: PairDomains, degree, samples=None):
    """Five-parameter correction family behind the projection.

    p = (a, b, u, v): paired translations T_a, T_b as in the critical
    projection, plus constant and cubic shifts on eta; the final linear
    rescale is solved in closed form by ``rescale_pair``.
    """
    a, b, u, v = p
    eta, xi = zeta.eta, zeta.xi

    def eta_c(x):
        return eta.eval(x + a) - a - b + u + v * x**3

    def xi_c(x):
        return xi.eval(x + a + b) - a

    ec = AnalyticMap1D.fit(eta_c, domains.z, degree, samples)
    xc = AnalyticMap1D.fit(xi_c, domains.w, degree, samples)
    return Pair1D(ec, xc)


def project_almost_commuting(
    zeta: Pair1D,
    domains: PairDomains | None = None,
    tol=1e-13,
    max_iter=12,
    degree=None,
) -> Pair1D:
    """Nearest almost-commuting pair via Newton on the correction family.

    Solves the four analytic constraints (criticality of both slots and the
    0th/2nd commutator derivatives at 0) over (a, b, u, v), then normalizes
    xi(0) = 1 exactly by the closed-form rescale.
    """
    deg = degree if degree is not None else max(zeta.eta.degree, zeta.xi.degree)
    domains = domains or PairDomains(zeta.eta.domain, zeta.xi.domain)

    def constraints(p):
        pair = _corrected_pair(zeta, p, domains, deg)
        ce, cx = pair.criticality_defects()
        d0, dpp = pair.commutator_defects()
        return np.array([ce, cx, d0, dpp]), pair

    p = np.zeros(4, dtype=complex)
    vec, pair = constraints(p)
    if np.max(np.abs(vec)) < tol and abs(zeta.normalization_defect()) < tol:
        return zeta
    h = 1e-7
    for _ in range(max_iter):
        if np.max(np.abs(vec)) < tol:
            break
        jac = np.empty((4, 4), dtype=complex)
        for j in range(4):
            dp = p.copy()
            dp[j] += h
            jac[:, j] = (constraints(dp)[0] - vec) / h
        try:
            step = np.linalg.solve(jac, -vec)
        except np.linalg.LinAlgError as e:
            raise ProjectionFailureError(f"singular projection Jacobian: {e}")
        p = p + step
        vec, pair = constraints(p)
    else:
        raise ProjectionFailureError(
            f"projection Newton stalled at defect {np.max(np.abs(vec)):.3e}"
        )
    out = rescale_pair(pair)
    eta = out.eta.refit(domains.z, deg)
    xi = out.xi.refit(domains.w, deg)
    xi = xi.add_constant(1.0 - complex(xi.eval(0.0)))
    return Pair1D(eta, xi)


# -- Newton solve for the fixed point --------------------------------------
#
# Coefficients are rescaled by the sup norm of their basis element on the
# domain boundary (rho^k-ish for the Chebyshev chart, 1 for the normalized
# disk chart) so that a unit coordinate perturbation means a unit sup-norm
# perturbation of the map.  Without this, finite differences on high-order
# Chebyshev coefficients blow up by rho^N.


def _basis_weights(domain, degree):
    k = np.arange(degree + 1, dtype=float)
    if domain.kind == "disk":
        return np.ones(degree + 1)
    return 0.5 * (domain.rho**k + domain.rho ** (-k))


def _pair_weights(domains: PairDomains, degree):
    return np.concatenate(
        [_basis_weights(domains.z, degree), _basis_weights(domains.w, degree)]
    )


def _vec(zeta: Pair1D, weights=None):
    v = np.concatenate([zeta.eta.coeffs, zeta.xi.coeffs])
    return v * weights if weights is not None else v


def _pair_from_vec(v, domains: PairDomains, degree, weights=None):
    if weights is not None:
        v = v / weights
    n = degree + 1
    return Pair1D(
        AnalyticMap1D(v[:n], domains.z), AnalyticMap1D(v[n : 2 * n], domains.w)
    )


@dataclass
class FixedPointResult:
    """Converged fixed point of the squared renormalization with spectrum data."""

    zeta_star: Pair1D
    residual: float
    lambda_star: complex
    spectrum: np.ndarray
    expanding_eigenvalue: complex
    degree: int
    newton_iterations: int
    constraint_norm: float
    residual_r2: float
    lambda_one_step: complex
    domains: PairDomains = field(repr=False, default=None)

    def to_report(self):
        return {
            "residual": self.residual,
            "residual_r2": self.residual_r2,
            "lambda_star": [self.lambda_star.real, self.lambda_star.imag],
            "lambda_one_step": [
                self.lambda_one_step.real,
                self.lambda_one_step.imag,
            ],
            "spectrum": [[z.real, z.imag] for z in self.spectrum],
            "expanding_eigenvalue": [
                self.expanding_eigenvalue.real,
                self.expanding_eigenvalue.imag,
            ],
            "N": self.degree,
            "newton_iterations": self.newton_iterations,
            "constraint_norm": self.constraint_norm,
            "domains": self.domains.descriptor() if self.domains else None,
        }


def newton_fixed_point(
    initial: Pair1D | None = None,
    degree=80,
    domains: PairDomains | None = None,
    tol=NEWTON_TOL,
    max_iter=40,
    constraint_weight=1.0,
    fd_step=FD_STEP,
    with_spectrum=True,
    seed_level=8,
) -> FixedPointResult:
    """Solve R^2(zeta) = zeta by damped Gauss-Newton on the coefficients.

    The residual stacks the coefficient fixed-point equations with the five
    almost-commuting constraints, so the iteration stays pinned to the
    constraint surface; R^2 preserves that surface exactly, the constraints
    only remove the transverse null directions.
    """
    domains = domains or pair_domains()
    if initial is None:
        initial = seed_pair(level=seed_level, degree=degree, domains=domains)
    zeta = initial
    weights = _pair_weights(domains, degree)

    def residual_vec(v):
        pair = _pair_from_vec(v, domains, degree, weights)
        out = renorm2(pair, out_domains=domains, degree=degree)
        return np.concatenate(
            [_vec(out, weights) - v, constraint_weight * pair.constraint_vector()]
        )

    v = _vec(zeta, weights)
    g = residual_vec(v)
    gn = float(np.linalg.norm(g))
    iterations = 0
    for it in range(max_iter):
        if gn < 0.1 * tol:
            break
        n = v.size
        jac = np.empty((g.size, n), dtype=complex)
        for j in range(n):
            dv = np.zeros(n, dtype=complex)
            dv[j] = fd_step
            jac[:, j] = (residual_vec(v + dv) - residual_vec(v - dv)) / (2 * fd_step)
        step, *_ = np.linalg.lstsq(jac, -g, rcond=None)
        t = 1.0
        g_new = None
        for _ in range(12):
            try:
                g_new = residual_vec(v + t * step)
            except CompositionDomainError:
                t *= 0.5
                continue
            if np.linalg.norm(g_new) < gn:
                break
            t *= 0.5
        else:
            raise HenonSiegelError(
                f"Newton line search failed at iteration {it}, "
                f"residual {gn:.3e}"
            )
        v = v + t * step
        g, gn = g_new, float(np.linalg.norm(g_new))
        iterations = it + 1

    zeta_star = _pair_from_vec(v, domains, degree, weights)
    out2 = renorm2(zeta_star, out_domains=domains, degree=degree)
    residual_r2 = pair_distance(out2, zeta_star)
    out1 = renorm(zeta_star, degree=degree)
    residual_r = pair_distance(out1, zeta_star)
    residual = max(residual_r, residual_r2)

    lam4 = complex(apply_word(zeta_star, word(3), 0.0, check=False))
    lam1 = np.conj(complex(zeta_star.eta.eval(0.0)))

    spectrum = np.array([], dtype=complex)
    expanding = complex("nan")
    if with_spectrum:
        spectrum = spectrum_of_dr2(zeta_star, domains=domains, degree=degree)
        expanding = spectrum[0]

    return FixedPointResult(
        zeta_star=zeta_star,
        residual=residual,
        lambda_star=lam4,
        spectrum=spectrum,
        expanding_eigenvalue=expanding,
        degree=degree,
        newton_iterations=iterations,
        constraint_norm=float(np.max(np.abs(zeta_star.constraint_vector()))),
        residual_r2=residual_r2,
        lambda_one_step=lam1,
        domains=domains,
    )


# -- spectrum of the squared differential ----------------------------------


def constraint_tangent_basis(zeta: Pair1D, domains, degree, h=1e-7, weights=None):
    """Orthonormal basis of the tangent space of the constraint surface,
    in the sup-norm-weighted coordinates."""
    v0 = _vec(zeta, weights)
    n = v0.size
    c0 = zeta.constraint_vector()
    rows = np.empty((c0.size, n), dtype=complex)
    for j in range(n):
        dv = np.zeros(n, dtype=complex)
        dv[j] = h
        pair = _pair_from_vec(v0 + dv, domains, degree, weights)
        rows[:, j] = (pair.constraint_vector() - c0) / h
    # null space of the constraint differential
    _, s, vh = np.linalg.svd(rows)
    rank = int(np.sum(s > 1e-8 * s[0]))
    return vh[rank:].conj().T  # columns span the tangent space


def spectrum_of_dr2(
    zeta_star: Pair1D,
    domains: PairDomains | None = None,
    degree=None,
    fd_step=FD_STEP,
    project_inputs=True,
):
    """Eigenvalues of the finite-difference Jacobian of R^2 on the surface.

    Columns are central differences of R^2 along an orthonormal tangent
    basis of the almost-commuting surface; perturbed inputs are projected
    back onto the surface first.  Sorted by modulus, descending.
    """
    domains = domains or PairDomains(zeta_star.eta.domain, zeta_star.xi.domain)
    degree = degree if degree is not None else zeta_star.eta.degree
    weights = _pair_weights(domains, degree)
    q = constraint_tangent_basis(zeta_star, domains, degree, weights=weights)
    v0 = _vec(zeta_star, weights)

    def image(v):
        pair = _pair_from_vec(v, domains, degree, weights)
        if project_inputs:
            pair = project_almost_commuting(pair, domains=domains, tol=1e-12)
        out = renorm2(pair, out_domains=domains, degree=degree)
        return _vec(out, weights)

    cols = np.empty((q.shape[1], q.shape[1]), dtype=complex)
    for j in range(q.shape[1]):
        vp = image(v0 + fd_step * q[:, j])
        vm = image(v0 - fd_step * q[:, j])
        cols[:, j] = q.conj().T @ ((vp - vm) / (2 * fd_step))
    eig = np.linalg.eigvals(cols)
    return eig[np.argsort(-np.abs(eig))]


def expansion_rate_oracle(
    zeta_star: Pair1D,
    domains: PairDomains | None = None,
    degree=None,
    eps=1e-8,
    steps=10,
    seed=7,
):
    """Convergence-rate oracle for the expanding eigenvalue modulus.

    Perturb the fixed point generically, iterate the projected R^2, and fit
    the slope of log distance-to-fixed-point over the window where the
    unstable component dominates but stays small.  Returns (rate, r2_of_fit).
    """
    domains = domains or PairDomains(zeta_star.eta.domain, zeta_star.xi.domain)
    degree = degree if degree is not None else zeta_star.eta.degree
    weights = _pair_weights(domains, degree)
    rng = np.random.default_rng(seed)
    v0 = _vec(zeta_star, weights)
    u = rng.standard_normal(v0.size) + 1j * rng.standard_normal(v0.size)
    u /= np.linalg.norm(u)

    # renormalized deviation orbit: the deviation is rescaled back to eps
    # after every step, so the iterate never leaves the linear regime and
    # stable-mode contamination dies off geometrically
    log_d = [0.0]
    for _ in range(steps):
        pair = project_almost_commuting(
            _pair_from_vec(v0 + eps * u, domains, degree, weights),
            domains=domains,
            tol=1e-13,
        )
        out = renorm2(pair, out_domains=domains, degree=degree)
        du = (_vec(out, weights) - v0) / eps
        growth = float(np.linalg.norm(du))
        log_d.append(log_d[-1] + np.log(growth))
        u = du / growth

    burn = min(3, steps - 3)
    k = np.arange(burn, steps + 1)
    y = np.array(log_d)[burn:]
    slope, intercept = np.polyfit(k, y, 1)
    fit = slope * k + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(np.exp(slope)), r2
