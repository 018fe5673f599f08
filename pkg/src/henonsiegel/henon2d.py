"""Henon maps, 2D pairs, and the two-dimensional renormalization operator.

The operator is pre-renormalization (word recombination conjugated by the
nonlinear changes of coordinates H and V), critical projection (paired
translations), linear rescaling, and the almost-commuting projection on
first-component data.  All compositions are evaluated pointwise along the
chain with vectorized Newton solves for the three inverse branches, then
refit as bivariate series on the target product domains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import domains as dom1d
from .biseries import AnalyticMap2D, BiSeries, ProductDomain
from .errors import (
    CriticalPointAmbiguityError,
    DomainError,
    DegenerateRescaleError,
    NonDissipativeError,
    NonInvertibleError,
    ProjectionFailureError,
    StageFailureError,
)
from .pairs import Pair1D
from .quadratic import MU_STAR, THETA_STAR
from .series import AnalyticMap1D, DiskDomain, argument_principle_zeros, fit_samples

CONFORMALITY_THRESHOLD = 1e-8
DEFAULT_DEGX = 80
DEFAULT_DEGY = 32

# Chain evaluations tolerate mild extrapolation beyond the charts: the true
# singular structure sits at membership ~1.5, so values at <= 1.15 are still
# spectrally accurate.  Transient orbit levels rotate their sampling cells
# slightly out of the fixed-point-calibrated charts and need this headroom.
CHAIN_SLACK = 1.15

# Asymptotic branch anchors (the zero of eta o xi on the dynamical sheet and
# its xi-image); correct once an orbit has converged near the fixed point.
W_HAT_STD = -0.2244 - 0.5188j
T_HAT_STD = 0.7576 + 0.0812j

# y-factor of the product domains: second components of near-diagonal pairs
# take values in both letter-type cluster systems, so one disk covers all.
Y_STD = DiskDomain(0.30 - 0.25j, 1.00)
Y_WIDE = DiskDomain(0.30 - 0.10j, 1.10)

# One 2D step is four 1D steps, so the cluster geometry is near-asymptotic
# from level 1 on; only the seed level needs its own (rotated) charts.
Z2_SEED = DiskDomain(0.45 + 0.15j, 1.45)
W2_SEED = DiskDomain(0.10 + 0.00j, 1.75)


@dataclass(frozen=True)
class PairDomains2D:
    omega: ProductDomain
    gamma: ProductDomain

    def descriptor(self):
        return {"omega": self.omega.descriptor(), "gamma": self.gamma.descriptor()}


def pair_domains_2d(level=None):
    if level == 0:
        return PairDomains2D(
            ProductDomain(Z2_SEED, Y_WIDE), ProductDomain(W2_SEED, Y_WIDE)
        )
    base = dom1d.pair_domains()
    return PairDomains2D(ProductDomain(base.z, Y_STD), ProductDomain(base.w, Y_STD))


# -- Henon parameterization -------------------------------------------------


@dataclass(frozen=True)
class HenonParams:
    """Dissipative Henon map H(x, y) = (x^2 + c + a y, a x)."""

    mu: complex
    nu: complex
    a: complex
    c: complex

    def validate(self, tol=1e-14):
        if abs(self.mu * self.nu + self.a**2) > tol:
            raise ValueError("multiplier identity mu*nu = -a^2 violated")
        q = self.mu / 2.0 - self.a**2 / (2.0 * self.mu)
        if abs(self.c - ((1.0 - self.a**2) * q - q * q)) > tol:
            raise ValueError("c is inconsistent with (mu, a)")
        return self

    def to_json_dict(self):
        return {
            "mu": [self.mu.real, self.mu.imag],
            "nu": [self.nu.real, self.nu.imag],
            "a": [self.a.real, self.a.imag],
            "c": [self.c.real, self.c.imag],
        }


def henon_from_multipliers(mu, nu, degenerate_ok=True) -> HenonParams:
    """Parameters from the fixed-point multipliers.

    a is the principal square root of -mu*nu (the H_{c,a} ~ H_{c,-a}
    conjugacy makes the branch immaterial; the principal choice is recorded
    by construction).
    """
    mu, nu = complex(mu), complex(nu)
    if abs(abs(mu) - 1.0) > 1e-12:
        raise ValueError(f"|mu| must be 1, got {abs(mu)}")
    if abs(nu) >= 1.0:
        raise NonDissipativeError(f"|nu| = {abs(nu)} is not dissipative")
    if nu == 0 and not degenerate_ok:
        raise ValueError("nu = 0 requires degenerate mode")
    a = np.sqrt(complex(-mu * nu))
    q = mu / 2.0 - a**2 / (2.0 * mu)
    c = (1.0 - a**2) * q - q * q
    return HenonParams(mu=mu, nu=nu, a=complex(a), c=complex(c))


def golden_henon(nu) -> HenonParams:
    return henon_from_multipliers(MU_STAR, nu)


def henon_apply(p: HenonParams, v):
    x, y = v
    return (x * x + p.c + p.a * y, p.a * x)


def henon_apply_inverse(p: HenonParams, v):
    """Inverse of the Henon automorphism (a must be nonzero)."""
    if p.a == 0:
        raise DegenerateRescaleError("degenerate Henon map is not invertible")
    x, y = v
    return (y / p.a, (x - (y / p.a) ** 2 - p.c) / p.a)


def semi_siegel_fixed_point(p: HenonParams):
    qx = (p.mu + p.nu) / 2.0
    return (qx, p.a * qx)


# -- 2D pairs ---------------------------------------------------------------


@dataclass(frozen=True)
class Pair2D:
    """Pair (A on Omega, B on Gamma) of two-component analytic maps."""

    A: AnalyticMap2D
    B: AnalyticMap2D

    def domains(self):
        return PairDomains2D(self.A.domain, self.B.domain)

    def norm(self):
        return 0.5 * (self.A.sup_norm() + self.B.sup_norm())

    def y_norm(self):
        return 0.5 * (self.A.y_norm() + self.B.y_norm())

    def diag_norm(self):
        return 0.5 * (self.A.diag_norm() + self.B.diag_norm())

    def sections(self) -> Pair1D:
        """The first-component sections (p1 A, p1 B) as a 1D pair."""
        return Pair1D(self.A.p1(), self.B.p1())

    def apply_letter(self, letter, state, stage="", slack=None):
        slack = CHAIN_SLACK if slack is None else slack
        f = self.A if letter == "A" else self.B
        mx = float(np.max(f.domain.x.membership(state[0])))
        my = float(np.max(f.domain.y.membership(state[1])))
        if max(mx, my) > slack:
            raise StageFailureError(
                f"{stage}: letter {letter} evaluated outside its domain "
                f"(x-membership {mx:.4f}, y-membership {my:.4f})",
                stage=stage,
            )
        return f.apply(state)


def norms_2d(sigma: Pair2D):
    """(norm, y_norm, diag_norm) boundary-sampling estimates."""
    return sigma.norm(), sigma.y_norm(), sigma.diag_norm()


def embed_iota(zeta: Pair1D, domains: PairDomains2D | None = None, degy=None) -> Pair2D:
    """Diagonal embedding iota((eta, xi)): both components f(x), no y-terms.

    Exact on coefficients when the 1D charts match the product x-charts;
    otherwise the 1D maps are refit first.
    """
    domains = domains or pair_domains_2d()
    degy = degy if degy is not None else DEFAULT_DEGY
    out = []
    for f, pd in ((zeta.eta, domains.omega), (zeta.xi, domains.gamma)):
        if f.domain != pd.x:
            f = f.refit(pd.x)
        c = np.zeros((f.coeffs.size, degy + 1), dtype=complex)
        c[:, 0] = f.coeffs
        comp = BiSeries(c, pd)
        out.append(AnalyticMap2D(comp, comp))
    return Pair2D(out[0], out[1])


def henon_pair(p: HenonParams, domains: PairDomains2D | None = None,
               degx=DEFAULT_DEGX, degy=DEFAULT_DEGY) -> Pair2D:
    """The renormalization seed Lambda(H^2, H) in critical-centred coordinates.

    Standard Henon coordinates already place the critical line of the first
    component at x = 0 (centring at the semi-Siegel fixed point would make
    the rescaling constant p1 H(0) vanish identically, so the critical
    structure, not the fixed point, anchors the pairing).
    """
    domains = domains or pair_domains_2d(0)
    lam = p.c  # p1 of the B-slot at the origin, pre-rescale
    if abs(lam) < 1e-13:
        raise DegenerateRescaleError("p1 H(0) = c vanishes; cannot rescale")

    def slot_b(x, y):
        u, v = henon_apply(p, (lam * x, lam * y))
        return u / lam, v / lam

    def slot_a(x, y):
        u, v = henon_apply(p, henon_apply(p, (lam * x, lam * y)))
        return u / lam, v / lam

    a_map = AnalyticMap2D.fit(slot_a, domains.omega, degx, degy)
    b_map = AnalyticMap2D.fit(slot_b, domains.gamma, degx, degy)
    return Pair2D(a_map, b_map)


# -- inverse-branch machinery -----------------------------------------------


def _grid_min(fun, domain, n=48):
    """Coarse grid argmin of |fun| over a disk/ellipse domain."""
    if domain.kind == "disk":
        r = domain.radius * np.sqrt(np.linspace(0.02, 0.96, n))
        th = 2 * np.pi * np.arange(n) / n
        pts = (domain.center + np.outer(r, np.exp(1j * th))).ravel()
    else:
        pts = np.concatenate([_shrunk_nodes(domain, t, n) for t in
                              np.linspace(0.15, 0.95, 12)])
    vals = np.abs(fun(pts))
    vals = np.where(np.isfinite(vals), vals, np.inf)
    return complex(pts[np.argmin(vals)])


def _shrunk_nodes(dom, t, n):
    mid = 0.5 * (dom.f1 + dom.f2)
    from .series import EllipseDomain

    d = EllipseDomain(mid + t * (dom.f1 - mid), mid + t * (dom.f2 - mid), dom.rho)
    return d.nodes(n)


def _newton_1d(fun, dfun, targets, seed, stage, domain=None, steps=60,
               thresh=CONFORMALITY_THRESHOLD, homotopy_stages=8,
               slack=CHAIN_SLACK):
    """Branch-tracking Newton: walk targets from the seed's value outward.

    The homotopy keeps every point on the sheet connected to the seed; a
    plain Newton start can leap to another preimage when the target is far
    from the anchor value.
    """
    targets = np.asarray(targets, dtype=complex)
    z = np.full(np.shape(targets), complex(seed), dtype=complex)
    f0 = fun(z)

    def solve(tgt, z):
        for _ in range(steps):
            f = fun(z) - tgt
            d = dfun(z)
            if np.min(np.abs(d)) < thresh:
                raise NonInvertibleError(
                    f"{stage}: derivative below conformality threshold "
                    f"({np.min(np.abs(d)):.2e})"
                )
            step = f / d
            z = z - step
            if np.max(np.abs(step)) < 1e-13:
                return z
        raise NonInvertibleError(f"{stage}: branch Newton failed to converge")

    for tau in np.linspace(1.0 / homotopy_stages, 1.0, homotopy_stages):
        z = solve((1.0 - tau) * f0 + tau * targets, z)
    if domain is not None:
        worst = float(np.max(domain.membership(z)))
        if worst > slack:
            raise StageFailureError(
                f"{stage}: inverse branch left its chart "
                f"(membership {worst:.4f})",
                stage=stage,
            )
    return z


@dataclass
class BranchAnchors:
    """Seed points selecting the inverse branches of one renormalization step."""

    w_hat: complex      # zero of eta1 o xi1 inside the B x-chart
    t_hat: complex      # xi1(w_hat): zero of eta1, anchors the a_y-inversion


def _candidate_zeros(sigma: Pair2D):
    """Zeros of eta1 o xi1 inside the B x-chart, by series rootfinding."""
    eta1, xi1 = sigma.A.p1(), sigma.B.p1()
    dom = sigma.B.domain.x
    deg = min(eta1.degree, 64)
    vals = eta1.eval(xi1.eval(dom.nodes(4 * (deg + 1))))
    chi = AnalyticMap1D(fit_samples(vals, dom, deg), dom)
    roots = chi.roots_in_domain()
    # polish on the true composition and drop spurious truncation roots
    e1d, x1d = eta1.derivative(), xi1.derivative()
    out = []
    for r in roots:
        z = complex(r)
        try:
            for _ in range(40):
                f = complex(eta1.eval(xi1.eval(z)))
                d = complex(e1d.eval(xi1.eval(z))) * complex(x1d.eval(z))
                if abs(d) < CONFORMALITY_THRESHOLD:
                    raise NonInvertibleError("flat")
                z -= f / d
                if abs(f) < 1e-13:
                    break
        except (NonInvertibleError, OverflowError):
            continue
        if abs(complex(eta1.eval(xi1.eval(z)))) < 1e-10 and dom.contains(z, 1.0):
            if all(abs(z - u) > 1e-6 for u in out):
                out.append(z)
    return out


def _roots_of_section(section, max_degree=64):
    dom = section.domain
    deg = min(section.degree, max_degree)
    vals = section.eval(dom.nodes(4 * (deg + 1)))
    fit = AnalyticMap1D(fit_samples(vals, dom, deg), dom)
    return [complex(r) for r in fit.roots_in_domain()]


def sheet_consistency(sigma: Pair2D, anchors: BranchAnchors):
    """Round-trip residual of the opening branches on the dynamical sheets.

    The closing of each chain lands on the dynamical preimages (it is
    seeded from the chain's own previous state), so the opening branches
    must decode those clusters back to themselves; otherwise the two
    pre-renormalized maps stop commuting at the scale of the off-diagonal
    part.  Returns the max round-trip mismatch over the cluster centres.
    """
    eta1, xi1 = sigma.A.p1(), sigma.B.p1()
    e1d, x1d = eta1.derivative(), xi1.derivative()

    def chi(z):
        return eta1.eval(xi1.eval(z))

    def dchi(z):
        return e1d.eval(xi1.eval(z)) * x1d.eval(z)

    def prefix_value(rest):
        z = 0.0 + 0.0j
        for letter in rest[:-1]:
            z = complex(eta1.eval(z)) if letter == "A" else complex(xi1.eval(z))
        return z

    v_a = prefix_value(_REST_A)   # closing cluster centre of the A-chain
    v_b = prefix_value(_REST_B)   # and of the B-chain
    res = 0.0
    for v in (v_a, v_b):
        w = complex(_newton_1d(chi, dchi, complex(chi(v)), anchors.w_hat,
                               "sheet check w"))
        res = max(res, abs(w - v))
        s_final = complex(xi1.eval(v))    # state entering the closing H
        tt = complex(_newton_1d(eta1.eval, e1d.eval,
                                complex(eta1.eval(s_final)),
                                anchors.t_hat, "sheet check t"))
        res = max(res, abs(tt - s_final))
    return res


def compute_anchors(sigma: Pair2D, hint: BranchAnchors | None = None,
                    tol=1e-8) -> BranchAnchors:
    """Branch anchors of one step, selected by sheet consistency.

    The opening inverse branches must live on the sheets the dynamics uses;
    candidates (threaded hint, asymptotic anchors, zeros of the relevant
    sections) are screened by the decode round-trip residual.
    """
    eta1, xi1 = sigma.A.p1(), sigma.B.p1()

    w_cands = []
    t_cands = []
    if hint is not None:
        w_cands.append(hint.w_hat)
        t_cands.append(hint.t_hat)
    w_cands.append(W_HAT_STD)
    t_cands.append(T_HAT_STD)
    # hint pairs are tried before cross-combinations; screening rejects any
    # stale combination, so threading can never lock in a wrong sheet

    def chi(w):
        return eta1.eval(xi1.eval(w))

    chi_fit_dom = sigma.B.domain.x
    deg = min(eta1.degree, 64)
    vals = chi(chi_fit_dom.nodes(4 * (deg + 1)))
    chi_series = AnalyticMap1D(fit_samples(vals, chi_fit_dom, deg), chi_fit_dom)
    w_cands.extend(complex(r) for r in chi_series.roots_in_domain())
    t_cands.extend(_roots_of_section(eta1))

    best = None
    for w0 in w_cands[:12]:
        for t0 in t_cands[:8]:
            if not (sigma.B.domain.x.contains(w0, CHAIN_SLACK)
                    and sigma.A.domain.x.contains(t0, CHAIN_SLACK)):
                continue
            anc = BranchAnchors(w_hat=complex(w0), t_hat=complex(t0))
            try:
                res = sheet_consistency(sigma, anc)
            except (StageFailureError, NonInvertibleError,
                    DegenerateRescaleError, DomainError):
                continue
            if res < tol:
                return anc
            if best is None or res < best[0]:
                best = (res, anc)
    if best is None:
        raise StageFailureError(
            "no admissible branch-anchor combination supports the chain",
            stage="anchors",
        )
    return best[1]


def prepare_step(sigma: Pair2D, hint: BranchAnchors | None = None,
                 tol=1e-8) -> StepCharts:
    """Anchors plus fitted charts, retrying anchor combinations as needed.

    A combination must pass the sheet round-trips and support wide enough
    inverse-branch fits for the operator's sampling cells.
    """
    eta1, xi1 = sigma.A.p1(), sigma.B.p1()
    w_cands = []
    t_cands = []
    if hint is not None:
        w_cands.append(hint.w_hat)
        t_cands.append(hint.t_hat)
    w_cands.append(W_HAT_STD)
    t_cands.append(T_HAT_STD)

    chi_fit_dom = sigma.B.domain.x
    deg = min(eta1.degree, 64)
    vals = eta1.eval(xi1.eval(chi_fit_dom.nodes(4 * (deg + 1))))
    chi_series = AnalyticMap1D(fit_samples(vals, chi_fit_dom, deg), chi_fit_dom)
    w_cands.extend(complex(r) for r in chi_series.roots_in_domain())
    t_cands.extend(_roots_of_section(eta1))

    last_error = None
    for w0 in w_cands[:12]:
        for t0 in t_cands[:8]:
            if not (sigma.B.domain.x.contains(w0, CHAIN_SLACK)
                    and sigma.A.domain.x.contains(t0, CHAIN_SLACK)):
                continue
            anc = BranchAnchors(w_hat=complex(w0), t_hat=complex(t0))
            try:
                if sheet_consistency(sigma, anc) > tol:
                    continue
                return fit_step_charts(sigma, anc)
            except (StageFailureError, NonInvertibleError,
                    DegenerateRescaleError, DomainError) as e:
                last_error = e
                continue
    raise StageFailureError(
        f"no branch-anchor combination supports the step ({last_error})",
        stage="anchors",
    )


# conjugated word letter lists (first applied first), with the leading A
# absorbed into the A o H^{-1} group
_REST_A = ("A", "B", "A", "B", "A", "A", "B")
_REST_B = ("B", "A", "A", "B")


@dataclass
class StepCharts:
    """Single-valued inverse-branch series of one renormalization step.

    Fitting the branches once per step (by homotopy continuation from the
    anchors on a disk of target values) and evaluating the series
    everywhere makes the coordinate changes honest single-valued maps;
    per-call Newton continuation is path-dependent and can hop sheets on
    wide target regions, silently breaking the conjugacy.
    """

    anchors: BranchAnchors
    inv_chi: object          # (eta1 o xi1)^{-1} on a value disk about 0
    inv_a: object            # (x-value, y) -> t with a(t, y) = x, t-hat sheet


def fit_step_charts(sigma: Pair2D, anchors: BranchAnchors, r_value=0.80,
                    r_min=0.52, deg_chi=64, degx_a=48, tol=1e-9) -> StepCharts:
    """Fit the opening inverse branches as series on value disks.

    The disks must stay large enough for the operator's sampling cells
    (r_min); an anchor whose branch cannot be fitted that widely is
    rejected so the caller can try another sheet.
    """
    eta1, xi1 = sigma.A.p1(), sigma.B.p1()
    e1d, x1d = eta1.derivative(), xi1.derivative()
    a_bi = sigma.A.f1
    ax_bi = a_bi.dx()

    def chi(z):
        return eta1.eval(xi1.eval(z))

    def dchi(z):
        return e1d.eval(xi1.eval(z)) * x1d.eval(z)

    r = r_value
    inv_chi = None
    while r >= r_min:
        try:
            dom = DiskDomain(0.0, r)
            nodes = dom.nodes(4 * (deg_chi + 1))
            w = _newton_1d(chi, dchi, nodes, anchors.w_hat, "inv_chi fit",
                           domain=sigma.B.domain.x)
            inv_chi = AnalyticMap1D(fit_samples(w, dom, deg_chi), dom)
            probe = DiskDomain(0.0, 0.7 * r).nodes(37)
            err = float(np.max(np.abs(chi(inv_chi.eval(probe)) - probe)))
            if err > tol:
                raise NonInvertibleError(f"inv_chi residual {err:.2e}")
            break
        except (NonInvertibleError, StageFailureError):
            inv_chi = None
            r *= 0.85
    if inv_chi is None:
        raise StageFailureError(
            "V-change inverse branch could not be fitted "
            "(domain condition on eta1 o xi1 fails)", stage="charts")

    degy = sigma.A.f1.degrees[1]
    r = r_value
    inv_a = None
    while r >= r_min:
        try:
            pd = ProductDomain(DiskDomain(0.0, r), sigma.A.domain.y)

            def fun(X, Y):
                return _newton_1d(
                    lambda z: a_bi.eval(z, Y),
                    lambda z: ax_bi.eval(z, Y),
                    X, anchors.t_hat, "inv_a fit",
                    domain=sigma.A.domain.x,
                )

            inv_a = BiSeries.fit(fun, pd, degx_a, degy)
            xs = DiskDomain(0.0, 0.7 * r).nodes(17)
            ys = sigma.A.domain.y.nodes(9)
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            t = inv_a.eval(X, Y)
            err = float(np.max(np.abs(a_bi.eval(t, Y) - X)))
            if err > tol:
                raise NonInvertibleError(f"inv_a residual {err:.2e}")
            break
        except (NonInvertibleError, StageFailureError):
            inv_a = None
            r *= 0.85
    if inv_a is None:
        raise StageFailureError(
            "H-change inverse branch could not be fitted "
            "(conformality of the first component fails)", stage="charts")
    return StepCharts(anchors=anchors, inv_chi=inv_chi, inv_a=inv_a)


def _pre_chain(sigma: Pair2D, charts: StepCharts, rest, px, py, stage):
    """Evaluate V o H o A^{-1} Sigma^w A o H^{-1} o V^{-1} pointwise."""
    eta1, xi1, xi2 = sigma.A.p1(), sigma.B.p1(), sigma.B.p2()
    x2d = xi2.derivative()

    # V^{-1}: y-component through the fitted (eta1 xi1)-branch
    memb = float(np.max(charts.inv_chi.domain.membership(py)))
    if memb > 1.0 + 1e-9:
        raise StageFailureError(
            f"{stage}: V-inverse target leaves the fitted branch disk "
            f"(membership {memb:.4f})", stage=stage)
    w = charts.inv_chi.eval(py)
    qy = xi2.eval(w)

    # H^{-1} then A, grouped: only the second component needs the branch
    memb = float(np.max(charts.inv_a.domain.membership(px, qy)))
    if memb > 1.0 + 1e-9:
        raise StageFailureError(
            f"{stage}: H-inverse target leaves the fitted branch region "
            f"(membership {memb:.4f})", stage=stage)
    t = charts.inv_a.eval(px, qy)
    state = (px, sigma.A.f2.eval(t, qy))

    prev_x = None
    for i, letter in enumerate(rest):
        prev_x = state[0]
        state = sigma.apply_letter(letter, state, stage=f"{stage}: word[{i}]")

    # H then V.  Both conjugated words end in a B-letter, so the state
    # feeding that letter is the dynamical xi2-preimage of the closing
    # y-values; seeding Newton there keeps the closing on the same branch
    # sheet the dynamics uses (a grid-min anchor can pick a different
    # preimage and silently break the conjugacy).
    out_x = sigma.A.f1.eval(state[0], state[1])
    v = state[1] * 0 + prev_x
    for _ in range(60):
        f = xi2.eval(v) - state[1]
        d = x2d.eval(v)
        if np.min(np.abs(d)) < CONFORMALITY_THRESHOLD:
            raise NonInvertibleError(
                f"{stage}: V-closing derivative below conformality threshold"
            )
        step = f / d
        v = v - step
        if np.max(np.abs(step)) < 1e-13:
            break
    else:
        raise NonInvertibleError(f"{stage}: V-closing Newton failed")
    out_y = eta1.eval(xi1.eval(v))
    return out_x, out_y


# -- operator stages --------------------------------------------------------


@dataclass
class RenormStep:
    """Diagnostics and scope-map ingredients of one 2D renormalization step."""

    level: int
    lambda_n: complex
    d_n: complex
    c_b: complex
    y_norm: float
    diag_norm: float
    sup_norm: float
    dist_iota: float
    crit_deriv_a: float
    crit_deriv_b: float
    ac_correction: float
    pre_y_norm: float
    pre_dist_iota_r4: float
    anchors: BranchAnchors = field(repr=False, default=None)
    charts: StepCharts = field(repr=False, default=None)
    input_pair: Pair2D = field(repr=False, default=None)

    def to_json_dict(self):
        return {
            "level": self.level,
            "lambda_n": [self.lambda_n.real, self.lambda_n.imag],
            "d_n": [self.d_n.real, self.d_n.imag],
            "c_b": [self.c_b.real, self.c_b.imag],
            "y_norm": self.y_norm,
            "diag_norm": self.diag_norm,
            "sup_norm": self.sup_norm,
            "dist_iota": self.dist_iota,
            "crit_deriv_a": self.crit_deriv_a,
            "crit_deriv_b": self.crit_deriv_b,
            "ac_correction": self.ac_correction,
            "pre_y_norm": self.pre_y_norm,
            "pre_dist_iota_r4": self.pre_dist_iota_r4,
        }


def _inflate(dom, f):
    if dom.kind == "disk":
        return DiskDomain(dom.center, f * dom.radius)
    from .series import EllipseDomain

    mid = 0.5 * (dom.f1 + dom.f2)
    return EllipseDomain(mid + f * (dom.f1 - mid), mid + f * (dom.f2 - mid), dom.rho)


def _inflate_product(pd: ProductDomain, f):
    return ProductDomain(_inflate(pd.x, f), _inflate(pd.y, f))


def prerenorm2d(sigma: Pair2D, out_domains: PairDomains2D | None = None,
                degx=None, degy=None, charts: StepCharts | None = None,
                margin=1.04):
    """The pre-renormalization (A1, B1) on the contracted product domains.

    The pair is fit on the rescale-contracted images of the *target* charts
    (slightly inflated to absorb the critical-projection translations), so
    oversized seed charts never blow up the sampling cell.  Returns
    (pair, diagnostics) with the contraction estimate.
    """
    degx = degx if degx is not None else sigma.A.f1.degrees[0]
    degy = degy if degy is not None else sigma.A.f1.degrees[1]
    if charts is None:
        charts = fit_step_charts(sigma, compute_anchors(sigma))
    out_domains = out_domains or pair_domains_2d()

    lam_est = complex(
        _pre_chain(sigma, charts, _REST_B, 0.0, 0.0, "pR lambda")[0]
    )
    if abs(lam_est) < 1e-13:
        raise DegenerateRescaleError("pre-renormalization contraction vanishes")

    om1 = _inflate_product(out_domains.omega, margin).scale_input(1.0 / lam_est)
    ga1 = _inflate_product(out_domains.gamma, margin).scale_input(1.0 / lam_est)

    def fa(x, y):
        return _pre_chain(sigma, charts, _REST_A, x, y, "pR A1")

    def fb(x, y):
        return _pre_chain(sigma, charts, _REST_B, x, y, "pR B1")

    a1 = AnalyticMap2D.fit(fa, om1, degx, degy)
    b1 = AnalyticMap2D.fit(fb, ga1, degx, degy)
    pair = Pair2D(a1, b1)
    diag = {"lambda_estimate": lam_est, "pre_y_norm": pair.y_norm()}
    return pair, diag


def _section_series(fun_1d, radius, degree=16, samples=96):
    dom = DiskDomain(0.0, radius)
    vals = fun_1d(dom.nodes(samples))
    return AnalyticMap1D(fit_samples(vals, dom, degree), dom)


def _critical_point(fun_1d, radius, stage):
    """Unique critical point of a 1D section near 0, certified by winding."""
    f = _section_series(fun_1d, radius)
    df = f.derivative()
    try:
        n = argument_principle_zeros(df, 0.0, radius * 0.98)
    except NonInvertibleError as e:
        raise CriticalPointAmbiguityError(f"{stage}: {e}")
    if n != 1:
        raise CriticalPointAmbiguityError(
            f"{stage}: expected one critical point on the search disk, found {n}"
        )
    z = 0.0 + 0.0j
    d2 = df.derivative()
    for _ in range(60):
        step = complex(df.eval(z)) / complex(d2.eval(z))
        z -= step
        if abs(step) < 1e-15:
            break
    return complex(z)


def critical_projection(sigma1: Pair2D, search_fraction=0.35):
    """Paired translations (T_a, T_b) centring the composition critical points.

    Returns (pair, (c_a, c_b), diagnostics).  The search disk radius is a
    fraction of the contracted domain scale.
    """
    radius = search_fraction * abs(sigma1.B.domain.x.radius
                                   if sigma1.B.domain.x.kind == "disk" else 1.0)

    def comp_ba(x):
        u, v = sigma1.A.eval(x, np.zeros_like(x))
        return sigma1.B.f1.eval(u, v)

    c_a = _critical_point(comp_ba, radius, "critical projection T_a")

    def comp_ab(x):
        u, v = sigma1.B.eval(x + c_a, np.zeros_like(x))
        return sigma1.A.f1.eval(u, v) - c_a

    c_b = _critical_point(comp_ab, radius, "critical projection T_b")

    a2 = AnalyticMap2D(
        BiSeries(sigma1.A.f1.coeffs, sigma1.A.f1.domain.shift_x(c_a)).add_x_function(
            AnalyticMap1D.from_power_series(
                [-c_a - c_b], sigma1.A.f1.domain.shift_x(c_a).x, degree=1)
        ),
        BiSeries(sigma1.A.f2.coeffs, sigma1.A.f2.domain.shift_x(c_a)),
    )
    b2 = AnalyticMap2D(
        BiSeries(sigma1.B.f1.coeffs,
                 sigma1.B.f1.domain.shift_x(c_a + c_b)).add_x_function(
            AnalyticMap1D.from_power_series(
                [-c_a], sigma1.B.f1.domain.shift_x(c_a + c_b).x, degree=1)
        ),
        BiSeries(sigma1.B.f2.coeffs, sigma1.B.f2.domain.shift_x(c_a + c_b)),
    )
    pair = Pair2D(a2, b2)
    diag = {
        "crit_deriv_a": abs(complex(pair.A.p1().derivative().eval(0.0))),
        "crit_deriv_b": abs(complex(pair.B.p1().derivative().eval(0.0))),
    }
    return pair, (c_a, c_b), diag


def rescale_2d(sigma2: Pair2D, out_domains: PairDomains2D, degx, degy) -> Pair2D:
    """Conjugate by s(x, y) = (lam x, lam y), lam = p1 B(0), refit on targets."""
    lam = complex(sigma2.B.p1().eval(0.0))
    if abs(lam) < 1e-13:
        raise DegenerateRescaleError("rescaling constant p1 B(0) vanishes")

    def make(mapped, pd):
        def fun(x, y):
            u, v = mapped.eval(lam * x, lam * y)
            return u / lam, v / lam

        return AnalyticMap2D.fit(fun, pd, degx, degy)

    a3 = make(sigma2.A, out_domains.omega)
    b3 = make(sigma2.B, out_domains.gamma)
    c = b3.f1.coeffs.copy()
    c[0, 0] += 1.0 - complex(b3.p1().eval(0.0))
    return Pair2D(a3, AnalyticMap2D(BiSeries(c, b3.f1.domain), b3.f2))


def p1_commutator_defects(sigma: Pair2D, radius=0.08):
    """(p1[A,B](0), p1[A,B]''(0)) from a local section fit."""

    def dfun(x):
        y0 = np.zeros_like(x)
        bu, bv = sigma.B.eval(x, y0)
        au, av = sigma.A.eval(x, y0)
        return sigma.A.f1.eval(bu, bv) - sigma.B.f1.eval(au, av)

    f = _section_series(dfun, radius, degree=10)
    t = f.taylor_at(0.0, degree=3, radius=radius * 0.6)
    return complex(t[0]), complex(2.0 * t[2])


def project_almost_commuting_2d(sigma: Pair2D, tol=1e-12, max_iter=10):
    """Almost-commuting projection: constant and cubic corrections of the
    first component of A (codimension 3 with the p1 B(0) = 1 normalization,
    which the corrections do not disturb)."""
    xchart = sigma.A.domain.x
    basis_one = AnalyticMap1D.from_power_series([1.0], xchart, degree=3)
    basis_cube = AnalyticMap1D.from_power_series([0, 0, 0, 1.0], xchart, degree=3)

    def corrected(p):
        u, v = p
        a1 = sigma.A.f1.add_x_function(basis_one * u).add_x_function(basis_cube * v)
        return Pair2D(AnalyticMap2D(a1, sigma.A.f2), sigma.B)

    def constraints(p):
        pair = corrected(p)
        d0, dpp = p1_commutator_defects(pair)
        return np.array([d0, dpp]), pair

    p = np.zeros(2, dtype=complex)
    vec, pair = constraints(p)
    if np.max(np.abs(vec)) < tol:
        return sigma, 0.0
    h = 1e-7
    for _ in range(max_iter):
        if np.max(np.abs(vec)) < tol:
            break
        jac = np.empty((2, 2), dtype=complex)
        for j in range(2):
            dp = p.copy()
            dp[j] += h
            jac[:, j] = (constraints(dp)[0] - vec) / h
        try:
            p = p + np.linalg.solve(jac, -vec)
        except np.linalg.LinAlgError as e:
            raise ProjectionFailureError(f"2D projection Jacobian singular: {e}")
        vec, pair = constraints(p)
    else:
        raise ProjectionFailureError(
            f"2D projection stalled at defect {np.max(np.abs(vec)):.3e}"
        )
    return pair, float(np.max(np.abs(p)))


def dist_to_iota(sigma: Pair2D):
    """Sup distance between the pair and the embedding of its own sections."""
    out = 0.0
    for m in (sigma.A, sigma.B):
        sec = m.p1()
        xs, ys = m.domain.nodes(64, 32)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        u, v = m.eval(X, Y)
        s = sec.eval(X)
        out = max(out, float(np.max(np.maximum(np.abs(u - s), np.abs(v - s)))))
    return out


def renorm2d(
    sigma: Pair2D,
    out_domains: PairDomains2D | None = None,
    degx=None,
    degy=None,
    level=0,
    project=True,
    anchor_hint: BranchAnchors | None = None,
) -> tuple[Pair2D, RenormStep]:
    """One full 2D renormalization step with stage diagnostics."""
    out_domains = out_domains or pair_domains_2d(level + 1)
    degx = degx if degx is not None else sigma.A.f1.degrees[0]
    degy = degy if degy is not None else sigma.A.f1.degrees[1]

    charts = prepare_step(sigma, hint=anchor_hint)
    anchors = charts.anchors
    pre, pre_diag = prerenorm2d(sigma, out_domains, degx, degy, charts)

    # deviation of pre-renormalization from the embedded 1D four-step image
    sections = sigma.sections()
    pre_dist = _pre_dist_iota_r4(pre, sections)

    crit, (c_a, c_b), crit_diag = critical_projection(pre)
    scaled = rescale_2d(crit, out_domains, degx, degy)
    if project:
        projected, ac_size = project_almost_commuting_2d(scaled)
    else:
        projected, ac_size = scaled, 0.0

    n, yn, dn = norms_2d(projected)
    step = RenormStep(
        level=level,
        lambda_n=complex(pre_diag["lambda_estimate"]),
        d_n=c_a,
        c_b=c_b,
        y_norm=yn,
        diag_norm=dn,
        sup_norm=n,
        dist_iota=dist_to_iota(projected),
        crit_deriv_a=crit_diag["crit_deriv_a"],
        crit_deriv_b=crit_diag["crit_deriv_b"],
        ac_correction=ac_size,
        pre_y_norm=pre_diag["pre_y_norm"],
        pre_dist_iota_r4=pre_dist,
        anchors=anchors,
        charts=charts,
        input_pair=sigma,
    )
    return projected, step


def _pre_dist_iota_r4(pre: Pair2D, sections: Pair1D):
    """|| pR(Sigma) - iota(pR^4(sections)) || on shared sample grids."""
    from .words import apply_word, word

    out = 0.0
    for m, w in ((pre.A, word(4)), (pre.B, word(3))):
        xs, ys = m.domain.nodes(48, 24)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        u, v = m.eval(X, Y)
        try:
            shadow = apply_word(sections, w, X, check=False)
        except Exception:
            return float("nan")
        out = max(out, float(np.max(np.maximum(np.abs(u - shadow),
                                               np.abs(v - shadow)))))
    return out


def renorm_orbit(sigma: Pair2D, steps: int, degx=None, degy=None,
                 start_level=0, project=True):
    """Iterate the 2D operator, returning the orbit and the step records.

    Stops gracefully at the first stage failure (deep levels eventually hit
    the expanding-eigenvalue noise horizon of double precision); the failure
    is recorded on the returned ``failure`` string, None when all steps ran.
    """
    pairs = [sigma]
    records = []
    current = sigma
    hint = None
    failure = None
    for k in range(steps):
        try:
            current, rec = renorm2d(
                current, degx=degx, degy=degy, level=start_level + k,
                project=project, anchor_hint=hint,
            )
        except (StageFailureError, NonInvertibleError, DegenerateRescaleError,
                CriticalPointAmbiguityError, ProjectionFailureError,
                DomainError) as e:
            failure = f"step {start_level + k}: {e}"
            break
        pairs.append(current)
        records.append(rec)
        hint = rec.anchors
    return pairs, records, failure
