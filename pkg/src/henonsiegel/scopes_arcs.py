"""Scope maps, their compositions, renormalization arcs, and the boundary.

A scope map conjugates level-(n+1) dynamics into a microscopic piece of
level-n dynamics.  Chains of scope maps contract to a point of the
invariant arc; the arc itself is sampled as the orbit of that point under
the pair dynamics, with parameters tracked exactly as integer combinations
a - b*theta of the golden rotation.

Orbits are hybrid: 2D renormalization records while they last (the
expanding eigenvalue amplifies numerical noise, so double precision
supports finitely many levels), then the embedded 1D section orbit, then
the scope map frozen at its own fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HenonSiegelError, OrbitEscapeError
from .henon2d import (
    HenonParams,
    Pair2D,
    RenormStep,
    golden_henon,
    henon_apply,
    henon_pair,
    pair_domains_2d,
    renorm_orbit,
    _newton_1d,
)
from .pairs import Pair1D
from .quadratic import THETA_STAR
from .renorm1d import renorm4, seed_pair
from .series import AnalyticMap1D
from .words import apply_word, word

ARC_SLACK = 1.40
T_SHEET_SEED = 0.7576 + 0.0812j

# four-step rescaling constant of the fixed point; orbit levels whose
# rescaling drifts away from it are past the double-precision noise horizon
LAMBDA4_STD = 0.303010 + 0.0j


@dataclass
class ScopeStep:
    """One level of the scope hierarchy.

    ``kind == "2d"`` wraps a RenormStep (full coordinate changes);
    ``kind == "diag"`` is the diagonal scope of an embedded 1D level:
    psi(x, y) = (eta^{-1}(lambda x), eta^{-1}(lambda y)) on the dynamical
    inverse sheet.
    """

    kind: str
    lambda_n: complex
    d_n: complex
    eta: AnalyticMap1D = field(repr=False, default=None)
    record: RenormStep = field(repr=False, default=None)
    pair1d: Pair1D = field(repr=False, default=None)

    _inv_eta_cache: AnalyticMap1D = field(repr=False, default=None)

    def inv_eta(self, r_value=0.55, degree=64):
        """Fitted series of the eta-inverse branch on a value disk about 0."""
        if self._inv_eta_cache is None:
            e = self.eta
            deriv = e.derivative()
            r = r_value
            from .series import DiskDomain, fit_samples

            for _ in range(4):
                try:
                    dom = DiskDomain(0.0, r)
                    nodes = dom.nodes(4 * (degree + 1))
                    t = _newton_1d(e.eval, deriv.eval, nodes, T_SHEET_SEED,
                                   "scope eta-inverse fit")
                    fit = AnalyticMap1D(fit_samples(t, dom, degree), dom)
                    probe = DiskDomain(0.0, 0.7 * r).nodes(23)
                    err = float(np.max(np.abs(e.eval(fit.eval(probe)) - probe)))
                    if err > 1e-9:
                        raise HenonSiegelError(f"inv_eta residual {err:.2e}")
                    object.__setattr__(self, "_inv_eta_cache", fit)
                    break
                except HenonSiegelError:
                    r *= 0.75
            else:
                raise HenonSiegelError("eta-inverse branch could not be fitted")
        return self._inv_eta_cache

    def eta_inverse(self, targets):
        return self.inv_eta().eval(targets, check=True)


def _scope_apply_2d(step: ScopeStep, xs, ys):
    """phi_n = H^{-1} o V^{-1} o T o s through the step's fitted branches."""
    rec = step.record
    sigma = rec.input_pair
    xi2 = sigma.B.p2()
    lam, d = step.lambda_n, step.d_n

    px = lam * xs + d
    py = lam * ys
    w = rec.charts.inv_chi.eval(py, check=True)
    qy = xi2.eval(w)
    return rec.charts.inv_a.eval(px, qy, check=True), qy


def _scope_apply_diag(step: ScopeStep, xs, ys):
    lam = step.lambda_n
    return step.eta_inverse(lam * xs), step.eta_inverse(lam * ys)


def scope_apply(step: ScopeStep, xs, ys):
    if step.kind == "2d":
        return _scope_apply_2d(step, xs, ys)
    return _scope_apply_diag(step, xs, ys)


def scope_inverse_apply(step: ScopeStep, xs, ys):
    """phi_n^{-1} = s^{-1} o T^{-1} o V o H.

    The xi2-inverse of the closing V is seeded at the fitted branch values
    (the same sheet the opening uses), so phi o phi^{-1} round-trips are
    honest.
    """
    if step.kind == "2d":
        rec = step.record
        sigma = rec.input_pair
        eta1, xi1, xi2 = sigma.A.p1(), sigma.B.p1(), sigma.B.p2()
        x2d = xi2.derivative()
        hx = sigma.A.f1.eval(xs, ys)
        v = np.asarray(ys, dtype=complex).copy()
        for _ in range(60):
            f = xi2.eval(v) - ys
            dv = x2d.eval(v)
            v = v - f / dv
            if np.max(np.abs(f)) < 1e-13:
                break
        vy = eta1.eval(xi1.eval(v))
        return (hx - step.d_n) / step.lambda_n, vy / step.lambda_n
    lam = step.lambda_n
    return step.eta.eval(xs) / lam, step.eta.eval(ys) / lam


class ScopeChain:
    """Lazy composition Phi^k_n = phi_n o ... o phi_k with normalization data."""

    def __init__(self, steps):
        if not steps:
            raise ValueError("empty scope chain")
        self.steps = list(steps)

    def eval(self, xs, ys):
        for step in reversed(self.steps):
            xs, ys = scope_apply(step, xs, ys)
        return xs, ys

    def psi_eval(self, xs, ys):
        """The diagonal approximant Psi^k_n (1D inverse branches only)."""
        for step in reversed(self.steps):
            xs, ys = _scope_apply_diag(step, xs, ys)
        return xs, ys

    def sigma_normalization(self):
        """sigma^k_n with sigma * (Psi^k_n)'(0) = 1 (x-slot chain rule)."""
        deriv = 1.0 + 0.0j
        z = 0.0 + 0.0j
        for step in reversed(self.steps):
            lam = step.lambda_n
            pre = complex(step.eta_inverse(np.array([lam * z]))[0])
            dpsi = lam / complex(step.eta.derivative().eval(pre))
            deriv *= dpsi
            z = pre
        return 1.0 / deriv

    def fixed_point(self, tol=1e-14, max_iter=400):
        """Limit of the nested cells: attracting fixed point of the chain tail."""
        z = np.array([0.1 + 0.0j])
        last = self.steps[-1]
        for _ in range(max_iter):
            znew = scope_apply(last, z, z)[0]
            if abs(complex(znew[0] - z[0])) < tol:
                z = znew
                break
            z = znew
        return complex(z[0])


# -- orbit assembly ---------------------------------------------------------


@dataclass
class OrbitData:
    """Hybrid renormalization orbit with per-level scope data."""

    nu: complex
    pairs2d: list
    records: list
    steps: list           # ScopeStep per level (2d then diag)
    sections: list        # Pair1D per level
    level_2d: int         # number of levels backed by 2D records
    failure: str | None
    params: HenonParams | None = None

    def pair_for_level(self, n):
        """Dynamics at level n: a Pair2D when available, else the 1D pair."""
        if n < self.level_2d:
            return self.pairs2d[n]
        return self.sections[n]

    def scope_chain(self, n, k):
        return ScopeChain(self.steps[n : k + 1])

    def junction_point(self, n, depth=None):
        """gamma_n(0): where the A-admissible and B-admissible pieces meet.

        At a deep converged level the pair is diagonal to machine accuracy
        and its junction is the critical point (0, 0).  One scope map sends
        the junction to the parameter-theta point (the scope parameter
        action is t -> theta^4 t + theta), so one extra A-letter (shift by
        -theta) recovers the junction of the coarser level:
        gamma_n(0) = A_n(phi_n(gamma_{n+1}(0))).
        """
        depth = depth if depth is not None else len(self.steps) - 1
        depth = min(depth, len(self.steps) - 1)
        xs = np.array([0.0 + 0.0j])
        ys = np.array([0.0 + 0.0j])
        for j in range(depth, n - 1, -1):
            xs, ys = scope_apply(self.steps[j], xs, ys)
            pair = self.pair_for_level(j)
            xs, ys = _apply_pair_letter(pair, "A", xs, ys)
        return complex(xs[0]), complex(ys[0])

    def cell_limit(self, n, depth=None):
        """Limit point of the nested scope cells (an interior arc point)."""
        depth = depth if depth is not None else len(self.steps) - 1
        depth = min(depth, len(self.steps) - 1)
        chain = self.scope_chain(n, depth)
        tail_fp = ScopeChain(chain.steps[-1:]).fixed_point()
        xs = np.array([tail_fp])
        ys = np.array([tail_fp])
        for step in reversed(chain.steps[:-1]):
            xs, ys = scope_apply(step, xs, ys)
        return complex(xs[0]), complex(ys[0])


def _lambda4(zeta: Pair1D):
    return complex(apply_word(zeta, word(3), 0.0, check=False))


def _diag_step(zeta: Pair1D):
    return ScopeStep(kind="diag", lambda_n=_lambda4(zeta), d_n=0.0,
                     eta=zeta.eta, pair1d=zeta)


def build_orbit(
    nu,
    levels=9,
    degx=80,
    degy=24,
    degree1d=80,
    params: HenonParams | None = None,
    fixed_tail: Pair1D | None = None,
) -> OrbitData:
    """Run the 2D orbit while trustworthy, then the embedded 1D tail.

    The expanding eigenvalue (~47 per level) amplifies refit noise, so both
    the 2D records and the 1D tail are truncated once their rescaling
    constants start drifting away from the universal value; beyond that the
    scope hierarchy freezes at the fixed point (``fixed_tail`` if supplied,
    else the deepest healthy section pair).

    At nu = 0 the 2D operator is undefined (the degenerate map is not
    invertible); the orbit is the exact Fibonacci-return 1D family.
    """
    if nu == 0:
        # one 2D level is four 1D steps; exact Fibonacci seeds cover the
        # first levels (cost grows like Fib(4n)), the 1D operator continues
        exact_top = min(levels, 5)
        sections = [seed_pair(level=4 * k, degree=degree1d)
                    for k in range(exact_top + 1)]
        zeta = sections[-1]
        best = abs(_lambda4(zeta) - LAMBDA4_STD)
        failure = None
        while len(sections) <= levels:
            try:
                zeta = renorm4(zeta, degree=degree1d)
            except HenonSiegelError as e:
                failure = f"1d tail stopped: {e}"
                break
            err = abs(_lambda4(zeta) - LAMBDA4_STD)
            if err > 5 * best + 1e-12:
                break
            best = min(best, err)
            sections.append(zeta)
        steps = [_diag_step(z) for z in sections]
        if fixed_tail is not None:
            steps.append(_diag_step(fixed_tail))
            sections.append(fixed_tail)
        return OrbitData(nu=0.0, pairs2d=[], records=[], steps=steps,
                         sections=sections, level_2d=0, failure=failure,
                         params=params or golden_henon(0.0))

    p = params or golden_henon(nu)
    sigma = henon_pair(p, degx=degx, degy=degy)
    pairs, records, failure = renorm_orbit(sigma, levels, degx=degx, degy=degy)

    # keep levels up to the closest approach of lambda_n to the universal
    # constant; later records are past the noise horizon
    if records:
        errs = [abs(r.lambda_n - LAMBDA4_STD) for r in records]
        healthy = int(np.argmin(errs)) + 1
        records = records[:healthy]
        pairs = pairs[: healthy + 1]

    steps = []
    sections = []
    level_2d = len(records)
    for rec in records:
        sections.append(rec.input_pair.sections())
        steps.append(ScopeStep(kind="2d", lambda_n=rec.lambda_n, d_n=rec.d_n,
                               eta=rec.input_pair.A.p1(), record=rec))

    zeta = pairs[-1].sections()
    best = abs(_lambda4(zeta) - LAMBDA4_STD)
    while len(steps) < levels:
        err = abs(_lambda4(zeta) - LAMBDA4_STD)
        if err > 5 * best + 1e-12:
            break
        best = min(best, err)
        steps.append(_diag_step(zeta))
        sections.append(zeta)
        try:
            zeta = renorm4(zeta, degree=degree1d)
        except HenonSiegelError as e:
            failure = failure or f"1d tail stopped: {e}"
            break
    sections.append(zeta)
    if fixed_tail is not None:
        steps.append(_diag_step(fixed_tail))
        sections.append(fixed_tail)
    return OrbitData(nu=nu, pairs2d=pairs, records=records, steps=steps,
                     sections=sections, level_2d=level_2d, failure=failure,
                     params=p)


# -- renormalization arcs ---------------------------------------------------


@dataclass
class ArcSample:
    """Sampled invariant arc: exact rotation parameters and 2D points."""

    params: np.ndarray          # t in [-theta, 1]
    points_x: np.ndarray
    points_y: np.ndarray
    level: int
    int_pairs: np.ndarray       # (a, b) with t = a - b*theta
    metadata: dict = field(default_factory=dict)

    def sorted(self):
        order = np.argsort(self.params)
        return ArcSample(self.params[order], self.points_x[order],
                         self.points_y[order], self.level,
                         self.int_pairs[order], dict(self.metadata))

    def lookup(self):
        return {(int(a), int(b)): i
                for i, (a, b) in enumerate(self.int_pairs)}


def _apply_pair_letter(pair, letter, x, y, slack=ARC_SLACK):
    if isinstance(pair, Pair1D):
        f = pair.eta if letter == "A" else pair.xi
        memb = float(np.max(f.domain.membership(x)))
        if memb > slack:
            raise OrbitEscapeError(
                f"arc dynamics left the chart (membership {memb:.3f})",
                letter=letter,
            )
        fx = f.eval(x)
        return fx, fx
    f = pair.A if letter == "A" else pair.B
    mx = float(np.max(f.domain.x.membership(x)))
    my = float(np.max(f.domain.y.membership(y)))
    if max(mx, my) > slack:
        raise OrbitEscapeError(
            f"arc dynamics left the chart (membership {max(mx, my):.3f})",
            letter=letter,
        )
    return f.eval(x, y)


def renormalization_arc(orbit: OrbitData, level: int, samples=610,
                        depth=None, slack=ARC_SLACK) -> ArcSample:
    """Sample gamma_level as the orbit of the junction point gamma(0).

    The dynamics (A at t >= 0 shifting by -theta, B at t < 0 shifting by
    +1) generates points whose parameters are exact integer combinations
    a - b*theta, the rigid-rotation itinerary.  When a letter evaluation
    escapes its chart (possible only if the junction estimate straddles an
    interval boundary) the other letter is tried once before giving up.
    """
    pair = orbit.pair_for_level(level)
    x0, y0 = orbit.junction_point(level, depth)
    theta = THETA_STAR

    xs = np.empty(samples + 1, dtype=complex)
    ys = np.empty(samples + 1, dtype=complex)
    pairs_ab = np.empty((samples + 1, 2), dtype=np.int64)
    ts = np.empty(samples + 1)

    x, y = complex(x0), complex(y0)
    a = b = 0
    for j in range(samples + 1):
        t = a - b * theta
        xs[j], ys[j], ts[j] = x, y, t
        pairs_ab[j] = (a, b)
        arrx = np.array([x]); arry = np.array([y])
        letter = "A" if t >= 0 else "B"
        try:
            ox, oy = _apply_pair_letter(pair, letter, arrx, arry, slack)
        except OrbitEscapeError:
            if abs(t) > 1e-3 and abs(t - 1) > 1e-3 and abs(t + theta) > 1e-3:
                raise
            letter = "B" if letter == "A" else "A"
            ox, oy = _apply_pair_letter(pair, letter, arrx, arry, slack)
        if letter == "A":
            b += 1
        else:
            a += 1
        x, y = complex(ox[0]), complex(oy[0])

    return ArcSample(params=ts, points_x=xs, points_y=ys, level=level,
                     int_pairs=pairs_ab,
                     metadata={"nu": orbit.nu, "samples": samples,
                               "slack": slack, "junction": (x0, y0)})


def arc_conjugacy_residual(orbit: OrbitData, level: int, samples=144,
                           depth=None):
    """Cross-path invariance: phi_level(gamma_{level+1}) against gamma_level.

    The scope parameter action is t -> theta^4 t + theta, i.e. exactly
    (a, b) -> (2a + 3b, 3a + 5b - 1) on integer pairs; the two point sets
    are built through different numerical paths (deep orbit plus one scope
    map versus shallow orbit), so agreement is a real test of the conjugacy
    identity at sample resolution.
    """
    deep = renormalization_arc(orbit, level + 1, samples=samples, depth=depth)
    shallow = renormalization_arc(orbit, level,
                                  samples=9 * samples + 8, depth=depth)
    step = orbit.steps[level]
    px, py = scope_apply(step, deep.points_x, deep.points_y)
    table = shallow.lookup()
    res = []
    for i, (a, b) in enumerate(deep.int_pairs):
        key = (int(2 * a + 3 * b), int(3 * a + 5 * b - 1))
        j = table.get(key)
        if j is None:
            continue
        res.append(max(abs(px[i] - shallow.points_x[j]),
                       abs(py[i] - shallow.points_y[j])))
    if not res:
        raise HenonSiegelError("no overlapping parameters in conjugacy check")
    return float(np.max(res)), len(res)


def arc_endpoint_identities(arc: ArcSample, pair):
    """gamma(1) = B(gamma(0)) and gamma(-theta) = A(gamma(0)) residuals."""
    table = arc.lookup()
    out = {}
    i0 = table.get((0, 0))
    i1 = table.get((1, 0))
    im = table.get((0, 1))
    if i0 is not None and i1 is not None:
        bx, by = _apply_pair_letter(
            pair, "B", np.array([arc.points_x[i0]]),
            np.array([arc.points_y[i0]]))
        out["L_endpoint"] = float(max(abs(bx[0] - arc.points_x[i1]),
                                      abs(by[0] - arc.points_y[i1])))
    if i0 is not None and im is not None:
        ax, ay = _apply_pair_letter(
            pair, "A", np.array([arc.points_x[i0]]),
            np.array([arc.points_y[i0]]))
        out["R_endpoint"] = float(max(abs(ax[0] - arc.points_x[im]),
                                      abs(ay[0] - arc.points_y[im])))
    return out


def siegel_boundary(orbit: OrbitData, samples=1597, depth=None):
    """The Siegel-disk boundary: s0(gamma_0) united with its Henon image.

    Returns (piece0, piece1) as ArcSamples in original Henon coordinates;
    piece1 is the Henon image of piece0 (levels tagged 0 and 1 in output
    files; the pairing covers the full topological circle).
    """
    arc = renormalization_arc(orbit, 0, samples=samples, depth=depth)
    p = orbit.params
    lam0 = p.c
    bx = lam0 * arc.points_x
    by = lam0 * arc.points_y
    piece0 = ArcSample(arc.params, bx, by, 0, arc.int_pairs,
                       {**arc.metadata, "piece": 0})
    hx, hy = henon_apply(p, (bx, by))
    piece1 = ArcSample(arc.params, hx, hy, 1, arc.int_pairs,
                       {**arc.metadata, "piece": 1})
    return piece0, piece1


# -- scope diagnostics ------------------------------------------------------


def scope_roundtrip_residual(step: ScopeStep, pts_x, pts_y):
    """|phi^{-1}(phi(z)) - z| on samples."""
    fx, fy = scope_apply(step, pts_x, pts_y)
    gx, gy = scope_inverse_apply(step, fx, fy)
    return float(np.max(np.maximum(np.abs(gx - pts_x), np.abs(gy - pts_y))))


def scope_vs_diagonal(step: ScopeStep, pts_x, pts_y):
    """||phi_n - psi_n|| on samples (shadowing of the diagonal scope)."""
    fx, fy = scope_apply(step, pts_x, pts_y)
    dx, dy = _scope_apply_diag(step, pts_x, pts_y)
    return float(np.max(np.maximum(np.abs(fx - dx), np.abs(fy - dy))))


def chain_vs_diagonal(chain: ScopeChain, pts_x, pts_y):
    """sigma^k_n * ||Phi^k_n - Psi^k_n|| on samples."""
    fx, fy = chain.eval(pts_x, pts_y)
    gx, gy = chain.psi_eval(pts_x, pts_y)
    sig = abs(chain.sigma_normalization())
    return sig * float(np.max(np.maximum(np.abs(fx - gx), np.abs(fy - gy))))


def normalized_derivative_bound(chain: ScopeChain, radius=0.3, m=24):
    """max over samples of |(sigma Psi)'| via centred differences."""
    th = 2 * np.pi * np.arange(m) / m
    z = radius * np.exp(1j * th)
    h = 1e-6
    fp, _ = chain.psi_eval(z + h, z + h)
    fm, _ = chain.psi_eval(z - h, z - h)
    sig = chain.sigma_normalization()
    return float(np.max(np.abs(sig * (fp - fm) / (2 * h))))


def scope_report(orbit: OrbitData, n_max=4):
    """Per-level and per-chain scope diagnostics for reporting."""
    rng = np.random.default_rng(12)
    pts = 0.25 * (rng.standard_normal(16) + 1j * rng.standard_normal(16))
    rows = []
    top = len(orbit.steps)
    for n in range(min(n_max + 1, top)):
        row = {"level": n,
               "lambda_n": orbit.steps[n].lambda_n,
               "phi_vs_psi": scope_vs_diagonal(orbit.steps[n], pts, pts),
               "roundtrip": scope_roundtrip_residual(orbit.steps[n], pts, pts)}
        chains = {}
        for k in range(n, min(n + 6, top)):
            chain = orbit.scope_chain(n, k)
            chains[k] = {
                "sigma": abs(chain.sigma_normalization()),
                "sigma_dev": chain_vs_diagonal(chain, pts, pts),
                "deriv_bound": normalized_derivative_bound(chain),
            }
        row["chains"] = chains
        rows.append(row)
    return rows
