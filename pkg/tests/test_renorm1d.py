import numpy as np
import pytest

from henonsiegel.domains import pair_domains
from henonsiegel.errors import DegenerateRescaleError
from henonsiegel.pairs import Pair1D, pair_distance, rescale_pair
from henonsiegel.renorm1d import (
    _pair_from_vec,
    _pair_weights,
    _vec,
    expansion_rate_oracle,
    newton_fixed_point,
    prerenorm,
    project_almost_commuting,
    renorm,
    renorm2,
    renorm4,
    seed_pair,
)
from henonsiegel import quadratic
from henonsiegel.series import AnalyticMap1D, DiskDomain, compose, invert_local
from henonsiegel.words import apply_word, word

BIG = DiskDomain(0.0, 3.0)


def poly_pair(eta_coeffs, xi_coeffs, degree=10):
    return Pair1D(
        AnalyticMap1D.from_power_series(eta_coeffs, BIG, degree=degree),
        AnalyticMap1D.from_power_series(xi_coeffs, DiskDomain(0.0, 1.0), degree=degree),
    )


class TestPrerenorm:
    def test_square_and_shift(self):
        zeta = poly_pair([0, 0, 1.0], [1.0, 1.0])
        out = prerenorm(zeta)
        assert np.allclose(out.eta.taylor_at(0, 3), [1, 2, 1, 0], atol=1e-11)
        assert np.allclose(out.xi.taylor_at(0, 3), [0, 0, 1, 0], atol=1e-11)

    def test_twice_gives_three_letter_words(self):
        big = DiskDomain(0.0, 320.0)
        zeta = Pair1D(
            AnalyticMap1D.from_power_series([0, 0, 1.0], big, degree=40),
            AnalyticMap1D.from_power_series([1.0, 1.0], big, degree=40),
        )
        out = prerenorm(prerenorm(zeta))
        pts = 0.03 * np.exp(2j * np.pi * np.arange(7) / 7)
        direct = zeta.eta.eval(zeta.xi.eval(zeta.eta.eval(pts)))
        assert np.max(np.abs(out.eta.eval(pts) - direct)) < 1e-11
        direct2 = zeta.eta.eval(zeta.xi.eval(pts))
        assert np.max(np.abs(out.xi.eval(pts) - direct2)) < 1e-11

    def test_fourth_iterate_word(self):
        # the 4th pre-renormalization recombines along the 8-letter word
        assert word(4).multi_index() == (1, 1, 1, 1, 2, 1, 1)


class TestRescalePair:
    def test_normalized_pair_unchanged(self):
        zeta = poly_pair([0, 0, 1.0], [1.0, 0, 0.5])
        out = rescale_pair(zeta)
        assert np.max(np.abs(out.eta.coeffs - zeta.eta.coeffs)) < 1e-14
        assert np.max(np.abs(out.xi.coeffs - zeta.xi.coeffs)) < 1e-14

    def test_constant_two(self):
        zeta = poly_pair([0, 0, 1.0], [2.0])
        out = rescale_pair(zeta)
        assert np.allclose(out.eta.taylor_at(0, 3), [0, 0, 2.0, 0], atol=1e-11)

    def test_output_normalization_exact(self):
        zeta = poly_pair([0, 0, 1.0], [1.3 + 0.2j, 0, -0.4])
        out = rescale_pair(zeta)
        assert complex(out.xi.eval(0.0)) == 1.0 + 0.0j

    def test_degenerate(self):
        zeta = poly_pair([0, 0, 1.0], [0.0, 1.0])
        with pytest.raises(DegenerateRescaleError):
            rescale_pair(zeta)


class TestFixedPoint:
    def test_residual_below_tolerance(self, fixed_point):
        assert fixed_point.residual < 1e-10

    def test_lambda_star_inside_unit_disk(self, fixed_point):
        assert abs(fixed_point.lambda_star) < 1.0

    def test_eta_at_zero_consistent_with_one_step(self, fixed_point):
        # R-fixed point: eta*(0) is the conjugate of the one-step constant
        zeta = fixed_point.zeta_star
        out = renorm(zeta)
        assert abs(complex(out.eta.eval(0.0)) - complex(zeta.eta.eval(0.0))) < 1e-10

    def test_renorm4_refixes(self, fixed_point):
        zeta = fixed_point.zeta_star
        assert pair_distance(renorm4(zeta), zeta) < 1e-10

    def test_lambda_star_is_fourth_power_of_step_scale(self, fixed_point):
        lam1 = fixed_point.lambda_one_step
        assert abs(abs(fixed_point.lambda_star) - abs(lam1) ** 4) < 1e-9

    def test_constraints_on_surface(self, fixed_point):
        assert fixed_point.constraint_norm < 1e-11

    def test_perturbed_seed_same_fixed_point(self, fixed_point):
        rng = np.random.default_rng(3)
        domains = pair_domains()
        weights = _pair_weights(domains, 80)
        v = _vec(fixed_point.zeta_star, weights)
        noise = 1e-6 * (rng.standard_normal(v.size) + 1j * rng.standard_normal(v.size))
        start = _pair_from_vec(v + noise, domains, 80, weights)
        res = newton_fixed_point(initial=start, degree=80, with_spectrum=False)
        dv = np.abs(_vec(res.zeta_star, weights) - v)
        assert np.max(dv) < 1e-8

    def test_orbit_rescaling_constants_converge_to_lambda_star(self, fixed_point):
        # the exact orbit pairs give lambda_n without operator noise; the
        # geometric tail is accelerated to reach the stated tolerance
        lams = [
            quadratic.rescale_constant_at_level(lev, word(3).letters)
            for lev in range(10, 28, 2)
        ]
        accelerated = quadratic.accelerated_limit(lams)
        best = min(abs(v - fixed_point.lambda_star) for v in accelerated)
        assert best < 1e-8


class TestSpectrum:
    def test_exactly_one_expanding(self, fixed_point):
        mods = np.abs(fixed_point.spectrum)
        assert int(np.sum(mods > 1.0)) == 1

    def test_compact_decay(self, fixed_point):
        mods = np.abs(fixed_point.spectrum)
        assert mods[5] < 0.5
        assert mods[20] < 0.05
        assert mods[40] < 1e-3

    def test_expanding_matches_rate_oracle(self, fixed_point):
        rate, r2 = expansion_rate_oracle(fixed_point.zeta_star, degree=80)
        top = abs(fixed_point.expanding_eigenvalue)
        assert r2 > 0.999
        assert abs(rate - top) / top < 1e-3

    def test_contraction_transverse_to_unstable(self, fixed_point):
        # kick along the subdominant eigendirection: one step must contract
        zeta = fixed_point.zeta_star
        domains = pair_domains()
        weights = _pair_weights(domains, 80)
        v0 = _vec(zeta, weights)
        rng = np.random.default_rng(9)
        u = rng.standard_normal(v0.size) + 1j * rng.standard_normal(v0.size)
        u /= np.linalg.norm(u)
        eps = 1e-7
        # remove the unstable component by one deflation sweep
        for _ in range(2):
            pair = project_almost_commuting(
                _pair_from_vec(v0 + eps * u, domains, 80, weights),
                domains=domains, tol=1e-13,
            )
            out = renorm2(pair, out_domains=domains, degree=80)
            img = (_vec(out, weights) - v0) / eps
            mu = abs(fixed_point.expanding_eigenvalue)
            u = u - img / mu  # kills the expanding component asymptotically
            u /= np.linalg.norm(u)
        pair = project_almost_commuting(
            _pair_from_vec(v0 + eps * u, domains, 80, weights),
            domains=domains, tol=1e-13,
        )
        out = renorm2(pair, out_domains=domains, degree=80)
        growth = np.linalg.norm(_vec(out, weights) - v0) / eps
        assert growth < 1.0


class TestProjection:
    def test_idempotent_on_surface(self, fixed_point):
        zeta = fixed_point.zeta_star
        out = project_almost_commuting(zeta)
        assert out is zeta  # fast path: already on the surface

    def test_normalization_solved_exactly(self, fixed_point):
        zeta = fixed_point.zeta_star
        bumped = Pair1D(zeta.eta, zeta.xi.add_constant(1e-4))
        out = project_almost_commuting(bumped)
        assert abs(complex(out.xi.eval(0.0)) - 1.0) < 1e-15

    def test_defects_below_tolerance_after_projection(self, fixed_point):
        rng = np.random.default_rng(17)
        domains = pair_domains()
        weights = _pair_weights(domains, 80)
        v = _vec(fixed_point.zeta_star, weights)
        for trial in range(3):
            noise = 1e-5 * (
                rng.standard_normal(v.size) + 1j * rng.standard_normal(v.size)
            )
            pair = _pair_from_vec(v + noise, domains, 80, weights)
            out = project_almost_commuting(pair)
            assert np.max(np.abs(out.constraint_vector())) < 1e-10


class TestFixedPointSeries:
    def test_eval_eta_star_at_zero_vs_renorm_residual(self, fixed_point):
        zeta = fixed_point.zeta_star
        out = renorm2(zeta)
        assert abs(complex(out.eta.eval(0.0)) - complex(zeta.eta.eval(0.0))) < 1e-11

    def test_compose_matches_nested_eval(self, fixed_point):
        zeta = fixed_point.zeta_star
        rng = np.random.default_rng(2)
        comp = compose(zeta.eta, zeta.xi,
                       out_domain=DiskDomain(0.0, 0.25), degree=80)
        pts = 0.2 * (rng.standard_normal(10) + 1j * rng.standard_normal(10)) / 3
        nested = zeta.eta.eval(zeta.xi.eval(pts))
        assert np.max(np.abs(comp.eval(pts) - nested)) < 1e-12

    def test_invert_eta_star_round_trip(self, fixed_point):
        eta = fixed_point.zeta_star.eta
        x0 = 0.45
        y0 = complex(eta.eval(x0))
        target = DiskDomain(y0, 0.05)
        inv = invert_local(eta, target, branch_seed=x0)
        z = target.nodes(64)
        assert np.max(np.abs(eta.eval(inv.eval(z)) - z)) < 1e-10

    def test_realness_structure(self, fixed_point):
        # lambda_star of the golden fixed point is real positive
        lam = fixed_point.lambda_star
        assert abs(lam.imag) < 1e-9
        assert lam.real > 0
