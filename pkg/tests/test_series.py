import json

import numpy as np
import pytest

from henonsiegel.errors import (
    CompositionDomainError,
    DomainError,
    NonInvertibleError,
    SeriesTailError,
)
from henonsiegel.series import (
    AnalyticMap1D,
    DiskDomain,
    EllipseDomain,
    argument_principle_zeros,
    compose,
    conjugate_by_conj,
    eval_map,
    invert_local,
    sup_norm,
)

UNIT = DiskDomain(0.0, 1.0)
BIG = DiskDomain(0.0, 3.0)


def poly(coeffs, domain=UNIT, degree=8):
    return AnalyticMap1D.from_power_series(coeffs, domain, degree=degree)


def taylor0(f, n=8):
    return f.taylor_at(0.0, degree=n)


class TestDomains:
    def test_disk_requires_positive_radius(self):
        with pytest.raises(ValueError):
            DiskDomain(0.0, -1.0)

    def test_ellipse_requires_rho_gt_one(self):
        with pytest.raises(ValueError):
            EllipseDomain(0.0, 1.0, 0.9)

    def test_ellipse_membership_on_segment(self):
        dom = EllipseDomain(0.0, 1.0, 1.4)
        assert dom.contains([0.0, 0.5, 1.0])
        assert not dom.contains(2.0)

    def test_disk_nodes_on_boundary(self):
        dom = DiskDomain(1.0 + 1.0j, 2.0)
        z = dom.nodes(64)
        assert np.allclose(np.abs(z - (1 + 1j)), 2.0)


class TestEval:
    def test_identity_case(self):
        f = poly([0.0, 1.0])
        assert abs(eval_map(f, 0.3 + 0.1j) - (0.3 + 0.1j)) < 1e-14

    def test_square(self):
        f = poly([0.0, 0.0, 1.0], domain=BIG)
        assert abs(eval_map(f, 2.0) - 4.0) < 1e-12

    def test_outside_domain_raises(self):
        f = poly([0.0, 1.0])
        with pytest.raises(DomainError):
            eval_map(f, 2.0)

    def test_ellipse_chart_agrees_with_disk_chart(self):
        c = [0.3, -1.0, 0.25j, 0.7]
        fd = poly(c, domain=BIG)
        fe = AnalyticMap1D.from_power_series(c, EllipseDomain(-1.0, 1.0, 1.8))
        z = 0.1 + 0.2j
        assert abs(fd.eval(z) - fe.eval(z)) < 1e-13


class TestCompose:
    def test_square_after_shift(self):
        f = poly([0.0, 0.0, 1.0], domain=BIG)
        g = poly([1.0, 1.0])
        h = compose(f, g)
        assert np.allclose(taylor0(h)[:3], [1.0, 2.0, 1.0], atol=1e-12)

    def test_identity_both_sides(self):
        g = poly([0.2, 0.9, -0.3, 0.05j], degree=12)
        ident = AnalyticMap1D.identity(BIG, degree=12)
        left = compose(ident, g, degree=12)
        right = compose(g, AnalyticMap1D.identity(UNIT, degree=12), degree=12)
        # same chart, same domain: compare chart coefficients directly
        assert np.max(np.abs(left.coeffs - g.coeffs)) < 1e-13
        assert np.max(np.abs(right.coeffs - g.coeffs)) < 1e-13

    def test_out_of_domain_raises(self):
        f = poly([0.0, 1.0], domain=DiskDomain(0.0, 0.5))
        g = poly([1.0, 1.0])
        with pytest.raises(CompositionDomainError):
            compose(f, g)

    def test_conjugation_commutes_with_compose(self):
        f = poly([0.1j, 0.8, -0.2], domain=BIG, degree=10)
        g = poly([0.0, 0.5, 0.3j], degree=10)
        lhs = compose(f, g, degree=10).conjugate_by_conj()
        rhs = compose(f.conjugate_by_conj(), g.conjugate_by_conj(), degree=10)
        assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-13


class TestConjugation:
    def test_real_coefficients_fixed(self):
        f = AnalyticMap1D(np.array([0.5, -1.0, 2.0], dtype=complex), UNIT)
        g = conjugate_by_conj(f)
        assert np.max(np.abs(f.coeffs - g.coeffs)) == 0.0

    def test_i_x_maps_to_minus_i_x(self):
        f = poly([0.0, 1j])
        g = conjugate_by_conj(f)
        assert np.allclose(taylor0(g)[:2], [0.0, -1j], atol=1e-14)

    def test_involution(self):
        f = poly([0.1 + 0.2j, 0.9 - 0.1j, 0.3j])
        g = conjugate_by_conj(conjugate_by_conj(f))
        assert np.array_equal(f.coeffs, g.coeffs)
        assert f.domain == g.domain


class TestSupNorm:
    def test_constant(self):
        assert abs(sup_norm(poly([3.0])) - 3.0) < 1e-13

    def test_identity_on_unit_disk(self):
        assert abs(sup_norm(poly([0.0, 1.0])) - 1.0) < 1e-13

    def test_x_plus_x_squared_brute_force(self):
        # brute-force oracle: dense boundary grid maximum
        f = poly([0.0, 1.0, 1.0])
        th = np.linspace(0, 2 * np.pi, 20001)
        z = np.exp(1j * th)
        oracle = np.max(np.abs(z + z * z))
        assert abs(oracle - 2.0) < 1e-7
        assert abs(sup_norm(f, samples=4096) - 2.0) < 1e-6

    def test_monotone_in_samples(self):
        f = poly([0.2, 0.7, -0.4, 0.1j], degree=8)
        coarse = sup_norm(f, samples=128)
        fine = sup_norm(f, samples=512)
        assert fine >= coarse - 1e-15


class TestInvert:
    def test_linear(self):
        f = poly([0.0, 2.0], domain=BIG)
        inv = invert_local(f, DiskDomain(0.0, 1.0))
        assert np.allclose(taylor0(inv)[:2], [0.0, 0.5], atol=1e-12)

    def test_lagrange_reversion(self):
        # inverse of x + x^2: y - y^2 + 2y^3 - 5y^4 + 14y^5 (signed Catalans)
        f = poly([0.0, 1.0, 1.0], domain=BIG, degree=30)
        inv = invert_local(f, DiskDomain(0.0, 0.08), degree=30)
        got = inv.taylor_at(0.0, degree=5, radius=0.05)
        assert np.allclose(got, [0, 1, -1, 2, -5, 14], atol=1e-9)

    def test_critical_point_in_region_raises(self):
        f = poly([0.0, 0.0, 1.0], domain=BIG, degree=8)
        with pytest.raises(NonInvertibleError):
            invert_local(f, DiskDomain(0.0, 0.5))

    def test_round_trip_tolerance(self):
        f = poly([0.0, 1.0, 0.3, -0.1], domain=BIG, degree=40)
        target = DiskDomain(0.0, 0.25)
        inv = invert_local(f, target, degree=40)
        z = target.nodes(113)
        assert np.max(np.abs(f.eval(inv.eval(z)) - z)) < 1e-10


class TestTailAndSerialization:
    def test_tail_error(self):
        coeffs = np.zeros(41, dtype=complex)
        coeffs[0] = 1.0
        coeffs[40] = 1e-6
        f = AnalyticMap1D(coeffs, UNIT)
        with pytest.raises(SeriesTailError):
            f.check_tail(1e-12)

    @pytest.mark.parametrize("domain", [UNIT, DiskDomain(0.3 - 0.2j, 1.7),
                                        EllipseDomain(-0.4, 1.1j, 1.31)])
    def test_json_round_trip(self, domain):
        rng = np.random.default_rng(5)
        coeffs = rng.standard_normal(31) * np.exp(-0.3 * np.arange(31))
        coeffs = coeffs + 1j * rng.standard_normal(31) * 1e-2
        f = AnalyticMap1D(coeffs, domain)
        blob = json.dumps(f.to_json_dict())
        g = AnalyticMap1D.from_json_dict(json.loads(blob))
        z = domain.interior_point() + 1e-3
        rel = abs(f.eval(z) - g.eval(z)) / max(abs(f.eval(z)), 1e-300)
        assert rel < 1e-15
        assert np.max(np.abs(f.coeffs - g.coeffs)) == 0.0


class TestArgumentPrinciple:
    def test_counts_zeros(self):
        f = poly([0.0, 0.0, 1.0], domain=BIG, degree=8)   # x^2: double zero
        assert argument_principle_zeros(f, 0.0, 1.0) == 2
        g = poly([-0.25, 0.0, 1.0], domain=BIG, degree=8)  # zeros at +-0.5
        assert argument_principle_zeros(g, 0.0, 1.0) == 2
        assert argument_principle_zeros(g, 0.5, 0.2) == 1
