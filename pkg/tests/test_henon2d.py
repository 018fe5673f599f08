import numpy as np
import pytest

from henonsiegel.errors import NonDissipativeError
from henonsiegel.henon2d import (
    HenonParams,
    critical_projection,
    embed_iota,
    golden_henon,
    henon_apply,
    henon_apply_inverse,
    henon_from_multipliers,
    henon_pair,
    norms_2d,
    p1_commutator_defects,
    pair_domains_2d,
    prerenorm2d,
    renorm2d,
    renorm_orbit,
    semi_siegel_fixed_point,
)
from henonsiegel.pairs import pair_distance
from henonsiegel.quadratic import MU_STAR
from henonsiegel.renorm1d import renorm4, seed_pair


class TestHenonParams:
    def test_degenerate_quadratic(self):
        p = henon_from_multipliers(1.0, 0.0)
        assert p.a == 0
        assert abs(p.c - 0.25) < 1e-15

    def test_minus_one_half(self):
        p = henon_from_multipliers(-1.0, 0.5)
        assert abs(p.a**2 - 0.5) < 1e-15

    def test_identities_random(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            mu = np.exp(2j * np.pi * rng.uniform())
            nu = 0.95 * rng.uniform() * np.exp(2j * np.pi * rng.uniform())
            p = henon_from_multipliers(mu, nu)
            assert abs(p.mu * p.nu + p.a**2) < 1e-14
            q = p.mu / 2 - p.a**2 / (2 * p.mu)
            assert abs(p.c - ((1 - p.a**2) * q - q * q)) < 1e-14

    def test_non_dissipative_rejected(self):
        with pytest.raises(NonDissipativeError):
            henon_from_multipliers(1.0, 1.2)

    def test_validate_catches_bad_c(self):
        p = henon_from_multipliers(MU_STAR, 0.05)
        with pytest.raises(ValueError):
            HenonParams(p.mu, p.nu, p.a, p.c + 1e-6).validate()


class TestHenonApply:
    def test_origin_fixed_when_c_zero(self):
        p = HenonParams(mu=1.0, nu=0.0, a=0.5, c=0.0)
        assert henon_apply(p, (0.0, 0.0)) == (0.0, 0.0)

    def test_direct_arithmetic(self):
        p = HenonParams(mu=1.0, nu=0.0, a=0.5, c=0.0)
        assert henon_apply(p, (1.0, 1.0)) == (1.5, 0.5)

    def test_inverse_round_trip(self):
        p = golden_henon(0.05)
        v = (0.3 + 0.1j, -0.2 + 0.05j)
        w = henon_apply_inverse(p, henon_apply(p, v))
        assert abs(w[0] - v[0]) + abs(w[1] - v[1]) < 1e-14

    def test_semi_siegel_fixed_point_and_multipliers(self):
        p = golden_henon(0.05)
        q = semi_siegel_fixed_point(p)
        img = henon_apply(p, q)
        assert abs(img[0] - q[0]) + abs(img[1] - q[1]) < 1e-12
        jac = np.array([[2 * q[0], p.a], [p.a, 0.0]])
        eig = np.linalg.eigvals(jac)
        eig = eig[np.argsort(-np.abs(eig))]
        assert abs(eig[0] - p.mu) < 1e-10
        assert abs(eig[1] - p.nu) < 1e-10


class TestEmbedding:
    def test_isometry(self):
        z = seed_pair(level=8, degree=48)
        sig = embed_iota(z, degy=12)
        n1 = z.norm(samples=96)
        n2, yn, dn = norms_2d(sig)
        assert abs(n1 - n2) / n1 < 1e-2  # sampling-resolution agreement
        assert yn == 0.0
        assert dn == 0.0


class TestHenonPair:
    def test_degenerate_pair_collapses_y(self):
        p = henon_from_multipliers(MU_STAR, 0.0)
        sig = henon_pair(p, degx=48, degy=8)
        _, yn, _ = norms_2d(sig)
        assert yn < 1e-12

    def test_y_norm_order_a(self):
        ratios = []
        for nu in (0.01, 0.05, 0.1):
            p = golden_henon(nu)
            sig = henon_pair(p, degx=48, degy=12)
            _, yn, _ = norms_2d(sig)
            ratios.append(yn / abs(p.a))
        assert max(ratios) / min(ratios) < 6.0
        assert all(0.05 < r < 20 for r in ratios)

    def test_pair_commutes(self):
        p = golden_henon(0.05)
        sig = henon_pair(p, degx=48, degy=12)
        d0, dpp = p1_commutator_defects(sig)
        assert abs(d0) < 1e-12 and abs(dpp) < 1e-12


class TestPrerenorm2D:
    def test_iota_input_matches_embedded_four_step(self):
        zeta = seed_pair(level=8, degree=64)
        sig = embed_iota(zeta, pair_domains_2d(), degy=12)
        pre, diag = prerenorm2d(sig, pair_domains_2d(), degx=64, degy=12)
        from henonsiegel.henon2d import _pre_dist_iota_r4

        d = _pre_dist_iota_r4(pre, sig.sections())
        assert d < 1e-9
        assert pre.y_norm() < 1e-12

    def test_word_combinatorics_shared(self):
        # the chain letter lists are the conjugated Fibonacci words
        from henonsiegel.henon2d import _REST_A, _REST_B
        from henonsiegel.words import word

        w4 = ["A" if x == "ETA" else "B" for x in word(4).letters]
        w3 = ["A" if x == "ETA" else "B" for x in word(3).letters]
        assert list(_REST_A) == w4[:-1]
        assert list(_REST_B) == w3[:-1]


class TestCriticalProjection:
    def test_commuting_input_has_trivial_second_translation(self):
        p = golden_henon(0.05)
        sig = henon_pair(p, degx=48, degy=12)
        pre, _ = prerenorm2d(sig, pair_domains_2d(1), degx=48, degy=12)
        out, (c_a, c_b), diag = critical_projection(pre)
        assert abs(c_b) < 1e-9
        assert diag["crit_deriv_a"] < 0.05

    def test_critical_point_recentred(self):
        p = golden_henon(0.05)
        sig = henon_pair(p, degx=48, degy=12)
        pre, _ = prerenorm2d(sig, pair_domains_2d(1), degx=48, degy=12)
        out, (c_a, c_b), _ = critical_projection(pre)

        def comp(x):
            u, v = out.A.eval(x, np.zeros_like(x))
            return out.B.f1.eval(u, v)

        h = 1e-6
        d = (comp(np.array([h])) - comp(np.array([-h]))) / (2 * h)
        assert abs(complex(d[0])) < 1e-7


class TestRenorm2D:
    def test_iota_equivariance_on_seed(self):
        zeta = seed_pair(level=8, degree=64)
        sig = embed_iota(zeta, pair_domains_2d(), degy=12)
        out, step = renorm2d(sig, out_domains=pair_domains_2d(),
                             degx=64, degy=12, level=10)
        shadow = renorm4(zeta, degree=64)
        assert pair_distance(out.sections(), shadow) < 1e-9
        assert out.y_norm() < 1e-11
        assert abs(step.d_n) < 1e-8

    def test_commuting_preservation(self):
        p = golden_henon(0.05)
        sig = henon_pair(p, degx=64, degy=16)
        out, rec = renorm2d(sig, degx=64, degy=16, level=0, project=False)
        d0, dpp = p1_commutator_defects(out)
        assert abs(d0) < 1e-8 and abs(dpp) < 1e-8

    def test_orbit_collapse_and_graceful_stop(self):
        p = golden_henon(0.05)
        sig = henon_pair(p, degx=48, degy=16)
        pairs, recs, failure = renorm_orbit(sig, 6, degx=48, degy=16)
        assert len(recs) >= 3
        ys = [r.y_norm for r in recs]
        assert ys[1] < 1e-6 and ys[1] < ys[0]
        dists = [r.dist_iota for r in recs[:3]]
        assert dists[1] < 0.1 * dists[0]
        assert dists[2] < 0.1 * dists[1]

    def test_far_from_dissipative_regime_fails_gracefully(self):
        p = golden_henon(0.9)
        sig = henon_pair(p, degx=32, degy=8)
        pairs, recs, failure = renorm_orbit(sig, 3, degx=32, degy=8)
        assert failure is not None

    def test_step_record_serializes(self):
        import json

        p = golden_henon(0.05)
        sig = henon_pair(p, degx=48, degy=12)
        _, rec = renorm2d(sig, degx=48, degy=12, level=0)
        blob = json.dumps(rec.to_json_dict())
        assert "lambda_n" in blob
