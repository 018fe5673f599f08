import numpy as np
import pytest

from henonsiegel.errors import OrbitEscapeError
from henonsiegel.renorm1d import prerenorm, seed_pair
from henonsiegel.words import (
    ETA,
    XI,
    MultiIndexWord,
    apply_word,
    fibonacci,
    preceding_indexes,
    precedes,
    word,
)


class TestWordConstruction:
    def test_base_case(self):
        assert word(0).letters == (ETA,)

    def test_alpha3_letter_sequence(self):
        # composition string eta o xi o eta^2 o xi read right-to-left
        assert word(3).letters == (XI, ETA, ETA, XI, ETA)
        assert len(word(3)) == 5

    def test_alpha4_length_eight(self):
        assert len(word(4)) == 8
        assert word(4).letters == (ETA, XI, ETA, XI, ETA, ETA, XI, ETA)

    @pytest.mark.parametrize("n", range(0, 21))
    def test_fibonacci_lengths(self, n):
        assert len(word(n)) == fibonacci(n + 1)

    def test_recursion_structure(self):
        for n in range(2, 12):
            assert word(n) == word(n - 2).concat(word(n - 1))

    def test_multi_index_round_trip(self):
        for n in range(0, 10):
            w = word(n)
            assert MultiIndexWord.from_multi_index(w.multi_index()) == w

    def test_alpha4_multi_index(self):
        # eta^1 xi^1 eta^1 xi^1 eta^2 xi^1 eta^1 in application order
        assert word(4).multi_index() == (1, 1, 1, 1, 2, 1, 1)
        assert word(3).multi_index() == (0, 1, 2, 1, 1)


class TestPartialOrder:
    def test_prefix_domination(self):
        alpha = (1, 1, 1, 1, 2, 1, 1)
        assert precedes((1, 0), alpha)
        assert precedes((1, 1), alpha)
        assert precedes((1, 1, 1, 1, 2), alpha)
        assert not precedes((1, 2), alpha)
        assert not precedes((2, 0), alpha)

    def test_last_entry_strict(self):
        alpha = (1, 1, 1, 1, 2, 1, 1)
        assert precedes((1, 1, 1, 1, 2, 1, 0), alpha)
        assert not precedes((1, 1, 1, 1, 2, 1, 1), alpha)

    def test_enumeration_consistent_with_predicate(self):
        alpha = word(4)
        tiles = preceding_indexes(alpha)
        assert len(tiles) == 12
        for t in tiles:
            assert precedes(t, alpha)

    def test_enumeration_count_alpha3(self):
        # (0,1,2,1,1): cuts give 2+3+2+1 = 8
        assert len(preceding_indexes(word(3))) == 8


class TestApplyWord:
    def test_single_eta(self, fixed_point):
        zeta = fixed_point.zeta_star
        x = 0.1 + 0.05j
        assert abs(apply_word(zeta, word(0), x) - zeta.eta.eval(x)) < 1e-14

    def test_word4_matches_four_prerenorms(self):
        # two independent code paths: letter folding vs repeated prerenorm
        from henonsiegel.pairs import Pair1D
        from henonsiegel.series import AnalyticMap1D, DiskDomain

        big = DiskDomain(0.0, 2.0)
        zeta = Pair1D(
            AnalyticMap1D.from_power_series([0, 0, 0.3], big, degree=40),
            AnalyticMap1D.from_power_series([0.2, 0.4], big, degree=40),
        )
        pr = zeta
        for _ in range(4):
            pr = prerenorm(pr)
        rng = np.random.default_rng(11)
        pts = 0.02 * (rng.standard_normal(20) + 1j * rng.standard_normal(20))
        direct = apply_word(zeta, word(4), pts)
        via_op = pr.eta.eval(pts)
        assert np.max(np.abs(direct - via_op)) < 1e-11

    def test_word4_matches_four_renorm_squared_on_seed(self, fixed_point):
        # seed-pair variant: R^4 via words equals two R^2 steps
        from henonsiegel.pairs import pair_distance
        from henonsiegel.renorm1d import renorm2, renorm4, seed_pair

        zeta = seed_pair(level=8, degree=80)
        assert pair_distance(renorm4(zeta), renorm2(renorm2(zeta))) < 1e-11

    def test_escape_names_letter(self, fixed_point):
        zeta = fixed_point.zeta_star
        with pytest.raises(OrbitEscapeError) as err:
            apply_word(zeta, word(4), 40.0 + 0.0j)
        assert err.value.letter_index == 0
