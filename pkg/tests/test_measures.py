import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from suspshift.quadratic import QuadraticReal, qr, sqrt_d
from suspshift.measures import (
    ConvexCombination,
    DMetricConfig,
    EmpiricalMeasure,
    InsufficientData,
    MarkovMeasure,
    SturmianMeasure,
    bernoulli,
    block_entropy,
    d_distance,
    integrate_locally_constant,
    measure_from_json,
    parry_measure,
)
from suspshift.subshifts import PeriodicPoint, Sturmian, full_shift, golden_mean_sft

PHI = (1 + math.sqrt(5)) / 2
LOG_PHI = math.log(PHI)


@pytest.fixture(scope="module")
def fair():
    return bernoulli([Fraction(1, 2), Fraction(1, 2)], subshift=full_shift(2))


@pytest.fixture(scope="module")
def parry():
    return parry_measure(golden_mean_sft())


class TestMarkov:
    def test_row_sum_validation(self):
        with pytest.raises(ValueError):
            MarkovMeasure([[Fraction(1, 2), Fraction(1, 3)]] * 2)

    def test_stationarity_is_exact(self):
        p = [
            [Fraction(1, 3), Fraction(2, 3)],
            [Fraction(3, 4), Fraction(1, 4)],
        ]
        mu = MarkovMeasure(p)
        for j in range(2):
            assert sum(mu.pi[i] * p[i][j] for i in range(2)) == mu.pi[j]
        assert sum(mu.pi) == 1

    def test_entropy_rates(self, fair):
        assert fair.entropy_rate() == pytest.approx(math.log(2), abs=1e-12)
        skew = bernoulli([Fraction(1, 4), Fraction(3, 4)])
        expected = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
        assert skew.entropy_rate() == pytest.approx(expected, abs=1e-12)
        assert skew.entropy_rate() == pytest.approx(0.562335, abs=1e-6)

    def test_parry_is_exact_and_maximal(self, parry):
        # stationarity holds as an identity in Q[sqrt(5)]
        for j in range(2):
            lhs = sum(
                (parry.pi[i] * parry.P[i][j] for i in range(2)),
                QuadraticReal(0, 0, 5),
            )
            assert lhs == parry.pi[j]
        assert parry.entropy_rate() == pytest.approx(LOG_PHI, abs=1e-12)
        assert parry.mass((1, 1)) == 0

    def test_block_entropy_decreases_to_rate(self, parry):
        vals = [block_entropy(parry, n) for n in range(1, 16)]
        gains = [
            (n + 1) * vals[n] - n * vals[n - 1] for n in range(1, 15)
        ]  # H_{n+1} - H_n
        for g1, g2 in zip(gains, gains[1:]):
            assert g2 <= g1 + 1e-12
        assert abs(block_entropy(parry, 10) - LOG_PHI) < 0.02

    def test_iid_block_entropy(self, fair):
        for n in (1, 5, 12):
            assert block_entropy(fair, n) == pytest.approx(math.log(2), abs=1e-12)


class TestEmpirical:
    def test_period_two_point(self):
        mu = EmpiricalMeasure.of_periodic_point(
            PeriodicPoint((0, 1)), max_block=4, subshift=full_shift(2)
        )
        assert mu.mass((0, 1)) == Fraction(1, 2)
        assert mu.mass((1, 0)) == Fraction(1, 2)
        assert mu.mass((0, 0)) == 0
        # two equally frequent 3-blocks
        assert block_entropy(mu, 3) == pytest.approx(math.log(2) / 3, abs=1e-12)

    def test_exact_shift_invariance(self):
        pt = PeriodicPoint((0, 0, 1, 0, 1))
        mu = EmpiricalMeasure.of_periodic_point(pt, max_block=4)
        for n in range(1, 5):
            dist = mu._tables[n]
            assert sum(dist.values()) == 1
            # invariance: sum over left-extensions equals the word mass
            if n < 4:
                for w, m in dist.items():
                    ext = sum(
                        (mu.mass((c,) + w) for c in range(2)), Fraction(0)
                    )
                    assert ext == m

    def test_insufficient_data(self):
        mu = EmpiricalMeasure(PeriodicPoint((0, 1)), 0, 12, max_block=4)
        with pytest.raises(InsufficientData):
            mu.block_entropy(3)


class TestIntegration:
    def test_constant(self, fair):
        table = {(0,): Fraction(5), (1,): Fraction(5)}
        assert integrate_locally_constant(table, fair) == 5

    def test_rational_values(self, fair):
        table = {(0,): Fraction(1), (1,): Fraction(2)}
        assert integrate_locally_constant(table, fair) == Fraction(3, 2)

    def test_quadratic_values(self, fair):
        table = {(0,): qr(1), (1,): sqrt_d(2)}
        assert integrate_locally_constant(table, fair) == (1 + sqrt_d(2)) / 2


class TestDistance:
    def test_zero_on_equal(self, fair):
        cfg = DMetricConfig(full_shift(2), depth=8)
        assert d_distance(fair, fair, cfg).value == 0.0

    def test_fixed_points_positive_and_symmetric(self):
        zero = EmpiricalMeasure.of_periodic_point(
            PeriodicPoint((0,)), max_block=8, subshift=full_shift(2)
        )
        one = EmpiricalMeasure.of_periodic_point(
            PeriodicPoint((1,)), max_block=8, subshift=full_shift(2)
        )
        cfg = DMetricConfig(full_shift(2), depth=8)
        d01 = d_distance(zero, one, cfg)
        assert d01.value > 0
        assert d01.value == d_distance(one, zero, cfg).value
        assert d01.bound == 2.0 ** (-7)

    def test_truncation_bound(self, fair):
        one = EmpiricalMeasure.of_periodic_point(
            PeriodicPoint((1,)), max_block=20, subshift=full_shift(2)
        )
        d8 = d_distance(fair, one, DMetricConfig(full_shift(2), depth=8)).value
        d16 = d_distance(fair, one, DMetricConfig(full_shift(2), depth=16)).value
        assert abs(d16 - d8) <= 2.0 ** (-7) + 1e-15

    @settings(max_examples=20, deadline=None)
    @given(st.fractions(min_value=0, max_value=1, max_denominator=16))
    def test_convexity(self, t):
        fs = full_shift(2)
        cfg = DMetricConfig(fs, depth=8)
        mu = bernoulli([Fraction(1, 2), Fraction(1, 2)], subshift=fs)
        mu2 = bernoulli([Fraction(1, 4), Fraction(3, 4)], subshift=fs)
        nu = EmpiricalMeasure.of_periodic_point(
            PeriodicPoint((0,)), max_block=8, subshift=fs
        )
        nu2 = EmpiricalMeasure.of_periodic_point(
            PeriodicPoint((0, 1)), max_block=8, subshift=fs
        )
        lhs = d_distance(
            ConvexCombination(t, mu, nu), ConvexCombination(t, mu2, nu2), cfg
        ).value
        rhs = float(t) * d_distance(mu, mu2, cfg).value + (1 - float(t)) * d_distance(
            nu, nu2, cfg
        ).value
        assert lhs <= rhs + 1e-12

    def test_triangle_on_truncated_sum(self):
        fs = full_shift(2)
        cfg = DMetricConfig(fs, depth=10)
        a = bernoulli([Fraction(1, 2), Fraction(1, 2)], subshift=fs)
        b = bernoulli([Fraction(1, 3), Fraction(2, 3)], subshift=fs)
        c = EmpiricalMeasure.of_periodic_point(
            PeriodicPoint((0, 1, 1)), max_block=10, subshift=fs
        )
        dab = d_distance(a, b, cfg).value
        dbc = d_distance(b, c, cfg).value
        dac = d_distance(a, c, cfg).value
        assert dac <= dab + dbc + 1e-12


def test_sturmian_measure_masses():
    st_shift = Sturmian(sqrt_d(2) - 1)
    mu = SturmianMeasure(st_shift)
    assert mu.mass((1,)) == sqrt_d(2) - 1
    assert mu.mass((0,)) == 2 - sqrt_d(2)
    total = sum((mu.mass(w) for w in st_shift.language(6)), qr(0))
    assert total == 1


def test_measure_json_round_trip(fair):
    clone = measure_from_json(fair.to_json(), subshift=full_shift(2))
    assert clone.mass((0, 1, 1)) == fair.mass((0, 1, 1))
