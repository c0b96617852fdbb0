
import pytest

from suspshift.quadratic import sqrt_d
from suspshift.measures import SturmianMeasure
from suspshift.markers import (
    MarkerSet,
    NoMarkerFound,
    build_marker,
    return_spectrum,
    verify_coverage,
    verify_disjointness,
)
from suspshift.subshifts import Sturmian, full_shift, golden_mean_sft, parse_word


@pytest.fixture(scope="module")
def sturmian():
    return Sturmian(sqrt_d(2) - 1)


class TestReturnSpectrum:
    def test_full_shift_symbol(self):
        spec = return_spectrum(full_shift(2), (0,), depth=10)
        assert spec.min_return == 1
        assert spec.max_gap is None  # 1^10 omits "0"

    def test_golden_mean_one(self):
        spec = return_spectrum(golden_mean_sft(), (1,), depth=10)
        assert spec.min_return == 2  # "11" forbidden
        assert spec.max_gap is None  # 0^10 admissible

    def test_sturmian_length3(self, sturmian):
        spec = return_spectrum(sturmian, parse_word("010"), depth=50)
        assert spec.min_return >= 2
        assert spec.max_gap is not None  # syndetic occurrences

    def test_sturmian_gap_values_are_sparse(self, sturmian):
        # return lengths of a Sturmian factor take exactly two values
        spec = return_spectrum(sturmian, parse_word("00"), depth=60)
        assert set(spec.gap_counts) == {5, 7}


class TestBuildMarker:
    def test_full_shift_has_fixed_point_witness(self):
        with pytest.raises(NoMarkerFound) as err:
            build_marker(full_shift(2), n=3, max_word_len=6, depth=30)
        assert err.value.witness is not None
        assert err.value.witness.period == 1

    def test_golden_mean_periodic_witness(self):
        with pytest.raises(NoMarkerFound) as err:
            build_marker(golden_mean_sft(), n=4, max_word_len=8, depth=30)
        assert err.value.witness.word == (0,)

    def test_sturmian_n5_certified(self, sturmian):
        marker = build_marker(sturmian, n=5, max_word_len=20, depth=100)
        assert marker.min_return >= 5
        assert marker.coverage_k <= marker.spectrum.max_gap
        assert verify_disjointness(sturmian, marker.word, 5, 100)
        assert verify_coverage(sturmian, marker.word, marker.coverage_k)
        cert = marker.certificate()
        assert cert["separation_n"] == 5

    def test_sturmian_n1_any_factor(self, sturmian):
        marker = build_marker(sturmian, n=1, max_word_len=4, depth=60)
        assert len(marker.word) in (1, 2)

    def test_kac_height_bound(self, sturmian):
        # invariant mass of the marker cylinder is at most 1/min_return
        marker = build_marker(sturmian, n=5, max_word_len=20, depth=100)
        mu = SturmianMeasure(sturmian)
        mass = mu.mass(marker.word)
        assert mass * marker.min_return <= 1

    def test_deeper_scan_refines_certificate(self, sturmian):
        m100 = build_marker(sturmian, n=5, max_word_len=20, depth=100)
        m160 = build_marker(sturmian, n=5, max_word_len=20, depth=160)
        assert m100.word == m160.word
        assert m160.min_return >= m100.min_return or m100.min_return == m160.min_return
