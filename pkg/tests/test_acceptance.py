"""Acceptance gate: every numbered criterion runs at its stated
tolerance and prints one pass/fail line (visible with pytest -s)."""

import pytest

from cplab.acceptance import AcceptanceSuite


@pytest.fixture(scope="module")
def suite():
    return AcceptanceSuite()


def _check(result):
    print(result.line())
    assert result.passed, result.line()


def test_criterion_01_fibonacci_area_bounds(suite):
    _check(suite.fibonacci_area_bounds())


def test_criterion_02_query_family_suffix_independence(suite):
    _check(suite.query_family_independence())


def test_criterion_03_finite_field_round_trip(suite):
    _check(suite.finite_field_round_trip())


def test_criterion_04_oracle_equivalence(suite):
    _check(suite.oracle_equivalence())


def test_criterion_05_chronogram_exactness(suite):
    _check(suite.chronogram_exactness())


def test_criterion_06_encode_decode_artificial(suite):
    _check(suite.encode_decode_artificial())


def test_criterion_07_encode_decode_orc(suite):
    _check(suite.encode_decode_orc())


def test_criterion_08_information_floor(suite):
    _check(suite.information_floor())


def test_criterion_09_crossing_out_independence(suite):
    _check(suite.crossing_out_independence())


def test_criterion_10_answer_decomposition(suite):
    _check(suite.answer_decomposition())


def test_criterion_11_well_separated_frequency(suite):
    _check(suite.well_separated_frequency())
