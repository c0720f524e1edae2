"""Fitness formula: val_error + alpha * (1 - 1/n_params)."""

import pytest

from evonet.fitness import fitness_score, worst_case_score


def test_complexity_term_vanishes_for_single_parameter():
    assert fitness_score(0.5, 1, 1.0) == 0.5


def test_direct_substitution():
    assert fitness_score(0.1, 1000, 1.0) == 1.099


def test_alpha_zero_removes_complexity_term():
    assert fitness_score(0.2, 12345, 0.0) == 0.2


@pytest.mark.parametrize("v", [0.0, 0.25, 0.5, 0.123456789, 1.0])
@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 3.7])
def test_single_parameter_is_exactly_val_error(v, alpha):
    assert fitness_score(v, 1, alpha) == v


def test_monotone_in_error():
    errors = [i / 100 for i in range(101)]
    scores = [fitness_score(e, 500, 1.0) for e in errors]
    assert all(a < b for a, b in zip(scores, scores[1:]))


def test_monotone_in_complexity():
    sizes = [1, 2, 5, 10, 100, 10_000, 10_000_000]
    scores = [fitness_score(0.3, n, 1.0) for n in sizes]
    assert all(a < b for a, b in zip(scores, scores[1:]))


def test_tie_break_prefers_fewer_parameters():
    assert fitness_score(0.4, 100, 1.0) < fitness_score(0.4, 101, 1.0)


def test_score_range_for_unit_alpha():
    # score lives in [0, 2): the limit of a perfect huge model is 1 from below
    assert fitness_score(0.0, 1, 1.0) == 0.0
    big = fitness_score(0.0, 10 ** 9, 1.0)
    assert 0.999999 < big < 1.0
    assert fitness_score(1.0, 10 ** 9, 1.0) < 2.0


def test_domain_errors():
    with pytest.raises(ValueError):
        fitness_score(-0.01, 10, 1.0)
    with pytest.raises(ValueError):
        fitness_score(1.01, 10, 1.0)
    with pytest.raises(ValueError):
        fitness_score(0.5, 0, 1.0)


def test_worst_case_dominates_any_real_score():
    assert worst_case_score(1.0) > fitness_score(1.0, 10 ** 12, 1.0)
    assert worst_case_score(0.0) > fitness_score(1.0, 10 ** 12, 0.0)
