import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from amdiscount import (
    AmdParams,
    DiscountSchedule,
    DomainError,
    RewardSequence,
    TwoPeriodLottery,
    UtilitySpec,
    bracket_check,
    correlation_aversion_lambda,
    correlation_roots,
    dominance_margin,
    dominance_violation_check,
    hidden_zero_delta,
    lottery_values,
    sequence_value,
)
from oracles import h_roots_brentq

POWER = UtilitySpec.power(0.6)
LINEAR = UtilitySpec.power(1.0)
EXP09 = DiscountSchedule.exponential(0.9)
UNIFORM = DiscountSchedule.exponential(1.0)


def test_hidden_zero_grows_with_more_zeros():
    params = AmdParams(2.0, POWER, EXP09)
    gaps = [hidden_zero_delta(10, k, params) for k in range(1, 8)]
    assert gaps[0] > 0
    assert np.all(np.diff(gaps) > 0)


@given(st.floats(0.01, 1e3), st.integers(1, 20), st.floats(0.5, 100), st.floats(0.3, 1.0))
def test_hidden_zero_is_positive(x, k, lam, delta):
    assume(POWER(x) / lam < 30)
    params = AmdParams(lam, POWER, DiscountSchedule.exponential(delta))
    assert hidden_zero_delta(x, k, params) > 0


def test_hidden_zero_rejects_bad_arguments():
    params = AmdParams(2.0, POWER, EXP09)
    with pytest.raises(DomainError):
        hidden_zero_delta(0.0, 1, params)
    with pytest.raises(DomainError):
        hidden_zero_delta(5.0, 0, params)


def test_small_addition_after_large_reward_lowers_value():
    params = AmdParams(70.0, POWER, EXP09)
    base = RewardSequence((100.0,), 0)
    assert dominance_violation_check(base, 10.0, params)
    assert dominance_margin(base, 10.0, params) == pytest.approx(
        sequence_value([100.0], params) - sequence_value([100.0, 10.0], params)
    )


def test_large_addition_raises_value():
    params = AmdParams(2.0, POWER, EXP09)
    assert not dominance_violation_check(RewardSequence((10.0,), 0), 50.0, params)


def test_dominance_crossover_in_trailing_zeros():
    params = AmdParams(70.0, POWER, EXP09)
    margins = [dominance_margin(RewardSequence((100.0,), k), 10.0, params) for k in range(9)]
    signs = np.sign(margins)
    # one sign change, from "addition hurts" to "addition helps"
    assert signs[0] > 0 and signs[-1] < 0
    assert np.count_nonzero(np.diff(signs)) == 1


def test_lottery_rejects_reversed_outcomes():
    with pytest.raises(DomainError):
        TwoPeriodLottery(5, 1, 1, 3)
    with pytest.raises(DomainError):
        TwoPeriodLottery(1, 5, 1, 3, t1=2, t2=2)
    with pytest.raises(DomainError):
        TwoPeriodLottery(1, 5, 1, 3, horizon=0)


def _state_by_sequence(a, b, lot, params):
    rewards = [0.0] * (lot.horizon + 1)
    rewards[lot.t1], rewards[lot.t2] = a, b
    return sequence_value(rewards, params)


@given(
    st.lists(st.floats(0, 100), min_size=4, max_size=4),
    st.integers(0, 3), st.integers(1, 4), st.integers(0, 3),
    st.floats(0.1, 100), st.floats(0.5, 1.0),
)
def test_lottery_values_match_sequence_values(xs, t1, gap, extra, lam, delta):
    x_s, x_l = sorted(xs[:2])
    y_s, y_l = sorted(xs[2:])
    lot = TwoPeriodLottery(x_s, x_l, y_s, y_l, t1, t1 + gap, t1 + gap + extra)
    params = AmdParams(lam, POWER, DiscountSchedule.exponential(delta))
    l1, l2 = lottery_values(lot, params)
    ref1 = 0.5 * (_state_by_sequence(x_s, y_s, lot, params) + _state_by_sequence(x_l, y_l, lot, params))
    ref2 = 0.5 * (_state_by_sequence(x_s, y_l, lot, params) + _state_by_sequence(x_l, y_s, lot, params))
    assert l1 == pytest.approx(ref1, rel=1e-12, abs=1e-12)
    assert l2 == pytest.approx(ref2, rel=1e-12, abs=1e-12)


def test_correlation_preference_flips_with_lambda():
    lot = TwoPeriodLottery(5, 10, 1, 3)
    low = lottery_values(lot, AmdParams(1.0, LINEAR, UNIFORM))
    high = lottery_values(lot, AmdParams(100.0, LINEAR, UNIFORM))
    assert low[0] > low[1]
    assert high[0] < high[1]
    lam_star = correlation_aversion_lambda(lot, LINEAR, UNIFORM)
    assert 1 < lam_star < 100


@pytest.mark.parametrize("kappa", [0.05, 0.5, 1.0, 2.0, 20.0])
def test_correlation_roots_match_brentq(kappa):
    a1, a2 = correlation_roots(kappa)
    r1, r2 = h_roots_brentq(kappa)
    assert a1 < 0 < a2 or a1 < a2
    assert a1 == pytest.approx(r1, abs=1e-8)
    assert a2 == pytest.approx(r2, abs=1e-8)
    for a in (a1, a2):
        assert (a - 2) / (a + 2) * math.exp(a) == pytest.approx(kappa, rel=1e-7)


def test_unit_kappa_roots_are_symmetric():
    a1, a2 = correlation_roots(1.0)
    assert a1 == pytest.approx(-a2, abs=1e-8)
    assert a2 == pytest.approx(2.3993572808, abs=1e-8)


def test_sound_threshold_is_sufficient_on_random_lotteries():
    rng = np.random.default_rng(11)
    for _ in range(100):
        x_s, x_l = np.sort(rng.uniform(0, 20, 2))
        y_s, y_l = np.sort(rng.uniform(0, 20, 2))
        if x_l - x_s < 1e-3 or y_l - y_s < 1e-3:
            continue
        t1 = int(rng.integers(0, 3))
        lot = TwoPeriodLottery(x_s, x_l, y_s, y_l, t1, t1 + int(rng.integers(1, 4)))
        disc = DiscountSchedule.exponential(rng.uniform(0.5, 1.0))
        lam_star = correlation_aversion_lambda(lot, LINEAR, disc)
        for lam in lam_star * np.array([1.001, 1.5, 3.0, 30.0]):
            if lam <= 0:
                continue
            l1, l2 = lottery_values(lot, AmdParams(float(lam), LINEAR, disc))
            assert l1 < l2


def test_unknown_threshold_variant_rejected():
    with pytest.raises(DomainError):
        correlation_aversion_lambda(TwoPeriodLottery(5, 10, 1, 3), LINEAR, UNIFORM, "other")


def test_bracket_check_passes_on_examples():
    params = AmdParams(2.0, POWER, EXP09)
    for seq in (RewardSequence((10, 0, 5)), RewardSequence((1, 2, 3, 4), 2), RewardSequence((100,), 3)):
        rep = bracket_check(seq, params)
        assert rep.passed, rep.details
        assert rep.to_dict()["check"] == "bracket"


def test_bracket_check_needs_three_periods():
    with pytest.raises(DomainError):
        bracket_check([1, 2], AmdParams(2.0))


@given(
    st.lists(st.floats(0, 1e3), min_size=1, max_size=20),
    st.integers(0, 3), st.floats(0.1, 100), st.floats(0.3, 1.0),
)
def test_bracket_check_holds_for_random_sequences(rewards, pad, lam, delta):
    assume(len(rewards) + pad >= 3)
    rep = bracket_check(RewardSequence(tuple(rewards), pad), AmdParams(lam, POWER, DiscountSchedule.exponential(delta)))
    assert rep.passed, rep.details
