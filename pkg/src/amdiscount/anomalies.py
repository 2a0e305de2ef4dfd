"""Choice anomalies produced by attention weighting, and axiom checks.

Hidden zeros and dominance violations compare sequence values directly.
Correlation aversion works with two-state, two-period lotteries whose state
values follow from the weighted mean over the lottery horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._roots import bisect
from .exceptions import DomainError
from .valuation import (
    AmdParams,
    DiscountSchedule,
    RewardSequence,
    UtilitySpec,
    _as_sequence,
    amd_weights,
    sequence_value,
)
from .validation import check_int, check_nonnegative, check_positive

__all__ = [
    "CheckReport",
    "hidden_zero_delta",
    "dominance_margin",
    "dominance_violation_check",
    "TwoPeriodLottery",
    "lottery_values",
    "correlation_roots",
    "correlation_aversion_lambda",
    "bracket_check",
]

RATIO_TOL = 1e-10


@dataclass(frozen=True)
class CheckReport:
    check: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"check": self.check, "pass": bool(self.passed), "details": self.details}


def hidden_zero_delta(x, extra_periods, params: AmdParams) -> float:
    """``V([x]) - V([x, 0, ..., 0])`` with ``extra_periods`` explicit zeros."""
    x = check_positive("x", x)
    k = check_int("extra_periods", extra_periods, minimum=1)
    return sequence_value([x], params) - sequence_value([x] + [0.0] * k, params)


def _extended(base: RewardSequence, added):
    return RewardSequence(base.rewards + (added,), base.pad_zeros)


def dominance_margin(base, added_reward, params: AmdParams) -> float:
    """``V(base) - V(base + [added_reward])``; positive means dominance is violated."""
    base = _as_sequence(base)
    added = check_positive("added_reward", added_reward)
    return sequence_value(base, params) - sequence_value(_extended(base, added), params)


def dominance_violation_check(base, added_reward, params: AmdParams) -> bool:
    """True when appending ``added_reward`` after the last period lowers the value.

    Both sequences keep ``base.pad_zeros`` trailing zeros.
    """
    return dominance_margin(base, added_reward, params) > 0


# -- correlation aversion --------------------------------------------------------


@dataclass(frozen=True)
class TwoPeriodLottery:
    """Two equally likely states per lottery, rewards at ``t1`` and ``t2``.

    ``L1`` pays ``(x_s, y_s)`` or ``(x_l, y_l)`` (positively correlated);
    ``L2`` pays ``(x_s, y_l)`` or ``(x_l, y_s)``. ``horizon`` is the last
    period of each outcome stream and defaults to ``t2``.
    """

    x_s: float
    x_l: float
    y_s: float
    y_l: float
    t1: int = 0
    t2: int = 1
    horizon: int | None = None

    def __post_init__(self):
        for name in ("x_s", "x_l", "y_s", "y_l"):
            object.__setattr__(self, name, check_nonnegative(name, getattr(self, name)))
        if self.x_l < self.x_s or self.y_l < self.y_s:
            raise DomainError("lottery needs x_l >= x_s and y_l >= y_s")
        t1 = check_int("t1", self.t1, minimum=0)
        t2 = check_int("t2", self.t2, minimum=t1 + 1)
        horizon = t2 if self.horizon is None else check_int("horizon", self.horizon, minimum=t2)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)
        object.__setattr__(self, "horizon", horizon)

    @classmethod
    def from_dict(cls, doc):
        keys = ("x_s", "x_l", "y_s", "y_l", "t1", "t2", "horizon")
        return cls(**{k: doc[k] for k in keys if k in doc})

    def to_dict(self):
        return {k: getattr(self, k) for k in ("x_s", "x_l", "y_s", "y_l", "t1", "t2", "horizon")}


def _lottery_defaults(lot, discounts: DiscountSchedule):
    d = discounts.factors(lot.horizon + 1)
    rest = np.delete(d, [lot.t1, lot.t2])
    return d[lot.t1], d[lot.t2], float(rest.sum())


def _state_value(ua, ub, lam, d1, d2, dz):
    # (d1 e^{ua/lam} ua + d2 e^{ub/lam} ub) / (d1 e^{ua/lam} + d2 e^{ub/lam} + dz)
    logs = [math.log(d1) + ua / lam, math.log(d2) + ub / lam]
    if dz > 0:
        logs.append(math.log(dz))
    top = max(logs)
    e1, e2 = math.exp(logs[0] - top), math.exp(logs[1] - top)
    ez = math.exp(logs[2] - top) if dz > 0 else 0.0
    return (e1 * ua + e2 * ub) / (e1 + e2 + ez)


def lottery_values(lot: TwoPeriodLottery, params: AmdParams):
    """``(U(L1), U(L2))``, each the mean of its two equally likely state values."""
    u = params.utility
    xs, xl, ys, yl = (u(lot.x_s), u(lot.x_l), u(lot.y_s), u(lot.y_l))
    d1, d2, dz = _lottery_defaults(lot, params.discounts)
    lam = params.lam
    l1 = 0.5 * _state_value(xs, ys, lam, d1, d2, dz) + 0.5 * _state_value(xl, yl, lam, d1, d2, dz)
    l2 = 0.5 * _state_value(xs, yl, lam, d1, d2, dz) + 0.5 * _state_value(xl, ys, lam, d1, d2, dz)
    return l1, l2


def _h(alpha, kappa):
    return (alpha - 2.0) * math.exp(alpha) / kappa - alpha - 2.0


def correlation_roots(kappa):
    """The two roots ``alpha_1 < alpha_2`` of ``(alpha - 2) e^alpha / kappa = alpha + 2``.

    ``h(alpha) = (alpha - 2) e^alpha / kappa - alpha - 2`` falls until
    ``(alpha - 1) e^alpha = kappa`` and rises after, and ``h(2) = -4``, so one
    root sits on each side of the turning point.
    """
    kappa = check_positive("kappa", kappa)
    turn = bisect(lambda a: (a - 1.0) * math.exp(a) - kappa, -10.0, 10.0 + math.log1p(kappa))

    def side(direction):
        step = 1.0
        far = turn + direction * step
        while _h(far, kappa) <= 0:
            step *= 2.0
            far = turn + direction * step
        lo, hi = sorted((turn, far))
        return bisect(lambda a: _h(a, kappa), lo, hi)

    return side(-1.0), side(1.0)


def correlation_aversion_lambda(
    lot: TwoPeriodLottery,
    utility: UtilitySpec,
    discounts: DiscountSchedule,
    variant="sound",
) -> float:
    """Attention cost above which ``L2`` is strictly preferred to ``L1``.

    ``variant="sound"`` returns
    ``max((u(x_s) - u(y_l)) / alpha_1, (u(x_l) - u(y_s)) / alpha_2)``.
    ``variant="xl"`` replaces ``u(x_s)`` by ``u(x_l)`` in the first term; that
    number is kept for comparison and is not always sufficient.
    """
    if variant not in ("sound", "xl"):
        raise DomainError(f"unknown variant {variant!r}")
    d = discounts.factors(lot.horizon + 1)
    alpha_1, alpha_2 = correlation_roots(d[lot.t2] / d[lot.t1])
    first = utility(lot.x_s if variant == "sound" else lot.x_l) - utility(lot.y_l)
    second = utility(lot.x_l) - utility(lot.y_s)
    return max(first / alpha_1, second / alpha_2)


# -- axiom checks ----------------------------------------------------------------


def bracket_check(seq, params: AmdParams) -> CheckReport:
    """Check weight-ratio constancy and outcome betweenness on one sequence.

    Ratio constancy compares the weights of the effective sequence with those
    of the same sequence minus its last period. Betweenness is checked on the
    raw rewards without padding: the value must lie between the value of the
    prefix and the utility of the final reward.
    """
    seq = _as_sequence(seq)
    full = seq.effective
    if full.size < 3:
        raise DomainError("bracket check needs an effective length of at least 3")
    w_full = amd_weights(RewardSequence(tuple(full)), params)[:-1]
    w_head = amd_weights(RewardSequence(tuple(full[:-1])), params)
    usable = w_head > 1e-250
    ratios = w_full[usable] / w_head[usable]
    spread = float((ratios.max() - ratios.min()) / ratios.mean())
    ratio_ok = spread <= RATIO_TOL

    details = {"ratio_spread": spread, "ratio_periods": int(usable.sum())}
    between_ok = True
    raw = seq.rewards
    if len(raw) >= 2:
        whole = sequence_value(RewardSequence(raw), params)
        head = sequence_value(RewardSequence(raw[:-1]), params)
        last = params.utility(raw[-1])
        slack = 1e-12 * max(1.0, abs(head), abs(last))
        between_ok = min(head, last) - slack <= whole <= max(head, last) + slack
        details.update(value=whole, prefix_value=head, last_utility=last)
    details.update(ratio_pass=bool(ratio_ok), betweenness_pass=bool(between_ok))
    return CheckReport("bracket", bool(ratio_ok and between_ok), details)
