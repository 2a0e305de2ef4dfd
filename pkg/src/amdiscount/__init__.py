"""Attention-modulated discounting: valuation, anomaly analysis, planning and sampling."""

from .anomalies import (
    CheckReport,
    TwoPeriodLottery,
    bracket_check,
    correlation_aversion_lambda,
    correlation_roots,
    dominance_margin,
    dominance_violation_check,
    hidden_zero_delta,
    lottery_values,
)
from .discount import (
    GKind,
    ShapeReport,
    cde_behavioral_check,
    common_difference_predicate,
    concavity_thresholds,
    discount_curve,
    g_function,
    indifference_delay,
    single_reward_weight,
    value_function_shape,
)
from .exceptions import (
    AmdError,
    ConvergenceError,
    DomainError,
    NoIndifferenceError,
    UnsupportedScheduleError,
)
from .planner import (
    PlanProblem,
    PlanResult,
    PlanTrace,
    concentration_lambda_bound,
    dynamic_replan,
    optimal_plan,
)
from .sampler import SamplerConfig, info_gain, posterior_update, run_exploration
from .valuation import (
    AmdParams,
    DiscountSchedule,
    RewardSequence,
    UtilitySpec,
    amd_weights,
    eval_utility,
    load_document,
    sequence_value,
)

__version__ = "0.1.0"
