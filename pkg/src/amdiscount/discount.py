"""Single-reward discount function under exponential defaults and its shape.

A lone reward ``x`` at period ``T`` (zeros everywhere else) receives the
weight ``1 / (1 + G(T) exp(-v))`` with ``v = u(x) / lam``. ``G`` sums the
relative default weights of the empty periods; the *padded* variant adds one
trailing zero period after the reward.

Everything here treats ``T`` as continuous where a derivative or a bisection
needs it; integer periods are what callers normally pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import bisect
from .exceptions import DomainError, NoIndifferenceError, UnsupportedScheduleError
from .valuation import AmdParams, UtilitySpec
from .validation import check_in_interval, check_int, check_nonnegative, check_positive

__all__ = [
    "GKind",
    "ShapeReport",
    "g_function",
    "log_g",
    "single_reward_weight",
    "discount_curve",
    "common_difference_margin",
    "common_difference_predicate",
    "indifference_delay",
    "CdeOutcome",
    "behavioral_cde",
    "cde_behavioral_check",
    "concavity_thresholds",
    "value_function_shape",
    "s_shape_lambda_bound",
    "zeta_residual",
]

FLAT_TOL = 1e-12


@dataclass(frozen=True)
class GKind:
    delta: float
    padded: bool = False

    def __post_init__(self):
        object.__setattr__(self, "delta", check_in_interval("delta", self.delta, 0.0, 1.0))


@dataclass(frozen=True)
class ShapeReport:
    """Shape classification of a scanned or analysed curve.

    ``classification`` is one of ``convex``, ``concave-then-convex``,
    ``s-shaped`` or ``concave``. ``thresholds`` holds ``(name, value)`` pairs.
    """

    classification: str
    thresholds: tuple[tuple[str, float], ...] = ()
    scan_grid: np.ndarray | None = None

    def threshold(self, name, default=None):
        for key, value in self.thresholds:
            if key == name:
                return value
        return default

    def to_dict(self):
        grid = None
        if self.scan_grid is not None and len(self.scan_grid):
            grid = {
                "start": float(self.scan_grid[0]),
                "stop": float(self.scan_grid[-1]),
                "num": int(len(self.scan_grid)),
            }
        return {
            "classification": self.classification,
            "thresholds": {k: v for k, v in self.thresholds},
            "scan_grid": grid,
        }


def _kind(kind_or_delta, padded=False):
    if isinstance(kind_or_delta, GKind):
        return kind_or_delta
    return GKind(kind_or_delta, padded)


def g_function(T, kind):
    """Relative weight mass of the zero-reward periods around a reward at ``T``.

    ``delta = 1``: ``T`` (padded ``T + 1``); otherwise
    ``(delta**-T - 1) / (1 - delta)`` (padded ``+ delta``).
    """
    kind = _kind(kind)
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise DomainError("T must be non-negative")
    d = kind.delta
    if d == 1.0:
        out = T + 1.0 if kind.padded else T.copy()
    else:
        with np.errstate(over="ignore"):
            out = np.expm1(-T * math.log(d)) / (1.0 - d)
        if kind.padded:
            out = out + d
    return float(out) if out.ndim == 0 else out


def log_g(T, kind):
    """``log G(T)`` computed without overflow for large ``T``."""
    kind = _kind(kind)
    T = np.asarray(T, dtype=float)
    d = kind.delta
    with np.errstate(divide="ignore"):
        if d == 1.0:
            out = np.log(T + 1.0) if kind.padded else np.log(T)
        else:
            rate = -math.log(d)
            # log(delta**-T - 1) = T*rate + log(1 - delta**T)
            out = T * rate + np.log(-np.expm1(-T * rate)) - math.log1p(-d)
            if kind.padded:
                out = np.logaddexp(out, math.log(d))
    return float(out) if out.ndim == 0 else out


def _weight_from_v(v, T, kind):
    # 1 / (1 + G e^{-v}) as a logistic in (v - log G)
    z = np.asarray(v, dtype=float) - log_g(T, kind)
    out = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    return float(out) if out.ndim == 0 else out


def _exponential_delta(params: AmdParams):
    if not params.discounts.is_exponential:
        raise UnsupportedScheduleError(
            "the single-reward closed form needs exponential default factors"
        )
    return params.discounts.delta


def single_reward_weight(x, T, params: AmdParams, padded=False):
    """Weight of a lone reward ``x`` delivered at period ``T``.

    Equals ``amd_weights`` of ``[0]*T + [x]`` (plus one trailing zero when
    ``padded``) at index ``T``.
    """
    x = check_nonnegative("x", x)
    T = check_int("T", T, minimum=1)
    delta = _exponential_delta(params)
    v = params.utility(x) / params.lam
    return _weight_from_v(v, T, GKind(delta, padded))


def discount_curve(x, T, params: AmdParams, padded=False):
    """Vectorised single-reward weight over a (possibly non-integer) ``T`` grid."""
    delta = _exponential_delta(params)
    v = params.utility(check_nonnegative("x", x)) / params.lam
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise DomainError("T must be > 0")
    return _weight_from_v(v, T, GKind(delta, padded))


# -- common difference effect --------------------------------------------------


def _check_cde_args(v_l, v_s, t_l=None, t_s=None):
    v_l = check_positive("v_l", v_l)
    v_s = check_positive("v_s", v_s)
    if not v_l > v_s:
        raise DomainError(f"need v_l > v_s > 0, got v_l={v_l}, v_s={v_s}")
    if t_s is not None:
        t_s = check_positive("t_s", t_s)
    if t_l is not None:
        t_l = check_positive("t_l", t_l)
        if not t_l > t_s:
            raise DomainError(f"need t_l > t_s > 0, got t_l={t_l}, t_s={t_s}")
    return v_l, v_s, t_l, t_s


def common_difference_margin(v_l, v_s, t_l, t_s, delta, padded=False):
    """Left minus right side of the common-difference condition.

    Positive means the effect holds. ``delta = 1`` returns ``inf``.
    """
    v_l, v_s, t_l, t_s = _check_cde_args(v_l, v_s, t_l, t_s)
    delta = check_in_interval("delta", delta, 0.0, 1.0)
    if delta == 1.0:
        return math.inf
    lhs = v_l - v_s + math.log(v_l / v_s)
    if padded:
        c = delta * (1.0 - delta)
        rhs = math.log((delta ** -t_l - c) / (delta ** -t_s - c))
    else:
        rhs = (t_l - t_s) * math.log(1.0 / delta)
    return lhs - rhs


def common_difference_predicate(v_l, v_s, t_l, t_s, delta, padded=False) -> bool:
    """Whether a common delay shifts preference toward the larger-later reward.

    ``v_l``/``v_s`` are utilities already divided by lambda; ``(v_l, t_l)`` and
    ``(v_s, t_s)`` are assumed indifferent.
    """
    return common_difference_margin(v_l, v_s, t_l, t_s, delta, padded) > 0


def _log_value(v, T, kind, lam):
    # log(lam * v * w_T(v)); w_T = 1 / (1 + exp(log G - v))
    return math.log(lam * v) - float(np.logaddexp(0.0, log_g(T, kind) - v))


def indifference_delay(v_l, v_s, t_s, delta, padded=False, lam=1.0, t_max=1e4):
    """Continuous delay ``t_l`` at which ``(v_l, t_l)`` is worth ``(v_s, t_s)``."""
    v_l, v_s, _, t_s = _check_cde_args(v_l, v_s, None, t_s)
    kind = GKind(delta, padded)
    target = _log_value(v_s, t_s, kind, lam)

    def gap(T):
        return _log_value(v_l, T, kind, lam) - target

    if gap(t_max) >= 0:
        raise NoIndifferenceError(
            f"larger-later reward still preferred at T={t_max:g}; no indifference point"
        )
    return bisect(gap, t_s, t_max)


@dataclass(frozen=True)
class CdeOutcome:
    t_l: float
    log_value_ss: float
    log_value_ll: float

    @property
    def holds(self):
        return self.log_value_ll > self.log_value_ss


def behavioral_cde(v_l, v_s, t_s, delta, lam, dt, padded=False, t_max=1e4):
    """Find the indifference delay, add ``dt`` to both delays and compare values."""
    dt = check_positive("dt", dt)
    lam = check_positive("lambda", lam)
    t_l = indifference_delay(v_l, v_s, t_s, delta, padded, lam, t_max)
    kind = GKind(delta, padded)
    return CdeOutcome(
        t_l=t_l,
        log_value_ss=_log_value(v_s, t_s + dt, kind, lam),
        log_value_ll=_log_value(v_l, t_l + dt, kind, lam),
    )


def cde_behavioral_check(v_l, v_s, t_s, delta, lam, dt, padded=False) -> bool:
    """True when the larger-later reward is strictly preferred after the shift."""
    return behavioral_cde(v_l, v_s, t_s, delta, lam, dt, padded).holds


# -- shape of the discount function in T ----------------------------------------


def concavity_thresholds(x, delta, lam, utility: UtilitySpec, padded=False) -> ShapeReport:
    """Where the single-reward discount function is concave in ``T``.

    For ``delta < 1`` rewards above ``x_lower`` make the curve concave for
    ``T < T_lower`` and convex after; smaller rewards give a convex curve.
    """
    x = check_nonnegative("x", x)
    lam = check_positive("lambda", lam)
    delta = check_in_interval("delta", delta, 0.0, 1.0)
    if delta == 1.0:
        return ShapeReport("convex")
    v = utility(x) / lam
    v_lower = math.log(2.0 / (1.0 - delta) - (delta if padded else 0.0))
    thresholds = [("v_lower", v_lower)]
    try:
        thresholds.append(("x_lower", utility.inverse(lam * v_lower)))
    except DomainError:
        pass  # explicit table does not reach the threshold utility
    if v <= v_lower:
        return ShapeReport("convex", tuple(thresholds))
    offset = delta * (1.0 - delta) if padded else 0.0
    t_lower = math.log((1.0 - delta) * math.exp(v) - 1.0 + offset) / math.log(1.0 / delta)
    thresholds.append(("T_lower", t_lower))
    return ShapeReport("concave-then-convex", tuple(thresholds))


# -- shape of the value function in x --------------------------------------------


def _classify(second_diff):
    signs = np.where(np.abs(second_diff) < FLAT_TOL, 0, np.sign(second_diff)).astype(int)
    pos = np.flatnonzero(signs > 0)
    neg = np.flatnonzero(signs < 0)
    if pos.size == 0:
        return "concave", signs
    if neg.size == 0:
        return "convex", signs
    if pos[0] < neg[-1]:
        return "s-shaped", signs
    return "concave-then-convex", signs


def _zeta_condition(v, g):
    # zeta(v) + 1/v - 1/2 with zeta = g / (g + e^v), overflow-safe
    zeta = 1.0 / (1.0 + math.exp(min(v - math.log(g), 700.0)))
    return zeta + 1.0 / v - 0.5


def value_function_shape(
    T, delta, lam, utility: UtilitySpec, x_max, grid_n=1000, padded=False
) -> ShapeReport:
    """Scan ``U(x) = w_T(x) u(x)`` on ``[0, x_max]`` and classify its shape.

    Thresholds reported when they exist inside the grid:

    ``convex_from``
        first grid point with a positive second difference;
    ``x_star``
        the convex-to-concave inflection (linear interpolation of the second
        difference between the last convex point and the next concave one);
    ``concave_from``
        first grid point after which no second difference is positive;
    ``x_bar``
        root of ``zeta(v) + 1/v = 1/2``, beyond which ``U`` is concave.
    """
    T = check_int("T", T, minimum=1)
    lam = check_positive("lambda", lam)
    x_max = check_positive("x_max", x_max)
    grid_n = check_int("grid_n", grid_n, minimum=100)
    kind = GKind(delta, padded)
    if not utility.strictly_concave:
        raise DomainError("value-function scan needs a strictly concave utility")
    if x_max > utility.x_max:
        raise DomainError("x_max lies outside the utility's domain")

    grid = np.linspace(0.0, x_max, grid_n + 1)
    u = utility(grid)
    values = u * _weight_from_v(u / lam, T, kind)
    dd = values[2:] - 2.0 * values[1:-1] + values[:-2]
    classification, signs = _classify(dd)
    inner = grid[1:-1]

    thresholds = []
    pos = np.flatnonzero(signs > 0)
    if pos.size:
        thresholds.append(("convex_from", float(inner[pos[0]])))
    if classification == "s-shaped":
        later_neg = np.flatnonzero(signs < 0)
        i = pos[pos < later_neg[-1]][-1]
        j = later_neg[later_neg > i][0]
        frac = dd[i] / (dd[i] - dd[j])
        thresholds.append(("x_star", float(inner[i] + frac * (inner[j] - inner[i]))))
    nonneg_tail = np.flatnonzero(signs > 0)
    start = nonneg_tail[-1] + 1 if nonneg_tail.size else 0
    if start < inner.size:
        thresholds.append(("concave_from", float(inner[start])))

    g = math.exp(log_g(T, kind))
    v_top = float(u[-1]) / lam
    if v_top > 2.0 and _zeta_condition(v_top, g) < 0:
        v_bar = bisect(lambda v: _zeta_condition(v, g), 2.0, v_top, tol=1e-15)
        thresholds.append(("x_bar", float(utility.inverse(lam * v_bar))))
    return ShapeReport(classification, tuple(thresholds), grid)


def zeta_residual(x, T, delta, lam, utility: UtilitySpec, padded=False):
    """Residual of ``zeta(v(x)) + 1/v(x) = 1/2`` at ``x``."""
    g = math.exp(log_g(T, GKind(delta, padded)))
    return _zeta_condition(utility(x) / lam, g)


def s_shape_lambda_bound(T, delta, utility: UtilitySpec, padded=False):
    """``2 / (a (2 + ln g))`` with ``a = d/dx (1/u')`` taken at ``x = ln g``.

    Below this attention cost the value function is strictly convex near
    ``x = ln g`` when ``a`` does not vary with ``x`` (e.g. ``log1p``). Returns 0
    when ``a`` diverges at that point.
    """
    T = check_int("T", T, minimum=1)
    lg = log_g(T, GKind(delta, padded))
    x = max(lg, 0.0)
    d1 = utility.derivative(x)
    d2 = utility.second_derivative(x)
    if not math.isfinite(d1) or d1 == 0:
        return 0.0
    a = -d2 / d1 ** 2
    if not math.isfinite(a):
        return 0.0
    if a <= 0:
        raise DomainError("utility must be strictly concave at x = ln g")
    return 2.0 / (a * (2.0 + lg))
