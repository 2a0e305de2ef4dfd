"""Budget allocation under attention-weighted valuation, and replanning.

The planner maximises ``U(s) = sum_t w_t(s) u(s_t)`` over ``{s >= 0, sum s = m}``
with the weights themselves depending on the plan. It uses projected gradient
ascent with an Armijo backtracking line search and keeps the best of several
starts. Each iteration first tries a curvature-scaled step on the positive
coordinates; power utilities put huge curvature on tiny allocations, where
plain gradient steps crawl.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, DomainError
from .valuation import AmdParams, UtilitySpec, attention_weights
from .validation import check_int, check_positive

__all__ = [
    "WITH_LEARNING",
    "WITHOUT_LEARNING",
    "PlanProblem",
    "PlanResult",
    "PlanStep",
    "PlanTrace",
    "project_simplex",
    "objective_and_gradient",
    "objective_hessian",
    "solve_allocation",
    "optimal_plan",
    "concentration_lambda_bound",
    "dynamic_replan",
]

WITH_LEARNING = "with-learning"
WITHOUT_LEARNING = "without-learning"

MAX_ITER = 50_000
GRAD_TOL = 1e-8
STALL_TOL = 1e-12
STALL_ITERS = 100
KKT_TOL = 1e-6
ARMIJO_SLOPE = 1e-4
ARMIJO_SHRINK = 0.5
CLAMP = 1e-12
NEWTON_HALVINGS = 12
START_SEED = 20240601


@dataclass(frozen=True)
class PlanProblem:
    m: float
    T: int
    params: AmdParams
    learning_mode: str = WITHOUT_LEARNING

    def __post_init__(self):
        object.__setattr__(self, "m", check_positive("m", self.m))
        object.__setattr__(self, "T", check_int("T", self.T, minimum=1))
        if self.learning_mode not in (WITH_LEARNING, WITHOUT_LEARNING):
            raise DomainError(f"unknown learning mode {self.learning_mode!r}")

    @classmethod
    def from_dict(cls, doc):
        return cls(
            m=doc["m"],
            T=doc["T"],
            params=AmdParams.from_dict(doc),
            learning_mode=doc.get("learning_mode", WITHOUT_LEARNING),
        )


@dataclass(frozen=True)
class PlanResult:
    allocation: np.ndarray
    objective: float
    weights: np.ndarray
    kkt_residual: float
    iterations: int
    start: str

    def to_dict(self):
        return {
            "allocation": self.allocation.tolist(),
            "objective": self.objective,
            "weights": self.weights.tolist(),
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "start": self.start,
        }


def project_simplex(y, m=1.0):
    """Euclidean projection of ``y`` onto ``{s >= 0, sum(s) = m}``."""
    y = np.asarray(y, dtype=float)
    mu = np.sort(y)[::-1]
    cumulative = np.cumsum(mu) - m
    idx = np.arange(1, y.size + 1)
    rho = np.flatnonzero(mu - cumulative / idx > 0)[-1]
    theta = cumulative[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def objective_and_gradient(s, log_defaults, utility: UtilitySpec, lam):
    """Objective, its gradient and the weights at allocation ``s``.

    ``dU/ds_t = w_t u'(s_t) (u(s_t) + lam - U) / lam``. Derivatives are taken
    at ``max(s_t, 1e-12)`` so power utilities stay finite at zero.
    """
    s = np.asarray(s, dtype=float)
    u = utility(s)
    w = attention_weights(u, log_defaults, lam)
    value = float(w @ u)
    du = utility.derivative(np.maximum(s, CLAMP))
    grad = w * du * (u + lam - value) / lam
    return value, grad, w


def objective_hessian(s, log_defaults, utility: UtilitySpec, lam):
    """Hessian of the objective in ``s``, with the same clamping as the gradient."""
    s = np.asarray(s, dtype=float)
    u = utility(s)
    w = attention_weights(u, log_defaults, lam)
    value = float(w @ u)
    a = w * (1.0 + (u - value) / lam)
    at = np.maximum(s, CLAMP)
    du = utility.derivative(at)
    d2u = utility.second_derivative(at)
    b = (np.diag(a + w) - np.outer(a, w) - np.outer(w, a)) / lam
    return np.diag(a * d2u) + du[:, None] * b * du[None, :]


def _residual(s, grad, m):
    return float(np.max(np.abs(project_simplex(s + grad, m) - s)))


def _newton_direction(s, grad, log_d, utility, lam):
    """Curvature-scaled ascent step on the positive coordinates.

    The Hessian is reduced to directions that keep the budget fixed, and its
    eigenvalues are replaced by minus their magnitudes, so the step is an
    ascent direction even where the objective is not locally concave.
    """
    free = np.flatnonzero(s > 0)
    k = free.size
    if k < 2:
        return None
    h = objective_hessian(s, log_d, utility, lam)[np.ix_(free, free)]
    basis = np.linalg.svd(np.eye(k) - 1.0 / k)[0][:, : k - 1]
    reduced = basis.T @ h @ basis
    if not np.all(np.isfinite(reduced)):
        return None
    vals, vecs = np.linalg.eigh(0.5 * (reduced + reduced.T))
    mags = np.abs(vals)
    floor = 1e-12 * mags.max() if mags.max() > 0 else 0.0
    if floor == 0.0:
        return None
    mags = np.maximum(mags, floor)
    g = basis.T @ grad[free]
    direction = np.zeros_like(s)
    direction[free] = basis @ (vecs @ ((vecs.T @ g) / mags))
    return direction


def _ascend(s, m, log_d, utility, lam):
    value, grad, _ = objective_and_gradient(s, log_d, utility, lam)
    resid = _residual(s, grad, m)
    step = 1.0
    stall = 0

    def attempt(trial):
        if np.array_equal(trial, s):
            return None
        t_value, t_grad, _ = objective_and_gradient(trial, log_d, utility, lam)
        if t_value > value and t_value >= value + ARMIJO_SLOPE * float(grad @ (trial - s)):
            return trial, t_value, t_grad, _residual(trial, t_grad, m)
        # once the objective is flat to rounding, judge progress by stationarity
        if t_value >= value - noise:
            t_resid = _residual(trial, t_grad, m)
            if t_resid < resid:
                return trial, t_value, t_grad, t_resid
        return None

    for it in range(1, MAX_ITER + 1):
        if resid <= GRAD_TOL:
            return s, it, True
        noise = 8.0 * np.finfo(float).eps * max(1.0, abs(value))
        accepted = None
        direction = _newton_direction(s, grad, log_d, utility, lam)
        if direction is not None:
            shrinking = direction < 0
            # stay strictly inside the current face; gradient steps handle exits
            scale = min(1.0, 0.99 * float(np.min(s[shrinking] / -direction[shrinking]))) if shrinking.any() else 1.0
            for _ in range(NEWTON_HALVINGS):
                accepted = attempt(project_simplex(s + scale * direction, m))
                if accepted is not None:
                    break
                scale *= 0.5
        while accepted is None:
            accepted = attempt(project_simplex(s + step * grad, m))
            if accepted is None:
                step *= ARMIJO_SHRINK
                if step < 1e-30:
                    return s, it, False
        trial, t_value, t_grad, t_resid = accepted
        change = abs(t_value - value) / max(1.0, abs(value))
        stall = stall + 1 if change <= STALL_TOL and t_resid <= KKT_TOL else 0
        s, value, grad, resid = trial, t_value, t_grad, t_resid
        if stall >= STALL_ITERS:
            return s, it, True
        step = min(step * 2.0, 1e6)
    return s, MAX_ITER, False


def _starts(n, m, seed):
    rng = np.random.default_rng(seed)
    corner0 = np.zeros(n)
    corner0[0] = m
    cornerT = np.zeros(n)
    cornerT[-1] = m
    yield "uniform", np.full(n, m / n)
    yield "period-0", corner0
    yield "period-T", cornerT
    for i in range(2):
        yield f"random-{i}", m * rng.dirichlet(np.ones(n))


def solve_allocation(m, log_defaults, utility: UtilitySpec, lam, seed=START_SEED) -> PlanResult:
    """Best converged allocation of budget ``m`` across ``len(log_defaults)`` periods."""
    m = check_positive("m", m)
    lam = check_positive("lambda", lam)
    log_d = np.asarray(log_defaults, dtype=float)
    n = log_d.size
    if n == 1:
        alloc = np.array([m])
        value, _, w = objective_and_gradient(alloc, log_d, utility, lam)
        return PlanResult(alloc, value, w, 0.0, 0, "single-period")

    best = None
    best_any = None
    for name, start in _starts(n, m, seed):
        s, iters, _ = _ascend(start, m, log_d, utility, lam)
        value, grad, w = objective_and_gradient(s, log_d, utility, lam)
        kkt = _residual(s, grad, m)
        result = PlanResult(s, value, w, kkt, iters, name)
        if best_any is None or value > best_any.objective:
            best_any = result
        if kkt <= KKT_TOL and (best is None or value > best.objective):
            best = result
    if best is None:
        raise ConvergenceError(
            f"no start reached a KKT residual <= {KKT_TOL:g} within {MAX_ITER} iterations",
            best=best_any,
        )
    return best


def optimal_plan(prob: PlanProblem, seed=START_SEED) -> PlanResult:
    """Optimal allocation of ``prob.m`` over periods ``0..T``."""
    log_d = prob.params.discounts.log_factors(prob.T + 1)
    return solve_allocation(prob.m, log_d, prob.params.utility, prob.params.lam, seed)


def concentration_lambda_bound(utility: UtilitySpec, m) -> float:
    """``inf -u'(s)^2 / u''(s)`` over ``s`` in ``(0, m]``.

    At or below this attention cost, putting the whole budget in the period
    with the largest default weight is optimal. Explicit tables use the
    three-point derivative estimates at each interior knot up to ``m``.
    """
    m = check_positive("m", m)
    if not utility.strictly_concave:
        raise DomainError("concentration bound needs a strictly concave utility")
    if utility.family == "log1p":
        return float(utility.scale)
    if utility.family == "power":
        return 0.0
    xs = np.array([k[0] for k in utility.knots])
    us = utility.scale * np.array([k[1] for k in utility.knots])
    h = np.diff(xs)
    slope = np.diff(us) / h
    inner = np.arange(1, xs.size - 1)
    inner = inner[xs[inner] <= m]
    if inner.size == 0:
        raise DomainError("explicit table has no interior knot inside (0, m]")
    hl, hr = h[inner - 1], h[inner]
    sl, sr = slope[inner - 1], slope[inner]
    d1 = (sl * hr + sr * hl) / (hl + hr)
    d2 = 2.0 * (sr - sl) / (hl + hr)
    return float(np.min(-d1 ** 2 / d2))


# -- replanning ------------------------------------------------------------------


@dataclass(frozen=True)
class PlanStep:
    step: int
    budget: float
    defaults: np.ndarray
    planned: np.ndarray
    realized: float
    weights: np.ndarray

    def to_dict(self):
        return {
            "step": self.step,
            "budget": self.budget,
            "defaults": self.defaults.tolist(),
            "planned": self.planned.tolist(),
            "realized": self.realized,
            "weights": self.weights.tolist(),
        }


@dataclass(frozen=True)
class PlanTrace:
    learning_mode: str
    steps: tuple[PlanStep, ...] = field(default_factory=tuple)

    @property
    def realized(self):
        return np.array([st.realized for st in self.steps])

    def planned_for(self, step, period):
        st = self.steps[step]
        return float(st.planned[period - st.step])

    def rows(self):
        """``(step, period, planned, realized)`` for every period still ahead."""
        realized = self.realized
        for st in self.steps:
            for offset, planned in enumerate(st.planned):
                period = st.step + offset
                yield st.step, period, float(planned), float(realized[period])

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "period", "planned", "realized"])
        for row in self.rows():
            writer.writerow([row[0], row[1], repr(row[2]), repr(row[3])])
        return buf.getvalue()

    def to_dict(self):
        return {"learning_mode": self.learning_mode, "steps": [s.to_dict() for s in self.steps]}


def dynamic_replan(prob: PlanProblem, seed=START_SEED) -> PlanTrace:
    """Re-solve the remaining problem at every step and consume the first entry.

    Without learning the defaults stay at the original schedule. With learning
    the defaults for the next step are the current plan's weights for the
    remaining periods.
    """
    params = prob.params
    base = params.discounts.factors(prob.T + 1)
    budget = prob.m
    defaults = base
    steps = []
    for j in range(prob.T + 1):
        if budget <= 0:
            raise DomainError("budget exhausted before the last period")
        res = solve_allocation(budget, np.log(defaults), params.utility, params.lam, seed)
        realized = float(res.allocation[0]) if j < prob.T else budget
        steps.append(PlanStep(j, budget, defaults, res.allocation, realized, res.weights))
        budget -= realized
        if prob.learning_mode == WITH_LEARNING:
            defaults = res.weights[1:]
        else:
            defaults = base[j + 1:]
    return PlanTrace(prob.learning_mode, tuple(steps))
