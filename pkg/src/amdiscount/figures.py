"""Datasets behind the standard illustrations, with overridable defaults.

Every builder takes a flat settings mapping (merged over ``FIGURE_DEFAULTS``)
and returns ``(header, rows)``.
"""

from __future__ import annotations

import numpy as np

from .anomalies import dominance_margin
from .discount import GKind, _weight_from_v, discount_curve, indifference_delay
from .planner import WITH_LEARNING, WITHOUT_LEARNING, PlanProblem, dynamic_replan
from .valuation import AmdParams, DiscountSchedule, RewardSequence, UtilitySpec, sequence_value
from .validation import check_int

__all__ = ["FIGURE_DEFAULTS", "SERIES_HEADER", "PLAN_HEADER", "figure_dataset", "dominance_table"]

SERIES_HEADER = ("series", "x_or_T", "value")
PLAN_HEADER = ("step", "period", "planned", "realized")

FIGURE_DEFAULTS = {
    "fig2": {
        "delta": 0.75, "a": 0.6, "lambda": 2.0, "padded": False,
        "x_l_high": 100.0, "x_s_high": 5.0, "x_l_low": 100.0, "x_s_low": 50.0,
        "t_s_max": 20,
    },
    "fig3a": {
        "delta": 0.75, "a": 0.6, "lambda": 2.0, "padded": False,
        "x_high": 100.0, "x_low": 5.0, "T_min": 1.0, "T_max": 30.0, "T_num": 291,
    },
    "fig3b": {
        "delta": 0.75, "a": 0.6, "lambda": 2.0, "padded": False,
        "T_values": [1, 5], "x_max": 100.0, "grid_n": 1000,
    },
    "fig4a": {"delta": 0.9, "a": 0.6, "lambda": 70.0, "m": 100.0, "T": 4},
    "fig4b": {"delta": 0.9, "a": 0.6, "lambda": 70.0, "m": 100.0, "T": 4},
    "fig5": {
        "delta": 0.9, "a": 0.6, "lambda": 70.0,
        "base": [100.0], "added_reward": 10.0, "max_zeros": 8, "extra_zeros": 0,
    },
}


def _params(cfg):
    return AmdParams(
        cfg["lambda"], UtilitySpec.power(cfg["a"]), DiscountSchedule.exponential(cfg["delta"])
    )


def _fig2(cfg):
    params = _params(cfg)
    rows = []
    for label in ("high", "low"):
        x_l, x_s = cfg[f"x_l_{label}"], cfg[f"x_s_{label}"]
        v_l = params.utility(x_l) / params.lam
        v_s = params.utility(x_s) / params.lam
        for t_s in range(1, check_int("t_s_max", cfg["t_s_max"], minimum=1) + 1):
            t_l = indifference_delay(v_l, v_s, t_s, cfg["delta"], cfg["padded"], params.lam)
            rows.append((label, t_s, t_l))
    return SERIES_HEADER, rows


def _fig3a(cfg):
    params = _params(cfg)
    grid = np.linspace(cfg["T_min"], cfg["T_max"], check_int("T_num", cfg["T_num"], minimum=3))
    rows = []
    for label in ("high", "low"):
        w = discount_curve(cfg[f"x_{label}"], grid, params, cfg["padded"])
        rows.extend((label, float(t), float(v)) for t, v in zip(grid, w))
    return SERIES_HEADER, rows


def _fig3b(cfg):
    params = _params(cfg)
    grid = np.linspace(0.0, cfg["x_max"], check_int("grid_n", cfg["grid_n"], minimum=2) + 1)
    u = params.utility(grid)
    rows = []
    for T in cfg["T_values"]:
        T = check_int("T", T, minimum=1)
        w = _weight_from_v(u / params.lam, T, GKind(cfg["delta"], cfg["padded"]))
        rows.extend((f"T={T}", float(x), float(v)) for x, v in zip(grid, u * w))
    return SERIES_HEADER, rows


def _fig4(cfg, mode):
    trace = dynamic_replan(PlanProblem(cfg["m"], cfg["T"], _params(cfg), mode))
    return PLAN_HEADER, list(trace.rows())


def _fig5(cfg):
    params = _params(cfg)
    base = tuple(float(r) for r in cfg["base"])
    extended = base + (float(cfg["added_reward"]),)
    rows = []
    for k in range(check_int("max_zeros", cfg["max_zeros"], minimum=0) + 1):
        pad = k + check_int("extra_zeros", cfg["extra_zeros"], minimum=0)
        for label, rewards in (("base", base), ("extended", extended)):
            rows.append((label, k, sequence_value(RewardSequence(rewards, pad), params)))
    return SERIES_HEADER, rows


_BUILDERS = {
    "fig2": _fig2,
    "fig3a": _fig3a,
    "fig3b": _fig3b,
    "fig4a": lambda cfg: _fig4(cfg, WITH_LEARNING),
    "fig4b": lambda cfg: _fig4(cfg, WITHOUT_LEARNING),
    "fig5": _fig5,
}


def figure_dataset(figure_id, overrides=None):
    """Rows for ``figure_id``; unknown settings in ``overrides`` raise ``KeyError``."""
    if figure_id not in _BUILDERS:
        raise KeyError(f"unknown figure {figure_id!r}; choose from {sorted(_BUILDERS)}")
    cfg = dict(FIGURE_DEFAULTS[figure_id])
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise KeyError(f"{figure_id} has no setting {key!r}")
        cfg[key] = value
    header, rows = _BUILDERS[figure_id](cfg)
    return cfg, header, rows


def dominance_table(cfg=None):
    """``(k, margin)`` pairs for the dominance figure; positive means violation."""
    cfg = {**FIGURE_DEFAULTS["fig5"], **(cfg or {})}
    params = _params(cfg)
    base = tuple(float(r) for r in cfg["base"])
    out = []
    for k in range(cfg["max_zeros"] + 1):
        seq = RewardSequence(base, k + cfg["extra_zeros"])
        out.append((k, dominance_margin(seq, cfg["added_reward"], params)))
    return out
