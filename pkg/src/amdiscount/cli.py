"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 domain violation,
4 optimizer non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys

import numpy as np

from .anomalies import (
    CheckReport,
    TwoPeriodLottery,
    bracket_check,
    correlation_aversion_lambda,
    dominance_margin,
    hidden_zero_delta,
    lottery_values,
)
from .discount import (
    behavioral_cde,
    common_difference_margin,
    concavity_thresholds,
    discount_curve,
    single_reward_weight,
    value_function_shape,
    _weight_from_v,
    GKind,
)
from .exceptions import AmdError, ConvergenceError
from .figures import figure_dataset
from .planner import PlanProblem, dynamic_replan, optimal_plan
from .sampler import SamplerConfig, run_exploration
from .valuation import (
    AmdParams,
    DiscountSchedule,
    RewardSequence,
    UtilitySpec,
    amd_weights,
    sequence_value,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_CONVERGENCE = 4
MAX_SWEEP_CELLS = 1_000_000


class UsageError(Exception):
    """Bad arguments or a malformed input document."""


# -- output helpers ----------------------------------------------------------------


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value)
    return str(value)


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _json(payload):
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


# -- input helpers -----------------------------------------------------------------


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_overrides(doc, assignments):
    for item in assignments or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {item!r}")
        target = doc
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise UsageError(f"--set path {key!r} crosses a non-object value")
        target[parts[-1]] = _parse_value(raw)
    return doc


def _load_input(path):
    if path is None:
        return {}
    try:
        if path == "-":
            doc = json.load(sys.stdin)
        else:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON input: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("input document must be a JSON object")
    return doc


def _params_from(doc):
    """AmdParams from a document using nested specs or the flat ``a``/``delta`` shortcuts."""
    if "utility" in doc:
        utility = UtilitySpec.from_dict(doc["utility"])
    else:
        utility = UtilitySpec.power(doc.get("a", 0.6))
    if "discounts" in doc:
        discounts = DiscountSchedule.from_dict(doc["discounts"])
    elif "delta" in doc:
        discounts = DiscountSchedule.exponential(doc["delta"])
    else:
        discounts = DiscountSchedule.uniform()
    return AmdParams(doc["lambda"], utility, discounts)


def _delta_from(doc):
    if "delta" in doc:
        return doc["delta"]
    sched = DiscountSchedule.from_dict(doc.get("discounts", {"kind": "uniform"}))
    if not sched.is_exponential:
        raise UsageError("this command needs an exponential or uniform schedule")
    return sched.delta


def _seq_from(doc):
    return RewardSequence(tuple(doc["rewards"]), doc.get("pad_zeros", 0))


# -- commands ------------------------------------------------------------------------
# Each command returns (json_payload, csv_text_or_None).


def cmd_value(doc, args):
    seq, params = _seq_from(doc), _params_from(doc)
    weights = amd_weights(seq, params)
    value = sequence_value(seq, params)
    rows = [(t, w) for t, w in enumerate(weights)]
    return {"value": value, "weights": weights}, _csv(("period", "weight"), rows)


def cmd_weights(doc, args):
    payload, text = cmd_value(doc, args)
    return {"weights": payload["weights"]}, text


def _t_grid(doc, default_max=30.0, default_num=291):
    if "T" in doc and isinstance(doc["T"], list):
        return np.asarray(doc["T"], dtype=float)
    return np.linspace(doc.get("T_min", 1.0), doc.get("T_max", default_max), int(doc.get("T_num", default_num)))


def cmd_discount_curve(doc, args):
    params = _params_from(doc)
    padded = bool(doc.get("padded", False))
    grid = _t_grid(doc)
    w = discount_curve(doc["x"], grid, params, padded)
    report = concavity_thresholds(doc["x"], _delta_from(doc), params.lam, params.utility, padded)
    payload = {"x": doc["x"], "T": grid, "weights": w, "shape": report.to_dict()}
    return payload, _csv(("x_or_T", "value"), zip(grid.tolist(), w.tolist()))


def cmd_shape(doc, args):
    params = _params_from(doc)
    padded = bool(doc.get("padded", False))
    delta = _delta_from(doc)
    if "x_max" in doc:
        report = value_function_shape(
            doc["T"], delta, params.lam, params.utility, doc["x_max"], doc.get("grid_n", 1000), padded
        )
        grid = report.scan_grid
        u = params.utility(grid)
        values = u * _weight_from_v(u / params.lam, int(doc["T"]), GKind(delta, padded))
    else:
        report = concavity_thresholds(doc["x"], delta, params.lam, params.utility, padded)
        grid = _t_grid(doc)
        values = discount_curve(doc["x"], grid, params, padded)
    return report.to_dict(), _csv(("x_or_T", "value"), zip(grid.tolist(), values.tolist()))


def cmd_cde(doc, args):
    v_l, v_s, t_s = doc["v_l"], doc["v_s"], doc["t_s"]
    delta = _delta_from(doc)
    padded = bool(doc.get("padded", False))
    details = {}
    outcome = behavioral_cde(v_l, v_s, t_s, delta, doc.get("lambda", 1.0), doc.get("dt", 1), padded)
    details["behavioral"] = outcome.holds
    details["t_l_indifference"] = outcome.t_l
    t_l = doc.get("t_l", outcome.t_l)
    margin = common_difference_margin(v_l, v_s, t_l, t_s, delta, padded)
    details.update(t_l=t_l, margin=margin if math.isfinite(margin) else "inf", predicate=margin > 0)
    report = CheckReport("common-difference", margin > 0, details)
    return report.to_dict(), None


def cmd_hidden_zero(doc, args):
    params = _params_from(doc)
    delta = hidden_zero_delta(doc["x"], doc.get("extra_periods", 1), params)
    report = CheckReport("hidden-zero", delta > 0, {"delta": delta})
    return report.to_dict(), None


def cmd_dominance(doc, args):
    params = _params_from(doc)
    margin = dominance_margin(_seq_from(doc), doc["added_reward"], params)
    report = CheckReport("dominance-violation", margin > 0, {"value_drop": margin})
    return report.to_dict(), None


def cmd_lottery(doc, args):
    params = _params_from(doc)
    lot = TwoPeriodLottery.from_dict(doc.get("lottery", doc))
    l1, l2 = lottery_values(lot, params)
    details = {
        "U_L1": l1,
        "U_L2": l2,
        "lambda_star": correlation_aversion_lambda(lot, params.utility, params.discounts),
        "lambda_star_xl": correlation_aversion_lambda(lot, params.utility, params.discounts, "xl"),
    }
    return CheckReport("correlation-aversion", l1 < l2, details).to_dict(), None


def cmd_bracket(doc, args):
    return bracket_check(_seq_from(doc), _params_from(doc)).to_dict(), None


def _plan_problem(doc):
    return PlanProblem(doc["m"], doc["T"], _params_from(doc), doc.get("learning_mode", "without-learning"))


def cmd_plan(doc, args):
    result = optimal_plan(_plan_problem(doc))
    rows = [(0, t, s, "") for t, s in enumerate(result.allocation.tolist())]
    return result.to_dict(), _csv(("step", "period", "planned", "realized"), rows)


def cmd_replan(doc, args):
    trace = dynamic_replan(_plan_problem(doc))
    return trace.to_dict(), trace.to_csv()


def cmd_sample(doc, args):
    seq, params = _seq_from(doc), _params_from(doc)
    cfg_doc = dict(doc.get("sampler", {}))
    if args.seed is not None:
        cfg_doc["seed"] = args.seed
    elif "seed" not in cfg_doc:
        if "seed" not in doc:
            raise UsageError("sampling needs an explicit seed (--seed or sampler.seed)")
        cfg_doc["seed"] = doc["seed"]
    config = SamplerConfig.from_dict(cfg_doc)
    result = run_exploration(seq, params, config, record_trace=args.format == "csv")
    weights = amd_weights(seq, params)
    payload = {
        "frequencies": result.frequencies,
        "weights": weights,
        "linf_gap": float(np.max(np.abs(result.frequencies - weights))),
        "state": result.state.to_dict(),
        "config": config.to_dict(),
    }
    return payload, result.trace_csv() if args.format == "csv" else None


def cmd_figure(doc, args):
    overrides = {k: v for k, v in doc.items()}
    try:
        cfg, header, rows = figure_dataset(args.figure_id, overrides)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    payload = {"figure": args.figure_id, "settings": cfg, "rows": [dict(zip(header, r)) for r in rows]}
    return payload, _csv(header, rows)


# -- sweep ---------------------------------------------------------------------------


def _sweep_value(p):
    return {"value": sequence_value(_seq_from(p), _params_from(p))}


def _sweep_weight(p):
    return {"weight": single_reward_weight(p["x"], p["T"], _params_from(p), bool(p.get("padded", False)))}


def _v_pair(p):
    v_s = p["v_s"]
    v_l = p["v_l"] if "v_l" in p else v_s + p["v_gap"]
    return v_l, v_s


def _sweep_cde_predicate(p):
    v_l, v_s = _v_pair(p)
    margin = common_difference_margin(v_l, v_s, p["t_l"], p["t_s"], p["delta"], bool(p.get("padded", False)))
    return {"holds": margin > 0, "margin": margin}


def _sweep_cde_behavioral(p):
    v_l, v_s = _v_pair(p)
    out = behavioral_cde(v_l, v_s, p["t_s"], p["delta"], p.get("lambda", 1.0), p.get("dt", 1),
                         bool(p.get("padded", False)))
    return {"holds": out.holds, "t_l": out.t_l}


def _sweep_hidden_zero(p):
    return {"delta": hidden_zero_delta(p["x"], p.get("extra_periods", 1), _params_from(p))}


def _sweep_dominance(p):
    margin = dominance_margin(_seq_from(p), p["added_reward"], _params_from(p))
    return {"violation": margin > 0, "value_drop": margin}


def _sweep_lottery(p):
    params = _params_from(p)
    l1, l2 = lottery_values(TwoPeriodLottery.from_dict(p), params)
    return {"U_L1": l1, "U_L2": l2, "averse": l1 < l2}


def _sweep_sample_gap(p):
    seq, params = _seq_from(p), _params_from(p)
    keys = ("prior_sigma", "noise_sigma", "total_samples", "seed", "warmup", "precision")
    config = SamplerConfig.from_dict({k: p[k] for k in keys if k in p})
    result = run_exploration(seq, params, config, record_trace=False)
    return {"linf_gap": float(np.max(np.abs(result.frequencies - amd_weights(seq, params))))}


SWEEP_OPERATIONS = {
    "value": (_sweep_value, ("value",)),
    "single-reward-weight": (_sweep_weight, ("weight",)),
    "cde-predicate": (_sweep_cde_predicate, ("holds", "margin")),
    "cde-behavioral": (_sweep_cde_behavioral, ("holds", "t_l")),
    "hidden-zero": (_sweep_hidden_zero, ("delta",)),
    "dominance": (_sweep_dominance, ("violation", "value_drop")),
    "lottery": (_sweep_lottery, ("U_L1", "U_L2", "averse")),
    "sample-gap": (_sweep_sample_gap, ("linf_gap",)),
}


def cmd_sweep(doc, args):
    op = doc.get("operation")
    if op not in SWEEP_OPERATIONS:
        raise UsageError(f"sweep operation must be one of {sorted(SWEEP_OPERATIONS)}")
    func, outputs = SWEEP_OPERATIONS[op]
    grid = doc.get("grid", {})
    if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
        raise UsageError("sweep grid must map names to lists of values")
    dims = sorted(grid)
    cells = math.prod(len(grid[d]) for d in dims) if dims else 0
    if cells > MAX_SWEEP_CELLS:
        raise UsageError(f"sweep grid has {cells} cells; the limit is {MAX_SWEEP_CELLS}")
    fixed = doc.get("fixed", {})
    if args.seed is not None:
        fixed = {**fixed, "seed": args.seed}
    rows = []
    if cells:
        for combo in itertools.product(*(grid[d] for d in dims)):
            cell = {**fixed, **dict(zip(dims, combo))}
            result = func(cell)
            rows.append(tuple(combo) + tuple(result[k] for k in outputs))
    header = tuple(dims) + outputs
    payload = {"operation": op, "rows": [dict(zip(header, r)) for r in rows]}
    return payload, _csv(header, rows)


COMMANDS = {
    "value": (cmd_value, "value and weights of a reward sequence"),
    "weights": (cmd_weights, "attention weights of a reward sequence"),
    "discount-curve": (cmd_discount_curve, "single-reward discount curve over T"),
    "shape": (cmd_shape, "shape report for the discount or value function"),
    "cde": (cmd_cde, "common difference effect check"),
    "hidden-zero": (cmd_hidden_zero, "value lost by spelling out trailing zeros"),
    "dominance": (cmd_dominance, "whether appending a reward lowers the value"),
    "lottery": (cmd_lottery, "correlated versus anti-correlated lottery values"),
    "bracket": (cmd_bracket, "weight-ratio and betweenness checks"),
    "plan": (cmd_plan, "optimal allocation of a budget"),
    "replan": (cmd_replan, "step-by-step replanning trace"),
    "sample": (cmd_sample, "softmax exploration simulation"),
    "figure": (cmd_figure, "dataset for a standard figure"),
    "sweep": (cmd_sweep, "evaluate an operation over a parameter grid"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="JSON input document ('-' for stdin)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--seed", type=int, default=None, help="64-bit unsigned seed")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a document field (dotted keys allowed)")
    parser = argparse.ArgumentParser(prog="amdiscount", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "figure":
            p.add_argument("figure_id", help="fig2, fig3a, fig3b, fig4a, fig4b or fig5")
    return parser


def _default_format(command):
    return "csv" if command in ("figure", "sweep") else "json"


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    if args.format is None:
        args.format = _default_format(args.command)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=stderr)
        return EXIT_USAGE
    func = COMMANDS[args.command][0]
    try:
        doc = _apply_overrides(_load_input(args.input), args.set)
        payload, text = func(doc, args)
        if args.format == "csv":
            if text is None:
                raise UsageError(f"{args.command} has no CSV form; use --format json")
            output = text
        else:
            output = _json(payload)
    except UsageError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONVERGENCE
    except AmdError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_DOMAIN
    except KeyError as exc:
        print(f"error: missing input field {exc}", file=stderr)
        return EXIT_USAGE
    except (TypeError, ValueError) as exc:
        print(f"error: invalid input: {exc}", file=stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(output)
    else:
        stdout.write(output)
    return EXIT_OK


def main(argv=None):
    try:
        code = run(argv)
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
