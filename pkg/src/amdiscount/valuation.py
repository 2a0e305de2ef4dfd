"""Reward sequences, utility and default-discount specifications, AMD weights.

The attention-modulated discount (AMD) weight of period ``t`` is

    w_t = d_t * exp(u(s_t) / lam) / sum_tau d_tau * exp(u(s_tau) / lam)

and the value of a sequence is the weighted mean ``sum_t w_t * u(s_t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .exceptions import DomainError
from .validation import (
    check_in_interval,
    check_int,
    check_nonnegative_array,
    check_positive,
)

__all__ = [
    "UtilitySpec",
    "DiscountSchedule",
    "AmdParams",
    "RewardSequence",
    "eval_utility",
    "attention_weights",
    "amd_weights",
    "sequence_value",
    "load_document",
]

_POWER = "power"
_LOG1P = "log1p"
_TABLE = "explicit-table"
_FAMILY_ALIASES = {
    "power": _POWER,
    "log1p": _LOG1P,
    "explicit-table": _TABLE,
    "explicit": _TABLE,
    "table": _TABLE,
}


@dataclass(frozen=True)
class UtilitySpec:
    """Instantaneous utility ``u`` with ``u(0) = 0`` and ``u`` strictly increasing.

    Families
    --------
    power
        ``scale * x**a`` with ``a`` in (0, 1].
    log1p
        ``scale * log(1 + x)``.
    explicit-table
        ``scale`` times the piecewise-linear interpolant of ``knots``
        (pairs ``(x, u)``); the first knot must be ``(0, 0)`` and both
        coordinates strictly increasing. Evaluating outside the knot range
        raises :class:`DomainError`.
    """

    family: str = _POWER
    a: float = 0.6
    scale: float = 1.0
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        family = _FAMILY_ALIASES.get(self.family)
        if family is None:
            raise DomainError(f"unknown utility family {self.family!r}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "scale", check_positive("utility scale", self.scale))
        if family == _POWER:
            object.__setattr__(self, "a", check_in_interval("utility exponent a", self.a, 0.0, 1.0))
        if family == _TABLE:
            pts = np.asarray(self.knots, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
                raise DomainError("explicit-table utility needs at least two (x, u) knots")
            if not np.all(np.isfinite(pts)):
                raise DomainError("explicit-table knots must be finite")
            if pts[0, 0] != 0.0 or pts[0, 1] != 0.0:
                raise DomainError("explicit-table utility must start at the knot (0, 0)")
            if np.any(np.diff(pts[:, 0]) <= 0) or np.any(np.diff(pts[:, 1]) <= 0):
                raise DomainError("explicit-table knots must be strictly increasing in x and u")
            object.__setattr__(self, "knots", tuple((float(x), float(u)) for x, u in pts))

    # construction helpers -------------------------------------------------

    @classmethod
    def power(cls, a=0.6, scale=1.0):
        return cls(_POWER, a=a, scale=scale)

    @classmethod
    def log1p(cls, scale=1.0):
        return cls(_LOG1P, scale=scale)

    @classmethod
    def table(cls, knots, scale=1.0):
        return cls(_TABLE, scale=scale, knots=tuple(map(tuple, knots)))

    @classmethod
    def from_dict(cls, doc: Mapping):
        family = doc.get("family", _POWER)
        scale = doc.get("scale", 1.0)
        canonical = _FAMILY_ALIASES.get(family)
        if canonical == _POWER:
            return cls.power(a=doc.get("a", 0.6), scale=scale)
        if canonical == _LOG1P:
            return cls.log1p(scale=scale)
        if canonical == _TABLE:
            return cls.table(doc["knots"], scale=scale)
        raise DomainError(f"unknown utility family {family!r}")

    def to_dict(self):
        doc = {"family": self.family, "scale": self.scale}
        if self.family == _POWER:
            doc["a"] = self.a
        elif self.family == _TABLE:
            doc["knots"] = [list(k) for k in self.knots]
        return doc

    # evaluation -------------------------------------------------------------

    @property
    def _xs(self):
        return np.array([k[0] for k in self.knots])

    @property
    def _us(self):
        return np.array([k[1] for k in self.knots])

    @property
    def x_max(self):
        """Upper end of the domain (``inf`` except for tables)."""
        return self.knots[-1][0] if self.family == _TABLE else math.inf

    def _check_domain(self, x):
        if np.any(np.asarray(x) < 0):
            raise DomainError("utility is only defined for non-negative rewards")
        if self.family == _TABLE and np.any(np.asarray(x) > self.x_max):
            raise DomainError(
                f"reward outside the explicit-table domain [0, {self.x_max}]"
            )

    def __call__(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        if self.family == _POWER:
            out = np.power(x, self.a)
        elif self.family == _LOG1P:
            out = np.log1p(x)
        else:
            out = np.interp(x, self._xs, self._us)
        out = self.scale * out
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        """u'(x). Power utilities with ``a < 1`` diverge at 0 (returns ``inf``).

        Tables return the slope of the segment to the right of ``x``.
        """
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        if self.family == _POWER:
            with np.errstate(divide="ignore"):
                out = self.a * np.power(x, self.a - 1.0)
        elif self.family == _LOG1P:
            out = 1.0 / (1.0 + x)
        else:
            xs, us = self._xs, self._us
            slopes = np.diff(us) / np.diff(xs)
            idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        out = self.scale * out
        return float(out) if np.ndim(out) == 0 else out

    def second_derivative(self, x):
        """u''(x); zero almost everywhere for tables."""
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        if self.family == _POWER:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = self.a * (self.a - 1.0) * np.power(x, self.a - 2.0)
        elif self.family == _LOG1P:
            out = -1.0 / (1.0 + x) ** 2
        else:
            out = np.zeros_like(x)
        out = self.scale * out
        return float(out) if np.ndim(out) == 0 else out

    def inverse(self, y):
        """The reward ``x`` with ``u(x) = y``."""
        y = np.asarray(y, dtype=float) / self.scale
        if np.any(y < 0):
            raise DomainError("utility values are non-negative")
        if self.family == _POWER:
            out = np.power(y, 1.0 / self.a)
        elif self.family == _LOG1P:
            out = np.expm1(y)
        else:
            if np.any(y > self._us[-1]):
                raise DomainError("utility value outside the explicit-table range")
            out = np.interp(y, self._us, self._xs)
        return float(out) if out.ndim == 0 else out

    @property
    def strictly_concave(self):
        if self.family == _POWER:
            return self.a < 1.0
        if self.family == _LOG1P:
            return True
        slopes = np.diff(self._us) / np.diff(self._xs)
        return bool(np.all(np.diff(slopes) < 0))


@dataclass(frozen=True)
class DiscountSchedule:
    """Default discount factors ``d_t`` before attention reallocation."""

    kind: str = "exponential"
    delta: float = 1.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "exponential":
            object.__setattr__(self, "delta", check_in_interval("delta", self.delta, 0.0, 1.0))
        elif self.kind == "uniform":
            object.__setattr__(self, "delta", 1.0)
        elif self.kind == "explicit":
            vals = np.asarray(self.values, dtype=float)
            if vals.ndim != 1 or vals.size == 0:
                raise DomainError("explicit discount schedule needs a non-empty list")
            if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
                raise DomainError("explicit discount factors must be finite and > 0")
            object.__setattr__(self, "values", tuple(float(v) for v in vals))
        else:
            raise DomainError(f"unknown discount schedule kind {self.kind!r}")

    @classmethod
    def exponential(cls, delta):
        return cls("exponential", delta=delta)

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def explicit(cls, values):
        return cls("explicit", values=tuple(values))

    @classmethod
    def from_dict(cls, doc: Mapping):
        kind = doc.get("kind", "exponential")
        if kind == "exponential":
            return cls.exponential(doc["delta"])
        if kind == "uniform":
            return cls.uniform()
        if kind == "explicit":
            return cls.explicit(doc["values"])
        raise DomainError(f"unknown discount schedule kind {kind!r}")

    def to_dict(self):
        if self.kind == "exponential":
            return {"kind": "exponential", "delta": self.delta}
        if self.kind == "uniform":
            return {"kind": "uniform"}
        return {"kind": "explicit", "values": list(self.values)}

    @property
    def is_exponential(self):
        """True for schedules of the form ``delta**t`` (uniform is ``delta = 1``)."""
        return self.kind in ("exponential", "uniform")

    def factors(self, n, start=0):
        """Default factors for periods ``start, ..., start + n - 1``."""
        n = check_int("n", n, minimum=0)
        start = check_int("start", start, minimum=0)
        if self.kind == "explicit":
            if start + n > len(self.values):
                raise DomainError(
                    f"explicit schedule has {len(self.values)} factors, "
                    f"{start + n} periods requested"
                )
            return np.array(self.values[start:start + n])
        t = np.arange(start, start + n, dtype=float)
        return np.power(self.delta, t)

    def log_factors(self, n, start=0):
        if self.kind == "explicit":
            return np.log(self.factors(n, start))
        return np.arange(start, start + n, dtype=float) * math.log(self.delta)


@dataclass(frozen=True)
class AmdParams:
    """Attention cost ``lam`` plus the utility and default-discount specs."""

    lam: float
    utility: UtilitySpec = field(default_factory=UtilitySpec)
    discounts: DiscountSchedule = field(default_factory=DiscountSchedule)

    def __post_init__(self):
        object.__setattr__(self, "lam", check_positive("lambda", self.lam))

    @classmethod
    def from_dict(cls, doc: Mapping):
        utility = UtilitySpec.from_dict(doc.get("utility", {}))
        discounts = DiscountSchedule.from_dict(doc.get("discounts", {"kind": "uniform"}))
        return cls(lam=doc["lambda"], utility=utility, discounts=discounts)

    def to_dict(self):
        return {
            "lambda": self.lam,
            "utility": self.utility.to_dict(),
            "discounts": self.discounts.to_dict(),
        }

    def replace(self, **changes):
        doc = {"lam": self.lam, "utility": self.utility, "discounts": self.discounts}
        doc.update(changes)
        return AmdParams(**doc)


@dataclass(frozen=True)
class RewardSequence:
    """Non-negative rewards, period 0 first, plus trailing zero padding."""

    rewards: tuple[float, ...]
    pad_zeros: int = 0

    def __post_init__(self):
        arr = check_nonnegative_array("rewards", self.rewards, min_len=1)
        object.__setattr__(self, "rewards", tuple(float(r) for r in arr))
        object.__setattr__(self, "pad_zeros", check_int("pad_zeros", self.pad_zeros, minimum=0))

    @property
    def effective(self):
        """Rewards with the padding zeros appended."""
        return np.concatenate([np.asarray(self.rewards), np.zeros(self.pad_zeros)])

    def __len__(self):
        return len(self.rewards) + self.pad_zeros

    @classmethod
    def from_dict(cls, doc: Mapping):
        return cls(tuple(doc["rewards"]), doc.get("pad_zeros", 0))

    def to_dict(self):
        return {"rewards": list(self.rewards), "pad_zeros": self.pad_zeros}


def _as_sequence(seq):
    if isinstance(seq, RewardSequence):
        return seq
    return RewardSequence(tuple(np.atleast_1d(np.asarray(seq, dtype=float))))


def eval_utility(spec: UtilitySpec, x):
    """Evaluate ``u(x)`` for ``x >= 0``."""
    return spec(x)


def attention_weights(utilities, log_defaults, lam):
    """Softmax of ``log d_t + u_t / lam`` with a max shift.

    Works on the last axis, so a batch of utility rows can be weighted at once.
    """
    u = np.asarray(utilities, dtype=float)
    # shift utilities first so equal utilities cancel exactly, then the total
    z = np.asarray(log_defaults, dtype=float) + (u - np.max(u, axis=-1, keepdims=True)) / lam
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def amd_weights(seq, params: AmdParams) -> np.ndarray:
    """AMD weights of every effective period of ``seq``."""
    seq = _as_sequence(seq)
    rewards = seq.effective
    u = params.utility(rewards)
    return attention_weights(u, params.discounts.log_factors(len(rewards)), params.lam)


def sequence_value(seq, params: AmdParams) -> float:
    """Attention-weighted mean utility of ``seq``."""
    seq = _as_sequence(seq)
    u = np.atleast_1d(params.utility(seq.effective))
    w = attention_weights(u, params.discounts.log_factors(len(u)), params.lam)
    return float(w @ u)


def load_document(doc: Mapping):
    """Parse a JSON-style valuation document into ``(RewardSequence, AmdParams)``.

    Expected keys: ``rewards``, ``pad_zeros`` (optional), ``lambda``,
    ``utility`` and ``discounts``.
    """
    return RewardSequence.from_dict(doc), AmdParams.from_dict(doc)

