"""Softmax exploration over noisy value signals.

Each step picks a source ``t`` with probability proportional to
``d_t * exp(xbar_t / lam)``, observes ``u(s_t) + eps`` with Gaussian noise and
updates a Gaussian belief about the overall value. Sampling frequencies
approach the attention weights as the number of draws grows.

Random numbers
--------------
``SeedSequence(seed).spawn(2)`` yields two child seeds, each driving a
``PCG64`` generator. The first produces ``random(k)`` uniforms used for
inverse-CDF source selection (one per step, warm-up steps included); the
second produces ``standard_normal(k)`` noise draws. Runs with a smaller ``k``
therefore see a prefix of the same streams.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .valuation import AmdParams, _as_sequence, attention_weights
from .validation import check_int, check_positive

__all__ = [
    "SamplerConfig",
    "SamplerState",
    "ExplorationResult",
    "TRACE_HEADER",
    "posterior_update",
    "info_gain",
    "random_streams",
    "run_exploration",
    "exploration_frequencies",
]

TRACE_HEADER = ("step", "source", "signal", "xbar_source", "mu_k", "sigma2_k", "info_gain")
PRECISIONS = ("printed", "standard")


@dataclass(frozen=True)
class SamplerConfig:
    """Belief and simulation settings.

    ``precision="printed"`` scales the signal precision by ``k**2``;
    ``"standard"`` uses the conjugate-Gaussian ``k``. ``lam`` falls back to the
    valuation parameters when left as ``None``.
    """

    prior_sigma: float = 1.0
    noise_sigma: float = 1.0
    total_samples: int = 1000
    seed: int = 0
    lam: float | None = None
    warmup: bool = True
    precision: str = "printed"

    def __post_init__(self):
        object.__setattr__(self, "prior_sigma", check_positive("prior_sigma", self.prior_sigma))
        object.__setattr__(self, "noise_sigma", check_positive("noise_sigma", self.noise_sigma))
        object.__setattr__(self, "total_samples", check_int("total_samples", self.total_samples, minimum=1))
        seed = check_int("seed", self.seed, minimum=0)
        if seed >= 2 ** 64:
            raise DomainError("seed must fit in 64 bits")
        object.__setattr__(self, "seed", seed)
        if self.lam is not None:
            object.__setattr__(self, "lam", check_positive("lambda", self.lam))
        if self.precision not in PRECISIONS:
            raise DomainError(f"precision must be one of {PRECISIONS}")

    @classmethod
    def from_dict(cls, doc):
        keys = ("prior_sigma", "noise_sigma", "total_samples", "seed", "lam", "warmup", "precision")
        return cls(**{k: doc[k] for k in keys if k in doc})

    def to_dict(self):
        return {
            "prior_sigma": self.prior_sigma,
            "noise_sigma": self.noise_sigma,
            "total_samples": self.total_samples,
            "seed": self.seed,
            "lam": self.lam,
            "warmup": self.warmup,
            "precision": self.precision,
        }


def _signal_precision(config, k):
    scale = k * k if config.precision == "printed" else k
    return scale / config.noise_sigma ** 2


def posterior_update(config: SamplerConfig, k, xbar):
    """Posterior mean and variance after ``k`` signals with mean ``xbar``."""
    k = check_int("k", k, minimum=0)
    prior_prec = 1.0 / config.prior_sigma ** 2
    if k == 0:
        return 0.0, config.prior_sigma ** 2
    sig = _signal_precision(config, k)
    return sig / (prior_prec + sig) * float(xbar), 1.0 / (prior_prec + sig)


def info_gain(config: SamplerConfig, k, xbar):
    """KL divergence of the posterior from the prior ``N(0, prior_sigma**2)``."""
    mu, var = posterior_update(config, k, xbar)
    s2 = config.prior_sigma ** 2
    return max((var + mu * mu) / (2.0 * s2) - 0.5 * math.log(var / s2) - 0.5, 0.0)


@dataclass(frozen=True)
class SamplerState:
    counts: np.ndarray
    means: np.ndarray
    xbar: float
    mu_k: float
    sigma2_k: float

    def to_dict(self):
        return {
            "counts": self.counts.tolist(),
            "means": self.means.tolist(),
            "xbar": self.xbar,
            "mu_k": self.mu_k,
            "sigma2_k": self.sigma2_k,
        }


@dataclass(frozen=True)
class ExplorationResult:
    frequencies: np.ndarray
    state: SamplerState
    trace: tuple = field(default=(), repr=False)

    def trace_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in self.trace:
            writer.writerow([row[0], row[1]] + [repr(v) for v in row[2:]])
        return buf.getvalue()


def random_streams(seed, k):
    """Selection uniforms and noise normals for one run."""
    sel, noise = np.random.SeedSequence(seed).spawn(2)
    uniforms = np.random.Generator(np.random.PCG64(sel)).random(k)
    normals = np.random.Generator(np.random.PCG64(noise)).standard_normal(k)
    return uniforms, normals


def _simulate(utils, log_d, lam, noise_sigma, uniforms, normals, warmup, checkpoints, on_step=None):
    """Shared kernel; rows of ``uniforms``/``normals`` are independent runs."""
    runs, k = uniforms.shape
    n = utils.size
    rows = np.arange(runs)
    counts = np.zeros((runs, n), dtype=np.int64)
    sums = np.zeros((runs, n))
    snapshots = {}
    marks = set(checkpoints)
    for i in range(k):
        if warmup and i < n:
            src = np.full(runs, i)
        else:
            means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
            cum = np.cumsum(attention_weights(means, log_d, lam), axis=1)
            src = np.minimum(np.sum(cum <= uniforms[:, i, None], axis=1), n - 1)
        signal = utils[src] + noise_sigma * normals[:, i]
        counts[rows, src] += 1
        sums[rows, src] += signal
        if on_step is not None:
            on_step(i, int(src[0]), float(signal[0]), counts[0], sums[0])
        if i + 1 in marks:
            snapshots[i + 1] = counts.copy()
    return counts, sums, snapshots


def _setup(seq, params: AmdParams, config: SamplerConfig):
    seq = _as_sequence(seq)
    rewards = seq.effective
    utils = np.atleast_1d(params.utility(rewards)).astype(float)
    log_d = params.discounts.log_factors(rewards.size)
    lam = config.lam if config.lam is not None else params.lam
    return utils, log_d, lam


def run_exploration(seq, params: AmdParams, config: SamplerConfig, record_trace=True):
    """Simulate ``config.total_samples`` draws and return frequencies and trace."""
    utils, log_d, lam = _setup(seq, params, config)
    k = config.total_samples
    uniforms, normals = random_streams(config.seed, k)
    trace = []
    total = [0.0]
    belief = [0.0, config.prior_sigma ** 2]

    def on_step(i, src, signal, counts, sums):
        total[0] += signal
        xbar = total[0] / (i + 1)
        mu, var = posterior_update(config, i + 1, xbar)
        belief[:] = [mu, var]
        if record_trace:
            gain = info_gain(config, i + 1, xbar)
            trace.append((i, src, signal, float(sums[src] / counts[src]), mu, var, gain))

    counts, sums, _ = _simulate(
        utils, log_d, lam, config.noise_sigma, uniforms[None, :], normals[None, :],
        config.warmup, (), on_step,
    )
    counts, sums = counts[0], sums[0]
    means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    state = SamplerState(counts, means, total[0] / k, belief[0], belief[1])
    return ExplorationResult(counts / k, state, tuple(trace))


def exploration_frequencies(seq, params: AmdParams, config: SamplerConfig, seeds, checkpoints):
    """Selection frequencies for many seeds at once.

    Returns an array of shape ``(len(seeds), len(checkpoints), n_sources)``;
    row ``r`` at checkpoint ``c`` equals ``run_exploration`` with
    ``seed=seeds[r]`` and ``total_samples=c``.
    """
    utils, log_d, lam = _setup(seq, params, config)
    checkpoints = [check_int("checkpoint", c, minimum=1) for c in checkpoints]
    k = max(checkpoints)
    streams = [random_streams(s, k) for s in seeds]
    uniforms = np.stack([u for u, _ in streams])
    normals = np.stack([z for _, z in streams])
    _, _, snaps = _simulate(utils, log_d, lam, config.noise_sigma, uniforms, normals, config.warmup, checkpoints)
    return np.stack([snaps[c] / c for c in checkpoints], axis=1)
