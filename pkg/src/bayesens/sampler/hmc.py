"""Adaptive Hamiltonian Monte Carlo with a diagonal metric.

Each iteration integrates a leapfrog trajectory whose step count is drawn
uniformly from ``1..L`` with ``L * step_size ~ integration_time``. Warmup adapts
the step size by dual averaging throughout and estimates the diagonal metric
from the second half of warmup.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..numkit import Rng

log = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = 1000.0


class SamplingError(RuntimeError):
    pass


class InitializationError(SamplingError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 1000
    iterations: int = 1000
    target_accept: float = 0.8
    max_leapfrog: int = 1024
    seed: int = 0
    integration_time: float = 3.0
    threads: int = 1
    init_radius: float = 2.0

    def __post_init__(self):
        if self.chains < 1 or self.iterations < 1 or self.warmup < 0 or self.max_leapfrog < 1:
            raise ConfigurationError("chains, iterations and max_leapfrog must be positive; warmup non-negative")
        if not 0.0 < self.target_accept < 1.0:
            raise ConfigurationError(f"target_accept must lie in (0, 1), got {self.target_accept}")
        if not self.integration_time > 0.0:
            raise ConfigurationError("integration_time must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")


@dataclass
class DrawsMatrix:
    """Post-warmup draws, shape ``(chains, iterations, quantities)``."""

    names: list[str]
    draws: np.ndarray
    divergent: np.ndarray
    accept_stat: np.ndarray
    n_leapfrog: np.ndarray
    step_size: np.ndarray
    inv_metric: np.ndarray
    warmup: int
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def chains(self) -> int:
        return self.draws.shape[0]

    @property
    def iterations(self) -> int:
        return self.draws.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def get(self, name: str) -> np.ndarray:
        """``(chains, iterations)`` draws of one quantity."""
        return self.draws[:, :, self.index(name)]

    def merged(self, name: str) -> np.ndarray:
        return self.get(name).ravel()

    @property
    def divergences(self) -> int:
        return int(self.divergent.sum())

    def __eq__(self, other):
        if not isinstance(other, DrawsMatrix):
            return NotImplemented
        return (
            self.names == other.names
            and np.array_equal(self.draws, other.draws)
            and np.array_equal(self.divergent, other.divergent)
            and np.array_equal(self.step_size, other.step_size)
        )


class DualAveraging:
    """Nesterov dual averaging of log step size toward a target acceptance."""

    def __init__(self, step_size, target, gamma=0.05, t0=10.0, kappa=0.75):
        self.mu = math.log(10.0 * step_size)
        self.target = target
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.t = 0
        self.hbar = 0.0
        self.log_step = math.log(step_size)
        self.log_step_bar = 0.0

    def update(self, accept_prob: float) -> float:
        self.t += 1
        eta = 1.0 / (self.t + self.t0)
        self.hbar = (1.0 - eta) * self.hbar + eta * (self.target - accept_prob)
        self.log_step = self.mu - math.sqrt(self.t) / self.gamma * self.hbar
        w = self.t ** (-self.kappa)
        self.log_step_bar = w * self.log_step + (1.0 - w) * self.log_step_bar
        return math.exp(self.log_step)

    @property
    def final_step(self) -> float:
        return math.exp(self.log_step_bar)


def _safe_logp_grad(model, q):
    try:
        lp, g = model.logp_grad(q)
    except (ValueError, ArithmeticError):
        return -math.inf, None
    if not math.isfinite(lp) or not np.all(np.isfinite(g)):
        return -math.inf, None
    return lp, g


def _leapfrog(model, q, p, g, eps, inv_metric, n_steps, h0):
    """Integrate ``n_steps``; returns the end state or ``None`` on divergence."""
    p = p + 0.5 * eps * g
    lp = -math.inf
    for step in range(n_steps):
        q = q + eps * inv_metric * p
        lp, g = _safe_logp_grad(model, q)
        if g is None:
            return None
        if step + 1 < n_steps:
            p = p + eps * g
            # early exit once the energy error is already past the threshold
            h = -lp + 0.5 * np.dot(p * inv_metric, p)
            if h - h0 > DIVERGENCE_THRESHOLD:
                return None
    p = p + 0.5 * eps * g
    return q, p, lp, g


def _transition(model, state, eps, inv_metric, n_steps, rng):
    q, lp, g = state
    p = rng.normal(size=q.shape) / np.sqrt(inv_metric)
    h0 = -lp + 0.5 * np.dot(p * inv_metric, p)
    out = _leapfrog(model, q, p, g, eps, inv_metric, n_steps, h0)
    if out is None:
        return state, 0.0, True
    q1, p1, lp1, g1 = out
    h1 = -lp1 + 0.5 * np.dot(p1 * inv_metric, p1)
    dh = h1 - h0
    if not math.isfinite(dh) or dh > DIVERGENCE_THRESHOLD:
        return state, 0.0, True
    accept = 1.0 if dh <= 0.0 else math.exp(-dh)
    if rng.uniform() < accept:
        return (q1, lp1, g1), accept, False
    return state, accept, False


def _initial_step(model, state, inv_metric, rng):
    """Double or halve a single-step size until acceptance crosses 1/2."""
    eps = 1.0
    q, lp, g = state
    p = rng.normal(size=q.shape) / np.sqrt(inv_metric)
    h0 = -lp + 0.5 * np.dot(p * inv_metric, p)

    def log_ratio(e):
        out = _leapfrog(model, q, p, g, e, inv_metric, 1, h0)
        if out is None:
            return -math.inf
        _, p1, lp1, _ = out
        return h0 - (-lp1 + 0.5 * np.dot(p1 * inv_metric, p1))

    r = log_ratio(eps)
    direction = 1.0 if r > -math.log(2.0) else -1.0
    for _ in range(60):
        if not direction * (r + math.log(2.0)) > 0.0:
            break
        eps *= 2.0 ** direction
        r = log_ratio(eps)
    return eps


def _initialize(model, config, rng):
    for _ in range(100):
        if hasattr(model, "initial_point"):
            q = np.asarray(model.initial_point(rng, config.init_radius), dtype=float)
        else:
            q = rng.uniform(-config.init_radius, config.init_radius, size=model.dim)
        lp, g = _safe_logp_grad(model, q)
        if g is not None:
            return q, lp, g
    raise InitializationError(f"{getattr(model, 'name', 'model')}: non-finite log density at 100 initial points")


def _n_steps_cap(eps, config):
    return max(1, int(math.ceil(config.integration_time / eps)))


def run_chain(model, config: SamplerConfig, chain: int):
    """Run one chain; returns a dict of per-iteration arrays."""
    rng = Rng(config.seed).stream(chain).generator
    state = _initialize(model, config, rng)
    dim = state[0].shape[0]
    inv_metric = np.ones(dim)
    eps = _initial_step(model, state, inv_metric, rng)
    adapter = DualAveraging(eps, config.target_accept)

    w = config.warmup
    win_start = w // 2
    win_end = w - max(1, w // 10)
    use_metric = w >= 20 and win_end - win_start >= 10
    mean = np.zeros(dim)
    m2 = np.zeros(dim)
    count = 0

    n_names = len(model.flat_names)
    draws = np.empty((config.iterations, n_names))
    raw = np.empty((config.iterations, dim))
    accept_stat = np.empty(config.iterations)
    divergent = np.zeros(config.iterations, dtype=bool)
    n_leap = np.empty(config.iterations, dtype=np.int64)

    for it in range(w + config.iterations):
        cap = _n_steps_cap(eps, config)
        if it >= w and cap > config.max_leapfrog:
            raise ConfigurationError(
                f"adapted step size {eps:.3g} needs {cap} leapfrog steps, above max_leapfrog={config.max_leapfrog}"
            )
        n_steps = int(rng.integers(1, min(cap, config.max_leapfrog) + 1))
        state, acc, div = _transition(model, state, eps, inv_metric, n_steps, rng)

        if it < w:
            eps = adapter.update(acc)
            if use_metric and win_start <= it < win_end:
                count += 1
                delta = state[0] - mean
                mean += delta / count
                m2 += delta * (state[0] - mean)
            if use_metric and it == win_end - 1:
                var = m2 / (count - 1)
                inv_metric = (count / (count + 5.0)) * var + 1e-3 * (5.0 / (count + 5.0))
                eps = _initial_step(model, state, inv_metric, rng)
                adapter = DualAveraging(eps, config.target_accept)
            if it == w - 1:
                eps = adapter.final_step
            continue

        k = it - w
        raw[k] = state[0]
        draws[k] = model.constrain_flat(state[0])
        accept_stat[k] = acc
        divergent[k] = div
        n_leap[k] = n_steps

    return {
        "draws": draws,
        "raw": raw,
        "accept_stat": accept_stat,
        "divergent": divergent,
        "n_leapfrog": n_leap,
        "step_size": eps,
        "inv_metric": inv_metric,
    }


def _generated(model, raw, seed, chain):
    names = list(getattr(model, "generated_names", []))
    if not names:
        return names, np.empty((raw.shape[0], 0))
    base = Rng(seed).stream(0x6751, chain)
    out = np.empty((raw.shape[0], len(names)))
    for k in range(raw.shape[0]):
        values = model.generated(raw[k], base.stream(k))
        out[k] = [values[n] for n in names]
    return names, out


def _chain_job(args):
    model, config, chain = args
    res = run_chain(model, config, chain)
    gnames, gq = _generated(model, res["raw"], config.seed, chain)
    res["gq"] = gq
    res["gnames"] = gnames
    return res


def hmc_sample(model, config: SamplerConfig | None = None) -> DrawsMatrix:
    """Sample ``model`` and evaluate its generated quantities per draw.

    ``model`` must provide ``dim``, ``logp_grad(q)``, ``flat_names`` and
    ``constrain_flat(q)``; ``initial_point``, ``generated`` and
    ``generated_names`` are optional.
    """
    config = config or SamplerConfig()
    jobs = [(model, config, c) for c in range(config.chains)]
    if config.threads > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=min(config.threads, config.chains)) as pool:
            results = list(pool.map(_chain_job, jobs))
    else:
        results = [_chain_job(j) for j in jobs]

    names = list(model.flat_names) + results[0]["gnames"]
    draws = np.stack([np.concatenate([r["draws"], r["gq"]], axis=1) for r in results])
    dm = DrawsMatrix(
        names=names,
        draws=draws,
        divergent=np.stack([r["divergent"] for r in results]),
        accept_stat=np.stack([r["accept_stat"] for r in results]),
        n_leapfrog=np.stack([r["n_leapfrog"] for r in results]),
        step_size=np.array([r["step_size"] for r in results]),
        inv_metric=np.stack([r["inv_metric"] for r in results]),
        warmup=config.warmup,
        seed=int(config.seed),
    )
    if dm.divergences:
        log.warning("%s: %d divergent transitions", getattr(model, "name", "model"), dm.divergences)
    return dm
