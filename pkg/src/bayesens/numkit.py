"""Numerical primitives shared by every other module.

Stable special functions, log-density kernels, Gauss-Hermite quadrature
against the standard normal, and a seedable counter-based generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "QuadratureRule",
    "Rng",
    "log_sum_exp",
    "expit",
    "logit",
    "log_expit",
    "log1m_expit",
    "bernoulli_lpmf",
    "bernoulli_logit_lpmf",
    "normal_lpdf",
    "beta_lpdf",
    "gamma_lpdf",
    "half_normal_lpdf",
    "gauss_hermite_standard_normal",
    "derive_seed",
    "digamma",
]

LOG_2PI = math.log(2.0 * math.pi)
LOG_2 = math.log(2.0)


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a function."""


def log_sum_exp(values: Sequence[float]) -> float:
    """Return ``log(sum(exp(values)))`` without overflow.

    Entries may be ``-inf``; an all ``-inf`` input returns ``-inf``.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise DomainError("log_sum_exp of an empty sequence")
    if any(math.isnan(v) for v in vals):
        raise DomainError("log_sum_exp received NaN")
    m = max(vals)
    if m == -math.inf:
        return -math.inf
    if m == math.inf:
        return math.inf
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


def expit(x: float) -> float:
    """Logistic function, evaluated on the branch that cannot overflow."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def logit(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"logit requires p in (0, 1), got {p!r}")
    return math.log(p) - math.log1p(-p)


def log_expit(x: float) -> float:
    """``log(expit(x))`` accurate in both tails."""
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def log1m_expit(x: float) -> float:
    """``log(1 - expit(x))``."""
    return log_expit(-x)


def _check_binary(y, name="y"):
    if y not in (0, 1):
        raise DomainError(f"{name} must be 0 or 1, got {y!r}")


def bernoulli_lpmf(y: int, p: float) -> float:
    _check_binary(y)
    if not 0.0 < p < 1.0:
        raise DomainError(f"bernoulli_lpmf requires p in (0, 1), got {p!r}")
    return math.log(p) if y == 1 else math.log1p(-p)


def bernoulli_logit_lpmf(y: int, x: float) -> float:
    """Bernoulli log mass with success probability ``expit(x)``."""
    _check_binary(y)
    return log_expit(x) if y == 1 else log1m_expit(x)


def normal_lpdf(x: float, mu: float, sigma: float) -> float:
    if not sigma > 0.0:
        raise DomainError(f"normal_lpdf requires sigma > 0, got {sigma!r}")
    z = (x - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - 0.5 * LOG_2PI


def beta_lpdf(x: float, a: float, b: float) -> float:
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"beta_lpdf requires a, b > 0, got {a!r}, {b!r}")
    if not 0.0 < x < 1.0:
        raise DomainError(f"beta_lpdf requires x in (0, 1), got {x!r}")
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - lbeta


def gamma_lpdf(x: float, shape: float, rate: float) -> float:
    """Gamma log density in the shape/rate parameterization."""
    if not (shape > 0.0 and rate > 0.0):
        raise DomainError(f"gamma_lpdf requires shape, rate > 0, got {shape!r}, {rate!r}")
    if not x > 0.0:
        raise DomainError(f"gamma_lpdf requires x > 0, got {x!r}")
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(x) - rate * x


def half_normal_lpdf(x: float, scale: float) -> float:
    if not scale > 0.0:
        raise DomainError(f"half_normal_lpdf requires scale > 0, got {scale!r}")
    if not x >= 0.0:
        raise DomainError(f"half_normal_lpdf requires x >= 0, got {x!r}")
    return LOG_2 + normal_lpdf(x, 0.0, scale)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for expectations under the standard normal."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise DomainError("nodes and weights must have equal length")

    @property
    def order(self) -> int:
        return len(self.nodes)

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Approximate ``E[f(U)]`` for ``U ~ N(0, 1)``; ``f`` must be vectorized."""
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_hermite_standard_normal(order: int) -> QuadratureRule:
    """Gauss-Hermite rule rescaled so that ``sum(w * f(x)) ~ E[f(U)]``.

    Exact for polynomials of degree ``2 * order - 1``.
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 64:
        raise DomainError(f"quadrature order must be an integer in [1, 64], got {order!r}")
    # probabilists' Hermite polynomials carry the exp(-x^2/2) weight directly
    nodes, weights = np.polynomial.hermite_e.hermegauss(int(order))
    weights = weights / weights.sum()
    nodes = np.asarray(nodes, dtype=float)
    if order % 2 == 1:
        nodes[order // 2] = 0.0
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


def derive_seed(seed: int, *ids: int) -> int:
    """Deterministic 64-bit child seed for a ``(seed, *ids)`` path."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(i) for i in ids]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class Rng:
    """Seeded Philox stream.

    Philox is counter based, so streams are bit-identical across platforms for
    a given seed. ``stream(i)`` gives an independent child addressed by an
    integer, which is how per-chain and per-iteration generators are made.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        self.seed = seed
        key = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def stream(self, *ids: int) -> "Rng":
        return Rng(derive_seed(self.seed, *ids))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def bernoulli(self, p, size=None):
        return (self._gen.uniform(size=size if size is not None else np.shape(p)) < p).astype(np.int64)

    def categorical(self, probs, size=None):
        """Draw category indices with probabilities ``probs`` by inversion."""
        cdf = np.cumsum(np.asarray(probs, dtype=float))
        cdf /= cdf[-1]
        u = self._gen.uniform(size=size)
        return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)


def digamma(x: float) -> float:
    """Digamma for ``x > 0`` by upward recurrence and the asymptotic series."""
    if not x > 0.0:
        raise DomainError(f"digamma requires x > 0, got {x!r}")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 / 132))))
    return acc + math.log(x) - 0.5 * inv - series
