"""Posterior summaries and the single-fit driver."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..numkit import DomainError
from ..sampler import DrawsMatrix, SamplerConfig, effective_sample_size, hmc_sample, split_rhat

QUANTILE_PROBS = (0.025, 0.5, 0.975)


@dataclass(frozen=True)
class EstimandSummary:
    """Posterior summary of one quantity; ``ess``, ``rhat`` and ``mcse`` are
    ``None`` where undefined (for example a constant quantity)."""

    mean: float
    sd: float
    mcse: float | None
    q025: float
    q50: float
    q975: float
    ess: float | None
    rhat: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def quantile7(x, prob: float) -> float:
    """Linear interpolation between order statistics (Hyndman-Fan type 7)."""
    return float(np.quantile(np.asarray(x, dtype=float), prob, method="linear"))


def summarize(draws) -> EstimandSummary:
    """Summarize a ``(chains, draws)`` array, or a flat array taken as one chain.

    Raises
    ------
    DomainError
        If fewer than four draws are supplied.
    """
    x = np.asarray(draws, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.size < 4:
        raise DomainError(f"need at least 4 draws to summarize, got {x.size}")
    flat = x.ravel()
    mean = float(np.mean(flat))
    sd = float(np.std(flat, ddof=1))
    ess = effective_sample_size(x)
    rhat = split_rhat(x) if x.shape[1] >= 4 else None
    mcse = sd / math.sqrt(ess) if ess else None
    q = [quantile7(flat, p) for p in QUANTILE_PROBS]
    return EstimandSummary(mean=mean, sd=sd, mcse=mcse, q025=q[0], q50=q[1], q975=q[2], ess=ess, rhat=rhat)


def combined_mcse(*summaries: EstimandSummary) -> float:
    """Root-sum-square of the MCSEs; undefined entries count as zero."""
    return math.sqrt(sum((s.mcse or 0.0) ** 2 for s in summaries))


@dataclass
class FitResult:
    """Draws of one fit plus per-quantity summaries (``ATE`` first)."""

    model: object
    draws: DrawsMatrix
    summaries: dict

    @property
    def ate(self) -> EstimandSummary:
        return self.summaries["ATE"]

    @property
    def divergences(self) -> int:
        return self.draws.divergences

    @property
    def max_rhat(self) -> float | None:
        vals = [s.rhat for s in self.summaries.values() if s.rhat is not None]
        return max(vals) if vals else None

    @property
    def min_ess(self) -> float | None:
        vals = [s.ess for s in self.summaries.values() if s.ess is not None]
        return min(vals) if vals else None


def fit(model, config: SamplerConfig | None = None) -> FitResult:
    """Sample ``model`` and summarize every parameter and generated quantity."""
    draws = hmc_sample(model, config or SamplerConfig())
    order = [n for n in draws.names if n in getattr(model, "generated_names", ())]
    order += [n for n in draws.names if n not in order]
    return FitResult(model=model, draws=draws, summaries={n: summarize(draws.get(n)) for n in order})
