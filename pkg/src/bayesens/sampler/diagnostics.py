"""Convergence diagnostics: split R-hat, effective sample size, MCSE.

All functions take a ``(chains, draws)`` array for a single quantity and
return ``None`` where the statistic is undefined (zero variance).
"""
from __future__ import annotations

import math

import numpy as np

from ..numkit import DomainError


def _as_chains(draws) -> np.ndarray:
    x = np.asarray(draws, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DomainError(f"expected a (chains, draws) array, got shape {x.shape}")
    return x


def _split(x: np.ndarray) -> np.ndarray:
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, x.shape[1] - half:]], axis=0)


def split_rhat(draws) -> float | None:
    """Split-chain potential scale reduction factor.

    Computed as ``sqrt(1 + var(split means) / mean(split variances))`` so it is
    exactly 1 when the split-chain means coincide.
    """
    x = _as_chains(draws)
    if x.shape[1] < 4:
        raise DomainError("split_rhat needs at least 4 draws per chain")
    s = _split(x)
    within = s.var(axis=1, ddof=1).mean()
    if not within > 0.0:
        return None
    between = s.mean(axis=1).var(ddof=1)
    return math.sqrt(1.0 + between / within)


def _autocov(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row by FFT."""
    n = x.shape[1]
    centered = x - x.mean(axis=1, keepdims=True)
    size = 2 ** int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(centered, n=size, axis=1)
    acov = np.fft.irfft(f * np.conjugate(f), n=size, axis=1)[:, :n]
    return acov / n


def effective_sample_size(draws) -> float | None:
    """Multi-chain ESS on split chains with Geyer's initial monotone sequence.

    The autocorrelation sum is truncated at the first negative sum of a pair
    of consecutive lags. The result is capped at 1.5 times the draw count.
    """
    x = _as_chains(draws)
    if x.shape[1] < 4:
        raise DomainError("effective_sample_size needs at least 4 draws per chain")
    s = _split(x)
    m, n = s.shape
    acov = _autocov(s)
    chain_var = acov[:, 0] * n / (n - 1.0)
    mean_var = chain_var.mean()
    var_plus = mean_var * (n - 1.0) / n
    if m > 1:
        var_plus += s.mean(axis=1).var(ddof=1)
    if not var_plus > 0.0:
        return None
    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    total = 0.0
    prev = math.inf
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0.0:
            break
        pair = min(pair, prev)
        total += pair
        prev = pair
        t += 2
    tau = -1.0 + 2.0 * total
    tau = max(tau, 1.0 / math.log10(m * n)) if m * n > 10 else max(tau, 1e-3)
    return min(m * n / tau, 1.5 * m * n)


def mcse_mean(draws) -> float | None:
    x = _as_chains(draws)
    ess = effective_sample_size(x)
    if ess is None:
        return None
    return float(x.std(ddof=1) / math.sqrt(ess))


def mcse_quantile(draws, prob: float) -> float | None:
    """MCSE of a quantile from the ESS of the indicator ``draw <= quantile``."""
    x = _as_chains(draws)
    flat = x.ravel()
    q = np.quantile(flat, prob)
    ind = (x <= q).astype(float)
    ess = effective_sample_size(ind)
    if ess is None:
        return None
    half = math.sqrt(prob * (1.0 - prob) / ess)
    lo = np.quantile(flat, max(prob - half, 0.0))
    hi = np.quantile(flat, min(prob + half, 1.0))
    return float((hi - lo) / 2.0)
