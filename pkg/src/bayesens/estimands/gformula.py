"""Per-draw g-formula evaluation of the average treatment effect."""
from __future__ import annotations

from typing import Mapping

import numpy as np

from ..numkit import DomainError, QuadratureRule, expit, gauss_hermite_standard_normal

DEFAULT_RULE = gauss_hermite_standard_normal(32)
DEFAULT_TSB_MC = 500


def gformula_binary_l(eta, theta: float) -> float:
    """ATE for a logistic outcome ``expit(eta0 + eta1*l + eta2*a)`` and ``L ~ Bernoulli(theta)``."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    e0, e1, e2 = (float(v) for v in eta)
    return theta * (expit(e0 + e1 + e2) - expit(e0 + e1)) + (1.0 - theta) * (expit(e0 + e2) - expit(e0))


def _expit_vec(x):
    return np.exp(-np.logaddexp(0.0, -x))


def gformula_with_u(eta, xi1: float, theta: float, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """ATE under a latent standard-normal confounder entering the outcome logit as ``xi1*u``.

    Coefficient order follows the latent-U model: ``eta1`` multiplies the
    treatment and ``eta2`` the covariate.
    """
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta!r}")
    e0, e1, e2 = (float(v) for v in eta)
    u = xi1 * rule.nodes
    total = 0.0
    for lv, pl in ((1.0, theta), (0.0, 1.0 - theta)):
        diff = _expit_vec(e0 + e1 + e2 * lv + u) - _expit_vec(e0 + e2 * lv + u)
        total += pl * float(np.dot(rule.weights, diff))
    return total


def tsb_conditional_mean(comp: Mapping, log_nu, a: float, l):
    """``E[Y | A=a, L=l]`` of the mixture, vectorized over ``l``."""
    l = np.asarray(l, dtype=float)[:, None]
    g = comp["gamma0"] + comp["gamma1"] * l
    log_pa = -np.logaddexp(0.0, -g) if a == 1 else -np.logaddexp(0.0, g)
    rl = (l - comp["theta0"]) / comp["phi"]
    logw = log_nu + log_pa - 0.5 * rl * rl - np.log(comp["phi"])
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    mean = comp["eta0"] + comp["eta1"] * l + comp["eta2"] * a
    return np.sum(w * mean, axis=1)


def sample_tsb_covariate(comp: Mapping, nu, n: int, rng) -> np.ndarray:
    """Draws from the mixture covariate marginal ``sum_k nu_k N(theta0_k, phi_k^2)``."""
    k = rng.categorical(nu, size=n)
    return np.asarray(comp["theta0"])[k] + np.asarray(comp["phi"])[k] * rng.normal(size=n)


def gformula_tsb(comp: Mapping, nu, n_mc: int, rng) -> float:
    """Monte Carlo g-formula over the covariate marginal of the mixture.

    ``comp`` maps ``eta0, eta1, eta2, gamma0, gamma1, theta0, phi`` to
    length-K arrays; ``nu`` are the mixture weights.
    """
    if n_mc < 1:
        raise DomainError("n_mc must be at least 1")
    nu = np.asarray(nu, dtype=float)
    if nu.ndim != 1 or np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-9:
        raise DomainError("nu must lie in the simplex")
    if len(nu) == 1:
        return float(np.asarray(comp["eta2"])[0])
    with np.errstate(divide="ignore"):
        log_nu = np.log(nu)
    l = sample_tsb_covariate(comp, nu, n_mc, rng)
    diff = tsb_conditional_mean(comp, log_nu, 1, l) - tsb_conditional_mean(comp, log_nu, 0, l)
    return float(diff.mean())
