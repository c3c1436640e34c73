"""Seeded synthetic datasets with oracle treatment effects.

Every generator returns ``(Dataset, true_ate)``. The true effect is always
computed from the generating parameters, never from the sample. Default
parameter values are artifact choices; they are stamped into the dataset
``meta`` for provenance.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, ValidationError
from .estimands.gformula import DEFAULT_RULE, gformula_binary_l, gformula_with_u
from .numkit import DomainError, Rng

DEFAULTS = {
    "complete": {
        "n": 500,
        "eta": [-0.5, 0.8, 0.7],
        "gamma": [0.2, -0.6],
        "theta": 0.4,
    },
    "misclassification": {
        "n": 500,
        "eta": [-0.5, 0.8, 0.7],
        "gamma": [0.2, -0.6],
        "theta": 0.4,
        "xi1": 0.9,
        "xi2": 0.1,
    },
    "unmeasured": {
        # eta1 multiplies a, eta2 multiplies l
        "n": 300,
        "eta": [-0.2, 0.0, 0.5],
        "gamma": [0.0, 0.4],
        "theta": 0.5,
        "xi1": -1.0,
        "xi2": 1.0,
    },
    "mnar-binary": {
        "n": 1000,
        "eta": [-0.5, 0.8, 0.7],
        "gamma": [0.2, -0.6],
        "theta": 0.4,
        # expit(2.53) ~ 0.926: roughly 74 of 1000 outcomes observed
        "xi0": 2.53,
        "xi1": 0.0,
        "xi2": 0.0,
        "xi3": 0.0,
    },
    "mnar-continuous": {
        "n": 200,
        "weights": [0.6, 0.4],
        "eta0": [0.5, 1.5],
        "eta1": [1.0, -0.5],
        "eta2": [1.0, 2.0],
        "sigma": [0.7, 1.0],
        "gamma0": [-0.3, 0.5],
        "gamma1": [0.8, -0.4],
        "theta0": [-0.5, 1.0],
        "phi": [0.8, 0.6],
        "xi0": -1.0,
        "xi1": 0.3,
        "xi2": 0.0,
        "xi3": -1.0,
    },
}

FAMILIES = tuple(DEFAULTS)
_PROBABILITIES = {
    "complete": ("theta",),
    "misclassification": ("theta", "xi1", "xi2"),
    "unmeasured": ("theta",),
    "mnar-binary": ("theta",),
}
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class DgpSpec:
    """Family tag, generating parameters, sample size and seed."""

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in DEFAULTS:
            raise ValidationError(f"unknown DGP family {self.family!r}; choose from {list(FAMILIES)}")
        unknown = set(self.params) - set(DEFAULTS[self.family])
        if unknown:
            raise ValidationError(f"{self.family} DGP has no parameter(s) {sorted(unknown)}")
        merged = copy.deepcopy(DEFAULTS[self.family])
        merged.update(copy.deepcopy(self.params))
        object.__setattr__(self, "params", merged)
        n = merged["n"]
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise DomainError(f"n must be a positive integer, got {n!r}")
        merged["n"] = int(n)
        for key in _PROBABILITIES.get(self.family, ()):
            if not 0.0 < merged[key] < 1.0:
                raise DomainError(f"{key} must lie in (0, 1), got {merged[key]!r}")
        if self.family == "mnar-continuous":
            w = np.asarray(merged["weights"], dtype=float)
            if w.ndim != 1 or len(w) < 1 or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
                raise DomainError("mixture weights must be positive and sum to 1")
            for k in ("eta0", "eta1", "eta2", "sigma", "gamma0", "gamma1", "theta0", "phi"):
                if len(merged[k]) != len(w):
                    raise DomainError(f"{k} needs one entry per mixture component")
            if min(merged["sigma"]) <= 0 or min(merged["phi"]) <= 0:
                raise DomainError("sigma and phi must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    @property
    def n(self) -> int:
        return self.params["n"]

    def describe(self) -> dict:
        return {"family": self.family, "seed": int(self.seed), "params": self.params}


def _spec(spec, family):
    if spec is None:
        return DgpSpec(family)
    if spec.family != family:
        raise ValidationError(f"expected a {family!r} DGP spec, got {spec.family!r}")
    return spec


def _stamp(spec, true_ate):
    return {"dgp": spec.describe(), "true_ate": float(true_ate)}


def _binary_core(p, n, rng: Rng):
    """``l``, ``a``, ``y`` for the binary-covariate families (``eta1`` on ``l``)."""
    eta, gamma = p["eta"], p["gamma"]
    l = rng.bernoulli(p["theta"], size=n).astype(float)
    a = rng.bernoulli(expit_vec(gamma[0] + gamma[1] * l)).astype(float)
    y = rng.bernoulli(expit_vec(eta[0] + eta[1] * l + eta[2] * a)).astype(float)
    return y, a, l


def expit_vec(x):
    return np.exp(-np.logaddexp(0.0, -np.asarray(x, dtype=float)))


def gen_complete(spec: DgpSpec | None = None):
    """Binary covariate, treatment and outcome with no missingness."""
    spec = _spec(spec, "complete")
    p = spec.params
    y, a, l = _binary_core(p, spec.n, Rng(spec.seed).stream(0))
    ate = gformula_binary_l(p["eta"], p["theta"])
    return Dataset.complete(y, a, l, meta=_stamp(spec, ate)), ate


def gen_misclassified(spec: DgpSpec | None = None):
    """As :func:`gen_complete`, then the recorded treatment is flipped with
    ``P(a~=1 | a=1) = xi1`` and ``P(a~=1 | a=0) = xi2``."""
    spec = _spec(spec, "misclassification")
    p = spec.params
    y, a, l = _binary_core(p, spec.n, Rng(spec.seed).stream(0))
    at = Rng(spec.seed).stream(1).bernoulli(np.where(a == 1, p["xi1"], p["xi2"])).astype(float)
    ate = gformula_binary_l(p["eta"], p["theta"])
    meta = _stamp(spec, ate)
    meta["true_a"] = a.tolist()
    return Dataset.complete(y, at, l, meta=meta), ate


def gen_unmeasured(spec: DgpSpec | None = None):
    """Latent ``u ~ N(0, 1)`` independent of ``l`` confounds treatment and
    outcome; ``u`` is not returned. Here ``eta1`` multiplies ``a``."""
    spec = _spec(spec, "unmeasured")
    p = spec.params
    n = spec.n
    eta, gamma = p["eta"], p["gamma"]
    rng = Rng(spec.seed).stream(0)
    l = rng.bernoulli(p["theta"], size=n).astype(float)
    u = Rng(spec.seed).stream(2).normal(size=n)
    a = rng.bernoulli(expit_vec(gamma[0] + gamma[1] * l + p["xi2"] * u)).astype(float)
    y = rng.bernoulli(expit_vec(eta[0] + eta[1] * a + eta[2] * l + p["xi1"] * u)).astype(float)
    ate = gformula_with_u(eta, p["xi1"], p["theta"], DEFAULT_RULE)
    return Dataset.complete(y, a, l, meta=_stamp(spec, ate)), ate


def _mask(y, a, p, rng):
    m = p["xi0"] + p["xi1"] * a + p["xi2"] * y + p["xi3"] * a * y
    delta = rng.bernoulli(expit_vec(m)).astype(float)
    return np.where(delta == 1, np.nan, y), delta


def gen_mnar_binary(spec: DgpSpec | None = None):
    """Complete binary data, then outcomes masked with
    ``P(delta=1) = expit(xi0 + xi1*a + xi2*y + xi3*a*y)``."""
    spec = _spec(spec, "mnar-binary")
    p = spec.params
    y, a, l = _binary_core(p, spec.n, Rng(spec.seed).stream(0))
    ym, delta = _mask(y, a, p, Rng(spec.seed).stream(1))
    ate = gformula_binary_l(p["eta"], p["theta"])
    meta = _stamp(spec, ate)
    meta["full_y"] = y.tolist()
    return Dataset(y=ym, a=a, l=l, delta=delta, meta=meta), ate


def mixture_ate_grid(p, points: int = 20001, width: float = 12.0) -> float:
    """G-formula effect of a mixture DGP by trapezoid integration over ``l``."""
    w = np.asarray(p["weights"], dtype=float)
    theta0 = np.asarray(p["theta0"], dtype=float)
    phi = np.asarray(p["phi"], dtype=float)
    grid = np.linspace(np.min(theta0 - width * phi), np.max(theta0 + width * phi), points)
    lc = grid[:, None]
    dens = w * np.exp(-0.5 * ((lc - theta0) / phi) ** 2) / (phi * np.sqrt(2.0 * np.pi))
    pa1 = expit_vec(np.asarray(p["gamma0"]) + np.asarray(p["gamma1"]) * lc)
    mean = np.asarray(p["eta0"]) + np.asarray(p["eta1"]) * lc
    eta2 = np.asarray(p["eta2"], dtype=float)
    w1 = dens * pa1
    w0 = dens * (1.0 - pa1)
    m1 = np.sum(w1 * (mean + eta2), axis=1) / np.sum(w1, axis=1)
    m0 = np.sum(w0 * mean, axis=1) / np.sum(w0, axis=1)
    return float(_trapezoid((m1 - m0) * dens.sum(axis=1), grid))


def gen_mnar_continuous(spec: DgpSpec | None = None):
    """Mixture of linear-Gaussian components over ``(y, a, l)`` with outcomes
    masked not at random."""
    spec = _spec(spec, "mnar-continuous")
    p = spec.params
    n = spec.n
    rng = Rng(spec.seed).stream(0)
    k = rng.categorical(np.asarray(p["weights"], dtype=float), size=n)
    col = {name: np.asarray(p[name], dtype=float)[k] for name in ("eta0", "eta1", "eta2", "sigma", "gamma0", "gamma1", "theta0", "phi")}
    l = col["theta0"] + col["phi"] * rng.normal(size=n)
    a = rng.bernoulli(expit_vec(col["gamma0"] + col["gamma1"] * l)).astype(float)
    y = col["eta0"] + col["eta1"] * l + col["eta2"] * a + col["sigma"] * rng.normal(size=n)
    ym, delta = _mask(y, a, p, Rng(spec.seed).stream(1))
    ate = float(p["eta2"][0]) if len(p["weights"]) == 1 else mixture_ate_grid(p)
    meta = _stamp(spec, ate)
    meta["full_y"] = y.tolist()
    return Dataset(y=ym, a=a, l=l, delta=delta, meta=meta), ate


GENERATORS = {
    "complete": gen_complete,
    "misclassification": gen_misclassified,
    "unmeasured": gen_unmeasured,
    "mnar-binary": gen_mnar_binary,
    "mnar-continuous": gen_mnar_continuous,
}


def generate(spec: DgpSpec):
    """Dispatch on ``spec.family``."""
    return GENERATORS[spec.family](spec)
