"""Shared machinery for the model definitions.

A model declares its parameter layout and implements three things:

``_lp_grad(p)``
    fast log target and gradient in constrained space (kernel path);
``_expr(p)``
    the same log target written with :mod:`bayesens.autodiff` primitives,
    evaluable on floats or on tape variables (reference path);
``_ate(p, rng)``
    the per-draw treatment effect.

The base class adds constraint transforms, log-Jacobians, sensitivity
parameter handling and normal priors on sampled sensitivity parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .. import autodiff as ad
from ..data import Dataset, PointMass, SensitivityConfig, ValidationError
from ..numkit import DomainError
from ..sampler.transforms import Constraint, ConstraintSpec, constrain_scalar

ETA_PRIOR_SD = 3.0
GAMMA_PRIOR_SD = 3.0


class ModelMismatchError(ValidationError):
    """The dataset's structure does not fit the chosen model."""


@dataclass(frozen=True)
class Block:
    name: str
    size: int | None  # None marks a scalar
    constraint: Constraint

    @property
    def length(self) -> int:
        return 1 if self.size is None else self.size


class Layout:
    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        self.offsets = {}
        pos = 0
        for b in self.blocks:
            self.offsets[b.name] = (pos, pos + b.length)
            pos += b.length
        self.dim = pos

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.blocks]

    @property
    def flat_names(self) -> list[str]:
        out = []
        for b in self.blocks:
            if b.size is None:
                out.append(b.name)
            else:
                out.extend(f"{b.name}[{i}]" for i in range(b.size))
        return out

    @property
    def constraints(self) -> list[Constraint]:
        return [b.constraint for b in self.blocks for _ in range(b.length)]

    def unpack(self, vec) -> dict:
        out = {}
        for b in self.blocks:
            lo, hi = self.offsets[b.name]
            out[b.name] = vec[lo] if b.size is None else vec[lo:hi]
        return out

    def pack(self, values: Mapping) -> np.ndarray:
        vec = np.empty(self.dim)
        for b in self.blocks:
            lo, hi = self.offsets[b.name]
            vec[lo:hi] = values[b.name]
        return vec


class ModelSpec:
    """Base class for the log-unnormalized-posterior definitions."""

    name = "model"
    #: sensitivity name -> (constraint, default entry)
    sensitivity: dict = {}
    generated_names = ("ATE",)

    def __init__(self, data: Dataset, sens=None):
        self.validate(data)
        self.data = data
        cfg = SensitivityConfig({k: v[1] for k, v in self.sensitivity.items()})
        user = SensitivityConfig(sens or {})
        unknown = sorted(set(user) - set(self.sensitivity))
        if unknown:
            raise ValidationError(
                f"{self.name} has no sensitivity parameter(s) {unknown}; known: {sorted(self.sensitivity)}"
            )
        cfg.update(user)
        if cfg.grid_names:
            raise ValidationError(f"grid entries {cfg.grid_names} must be resolved by a sweep before fitting")
        self.sens = cfg
        self.fixed: dict[str, float] = {}
        self.sampled: list[str] = []
        for k in self.sensitivity:
            entry = cfg[k]
            constraint = self.sensitivity[k][0]
            if isinstance(entry, PointMass):
                if not constraint.contains(entry.value):
                    raise DomainError(f"{k} = {entry.value} outside its {constraint.kind} domain")
                self.fixed[k] = entry.value
            else:
                self.sampled.append(k)
        blocks = list(self.core_blocks())
        blocks += [Block(k, None, self.sensitivity[k][0]) for k in self.sampled]
        self.layout = Layout(blocks)
        self.spec = ConstraintSpec(self.layout.constraints)

    # -- to be provided by subclasses --------------------------------------
    def validate(self, data: Dataset) -> None:
        pass

    def core_blocks(self):
        raise NotImplementedError

    def _lp_grad(self, p: dict):
        raise NotImplementedError

    def _expr(self, p: dict):
        raise NotImplementedError

    def _ate(self, p: dict, rng) -> float:
        raise NotImplementedError

    # -- sampler interface -------------------------------------------------
    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def flat_names(self) -> list[str]:
        return self.layout.flat_names

    def params(self, x) -> dict:
        """Constrained parameter dict including fixed sensitivity values."""
        p = self.layout.unpack(np.asarray(x, dtype=float))
        p.update(self.fixed)
        return p

    def constrained(self, q) -> dict:
        return self.params(self.spec.constrain(np.asarray(q, dtype=float))[0])

    def constrain_flat(self, q) -> np.ndarray:
        return self.spec.constrain(q)[0]

    def unconstrain(self, values: Mapping) -> np.ndarray:
        return self.spec.unconstrain(self.layout.pack(values))[0]

    def logp_grad(self, q):
        """Log target over unconstrained ``q`` (Jacobian included) and its gradient."""
        # constrained values can saturate at the boundary far out in q; the
        # resulting non-finite target is rejected by the sampler
        with np.errstate(all="ignore"):
            x, dx, lj, dlj = self.spec.constrain(np.asarray(q, dtype=float))
            p = self.params(x)
            lp, g = self._lp_grad(p)
            for k in self.sampled:
                prior = self.sens[k]
                z = (p[k] - prior.mean) / prior.sd
                lp += -0.5 * z * z - np.log(prior.sd) - 0.5 * np.log(2.0 * np.pi)
                g[k] = g[k] - z / prior.sd
            gx = self.layout.pack(g)
            return float(lp + lj), gx * dx + dlj

    def log_density(self, q) -> float:
        return self.logp_grad(q)[0]

    def log_density_expr(self, qs):
        """Log target built from autodiff primitives; ``qs`` may hold floats or Vars."""
        p = {}
        jac = []
        constraints = self.layout.constraints
        xs = []
        for qi, c in zip(qs, constraints):
            xi, lji = constrain_scalar(qi, c)
            xs.append(xi)
            jac.append(lji)
        for b in self.layout.blocks:
            lo, hi = self.layout.offsets[b.name]
            p[b.name] = xs[lo] if b.size is None else xs[lo:hi]
        p.update(self.fixed)
        terms = [self._expr(p)]
        for k in self.sampled:
            prior = self.sens[k]
            terms.append(ad.normal_lpdf(p[k], prior.mean, prior.sd))
        terms.extend(jac)
        return ad.add_n(terms)

    def autodiff_grad(self, q):
        """Value and gradient of :meth:`log_density_expr` by reverse-mode autodiff."""
        return ad.grad(self.log_density_expr, list(np.asarray(q, dtype=float)))

    def initial_point(self, rng, radius: float = 2.0) -> np.ndarray:
        return rng.uniform(-radius, radius, size=self.dim)

    def generated(self, q, rng) -> dict:
        return {"ATE": float(self._ate(self.constrained(q), rng))}

    def describe(self) -> dict:
        return {"model": self.name, "sensitivity": self.sens.describe(), "dim": self.dim}


def bernoulli_counts(l) -> tuple[float, float]:
    """Number of ones and zeros in a binary column."""
    ones = float(np.sum(l))
    return ones, float(len(l)) - ones


def cells(*cols):
    """Collapse rows of discrete columns to unique cells with counts."""
    stacked = np.stack([np.asarray(c, dtype=float) for c in cols], axis=1)
    uniq, counts = np.unique(stacked, axis=0, return_counts=True)
    return [uniq[:, j].copy() for j in range(uniq.shape[1])], counts.astype(float)


def log_expit(x):
    return -np.logaddexp(0.0, -x)


def expit(x):
    return np.exp(log_expit(x))


def normal_prior(x, sd):
    """Sum of independent N(0, sd) log densities and the gradient."""
    x = np.asarray(x, dtype=float)
    return float(-0.5 * np.dot(x, x) / sd**2 - x.size * (np.log(sd) + 0.5 * np.log(2.0 * np.pi))), -x / sd**2
