"""Constraint transforms between constrained and unconstrained space."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import autodiff as ad
from ..numkit import DomainError

_UNBOUNDED, _LOWER, _UPPER, _INTERVAL = 0, 1, 2, 3
_KINDS = {"unbounded": _UNBOUNDED, "lower": _LOWER, "upper": _UPPER, "interval": _INTERVAL}


@dataclass(frozen=True)
class Constraint:
    kind: str = "unbounded"
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "interval" and not self.lo < self.hi:
            raise DomainError(f"interval constraint requires lo < hi, got ({self.lo}, {self.hi})")

    @classmethod
    def unbounded(cls):
        return cls("unbounded")

    @classmethod
    def lower(cls, at: float = 0.0):
        return cls("lower", lo=float(at))

    @classmethod
    def upper(cls, at: float = 0.0):
        return cls("upper", hi=float(at))

    @classmethod
    def interval(cls, lo: float = 0.0, hi: float = 1.0):
        return cls("interval", lo=float(lo), hi=float(hi))

    def contains(self, x: float) -> bool:
        if self.kind == "unbounded":
            return math.isfinite(x)
        if self.kind == "lower":
            return self.lo < x < math.inf
        if self.kind == "upper":
            return -math.inf < x < self.hi
        return self.lo < x < self.hi


class ConstraintSpec:
    """Per-coordinate constraints, vectorized over a flat parameter vector."""

    def __init__(self, constraints: Sequence[Constraint]):
        self.constraints = tuple(constraints)
        self.kind = np.array([_KINDS[c.kind] for c in self.constraints], dtype=np.int8)
        self.lo = np.array([c.lo for c in self.constraints], dtype=float)
        self.hi = np.array([c.hi for c in self.constraints], dtype=float)
        self._unb = self.kind == _UNBOUNDED
        self._low = self.kind == _LOWER
        self._upp = self.kind == _UPPER
        self._int = self.kind == _INTERVAL
        self._width = np.where(self._int, self.hi - self.lo, 1.0)
        # index arrays are cheaper than boolean masks in the hot path
        self._il = np.flatnonzero(self._low)
        self._iu = np.flatnonzero(self._upp)
        self._ii = np.flatnonzero(self._int)
        self._log_width = float(np.sum(np.log(self._width[self._ii])))

    def __len__(self):
        return len(self.constraints)

    def check(self, x) -> None:
        x = np.asarray(x, dtype=float)
        for i, (c, v) in enumerate(zip(self.constraints, x)):
            if not c.contains(v):
                raise DomainError(f"coordinate {i} = {v!r} violates {c.kind} constraint ({c.lo}, {c.hi})")

    def constrain(self, q):
        """Map ``q`` to constrained space.

        Returns ``(x, dx_dq, log_jacobian, dlogjac_dq)``; the Jacobian is
        diagonal so derivatives are returned elementwise.
        """
        q = np.asarray(q, dtype=float)
        x = q.copy()
        dx = np.ones_like(q)
        dlj = np.zeros_like(q)
        lj = 0.0
        il, iu, ii = self._il, self._iu, self._ii
        if il.size:
            ql = q[il]
            e = np.exp(ql)
            x[il] = self.lo[il] + e
            dx[il] = e
            dlj[il] = 1.0
            lj += ql.sum()
        if iu.size:
            qu = q[iu]
            e = np.exp(qu)
            x[iu] = self.hi[iu] - e
            dx[iu] = -e
            dlj[iu] = 1.0
            lj += qu.sum()
        if ii.size:
            qi = q[ii]
            s = _expit(qi)
            w = self._width[ii]
            x[ii] = self.lo[ii] + w * s
            dx[ii] = w * s * (1.0 - s)
            dlj[ii] = 1.0 - 2.0 * s
            # log s + log(1 - s) = -|q| - 2 log1p(exp(-|q|))
            aq = np.abs(qi)
            lj += self._log_width - float(np.sum(aq + 2.0 * np.log1p(np.exp(-aq))))
        return x, dx, float(lj), dlj

    def unconstrain(self, x):
        """Inverse map; returns ``(q, log_jacobian)`` with the Jacobian of the inverse transform."""
        x = np.asarray(x, dtype=float)
        self.check(x)
        q = x.copy()
        if self._low.any():
            q[self._low] = np.log(x[self._low] - self.lo[self._low])
        if self._upp.any():
            q[self._upp] = np.log(self.hi[self._upp] - x[self._upp])
        if self._int.any():
            z = (x[self._int] - self.lo[self._int]) / self._width[self._int]
            q[self._int] = np.log(z) - np.log1p(-z)
        return q, self.constrain(q)[2]


def _expit(q):
    e = np.exp(-np.abs(q))
    return np.where(q >= 0, 1.0, e) / (1.0 + e)


def constrain_scalar(q, c: Constraint):
    """Scalar transform usable with :mod:`autodiff` values; returns ``(x, log_jacobian)``."""
    if c.kind == "unbounded":
        return q, 0.0
    if c.kind == "lower":
        return c.lo + ad.exp(q), q
    if c.kind == "upper":
        return c.hi - ad.exp(q), q
    w = c.hi - c.lo
    return c.lo + w * ad.expit(q), math.log(w) + ad.log_expit(q) + ad.log_expit(-q)


def to_unconstrained(params, spec: ConstraintSpec):
    return spec.unconstrain(params)


def to_constrained(q, spec: ConstraintSpec):
    x, _, lj, _ = spec.constrain(q)
    return x, lj
