"""Observed data and sensitivity-parameter configuration."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .numkit import DomainError


class ValidationError(ValueError):
    """Dataset or configuration does not fit the requested model."""


@dataclass(frozen=True)
class Dataset:
    """Column-oriented data; ``y`` is NaN exactly where ``delta == 1``.

    ``a`` holds the recorded treatment (the error-prone ascertainment for the
    misclassification model).
    """

    y: np.ndarray
    a: np.ndarray
    l: np.ndarray
    delta: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        a = np.asarray(self.a, dtype=float)
        l = np.asarray(self.l, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        n = len(a)
        if not (len(y) == len(l) == len(delta) == n):
            raise ValidationError("columns y, a, l, delta must share one length")
        if n < 1:
            raise ValidationError("dataset is empty")
        if not np.all((a == 0) | (a == 1)):
            raise ValidationError("treatment column must be 0/1")
        if not np.all((delta == 0) | (delta == 1)):
            raise ValidationError("delta column must be 0/1")
        if not np.array_equal(np.isnan(y), delta == 1):
            raise ValidationError("y must be present exactly where delta == 0")
        if not np.all(np.isfinite(l)):
            raise ValidationError("covariate column must be finite")
        for name, arr in (("y", y), ("a", a), ("l", l), ("delta", delta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def complete(cls, y, a, l, meta=None):
        y = np.asarray(y, dtype=float)
        return cls(y=y, a=a, l=l, delta=np.zeros(len(y)), meta=dict(meta or {}))

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def observed(self) -> np.ndarray:
        return self.delta == 0

    @property
    def n_obs(self) -> int:
        return int(self.observed.sum())

    @property
    def n_mis(self) -> int:
        return self.n - self.n_obs

    @property
    def binary_outcome(self) -> bool:
        yo = self.y[self.observed]
        return bool(np.all((yo == 0) | (yo == 1)))

    @property
    def binary_covariate(self) -> bool:
        return bool(np.all((self.l == 0) | (self.l == 1)))

    def complete_cases(self) -> "Dataset":
        keep = self.observed
        return Dataset(y=self.y[keep], a=self.a[keep], l=self.l[keep], delta=self.delta[keep], meta=dict(self.meta))


@dataclass(frozen=True)
class PointMass:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError(f"point mass value must be finite, got {self.value!r}")


@dataclass(frozen=True)
class Grid:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValidationError("grid must contain at least one value")
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("grid values must be finite")
        if len(set(vals)) != len(vals):
            raise DomainError("grid values must be distinct")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class NormalPrior:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0.0:
            raise DomainError(f"normal prior sd must be positive, got {self.sd!r}")


SensitivityEntry = Union[PointMass, Grid, NormalPrior]


def as_entry(value) -> SensitivityEntry:
    """Coerce numbers to point masses and sequences to grids."""
    if isinstance(value, (PointMass, Grid, NormalPrior)):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return PointMass(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return Grid(tuple(value))
    raise ValidationError(f"cannot interpret {value!r} as a sensitivity entry")


class SensitivityConfig(dict):
    """Mapping from sensitivity-parameter name to its treatment."""

    def __init__(self, entries: Mapping | None = None, **kw):
        super().__init__()
        for k, v in dict(entries or {}, **kw).items():
            self[k] = as_entry(v)

    @property
    def grid_names(self) -> list[str]:
        return [k for k, v in self.items() if isinstance(v, Grid)]

    def grid_points(self) -> list["SensitivityConfig"]:
        """Cartesian product of the grid entries, first grid varying slowest."""
        names = self.grid_names
        if not names:
            return [SensitivityConfig(self)]
        points = []
        for combo in itertools.product(*[self[k].values for k in names]):
            point = SensitivityConfig(self)
            for k, v in zip(names, combo):
                point[k] = PointMass(v)
            points.append(point)
        return points

    def describe(self) -> dict:
        out = {}
        for k, v in sorted(self.items()):
            if isinstance(v, PointMass):
                out[k] = v.value
            elif isinstance(v, Grid):
                out[k] = {"grid": list(v.values)}
            else:
                out[k] = {"normal": [v.mean, v.sd]}
        return out
