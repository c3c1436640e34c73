"""Sensitivity grid sweeps: one complete fit per grid point."""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ..data import SensitivityConfig, ValidationError
from ..numkit import derive_seed
from ..sampler import SamplerConfig, SamplingError
from .summary import EstimandSummary, fit


@dataclass(frozen=True)
class SweepRow:
    """Result for one grid point; ``error`` is set (and the numbers are
    ``None``) when the fit at that point failed."""

    index: int
    values: dict
    seed: int
    mean: float | None = None
    q025: float | None = None
    q975: float | None = None
    max_rhat: float | None = None
    min_ess: float | None = None
    divergences: int | None = None
    ate: EstimandSummary | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def bound(self, which: str) -> float | None:
        if which not in ("lower", "upper"):
            raise ValueError(f"bound must be 'lower' or 'upper', got {which!r}")
        return self.q025 if which == "lower" else self.q975


@dataclass
class SweepTable:
    model: str
    grid_names: list
    rows: list
    base_seed: int
    null_values: dict = field(default_factory=dict)
    #: run configuration that produced the table, when known
    config: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    @property
    def failed(self) -> list:
        return [r for r in self.rows if not r.ok]

    def null_row(self) -> SweepRow | None:
        """Row whose swept values equal the model's null values, if any."""
        if not self.null_values or not all(k in self.null_values for k in self.grid_names):
            return None
        for r in self.rows:
            if all(r.values[k] == self.null_values[k] for k in self.grid_names):
                return r
        return None

    def lookup(self, **values) -> SweepRow:
        for r in self.rows:
            if all(r.values[k] == v for k, v in values.items()):
                return r
        raise KeyError(values)


def point_seed(base_seed: int, index: int) -> int:
    """Deterministic seed of grid point ``index``."""
    return derive_seed(base_seed, index)


def _run_point(args):
    model_cls, data, point, names, index, config, model_kwargs = args
    seed = point_seed(config.seed, index)
    values = {k: point[k].value for k in names}
    try:
        model = model_cls(data, point, **model_kwargs)
        res = fit(model, dataclasses.replace(config, seed=seed))
    except (SamplingError, ValueError, ArithmeticError) as exc:
        return SweepRow(index=index, values=values, seed=seed, error=f"{type(exc).__name__}: {exc}")
    ate = res.ate
    return SweepRow(
        index=index,
        values=values,
        seed=seed,
        mean=ate.mean,
        q025=ate.q025,
        q975=ate.q975,
        max_rhat=res.max_rhat,
        min_ess=res.min_ess,
        divergences=res.divergences,
        ate=ate,
    )


def grid_sweep(model_cls, data, sens, config: SamplerConfig | None = None, model_kwargs=None, workers: int = 1) -> SweepTable:
    """Fit ``model_cls`` at every point of the cartesian product of the grid entries.

    Parameters
    ----------
    model_cls : type
        A model class taking ``(data, sens, **model_kwargs)``.
    sens : mapping
        Sensitivity entries; at least one must be a grid.
    config : SamplerConfig
        ``config.seed`` is the base seed; point ``i`` runs with
        ``derive_seed(seed, i)``.
    workers : int
        Grid points fitted concurrently. Results do not depend on it.
    """
    config = config or SamplerConfig()
    sens = SensitivityConfig(sens)
    names = sens.grid_names
    if not names:
        raise ValidationError("a sweep needs at least one grid entry")
    points = sens.grid_points()
    kwargs = dict(model_kwargs or {})
    if workers > 1:
        config = dataclasses.replace(config, threads=1)
    jobs = [(model_cls, data, p, names, i, config, kwargs) for i, p in enumerate(points)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_run_point, jobs))
    else:
        rows = [_run_point(j) for j in jobs]
    rows.sort(key=lambda r: r.index)
    return SweepTable(
        model=getattr(model_cls, "name", model_cls.__name__),
        grid_names=names,
        rows=rows,
        base_seed=int(config.seed),
        null_values=dict(getattr(model_cls, "null_values", {})),
    )
