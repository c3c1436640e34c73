"""Tipping points: where a credible-interval bound crosses a threshold."""
from __future__ import annotations

import warnings

from .sweep import SweepRow, SweepTable


def _reference(table: SweepTable, usable: list) -> SweepRow:
    ref = table.null_row()
    if ref is None or not ref.ok:
        ref = usable[0]
    return ref


def _threshold(threshold, ref: SweepRow) -> float:
    if threshold == "null-mean":
        return ref.mean
    return float(threshold)


def _usable(table: SweepTable) -> list:
    bad = table.failed
    if bad:
        warnings.warn(f"skipping {len(bad)} failed grid point(s): {[r.index for r in bad]}", RuntimeWarning, stacklevel=3)
    return [r for r in table.rows if r.ok]


def crossing_cells(table: SweepTable, bound: str = "upper", threshold=0.0) -> list:
    """All rows whose ``bound`` lies strictly on the other side of ``threshold``
    from the reference row (the null-value row, else the first row).

    ``threshold`` is a number or ``"null-mean"`` for the reference row's
    posterior mean.
    """
    usable = _usable(table)
    if not usable:
        return []
    ref = _reference(table, usable)
    t = _threshold(threshold, ref)
    side = ref.bound(bound) - t
    if side == 0.0:
        warnings.warn("reference bound sits exactly on the threshold; no side to cross from", RuntimeWarning, stacklevel=2)
        return []
    if side < 0:
        return [r for r in usable if r.bound(bound) > t]
    return [r for r in usable if r.bound(bound) < t]


def tipping_point(table: SweepTable, bound: str = "upper", threshold=0.0, mode: str = "first"):
    """Locate where the selected credible bound crosses ``threshold``.

    Parameters
    ----------
    table : SweepTable
    bound : {"upper", "lower"}
    threshold : float or "null-mean"
    mode : {"first", "all"}
        ``"first"`` returns the first crossing row in sweep order, or ``None``;
        ``"all"`` returns every crossing row (heatmap view for 2-d sweeps).
    """
    if mode not in ("first", "all"):
        raise ValueError(f"mode must be 'first' or 'all', got {mode!r}")
    cells = crossing_cells(table, bound, threshold)
    if mode == "all":
        return cells
    return cells[0] if cells else None
