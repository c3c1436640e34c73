"""File formats: header-stamped dataset CSV, JSON run configs, summary,
draws and sweep-table CSVs. All writes are atomic and byte-deterministic."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from ..data import Dataset, Grid, NormalPrior, PointMass, SensitivityConfig, ValidationError
from ..estimands.sweep import SweepRow, SweepTable

DATASET_MAGIC = "# bayesens-dataset v1"
SUMMARY_COLUMNS = ["quantity", "mean", "sd", "mcse", "q2.5", "q50", "q97.5", "ess", "rhat"]
MISSING = "NA"


class ParseError(ValidationError):
    """Malformed input file; the message carries the path and line number."""

    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = str(path)
        self.lineno = lineno


def fmt(x) -> str:
    """Shortest round-trip text for a number; integral values without a point."""
    if x is None:
        return MISSING
    x = float(x)
    if math.isnan(x):
        return MISSING
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _comment_block(items) -> str:
    return "".join(f"# {k}: {dumps(v)}\n" for k, v in items)


def _split_comments(path):
    """``(comments dict, body lines with their 1-based line numbers)``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    comments, body = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            m = re.match(r"#\s*([\w\-]+):\s*(.*)$", line)
            if m:
                try:
                    comments[m.group(1)] = json.loads(m.group(2))
                except json.JSONDecodeError as exc:
                    raise ParseError(path, lineno, f"bad header value for {m.group(1)!r}: {exc.msg}") from None
            continue
        if line.strip():
            body.append((lineno, line))
    return comments, body


# -- datasets -----------------------------------------------------------------
def write_dataset(path, data: Dataset, header: dict | None = None) -> Path:
    """CSV with ``#`` header lines, then ``delta,y,a,l``; missing ``y`` is empty."""
    header = dict(header if header is not None else data.meta)
    lines = [DATASET_MAGIC + "\n", _comment_block((k, header[k]) for k in sorted(header) if k in ("dgp", "true_ate"))]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "y", "a", "l"])
    for dl, y, a, l in zip(data.delta, data.y, data.a, data.l):
        w.writerow([fmt(dl), "" if dl == 1 else fmt(y), fmt(a), fmt(l)])
    return atomic_write(path, "".join(lines) + buf.getvalue())


def read_dataset(path) -> Dataset:
    comments, body = _split_comments(path)
    if not body:
        raise ParseError(path, 1, "no column header found")
    lineno, head = body[0]
    cols = [c.strip() for c in head.split(",")]
    if cols != ["delta", "y", "a", "l"]:
        raise ParseError(path, lineno, f"expected columns delta,y,a,l, got {head!r}")
    rows = []
    for lineno, line in body[1:]:
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(path, lineno, f"expected 4 fields, got {len(parts)}")
        try:
            delta = float(parts[0])
            y = math.nan if parts[1].strip() in ("", MISSING) else float(parts[1])
            a, l = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if delta not in (0.0, 1.0):
            raise ParseError(path, lineno, f"delta must be 0 or 1, got {parts[0]!r}")
        if (delta == 1.0) != math.isnan(y):
            raise ParseError(path, lineno, "y must be empty exactly when delta is 1")
        rows.append((y, a, l, delta))
    if not rows:
        raise ParseError(path, lineno, "dataset has no rows")
    y, a, l, delta = (np.array(c) for c in zip(*rows))
    meta = {k: comments[k] for k in ("dgp", "true_ate") if k in comments}
    meta["path"] = str(path)
    return Dataset(y=y, a=a, l=l, delta=delta, meta=meta)


# -- sensitivity entries and configs ------------------------------------------
_RANGE = re.compile(r"^\s*([^:]+):([^:]+):([^:]+)\s*$")
_NORMAL = re.compile(r"^\s*normal\(\s*([^,]+),\s*([^)]+)\)\s*$")


def parse_range(text: str) -> Grid:
    """``a:b:step`` as an inclusive grid; values rounded to absorb float drift."""
    m = _RANGE.match(text)
    if not m:
        raise ValidationError(f"grid {text!r} is not of the form start:stop:step")
    try:
        start, stop, step = (float(g) for g in m.groups())
    except ValueError:
        raise ValidationError(f"grid {text!r} has non-numeric parts") from None
    if not step > 0 or stop < start or not all(map(math.isfinite, (start, stop, step))):
        raise ValidationError(f"grid {text!r} needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return Grid(tuple(round(start + i * step, 12) for i in range(count)))


def parse_entry(value):
    """Sensitivity entry from JSON or flag syntax.

    Accepted: a number (point mass), ``{"point": v}``, ``{"grid": [..]}`` or
    ``{"grid": "a:b:step"}``, ``{"normal": [mean, sd]}``, the strings
    ``"normal(m,s)"`` and ``"a:b:step"``.
    """
    if isinstance(value, bool):
        raise ValidationError(f"cannot interpret {value!r} as a sensitivity entry")
    if isinstance(value, (int, float)):
        return PointMass(float(value))
    if isinstance(value, str):
        m = _NORMAL.match(value)
        if m:
            try:
                return NormalPrior(float(m.group(1)), float(m.group(2)))
            except ValueError:
                raise ValidationError(f"bad normal prior {value!r}") from None
        if ":" in value:
            return parse_range(value)
        try:
            return PointMass(float(value))
        except ValueError:
            raise ValidationError(f"cannot interpret {value!r} as a sensitivity entry") from None
    if isinstance(value, dict) and len(value) == 1:
        (kind, arg), = value.items()
        if kind == "point":
            return parse_entry(float(arg))
        if kind == "grid":
            return parse_range(arg) if isinstance(arg, str) else Grid(tuple(arg))
        if kind == "normal" and isinstance(arg, (list, tuple)) and len(arg) == 2:
            return NormalPrior(float(arg[0]), float(arg[1]))
    if isinstance(value, list):
        return Grid(tuple(value))
    raise ValidationError(f"cannot interpret {value!r} as a sensitivity entry")


def entry_to_json(entry):
    if isinstance(entry, PointMass):
        return entry.value
    if isinstance(entry, Grid):
        return {"grid": list(entry.values)}
    return {"normal": [entry.mean, entry.sd]}


def sensitivity_from_json(obj) -> SensitivityConfig:
    if obj is None:
        return SensitivityConfig()
    if not isinstance(obj, dict):
        raise ValidationError("the sensitivity section must be an object")
    return SensitivityConfig({k: parse_entry(v) for k, v in obj.items()})


def read_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    if not isinstance(obj, dict):
        raise ParseError(path, 1, "top level must be an object")
    return obj


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n")


# -- summaries and draws ------------------------------------------------------
def write_summary(path, summaries: dict, config: dict) -> Path:
    buf = io.StringIO()
    buf.write(_comment_block([("config", config)]))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for name, s in summaries.items():
        w.writerow([name] + [fmt(v) for v in (s.mean, s.sd, s.mcse, s.q025, s.q50, s.q975, s.ess, s.rhat)])
    return atomic_write(path, buf.getvalue())


def read_summary(path) -> dict:
    _, body = _split_comments(path)
    rows = list(csv.reader([line for _, line in body]))
    if not rows or rows[0] != SUMMARY_COLUMNS:
        raise ParseError(path, body[0][0] if body else 1, "not a summary file")
    out = {}
    for (lineno, _), row in zip(body[1:], rows[1:]):
        try:
            out[row[0]] = {k: _num(v) for k, v in zip(SUMMARY_COLUMNS[1:], row[1:])}
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    return out


def _num(text):
    return None if text in ("", MISSING) else float(text)


def write_draws(path, draws, config: dict) -> Path:
    buf = io.StringIO()
    buf.write(_comment_block([("config", config), ("step_size", draws.step_size)]))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chain", "iteration", "divergent"] + list(draws.names))
    for c in range(draws.chains):
        for i in range(draws.iterations):
            w.writerow([c, i, int(draws.divergent[c, i])] + [fmt(v) for v in draws.draws[c, i]])
    return atomic_write(path, buf.getvalue())


def read_draws(path):
    """``(names, values (chains, iterations, q), divergent (chains, iterations), comments)``."""
    comments, body = _split_comments(path)
    if not body:
        raise ParseError(path, 1, "empty draws file")
    head = body[0][1].split(",")
    if head[:3] != ["chain", "iteration", "divergent"]:
        raise ParseError(path, body[0][0], "not a draws file")
    names = head[3:]
    recs = []
    for lineno, line in body[1:]:
        parts = line.split(",")
        if len(parts) != len(head):
            raise ParseError(path, lineno, f"expected {len(head)} fields, got {len(parts)}")
        try:
            recs.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    arr = np.array(recs)
    chains = int(arr[:, 0].max()) + 1
    iters = len(arr) // chains
    if chains * iters != len(arr):
        raise ParseError(path, body[-1][0], "chains have unequal lengths")
    values = arr[:, 3:].reshape(chains, iters, len(names))
    divergent = arr[:, 2].reshape(chains, iters).astype(bool)
    return names, values, divergent, comments


# -- sweep tables -------------------------------------------------------------
_SWEEP_TAIL = ["seed", "mean", "q2.5", "q97.5", "max_rhat", "min_ess", "divergences", "error"]


def write_sweep(path, table: SweepTable, config: dict) -> Path:
    buf = io.StringIO()
    meta = {"model": table.model, "grid": table.grid_names, "base_seed": table.base_seed, "null_values": table.null_values}
    buf.write(_comment_block([("config", config), ("sweep", meta)]))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index"] + list(table.grid_names) + _SWEEP_TAIL)
    for r in table.rows:
        w.writerow(
            [r.index]
            + [fmt(r.values[k]) for k in table.grid_names]
            + [r.seed]
            + [fmt(v) for v in (r.mean, r.q025, r.q975, r.max_rhat, r.min_ess, r.divergences)]
            + [r.error or ""]
        )
    return atomic_write(path, buf.getvalue())


def read_sweep(path) -> SweepTable:
    comments, body = _split_comments(path)
    if not body:
        raise ParseError(path, 1, "empty sweep table")
    lineno, head = body[0]
    cols = next(csv.reader([head]))
    if len(cols) < len(_SWEEP_TAIL) + 2 or cols[0] != "index" or cols[-len(_SWEEP_TAIL):] != _SWEEP_TAIL:
        raise ParseError(path, lineno, "not a sweep table header")
    names = cols[1:-len(_SWEEP_TAIL)]
    rows = []
    for lineno, line in body[1:]:
        rec = next(csv.reader([line]))
        if len(rec) != len(cols):
            raise ParseError(path, lineno, f"expected {len(cols)} fields, got {len(rec)}")
        try:
            values = {k: float(v) for k, v in zip(names, rec[1:])}
            tail = dict(zip(_SWEEP_TAIL, rec[1 + len(names):]))
            row = SweepRow(
                index=int(rec[0]),
                values=values,
                seed=int(tail["seed"]),
                mean=_num(tail["mean"]),
                q025=_num(tail["q2.5"]),
                q975=_num(tail["q97.5"]),
                max_rhat=_num(tail["max_rhat"]),
                min_ess=_num(tail["min_ess"]),
                divergences=None if tail["divergences"] in ("", MISSING) else int(float(tail["divergences"])),
                error=tail["error"] or None,
            )
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if row.ok and (row.mean is None or row.q025 is None or row.q975 is None):
            raise ParseError(path, lineno, "row without an error marker is missing its estimates")
        rows.append(row)
    meta = comments.get("sweep", {})
    return SweepTable(
        model=meta.get("model", "unknown"),
        grid_names=names,
        rows=rows,
        base_seed=int(meta.get("base_seed", 0)),
        null_values=meta.get("null_values", {}),
        config=comments.get("config", {}),
    )
