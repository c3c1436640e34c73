"""``bayesens`` command-line entry point.

Exit codes: 0 success, 2 validation or input error, 3 sampling failure,
4 sweep with some failed grid points.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import synthdata
from ..data import Grid, SensitivityConfig, ValidationError
from ..estimands import fit as run_fit
from ..estimands import grid_sweep, summarize, tipping_point
from ..models import MODELS, get_model
from ..sampler import ConfigurationError, SamplerConfig, SamplingError
from . import io as fio
from . import plots

EXIT_OK, EXIT_VALIDATION, EXIT_SAMPLING, EXIT_PARTIAL = 0, 2, 3, 4
SAMPLER_KEYS = ("chains", "warmup", "iterations", "target_accept", "max_leapfrog", "seed", "integration_time", "threads", "init_radius")
MODEL_OPTIONS = {"tsb-mnar": ("K", "alpha", "n_mc")}

log = logging.getLogger("bayesens")


class RunConfig:
    """Resolved run configuration: config file first, flags on top."""

    def __init__(self, model, data, sensitivity, sampler, options, out, plot=True, timestamp=True):
        if model not in MODELS:
            raise ValidationError(f"unknown model {model!r}; choose from {sorted(MODELS)}")
        if not data:
            raise ValidationError("no dataset given (--data or the config's 'data' field)")
        allowed = MODEL_OPTIONS.get(model, ())
        bad = sorted(set(options) - set(allowed))
        if bad:
            raise ValidationError(f"model {model!r} takes no option(s) {bad}; allowed: {list(allowed)}")
        known = set(MODELS[model].sensitivity)
        unknown = sorted(set(sensitivity) - known)
        if unknown:
            raise ValidationError(f"{model} has no sensitivity parameter(s) {unknown}; known: {sorted(known)}")
        self.model = model
        self.data = str(data)
        self.sensitivity = sensitivity
        self.sampler = sampler
        self.options = options
        self.out = Path(out) if out else Path("bayesens-out")
        self.plot = bool(plot)
        self.timestamp = bool(timestamp)

    def as_dict(self) -> dict:
        """Everything that determines the results (the output directory excluded)."""
        return {
            "model": self.model,
            "data": self.data,
            "sensitivity": {k: fio.entry_to_json(v) for k, v in sorted(self.sensitivity.items())},
            "sampler": {k: getattr(self.sampler, k) for k in SAMPLER_KEYS},
            "model_options": dict(sorted(self.options.items())),
        }


def _kv(text: str, flag: str):
    if "=" not in text:
        raise ValidationError(f"{flag} expects name=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _json_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(args) -> RunConfig:
    cfg = fio.read_json(args.config) if args.config else {}
    known_sections = {"model", "data", "sensitivity", "sampler", "model_options", "output"}
    extra = sorted(set(cfg) - known_sections)
    if extra:
        raise ValidationError(f"unknown config section(s) {extra}; expected {sorted(known_sections)}")
    sens = fio.sensitivity_from_json(cfg.get("sensitivity"))
    for item in args.set or []:
        k, v = _kv(item, "--set")
        sens[k] = fio.parse_entry(_json_value(v) if not v.startswith("normal") else v)
    for item in args.grid or []:
        k, v = _kv(item, "--grid")
        sens[k] = fio.parse_range(v) if ":" in v else Grid(tuple(json.loads(v)))
    for item in args.prior or []:
        k, v = _kv(item, "--prior")
        entry = fio.parse_entry(v)
        if type(entry).__name__ != "NormalPrior":
            raise ValidationError(f"--prior expects name=normal(mean,sd), got {item!r}")
        sens[k] = entry

    sampler = dict(cfg.get("sampler") or {})
    bad = sorted(set(sampler) - set(SAMPLER_KEYS))
    if bad:
        raise ValidationError(f"unknown sampler setting(s) {bad}")
    for flag, key in (("seed", "seed"), ("threads", "threads"), ("chains", "chains"), ("iter", "iterations"), ("warmup", "warmup")):
        if getattr(args, flag) is not None:
            sampler[key] = getattr(args, flag)
    try:
        sampler_cfg = SamplerConfig(**sampler)
    except TypeError as exc:
        raise ValidationError(f"bad sampler settings: {exc}") from None

    options = dict(cfg.get("model_options") or {})
    for item in args.option or []:
        k, v = _kv(item, "--option")
        options[k] = _json_value(v)

    output = dict(cfg.get("output") or {})
    out = args.out or output.get("dir")
    plot = output.get("plot", True) and not args.no_plot
    timestamp = output.get("timestamp", True) and not args.no_timestamp
    return RunConfig(args.model or cfg.get("model"), args.data or cfg.get("data"), sens, sampler_cfg, options, out, plot, timestamp)


def _build_model(rc: RunConfig, sens=None, data=None):
    data = data if data is not None else fio.read_dataset(rc.data)
    return get_model(rc.model)(data, sens if sens is not None else rc.sensitivity, **rc.options), data


# -- commands -----------------------------------------------------------------
def cmd_simulate(args) -> int:
    params = {}
    for item in args.param or []:
        k, v = _kv(item, "--param")
        params[k] = _json_value(v)
    spec = synthdata.DgpSpec(args.family, params, seed=args.seed if args.seed is not None else 0)
    data, ate = synthdata.generate(spec)
    out = Path(args.out or f"{args.family}.csv")
    header = {"dgp": spec.describe(), "true_ate": ate}
    fio.write_dataset(out, data, header)
    fio.write_json(out.with_name(out.name + ".json"), header)
    print(f"wrote {out} (n={data.n}, missing={data.n_mis}, true ATE={ate:.6g})")
    return EXIT_OK


def cmd_fit(args) -> int:
    rc = resolve_config(args)
    if rc.sensitivity.grid_names:
        raise ValidationError(f"grid entries {rc.sensitivity.grid_names} belong to 'sweep', not 'fit'")
    model, data = _build_model(rc)
    res = run_fit(model, rc.sampler)
    cfg = rc.as_dict()
    fio.write_summary(rc.out / "summary.csv", res.summaries, cfg)
    fio.write_draws(rc.out / "draws.csv", res.draws, cfg)
    fio.write_json(rc.out / "diagnostics.json", _diagnostics(res.draws.names, res.draws.draws, res.draws.divergent, res.draws.step_size, cfg))
    fio.write_json(rc.out / "config.json", cfg)
    if rc.plot and rc.model == "tsb-mnar":
        flat = res.draws.draws.reshape(-1, len(res.draws.names))
        fio.atomic_write(rc.out / "regression.svg", plots.regression_svg(model, res.draws.names, flat, timestamp=rc.timestamp, config=cfg))
    ate = res.ate
    print(f"ATE mean {ate.mean:.4f}  95% CrI [{ate.q025:.4f}, {ate.q975:.4f}]  "
          f"max R-hat {_f(res.max_rhat)}  min ESS {_f(res.min_ess)}  divergences {res.divergences}")
    print(f"results in {rc.out}")
    return EXIT_OK


def _f(v):
    return "NA" if v is None else f"{v:.4g}"


def _diagnostics(names, values, divergent, step_size, cfg) -> dict:
    per = {}
    for j, n in enumerate(names):
        s = summarize(values[:, :, j])
        per[n] = {"rhat": s.rhat, "ess": s.ess}
    rh = [v["rhat"] for v in per.values() if v["rhat"] is not None]
    es = [v["ess"] for v in per.values() if v["ess"] is not None]
    return {
        "config": cfg,
        "divergences": int(np.sum(divergent)),
        "divergences_per_chain": [int(x) for x in np.sum(divergent, axis=1)],
        "step_size": [float(x) for x in step_size] if step_size is not None else None,
        "max_rhat": max(rh) if rh else None,
        "min_ess": min(es) if es else None,
        "quantities": per,
    }


def cmd_sweep(args) -> int:
    rc = resolve_config(args)
    if not rc.sensitivity.grid_names:
        raise ValidationError("a sweep needs at least one grid entry (--grid name=start:stop:step)")
    data = fio.read_dataset(rc.data)
    model_cls = get_model(rc.model)
    # structural validation before any sampling
    model_cls(data, SensitivityConfig(rc.sensitivity).grid_points()[0], **rc.options)
    table = grid_sweep(model_cls, data, rc.sensitivity, rc.sampler, rc.options, workers=rc.sampler.threads)
    cfg = rc.as_dict()
    fio.write_sweep(rc.out / "sweep.csv", table, cfg)
    fio.write_json(rc.out / "config.json", cfg)
    if rc.plot:
        if len(table.grid_names) == 1:
            fio.atomic_write(rc.out / "sweep.svg", plots.sweep_curve_svg(table, timestamp=rc.timestamp, config=cfg))
        elif len(table.grid_names) == 2:
            fio.atomic_write(rc.out / "heatmap.svg", plots.heatmap_svg(table, args.bound, timestamp=rc.timestamp, config=cfg))
    for r in table.rows:
        vals = ", ".join(f"{k}={r.values[k]:g}" for k in table.grid_names)
        if r.ok:
            print(f"[{r.index}] {vals}: ATE {r.mean:.4f} [{r.q025:.4f}, {r.q975:.4f}]")
        else:
            print(f"[{r.index}] {vals}: FAILED {r.error}")
    print(f"results in {rc.out}")
    if len(table.failed) == len(table):
        return EXIT_SAMPLING
    return EXIT_PARTIAL if table.failed else EXIT_OK


def _threshold(text):
    return "null-mean" if text == "null-mean" else float(text)


def cmd_tipping(args) -> int:
    table = fio.read_sweep(args.table)
    threshold = _threshold(args.threshold)
    mode = "all" if args.all else "first"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        found = tipping_point(table, args.bound, threshold, mode=mode)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    cells = found if mode == "all" else ([found] if found is not None else [])
    report = {
        "table": str(args.table),
        "config": table.config,
        "bound": args.bound,
        "threshold": threshold,
        "mode": mode,
        "tipping": [{"index": r.index, "values": r.values, "bound_value": r.bound(args.bound), "mean": r.mean} for r in cells],
        "skipped": [r.index for r in table.failed],
    }
    out = Path(args.out) if args.out else Path(str(args.table) + ".tipping.json")
    fio.write_json(out, report)
    if not cells:
        print("none")
    for r in cells:
        vals = ", ".join(f"{k}={v:g}" for k, v in r.values.items())
        print(f"tipping point: {vals} ({args.bound} bound {r.bound(args.bound):.4f})")
    return EXIT_OK


def cmd_plot(args) -> int:
    ts = not args.no_timestamp
    path = Path(args.path)
    if args.kind in ("curve", "heatmap"):
        table = fio.read_sweep(path)
        if args.kind == "curve":
            svg = plots.sweep_curve_svg(table, ts, config=table.config)
        else:
            svg = plots.heatmap_svg(table, args.bound, _threshold(args.threshold), ts, config=table.config)
        default = path.with_suffix(f".{args.kind}.svg")
    else:
        fitdir = path if path.is_dir() else path.parent
        cfg = fio.read_json(fitdir / "config.json")
        if cfg.get("model") != "tsb-mnar":
            raise ValidationError("regression plots need a tsb-mnar fit")
        names, values, _, _ = fio.read_draws(fitdir / "draws.csv")
        sens = fio.sensitivity_from_json(cfg.get("sensitivity"))
        model = get_model("tsb-mnar")(fio.read_dataset(cfg["data"]), sens, **cfg.get("model_options", {}))
        svg = plots.regression_svg(model, names, values.reshape(-1, len(names)), timestamp=ts, config=cfg)
        default = fitdir / "regression.svg"
    out = Path(args.out) if args.out else default
    fio.atomic_write(out, svg)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_diagnostics(args) -> int:
    path = Path(args.path)
    draws_path = path / "draws.csv" if path.is_dir() else path
    names, values, divergent, comments = fio.read_draws(draws_path)
    diag = _diagnostics(names, values, divergent, comments.get("step_size"), comments.get("config"))
    print(f"{'quantity':<20} {'rhat':>8} {'ess':>10}")
    for n, d in diag["quantities"].items():
        print(f"{n:<20} {_f(d['rhat']):>8} {_f(d['ess']):>10}")
    print(f"divergences: {diag['divergences']}  max R-hat: {_f(diag['max_rhat'])}  min ESS: {_f(diag['min_ess'])}")
    if args.out:
        fio.write_json(args.out, diag)
    return EXIT_OK


# -- parser -------------------------------------------------------------------
def _run_flags(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--model", choices=sorted(MODELS))
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--iter", type=int, help="post-warmup iterations per chain")
    p.add_argument("--warmup", type=int)
    p.add_argument("--set", action="append", metavar="NAME=VALUE", help="point-mass sensitivity value")
    p.add_argument("--grid", action="append", metavar="NAME=A:B:STEP", help="inclusive grid of sensitivity values")
    p.add_argument("--prior", action="append", metavar="NAME=normal(M,S)", help="normal prior on a sensitivity parameter")
    p.add_argument("--option", action="append", metavar="KEY=VALUE", help="model option, e.g. K=10 for tsb-mnar")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from SVG files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesens", description="Bayesian sensitivity analysis for causal effects.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("family", choices=synthdata.FAMILIES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="dataset CSV path")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="override a DGP parameter (JSON value)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one model")
    _run_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="fit across a sensitivity grid")
    _run_flags(p)
    p.add_argument("--bound", choices=("upper", "lower"), default="upper", help="bound shown in 2-d heatmaps")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tipping", help="locate the tipping point in a sweep table")
    p.add_argument("table")
    p.add_argument("--bound", choices=("upper", "lower"), default="upper")
    p.add_argument("--threshold", default="0", help="number or 'null-mean'")
    p.add_argument("--all", action="store_true", help="report every crossing cell (heatmap mode)")
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_tipping)

    p = sub.add_parser("plot", help="render an SVG from a sweep table or fit directory")
    p.add_argument("path")
    p.add_argument("--kind", choices=("curve", "heatmap", "regression"), required=True)
    p.add_argument("--bound", choices=("upper", "lower"), default="upper")
    p.add_argument("--threshold", default="0")
    p.add_argument("--out")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("diagnostics", help="R-hat, ESS and divergences of a fit")
    p.add_argument("path", help="fit directory or draws CSV")
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_diagnostics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except SamplingError as exc:
        print(f"sampling failed: {exc}", file=sys.stderr)
        return EXIT_SAMPLING
    except (ValidationError, ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
