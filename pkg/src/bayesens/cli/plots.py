"""Static SVG figures written without an external renderer."""
from __future__ import annotations

import datetime as _dt
import json
from html import escape

import numpy as np

from ..estimands.gformula import tsb_conditional_mean

W, H = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=60)
ARM_COLORS = {0: "#1f77b4", 1: "#d62728"}


class _Frame:
    """Linear map from data coordinates to the plotting area."""

    def __init__(self, xlim, ylim):
        self.x0, self.x1 = _pad(xlim)
        self.y0, self.y1 = _pad(ylim)

    def x(self, v):
        return MARGIN["left"] + (v - self.x0) / (self.x1 - self.x0) * (W - MARGIN["left"] - MARGIN["right"])

    def y(self, v):
        return H - MARGIN["bottom"] - (v - self.y0) / (self.y1 - self.y0) * (H - MARGIN["top"] - MARGIN["bottom"])


def _pad(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - 0.05 * span, hi + 0.05 * span


def _n(v) -> str:
    return f"{v:.2f}"


def _doc(body: list, title: str, timestamp: bool, config: dict | None = None) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
    ]
    if timestamp:
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        head.append(f'<metadata id="timestamp">{stamp}</metadata>')
    if config is not None:
        head.append(f'<metadata id="config">{escape(json.dumps(config, sort_keys=True, separators=(",", ":")))}</metadata>')
    head.append('<rect width="100%" height="100%" fill="white"/>')
    head.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15" font-family="sans-serif">{escape(title)}</text>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _axes(fr: _Frame, xlabel: str, ylabel: str, ticks_x=None) -> list:
    out = []
    xa, xb = MARGIN["left"], W - MARGIN["right"]
    ya, yb = H - MARGIN["bottom"], MARGIN["top"]
    out.append(f'<g class="axes" stroke="black" stroke-width="1"><line x1="{xa}" y1="{ya}" x2="{xb}" y2="{ya}"/>'
               f'<line x1="{xa}" y1="{ya}" x2="{xa}" y2="{yb}"/></g>')
    xt = ticks_x if ticks_x is not None else np.linspace(fr.x0, fr.x1, 5)
    for t in xt:
        out.append(f'<text x="{_n(fr.x(t))}" y="{ya + 18}" text-anchor="middle" font-size="11" font-family="sans-serif">{t:.3g}</text>')
    for t in np.linspace(fr.y0, fr.y1, 5):
        out.append(f'<text x="{xa - 6}" y="{_n(fr.y(t) + 4)}" text-anchor="end" font-size="11" font-family="sans-serif">{t:.3g}</text>')
    out.append(f'<text x="{(xa + xb) / 2}" y="{H - 18}" text-anchor="middle" font-size="13" font-family="sans-serif">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(ya + yb) / 2}" text-anchor="middle" font-size="13" font-family="sans-serif" '
               f'transform="rotate(-90 18 {(ya + yb) / 2})">{escape(ylabel)}</text>')
    return out


def sweep_curve_svg(table, timestamp: bool = True, config: dict | None = None) -> str:
    """Posterior mean and 95% band of the ATE against the single swept value."""
    if len(table.grid_names) != 1:
        raise ValueError("curve plots need a one-dimensional sweep")
    name = table.grid_names[0]
    rows = [r for r in table.rows if r.ok]
    xs = np.array([r.values[name] for r in rows])
    lo = np.array([r.q025 for r in rows])
    hi = np.array([r.q975 for r in rows])
    mean = np.array([r.mean for r in rows])
    allx = [r.values[name] for r in table.rows]
    ylim = (min(0.0, *lo), max(0.0, *hi)) if rows else (-1.0, 1.0)
    fr = _Frame((min(allx), max(allx)), ylim)
    body = _axes(fr, name, "ATE", ticks_x=allx)
    body.append(f'<line class="zero" x1="{MARGIN["left"]}" x2="{W - MARGIN["right"]}" y1="{_n(fr.y(0))}" y2="{_n(fr.y(0))}" '
                'stroke="grey" stroke-dasharray="4 3"/>')
    if len(rows):
        order = np.argsort(xs)
        pts = [f"{_n(fr.x(xs[i]))},{_n(fr.y(hi[i]))}" for i in order] + [f"{_n(fr.x(xs[i]))},{_n(fr.y(lo[i]))}" for i in order[::-1]]
        body.append(f'<polygon class="band" points="{" ".join(pts)}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>')
        line = " ".join(f"{_n(fr.x(xs[i]))},{_n(fr.y(mean[i]))}" for i in order)
        body.append(f'<polyline class="mean" points="{line}" fill="none" stroke="#08519c" stroke-width="2"/>')
    for r in table.rows:
        if r.ok:
            body.append(f'<circle class="point" cx="{_n(fr.x(r.values[name]))}" cy="{_n(fr.y(r.mean))}" r="4" fill="#08519c"/>')
        else:
            body.append(f'<text class="point error" x="{_n(fr.x(r.values[name]))}" y="{_n(fr.y(ylim[0]))}" '
                        'text-anchor="middle" fill="red" font-size="14">x</text>')
    return _doc(body, f"{table.model}: ATE across {name}", timestamp, config)


def _diverging(v, lo, hi, threshold):
    """Blue below the threshold, red above, white at it."""
    if v >= threshold:
        s = 0.0 if hi <= threshold else min(1.0, (v - threshold) / (hi - threshold))
        return f"rgb(255,{int(255 * (1 - 0.8 * s))},{int(255 * (1 - 0.8 * s))})"
    s = 0.0 if lo >= threshold else min(1.0, (threshold - v) / (threshold - lo))
    return f"rgb({int(255 * (1 - 0.8 * s))},{int(255 * (1 - 0.8 * s))},255)"


def heatmap_svg(table, bound: str = "upper", threshold: float = 0.0, timestamp: bool = True, config: dict | None = None) -> str:
    """One cell per grid point of a two-parameter sweep, shaded by a CrI bound."""
    if len(table.grid_names) != 2:
        raise ValueError("heatmaps need a two-dimensional sweep")
    nx, ny = table.grid_names
    xv = sorted({r.values[nx] for r in table.rows})
    yv = sorted({r.values[ny] for r in table.rows})
    ok = [r for r in table.rows if r.ok]
    if threshold == "null-mean":
        ref = table.null_row()
        ref = ref if ref is not None and ref.ok else (ok[0] if ok else None)
        threshold = ref.mean if ref is not None else 0.0
    vals = [r.bound(bound) for r in ok]
    lo, hi = (min(vals), max(vals)) if vals else (threshold, threshold)
    left, top = MARGIN["left"], MARGIN["top"]
    cw = (W - left - MARGIN["right"]) / len(xv)
    ch = (H - top - MARGIN["bottom"]) / len(yv)
    body = []
    for r in table.rows:
        i, j = xv.index(r.values[nx]), yv.index(r.values[ny])
        x, y = left + i * cw, top + (len(yv) - 1 - j) * ch
        if r.ok:
            v = r.bound(bound)
            fill, label, cls = _diverging(v, lo, hi, threshold), f"{v:.2f}", "cell"
        else:
            fill, label, cls = "#cccccc", "err", "cell error"
        body.append(f'<rect class="{cls}" x="{_n(x)}" y="{_n(y)}" width="{_n(cw)}" height="{_n(ch)}" fill="{fill}" stroke="white"/>')
        body.append(f'<text x="{_n(x + cw / 2)}" y="{_n(y + ch / 2 + 4)}" text-anchor="middle" font-size="11" font-family="sans-serif">{label}</text>')
    for i, v in enumerate(xv):
        body.append(f'<text x="{_n(left + (i + 0.5) * cw)}" y="{H - MARGIN["bottom"] + 18}" text-anchor="middle" font-size="11" font-family="sans-serif">{v:.3g}</text>')
    for j, v in enumerate(yv):
        body.append(f'<text x="{left - 6}" y="{_n(top + (len(yv) - 1 - j + 0.5) * ch + 4)}" text-anchor="end" font-size="11" font-family="sans-serif">{v:.3g}</text>')
    body.append(f'<text x="{(left + W - MARGIN["right"]) / 2}" y="{H - 18}" text-anchor="middle" font-size="13" font-family="sans-serif">{escape(nx)}</text>')
    body.append(f'<text x="18" y="{H / 2}" text-anchor="middle" font-size="13" font-family="sans-serif" transform="rotate(-90 18 {H / 2})">{escape(ny)}</text>')
    which = "upper" if bound == "upper" else "lower"
    return _doc(body, f"{table.model}: {which} 95% CrI bound of the ATE", timestamp, config)


def regression_svg(
    model, names, values, n_curves: int = 20, timestamp: bool = True, grid_points: int = 80, config: dict | None = None
) -> str:
    """Mixture regression ``E[Y | a, l]`` per arm with posterior-draw curves,
    observed outcomes and posterior-mean imputed outcomes.

    ``values`` is a ``(draws, quantities)`` array with columns ``names``.
    """
    data = model.data
    idx = {n: i for i, n in enumerate(names)}
    total = values.shape[0]
    used = np.unique(np.linspace(0, total - 1, min(total, 400)).astype(int))
    lgrid = np.linspace(np.min(data.l), np.max(data.l), grid_points)
    curves = {0: [], 1: []}
    for d in used:
        p = model.params(values[d, [idx[n] for n in model.flat_names]])
        comp = model.components(p)
        log_nu = np.log(model.weights(p))
        for arm in (0, 1):
            curves[arm].append(tsb_conditional_mean(comp, log_nu, arm, lgrid))
    curves = {k: np.array(v) for k, v in curves.items()}
    mis_cols = [idx[n] for n in names if n.startswith("y_mis[")]
    y_imp = values[:, mis_cols].mean(axis=0) if mis_cols else np.empty(0)
    obs = data.observed
    ys = np.concatenate([data.y[obs], y_imp, curves[0].ravel(), curves[1].ravel()])
    fr = _Frame((lgrid[0], lgrid[-1]), (np.min(ys), np.max(ys)))
    body = _axes(fr, "l", "y")
    shown = np.unique(np.linspace(0, len(used) - 1, min(n_curves, len(used))).astype(int))
    for arm in (0, 1):
        for c in shown:
            line = " ".join(f"{_n(fr.x(x))},{_n(fr.y(y))}" for x, y in zip(lgrid, curves[arm][c]))
            body.append(f'<polyline class="draw-curve arm-{arm}" points="{line}" fill="none" stroke="{ARM_COLORS[arm]}" stroke-opacity="0.15"/>')
    for arm in (0, 1):
        line = " ".join(f"{_n(fr.x(x))},{_n(fr.y(y))}" for x, y in zip(lgrid, curves[arm].mean(axis=0)))
        body.append(f'<polyline class="mean-curve arm-{arm}" points="{line}" fill="none" stroke="{ARM_COLORS[arm]}" stroke-width="2.5"/>')
    for l, y, a in zip(data.l[obs], data.y[obs], data.a[obs]):
        body.append(f'<circle class="obs arm-{int(a)}" cx="{_n(fr.x(l))}" cy="{_n(fr.y(y))}" r="2.5" fill="{ARM_COLORS[int(a)]}" fill-opacity="0.35"/>')
    for l, y, a in zip(data.l[~obs], y_imp, data.a[~obs]):
        body.append(f'<rect class="mis arm-{int(a)}" x="{_n(fr.x(l) - 3)}" y="{_n(fr.y(y) - 3)}" width="6" height="6" '
                    f'fill="none" stroke="{ARM_COLORS[int(a)]}" stroke-width="1.5"/>')
    legend = [("a = 0", ARM_COLORS[0]), ("a = 1", ARM_COLORS[1])]
    for k, (label, color) in enumerate(legend):
        y = MARGIN["top"] + 12 + 16 * k
        body.append(f'<line x1="{W - 120}" x2="{W - 100}" y1="{y}" y2="{y}" stroke="{color}" stroke-width="2.5"/>')
        body.append(f'<text x="{W - 95}" y="{y + 4}" font-size="11" font-family="sans-serif">{label}</text>')
    return _doc(body, f"{model.name}: mixture regression with imputed outcomes (squares)", timestamp, config)
