"""Plain-text SVG scatter plots (no rendering backend)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.4f}"


@dataclass
class Axes:
    """Affine map from data to pixel coordinates (``log`` axes map ``log10``)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    logx: bool = False
    logy: bool = False

    def _t(self, v, log):
        return math.log10(v) if log else v

    def px(self, x: float) -> float:
        a, b = self._t(self.xmin, self.logx), self._t(self.xmax, self.logx)
        return MARGIN_LEFT + (self._t(x, self.logx) - a) / (b - a) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        a, b = self._t(self.ymin, self.logy), self._t(self.ymax, self.logy)
        return HEIGHT - MARGIN_BOTTOM - (self._t(y, self.logy) - a) / (b - a) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)


def _range(values, log, extra=()):
    vals = [v for v in list(values) + list(extra) if math.isfinite(v) and (v > 0 or not log)]
    if not vals:
        return (1.0, 10.0) if log else (0.0, 1.0)
    lo, hi = min(vals), max(vals)
    if log:
        return (lo / 1.5, hi * 1.5) if lo == hi else (lo / 1.1, hi * 1.1)
    if lo == hi:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo, hi, log, count=5):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0 ** k for k in range(a, b + 1) if lo <= 10.0 ** k <= hi]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def scatter_svg(x, y, title="", xlabel="", ylabel="", hlines=(), logx=False, logy=False,
                fit_line=None, axes: Axes | None = None) -> str:
    """SVG document with one ``<circle class="marker">`` per point.

    ``hlines`` is a sequence of ``(y, label)`` reference lines; ``fit_line`` is
    ``(slope, intercept)`` of ``log10 y = slope log10 x + intercept``.
    """
    x, y = [float(v) for v in x], [float(v) for v in y]
    pts = [(a, b) for a, b in zip(x, y) if (a > 0 or not logx) and (b > 0 or not logy)]
    if axes is None:
        xr = _range([p[0] for p in pts], logx)
        yr = _range([p[1] for p in pts], logy, [h[0] for h in hlines])
        axes = Axes(xr[0], xr[1], yr[0], yr[1], logx, logy)
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line class="axis" x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{bottom}" x2="{left}" y2="{top}" stroke="black"/>',
    ]
    for t in _ticks(axes.xmin, axes.xmax, logx):
        px = axes.px(t)
        out.append(f'<line x1="{_fmt(px)}" y1="{bottom}" x2="{_fmt(px)}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px)}" y="{bottom + 18}" text-anchor="middle" font-size="11">{t:.3g}</text>')
    for t in _ticks(axes.ymin, axes.ymax, logy):
        py = axes.py(t)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(py)}" x2="{left}" y2="{_fmt(py)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(py + 4)}" text-anchor="end" font-size="11">{t:.3g}</text>')
    out.append(f'<text x="{(left + right) / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(top + bottom) / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {(top + bottom) / 2})">{escape(ylabel)}</text>')
    for hy, label in hlines:
        if axes.ymin <= hy <= axes.ymax:
            py = _fmt(axes.py(hy))
            out.append(f'<line class="envelope" x1="{left}" y1="{py}" x2="{right}" y2="{py}" '
                       f'stroke="gray" stroke-dasharray="4 3"/>')
            out.append(f'<text x="{right - 4}" y="{py}" dy="-3" text-anchor="end" font-size="10">'
                       f'{escape(label)}</text>')
    if fit_line is not None and logx and logy:
        slope, icpt = fit_line
        xa, xb = axes.xmin, axes.xmax
        ya, yb = 10 ** (slope * math.log10(xa) + icpt), 10 ** (slope * math.log10(xb) + icpt)
        out.append(f'<line class="fit" x1="{_fmt(axes.px(xa))}" y1="{_fmt(axes.py(ya))}" '
                   f'x2="{_fmt(axes.px(xb))}" y2="{_fmt(axes.py(yb))}" stroke="steelblue"/>')
        out.append(f'<text x="{right - 4}" y="{top + 14}" text-anchor="end" font-size="11">'
                   f'slope {slope:.3f}</text>')
    for a, b in pts:
        out.append(f'<circle class="marker" cx="{_fmt(axes.px(a))}" cy="{_fmt(axes.py(b))}" r="3" '
                   f'fill="crimson"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plots(reports: dict, out_dir) -> list[Path]:
    """Write one SVG per available report kind.

    ``reports`` may hold ``"ratios"`` (list of dicts with ``lambda`` and
    ``ratio``), ``"nodal"`` (dicts with ``lambda`` and ``normalized``),
    ``"weyl"`` (a WeylReport dict) and ``"cluster_grad"`` (a ClusterGradReport
    dict).  Missing or empty entries give empty-axes plots only for ratios.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def dump(name, svg):
        path = out_dir / name
        path.write_text(svg)
        written.append(path)

    ratios = reports.get("ratios", [])
    lam = [r["lambda"] for r in ratios]
    rat = [r["ratio"] for r in ratios]
    lines = [(0.15, "0.15"), (3.0, "3.0")]
    if rat:
        lines += [(min(rat), "min"), (max(rat), "max")]
    dump("ratios.svg", scatter_svg(lam, rat, "gradient ratio", "lambda", "ratio", hlines=lines))
    if reports.get("nodal"):
        nd = reports["nodal"]
        dump("nodal_density.svg", scatter_svg([r["lambda"] for r in nd], [r["normalized"] for r in nd],
                                              "normalized nodal distance", "lambda", "lambda r_max"))
    if reports.get("weyl"):
        w = reports["weyl"]
        dump("weyl.svg", scatter_svg(w["lambda_grid"], w["weyl_ratio"], "local Weyl ratio", "lambda",
                                     "weyl ratio", hlines=[(1.0, "1")]))
    if reports.get("cluster_grad"):
        c = reports["cluster_grad"]
        fit = None
        if c.get("slope") is not None:
            xs = [a for a, s in zip(c["lambda_grid"], c["sums"]) if a > 0 and s > 0]
            ys = [math.log10(s) for a, s in zip(c["lambda_grid"], c["sums"]) if a > 0 and s > 0]
            icpt = sum(ys) / len(ys) - c["slope"] * sum(math.log10(a) for a in xs) / len(xs)
            fit = (c["slope"], icpt)
        dump("cluster_grad.svg", scatter_svg(c["lambda_grid"], c["sums"], "band gradient sums", "lambda",
                                             "sum |grad e_j|^2", logx=True, logy=True, fit_line=fit))
    return written
