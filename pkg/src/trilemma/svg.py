"""Deterministic SVG charts: elbow curve, dendrogram, scatter matrix.

Output is plain text assembled in a fixed order with fixed numeric
formatting, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .hier import Dendrogram
from .validity import WcssCurve

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
FONT = 'font-family="sans-serif"'


def _f(v: float) -> str:
    return f"{v:.2f}"


def _doc(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">'
    )
    return "\n".join([head, f'<rect width="{_f(width)}" height="{_f(height)}" fill="white"/>', *body, "</svg>"]) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def elbow_svg(curve: WcssCurve, title: str = "Elbow method") -> str:
    if not curve.entries:
        raise ValueError("cannot draw an empty curve")
    width, height = 560.0, 380.0
    left, right, top, bottom = 70.0, 20.0, 40.0, 50.0
    ks = curve.ks
    ws = curve.values
    kmin, kmax = ks[0], ks[-1]
    wmax = max(ws) if max(ws) > 0 else 1.0

    def px(k):
        span = kmax - kmin or 1
        return left + (k - kmin) / span * (width - left - right)

    def py(w):
        return top + (1 - w / wmax) * (height - top - bottom)

    body = [f'<text x="{_f(width / 2)}" y="22" text-anchor="middle" {FONT} font-size="15">{escape(title)}</text>']
    body.append(
        f'<line class="axis" x1="{_f(left)}" y1="{_f(height - bottom)}" x2="{_f(width - right)}" '
        f'y2="{_f(height - bottom)}" stroke="black"/>'
    )
    body.append(f'<line class="axis" x1="{_f(left)}" y1="{_f(top)}" x2="{_f(left)}" y2="{_f(height - bottom)}" stroke="black"/>')
    for k in ks:
        body.append(f'<text x="{_f(px(k))}" y="{_f(height - bottom + 18)}" text-anchor="middle" {FONT} font-size="11">{k}</text>')
    for t in _nice_ticks(0.0, wmax):
        body.append(f'<text x="{_f(left - 6)}" y="{_f(py(t) + 4)}" text-anchor="end" {FONT} font-size="11">{t:g}</text>')
    body.append(f'<text x="{_f(width / 2)}" y="{_f(height - 10)}" text-anchor="middle" {FONT} font-size="12">number of clusters k</text>')
    body.append(f'<text x="16" y="{_f(height / 2)}" transform="rotate(-90 16 {_f(height / 2)})" text-anchor="middle" {FONT} font-size="12">WCSS</text>')
    pts = " ".join(f"{_f(px(k))},{_f(py(w))}" for k, w in zip(ks, ws))
    body.append(f'<polyline class="curve" points="{pts}" fill="none" stroke="{PALETTE[0]}" stroke-width="2"/>')
    for k, w in zip(ks, ws):
        body.append(f'<circle class="point" data-k="{k}" cx="{_f(px(k))}" cy="{_f(py(w))}" r="4" fill="{PALETTE[0]}"/>')
    if curve.knee is not None:
        kk = curve.knee.k
        wk = ws[ks.index(kk)]
        body.append(
            f'<circle class="knee" data-k="{kk}" data-method="{curve.knee.method}" cx="{_f(px(kk))}" '
            f'cy="{_f(py(wk))}" r="9" fill="none" stroke="{PALETTE[3]}" stroke-width="2"/>'
        )
    return _doc(width, height, body)


def emit_elbow_svg(curve: WcssCurve, path, title: str = "Elbow method") -> Path:
    return write_text(path, elbow_svg(curve, title))


def dendrogram_svg(dg: Dendrogram, title: str = "Dendrogram") -> str:
    n = dg.n
    leaf_gap = 18.0
    left, right, top, bottom = 60.0, 20.0, 40.0, 120.0
    width = left + right + leaf_gap * max(n - 1, 1)
    height = 420.0
    order = dg.leaf_order()
    xpos = {leaf: left + i * leaf_gap for i, leaf in enumerate(order)}
    hmax = max((m.height for m in dg.merges), default=0.0)
    scale = (height - top - bottom) / hmax if hmax > 0 else 1.0
    base = height - bottom

    def py(h):
        return base - h * scale

    body = [f'<text x="{_f(width / 2)}" y="22" text-anchor="middle" {FONT} font-size="15">{escape(title)}</text>']
    body.append(f'<line class="axis" x1="{_f(left - 20)}" y1="{_f(top)}" x2="{_f(left - 20)}" y2="{_f(base)}" stroke="black"/>')
    node_x = dict(xpos)
    node_y = {leaf: base for leaf in range(n)}
    for i, m in enumerate(dg.merges):
        node = n + i
        y = py(m.height)
        xl, xr = node_x[m.left], node_x[m.right]
        d = (
            f"M{_f(xl)},{_f(node_y[m.left])} V{_f(y)} H{_f(xr)} V{_f(node_y[m.right])}"
        )
        body.append(f'<path class="join" data-merge="{i}" data-height="{m.height!r}" d="{d}" fill="none" stroke="black"/>')
        node_x[node] = (xl + xr) / 2
        node_y[node] = y
    for leaf in order:
        x = xpos[leaf]
        body.append(
            f'<text class="leaf" x="{_f(x)}" y="{_f(base + 8)}" transform="rotate(90 {_f(x)} {_f(base + 8)})" '
            f'{FONT} font-size="10">{escape(dg.leaves[leaf])}</text>'
        )
    return _doc(width, height, body)


def emit_dendrogram_svg(dg: Dendrogram, path, title: str = "Dendrogram") -> Path:
    return write_text(path, dendrogram_svg(dg, title))


def sturges_bins(n: int) -> int:
    return math.ceil(math.log2(n)) + 1 if n > 0 else 1


def pairplot_svg(points, columns, labels=None, title: str = "Pair plot") -> str:
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != 4:
        raise ValueError(f"pair plot needs exactly 4 columns, got shape {x.shape}")
    n, d = x.shape
    labels = np.zeros(n, dtype=int) if labels is None else np.asarray(labels)
    _, codes = np.unique(labels, return_inverse=True)
    panel, gap, margin = 150.0, 12.0, 60.0
    width = height = margin * 2 + d * panel + (d - 1) * gap
    bins = sturges_bins(n)
    lo = x.min(axis=0)
    hi = x.max(axis=0)

    def scale(v, j, size):
        span = hi[j] - lo[j]
        return 0.5 * size if span == 0 else (v - lo[j]) / span * size

    body = [f'<text x="{_f(width / 2)}" y="30" text-anchor="middle" {FONT} font-size="15">{escape(title)}</text>']
    for r in range(d):
        for c in range(d):
            ox = margin + c * (panel + gap)
            oy = margin + r * (panel + gap)
            kind = "hist" if r == c else "scatter"
            body.append(f'<g class="panel {kind}" data-row="{r}" data-col="{c}" transform="translate({_f(ox)},{_f(oy)})">')
            body.append(f'<rect width="{_f(panel)}" height="{_f(panel)}" fill="none" stroke="#999"/>')
            if r == c:
                counts, _ = np.histogram(x[:, c], bins=bins)
                cmax = counts.max() or 1
                bw = panel / bins
                for b, cnt in enumerate(counts):
                    h = cnt / cmax * (panel - 4)
                    body.append(
                        f'<rect class="bin" data-count="{int(cnt)}" x="{_f(b * bw)}" y="{_f(panel - h)}" '
                        f'width="{_f(bw)}" height="{_f(h)}" fill="{PALETTE[0]}" fill-opacity="0.6"/>'
                    )
            else:
                for i in range(n):
                    cx = scale(x[i, c], c, panel - 8) + 4
                    cy = panel - 4 - scale(x[i, r], r, panel - 8)
                    body.append(f'<circle class="pt" cx="{_f(cx)}" cy="{_f(cy)}" r="2.5" fill="{PALETTE[codes[i] % len(PALETTE)]}"/>')
            body.append("</g>")
        body.append(
            f'<text x="{_f(margin - 8)}" y="{_f(margin + r * (panel + gap) + panel / 2)}" text-anchor="end" '
            f'{FONT} font-size="11">{escape(columns[r])}</text>'
        )
    for c in range(d):
        body.append(
            f'<text x="{_f(margin + c * (panel + gap) + panel / 2)}" y="{_f(height - margin + 20)}" '
            f'text-anchor="middle" {FONT} font-size="11">{escape(columns[c])}</text>'
        )
    return _doc(width, height, body)


def emit_pairplot_svg(fm, labels, path, title: str = "Pair plot") -> Path:
    return write_text(path, pairplot_svg(fm.points, fm.columns, labels, title))
