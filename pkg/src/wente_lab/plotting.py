"""Static log-x line charts of a sweep CSV, written as plain SVG.

Every marker carries ``data-x``/``data-y`` attributes holding the plotted
values with 17 significant digits, so charts can be checked against the CSV.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from pathlib import Path
from xml.sax.saxutils import escape

from .sweep import SweepParseError, SweepRow, read_sweep_csv

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=80, right=180, top=40, bottom=60)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def line_chart(title: str, ylabel: str, series: "OrderedDict[str, list[tuple[float, float]]]") -> str:
    """One SVG chart; x is plotted as ``log10``."""
    xs = [math.log10(x) for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts if math.isfinite(y)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x0 == x1:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y0 == y1:
        pad = abs(y0) * 0.1 or 1.0
        y0, y1 = y0 - pad, y1 + pad
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (math.log10(x) - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 - 1e-9 <= e <= x1 + 1e-9:
            x = MARGIN["left"] + (e - x0) / (x1 - x0) * pw
            out.append(f'<line x1="{x:.2f}" y1="{MARGIN["top"] + ph}" x2="{x:.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 20}" text-anchor="middle" font-family="sans-serif" font-size="12">1e{e}</text>')
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{y:.2f}" x2="{MARGIN["left"]}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="12">{t:.4g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-family="sans-serif" font-size="13">epsilon</text>')
    out.append(f'<text x="18" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        good = [(x, y) for x, y in pts if math.isfinite(y)]
        if len(good) > 1:
            path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in good)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<g class="series" data-name="{escape(name)}" fill="{color}">')
        for x, y in good:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" data-x="{_num(x)}" data-y="{_num(y)}"/>')
        out.append("</g>")
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<rect x="{lx}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{lx + 16}" y="{ly + 1}" font-family="sans-serif" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _by_epsilon(rows: list[SweepRow]) -> list[SweepRow]:
    """First row per epsilon (disc columns repeat across Robin sets)."""
    seen = OrderedDict()
    for r in rows:
        seen.setdefault(r.epsilon, r)
    return list(seen.values())


def _coeff_label(r: SweepRow) -> str:
    return f"robin ({r.alpha:g},{r.beta:g},{r.gamma:g})"


def chart_series(rows: list[SweepRow]) -> dict:
    """``{file stem: (title, ylabel, series)}`` for the four charts."""
    disc = _by_epsilon(rows)
    energies = OrderedDict([("neumann", [(r.epsilon, r.neumann_grad_l2) for r in disc])])
    for r in rows:
        energies.setdefault(_coeff_label(r), []).append((r.epsilon, r.robin_grad_l2))
    wente = OrderedDict([("(|u|_inf + |Du|_2) / |DV|_2^2", [(r.epsilon, r.wente_ratio) for r in disc])])
    l21 = OrderedDict([
        ("|DV| full field", [(r.epsilon, r.grad_V_l21) for r in disc]),
        ("|m'| half-plane", [(r.epsilon, r.mprime_l21) for r in disc]),
    ])
    hm1 = OrderedDict([("f in H^-1", [(r.epsilon, r.f_hminus1) for r in disc])])
    return {
        "energies": ("Neumann and Robin gradient norms", "||grad v||_2", energies),
        "wente_ratio": ("Dirichlet Wente ratio", "ratio", wente),
        "l21_norms": ("L^{2,1} norms", "L^{2,1}", l21),
        "hminus1": ("H^-1 norm of the Jacobian", "||f||_{H^-1}", hm1),
    }


def plot_sweep(csv_path, out_dir) -> list[Path]:
    rows = read_sweep_csv(csv_path)
    if not rows:
        raise SweepParseError(f"{csv_path}: line 2: no data rows")
    charts = {stem: line_chart(*spec) for stem, spec in chart_series(rows).items()}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, svg in charts.items():
        p = out_dir / f"{stem}.svg"
        p.write_text(svg)
        paths.append(p)
    return paths
