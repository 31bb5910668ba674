"""Minimal deterministic SVG line plots for scenario artifacts.

Hand-rolled on purpose: byte-identical output for identical data, no
plotting-library metadata or version churn in the artifacts.
"""

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 56, 16, 24, 40
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = span / (count - 1)
    return [lo + i * step for i in range(count)]


def line_plot(path, x, series, labels=None, title="", xlabel="t",
              ylabel="value"):
    """Write a polyline plot of one or more series against x."""
    x = [float(v) for v in x]
    series = [[float(v) for v in s] for s in series]
    labels = labels or [f"series {i + 1}" for i in range(len(series))]
    xmin, xmax = min(x), max(x)
    ymin = min(min(s) for s in series)
    ymax = max(max(s) for s in series)
    if ymax == ymin:
        ymax = ymin + 1.0
    pad = 0.05 * (ymax - ymin)
    ymin -= pad
    ymax += pad
    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def sx(v):
        return _ML + pw * (v - xmin) / (xmax - xmin) if xmax > xmin else _ML

    def sy(v):
        return _MT + ph * (1.0 - (v - ymin) / (ymax - ymin))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333" stroke-width="1"/>',
    ]
    for tv in _ticks(xmin, xmax):
        px = sx(tv)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_MT + ph}" x2="{_fmt(px)}" '
                     f'y2="{_MT + ph + 4}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{_MT + ph + 16}" '
                     f'font-size="10" text-anchor="middle" '
                     f'font-family="monospace">{tv:.3g}</text>')
    for tv in _ticks(ymin, ymax):
        py = sy(tv)
        parts.append(f'<line x1="{_ML - 4}" y1="{_fmt(py)}" x2="{_ML}" '
                     f'y2="{_fmt(py)}" stroke="#333"/>')
        parts.append(f'<text x="{_ML - 6}" y="{_fmt(py + 3)}" font-size="10" '
                     f'text-anchor="end" font-family="monospace">{tv:.3g}</text>')
    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_fmt(sx(xv))},{_fmt(sy(yv))}"
                       for xv, yv in zip(x, s))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.2"/>')
        parts.append(f'<text x="{_ML + 8 + 110 * i}" y="{_MT + 14}" '
                     f'font-size="11" fill="{color}" '
                     f'font-family="monospace">{labels[i]}</text>')
    if title:
        parts.append(f'<text x="{_W // 2}" y="14" font-size="12" '
                     f'text-anchor="middle" font-family="monospace">{title}</text>')
    parts.append(f'<text x="{_ML + pw // 2}" y="{_H - 8}" font-size="11" '
                 f'text-anchor="middle" font-family="monospace">{xlabel}</text>')
    parts.append(f'<text x="14" y="{_MT + ph // 2}" font-size="11" '
                 f'text-anchor="middle" font-family="monospace" '
                 f'transform="rotate(-90 14 {_MT + ph // 2})">{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
