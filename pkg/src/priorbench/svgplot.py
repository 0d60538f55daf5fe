"""Minimal static SVG emission for training curves and sweep scatters.

Hand-built markup, no drawing dependency.  Output is a pure function of the
input series: same data, byte-identical file.
"""

import numpy as np

WIDTH = 640
HEIGHT = 420
MARGIN_LEFT = 62
MARGIN_RIGHT = 16
MARGIN_TOP = 34
MARGIN_BOTTOM = 46
PALETTE = ("#1f6fb2", "#d2691e", "#3a9a5c", "#8a4fbf", "#b2334f", "#6b6b6b")
N_TICKS = 5


def _fmt(v: float) -> str:
    return f"{float(v):.6g}"


def _escape(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


class _Frame:
    """Maps data coordinates onto the plot rectangle, y inverted."""

    def __init__(self, xs_all, ys_all):
        xs = np.concatenate([np.asarray(x, dtype=np.float64) for x in xs_all])
        ys = np.concatenate([np.asarray(y, dtype=np.float64) for y in ys_all])
        if xs.size == 0:
            raise ValueError("cannot plot empty data")
        self.x_lo, self.x_hi = _padded_span(xs)
        self.y_lo, self.y_hi = _padded_span(ys)
        self.px_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        self.px_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def x(self, v):
        frac = (np.asarray(v, dtype=np.float64) - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN_LEFT + frac * self.px_w

    def y(self, v):
        frac = (np.asarray(v, dtype=np.float64) - self.y_lo) / (self.y_hi - self.y_lo)
        return MARGIN_TOP + (1.0 - frac) * self.px_h


def _padded_span(vals):
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if hi == lo:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.1
    else:
        pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _header(title: str) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_escape(title)}</text>',
    ]


def _axes(frame: _Frame, x_label: str, y_label: str) -> list:
    parts = []
    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#333333"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#333333"/>')
    for t in np.linspace(frame.x_lo, frame.x_hi, N_TICKS):
        px = frame.x(t)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 4}" '
                     f'stroke="#333333"/>')
        parts.append(f'<text x="{px:.1f}" y="{y0 + 17}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{_fmt(t)}</text>')
    for t in np.linspace(frame.y_lo, frame.y_hi, N_TICKS):
        py = frame.y(t)
        parts.append(f'<line x1="{x0 - 4}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" '
                     f'stroke="#333333"/>')
        parts.append(f'<text x="{x0 - 7}" y="{py + 3:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{_fmt(t)}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 10}" '
                 f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                 f'{_escape(x_label)}</text>')
    parts.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="11" '
                 f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">'
                 f'{_escape(y_label)}</text>')
    return parts


def _legend(entries) -> list:
    parts = []
    y = MARGIN_TOP + 8
    for label, color in entries:
        x = WIDTH - MARGIN_RIGHT - 150
        parts.append(f'<rect x="{x}" y="{y - 8}" width="10" height="10" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{x + 15}" y="{y + 1}" font-family="sans-serif" '
                     f'font-size="11">{_escape(label)}</text>')
        y += 16
    return parts


def render_line_chart(path: str, title: str, x_label: str, y_label: str,
                      series: list) -> None:
    """Write a line chart for ``series`` = [(label, xs, ys, style), ...].

    ``style`` is an optional dict with ``color``, ``opacity``, ``width``
    keys; omitted entries use the palette and solid strokes.
    """
    if not series:
        raise ValueError("need at least one series")
    frame = _Frame([s[1] for s in series], [s[2] for s in series])
    parts = _header(title) + _axes(frame, x_label, y_label)
    legend = []
    for i, entry in enumerate(series):
        label, xs, ys = entry[0], entry[1], entry[2]
        style = entry[3] if len(entry) > 3 else {}
        color = style.get("color", PALETTE[i % len(PALETTE)])
        opacity = style.get("opacity", 1.0)
        width = style.get("width", 1.5)
        pts = " ".join(f"{px:.1f},{py:.1f}"
                       for px, py in zip(frame.x(xs), frame.y(ys)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="{width}" stroke-opacity="{opacity}"/>')
        legend.append((label, color))
    parts += _legend(legend)
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def render_scatter(path: str, title: str, x_label: str, y_label: str,
                   groups: dict) -> None:
    """Write a scatter chart for ``groups`` = {label: (xs, ys)}."""
    if not groups:
        raise ValueError("need at least one point group")
    items = list(groups.items())
    frame = _Frame([g[1][0] for g in items], [g[1][1] for g in items])
    parts = _header(title) + _axes(frame, x_label, y_label)
    legend = []
    for i, (label, (xs, ys)) in enumerate(items):
        color = PALETTE[i % len(PALETTE)]
        for px, py in zip(frame.x(np.atleast_1d(xs)), frame.y(np.atleast_1d(ys))):
            parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="3.5" '
                         f'fill="{color}" fill-opacity="0.85"/>')
        legend.append((label, color))
    parts += _legend(legend)
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
