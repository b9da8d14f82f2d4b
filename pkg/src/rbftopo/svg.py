"""Deterministic SVG output for deformed grids and determinant profiles.

Every coordinate is written with exactly six decimals and elements are emitted
in input order, so identical input gives byte-identical files.
"""
import numpy as np

WIDTH_PX = 600
_HEADER = ('<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
           '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           'width="{w}" height="{h}" viewBox="{vb}">\n')


def _num(v: float) -> str:
    # adding 0.0 folds -0.0 into 0.0
    return f"{float(v) + 0.0:.6f}"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Frame:
    """World-to-SVG mapping with y pointing up."""

    def __init__(self, points, pad=0.05):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(points) == 0:
            points = np.array([[0.0, 0.0], [1.0, 1.0]])
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        size = max(float((hi - lo).max()), 1e-12)
        self.xmin = lo[0] - pad * size
        self.ymax = hi[1] + pad * size
        self.width = (hi[0] - lo[0]) + 2 * pad * size
        self.height = (hi[1] - lo[1]) + 2 * pad * size
        self.size = size

    def xy(self, p):
        return _num(p[0] - self.xmin), _num(self.ymax - p[1])

    def header(self):
        w = WIDTH_PX
        h = max(1, int(round(WIDTH_PX * self.height / self.width)))
        vb = f"0 0 {_num(self.width)} {_num(self.height)}"
        return _HEADER.format(w=w, h=h, vb=vb)


def _polyline(frame, pts):
    coords = " ".join("{},{}".format(*frame.xy(p)) for p in pts)
    return f'<polyline points="{coords}"/>'


def _circle(frame, p, radius):
    cx, cy = frame.xy(p)
    return f'<circle class="source" cx="{cx}" cy="{cy}" r="{_num(radius)}"/>'


def _star(frame, p, radius):
    # asterisk: three strokes through the point
    cx, cy = p
    parts = []
    for angle in (90.0, 30.0, -30.0):
        a = np.deg2rad(angle)
        dx, dy = radius * np.cos(a), radius * np.sin(a)
        x0, y0 = frame.xy((cx - dx, cy - dy))
        x1, y1 = frame.xy((cx + dx, cy + dy))
        parts.append(f"M{x0},{y0} L{x1},{y1}")
    return f'<path class="target" d="{" ".join(parts)}"/>'


def render_deformed_grid(polylines, source_landmarks=(), target_landmarks=(),
                         title=None) -> bytes:
    src = np.asarray(source_landmarks, dtype=float).reshape(-1, 2)
    tgt = np.asarray(target_landmarks, dtype=float).reshape(-1, 2)
    every = [np.asarray(p, dtype=float).reshape(-1, 2) for p in polylines] + [src, tgt]
    frame = _Frame(np.concatenate(every) if every else np.empty((0, 2)))
    stroke = frame.size * 0.002
    marker = frame.size * 0.015

    out = [frame.header()]
    if title:
        out.append(f"<title>{_escape(title)}</title>\n")
    out.append(f'<rect x="0" y="0" width="{_num(frame.width)}" height="{_num(frame.height)}" '
               'fill="#ffffff"/>\n')
    out.append(f'<g class="grid" fill="none" stroke="#303030" stroke-width="{_num(stroke)}">\n')
    for line in polylines:
        out.append(_polyline(frame, line) + "\n")
    out.append("</g>\n")
    if len(src):
        out.append(f'<g class="sources" fill="none" stroke="#1f4fb4" '
                   f'stroke-width="{_num(2 * stroke)}">\n')
        out.extend(_circle(frame, p, marker) + "\n" for p in src)
        out.append("</g>\n")
    if len(tgt):
        out.append(f'<g class="targets" fill="none" stroke="#c0282d" '
                   f'stroke-width="{_num(2 * stroke)}">\n')
        out.extend(_star(frame, p, marker) + "\n" for p in tgt)
        out.append("</g>\n")
    out.append("</svg>\n")
    return "".join(out).encode("utf-8")


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def render_profiles(series, title=None) -> bytes:
    """Line chart with a zero reference line.

    Each series is ``(label, xs, ys, group, dashed)``; series sharing a group
    share a color.
    """
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series] + [np.zeros(1)])
    x0, x1 = xs_all.min(), xs_all.max()
    y0, y1 = ys_all.min(), ys_all.max()
    # plot in a unit box; the aspect is fixed by the chart, not the data
    def to_box(x, y):
        return ((x - x0) / max(x1 - x0, 1e-12), 0.7 * (y - y0) / max(y1 - y0, 1e-12))

    corners = [to_box(x0, y0), to_box(x1, y1)]
    frame = _Frame(corners, pad=0.12)
    stroke = 0.004
    out = [frame.header()]
    if title:
        out.append(f"<title>{_escape(title)}</title>\n")
    out.append(f'<rect x="0" y="0" width="{_num(frame.width)}" height="{_num(frame.height)}" '
               'fill="#ffffff"/>\n')
    zx0, zy = frame.xy(to_box(x0, 0.0))
    zx1, _ = frame.xy(to_box(x1, 0.0))
    out.append(f'<path class="zero" d="M{zx0},{zy} L{zx1},{zy}" stroke="#999999" '
               f'stroke-width="{_num(stroke / 2)}" fill="none"/>\n')
    for label, xs, ys, group, dashed in series:
        color = _PALETTE[group % len(_PALETTE)]
        pts = [to_box(x, y) for x, y in zip(xs, ys)]
        dash = ' stroke-dasharray="0.02,0.01"' if dashed else ""
        out.append(f'<g class="series" fill="none" stroke="{color}" '
                   f'stroke-width="{_num(stroke)}"{dash}>'
                   f'<title>{_escape(label)}</title>{_polyline(frame, pts)}</g>\n')
    lx, ly = frame.xy(to_box(x0, y1))
    for k, (label, *_rest) in enumerate(series):
        ty = float(ly) + 0.035 * (k + 1)
        out.append(f'<text x="{lx}" y="{_num(ty)}" font-size="0.03" '
                   f'fill="#000000">{_escape(label)}</text>\n')
    out.append("</svg>\n")
    return "".join(out).encode("utf-8")
