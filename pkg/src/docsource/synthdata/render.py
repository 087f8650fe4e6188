"""Procedural text pages: letter-like connected stroke glyphs on a jittered grid."""
from dataclasses import asdict, dataclass

import numpy as np

from ..exceptions import LayoutOverflow

STYLES = ("serif", "sans", "mono")
INK_LEVEL = 24.0
PAPER_LEVEL = 255.0


@dataclass
class PageSpec:
    width: int = 3120
    height: int = 4160
    glyph_count: int = 2200
    glyph_min: int = 36
    glyph_max: int = 52
    margin: int = 120
    seed: int = 0
    style: int = 0

    def to_dict(self):
        return asdict(self)


# ----------------------------------------------------------- glyph shapes

def _arc(cx, cy, rx, ry, a0, a1, n=7):
    t = np.linspace(a0, a1, n)
    return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=1)


def _glyph_strokes(rng, style):
    """Polylines in the unit box (x right, y down); all strokes touch the first.

    Returns a list of ``(points, relative_thickness)``.
    """
    strokes = []
    # main element: a stem or a bowl
    if rng.random() < (0.45 if style == 1 else 0.6):
        x = rng.uniform(0.15, 0.85)
        top = rng.choice([0.0, 0.3])
        strokes.append((np.array([[x, top], [x + rng.uniform(-0.1, 0.1), 1.0]]), 1.0))
    else:
        cx, cy = rng.uniform(0.4, 0.6), rng.uniform(0.5, 0.65)
        strokes.append((_arc(cx, cy, 0.4, 0.35, 0.0, 2 * np.pi, 13), 1.0))

    for _ in range(rng.integers(1, 4)):
        base, _ = strokes[rng.integers(len(strokes))]
        # anchor on an existing vertex so the glyph stays connected
        anchor = base[rng.integers(len(base))]
        kind = rng.random()
        thin = 0.65 if style == 0 else 1.0
        if kind < 0.4:
            end = rng.uniform(0.0, 1.0, size=2)
            strokes.append((np.array([anchor, end]), thin))
        elif kind < 0.75:
            rx, ry = rng.uniform(0.2, 0.35), rng.uniform(0.15, 0.3)
            sweep = rng.uniform(0.8, 1.6) * np.pi * rng.choice([-1.0, 1.0])
            # starts at angle pi, i.e. exactly on the anchor
            pts = _arc(anchor[0] + rx, anchor[1], rx, ry, np.pi, np.pi + sweep, 7)
            strokes.append((np.clip(pts, 0, 1), thin))
        else:
            y = anchor[1]
            strokes.append((np.array([[anchor[0], y], [rng.uniform(0.0, 1.0), y]]), thin))

    if style in (0, 2):
        # serifs: short bars across the ends of the first stroke
        pts, _ = strokes[0]
        half = 0.22 if style == 0 else 0.3
        for end in (pts[0], pts[-1]):
            if len(pts) == 2:
                bar = np.array([[end[0] - half, end[1]], [end[0] + half, end[1]]])
                strokes.append((np.clip(bar, 0, 1), 0.6 if style == 0 else 1.0))
    return strokes


def _segment_distance(px, py, a, b):
    d = b - a
    denom = float(d @ d)
    if denom == 0.0:
        return np.hypot(px - a[0], py - a[1])
    t = np.clip(((px - a[0]) * d[0] + (py - a[1]) * d[1]) / denom, 0.0, 1.0)
    return np.hypot(px - (a[0] + t * d[0]), py - (a[1] + t * d[1]))


def _draw_glyph(canvas, top, left, w, h, thickness, strokes):
    """Anti-aliased stroke rendering into ``canvas`` (min-composited)."""
    pad = int(np.ceil(thickness)) + 1
    y0, x0 = top - pad, left - pad
    ys = np.arange(h + 2 * pad)[:, None] + 0.5 - pad
    xs = np.arange(w + 2 * pad)[None, :] + 0.5 - pad
    coverage = np.zeros((ys.size, xs.size))
    for pts, rel in strokes:
        half = 0.5 * thickness * rel
        scaled = pts * np.array([w - 1, h - 1]) + 0.5
        for a, b in zip(scaled[:-1], scaled[1:]):
            dist = _segment_distance(xs, ys, a, b)
            np.maximum(coverage, np.clip(half + 0.5 - dist, 0.0, 1.0), out=coverage)
    region = canvas[y0:y0 + ys.size, x0:x0 + xs.size]
    ink = PAPER_LEVEL - coverage * (PAPER_LEVEL - INK_LEVEL)
    np.minimum(region, ink, out=region)


# ------------------------------------------------------------------ layout

def _grid(spec):
    n = spec.glyph_count
    usable_w = spec.width - 2 * spec.margin
    usable_h = spec.height - 2 * spec.margin
    cols = max(1, int(round(np.sqrt(n * usable_w * 1.3 / usable_h))))
    rows = int(np.ceil(n / cols))
    return rows, cols, usable_w / cols, usable_h / rows


def render_page(spec):
    """Deterministic gray page: white paper, ``spec.glyph_count`` dark glyphs."""
    if spec.style not in range(len(STYLES)):
        raise ValueError(f"style must be one of 0..{len(STYLES) - 1}, got {spec.style}")
    page = np.full((spec.height, spec.width), PAPER_LEVEL)
    if spec.glyph_count <= 0:
        return page.astype(np.uint8)
    if not 0 < spec.glyph_min <= spec.glyph_max:
        raise ValueError("need 0 < glyph_min <= glyph_max")

    rows, cols, cell_w, cell_h = _grid(spec)
    gap = max(6, spec.glyph_max // 5)
    max_w = int(np.ceil(0.8 * spec.glyph_max))
    thick_max = 0.17 * spec.glyph_max
    # strokes reach half a thickness outside the nominal glyph box
    need_w = max_w + gap + thick_max
    need_h = spec.glyph_max + gap + thick_max
    if cell_w < need_w or cell_h < need_h or spec.margin < thick_max + 2:
        raise LayoutOverflow(
            f"{spec.glyph_count} glyphs of height <= {spec.glyph_max} do not fit a "
            f"{spec.width}x{spec.height} page ({rows}x{cols} cells of {cell_w:.1f}x{cell_h:.1f})")

    rng = np.random.default_rng([spec.seed, spec.style, 0x6C79])
    mono_w = int(round(0.7 * spec.glyph_max))
    for k in range(spec.glyph_count):
        r, c = divmod(k, cols)
        h = int(rng.integers(spec.glyph_min, spec.glyph_max + 1))
        w = mono_w if spec.style == 2 else int(round(h * rng.uniform(0.55, 0.8)))
        thickness = (0.14 if spec.style == 2 else 0.16) * h
        slack_x = cell_w - w - gap - thickness
        slack_y = cell_h - h - gap - thickness
        left = int(spec.margin + c * cell_w + (thickness + gap) / 2 + rng.uniform(0, max(slack_x, 0)))
        top = int(spec.margin + r * cell_h + (thickness + gap) / 2 + rng.uniform(0, max(slack_y, 0)))
        _draw_glyph(page, top, left, w, h, thickness, _glyph_strokes(rng, spec.style))
    return np.round(page).astype(np.uint8)
