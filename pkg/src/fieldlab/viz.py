"""Plain SVG heatmaps for grid fields (no plotting dependencies).

Good enough to eyeball simulations, masks, and predictions; not a mapping
tool. Colors run through a fixed dark-blue -> green -> yellow ramp scaled to
the field's own min/max (a constant field renders mid-ramp).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import GridField, ObservationMask

__all__ = ["field_to_svg", "save_svg"]

# Anchor colors of the value ramp, evenly spaced on [0, 1].
_RAMP = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))


def _color(u: float) -> str:
    pos = u * (len(_RAMP) - 1)
    i = min(int(pos), len(_RAMP) - 2)
    t = pos - i
    r, g, b = (round((1 - t) * a + t * b_) for a, b_ in zip(_RAMP[i], _RAMP[i + 1]))
    return f"#{r:02x}{g:02x}{b:02x}"


def field_to_svg(field: GridField, mask: ObservationMask | None = None,
                 cell_px: int = 12, title: str | None = None) -> str:
    """Render a field as an SVG string; observed cells get a dot if a mask
    is supplied."""
    if mask is not None:
        mask.require_same_shape(field)
    v = field.values
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        u = (v - lo) / (hi - lo)
    else:
        u = np.full_like(v, 0.5)
    h, w = v.shape
    header = 22 if title else 0
    footer = 16
    width, height = w * cell_px, h * cell_px + header + footer
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">']
    if title:
        parts.append(f'<text x="2" y="14" font-family="sans-serif" '
                     f'font-size="12">{title}</text>')
    for i in range(h):
        for j in range(w):
            x, y = j * cell_px, header + i * cell_px
            parts.append(f'<rect x="{x}" y="{y}" width="{cell_px}" '
                         f'height="{cell_px}" fill="{_color(float(u[i, j]))}"/>')
            if mask is not None and mask.bits[i, j]:
                cx, cy = x + cell_px / 2, y + cell_px / 2
                parts.append(f'<circle cx="{cx:g}" cy="{cy:g}" '
                             f'r="{cell_px / 6:g}" fill="white" '
                             f'stroke="black" stroke-width="0.5"/>')
    parts.append(f'<text x="2" y="{height - 4}" font-family="sans-serif" '
                 f'font-size="10">min {lo:.3g}, max {hi:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def save_svg(svg: str, path: str | Path) -> None:
    Path(path).write_text(svg, encoding="utf-8")
