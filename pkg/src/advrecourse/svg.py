"""Standalone SVG histograms for the radii distribution reports.

The emitted document is plain XML: one <rect> per bin with height
proportional to its count, axis paths, tick labels, and exactly one <line>
element marking the distribution mean.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .metrics import Histogram

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 50


def render_svg_histogram(hist: Histogram, title: str) -> str:
    """Render the histogram to an SVG document string."""
    if not hist.counts:
        raise ValueError("cannot render an empty histogram")
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    x0, y0 = MARGIN_L, MARGIN_T + plot_h  # plot origin (bottom left)
    max_count = max(max(hist.counts), 1)
    lo, hi = hist.edges[0], hist.edges[-1]
    span = (hi - lo) or 1.0

    def x_px(v: float) -> float:
        return x0 + (v - lo) / span * plot_w

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="{MARGIN_T - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{escape(title)}</text>',
    ]
    for i, count in enumerate(hist.counts):
        bar_h = count / max_count * plot_h
        bx = x_px(hist.edges[i])
        bw = x_px(hist.edges[i + 1]) - bx
        parts.append(
            f'<rect class="bar" x="{bx:.2f}" y="{y0 - bar_h:.2f}" '
            f'width="{bw:.2f}" height="{bar_h:.2f}" '
            f'fill="#4878a8" stroke="white" stroke-width="0.5"/>'
        )
    # axes as paths so the mean marker below stays the single line element
    parts.append(
        f'<path d="M {x0} {MARGIN_T} V {y0} H {x0 + plot_w}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        vx = lo + frac * span
        px = x_px(vx)
        parts.append(
            f'<path d="M {px:.2f} {y0} v 5" stroke="black" stroke-width="1"/>')
        parts.append(
            f'<text x="{px:.2f}" y="{y0 + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{vx:.3g}</text>')
    for frac in (0.5, 1.0):
        cy = y0 - frac * plot_h
        parts.append(
            f'<path d="M {x0} {cy:.2f} h -5" stroke="black" stroke-width="1"/>')
        parts.append(
            f'<text x="{x0 - 9}" y="{cy + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{frac * max_count:.3g}</text>')
    mean_px = x_px(min(max(hist.mean, lo), hi))
    parts.append(
        f'<line class="mean-marker" x1="{mean_px:.2f}" y1="{MARGIN_T}" '
        f'x2="{mean_px:.2f}" y2="{y0}" stroke="#c03030" stroke-width="2" '
        f'stroke-dasharray="6 3"/>'
    )
    parts.append(
        f'<text x="{mean_px + 5:.2f}" y="{MARGIN_T + 14}" font-family="sans-serif" '
        f'font-size="12" fill="#c03030">mean = {hist.mean:.4g}</text>'
    )
    parts.append(
        f'<text x="{x0 + plot_w / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">radius</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_svg_histogram(hist: Histogram, title: str, path: str) -> str:
    """Write the rendered histogram to `path`; returns the path."""
    doc = render_svg_histogram(hist, title)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(doc)
    return path
