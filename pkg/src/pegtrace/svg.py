"""Self-contained SVG figures on a 1000-unit viewport."""

from __future__ import annotations

from xml.sax.saxutils import quoteattr

SIZE = 1000.0
MARGIN = 40.0

_CLASS_COLOURS = {
    "Hyperbolic": "#1f5fa8",
    "NullX": "#b5482a",
    "NullY": "#b5842a",
    "Loop": "#2a8a4a",
}


class _Frame:
    """Maps data coordinates into the viewport, y pointing up."""

    def __init__(self, points):
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        self.x0, self.y0 = min(xs), min(ys)
        span = max(max(xs) - self.x0, max(ys) - self.y0) or 1.0
        self.k = (SIZE - 2 * MARGIN) / span

    def __call__(self, p) -> str:
        x = MARGIN + (p[0] - self.x0) * self.k
        y = SIZE - MARGIN - (p[1] - self.y0) * self.k
        return f"{x:.3f},{y:.3f}"


def _doc(body: list[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SIZE:g} {SIZE:g}" '
        f'width="{SIZE:g}" height="{SIZE:g}">'
    )
    return "\n".join([head, f"<title>{_esc(title)}</title>", '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def _esc(text: str) -> str:
    return quoteattr(text)[1:-1]


def polygon_svg(poly, diameters=(), title: str = "polygon") -> str:
    """The polygon with its positive diameters drawn as chords."""
    frame = _Frame(poly.vertices)
    pts = " ".join(frame(v) for v in poly.vertices)
    body = [f'<polygon points="{pts}" fill="#eef2f7" stroke="black" stroke-width="2"/>']
    for d in diameters:
        a, b = frame(d.q1.point).split(","), frame(d.q2.point).split(",")
        body.append(
            f'<line x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}" '
            'stroke="#c0392b" stroke-width="2" stroke-dasharray="8 4"/>'
        )
        for p in (a, b):
            body.append(f'<circle cx="{p[0]}" cy="{p[1]}" r="5" fill="#c0392b"/>')
    return _doc(body, title)


def shape_svg(components, title: str = "shape curves") -> str:
    """Shape curves (X, Y) of the traced components over the coordinate axes.

    Closed curves are shaded; arcs are drawn as open polylines.
    """
    curves = [c.shape_points() for c in components]
    allpts = [(0.0, 0.0)] + [p for cv in curves for p in cv]
    frame = _Frame(allpts)
    top = max(max(p[0] for p in allpts), max(p[1] for p in allpts))
    o, ex, ey = frame((0, 0)).split(","), frame((top, 0)).split(","), frame((0, top)).split(",")
    body = [
        f'<line x1="{o[0]}" y1="{o[1]}" x2="{ex[0]}" y2="{ex[1]}" stroke="black" stroke-width="1.5"/>',
        f'<line x1="{o[0]}" y1="{o[1]}" x2="{ey[0]}" y2="{ey[1]}" stroke="black" stroke-width="1.5"/>',
    ]
    for comp, cv in zip(components, curves):
        colour = _CLASS_COLOURS.get(comp.cls, "#555555")
        pts = " ".join(frame(p) for p in cv)
        if comp.is_arc:
            # close the hyperbolic arcs through the origin so the swept region is visible
            if comp.cls == "Hyperbolic":
                body.append(f'<polygon points="{frame((0, 0))} {pts}" fill="{colour}" fill-opacity="0.12" stroke="none"/>')
            body.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        else:
            body.append(f'<polygon points="{pts}" fill="{colour}" fill-opacity="0.2" stroke="{colour}" stroke-width="1.5"/>')
    return _doc(body, title)
