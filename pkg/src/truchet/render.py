"""SVG pictures of tilings, traced curves and collapse overlays.

Square ``(m, n)`` is the unit square centred at ``(m, n)``.  Tiles are drawn
as two quarter circles of radius 1/2 centred at opposite corners: ``T_1``
joins the bottom edge to the right edge and the top edge to the left edge,
``T_{-1}`` joins bottom to left and top to right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collapse import kept_mask
from .dynamics import State, trace
from .sequences import MINUS, PLUS, Sequence

MAX_SIDE = 2048


class InvalidViewport(ValueError):
    pass


@dataclass(frozen=True)
class Viewport:
    """Squares ``x0 <= m < x0 + width`` and ``y0 <= n < y0 + height``."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if not (0 < self.width <= MAX_SIDE and 0 < self.height <= MAX_SIDE):
            raise InvalidViewport(f"viewport sides must lie in 1..{MAX_SIDE}: {self.width}x{self.height}")

    def contains(self, m: int, n: int) -> bool:
        return self.x0 <= m < self.x0 + self.width and self.y0 <= n < self.y0 + self.height


class _Canvas:
    def __init__(self, vp: Viewport, scale: float):
        self.vp = vp
        self.scale = scale
        self.parts: list[str] = []

    def xy(self, x: float, y: float) -> tuple[float, float]:
        vp = self.vp
        return (x - vp.x0 + 0.5) * self.scale, (vp.y0 + vp.height - 0.5 - y) * self.scale

    def fmt(self, v: float) -> str:
        return f"{v:.3f}".rstrip("0").rstrip(".")

    def arc(self, p0, p1, corner, cls: str, extra: str = "") -> None:
        (x0, y0), (x1, y1), (cx, cy) = self.xy(*p0), self.xy(*p1), self.xy(*corner)
        # sweep flag 1 is the positive-angle (clockwise on screen) direction
        cross = (x0 - cx) * (y1 - cy) - (y0 - cy) * (x1 - cx)
        sweep = 1 if cross > 0 else 0
        r = self.fmt(self.scale / 2)
        f = self.fmt
        self.parts.append(
            f'<path class="{cls}"{extra} d="M {f(x0)} {f(y0)} A {r} {r} 0 0 {sweep} {f(x1)} {f(y1)}"/>'
        )


def tile_arcs(m: int, n: int, s: int):
    """The two arcs of the tile at ``(m, n)`` as ``(start, end, corner)`` triples."""
    b, t, l, r = (m, n - 0.5), (m, n + 0.5), (m - 0.5, n), (m + 0.5, n)
    if s == PLUS:
        return [(b, r, (m + 0.5, n - 0.5)), (t, l, (m - 0.5, n + 0.5))]
    return [(b, l, (m - 0.5, n - 0.5)), (t, r, (m + 0.5, n + 0.5))]


def curve_squares(state: State, budget: int, vp: Viewport | None = None) -> list[tuple[int, int]]:
    """Squares visited by the traced curve, restricted to ``vp`` when given."""
    res = trace(state, budget)
    sq = [(int(x), int(y)) for x, y in res.visited]
    return [s for s in sq if vp is None or vp.contains(*s)]


def render_tiling(
    omega: Sequence,
    omega_prime: Sequence,
    viewport: Viewport | tuple[int, int, int, int],
    highlight: tuple[int, int] | None = None,
    budget: int = 10_000,
    shade: bool = False,
    dividing_lines: bool = False,
    scale: float = 24.0,
) -> str:
    """An SVG 1.1 document of the tiling in ``viewport``.

    ``highlight`` is the inward normal of the edge of the origin square the
    highlighted curve starts through.  ``shade`` greys squares whose centre
    is not in ``K(omega) x K(omega')``; ``dividing_lines`` draws lines between
    opposite adjacent symbols, solid for ``−+`` and dashed for ``+−``.
    """
    vp = viewport if isinstance(viewport, Viewport) else Viewport(*viewport)
    cv = _Canvas(vp, scale)
    f = cv.fmt
    ms = np.arange(vp.x0, vp.x0 + vp.width)
    ns = np.arange(vp.y0, vp.y0 + vp.height)
    w = omega.window(vp.x0 - 1, vp.x0 + vp.width + 1)
    wp = omega_prime.window(vp.y0 - 1, vp.y0 + vp.height + 1)
    W, H = vp.width * scale, vp.height * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{f(W)}" height="{f(H)}" '
        f'viewBox="0 0 {f(W)} {f(H)}">',
        "<style>.tile{fill:none;stroke:#333;stroke-width:1.5}"
        ".curve{fill:none;stroke:#d62728;stroke-width:3}"
        ".shade{fill:#bbb}.grid{fill:none;stroke:#ddd;stroke-width:0.5}"
        ".div{stroke:#1f77b4;stroke-width:2}.div.dashed{stroke-dasharray:6 4}</style>",
        f'<rect class="grid" x="0" y="0" width="{f(W)}" height="{f(H)}"/>',
    ]

    if shade:
        kw = kept_mask(w)
        kwp = kept_mask(wp)
        for j, n in enumerate(ns):
            for i, m in enumerate(ms):
                if not (kw[i] and kwp[j]):
                    x, y = cv.xy(m - 0.5, n + 0.5)
                    out.append(
                        f'<rect class="shade" data-square="{m},{n}" x="{f(x)}" y="{f(y)}" '
                        f'width="{f(scale)}" height="{f(scale)}"/>'
                    )

    for n in ns:
        for i, m in enumerate(ms):
            s = int(w[i + 1]) * int(wp[n - vp.y0 + 1])
            for p0, p1, c in tile_arcs(int(m), int(n), s):
                cv.arc(p0, p1, c, "tile")
    out.extend(cv.parts)
    cv.parts = []

    if dividing_lines:
        for i in range(vp.width - 1):
            pair = (int(w[i + 1]), int(w[i + 2]))
            if pair[0] != pair[1]:
                x, _ = cv.xy(ms[i] + 0.5, 0)
                dash = "" if pair == (MINUS, PLUS) else " dashed"
                out.append(f'<line class="div{dash}" x1="{f(x)}" y1="0" x2="{f(x)}" y2="{f(H)}"/>')
        for j in range(vp.height - 1):
            pair = (int(wp[j + 1]), int(wp[j + 2]))
            if pair[0] != pair[1]:
                _, y = cv.xy(0, ns[j] + 0.5)
                dash = "" if pair == (MINUS, PLUS) else " dashed"
                out.append(f'<line class="div{dash}" x1="0" y1="{f(y)}" x2="{f(W)}" y2="{f(y)}"/>')

    if highlight is not None:
        res = trace(State(omega, omega_prime, highlight), budget)
        exits = list(res.normals[1:]) + [res.final_normal]
        for k, ((x, y), v, e) in enumerate(zip(res.visited, res.normals, exits)):
            if not vp.contains(int(x), int(y)):
                continue
            p0 = (x - v[0] / 2, y - v[1] / 2)
            p1 = (x + e[0] / 2, y + e[1] / 2)
            corner = (p0[0] + e[0] / 2, p0[1] + e[1] / 2)
            cv.arc(p0, p1, corner, "curve", f' data-step="{k}" data-square="{int(x)},{int(y)}"')
        out.extend(cv.parts)

    out.append("</svg>")
    return "\n".join(out) + "\n"
