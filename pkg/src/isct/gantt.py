"""Gantt chart of one period as plain SVG text."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .evaluate import Schedule, idle_intervals

WIDTH = 800
LANE = 36
LEFT = 60
TOP = 24


def _shade(level: int, levels: int) -> str:
    # slow levels light, fast levels dark
    t = level / max(levels - 1, 1)
    g = int(round(200 - 140 * t))
    return f"rgb(40,{g},{min(255, g + 40)})"


def gantt_svg(schedule: Schedule, period: float | None = None) -> str:
    """One lane per processor. Task boxes are split by frequency level, idle
    time is hatched, and intervals spent asleep are outlined and labelled."""
    Td = period if period is not None else schedule.period
    K = schedule.processors
    scale = (WIDTH - LEFT - 10) / Td
    height = TOP + K * LANE + 30
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="monospace" font-size="11">',
        "<defs>",
        '<pattern id="idle" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">',
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#bbb" stroke-width="2"/>',
        "</pattern>",
        "</defs>",
        f'<text x="{LEFT}" y="14">period {Td * 1e3:.4g} ms</text>',
    ]

    def x(t):
        return LEFT + t * scale

    def rect(t0, t1, y, fill, extra="", title=None):
        head = (f'<rect x="{x(t0):.2f}" y="{y:.2f}" width="{max(0.0, (t1 - t0) * scale):.2f}" '
                f'height="{LANE - 8}" fill="{fill}"{extra}')
        out.append(f"{head}><title>{escape(title)}</title></rect>" if title else f"{head}/>")

    for k in range(1, K + 1):
        y = TOP + (k - 1) * LANE + 4
        out.append(f'<text x="4" y="{y + LANE / 2:.2f}">P{k}</text>')
        out.append(f'<rect x="{LEFT}" y="{y:.2f}" width="{Td * scale:.2f}" height="{LANE - 8}" '
                   f'fill="none" stroke="#ddd"/>')
    for iv in idle_intervals(schedule):
        y = TOP + (iv.proc - 1) * LANE + 4
        seq = schedule.order(iv.proc)
        if iv.kind == "whole-period":
            pieces = [(0.0, Td)]
        elif iv.kind == "wrap-around":
            pieces = [(schedule.finish(seq[-1]), Td), (0.0, schedule.placement(seq[0]).start)]
        else:
            v = seq[iv.index]
            pieces = [(schedule.finish(seq[iv.index - 1]), schedule.placement(v).start)]
        extra = ' stroke="#c33" stroke-width="1.5"' if iv.switched else ""
        for t0, t1 in pieces:
            if t1 - t0 > 0:
                rect(t0, t1, y, "url(#idle)", extra)
        if iv.switched:
            t0, t1 = max(pieces, key=lambda p: p[1] - p[0])
            out.append(f'<text x="{x((t0 + t1) / 2):.2f}" y="{y + LANE - 12:.2f}" text-anchor="middle" '
                       f'fill="#c33">sleep</text>')
    m = len(schedule.freqs)
    for p in schedule.placements:
        y = TOP + (p.proc - 1) * LANE + 4
        t = p.start
        for i, (n, f) in enumerate(zip(p.cycles, schedule.freqs)):
            if n <= 0:
                continue
            d = n / f
            rect(t, t + d, y, _shade(i, m), title=f"task {p.task} at {f / 1e9:.3g} GHz")
            t += d
        mid = (p.start + t) / 2
        out.append(f'<text x="{x(mid):.2f}" y="{y + LANE / 2:.2f}" text-anchor="middle" fill="white">'
                   f'{escape(str(p.task))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
