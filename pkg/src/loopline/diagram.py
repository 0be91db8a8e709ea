"""Spacetime diagrams: worldlines run downward in tick order, interactions are junctions."""
from __future__ import annotations

from xml.sax.saxutils import escape

from .events import candidate_cuts, evolve
from .graph import InteractionGraph, loop_area, meeting_nodes, topological_loop_exists
from .hilbert import Ket
from .scenarios import ScenarioDoc
from .transact import CW, OW, WaveMessage, cascade

COL = 6


def graph_loops(g: InteractionGraph, psi0: Ket) -> list[dict]:
    """Cuts with a topological loop, found along the unitary evolution of ``psi0``."""
    out = []
    psi = psi0
    for tick in g.ticks():
        nodes = g.at_tick(tick)
        psi = evolve(psi, nodes)
        for nd in nodes:
            for cut in candidate_cuts(psi, nd):
                if topological_loop_exists(g, cut):
                    meet = [m.id for m in sorted(meeting_nodes(g, cut), key=lambda m: (m.tick, m.id))]
                    out.append({"node": nd.id, "cut": cut.label(g.register), "meets": meet,
                                "area": loop_area(g, cut, strict=False)})
    return out


def _fmt_area(a: float) -> str:
    return "inf" if a == float("inf") else f"{a:g}"


def ascii_graph(doc: ScenarioDoc) -> str:
    g = doc.graph()
    names = g.register.names
    head = [f"# {doc.name}: graph, {len(names)} subsystems, horizon {g.horizon}",
            "tick " + "".join(f"{n:<{COL}}" for n in names).rstrip()]
    if not g.nodes:
        return "\n".join(head) + "\n"
    loops = graph_loops(g, doc.initial_ket())
    closing = {m for lp in loops for m in lp["meets"]}
    lines = list(head)
    for tick in range(0, g.horizon + 1):
        row = [" "] * (COL * len(names))
        for i in range(len(names)):
            row[i * COL] = "|"
        notes = []
        for nd in g.at_tick(tick):
            cols = sorted(g.register.index(p) for p in nd.participants)
            for c in range(cols[0] * COL, cols[-1] * COL + 1):
                row[c] = "+" if row[c] == "|" else "-"
            mark = "#" if nd.non_reversed else ("@" if nd.id in closing else "o")
            for c in cols:
                row[c * COL] = mark
            note = f"{nd.id} {nd.gate_name}"
            if nd.position is not None:
                note += f" x={nd.position}"
            notes.append(note)
        for nd in g.at_tick(tick):
            here = [lp for lp in loops if lp["node"] == nd.id]
            if here:
                lp = here[0]
                more = f" (+{len(here) - 1} more cuts)" if len(here) > 1 else ""
                notes.append(f"loop {lp['cut']} closes at {','.join(lp['meets'])} area {_fmt_area(lp['area'])}{more}")
        text = f"{tick:>4} " + "".join(row).rstrip()
        if notes:
            text += "    " + "; ".join(notes)
        lines.append(text.rstrip())
    lines.append("legend: o interaction, @ loop-closing interaction, # non-reversed, - junction")
    return "\n".join(lines) + "\n"


def _msg_label(m: WaveMessage) -> str:
    tgt = m.target.name if m.target is not None else "(none)"
    return f"{m.kind}{m.order} {m.source.name} -> {tgt}"


def ascii_transact(doc: ScenarioDoc) -> str:
    sites = doc.layout()
    head = [f"# {doc.name}: transact, {len(sites)} sites, light speed {doc.light_speed}"]
    if len(sites) <= 1:
        return "\n".join(head) + "\n"
    _, trace = cascade(sites, doc.light_speed, doc.order2_fraction, doc.phi)
    lo, hi = min(s.position for s in sites), max(s.position for s in sites)
    t_max = max(s.tick for s in sites)
    at = {(s.position, s.tick): s.name for s in sites}
    lines = list(head)
    lines.append("tick " + "".join(f"{x:>3}" for x in range(lo, hi + 1)))
    for t in range(t_max, -1, -1):
        lines.append(f"{t:>4} " + "".join(f"{at.get((x, t), '.'):>3}" for x in range(lo, hi + 1)))
    lines.append("messages:")
    lines.extend(f"  {_msg_label(m)}  ticks {m.tick_from}->{m.tick_to if m.tick_to is not None else '-'}"
                 f"  weight {m.weight:.6f}" for m in trace)
    return "\n".join(lines) + "\n"


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        "<style>.worldline{stroke:#444;stroke-width:1.5}.junction{stroke:#222;stroke-width:2}"
        ".node{fill:#fff;stroke:#222;stroke-width:2}.node.non-reversed{fill:#222}.node.closing{fill:#d33}"
        ".loop{fill:none;stroke:#d33;stroke-width:2;stroke-dasharray:5 3}"
        ".ow{stroke:#1565c0;stroke-width:1.5;marker-end:url(#arrow)}"
        ".cw{stroke:#2e7d32;stroke-width:1.5;stroke-dasharray:4 2;marker-end:url(#arrow)}"
        "text{font-family:monospace;font-size:11px}</style>",
        '<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto">'
        '<path d="M0,0 L8,4 L0,8 z"/></marker></defs>',
        f'<text x="10" y="18">{escape(title)}</text>',
    ]
    return "\n".join(out + body + ["</svg>"]) + "\n"


def svg_graph(doc: ScenarioDoc) -> str:
    g = doc.graph()
    names = g.register.names
    dx, dy, x0, y0 = 70, 32, 60, 50
    width = x0 + dx * max(1, len(names)) + 260
    height = y0 + dy * (g.horizon + 1) + 20
    title = f"{doc.name}: graph, horizon {g.horizon}"
    if not g.nodes:
        return _svg(width, 30, [], title)
    x = {n: x0 + dx * i for i, n in enumerate(names)}

    def y(t):
        return y0 + dy * t

    body = []
    for n in names:
        body.append(f'<line class="worldline" x1="{x[n]}" y1="{y(0)}" x2="{x[n]}" y2="{y(g.horizon)}"/>')
        body.append(f'<text x="{x[n] - 4}" y="{y0 - 8}">{escape(n)}</text>')
    loops = graph_loops(g, doc.initial_ket())
    closing = {m for lp in loops for m in lp["meets"]}
    for nd in g.ordered:
        xs = sorted(x[p] for p in nd.participants)
        if len(xs) > 1:
            body.append(f'<line class="junction" x1="{xs[0]}" y1="{y(nd.tick)}" x2="{xs[-1]}" y2="{y(nd.tick)}"/>')
        cls = "node" + (" non-reversed" if nd.non_reversed else "") + (" closing" if nd.id in closing else "")
        for px in xs:
            body.append(f'<circle class="{cls}" cx="{px}" cy="{y(nd.tick)}" r="5"/>')
        body.append(f'<text x="{x0 + dx * len(names)}" y="{y(nd.tick) + 4}">{escape(nd.id)} {escape(nd.gate_name)}</text>')
    for lp in loops:
        start = g.node(lp["node"])
        for m in lp["meets"]:
            end = g.node(m)
            sx = sum(x[p] for p in start.participants) / len(start.participants)
            ex = sum(x[p] for p in end.participants) / len(end.participants)
            body.append(f'<path class="loop" d="M{sx:g},{y(start.tick)} C{sx - 30:g},{(y(start.tick) + y(end.tick)) / 2:g} '
                        f'{ex + 30:g},{(y(start.tick) + y(end.tick)) / 2:g} {ex:g},{y(end.tick)}"/>')
    return _svg(width, height, body, title)


def svg_transact(doc: ScenarioDoc) -> str:
    sites = doc.layout()
    title = f"{doc.name}: transact"
    if len(sites) <= 1:
        return _svg(200, 30, [], title)
    _, trace = cascade(sites, doc.light_speed, doc.order2_fraction, doc.phi)
    lo, hi = min(s.position for s in sites), max(s.position for s in sites)
    t_max = max(s.tick for s in sites)
    sx, sy = 40, 60
    width = sx * (hi - lo + 2) + 40
    height = sy * (t_max + 2) + 40

    def px(site):
        return 20 + sx * (site.position - lo + 1)

    def py(t):
        return height - 30 - sy * t

    body = []
    offsets = {OW: -3, CW: 3}
    for m in trace:
        x1, y1 = px(m.source), py(m.tick_from)
        if m.target is None:
            x2, y2 = x1, py(m.tick_from + 1)
        else:
            x2, y2 = px(m.target), py(m.tick_to)
        off = offsets[m.kind]
        body.append(f'<line class="{m.kind.lower()} order-{m.order}" x1="{x1 + off}" y1="{y1}" x2="{x2 + off}" y2="{y2}"/>')
        body.append(f'<text x="{(x1 + x2) / 2 + off * 3:g}" y="{(y1 + y2) / 2:g}">{m.kind}{m.order}</text>')
    for s in sorted(sites, key=lambda s: (s.tick, s.position)):
        fill = " emitter" if s.role == "EMITTER" else ""
        body.append(f'<circle class="site{fill}" cx="{px(s)}" cy="{py(s.tick)}" r="6"/>')
        body.append(f'<text x="{px(s) + 8}" y="{py(s.tick) + 4}">{escape(s.name)}</text>')
    return _svg(width, height, body, title)


def render(doc: ScenarioDoc, fmt: str = "ascii") -> str:
    if fmt not in ("ascii", "svg"):
        raise ValueError(f"unknown diagram format {fmt!r}")
    if doc.is_graph:
        return ascii_graph(doc) if fmt == "ascii" else svg_graph(doc)
    return ascii_transact(doc) if fmt == "ascii" else svg_transact(doc)
