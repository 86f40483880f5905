"""Crease-pattern and trajectory SVG export.

Byte-stable: coordinates are formatted with fixed precision and edges are
emitted in index order, so identical inputs always produce identical files.
Styling encodes fold semantics: boundary bold black, mountain solid red,
valley dashed blue, unassigned / unfolded gray. Folded creases thicken
with fold progress.
"""

from __future__ import annotations

from pathlib import Path

from .cp import CanonicalPattern, CreasePattern, FoldState, flat_state

CANVAS = 400.0
MARGIN = 20.0


class IOFailure(OSError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _map(x: float) -> float:
    return MARGIN + x * (CANVAS - 2.0 * MARGIN)


def _edge_style(pattern: CreasePattern, state: FoldState | None, j: int):
    if pattern.boundary[j]:
        return "#000000", 3.0, None
    ztype = state.z[j] if state is not None else pattern.crease_types[j]
    folded = state is not None and state.rho[j] > 0.0
    if ztype == "M":
        color = "#cc2222" if folded or state is None else "#777777"
        return color, 1.5 + (state.rho[j] if state is not None else 0.0), None
    if ztype == "V":
        color = "#2244cc" if folded or state is None else "#777777"
        return color, 1.5 + (state.rho[j] if state is not None else 0.0), "6,4"
    return "#999999", 1.2, "2,3"


def pattern_svg(pattern: CreasePattern | CanonicalPattern,
                state: FoldState | None = None) -> str:
    """One SVG document as a string."""
    if isinstance(pattern, CanonicalPattern):
        pattern = pattern.pattern
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(CANVAS)}" '
        f'height="{_fmt(CANVAS)}" viewBox="0 0 {_fmt(CANVAS)} {_fmt(CANVAS)}">',
        f'<rect width="{_fmt(CANVAS)}" height="{_fmt(CANVAS)}" fill="#ffffff"/>',
    ]
    for j in range(pattern.n_edges):
        a, b = pattern.edges[j]
        x1, y1 = pattern.vertices[a]
        x2, y2 = pattern.vertices[b]
        color, width, dash = _edge_style(pattern, state, j)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        # y axis flipped so the unit square reads with origin at bottom left
        lines.append(
            f'<line x1="{_fmt(_map(x1))}" y1="{_fmt(CANVAS - _map(y1))}" '
            f'x2="{_fmt(_map(x2))}" y2="{_fmt(CANVAS - _map(y2))}" '
            f'stroke="{color}" stroke-width="{_fmt(width)}"{dash_attr}/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def export_svg(pattern, out_path, state: FoldState | None = None) -> Path:
    out = Path(out_path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(pattern_svg(pattern, state), encoding="utf-8")
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    return out


def export_trajectory_svgs(trajectory, out_dir) -> list[Path]:
    """T + 1 files, step_000.svg (flat) through step_T.svg (final)."""
    out = Path(out_dir)
    pattern = trajectory.pattern
    base = pattern.pattern if isinstance(pattern, CanonicalPattern) else pattern
    states = [flat_state(base)] + [s.state_after for s in trajectory.steps]
    paths = []
    for k, state in enumerate(states):
        paths.append(export_svg(pattern, out / f"step_{k:03d}.svg", state=state))
    return paths
