"""SVG line plots of gait channels."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union
from xml.sax.saxutils import escape

import numpy as np

from bipedswarm.anthro import JOINTS, SIDES
from bipedswarm.compare import Normalizable
from bipedswarm.errors import TooFewRecords, UnknownChannel
from bipedswarm.gaitgen import GaitTrajectory

WIDTH = 800
HEIGHT = 480
# left, top, right, bottom
MARGINS = (72.0, 40.0, 24.0, 48.0)
TICK_COUNT = 5
SERIES_WIDTH = 1.5

COLORS = [
    (0.122, 0.467, 0.706),
    (1.0, 0.498, 0.055),
    (0.173, 0.627, 0.173),
    (0.839, 0.153, 0.157),
    (0.580, 0.404, 0.741),
    (0.549, 0.337, 0.294),
]
TEXT = (0.1, 0.1, 0.1)
AXIS = (0.3, 0.3, 0.3)

GROUPS: Dict[str, Tuple[str, ...]] = {
    "com": ("com_x", "com_y"),
    "pelvis": ("pelvis_x", "pelvis_y", "pelvis_z"),
    **{
        f"{joint}_{side}": tuple(f"{joint}_{side}_{a}" for a in "xyz")
        for side in SIDES
        for joint in JOINTS + ("foot",)
    },
}


@dataclass(frozen=True)
class Series:
    name: str
    points: Tuple[Tuple[float, float], ...]
    color: Tuple[float, float, float]
    dashed: bool = False


@dataclass(frozen=True)
class Tick:
    position: float
    label: str


@dataclass(frozen=True)
class PlotModel:
    """Everything drawn, in SVG user units (y grows downward)."""
    title: str
    series: Tuple[Series, ...]
    x_ticks: Tuple[Tick, ...]
    y_ticks: Tuple[Tick, ...]
    box: Tuple[float, float, float, float]
    width: int = WIDTH
    height: int = HEIGHT


def resolve_channels(selector: Union[str, Sequence[str]], available) -> List[str]:
    """Expand a selector into channel names.

    A selector is a channel name, a group (``com``, ``pelvis``,
    ``<joint>_<side>``) or a comma-separated mix of both.
    """
    items = selector.split(",") if isinstance(selector, str) else list(selector)
    names: List[str] = []
    for item in (s.strip() for s in items):
        expanded = GROUPS.get(item, (item,))
        for name in expanded:
            if name not in available:
                raise UnknownChannel(f"no channel {name!r}")
            if name not in names:
                names.append(name)
    if not names:
        raise UnknownChannel("empty channel selection")
    return names


def _ticks(lo: float, hi: float) -> np.ndarray:
    return np.linspace(lo, hi, TICK_COUNT)


def _value_range(values: List[np.ndarray]) -> Tuple[float, float]:
    lo = min(float(v.min()) for v in values)
    hi = max(float(v.max()) for v in values)
    if hi - lo < 1e-9:
        pad = max(abs(lo), 1e-3) * 0.5
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def build_plot(
    traj: GaitTrajectory,
    selector: Union[str, Sequence[str]] = "com",
    reference: Optional[Normalizable] = None,
) -> PlotModel:
    if len(traj) < 2:
        raise TooFewRecords(f"need at least 2 records to plot, got {len(traj)}")
    _, channels = traj.normalized()
    names = resolve_channels(selector, channels)
    n = len(traj)

    ref_t, ref_channels = (None, {})
    if reference is not None:
        ref_t, ref_channels = reference.normalized()

    data = [channels[name] for name in names]
    data += [ref_channels[name] for name in names if name in ref_channels]
    y_lo, y_hi = _value_range(data)

    left, top, right, bottom = MARGINS
    x0, x1 = left, WIDTH - right
    y0, y1 = top, HEIGHT - bottom

    def sx(i: float) -> float:
        return x0 + (x1 - x0) * i / (n - 1)

    def sy(v: float) -> float:
        return y1 - (y1 - y0) * (v - y_lo) / (y_hi - y_lo)

    series = []
    for k, name in enumerate(names):
        color = COLORS[k % len(COLORS)]
        pts = tuple((sx(i), sy(v)) for i, v in enumerate(channels[name]))
        series.append(Series(name, pts, color))
        if name in ref_channels:
            rpts = tuple((sx(t * (n - 1)), sy(v)) for t, v in zip(ref_t, ref_channels[name]))
            series.append(Series(f"{name} (reference)", rpts, color, dashed=True))

    x_ticks = tuple(Tick(sx(i), f"{i:.3g}") for i in _ticks(0, n - 1))
    y_ticks = tuple(Tick(sy(v), f"{v:.3g}") for v in _ticks(y_lo, y_hi))
    return PlotModel(
        title=", ".join(names),
        series=tuple(series),
        x_ticks=x_ticks,
        y_ticks=y_ticks,
        box=(x0, y0, x1, y1),
    )


def render_svg(model: PlotModel) -> bytes:
    import cairo

    buf = io.BytesIO()
    surface = cairo.SVGSurface(buf, model.width, model.height)
    cr = cairo.Context(surface)

    cr.set_source_rgb(1.0, 1.0, 1.0)
    cr.paint()

    x0, y0, x1, y1 = model.box
    cr.set_source_rgb(*AXIS)
    cr.set_line_width(1.0)
    cr.rectangle(x0, y0, x1 - x0, y1 - y0)
    cr.stroke()

    cr.select_font_face("Sans", cairo.FONT_SLANT_NORMAL, cairo.FONT_WEIGHT_NORMAL)
    cr.set_font_size(11)
    for tick in model.x_ticks:
        cr.move_to(tick.position, y1)
        cr.line_to(tick.position, y1 + 5)
        cr.stroke()
        ext = cr.text_extents(tick.label)
        cr.move_to(tick.position - ext.width / 2, y1 + 18)
        cr.show_text(tick.label)
    for tick in model.y_ticks:
        cr.move_to(x0 - 5, tick.position)
        cr.line_to(x0, tick.position)
        cr.stroke()
        ext = cr.text_extents(tick.label)
        cr.move_to(x0 - 8 - ext.width, tick.position + ext.height / 2)
        cr.show_text(tick.label)

    for s in model.series:
        cr.set_source_rgb(*s.color)
        cr.set_line_width(SERIES_WIDTH)
        cr.set_line_join(cairo.LINE_JOIN_ROUND)
        cr.set_dash([6.0, 4.0] if s.dashed else [])
        (px, py), *rest = s.points
        cr.move_to(px, py)
        for px, py in rest:
            cr.line_to(px, py)
        cr.stroke()
    cr.set_dash([])

    cr.set_source_rgb(*TEXT)
    cr.select_font_face("Sans", cairo.FONT_SLANT_NORMAL, cairo.FONT_WEIGHT_BOLD)
    cr.set_font_size(14)
    ext = cr.text_extents(model.title)
    cr.move_to((model.width - ext.width) / 2, y0 - 14)
    cr.show_text(model.title)

    surface.finish()
    # Cairo numbers surfaces process-wide; pin the id so equal input gives equal bytes.
    svg = re.sub(rb"surface\d+", b"surface1", buf.getvalue())
    # Labels render as glyph outlines; carry the channel names as text too.
    title = b"<title>" + escape(model.title).encode("utf-8") + b"</title>"
    return re.sub(rb"(<svg\b[^>]*>)", lambda m: m.group(1) + b"\n" + title, svg, count=1)


def emit_plot(
    traj: GaitTrajectory,
    selector: Union[str, Sequence[str]] = "com",
    reference: Optional[Normalizable] = None,
) -> bytes:
    return render_svg(build_plot(traj, selector, reference))
