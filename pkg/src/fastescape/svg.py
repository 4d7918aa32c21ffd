"""Minimal SVG figures: polylines over the clip circle."""

from __future__ import annotations

from dataclasses import dataclass
from xml.etree import ElementTree as ET

import numpy as np

from .fieldcore import Disk

PAD = 0.10


@dataclass(frozen=True)
class Curve:
    points: np.ndarray
    label: str
    color: str = "#1f77b4"
    dashed: bool = False


def _fmt(v: float) -> str:
    return f"{v:.6f}".rstrip("0").rstrip(".")


def render_svg(curves: list[Curve], disk: Disk, title: str = "") -> str:
    """SVG text with one polyline per curve and the disk outline.

    The viewport is the disk's bounding square padded by 10%; y points up.
    """
    cx, cy = disk.center
    r = disk.radius * (1 + PAD)
    stroke = _fmt(disk.radius * 0.008)
    root = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "viewBox": f"{_fmt(cx - r)} {_fmt(-cy - r)} {_fmt(2 * r)} {_fmt(2 * r)}",
        "width": "600",
        "height": "600",
    })
    if title:
        ET.SubElement(root, "title").text = title
    g = ET.SubElement(root, "g", {"transform": "scale(1,-1)", "fill": "none"})
    ET.SubElement(g, "circle", {"cx": _fmt(cx), "cy": _fmt(cy), "r": _fmt(disk.radius),
                                "stroke": "#444444", "stroke-width": stroke, "class": "clip"})
    for c in curves:
        pts = np.asarray(c.points, dtype=float).reshape(-1, 2)
        attrs = {
            "points": " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts),
            "stroke": c.color,
            "stroke-width": stroke,
            "class": c.label,
        }
        if c.dashed:
            attrs["stroke-dasharray"] = _fmt(disk.radius * 0.03)
        ET.SubElement(g, "polyline", attrs)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"
