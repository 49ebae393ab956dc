"""Static SVG of one three-circle face in the Poincare disk."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .hypgeom import ThreeCircleConfig, classify

COLORS = {"circle": "#1f77b4", "horocycle": "#2ca02c", "hypercycle": "#d62728"}
ARC_SAMPLES = 256


def to_disk(x) -> complex:
    """Stereographic projection of a hyperboloid point to the unit disk."""
    x0, x1, x2 = (float(c) for c in x)
    return complex(x1, x2) / (1.0 + x0)


def _angle(c: complex, z: complex) -> float:
    return math.atan2(z.imag - c.imag, z.real - c.real)


def _arc_candidates(circle, z1: complex, z2: complex):
    """The two arcs of ``circle`` from ``z1`` to ``z2`` as sampled points."""
    if circle is None:  # a diameter: single straight segment
        t = np.linspace(0.0, 1.0, ARC_SAMPLES)
        return [z1 + t * (z2 - z1)]
    c, r = circle
    a1, a2 = _angle(c, z1), _angle(c, z2)
    ccw = (a2 - a1) % (2.0 * math.pi)
    out = []
    for span in (ccw, ccw - 2.0 * math.pi):
        t = a1 + np.linspace(0.0, span, ARC_SAMPLES)
        out.append(c + r * np.exp(1j * t))
    return out


def _shoelace(z: np.ndarray) -> float:
    return 0.5 * abs(float(np.sum(z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag)))


def interstice_outline(config: ThreeCircleConfig) -> np.ndarray:
    """Closed polyline (complex disk coordinates) around the curvilinear triangle.

    Each circle contributes one of its two arcs between its tangency points;
    the boundary of the interstice is the choice inside the disk enclosing
    the least Euclidean area.
    """
    P = [to_disk(p) for p in config.tangency_points]
    circles = [rep.disk_circle() for rep in config.reps()]
    # circle a runs from the point it shares with a+2 (row a+1) to the one shared with a+1 (row a+2)
    options = []
    for a in range(3):
        z_from, z_to = P[(a + 1) % 3], P[(a + 2) % 3]
        arcs = [z for z in _arc_candidates(circles[a], z_from, z_to) if np.all(np.abs(z) <= 1.0 + 1e-9)]
        options.append(arcs or _arc_candidates(circles[a], z_from, z_to))
    best, best_area = None, math.inf
    for combo in itertools.product(*options):
        loop = np.concatenate(combo)  # P1->P2, P2->P0, P0->P1
        area = _shoelace(loop)
        if area < best_area:
            best, best_area = loop, area
    return best


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def config_svg(config: ThreeCircleConfig, size: int = 480) -> str:
    """SVG document showing the boundary circle, the three generalized circles
    (clipped to the closed disk) and the interstice."""
    half = size / 2.0
    scale = 0.45 * size

    def pt(z: complex) -> str:
        return f"{_fmt(half + scale * z.real)},{_fmt(half - scale * z.imag)}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        '<defs><clipPath id="disk">'
        f'<circle cx="{_fmt(half)}" cy="{_fmt(half)}" r="{_fmt(scale)}"/></clipPath></defs>',
        f'<circle cx="{_fmt(half)}" cy="{_fmt(half)}" r="{_fmt(scale)}" fill="#f7f7f7" stroke="black" stroke-width="1.5"/>',
    ]
    outline = interstice_outline(config)
    parts.append(f'<polygon points="{" ".join(pt(z) for z in outline)}" fill="#ffd54f" fill-opacity="0.7" '
                 'stroke="none"/>')
    parts.append('<g clip-path="url(#disk)" fill="none" stroke-width="2">')
    P = [to_disk(p) for p in config.tangency_points]
    for k, rep in zip(config.curvatures, config.reps()):
        color = COLORS[classify(k).value]
        circ = rep.disk_circle()
        if circ is None:
            # w0 = -1: the image is the straight line w1*x + w2*y = -1
            w = complex(rep.w[1], rep.w[2])
            z0, d = -w / abs(w) ** 2, 1j * w / abs(w)
            (x1, y1), (x2, y2) = pt(z0 - 3 * d).split(","), pt(z0 + 3 * d).split(",")
            parts.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{color}"/>')
            continue
        c, r = circ
        parts.append(f'<circle cx="{_fmt(half + scale * c.real)}" cy="{_fmt(half - scale * c.imag)}" '
                     f'r="{_fmt(scale * r)}" stroke="{color}"><title>k={k:.6g} ({classify(k).value})</title></circle>')
    parts.append("</g>")
    for z in P:
        x, y = pt(z).split(",")
        parts.append(f'<circle cx="{x}" cy="{y}" r="3" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
