"""Hand-rolled SVG rendering of episode trajectories: one polyline for the
robot, one per pedestrian, plus start/goal markers. No plotting deps; the
output is easy to assert on in tests (count the <polyline> elements)."""
from __future__ import annotations

from pathlib import Path

PED_COLORS = ("#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
              "#7f7f7f", "#bcbd22", "#17becf")


def render_trajectory_svg(record: dict, out_path, scale: float = 40.0) -> None:
    """Write a top-down SVG of one episode record (dict form, see engine)."""
    trajectory = record.get("trajectory") or []
    if not trajectory:
        raise ValueError("record has no trajectory to plot")
    robot_pts = [(s["pose"][0], s["pose"][1]) for s in trajectory]
    n_peds = len(trajectory[0].get("peds", []))
    ped_pts = [[(s["peds"][j][0], s["peds"][j][1]) for s in trajectory] for j in range(n_peds)]
    goal = record.get("goal", robot_pts[-1])

    xs = [p[0] for pts in [robot_pts, [goal]] + ped_pts for p in pts]
    ys = [p[1] for pts in [robot_pts, [goal]] + ped_pts for p in pts]
    pad = 1.0
    xmin, xmax = min(xs) - pad, max(xs) + pad
    ymin, ymax = min(ys) - pad, max(ys) + pad
    width = (xmax - xmin) * scale
    height = (ymax - ymin) * scale

    def sx(x):
        return (x - xmin) * scale

    def sy(y):
        return height - (y - ymin) * scale  # y up

    def polyline(points, color, stroke):
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in points)
        return (
            f'<polyline fill="none" stroke="{color}" stroke-width="{stroke}" '
            f'points="{coords}" />'
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white" />',
    ]
    for j, pts in enumerate(ped_pts):
        parts.append(polyline(pts, PED_COLORS[j % len(PED_COLORS)], 1.5))
    parts.append(polyline(robot_pts, "#d62728", 2.5))
    sx0, sy0 = sx(robot_pts[0][0]), sy(robot_pts[0][1])
    gx, gy = sx(goal[0]), sy(goal[1])
    parts.append(f'<circle cx="{sx0:.1f}" cy="{sy0:.1f}" r="5" fill="#d62728" />')
    parts.append(
        f'<circle cx="{gx:.1f}" cy="{gy:.1f}" r="7" fill="none" '
        f'stroke="#d62728" stroke-width="2" />'
    )
    parts.append("</svg>")
    Path(out_path).write_text("\n".join(parts) + "\n")
