"""SVG figures for sweep and single-run outputs."""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt keeps element ids stable between runs
matplotlib.rcParams["svg.hashsalt"] = "icpbalance"
matplotlib.rcParams["svg.fonttype"] = "none"


def polar_boundary_plot(boundaries: Dict[str, Sequence[Tuple[float, float]]], path, title: str = "") -> None:
    """One closed contour per mechanism set; angles in radians, radius in m/s."""
    fig = plt.figure(figsize=(6.4, 6.4))
    ax = fig.add_subplot(projection="polar")
    rmax = 0.0
    for name, pts in boundaries.items():
        th = np.array([p[0] for p in pts] + [pts[0][0] + 2 * math.pi])
        r = np.array([p[1] for p in pts] + [pts[0][1]])
        rmax = max(rmax, float(r.max()))
        ax.plot(th, r, marker="o", markersize=3, linewidth=1.5, label=name)
    ax.set_thetagrids(np.arange(0, 360, 30))
    top = max(rmax * 1.1, 0.1)
    ticks = np.linspace(0.0, top, 5)[1:]
    ax.set_rlim(0.0, top)
    ax.set_rticks(ticks)
    ax.set_yticklabels([f"{t:.2f} m/s" for t in ticks], fontsize=8)
    ax.set_rlabel_position(112.5)
    ax.legend(loc="upper right", bbox_to_anchor=(1.3, 1.1), fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def trajectory_plot(log: List[dict], footholds: List[dict], path, title: str = "") -> None:
    """Top view of CoM, ICP, commanded CoP/eCMP and the committed footholds."""
    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    for key, style in (("com", "-"), ("icp", "-"), ("cop", ":"), ("ecmp", "--")):
        pts = np.array([rec[key] for rec in log])
        if len(pts):
            ax.plot(pts[:, 0], pts[:, 1], style, linewidth=1.0, label=key)
    for f in footholds:
        x, y = f["position"]
        color = "tab:red" if f["mode"] != "base" else "tab:gray"
        ax.plot([x], [y], "s", color=color, markersize=8)
        ax.annotate(f["side"][0].upper(), (x, y), textcoords="offset points", xytext=(5, 5), fontsize=7)
        for poly in f.get("capture_regions", [])[-1:]:
            v = np.array(poly + [poly[0]])
            ax.plot(v[:, 0], v[:, 1], color="tab:green", linewidth=0.6, alpha=0.6)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
