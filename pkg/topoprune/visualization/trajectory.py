"""
Search and metric plots.

This module plots the ASPL trajectory of a search run, the correlation of ASPL
with GR and AOPU across snapshots, and searched ASPL against the theoretical
lower bound.
"""
import os
from typing import Dict, List, Optional, Sequence

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from topoprune.graphs.metrics import lower_bound_aspl
from topoprune.graphs.models import SearchTrajectory
from topoprune.utils import console
from topoprune.visualization import ACCENT_COLOR, DEFAULT_OUTPUT_DIR, PRIMARY_COLOR, SECONDARY_COLOR


def _save(fig, output_dir: Optional[str], filename: str) -> str:
    output_dir = output_dir or DEFAULT_OUTPUT_DIR
    os.makedirs(output_dir, exist_ok=True)
    out_path = os.path.join(output_dir, filename)
    fig.savefig(out_path, bbox_inches="tight")
    plt.close(fig)
    console.success(f"Plot saved to {out_path}")
    return out_path


def plot_trajectory(trajectory: SearchTrajectory, title: Optional[str] = None,
                    output_dir: Optional[str] = None, filename: str = "aspl_trajectory.png") -> str:
    """
    Plots the live ASPL against the attempt index, marking accepted swaps.

    Args:
        trajectory (SearchTrajectory): Recorded search run.
        title (str, optional): Plot title.
        output_dir (str, optional): Directory to save the PNG.

    Returns:
        str: Path to the saved PNG.
    """
    frame = trajectory.to_frame()
    fig, ax = plt.subplots(figsize=(10, 6))
    ax.step(frame["attempt"], frame["aspl"], where="post", color=SECONDARY_COLOR, linewidth=1.5)
    accepted = frame[frame["accepted"]]
    ax.scatter(accepted["attempt"], accepted["aspl"], s=8, color=PRIMARY_COLOR, zorder=3, label="accepted")
    ax.axhline(trajectory.initial_aspl, color=ACCENT_COLOR, linestyle=":", linewidth=1, label="initial")
    ax.set_xlabel("Attempt", fontsize=12)
    ax.set_ylabel("ASPL", fontsize=12)
    ax.set_title(title or f"ASPL search on {trajectory.n} nodes", fontsize=14)
    ax.legend()
    fig.tight_layout()
    return _save(fig, output_dir, filename)


def plot_metric_correlation(frame: pd.DataFrame, correlations: Optional[Dict[str, float]] = None,
                            output_dir: Optional[str] = None,
                            filename: str = "metric_correlation.png") -> str:
    """Side-by-side scatter of ASPL against GR and against AOPU."""
    fig, (ax_gr, ax_aopu) = plt.subplots(1, 2, figsize=(12, 5))
    ax_gr.scatter(frame["aspl"], frame["gr"], color=PRIMARY_COLOR, edgecolor=SECONDARY_COLOR)
    ax_gr.set_xlabel("ASPL")
    ax_gr.set_ylabel("GR")
    ax_aopu.scatter(frame["aspl"], frame["aopu"], color=ACCENT_COLOR, edgecolor=SECONDARY_COLOR)
    ax_aopu.set_xlabel("ASPL")
    ax_aopu.set_ylabel("AOPU")
    if correlations:
        ax_gr.set_title(f"Spearman rho = {correlations['aspl_gr']:.3f}")
        ax_aopu.set_title(f"Spearman rho = {correlations['aspl_aopu']:.3f}")
    fig.tight_layout()
    return _save(fig, output_dir, filename)


def plot_lower_bound(N: int, degrees: Sequence[int], searched: Optional[Dict[int, float]] = None,
                     output_dir: Optional[str] = None, filename: str = "aspl_lower_bound.png") -> str:
    """
    Plots the ASPL lower bound over degrees, with searched ASPLs overlaid.

    Args:
        N (int): Node count.
        degrees (Sequence[int]): Degrees (>= 3) to draw the bound for.
        searched (Dict[int, float], optional): Degree to searched ASPL.
    """
    degrees: List[int] = sorted(d for d in degrees if 3 <= d < N)
    bounds = [lower_bound_aspl(N, d) for d in degrees]
    fig, ax = plt.subplots(figsize=(10, 6))
    ax.plot(degrees, bounds, color=SECONDARY_COLOR, marker="o", markersize=3, label="lower bound")
    if searched:
        ks = np.array(sorted(searched))
        ax.scatter(ks, [searched[k] for k in ks], color=PRIMARY_COLOR, edgecolor=SECONDARY_COLOR,
                   zorder=3, label="searched")
    ax.set_xlabel("Degree k", fontsize=12)
    ax.set_ylabel("ASPL", fontsize=12)
    ax.set_title(f"ASPL lower bound, N = {N}", fontsize=14)
    ax.legend()
    fig.tight_layout()
    return _save(fig, output_dir, filename)
