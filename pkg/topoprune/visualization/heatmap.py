"""
Heatmap of a layer's pruning mask.
"""
import os
from typing import Optional

import matplotlib.pyplot as plt
from matplotlib.colors import LinearSegmentedColormap

from topoprune.pruning.models import MaskSet
from topoprune.utils import console
from topoprune.visualization import DEFAULT_OUTPUT_DIR, PRIMARY_COLOR, SECONDARY_COLOR


def plot_mask_heatmap(maskset: MaskSet, layer: Optional[str] = None, unit_level: bool = False,
                      output_dir: Optional[str] = None) -> str:
    """
    Plots the surviving blocks of one layer.

    Args:
        maskset (MaskSet): Masks to draw.
        layer (str, optional): Layer name; the first prunable layer if None.
        unit_level (bool): Draw the unit mask instead of the n x n block mask.
        output_dir (str, optional): Directory to save the PNG.

    Returns:
        str: Path to the saved PNG, or "" when there is no prunable layer.
    """
    prunable = [lm.layer.name for lm in maskset.layers if lm.prunable]
    if layer is None:
        if not prunable:
            console.error("No prunable layer to display.")
            return ""
        layer = prunable[0]
    matrix = maskset.unit_mask(layer) if unit_level else maskset.block_mask()

    fig, ax = plt.subplots(figsize=(8, 8))
    custom_cmap = LinearSegmentedColormap.from_list("custom_gradient", ["white", PRIMARY_COLOR], N=2)
    ax.imshow(matrix, aspect="equal", cmap=custom_cmap, interpolation="nearest")
    ax.set_xlabel("input group" if not unit_level else "input unit")
    ax.set_ylabel("output group" if not unit_level else "output unit")
    g = maskset.graph
    ax.set_title(f"Mask of '{layer}' from {g.n}_{g.k}", fontsize=14, color=SECONDARY_COLOR)
    fig.tight_layout()

    output_dir = output_dir or DEFAULT_OUTPUT_DIR
    os.makedirs(output_dir, exist_ok=True)
    suffix = "units" if unit_level else "blocks"
    out_path = os.path.join(output_dir, f"mask_{layer}_{suffix}.png")
    fig.savefig(out_path, bbox_inches="tight")
    console.success(f"Heatmap saved to {out_path}")
    plt.close(fig)
    return out_path
