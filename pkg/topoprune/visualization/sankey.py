"""
Sankey diagram of group-to-group weight flow through masked layers.

Each column holds the n groups of one layer boundary; a link carries the
number of surviving weights from an input group to an output group.
"""
import os
from typing import Dict, List, Optional, Sequence

import plotly.graph_objects as go

from topoprune.pruning.models import MaskSet
from topoprune.utils import console
from topoprune.visualization import DEFAULT_OUTPUT_DIR, PRIMARY_COLOR, SECONDARY_COLOR


def create_flow_data(maskset: MaskSet, layers: Optional[Sequence[str]] = None) -> Dict:
    """
    Node and link lists for consecutive prunable layers.

    Args:
        maskset (MaskSet): Masks to visualize.
        layers (Sequence[str], optional): Prunable layers in order; all of them if None.

    Returns:
        Dict: ``{"nodes": [...], "links": [...]}``.
    """
    names = list(layers) if layers else [lm.layer.name for lm in maskset.layers if lm.prunable]
    if not names:
        return {"nodes": [], "links": []}
    n = maskset.graph.n
    block = maskset.block_mask()

    nodes: List[Dict] = []
    for col in range(len(names) + 1):
        for group in range(n):
            nodes.append({
                "label": f"L{col} g{group}",
                "color": PRIMARY_COLOR if col % 2 == 0 else SECONDARY_COLOR,
            })

    links: List[Dict] = []
    for col, name in enumerate(names):
        lm = maskset.layer_mask(name)
        in_sizes, out_sizes = lm.in_partition.sizes, lm.out_partition.sizes
        for j in range(n):
            for k in range(n):
                if block[j, k]:
                    links.append({
                        "source": col * n + k,
                        "target": (col + 1) * n + j,
                        "value": in_sizes[k] * out_sizes[j] * lm.layer.kernel_elems,
                    })
    return {"nodes": nodes, "links": links}


def plot_layer_flow(maskset: MaskSet, layers: Optional[Sequence[str]] = None,
                    title: Optional[str] = None, output_dir: Optional[str] = None,
                    show_plot: bool = False) -> str:
    """
    Creates and saves the Sankey diagram as HTML.

    Returns:
        str: Path to the saved HTML file, or "" when there is nothing to draw.
    """
    data = create_flow_data(maskset, layers)
    if not data["links"]:
        console.error("No prunable layers available to display.")
        return ""

    g = maskset.graph
    fig = go.Figure(data=[go.Sankey(
        node=dict(
            pad=6,
            thickness=12,
            line=dict(color="black", width=0.5),
            label=[node["label"] for node in data["nodes"]],
            color=[node["color"] for node in data["nodes"]],
        ),
        link=dict(
            source=[link["source"] for link in data["links"]],
            target=[link["target"] for link in data["links"]],
            value=[link["value"] for link in data["links"]],
            hovertemplate="<b>%{source.label}</b> → <b>%{target.label}</b><br>"
                          "Weights: %{value}<br><extra></extra>",
        ),
    )])
    fig.update_layout(
        title_text=title or f"Weight flow through {g.n}_{g.k} masks",
        title_x=0.5,
        title_font_size=16,
        font_size=10,
        height=max(600, 12 * g.n),
    )

    output_dir = output_dir or DEFAULT_OUTPUT_DIR
    os.makedirs(output_dir, exist_ok=True)
    output_path = os.path.join(output_dir, f"layer_flow_{g.n}_{g.k}.html")
    fig.write_html(output_path)
    console.success(f"Sankey diagram saved to {output_path}")
    if show_plot:
        fig.show()
    return output_path
