"""
Demo script for the graph search, metrics and training comparison.

This script searches low-ASPL regular graphs on 64 nodes for several degrees,
plots them against the ASPL lower bound and trains small classifiers masked by
a ring, a random and a searched graph. An optional argument names a BlobConfig
JSON file for the classification data.
"""
import os
import sys

import pandas as pd

from topoprune.graphs.core import aspl, random_regular, ring_lattice
from topoprune.graphs.metrics import lower_bound_aspl, metric_correlations, snapshot_metrics
from topoprune.graphs.models import SearchConfig
from topoprune.graphs.search import minimize_aspl
from topoprune.pruning.masks import load_model_spec, model_masks, reduction_stats
from topoprune.tiny_nn.datasets import BlobConfig, load_blob_config, make_blobs
from topoprune.tiny_nn.mlp import accuracy_vs_aspl, train_demo, write_accuracy_trace
from topoprune.utils import console
from topoprune.utils.errors import RetryExhausted
from topoprune.visualization.sankey import plot_layer_flow
from topoprune.visualization.text import print_reduction_table
from topoprune.visualization.trajectory import plot_lower_bound, plot_metric_correlation, plot_trajectory

NODES = 64
DEGREES = (4, 6, 10, 16, 20)
TRAINING_DEGREES = (4, 6)
DEFAULT_BLOBS = BlobConfig(classes=4, dims=8, points=800, seed=0, spread=1.5)
OUTPUT_DIR = os.path.join("results", "demo")


def demo_degree_sweep(attempts: int = 3000) -> dict:
    """Searches every degree from its ring lattice and plots the bound."""
    print("🚀 Searching low-ASPL graphs on 64 nodes...")
    searched = {}
    best = None
    for k in DEGREES:
        g, trajectory = minimize_aspl(ring_lattice(NODES, k), SearchConfig(m=attempts, seed=0))
        searched[k] = aspl(g)
        print(f"   └─ {NODES}_{k}: ring {trajectory.initial_aspl:.4f} -> searched {searched[k]:.4f} "
              f"(bound {lower_bound_aspl(NODES, k):.4f})")
        if k == 4:
            best = g
            plot_trajectory(trajectory, output_dir=OUTPUT_DIR)

    plot_lower_bound(NODES, range(3, 33), searched, output_dir=OUTPUT_DIR)
    pd.DataFrame({"k": list(searched), "aspl": list(searched.values())}).to_csv(
        os.path.join(OUTPUT_DIR, "searched_aspl.csv"), index=False, float_format="%.6f")
    return {"searched": searched, "graph_64_4": best}


def demo_metric_correlation(attempts: int = 3000) -> None:
    """Snapshots a 64_4 search and correlates ASPL with GR and AOPU."""
    print("\n📊 Correlating ASPL with GR and AOPU...")
    _, trajectory = minimize_aspl(ring_lattice(NODES, 4), SearchConfig(m=attempts, seed=1, snapshot_every=10))
    frame = snapshot_metrics(trajectory.snapshots, layers=15)
    rho = metric_correlations(frame)
    print(f"   └─ {len(frame)} snapshots, rho(ASPL, GR) = {rho['aspl_gr']:.3f}, "
          f"rho(ASPL, AOPU) = {rho['aspl_aopu']:.3f}")
    plot_metric_correlation(frame, rho, output_dir=OUTPUT_DIR)


def demo_masks(graph) -> None:
    """Maps the searched 64_4 graph onto VGG16 and a 16_4 graph onto ResNet56."""
    print("\n🎯 Mapping the searched graph onto VGG16...")
    model = load_model_spec("vgg16")
    maskset = model_masks(graph, model)
    print_reduction_table(reduction_stats(maskset, model))
    plot_layer_flow(maskset, layers=["conv2", "conv3", "conv4"], output_dir=OUTPUT_DIR)

    print("\n🎯 Mapping a searched 16_4 graph onto ResNet56...")
    resnet56 = load_model_spec("resnet56")
    g16, _ = minimize_aspl(ring_lattice(16, 4), SearchConfig(m=2000, seed=0))
    print_reduction_table(reduction_stats(model_masks(g16, resnet56), resnet56), per_layer=False)


def demo_training(dataset, epochs: int = 40) -> None:
    """Trains the same classifier masked by ring, random and searched graphs for several degrees."""
    print("\n🧪 Training ring / random / searched classifiers...")
    n = 16
    rows = []
    for k in TRAINING_DEGREES:
        ring = ring_lattice(n, k)
        searched, _ = minimize_aspl(ring, SearchConfig(m=2000, seed=0))
        graphs = {"ring": ring, "searched": searched}
        try:
            graphs["random"] = random_regular(n, k, seed=0)
        except RetryExhausted as e:
            console.warn(f"Skipping the random {n}_{k} graph: {e}")

        for name, g in graphs.items():
            trace = train_demo(g, dataset, epochs=epochs, seed=0, s=4, hidden_layers=4)
            write_accuracy_trace(trace, os.path.join(OUTPUT_DIR, f"accuracy_{n}_{k}_{name}.csv"))
            rows.append({"k": k, "graph": name, "aspl": aspl(g), "val_acc": trace.final_val_acc})
    summary = pd.DataFrame(rows)
    summary.to_csv(os.path.join(OUTPUT_DIR, "training_summary.csv"), index=False, float_format="%.6f")
    print(summary.to_string(index=False, float_format=lambda v: f"{v:.4f}"))


def demo_accuracy_vs_aspl(dataset, epochs: int = 40, attempts: int = 2000) -> None:
    """Trains one classifier per search snapshot and relates accuracy to ASPL."""
    print("\n📈 Training along a 16_4 search trajectory...")
    _, trajectory = minimize_aspl(ring_lattice(16, 4), SearchConfig(m=attempts, seed=0, snapshot_every=4))
    snapshots = trajectory.snapshots[::max(1, len(trajectory.snapshots) // 8)]
    frame = accuracy_vs_aspl(snapshots, dataset, epochs=epochs, seed=0, s=4, hidden_layers=4)
    frame.to_csv(os.path.join(OUTPUT_DIR, "accuracy_vs_aspl.csv"), index=False, float_format="%.6f")
    rho = frame["aspl"].corr(frame["val_acc"], method="spearman")
    print(f"   └─ {len(frame)} snapshots, rho(ASPL, val accuracy) = {rho:.3f}")


if __name__ == "__main__":
    print("=" * 60)
    print("🎯 TOPOLOGY PRUNING DEMO")
    print("=" * 60)
    os.makedirs(OUTPUT_DIR, exist_ok=True)

    sweep = demo_degree_sweep()
    demo_metric_correlation()
    demo_masks(sweep["graph_64_4"])
    # optional BlobConfig JSON, e.g. {"classes": 4, "dims": 8, "points": 800, "spread": 1.5}
    blobs = load_blob_config(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_BLOBS
    dataset = make_blobs(blobs)
    demo_training(dataset)
    demo_accuracy_vs_aspl(dataset)

    print(f"\n✅ Demo complete! Plots and CSV files are in: {OUTPUT_DIR}")
    print("=" * 60)
    print("📖 USAGE INSTRUCTIONS:")
    print("=" * 60)
    print("  python prune.py gen --nodes 64 --degree 4 -o g0.txt")
    print("  python prune.py search -i g0.txt --attempts 10000 -o g.txt --trace trace.csv")
    print("  python prune.py metrics -i g.txt --layers 15")
    print("  python prune.py mask -i g.txt --model vgg16 -o mask.json")
    print("  python prune.py verify -i g.txt --layers 15")
    print("  python prune.py bench --nodes 64 --degree 4 --group-size 8")
    print("=" * 60)
