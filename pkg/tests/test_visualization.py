import os

import pandas as pd
import pytest

from topoprune.graphs.core import ring_lattice
from topoprune.graphs.metrics import metrics_report
from topoprune.graphs.models import SearchConfig
from topoprune.graphs.search import minimize_aspl
from topoprune.pruning.masks import load_model_spec, model_masks, reduction_stats
from topoprune.pruning.models import LayerKind, LayerSpec, ModelSpec
from topoprune.utils import console
from topoprune.visualization.heatmap import plot_mask_heatmap
from topoprune.visualization.sankey import create_flow_data, plot_layer_flow
from topoprune.visualization.text import format_value, print_reduction_table, print_search_summary
from topoprune.visualization.trajectory import plot_lower_bound, plot_metric_correlation, plot_trajectory


@pytest.fixture
def small_maskset():
    layers = [LayerSpec(name=f"fc{i}", kind=LayerKind.FULLY_CONNECTED, in_width=10, out_width=10)
              for i in range(2)]
    return model_masks(ring_lattice(5, 2), ModelSpec(layers=layers))


def test_trajectory_plot(tmp_path):
    _, trajectory = minimize_aspl(ring_lattice(12, 4), SearchConfig(m=30, seed=0))
    path = plot_trajectory(trajectory, output_dir=str(tmp_path))
    assert os.path.exists(path)


def test_correlation_and_bound_plots(tmp_path):
    frame = pd.DataFrame({"snapshot": [0, 1, 2], "aspl": [3.0, 2.9, 2.8],
                          "gr": [9.0, 8.5, 8.0], "aopu": [10.0, 11.0, 12.0]})
    assert os.path.exists(plot_metric_correlation(frame, {"aspl_gr": 1.0, "aspl_aopu": -1.0},
                                                  output_dir=str(tmp_path)))
    assert os.path.exists(plot_lower_bound(64, range(2, 40), {4: 3.2}, output_dir=str(tmp_path)))


def test_heatmap_paths(tmp_path, small_maskset):
    assert plot_mask_heatmap(small_maskset, output_dir=str(tmp_path)).endswith("mask_fc0_blocks.png")
    assert plot_mask_heatmap(small_maskset, "fc1", unit_level=True,
                             output_dir=str(tmp_path)).endswith("mask_fc1_units.png")


def test_flow_links_follow_the_graph(small_maskset):
    data = create_flow_data(small_maskset)
    assert len(data["nodes"]) == 3 * 5
    # two links per output group and layer, each carrying a 2x2 block
    assert len(data["links"]) == 2 * 5 * 2
    assert {link["value"] for link in data["links"]} == {4}


def test_flow_html(tmp_path, small_maskset):
    path = plot_layer_flow(small_maskset, output_dir=str(tmp_path))
    assert path.endswith("layer_flow_5_2.html")
    assert os.path.exists(path)


def test_flow_without_prunable_layers(tmp_path):
    layer = LayerSpec(name="head", kind=LayerKind.FULLY_CONNECTED, in_width=10, out_width=4, prunable=False)
    maskset = model_masks(ring_lattice(4, 2), ModelSpec(layers=[layer]))
    assert plot_layer_flow(maskset, output_dir=str(tmp_path)) == ""


@pytest.mark.parametrize("value, text", [(None, "N/A"), (float("nan"), "N/A"), (2.5, "2.5000"), (7, "7")])
def test_format_value(value, text):
    assert format_value(value) == text


def test_text_summaries_go_to_stderr(capsys):
    console.set_quiet(False)
    _, trajectory = minimize_aspl(ring_lattice(12, 4), SearchConfig(m=10, seed=0))
    print_search_summary(trajectory, k=4)
    model = load_model_spec("vgg16")
    print_reduction_table(reduction_stats(model_masks(ring_lattice(64, 16), model), model))
    out, err = capsys.readouterr()
    assert out == ""
    assert "ASPL SEARCH SUMMARY (12_4)" in err
    assert "reduction" in err
    assert "Prunable layers: 75.00% params" in err


def test_quiet_silences_summaries(capsys):
    _, trajectory = minimize_aspl(ring_lattice(12, 4), SearchConfig(m=10, seed=0))
    print_search_summary(trajectory, k=4)
    assert capsys.readouterr().err == ""


def test_search_summary_with_report(capsys):
    console.set_quiet(False)
    g, trajectory = minimize_aspl(ring_lattice(12, 4), SearchConfig(m=10, seed=0))
    print_search_summary(trajectory, k=4, report=metrics_report(g, layers=6))
    err = capsys.readouterr().err
    assert "GR:" in err
    assert "Lower bound:" in err
