import json

import pandas as pd
import pytest
from click.testing import CliRunner

from prune import ExitStatus, cli
from topoprune.graphs.core import complete_graph, read_graph, ring_lattice, write_graph
from topoprune.graphs.metrics import aopu
from topoprune.pruning.masks import read_maskset


@pytest.fixture
def runner():
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:  # click >= 8.2 always separates stderr
        return CliRunner()


def stdout_json(result) -> dict:
    return json.loads(result.stdout.strip().splitlines()[-1])


@pytest.fixture
def graph_file(tmp_path):
    def _write(g, name="g.txt"):
        path = tmp_path / name
        write_graph(g, path)
        return str(path)
    return _write


# =============================================================================
# gen
# =============================================================================

def test_gen_ring_reports_keep_ratio(runner, tmp_path):
    out = tmp_path / "ring.txt"
    result = runner.invoke(cli, ["gen", "--nodes", "64", "--degree", "4", "--kind", "ring", "-o", str(out)])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["keep_ratio"] == 0.0625
    assert data["aspl"] == pytest.approx(528 / 63)
    assert read_graph(out).edges == ring_lattice(64, 4).edges


def test_gen_odd_ring_is_invalid(runner, tmp_path):
    result = runner.invoke(cli, ["gen", "--nodes", "6", "--degree", "3", "--kind", "ring",
                                 "-o", str(tmp_path / "x.txt")])
    assert result.exit_code == ExitStatus.INVALID


def test_gen_is_deterministic(runner, tmp_path):
    paths = [tmp_path / "a.txt", tmp_path / "b.txt"]
    for path in paths:
        result = runner.invoke(cli, ["--seed", "3", "gen", "-n", "20", "-k", "3", "--kind", "random",
                                     "-o", str(path)])
        assert result.exit_code == ExitStatus.OK
    assert paths[0].read_text() == paths[1].read_text()


def test_gen_bad_flags(runner, tmp_path):
    result = runner.invoke(cli, ["gen", "--nodes", "abc", "--degree", "2", "-o", str(tmp_path / "x")])
    assert result.exit_code == ExitStatus.USAGE
    result = runner.invoke(cli, ["gen", "--nodes", "8", "--degree", "2", "--kind", "star",
                                 "-o", str(tmp_path / "x")])
    assert result.exit_code == ExitStatus.USAGE


# =============================================================================
# search
# =============================================================================

def test_search_writes_graph_and_trace(runner, tmp_path, graph_file):
    src = graph_file(ring_lattice(20, 4))
    out, trace = tmp_path / "out.txt", tmp_path / "trace.csv"
    result = runner.invoke(cli, ["search", "-i", src, "--attempts", "120", "--seed", "1",
                                 "-o", str(out), "--trace", str(trace)])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["final_aspl"] <= data["initial_aspl"]
    assert read_graph(out).degree_histogram() == {4: 20}
    assert len(pd.read_csv(trace)) == 120


def test_search_record_every_controls_rows(runner, tmp_path, graph_file):
    src = graph_file(ring_lattice(16, 4))
    trace = tmp_path / "trace.csv"
    result = runner.invoke(cli, ["search", "-i", src, "-m", "50", "--record-every", "10",
                                 "-o", str(tmp_path / "o.txt"), "--trace", str(trace)])
    assert result.exit_code == ExitStatus.OK
    assert pd.read_csv(trace)["attempt"].tolist() == [10, 20, 30, 40, 50]


def test_search_snapshots_and_plots(runner, tmp_path, graph_file):
    src = graph_file(ring_lattice(16, 4))
    snaps = tmp_path / "snaps.csv"
    plots = tmp_path / "plots"
    result = runner.invoke(cli, ["search", "-i", src, "-m", "200", "--snapshots", str(snaps),
                                 "--snapshot-every", "2", "--layers", "6", "--plot-dir", str(plots),
                                 "-o", str(tmp_path / "o.txt")])
    assert result.exit_code == ExitStatus.OK
    assert list(pd.read_csv(snaps).columns) == ["snapshot", "aspl", "gr", "aopu"]
    assert (plots / "aspl_trajectory.png").exists()


def test_search_zero_attempts_is_usage_error(runner, tmp_path, graph_file):
    result = runner.invoke(cli, ["search", "-i", graph_file(ring_lattice(8, 2)), "--attempts", "0",
                                 "-o", str(tmp_path / "o.txt")])
    assert result.exit_code == ExitStatus.USAGE


def test_search_disconnected_input(runner, tmp_path):
    src = tmp_path / "two.txt"
    src.write_text("6 2\n0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n")
    result = runner.invoke(cli, ["search", "-i", str(src), "-m", "5", "-o", str(tmp_path / "o.txt")])
    assert result.exit_code == ExitStatus.INVALID


def test_search_missing_input_is_io_error(runner, tmp_path):
    result = runner.invoke(cli, ["search", "-i", str(tmp_path / "nope.txt"), "-m", "5",
                                 "-o", str(tmp_path / "o.txt")])
    assert result.exit_code == ExitStatus.IO_ERROR


def test_search_summary_reports_final_metrics(runner, tmp_path, graph_file):
    result = runner.invoke(cli, ["search", "-i", graph_file(ring_lattice(16, 4)), "-m", "40",
                                 "--layers", "6", "-o", str(tmp_path / "o.txt")])
    assert result.exit_code == ExitStatus.OK
    assert "GR:" in result.stderr
    assert "AOPU:" in result.stderr
    assert "Lower bound:" in result.stderr


@pytest.mark.slow
def test_search_ring_64_4_full_budget(runner, tmp_path, graph_file):
    result = runner.invoke(cli, ["search", "-i", graph_file(ring_lattice(64, 4)), "--attempts", "10000",
                                 "-o", str(tmp_path / "o.txt")])
    assert result.exit_code == ExitStatus.OK
    assert stdout_json(result)["final_aspl"] <= 3.6


# =============================================================================
# metrics
# =============================================================================

def test_metrics_k4(runner, graph_file):
    result = runner.invoke(cli, ["metrics", "-i", graph_file(complete_graph(4))])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["aspl"] == 1.0
    assert data["gr"] == 2.0


def test_metrics_c4_reports_infinite_gr(runner, graph_file):
    result = runner.invoke(cli, ["metrics", "-i", graph_file(ring_lattice(4, 2))])
    assert result.exit_code == ExitStatus.OK
    assert stdout_json(result)["gr"] == "inf"


def test_metrics_aopu_matches_library(runner, graph_file):
    g = ring_lattice(64, 4)
    result = runner.invoke(cli, ["metrics", "-i", graph_file(g), "--layers", "15"])
    assert stdout_json(result)["aopu"] == aopu(g, 15)


def test_metrics_malformed_file(runner, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("4 2\n0 1\n0 1\n2 3\n2 3\n")
    result = runner.invoke(cli, ["metrics", "-i", str(bad)])
    assert result.exit_code == ExitStatus.INVALID


def test_quiet_keeps_stdout_json(runner, graph_file):
    result = runner.invoke(cli, ["--quiet", "metrics", "-i", graph_file(complete_graph(5))])
    assert result.exit_code == ExitStatus.OK
    assert result.stderr == ""
    assert stdout_json(result)["aspl"] == 1.0


# =============================================================================
# mask
# =============================================================================

def test_mask_vgg16_64_16(runner, tmp_path, graph_file):
    out = tmp_path / "mask.json"
    result = runner.invoke(cli, ["mask", "-i", graph_file(ring_lattice(64, 16)), "--model", "vgg16",
                                 "-o", str(out)])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert abs(data["params_reduction"] - 75.00) <= 0.5
    assert data["dense_layers"] == ["conv1", "fc3"]
    assert read_maskset(out).graph.k == 16


def test_mask_resnet56_16_4(runner, tmp_path, graph_file):
    result = runner.invoke(cli, ["mask", "-i", graph_file(ring_lattice(16, 4)), "--model", "resnet56",
                                 "-o", str(tmp_path / "mask.json")])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert abs(data["flops_reduction"] - 74.5) <= 0.5
    assert data["prunable_params_reduction"] == 75.0
    assert data["dense_layers"] == ["conv1", "linear"]


def test_mask_dense_flag_has_no_reduction(runner, tmp_path, graph_file):
    result = runner.invoke(cli, ["mask", "-i", graph_file(ring_lattice(64, 16)), "--dense",
                                 "-o", str(tmp_path / "mask.json")])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["params_reduction"] == 0.0
    assert data["flops_reduction"] == 0.0


def test_mask_narrow_layer_is_invalid(runner, tmp_path, graph_file):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({"layers": [
        {"name": "wide", "kind": "fc", "in": 64, "out": 32},
        {"name": "narrow", "kind": "fc", "in": 32, "out": 32},
    ]}))
    result = runner.invoke(cli, ["mask", "-i", graph_file(ring_lattice(64, 4)), "--model", str(model),
                                 "-o", str(tmp_path / "mask.json")])
    assert result.exit_code == ExitStatus.INVALID


def test_mask_heatmap(runner, tmp_path, graph_file):
    plots = tmp_path / "plots"
    result = runner.invoke(cli, ["mask", "-i", graph_file(ring_lattice(64, 6)), "--model", "resnet18",
                                 "-o", str(tmp_path / "mask.json"), "--heatmap-dir", str(plots)])
    assert result.exit_code == ExitStatus.OK
    assert list(plots.glob("mask_*.png"))


# =============================================================================
# verify
# =============================================================================

def test_verify_k4(runner, graph_file):
    result = runner.invoke(cli, ["verify", "-i", graph_file(complete_graph(4)), "--layers", "3"])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["gr_graph"] == 2.0
    assert data["gr_gradient"] == 2.0
    assert data["checks"] == {"aopu": "PASS", "gr": "PASS"}


def test_verify_bipartite_is_invalid(runner, graph_file):
    result = runner.invoke(cli, ["verify", "-i", graph_file(ring_lattice(4, 2))])
    assert result.exit_code == ExitStatus.INVALID
    assert "InfiniteGR" in result.stderr


def test_verify_searched_64_4(runner, tmp_path, graph_file):
    searched = tmp_path / "searched.txt"
    runner.invoke(cli, ["search", "-i", graph_file(ring_lattice(64, 4)), "-m", "300", "-o", str(searched)])
    result = runner.invoke(cli, ["verify", "-i", str(searched), "--layers", "15"])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["aopu_graph"] == data["aopu_gradient"]


# =============================================================================
# bench
# =============================================================================

def test_bench_64_4(runner):
    result = runner.invoke(cli, ["bench", "--nodes", "64", "--degree", "4", "--group-size", "8",
                                 "--batch", "64", "--repeats", "2", "--self-check"])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["flops_ratio"] == 0.0625
    assert data["k"] == 4


def test_bench_zero_repeats(runner):
    result = runner.invoke(cli, ["bench", "--repeats", "0"])
    assert result.exit_code == ExitStatus.USAGE


def test_bench_odd_degree(runner):
    result = runner.invoke(cli, ["bench", "--nodes", "64", "--degree", "7", "--repeats", "1", "--self-check"])
    assert result.exit_code == ExitStatus.OK
    data = stdout_json(result)
    assert data["k"] == 7
    assert data["flops_ratio"] == 7 / 64


def test_bench_odd_node_degree_product_is_usage_error(runner):
    result = runner.invoke(cli, ["bench", "--nodes", "63", "--degree", "5"])
    assert result.exit_code == ExitStatus.USAGE
    assert "--degree" in result.stderr
