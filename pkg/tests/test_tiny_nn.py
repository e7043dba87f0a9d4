import networkx as nx
import numpy as np
import pandas as pd
import pytest

from topoprune.graphs.core import aspl, complete_graph, is_connected, random_regular, ring_lattice
from topoprune.graphs.metrics import aopu, aopu_per_node, gr_all_nodes, gr_node
from topoprune.graphs.models import SearchConfig
from topoprune.graphs.search import minimize_aspl
from topoprune.tiny_nn.datasets import BlobConfig, load_blob_config, make_blobs
from topoprune.tiny_nn.mlp import (
    Activation,
    accuracy_vs_aspl,
    backward,
    build,
    build_classifier,
    forward,
    grad_reach_count,
    graph_reach_summary,
    sgd_step,
    softmax_cross_entropy,
    train_demo,
    write_accuracy_trace,
)
from topoprune.utils.errors import NotOracleMode, ParseError, RetryExhausted, ShapeMismatch, TopopruneError


def connected_non_bipartite(n: int, k: int, seed: int):
    g = random_regular(n, k, seed)
    if not is_connected(g) or nx.is_bipartite(g.to_networkx()):
        return None
    return g


# =============================================================================
# Build and forward
# =============================================================================

def test_dense_build_has_full_matrices():
    m = build(complete_graph(6), layers=3, s=2, self_loops=True)
    assert all((w != 0).all() for w in m.weights)


def test_surviving_weights_per_layer(petersen):
    m = build(petersen, layers=4, s=3)
    assert m.surviving_weights() == [10 * 3 * 9] * 3
    for w, mask in zip(m.weights, m.masks):
        assert not w[~mask].any()
        assert (w[mask] >= 0.1).all() and (w[mask] <= 1.0).all()


def test_build_is_seeded(c5):
    a, b = build(c5, 4, 2, seed=9), build(c5, 4, 2, seed=9)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))


def test_build_needs_two_layers(c5):
    with pytest.raises(TopopruneError):
        build(c5, layers=1)


def test_forward_zero_input(c5):
    m = build(c5, 4, 2)
    assert not forward(m, np.zeros(10))[-1].any()


def test_forward_one_hot_through_c5(c5):
    m = build(c5, 2, 2)
    x = np.zeros(10)
    x[0] = 1.0  # unit 0 of group 0
    out = forward(m, x)[-1][0]
    support = {unit // 2 for unit in np.flatnonzero(out)}
    assert support == {1, 4}


def test_identity_forward_is_matrix_chain(petersen):
    m = build(petersen, 5, 2, seed=3)
    x = np.random.default_rng(0).standard_normal((3, 20))
    chain = np.linalg.multi_dot(m.weights[::-1])
    assert np.allclose(forward(m, x)[-1], x @ chain.T)


def test_forward_shape_mismatch(c5):
    with pytest.raises(ShapeMismatch):
        forward(build(c5, 3, 2), np.zeros(7))


# =============================================================================
# Gradients
# =============================================================================

def test_gradients_match_finite_differences(petersen):
    m = build(petersen, 4, 2, seed=1, activation=Activation.LEAKY_RELU)
    rng = np.random.default_rng(5)
    x = rng.uniform(-1, 1, (4, 20))
    r = rng.standard_normal((4, 20))

    def loss():
        return float((forward(m, x)[-1] * r).sum())

    grads = backward(m, x, r)
    eps = 1e-6
    for _ in range(10):
        layer = int(rng.integers(len(m.weights)))
        rows, cols = np.nonzero(m.masks[layer])
        pick = int(rng.integers(len(rows)))
        i, j = rows[pick], cols[pick]
        original = m.weights[layer][i, j]
        m.weights[layer][i, j] = original + eps
        up = loss()
        m.weights[layer][i, j] = original - eps
        down = loss()
        m.weights[layer][i, j] = original
        numeric = (up - down) / (2 * eps)
        assert grads.weights[layer][i, j] == pytest.approx(numeric, rel=1e-4, abs=1e-8)


def test_pruned_weights_get_no_gradient(c5):
    m = build(c5, 3, 2, activation=Activation.LEAKY_RELU)
    grads = backward(m, np.ones(10), np.ones(10))
    for gw, mask in zip(grads.weights, m.masks):
        assert not gw[~mask].any()


def test_softmax_cross_entropy_gradient():
    logits = np.array([[2.0, 0.5, -1.0], [0.1, 0.2, 0.3]])
    labels = np.array([0, 2])
    loss, grad = softmax_cross_entropy(logits, labels)
    probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    assert loss == pytest.approx(-np.log(probs[[0, 1], labels]).mean())
    assert np.allclose(grad.sum(axis=1), 0.0)


# =============================================================================
# Gradient reach oracle
# =============================================================================

def test_dense_network_reach():
    n, layers, s = 6, 4, 2
    m = build(complete_graph(n), layers, s, self_loops=True)
    report = grad_reach_count(m, 0)
    assert report.gr_observed == 1
    # Last matrix only through the group's own rows, earlier matrices fully.
    assert report.reached == n * s * s + (layers - 2) * (n * s) ** 2
    assert report.reached == aopu(complete_graph(n), layers, s, self_loops=True)


def test_reach_c5_matches_walk_sets(c5):
    m = build(c5, 4, 1)
    report = grad_reach_count(m, 0)
    assert report.reached_per_matrix == [6, 4, 2]
    assert report.gr_observed is None  # GR of C5 is 4, deeper than 3 backward steps
    deep = build(c5, 6, 1)
    assert grad_reach_count(deep, 0).gr_observed == gr_node(c5, 0) == 4


def test_reach_needs_oracle_mode(c5):
    with pytest.raises(NotOracleMode):
        grad_reach_count(build(c5, 3, activation=Activation.LEAKY_RELU), 0)


REACH_CASES = [(8, 3), (16, 3), (64, 3), (8, 4), (16, 4), (64, 4), (16, 6), (64, 6)]


def reach_graphs(per_case: int = 4):
    """Connected non-bipartite random graphs for every (n, k) in REACH_CASES."""
    graphs = []
    for n, k in REACH_CASES:
        found = 0
        for seed in range(10):
            try:
                g = connected_non_bipartite(n, k, seed)
            except RetryExhausted:
                continue
            if g is None:
                continue
            graphs.append((seed, g))
            found += 1
            if found == per_case:
                break
    return graphs


def test_reach_counts_equal_aopu():
    graphs = reach_graphs()
    assert len(graphs) >= 20
    assert {g.k for _, g in graphs} >= {3, 4}
    for seed, g in graphs:
        for s in (1, 2):
            layers = 6
            summary = graph_reach_summary(build(g, layers, s, seed=seed))
            assert np.array_equal(np.asarray(summary.counts), aopu_per_node(g, layers, s))
            assert summary.mean_reached == aopu(g, layers, s)
        if g.n in (16, 64):
            expected = gr_all_nodes(g)
            deep = graph_reach_summary(build(g, int(expected.max()) + 2, 1, seed=seed))
            assert [deep.gr_observed[j] for j in range(g.n)] == expected.tolist()


@pytest.mark.parametrize("n, k", [(8, 3), (10, 3), (12, 4), (9, 4)])
def test_observed_gr_matches_graph_gr(n, k):
    for seed in range(6):
        g = connected_non_bipartite(n, k, seed)
        if g is None:
            continue
        layers = 2 * n
        summary = graph_reach_summary(build(g, layers, 1, seed=seed))
        expected = gr_all_nodes(g)
        for j in range(n):
            assert summary.gr_observed[j] == expected[j]


def test_reach_is_relabeling_invariant():
    g = random_regular(12, 3, 0)
    perm = np.random.default_rng(1).permutation(12).tolist()
    h = g.relabel(perm)
    counts_g = graph_reach_summary(build(g, 5, 1, seed=0)).counts
    counts_h = graph_reach_summary(build(h, 5, 1, seed=7)).counts
    for j in range(12):
        assert counts_h[perm[j]] == counts_g[j]


# =============================================================================
# Training demo
# =============================================================================

def test_make_blobs_is_seeded():
    cfg = BlobConfig(classes=3, dims=4, points=90, seed=2)
    x1, y1 = make_blobs(cfg)
    x2, y2 = make_blobs(cfg)
    assert x1.shape == (90, 4)
    assert np.array_equal(x1, x2) and np.array_equal(y1, y2)
    assert sorted(np.bincount(y1)) == [30, 30, 30]


def test_training_keeps_pruned_weights_zero():
    g = ring_lattice(8, 2)
    x, y = make_blobs(BlobConfig(points=64, seed=1))
    m = build_classifier(g, dims=2, classes=2, s=2, hidden_layers=3, seed=0)
    for _ in range(20):
        sgd_step(m, x, y, lr=0.1)
        for w, mask in zip(m.weights, m.masks):
            assert np.abs(w[~mask]).max(initial=0.0) == 0.0


def test_dense_mapping_learns_two_blobs():
    x, y = make_blobs(BlobConfig(classes=2, dims=2, points=400, seed=0))
    trace = train_demo(complete_graph(8), (x, y), epochs=50, seed=0, self_loops=True)
    assert len(trace.epochs) == 50
    assert trace.final_val_acc >= 0.95


def test_accuracy_trace_csv(tmp_path):
    x, y = make_blobs(BlobConfig(points=100, seed=3))
    trace = train_demo(ring_lattice(8, 4), (x, y), epochs=3, seed=1)
    path = tmp_path / "acc.csv"
    write_accuracy_trace(trace, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["epoch", "train_acc", "val_acc"]
    assert frame["epoch"].tolist() == [1, 2, 3]
    assert frame["val_acc"].between(0, 1).all()


def test_accuracy_follows_search_snapshots():
    _, trajectory = minimize_aspl(ring_lattice(16, 4), SearchConfig(m=200, seed=0, snapshot_every=5))
    snapshots = trajectory.snapshots[:3]
    dataset = make_blobs(BlobConfig(classes=3, dims=4, points=120, seed=0))
    frame = accuracy_vs_aspl(snapshots, dataset, epochs=2, seed=0, s=2, hidden_layers=2)
    assert list(frame.columns) == ["aspl", "val_acc"]
    assert frame["aspl"].tolist() == [aspl(g) for g in snapshots]
    assert frame["val_acc"].between(0, 1).all()


def test_load_blob_config(tmp_path):
    path = tmp_path / "blobs.json"
    path.write_text('{"classes": 4, "dims": 8, "points": 800, "spread": 1.5}')
    cfg = load_blob_config(path)
    assert cfg == BlobConfig(classes=4, dims=8, points=800, seed=0, spread=1.5)


@pytest.mark.parametrize("content", ['{"classes": 1}', '{"clases": 3}', "not json"])
def test_load_blob_config_rejects_bad_files(tmp_path, content):
    path = tmp_path / "blobs.json"
    path.write_text(content)
    with pytest.raises(ParseError):
        load_blob_config(path)
