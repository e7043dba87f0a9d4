"""
Analysis metrics of a graph structure.

Gradient-Resistance (GR) and average output-neuron parameter usage (AOPU) are
both computed from walk sets: ``W_r(a)`` is the set of nodes reachable from
``a`` by a walk of exactly r edges. In the layered network built from a graph,
``W_r(j)`` is the set of groups that the gradient of output group j reaches
after r backward steps. The module also holds the BFS spanning tree view of
ASPL and the theoretical ASPL lower bound of a k-regular graph.
"""
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import networkx as nx
import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from topoprune.graphs.core import aspl, distance_matrix, is_bipartite, is_connected
from topoprune.graphs.models import Bfsst, LowerBoundParams, MetricsReport, RegularGraph, WalkFrontier
from topoprune.utils.errors import Disconnected, InfiniteGR, InvalidN, TopopruneError, UnsupportedDegree


def _transition(g: RegularGraph, self_loops: bool) -> np.ndarray:
    return g.adjacency_matrix(self_loops=self_loops).astype(np.int64)


def _require_connected(g: RegularGraph) -> None:
    if not is_connected(g):
        raise Disconnected("metric is only defined for connected graphs")


def _require_finite_gr(g: RegularGraph, self_loops: bool) -> None:
    _require_connected(g)
    if not self_loops and is_bipartite(g):
        raise InfiniteGR("graph is bipartite: walk sets alternate sides and never cover every node")


# =============================================================================
# Walk sets and Gradient-Resistance
# =============================================================================

def walk_frontier(g: RegularGraph, source: int, rounds: int, self_loops: bool = False) -> WalkFrontier:
    """Walk sets of exact length 0..rounds from ``source``."""
    a = _transition(g, self_loops)
    v = np.zeros(g.n, dtype=np.int64)
    v[source] = 1
    by_round = [frozenset([source])]
    for _ in range(rounds):
        v = (a @ v > 0).astype(np.int64)
        by_round.append(frozenset(np.flatnonzero(v).tolist()))
    return WalkFrontier(source=source, by_round=by_round)


def gr_all_nodes(g: RegularGraph, self_loops: bool = False) -> np.ndarray:
    """
    GR of every node at once.

    Column j of the frontier matrix is the walk set of node j; a node's GR is
    the first round at which its column is all ones. Once a walk set is the
    whole node set it stays so because no node is isolated.
    """
    _require_finite_gr(g, self_loops)
    a = _transition(g, self_loops)
    frontier = np.eye(g.n, dtype=np.int64)
    rounds = np.zeros(g.n, dtype=np.int64)
    for r in range(1, 2 * g.n + 1):
        frontier = (a @ frontier > 0).astype(np.int64)
        newly = frontier.all(axis=0) & (rounds == 0)
        rounds[newly] = r
        if rounds.all():
            return rounds
    raise InfiniteGR("walk sets did not cover the graph within 2n rounds")


def gr_node(g: RegularGraph, a: int, self_loops: bool = False) -> int:
    """
    Gradient-Resistance of node ``a``.

    Returns:
        int: Smallest R >= 1 such that every node is reached by a walk of
        exactly R edges from ``a``.

    Raises:
        Disconnected: If the graph is not connected.
        InfiniteGR: If the graph is bipartite.
    """
    _require_finite_gr(g, self_loops)
    frontier = walk_frontier(g, a, 2 * g.n, self_loops=self_loops)
    for r, nodes in enumerate(frontier.by_round[1:], start=1):
        if len(nodes) == g.n:
            return r
    raise InfiniteGR(f"walk sets from node {a} did not cover the graph")


def gr_graph(g: RegularGraph, self_loops: bool = False) -> float:
    """Mean GR over all nodes."""
    return float(gr_all_nodes(g, self_loops=self_loops).mean())


# =============================================================================
# Parameter usage
# =============================================================================

def aopu_per_node(g: RegularGraph, layers: int, group_size: int = 1, self_loops: bool = False) -> np.ndarray:
    """
    Parameters on gradient paths of each output group.

    For output group j the backward pass crosses ``layers - 1`` masked weight
    matrices. At backward depth d the gradient sits on the groups of W_d(j) and
    every such group pulls from all of its graph neighbors, i.e. ``deg(v)``
    blocks of ``group_size**2`` weights each. Biases are not counted.
    """
    if layers < 2:
        raise TopopruneError(f"need at least 2 layers, got {layers}")
    _require_connected(g)
    a = _transition(g, self_loops)
    degree = a.sum(axis=1)
    frontier = np.eye(g.n, dtype=np.int64)
    usage = np.zeros(g.n, dtype=np.int64)
    for _ in range(layers - 1):
        usage += degree @ frontier
        frontier = (a @ frontier > 0).astype(np.int64)
    return usage * group_size * group_size


def aopu(g: RegularGraph, layers: int, group_size: int = 1, self_loops: bool = False) -> float:
    """Average output-neuron parameter usage of the network built from ``g``."""
    return float(aopu_per_node(g, layers, group_size, self_loops=self_loops).mean())


# =============================================================================
# BFS spanning trees and the ASPL lower bound
# =============================================================================

def bfsst(g: RegularGraph, root: int) -> Bfsst:
    """Breadth-first spanning tree rooted at ``root``."""
    _require_connected(g)
    graph = g.to_networkx()
    depth = nx.single_source_shortest_path_length(graph, root)
    parent: List[Optional[int]] = [None] * g.n
    for child, par in nx.bfs_predecessors(graph, root):
        parent[child] = par
    return Bfsst(root=root, parent=parent, depth=[depth[v] for v in range(g.n)])


def aspl_from_bfssts(g: RegularGraph) -> float:
    """Mean of the per-root tree ASPLs; equals ``aspl(g)``."""
    per_root = [bfsst(g, root).depth_sum / (g.n - 1) for root in range(g.n)]
    return sum(per_root) / g.n


def eccentricity(g: RegularGraph) -> np.ndarray:
    return distance_matrix(g).max(axis=1)


def diameter(g: RegularGraph) -> int:
    return int(eccentricity(g).max())


def _check_degree(k: int) -> None:
    if k <= 2:
        raise UnsupportedDegree(f"lower bound formulas need k >= 3, got {k}")


def theta_value(N: int, k: int) -> float:
    """The unrounded filled-layer formula ln((N-1)(k-2)/k + 1) / ln(k-1)."""
    _check_degree(k)
    return math.log((N - 1) * (k - 2) / k + 1) / math.log(k - 1)


def theta(N: int, k: int) -> int:
    """
    Number of completely filled layers in the ideal BFS tree.

    Counted in integers: the largest t with sum_{i=1..t} k(k-1)^(i-1) <= N-1,
    which is exactly the floor of ``theta_value``.
    """
    _check_degree(k)
    filled, layer, t = 0, k, 0
    while filled + layer <= N - 1:
        filled += layer
        layer *= k - 1
        t += 1
    return t


def lower_bound_fraction(N: int, k: int) -> Fraction:
    """
    Exact ASPL lower bound of an N-node k-regular graph.

    Layers 1..theta of the ideal tree are full; the remaining nodes sit at
    depth theta+1.
    """
    _check_degree(k)
    if N <= k:
        raise InvalidN(f"node count {N} must exceed degree {k}")
    t = theta(N, k)
    full = sum(k * (k - 1) ** (i - 1) for i in range(1, t + 1))
    weighted = sum(k * i * (k - 1) ** (i - 1) for i in range(1, t + 1))
    remainder = N - 1 - full
    if remainder < 0:
        raise InvalidN(f"theta={t} overfills the tree for N={N}, k={k}")
    return Fraction(weighted + (t + 1) * remainder, N - 1)


def lower_bound_aspl(N: int, k: int) -> float:
    return float(lower_bound_fraction(N, k))


def lower_bound_closed_form(N: int, k: int) -> Fraction:
    """
    The closed form of the bound, with the remainder written as
    N + (2 - k(k-1)^theta) / (k-2). Agrees with ``lower_bound_fraction``.
    """
    _check_degree(k)
    if N <= k:
        raise InvalidN(f"node count {N} must exceed degree {k}")
    t = theta(N, k)
    weighted = sum(k * i * (k - 1) ** (i - 1) for i in range(1, t + 1))
    remainder = N + Fraction(2 - k * (k - 1) ** t, k - 2)
    return (weighted + (t + 1) * remainder) / (N - 1)


def lower_bound_params(N: int, k: int) -> LowerBoundParams:
    return LowerBoundParams(N=N, k=k, theta=theta(N, k), L_lower=lower_bound_aspl(N, k))


# =============================================================================
# Reports
# =============================================================================

def metrics_report(g: RegularGraph, layers: int = 15, group_size: int = 1) -> MetricsReport:
    """
    ASPL, GR, AOPU and lower bound of one graph.

    Bipartite graphs report GR as None (serialized as ``"inf"``). The bound and
    theta are omitted for degrees below 3.
    """
    _require_connected(g)
    gr = None if is_bipartite(g) else gr_graph(g)
    bound, th = None, None
    if g.k >= 3 and g.n > g.k:
        bound, th = lower_bound_aspl(g.n, g.k), theta(g.n, g.k)
    return MetricsReport(
        n=g.n,
        k=g.k,
        aspl=aspl(g),
        gr=gr,
        aopu=aopu(g, layers, group_size),
        lower_bound=bound,
        theta=th,
    )


def snapshot_metrics(graphs: Sequence[RegularGraph], layers: int = 15, group_size: int = 1) -> pd.DataFrame:
    """One row of aspl / gr / aopu per graph; gr is NaN for bipartite graphs."""
    records = []
    for idx, g in enumerate(graphs):
        report = metrics_report(g, layers, group_size)
        records.append({
            "snapshot": idx,
            "aspl": report.aspl,
            "gr": report.gr if report.gr is not None else np.nan,
            "aopu": report.aopu,
        })
    return pd.DataFrame.from_records(records, columns=["snapshot", "aspl", "gr", "aopu"])


def metric_correlations(frame: pd.DataFrame) -> Dict[str, float]:
    """Spearman rank correlation of ASPL against GR and against AOPU."""
    finite = frame.dropna(subset=["gr"])
    rho_gr, _ = spearmanr(finite["aspl"], finite["gr"])
    rho_aopu, _ = spearmanr(frame["aspl"], frame["aopu"])
    return {"aspl_gr": float(rho_gr), "aspl_aopu": float(rho_aopu)}
