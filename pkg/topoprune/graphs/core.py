"""
Regular graph generation and basic analysis.

This module builds the initial graphs of the search (ring lattice, random
regular, complete), answers connectivity and bipartiteness questions, computes
the average shortest path length and reads/writes the edge-list format.
"""
from pathlib import Path
from typing import Optional, Union

import networkx as nx
import numpy as np
import pandas as pd
from scipy.sparse.csgraph import breadth_first_order, shortest_path

from topoprune.graphs.models import GraphKind, RegularGraph
from topoprune.utils import console
from topoprune.utils.errors import (
    DegreeTooLarge,
    Disconnected,
    InfeasibleDegree,
    OddDegree,
    ParseError,
    RetryExhausted,
)

DEFAULT_RETRY_CAP = 10_000

PathLike = Union[str, Path]


# =============================================================================
# Generators
# =============================================================================

def ring_lattice(n: int, k: int) -> RegularGraph:
    """
    Builds the nearest-neighbor ring: node i is joined to i±1, ..., i±k/2 (mod n).

    Args:
        n (int): Node count.
        k (int): Even degree, 0 < k < n.

    Returns:
        RegularGraph: The circulant graph.

    Raises:
        OddDegree: If k is odd.
        DegreeTooLarge: If k >= n.
    """
    if k <= 0:
        raise InfeasibleDegree(f"degree must be positive, got {k}")
    if k % 2:
        raise OddDegree(f"ring lattice needs an even degree, got {k}")
    if k >= n:
        raise DegreeTooLarge(f"degree {k} must be smaller than node count {n}")
    edges = [(i, (i + offset) % n) for i in range(n) for offset in range(1, k // 2 + 1)]
    return RegularGraph.from_edges(n, edges, k)


def ring_with_diameters(n: int, k: int) -> RegularGraph:
    """
    Odd-degree circulant: the ring lattice of degree k-1 plus the antipodal
    chords (i, i + n/2). Degree 1 is the antipodal matching alone.

    Raises:
        OddDegree: If k is even or n is odd.
        DegreeTooLarge: If k >= n.
    """
    if k <= 0:
        raise InfeasibleDegree(f"degree must be positive, got {k}")
    if k % 2 == 0 or n % 2:
        raise OddDegree(f"antipodal chords need an odd degree on an even node count, got {n}_{k}")
    if k >= n:
        raise DegreeTooLarge(f"degree {k} must be smaller than node count {n}")
    half = n // 2
    edges = [(i, i + half) for i in range(half)]
    edges += [(i, (i + offset) % n) for i in range(n) for offset in range(1, (k - 1) // 2 + 1)]
    return RegularGraph.from_edges(n, edges, k)


def complete_graph(n: int) -> RegularGraph:
    """K_n as an (n-1)-regular graph."""
    if n < 2:
        raise InfeasibleDegree(f"complete graph needs at least 2 nodes, got {n}")
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return RegularGraph.from_edges(n, edges, n - 1)


def random_regular(n: int, k: int, seed: int, retry_cap: int = DEFAULT_RETRY_CAP) -> RegularGraph:
    """
    Samples a simple k-regular graph with the configuration model.

    Every node gets k stubs, the stubs are shuffled and paired in order. A
    pairing with any self-loop or parallel edge is thrown away entirely and a
    new one is drawn, so accepted graphs are uniform over simple k-regular
    graphs.

    Args:
        n (int): Node count.
        k (int): Degree.
        seed (int): RNG seed; equal seeds give identical edge sets.
        retry_cap (int): Maximum number of pairings to draw.

    Returns:
        RegularGraph: The sampled graph.

    Raises:
        InfeasibleDegree: If n*k is odd or k >= n.
        RetryExhausted: If no simple pairing was found within the cap.
    """
    if k <= 0 or k >= n or (n * k) % 2:
        raise InfeasibleDegree(f"no simple {k}-regular graph on {n} nodes")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), k)
    for _ in range(retry_cap):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        pairs.sort(axis=1)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        codes = pairs[:, 0] * n + pairs[:, 1]
        if len(np.unique(codes)) != len(codes):
            continue
        return RegularGraph.from_edges(n, pairs.tolist(), k)
    raise RetryExhausted(f"no simple {k}-regular pairing on {n} nodes after {retry_cap} attempts")


def make_graph(kind: GraphKind, n: int = 0, k: int = 0, seed: int = 0,
               path: Optional[PathLike] = None) -> RegularGraph:
    """Dispatches on the initializer kind."""
    if kind == GraphKind.RING_LATTICE:
        return ring_lattice(n, k)
    if kind == GraphKind.RANDOM_REGULAR:
        return random_regular(n, k, seed)
    if path is None:
        raise ParseError("a file path is required for graphs read from file")
    return read_graph(path)


# =============================================================================
# Analysis
# =============================================================================

def is_connected(g: RegularGraph) -> bool:
    """True iff a BFS from node 0 reaches every node."""
    order = breadth_first_order(g.csr, 0, directed=False, return_predecessors=False)
    return len(order) == g.n


def is_bipartite(g: RegularGraph) -> bool:
    """
    True iff the graph admits a BFS 2-colouring.

    Raises:
        Disconnected: If the graph is not connected.
    """
    if not is_connected(g):
        raise Disconnected("bipartiteness is only defined here for connected graphs")
    return nx.is_bipartite(g.to_networkx())


def distance_matrix(g: RegularGraph) -> np.ndarray:
    """
    All-pairs BFS distances as an integer matrix.

    Raises:
        Disconnected: If some pair is unreachable.
    """
    dist = shortest_path(g.csr, method="D", directed=False, unweighted=True)
    if np.isinf(dist).any():
        raise Disconnected("graph is disconnected; shortest paths are unbounded")
    return dist.astype(np.int64)


def total_distance(g: RegularGraph) -> int:
    """Sum of shortest-path lengths over all ordered node pairs."""
    return int(distance_matrix(g).sum())


def aspl(g: RegularGraph) -> float:
    """
    Average shortest path length over all ordered pairs (u, v), u != v.

    The ordered-pair mean equals the unordered-pair mean because distances are
    symmetric.
    """
    if g.n < 2:
        return 0.0
    return total_distance(g) / (g.n * (g.n - 1))


# =============================================================================
# Edge-list files
# =============================================================================

def write_graph(g: RegularGraph, path: PathLike) -> None:
    """
    Writes the edge list: an ``n k`` header then one sorted ``u v`` line per edge.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{g.n} {g.k}\n")
        for u, v in g.edges:
            f.write(f"{u} {v}\n")


def read_graph(path: PathLike) -> RegularGraph:
    """
    Reads an edge-list file.

    Raises:
        ParseError: If the file is not in the edge-list format.
        InvariantViolation: If the edges do not form a simple k-regular graph.
    """
    try:
        df = pd.read_csv(path, sep=r"\s+", comment="#", header=None, dtype=str,
                         skip_blank_lines=True, engine="python")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e

    if df.shape[1] != 2 or df.isna().any().any():
        raise ParseError(f"{path}: every line must hold exactly two integers")
    try:
        values = df.astype(np.int64).to_numpy()
    except ValueError as e:
        raise ParseError(f"{path}: non-integer token ({e})") from e

    n, k = (int(x) for x in values[0])
    if n <= 0 or k <= 0:
        raise ParseError(f"{path}: header must be two positive integers, got '{n} {k}'")
    graph = RegularGraph.from_edges(n, values[1:].tolist(), k)
    console.info(f"Loaded {n}-node {k}-regular graph from {path}")
    return graph
