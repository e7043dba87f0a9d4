"""
Pydantic models for graph data structures.

This module defines the regular graph used as the search state, the search
configuration and trajectory, and the records produced by the graph metrics.
"""
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from scipy.sparse import csr_matrix

from topoprune.utils.errors import InvariantViolation

Edge = Tuple[int, int]

DEFAULT_ATTEMPTS = 10000


class GraphKind(str, Enum):
    """How an initial graph is produced."""
    RING_LATTICE = "ring"
    RANDOM_REGULAR = "random"
    FROM_FILE = "file"


class RegularGraph(BaseModel):
    """
    Immutable simple undirected k-regular graph on nodes ``0..n-1``.

    Edges are stored normalized (``u < v``) and sorted, which makes edge
    indices and every derived structure deterministic.
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(gt=0)
    k: int = Field(gt=0)
    edges: Tuple[Edge, ...]

    @field_validator("edges", mode="before")
    @classmethod
    def normalize_edges(cls, v):
        normalized = []
        for u, w in v:
            u, w = int(u), int(w)
            if u == w:
                raise ValueError(f"self-loop at node {u}")
            normalized.append((u, w) if u < w else (w, u))
        normalized.sort()
        for a, b in zip(normalized, normalized[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a}")
        return tuple(normalized)

    @model_validator(mode="after")
    def check_regular(self):
        if self.k >= self.n:
            raise ValueError(f"degree {self.k} must be smaller than node count {self.n}")
        if (self.n * self.k) % 2:
            raise ValueError(f"n*k = {self.n * self.k} is odd")
        if len(self.edges) != self.n * self.k // 2:
            raise ValueError(f"expected {self.n * self.k // 2} edges, got {len(self.edges)}")
        degree = [0] * self.n
        for u, w in self.edges:
            if w >= self.n or u < 0:
                raise ValueError(f"edge ({u}, {w}) outside node range 0..{self.n - 1}")
            degree[u] += 1
            degree[w] += 1
        bad = [v for v, d in enumerate(degree) if d != self.k]
        if bad:
            raise ValueError(f"node {bad[0]} has degree {degree[bad[0]]}, expected {self.k}")
        return self

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], k: Optional[int] = None) -> "RegularGraph":
        """
        Build a graph, reporting any invariant failure as ``InvariantViolation``.

        Args:
            n: Node count.
            edges: Unordered node pairs.
            k: Expected degree; inferred from the edge count when omitted.
        """
        edges = list(edges)
        if k is None:
            k = 2 * len(edges) // n if n else 0
        try:
            return cls(n=n, k=k, edges=edges)
        except ValidationError as e:
            messages = "; ".join(err["msg"] for err in e.errors())
            raise InvariantViolation(messages) from e

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        """Sorted neighbor list for every node."""
        neighbors: List[List[int]] = [[] for _ in range(self.n)]
        for u, w in self.edges:
            neighbors[u].append(w)
            neighbors[w].append(u)
        return tuple(tuple(sorted(nb)) for nb in neighbors)

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def csr(self) -> csr_matrix:
        """Symmetric 0/1 adjacency as a scipy sparse matrix."""
        arr = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        rows = np.concatenate([arr[:, 0], arr[:, 1]])
        cols = np.concatenate([arr[:, 1], arr[:, 0]])
        data = np.ones(len(rows), dtype=np.int8)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def adjacency_matrix(self, self_loops: bool = False) -> np.ndarray:
        """Dense boolean adjacency, optionally with the diagonal set."""
        a = self.csr.toarray().astype(bool)
        if self_loops:
            np.fill_diagonal(a, True)
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edge_set or (v, u) in self.edge_set

    def swap(self, i: int, j: int, p: int, q: int) -> "RegularGraph":
        """Replace edges (i,j),(p,q) with (i,p),(j,q)."""
        removed = {tuple(sorted((i, j))), tuple(sorted((p, q)))}
        edges = [e for e in self.edges if e not in removed]
        edges += [(i, p), (j, q)]
        return RegularGraph.from_edges(self.n, edges, self.k)

    def relabel(self, perm: Sequence[int]) -> "RegularGraph":
        """Graph with node ``v`` renamed to ``perm[v]``."""
        if sorted(perm) != list(range(self.n)):
            raise InvariantViolation("relabeling must be a permutation of 0..n-1")
        return RegularGraph.from_edges(self.n, [(perm[u], perm[w]) for u, w in self.edges], self.k)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph

    def degree_histogram(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for nb in self.adjacency:
            counts[len(nb)] = counts.get(len(nb), 0) + 1
        return counts


# =============================================================================
# Search
# =============================================================================

class SearchConfig(BaseModel):
    """Settings of one ASPL minimization run."""
    m: int = Field(default=DEFAULT_ATTEMPTS, ge=1)
    seed: int = 0
    record_every: int = Field(default=1, ge=1)
    snapshot_every: int = Field(default=0, ge=0)


class TrajectoryRow(BaseModel):
    attempt_index: int
    accepted: bool
    aspl_after: float
    total_distance: int
    swap: Optional[Tuple[int, int, int, int]] = None


class SearchTrajectory(BaseModel):
    """
    Per-attempt record of a search run.

    ``aspl_after`` is the ASPL of the live graph after the attempt, so the
    value only moves on accepted rows.
    """
    n: int
    initial_aspl: float
    initial_total_distance: int
    rows: List[TrajectoryRow] = []
    snapshots: List[RegularGraph] = []
    accepted_swaps: Optional[int] = None  # counted over every attempt, not only recorded rows

    @property
    def accepted_count(self) -> int:
        if self.accepted_swaps is not None:
            return self.accepted_swaps
        return sum(1 for row in self.rows if row.accepted)

    @property
    def final_aspl(self) -> float:
        return self.rows[-1].aspl_after if self.rows else self.initial_aspl

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "attempt": [row.attempt_index for row in self.rows],
                "accepted": [row.accepted for row in self.rows],
                "aspl": [row.aspl_after for row in self.rows],
            },
            columns=["attempt", "accepted", "aspl"],
        )


# =============================================================================
# Metrics
# =============================================================================

class WalkFrontier(BaseModel):
    """Nodes reachable from ``source`` by walks of exactly r edges, per round r."""
    source: int
    by_round: List[frozenset]


class Bfsst(BaseModel):
    """Breadth-first search spanning tree."""
    root: int
    parent: List[Optional[int]]
    depth: List[int]

    @property
    def max_depth(self) -> int:
        return max(self.depth)

    @property
    def depth_sum(self) -> int:
        return sum(self.depth)


class LowerBoundParams(BaseModel):
    N: int
    k: int
    theta: int = Field(ge=0)
    L_lower: float


class MetricsReport(BaseModel):
    """ASPL, GR, AOPU and the lower bound of one graph."""
    n: int
    k: int
    aspl: float
    gr: Optional[float] = None  # None means infinite (bipartite graph)
    aopu: float
    lower_bound: Optional[float] = None
    theta: Optional[int] = None

    def to_json_dict(self) -> dict:
        data = self.model_dump()
        if self.gr is None:
            data["gr"] = "inf"
        return data
