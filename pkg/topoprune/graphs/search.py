"""
ASPL minimization by degree-preserving edge swaps.

Each attempt picks two edges (i, j), (p, q), rewires them to (i, p), (j, q),
drops the candidate if it is disconnected and keeps it if the ASPL did not
grow. Every attempt consumes budget, including rejected proposals.
"""
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from topoprune.graphs.core import is_connected, total_distance
from topoprune.graphs.models import RegularGraph, SearchConfig, SearchTrajectory, TrajectoryRow
from topoprune.utils import console
from topoprune.utils.errors import DegenerateGraph, Disconnected

Swap = Tuple[int, int, int, int]


def swap_candidate(g: RegularGraph, first: Tuple[int, int], second: Tuple[int, int]) -> Optional[Swap]:
    """
    Checks the rewiring (i,j),(p,q) -> (i,p),(j,q) for the two oriented edges.

    Returns:
        Optional[Swap]: ``(i, j, p, q)`` or None when the endpoints are not four
        distinct nodes or a new edge already exists.
    """
    i, j = first
    p, q = second
    if len({i, j, p, q}) < 4:
        return None
    if g.has_edge(i, p) or g.has_edge(j, q):
        return None
    return (i, j, p, q)


def propose_swap(g: RegularGraph, rng: np.random.Generator) -> Optional[Swap]:
    """
    Draws two distinct edges uniformly and proposes swapping them.

    The second edge is flipped with probability 1/2 so both rewirings of a pair
    are reachable. None means the proposal was rejected.
    """
    first_idx, second_idx = rng.choice(len(g.edges), size=2, replace=False)
    first = g.edges[first_idx]
    p, q = g.edges[second_idx]
    if rng.random() < 0.5:
        p, q = q, p
    return swap_candidate(g, first, (p, q))


def minimize_aspl(g0: RegularGraph, cfg: SearchConfig) -> Tuple[RegularGraph, SearchTrajectory]:
    """
    Runs exactly ``cfg.m`` swap attempts, accepting non-increasing ASPL.

    ASPL values are compared as exact integer distance totals (the pair count
    is fixed), so ties are accepted reproducibly.

    Args:
        g0 (RegularGraph): Connected starting graph.
        cfg (SearchConfig): Attempt budget, seed and recording strides.

    Returns:
        Tuple[RegularGraph, SearchTrajectory]: Final graph and the trajectory.

    Raises:
        DegenerateGraph: If g0 has fewer than two edges.
        Disconnected: If g0 is not connected.
    """
    if len(g0.edges) < 2:
        raise DegenerateGraph(f"need at least 2 edges to swap, got {len(g0.edges)}")
    if not is_connected(g0):
        raise Disconnected("search needs a connected starting graph")

    rng = np.random.default_rng(cfg.seed)
    pairs = g0.n * (g0.n - 1)
    current = g0
    current_total = total_distance(g0)
    trajectory = SearchTrajectory(
        n=g0.n, initial_aspl=current_total / pairs, initial_total_distance=current_total
    )
    if cfg.snapshot_every:
        trajectory.snapshots.append(g0)

    console.info(f"Searching {g0.n}_{g0.k}: {cfg.m} attempts, seed {cfg.seed}, "
                 f"initial ASPL {current_total / pairs:.4f}")
    accepted_count = 0
    for attempt in range(1, cfg.m + 1):
        swap = propose_swap(current, rng)
        accepted = False
        if swap is not None:
            candidate = current.swap(*swap)
            if is_connected(candidate):
                candidate_total = total_distance(candidate)
                if candidate_total <= current_total:
                    current, current_total, accepted = candidate, candidate_total, True

        if accepted:
            accepted_count += 1
            if cfg.snapshot_every and accepted_count % cfg.snapshot_every == 0:
                trajectory.snapshots.append(current)
        if attempt % cfg.record_every == 0 or attempt == cfg.m:
            trajectory.rows.append(TrajectoryRow(
                attempt_index=attempt,
                accepted=accepted,
                aspl_after=current_total / pairs,
                total_distance=current_total,
                swap=swap,
            ))

    trajectory.accepted_swaps = accepted_count
    console.success(f"Search done: ASPL {trajectory.initial_aspl:.4f} -> {current_total / pairs:.4f} "
                    f"({accepted_count} accepted)")
    return current, trajectory


def search_many(g0: RegularGraph, seeds: Iterable[int],
                cfg: SearchConfig) -> List[Tuple[RegularGraph, SearchTrajectory]]:
    """
    Independent restarts from the same graph, sorted best first.

    Runs share nothing but the read-only starting graph.
    """
    results = []
    for seed in seeds:
        run_cfg = cfg.model_copy(update={"seed": seed})
        results.append(minimize_aspl(g0, run_cfg))
    results.sort(key=lambda r: r[1].rows[-1].total_distance if r[1].rows else r[1].initial_total_distance)
    return results


def write_trajectory(t: SearchTrajectory, path: Union[str, Path]) -> None:
    """Writes ``attempt,accepted,aspl`` rows with the ASPL at 6 decimals."""
    t.to_frame().to_csv(path, index=False, float_format="%.6f")


def read_trajectory(path: Union[str, Path]) -> pd.DataFrame:
    """Reads a trajectory CSV back into a frame."""
    return pd.read_csv(path, dtype={"attempt": "int64", "accepted": "bool", "aspl": "float64"})
