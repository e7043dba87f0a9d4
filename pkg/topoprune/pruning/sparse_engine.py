"""
Dense computation of regular sparse layers.

A layer masked by a k-regular graph keeps exactly k blocks per output group.
``encode`` packs those blocks into a dense ``(n, k, s_out, s_in)`` array,
``regular_matmul`` gathers the k input slices of every output group and runs
one batched dense multiply, and ``decode`` restores the full matrix. The naive
reference multiplies the mask into the full weight matrix and runs the whole
dense product.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from topoprune.graphs.core import complete_graph, ring_lattice, ring_with_diameters
from topoprune.graphs.models import RegularGraph
from topoprune.utils import console
from topoprune.utils.errors import NonconformingSparsity, OracleMismatch, ShapeMismatch

RELATIVE_TOLERANCE = 1e-6


class GatherPlan(BaseModel):
    """Input groups gathered by each output group, in sorted neighbor order."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    index: np.ndarray  # (n, k)

    @property
    def n(self) -> int:
        return self.index.shape[0]

    @property
    def k(self) -> int:
        return self.index.shape[1]

    @property
    def shared(self) -> bool:
        """True when every output group gathers the same input groups."""
        return bool((self.index == self.index[0]).all())


class BlockWeights(BaseModel):
    """Packed surviving blocks: ``blocks[j, t]`` multiplies input group ``plan.index[j, t]``."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    k: int
    s_in: int
    s_out: int
    neighbors: np.ndarray  # (n, k)
    blocks: np.ndarray     # (n, k, s_out, s_in)


class BenchReport(BaseModel):
    n: int
    k: int
    s: int
    batch: int
    t_naive_ms: float
    t_regular_ms: float
    flops_ratio: float
    threads: int


def gather_plan(g: RegularGraph, self_loops: bool = False) -> GatherPlan:
    """Derives the gather order from the graph alone."""
    rows = [sorted(set(nb) | {j}) if self_loops else list(nb) for j, nb in enumerate(g.adjacency)]
    return GatherPlan(index=np.asarray(rows, dtype=np.int64))


def _group_sizes(weights: np.ndarray, n: int):
    rows, cols = weights.shape
    if rows % n or cols % n:
        raise ShapeMismatch(f"weight matrix {weights.shape} does not split into {n} uniform groups")
    return rows // n, cols // n


def _unit_mask(plan: GatherPlan, s_out: int, s_in: int) -> np.ndarray:
    n = plan.n
    block = np.zeros((n, n), dtype=bool)
    block[np.arange(n)[:, None], plan.index] = True
    return np.kron(block, np.ones((s_out, s_in), dtype=bool)).astype(bool)


def encode(weights: np.ndarray, g: RegularGraph, self_loops: bool = False) -> BlockWeights:
    """
    Packs a mask-conforming ``(n*s_out, n*s_in)`` matrix into dense blocks.

    Raises:
        ShapeMismatch: If the matrix does not split into n uniform groups.
        NonconformingSparsity: If a pruned block holds a nonzero.
    """
    plan = gather_plan(g, self_loops)
    s_out, s_in = _group_sizes(weights, g.n)
    mask = _unit_mask(plan, s_out, s_in)
    stray = np.argwhere((weights != 0) & ~mask)
    if len(stray):
        r, c = stray[0]
        raise NonconformingSparsity(f"nonzero at ({r}, {c}) lies in a pruned block")
    grid = weights.reshape(g.n, s_out, g.n, s_in).transpose(0, 2, 1, 3)
    blocks = grid[np.arange(g.n)[:, None], plan.index].copy()
    return BlockWeights(n=g.n, k=plan.k, s_in=s_in, s_out=s_out, neighbors=plan.index, blocks=blocks)


def decode(bw: BlockWeights) -> np.ndarray:
    """Inverse of ``encode``."""
    grid = np.zeros((bw.n, bw.n, bw.s_out, bw.s_in), dtype=bw.blocks.dtype)
    grid[np.arange(bw.n)[:, None], bw.neighbors] = bw.blocks
    return grid.transpose(0, 2, 1, 3).reshape(bw.n * bw.s_out, bw.n * bw.s_in)


def regular_matmul(bw: BlockWeights, plan: GatherPlan, x: np.ndarray) -> np.ndarray:
    """
    Computes ``x @ W.T`` from the packed blocks.

    Args:
        bw (BlockWeights): Packed weights.
        plan (GatherPlan): Gather order matching ``bw``.
        x (np.ndarray): ``(batch, n*s_in)`` input batch.

    Returns:
        np.ndarray: ``(batch, n*s_out)`` output batch.
    """
    if x.ndim != 2 or x.shape[1] != bw.n * bw.s_in:
        raise ShapeMismatch(f"input {x.shape} does not match width {bw.n * bw.s_in}")
    if plan.index.shape != (bw.n, bw.k):
        raise ShapeMismatch(f"gather plan {plan.index.shape} does not match blocks ({bw.n}, {bw.k})")
    batch = x.shape[0]
    if plan.shared:
        # One gather serves every group: a single dense product.
        selected = x.reshape(batch, bw.n, bw.s_in)[:, plan.index[0], :].reshape(batch, bw.k * bw.s_in)
        packed = bw.blocks.transpose(1, 3, 0, 2).reshape(bw.k * bw.s_in, bw.n * bw.s_out)
        return selected @ packed
    gathered = x.reshape(batch, bw.n, bw.s_in)[:, plan.index, :]          # (batch, n, k, s_in)
    gathered = gathered.transpose(1, 0, 2, 3).reshape(bw.n, batch, bw.k * bw.s_in)
    packed = bw.blocks.transpose(0, 1, 3, 2).reshape(bw.n, bw.k * bw.s_in, bw.s_out)
    out = np.matmul(gathered, packed)                                      # (n, batch, s_out)
    return out.transpose(1, 0, 2).reshape(batch, bw.n * bw.s_out)


def naive_masked_matmul(weights: np.ndarray, mask: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Reference: applies the mask to the full matrix and runs the dense product."""
    if weights.shape != mask.shape:
        raise ShapeMismatch(f"weights {weights.shape} and mask {mask.shape} differ")
    if x.ndim != 2 or x.shape[1] != weights.shape[1]:
        raise ShapeMismatch(f"input {x.shape} does not match width {weights.shape[1]}")
    return x @ (weights * mask).T


def count_multiply_adds(bw: BlockWeights, batch: int) -> int:
    """Multiply-adds executed by ``regular_matmul`` on a batch."""
    return batch * bw.n * bw.k * bw.s_in * bw.s_out


def dense_multiply_adds(bw: BlockWeights, batch: int) -> int:
    return batch * (bw.n * bw.s_in) * (bw.n * bw.s_out)


def random_block_weights(g: RegularGraph, s: int, seed: int = 0, self_loops: bool = False):
    """Random mask-conforming weights; returns ``(weights, mask)``."""
    rng = np.random.default_rng(seed)
    plan = gather_plan(g, self_loops)
    mask = _unit_mask(plan, s, s)
    weights = rng.standard_normal(mask.shape) * mask
    return weights, mask


def _bench_graph(n: int, k: int):
    if k >= n:
        return complete_graph(n), True
    if k % 2 == 0:
        return ring_lattice(n, k), False
    return ring_with_diameters(n, k), False


def _time_call(fn: Callable[[], np.ndarray], repeats: int, warmup: int) -> float:
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times)) * 1000.0


def _rowwise(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, threads: int) -> Callable[[], np.ndarray]:
    if threads <= 1:
        return lambda: fn(x)
    chunks = np.array_split(x, threads)

    def run():
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.concatenate(list(pool.map(fn, chunks)))
    return run


def bench(n: int, k: int, s: int, batch: int, repeats: int, seed: int = 0,
          threads: int = 1, warmup: int = 2, self_check: bool = False,
          log: Optional[Callable[[str], None]] = None) -> BenchReport:
    """
    Times naive masked multiply against the gather-dense multiply.

    Even k uses the ring lattice, odd k the ring with antipodal chords (n
    even) and ``k >= n`` the dense mapping (complete graph with self-loops).
    Wall times are medians over ``repeats`` after ``warmup`` calls.

    Raises:
        OracleMismatch: If ``self_check`` is set and the two results differ.
        OddDegree: If k < n and both k and n are odd.
    """
    g, self_loops = _bench_graph(n, k)
    weights, mask = random_block_weights(g, s, seed, self_loops)
    plan = gather_plan(g, self_loops)
    bw = encode(weights, g, self_loops)
    x = np.random.default_rng(seed + 1).standard_normal((batch, n * s))

    if self_check:
        check_against_naive(bw, plan, weights, mask, x)
        (log or console.success)("Gather-dense output matches the naive masked multiply")

    t_naive = _time_call(_rowwise(lambda xs: naive_masked_matmul(weights, mask, xs), x, threads), repeats, warmup)
    t_regular = _time_call(_rowwise(lambda xs: regular_matmul(bw, plan, xs), x, threads), repeats, warmup)
    return BenchReport(
        n=n, k=plan.k, s=s, batch=batch,
        t_naive_ms=t_naive,
        t_regular_ms=t_regular,
        flops_ratio=count_multiply_adds(bw, batch) / dense_multiply_adds(bw, batch),
        threads=threads,
    )


def check_against_naive(bw: BlockWeights, plan: GatherPlan, weights: np.ndarray,
                        mask: np.ndarray, x: np.ndarray) -> float:
    """
    Largest deviation of ``regular_matmul`` from the naive product, relative
    to the naive output's magnitude.

    Raises:
        OracleMismatch: Above ``RELATIVE_TOLERANCE``.
    """
    expected = naive_masked_matmul(weights, mask, x)
    actual = regular_matmul(bw, plan, x)
    scale = max(float(np.abs(expected).max()), 1.0)
    deviation = float(np.abs(actual - expected).max()) / scale
    if deviation > RELATIVE_TOLERANCE:
        raise OracleMismatch(f"gather-dense result deviates by {deviation:.3e} (relative)")
    return deviation
