"""
Small masked MLP with analytic backpropagation.

The network built from a graph has ``layers`` unit layers of ``n*s`` units and
``layers - 1`` weight matrices between them, every matrix masked by the same
graph. With Identity activation, no biases and strictly positive weights and
inputs, a weight has a nonzero gradient iff a structural path links it to the
loss, so the gradient support of an output group is exactly its walk sets.
"""
from enum import Enum
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from topoprune.graphs.core import aspl
from topoprune.graphs.models import RegularGraph
from topoprune.utils import console
from topoprune.utils.errors import NotOracleMode, ShapeMismatch, TopopruneError

WEIGHT_LOW = 0.1
WEIGHT_HIGH = 1.0
DEFAULT_ALPHA = 0.01


class Activation(str, Enum):
    IDENTITY = "identity"
    LEAKY_RELU = "leaky_relu"


class TinyMLP(BaseModel):
    """
    Layered network ``a_{i+1} = f(W_i a_i + b_i)``; the last matrix is linear.

    ``weights[i]`` has shape ``(out, in)`` and is zero wherever ``masks[i]`` is
    False.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    s: int
    activation: Activation = Activation.IDENTITY
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0, lt=1)
    weights: List[np.ndarray]
    masks: List[np.ndarray]
    biases: Optional[List[np.ndarray]] = None

    @model_validator(mode="after")
    def check_masks(self):
        if len(self.weights) != len(self.masks):
            raise ValueError("one mask per weight matrix")
        for i, (w, mask) in enumerate(zip(self.weights, self.masks)):
            if w.shape != mask.shape:
                raise ValueError(f"matrix {i}: weights {w.shape} vs mask {mask.shape}")
            if np.any(w[~mask] != 0):
                raise ValueError(f"matrix {i} has nonzero pruned weights")
        for prev, nxt in zip(self.weights, self.weights[1:]):
            if prev.shape[0] != nxt.shape[1]:
                raise ValueError(f"matrix widths {prev.shape} and {nxt.shape} do not chain")
        return self

    @property
    def layers(self) -> int:
        """Number of unit layers."""
        return len(self.weights) + 1

    @property
    def in_width(self) -> int:
        return self.weights[0].shape[1]

    @property
    def oracle_mode(self) -> bool:
        return self.activation == Activation.IDENTITY and self.biases is None

    def surviving_weights(self) -> List[int]:
        return [int(mask.sum()) for mask in self.masks]


class Gradients(NamedTuple):
    weights: List[np.ndarray]
    biases: Optional[List[np.ndarray]]
    deltas: List[np.ndarray]  # loss gradient w.r.t. each unit layer's pre-activation


class GradReachReport(BaseModel):
    """Gradient support of one output group."""
    output_group: int
    reached_per_matrix: List[int]
    total_params: int
    gr_observed: Optional[int] = None

    @property
    def reached(self) -> int:
        return sum(self.reached_per_matrix)


class GraphReachSummary(BaseModel):
    counts: List[int]
    gr_observed: List[Optional[int]]

    @property
    def mean_reached(self) -> float:
        return sum(self.counts) / len(self.counts)


def graph_mask(g: RegularGraph, s: int, self_loops: bool = False) -> np.ndarray:
    """Unit mask of an ``n*s``-wide layer with uniform groups of ``s``."""
    block = g.adjacency_matrix(self_loops=self_loops)
    return np.kron(block, np.ones((s, s), dtype=bool)).astype(bool)


def build(g: RegularGraph, layers: int, s: int = 1, seed: int = 0,
          activation: Activation = Activation.IDENTITY, self_loops: bool = False,
          alpha: float = DEFAULT_ALPHA) -> TinyMLP:
    """
    Builds the graph's MLP with surviving weights drawn uniformly from [0.1, 1.0].

    Args:
        g (RegularGraph): Graph shared by every layer.
        layers (int): Unit layers (at least 2).
        s (int): Units per graph node.
        seed (int): Weight seed.
        activation (Activation): Hidden activation.
        self_loops (bool): Keep diagonal blocks (the dense mapping on a complete graph).

    Returns:
        TinyMLP: Network without biases.
    """
    if layers < 2:
        raise TopopruneError(f"need at least 2 layers, got {layers}")
    rng = np.random.default_rng(seed)
    mask = graph_mask(g, s, self_loops)
    weights = [rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size=mask.shape) * mask for _ in range(layers - 1)]
    return TinyMLP(n=g.n, s=s, activation=activation, alpha=alpha,
                   weights=weights, masks=[mask] * (layers - 1))


def _as_batch(m: TinyMLP, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != m.in_width:
        raise ShapeMismatch(f"input {x.shape} does not match width {m.in_width}")
    return x


def _activate(m: TinyMLP, z: np.ndarray) -> np.ndarray:
    if m.activation == Activation.IDENTITY:
        return z
    return np.where(z > 0, z, m.alpha * z)


def _activation_slope(m: TinyMLP, z: np.ndarray) -> np.ndarray:
    if m.activation == Activation.IDENTITY:
        return np.ones_like(z)
    return np.where(z > 0, 1.0, m.alpha)


def _forward_pass(m: TinyMLP, x: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    pre, acts = [x], [x]
    last = len(m.weights) - 1
    for i, w in enumerate(m.weights):
        z = acts[-1] @ w.T
        if m.biases is not None:
            z = z + m.biases[i]
        pre.append(z)
        acts.append(z if i == last else _activate(m, z))
    return pre, acts


def forward(m: TinyMLP, x: np.ndarray) -> List[np.ndarray]:
    """
    Activations of every unit layer, input first.

    ``x`` is one sample ``(width,)`` or a batch ``(batch, width)``.

    Raises:
        ShapeMismatch: If the input width does not match.
    """
    return _forward_pass(m, _as_batch(m, x))[1]


def backward(m: TinyMLP, x: np.ndarray, grad_out: np.ndarray) -> Gradients:
    """
    Gradients of a loss whose gradient w.r.t. the network output is ``grad_out``.

    Weight gradients are masked, so a pruned weight never receives one.
    """
    x = _as_batch(m, x)
    pre, acts = _forward_pass(m, x)
    delta = np.asarray(grad_out, dtype=np.float64).reshape(x.shape[0], -1)
    if delta.shape[1] != m.weights[-1].shape[0]:
        raise ShapeMismatch(f"output gradient {delta.shape} does not match width {m.weights[-1].shape[0]}")

    deltas = [delta]
    w_grads: List[np.ndarray] = []
    b_grads: List[np.ndarray] = []
    for i in range(len(m.weights) - 1, -1, -1):
        w_grads.append((delta.T @ acts[i]) * m.masks[i])
        b_grads.append(delta.sum(axis=0))
        delta = (delta @ m.weights[i]) * (_activation_slope(m, pre[i]) if i > 0 else 1.0)
        deltas.append(delta)

    return Gradients(
        weights=w_grads[::-1],
        biases=b_grads[::-1] if m.biases is not None else None,
        deltas=deltas[::-1],
    )


# =============================================================================
# Gradient reach oracle
# =============================================================================

def grad_reach_count(m: TinyMLP, output_group: int) -> GradReachReport:
    """
    Counts the weights reached by the gradient of output group ``output_group``.

    The loss is the sum of the group's output units and the input is all ones.
    ``gr_observed`` is the smallest backward depth at which every unit of a
    layer carries a nonzero gradient.

    Raises:
        NotOracleMode: Unless the network is linear and bias free.
    """
    if not m.oracle_mode:
        raise NotOracleMode("gradient reach needs Identity activation and no biases")
    width = m.weights[-1].shape[0]
    if not 0 <= output_group < width // m.s:
        raise TopopruneError(f"output group {output_group} outside 0..{width // m.s - 1}")

    grad_out = np.zeros(width)
    grad_out[output_group * m.s:(output_group + 1) * m.s] = 1.0
    grads = backward(m, np.ones(m.in_width), grad_out)

    gr_observed = None
    last = m.layers - 1
    for depth in range(1, m.layers):
        if np.all(grads.deltas[last - depth] != 0):
            gr_observed = depth
            break

    return GradReachReport(
        output_group=output_group,
        reached_per_matrix=[int(np.count_nonzero(gw)) for gw in grads.weights],
        total_params=sum(m.surviving_weights()),
        gr_observed=gr_observed,
    )


def graph_reach_summary(m: TinyMLP) -> GraphReachSummary:
    """Reach counts of every output group."""
    reports = [grad_reach_count(m, j) for j in range(m.weights[-1].shape[0] // m.s)]
    return GraphReachSummary(
        counts=[r.reached for r in reports],
        gr_observed=[r.gr_observed for r in reports],
    )


# =============================================================================
# Training demo
# =============================================================================

class EpochAccuracy(BaseModel):
    epoch: int
    train_acc: float
    val_acc: float


class AccuracyTrace(BaseModel):
    epochs: List[EpochAccuracy] = []

    @property
    def final_val_acc(self) -> float:
        return self.epochs[-1].val_acc if self.epochs else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.model_dump() for e in self.epochs], columns=["epoch", "train_acc", "val_acc"])


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(len(labels))
    loss = float(-log_probs[rows, labels].mean())
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    return loss, grad / len(labels)


def build_classifier(g: RegularGraph, dims: int, classes: int, s: int = 4, hidden_layers: int = 3,
                     seed: int = 0, self_loops: bool = False, alpha: float = DEFAULT_ALPHA) -> TinyMLP:
    """
    Dense input projection, ``hidden_layers`` graph-masked hidden layers and a
    dense readout, LeakyRelu in between.
    """
    if hidden_layers < 1:
        raise TopopruneError(f"need at least 1 hidden layer, got {hidden_layers}")
    rng = np.random.default_rng(seed)
    width = g.n * s
    hidden = graph_mask(g, s, self_loops)
    masks = ([np.ones((width, dims), dtype=bool)]
             + [hidden] * (hidden_layers - 1)
             + [np.ones((classes, width), dtype=bool)])
    weights = []
    for mask in masks:
        fan_in = max(int(mask[0].sum()), 1)
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=mask.shape) * mask)
    biases = [np.zeros(mask.shape[0]) for mask in masks]
    return TinyMLP(n=g.n, s=s, activation=Activation.LEAKY_RELU, alpha=alpha,
                   weights=weights, masks=masks, biases=biases)


def accuracy(m: TinyMLP, x: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    logits = forward(m, x)[-1]
    return float((logits.argmax(axis=1) == y).mean())


def sgd_step(m: TinyMLP, x: np.ndarray, y: np.ndarray, lr: float) -> float:
    """One masked SGD step in place; returns the batch loss."""
    logits = forward(m, x)[-1]
    loss, grad = softmax_cross_entropy(logits, y)
    grads = backward(m, x, grad)
    for i, gw in enumerate(grads.weights):
        m.weights[i] -= lr * gw
        m.weights[i] *= m.masks[i]
    if m.biases is not None:
        for i, gb in enumerate(grads.biases):
            m.biases[i] -= lr * gb
    return loss


def train_demo(g: RegularGraph, dataset: Tuple[np.ndarray, np.ndarray], epochs: int = 50, seed: int = 0,
               s: int = 4, hidden_layers: int = 3, lr: float = 0.05, batch_size: int = 32,
               val_fraction: float = 0.2, self_loops: bool = False) -> AccuracyTrace:
    """
    Trains the graph's classifier with plain SGD.

    Args:
        g (RegularGraph): Graph masking the hidden layers.
        dataset (Tuple[np.ndarray, np.ndarray]): Points ``(N, dims)`` and labels ``(N,)``.
        epochs (int): Passes over the training split.
        seed (int): Drives the split, initialization and shuffling.

    Returns:
        AccuracyTrace: Train and validation accuracy after every epoch.
    """
    x, y = dataset
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    n_val = int(round(len(y) * val_fraction))
    val_idx, train_idx = order[:n_val], order[n_val:]
    x_train, y_train, x_val, y_val = x[train_idx], y[train_idx], x[val_idx], y[val_idx]

    m = build_classifier(g, dims=x.shape[1], classes=int(y.max()) + 1, s=s,
                         hidden_layers=hidden_layers, seed=seed, self_loops=self_loops)
    trace = AccuracyTrace()
    for epoch in range(1, epochs + 1):
        shuffled = rng.permutation(len(y_train))
        for start in range(0, len(shuffled), batch_size):
            batch = shuffled[start:start + batch_size]
            sgd_step(m, x_train[batch], y_train[batch], lr)
        trace.epochs.append(EpochAccuracy(
            epoch=epoch,
            train_acc=accuracy(m, x_train, y_train),
            val_acc=accuracy(m, x_val, y_val),
        ))
    console.info(f"Trained {g.n}_{g.k} classifier: val accuracy {trace.final_val_acc:.3f} after {epochs} epochs")
    return trace


def write_accuracy_trace(trace: AccuracyTrace, path: Union[str, Path]) -> None:
    """Writes ``epoch,train_acc,val_acc`` rows."""
    trace.to_frame().to_csv(path, index=False, float_format="%.6f")


def accuracy_vs_aspl(graphs: Sequence[RegularGraph], dataset: Tuple[np.ndarray, np.ndarray],
                     epochs: int = 20, seed: int = 0, **train_kwargs) -> pd.DataFrame:
    """
    Trains one classifier per graph, e.g. the snapshots of a search, with the
    same split and seed, and pairs each graph's ASPL with its final
    validation accuracy.

    Returns:
        pd.DataFrame: ``aspl,val_acc`` rows in graph order.
    """
    rows = []
    for g in graphs:
        trace = train_demo(g, dataset, epochs=epochs, seed=seed, **train_kwargs)
        rows.append({"aspl": aspl(g), "val_acc": trace.final_val_acc})
    return pd.DataFrame(rows, columns=["aspl", "val_acc"])
