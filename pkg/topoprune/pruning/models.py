"""
Pydantic models for pruning data structures.

Layer and model specs describe the network to prune, partitions split a layer's
units into graph-node groups, and a MaskSet ties a graph to a model.
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from topoprune.graphs.models import RegularGraph

SCHEMA_VERSION = 1


class LayerKind(str, Enum):
    FULLY_CONNECTED = "fc"
    CONV = "conv"


class LayerSpec(BaseModel):
    """
    One weight layer: ``in_width`` input units (neurons or channels) feeding
    ``out_width`` output units through ``kernel_elems`` weights per pair.
    """
    model_config = ConfigDict(populate_by_name=True)

    name: str
    kind: LayerKind
    in_width: int = Field(ge=1, alias="in")
    out_width: int = Field(ge=1, alias="out")
    kernel_elems: int = Field(default=1, ge=1)
    prunable: bool = True
    bias: bool = True
    batch_norm: bool = False

    @model_validator(mode="after")
    def fc_has_unit_kernel(self):
        if self.kind == LayerKind.FULLY_CONNECTED and self.kernel_elems != 1:
            raise ValueError(f"fully connected layer '{self.name}' must have kernel_elems=1")
        return self

    @property
    def weight_count(self) -> int:
        return self.in_width * self.out_width * self.kernel_elems

    @property
    def extra_params(self) -> int:
        """Bias and normalization parameters; never pruned."""
        extra = self.out_width if self.bias else 0
        if self.batch_norm:
            extra += 2 * self.out_width
        return extra


class ModelSpec(BaseModel):
    """
    Ordered weight layers of a network.

    Chained models must have matching widths between consecutive layers;
    residual models (shortcut convolutions listed inline) skip that check.
    """
    name: str = "model"
    layers: List[LayerSpec]
    residual: bool = False
    spatial_dims: Dict[str, Tuple[int, int]] = {}

    @model_validator(mode="after")
    def check_layers(self):
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise ValueError("layer names must be unique")
        if not self.residual:
            for prev, nxt in zip(self.layers, self.layers[1:]):
                if prev.out_width != nxt.in_width:
                    raise ValueError(
                        f"layer '{prev.name}' outputs {prev.out_width} units but "
                        f"'{nxt.name}' expects {nxt.in_width}"
                    )
        return self

    def layer(self, name: str) -> LayerSpec:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)


class Partition(BaseModel):
    """Cut of ``width`` units into ``n`` contiguous groups."""
    width: int
    n: int
    bounds: Tuple[int, ...]

    @field_validator("bounds")
    @classmethod
    def strictly_increasing(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("partition bounds must be strictly increasing")
        return v

    @model_validator(mode="after")
    def covers_width(self):
        if len(self.bounds) != self.n + 1 or self.bounds[0] != 0 or self.bounds[-1] != self.width:
            raise ValueError(f"bounds must be {self.n + 1} cuts covering [0, {self.width})")
        return self

    @property
    def sizes(self) -> List[int]:
        return [b - a for a, b in zip(self.bounds, self.bounds[1:])]

    def group_of_unit(self) -> np.ndarray:
        """Group index of every unit."""
        return np.repeat(np.arange(self.n), self.sizes)

    def units(self, group: int) -> slice:
        return slice(self.bounds[group], self.bounds[group + 1])


class LayerMask(BaseModel):
    """Mask of one layer; prunable layers carry both partitions."""
    layer: LayerSpec
    in_partition: Optional[Partition] = None
    out_partition: Optional[Partition] = None

    @property
    def prunable(self) -> bool:
        return self.layer.prunable


class MaskSet(BaseModel):
    """
    Per-layer block masks derived from one graph.

    Block (j, k) of a prunable layer (output group j, input group k) survives
    iff node k is a neighbor of node j; ``self_loops`` adds the diagonal.
    """
    graph: RegularGraph
    self_loops: bool = False
    layers: List[LayerMask]

    @property
    def dense_layers(self) -> List[str]:
        return [lm.layer.name for lm in self.layers if not lm.prunable]

    def layer_mask(self, name: str) -> LayerMask:
        for lm in self.layers:
            if lm.layer.name == name:
                return lm
        raise KeyError(name)

    def block_mask(self) -> np.ndarray:
        """n x n boolean block predicate shared by every prunable layer."""
        return self.graph.adjacency_matrix(self_loops=self.self_loops)

    def unit_mask(self, name: str) -> np.ndarray:
        """Unit-level ``out_width x in_width`` boolean mask of a layer."""
        lm = self.layer_mask(name)
        if not lm.prunable:
            return np.ones((lm.layer.out_width, lm.layer.in_width), dtype=bool)
        block = self.block_mask()
        return block[np.ix_(lm.out_partition.group_of_unit(), lm.in_partition.group_of_unit())]

    def surviving_weights(self, name: str) -> int:
        lm = self.layer_mask(name)
        if not lm.prunable:
            return lm.layer.weight_count
        block = self.block_mask()
        out_sizes = np.asarray(lm.out_partition.sizes, dtype=np.int64)
        in_sizes = np.asarray(lm.in_partition.sizes, dtype=np.int64)
        return int(out_sizes @ block.astype(np.int64) @ in_sizes) * lm.layer.kernel_elems


class LayerStats(BaseModel):
    name: str
    prunable: bool = True
    params_orig: int
    params_pruned: int
    flops_orig: int
    flops_pruned: int


class ReductionStats(BaseModel):
    """Parameter and FLOP totals before and after pruning, reductions in percent."""
    params_orig: int
    params_pruned: int
    flops_orig: int
    flops_pruned: int
    params_reduction: float = Field(ge=0, le=100)
    flops_reduction: float = Field(ge=0, le=100)
    # weights of prunable layers only
    prunable_params_reduction: float = Field(default=0.0, ge=0, le=100)
    prunable_flops_reduction: float = Field(default=0.0, ge=0, le=100)
    per_layer: List[LayerStats] = []


# =============================================================================
# MaskSet JSON schema v1
# =============================================================================

class MaskLayerRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    kind: LayerKind
    in_width: int = Field(alias="in")
    out_width: int = Field(alias="out")
    kernel_elems: int
    prunable: bool
    in_bounds: List[int] = []
    out_bounds: List[int] = []
    bias: bool = True
    batch_norm: bool = False


class MaskSetFile(BaseModel):
    schema_version: int
    n: int
    k: int
    edges: List[Tuple[int, int]]
    self_loops: bool = False
    layers: List[MaskLayerRecord]
