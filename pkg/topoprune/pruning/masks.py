"""
Graph to pruning-mask mapping.

Every prunable layer splits its input and output units into n groups, one per
graph node. Output group j keeps its weights from input group k iff k is a
neighbor of j, so a k-regular graph keeps k of every n blocks.
"""
import json
import math
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from topoprune.graphs.models import RegularGraph
from topoprune.pruning.models import (
    SCHEMA_VERSION,
    LayerKind,
    LayerMask,
    LayerSpec,
    LayerStats,
    MaskLayerRecord,
    MaskSet,
    MaskSetFile,
    ModelSpec,
    Partition,
    ReductionStats,
)
from topoprune.utils import console
from topoprune.utils.errors import MissingSpatialDims, ParseError, SchemaVersionMismatch, TooFewUnits

PathLike = Union[str, Path]

BUNDLED_MODELS = {
    "vgg16": "vgg16_cifar.json",
    "resnet18": "resnet18_cifar.json",
    "resnet56": "resnet56_cifar.json",
    "resnet50": "resnet50_imagenet.json",
}


def partition(width: int, n: int) -> Partition:
    """
    Splits ``width`` units into ``n`` groups.

    Leading groups get ceil(width/n) units and the last group the rest, so
    only the last group can be smaller. When ceil-sized leading groups would
    leave later groups empty (e.g. 65 units in 64 groups) the split falls back
    to balanced sizes, the first ``width % n`` groups one unit larger.

    Raises:
        TooFewUnits: If width < n.
    """
    if width < n:
        raise TooFewUnits(f"cannot split {width} units into {n} groups")
    lead = math.ceil(width / n)
    if lead * (n - 1) < width:
        sizes = [lead] * (n - 1) + [width - lead * (n - 1)]
    else:
        base, extra = divmod(width, n)
        sizes = [base + 1] * extra + [base] * (n - extra)
    bounds = np.concatenate([[0], np.cumsum(sizes)]).tolist()
    return Partition(width=width, n=n, bounds=tuple(bounds))


def _check_widths(g: RegularGraph, layer: LayerSpec) -> None:
    if layer.in_width < g.n or layer.out_width < g.n:
        raise TooFewUnits(
            f"layer '{layer.name}' ({layer.in_width}->{layer.out_width}) is narrower than {g.n} graph nodes"
        )


def layer_mask(g: RegularGraph, layer: LayerSpec, self_loops: bool = False) -> np.ndarray:
    """
    Block mask of one layer: entry (j, k) is True iff block (j, k) survives.

    Non-prunable layers get an all-True mask.
    """
    if not layer.prunable:
        return np.ones((g.n, g.n), dtype=bool)
    _check_widths(g, layer)
    return g.adjacency_matrix(self_loops=self_loops)


def unit_mask(g: RegularGraph, layer: LayerSpec, self_loops: bool = False) -> np.ndarray:
    """Unit-level ``out_width x in_width`` expansion of ``layer_mask``."""
    if not layer.prunable:
        return np.ones((layer.out_width, layer.in_width), dtype=bool)
    block = layer_mask(g, layer, self_loops)
    out_groups = partition(layer.out_width, g.n).group_of_unit()
    in_groups = partition(layer.in_width, g.n).group_of_unit()
    return block[np.ix_(out_groups, in_groups)]


def model_masks(g: RegularGraph, model: ModelSpec, self_loops: bool = False) -> MaskSet:
    """
    Builds the MaskSet of a whole model from one graph.

    Raises:
        TooFewUnits: Naming the first prunable layer narrower than the graph.
    """
    layers = []
    for layer in model.layers:
        if not layer.prunable:
            layers.append(LayerMask(layer=layer))
            continue
        _check_widths(g, layer)
        layers.append(LayerMask(
            layer=layer,
            in_partition=partition(layer.in_width, g.n),
            out_partition=partition(layer.out_width, g.n),
        ))
    return MaskSet(graph=g, self_loops=self_loops, layers=layers)


def _reduction(orig: int, pruned: int) -> float:
    return 100.0 * (1 - pruned / orig) if orig else 0.0


def reduction_stats(maskset: MaskSet, model: ModelSpec,
                    spatial_dims: Optional[Dict[str, Tuple[int, int]]] = None) -> ReductionStats:
    """
    Parameter and FLOP reductions against the dense model.

    Parameters count surviving weights plus biases and normalization
    parameters (never pruned). FLOPs count 2 per multiply-accumulate of the
    weights: ``2*w*H*W`` for convolutions, ``2*w`` for fully connected layers.
    The ``prunable_*`` reductions restrict both counts to the weights of
    prunable layers, which leaves out a dense stem or classifier.

    Raises:
        MissingSpatialDims: If a convolution has no output H x W.
    """
    spatial_dims = spatial_dims if spatial_dims is not None else model.spatial_dims
    per_layer = []
    prunable_weights = {"orig": 0, "kept": 0, "flops_orig": 0, "flops_kept": 0}
    for layer in model.layers:
        kept = maskset.surviving_weights(layer.name)
        if layer.kind == LayerKind.CONV:
            if layer.name not in spatial_dims:
                raise MissingSpatialDims(f"no output H x W given for conv layer '{layer.name}'")
            h, w = spatial_dims[layer.name]
            positions = h * w
        else:
            positions = 1
        per_layer.append(LayerStats(
            name=layer.name,
            prunable=layer.prunable,
            params_orig=layer.weight_count + layer.extra_params,
            params_pruned=kept + layer.extra_params,
            flops_orig=2 * layer.weight_count * positions,
            flops_pruned=2 * kept * positions,
        ))
        if layer.prunable:
            prunable_weights["orig"] += layer.weight_count
            prunable_weights["kept"] += kept
            prunable_weights["flops_orig"] += 2 * layer.weight_count * positions
            prunable_weights["flops_kept"] += 2 * kept * positions

    params_orig = sum(s.params_orig for s in per_layer)
    params_pruned = sum(s.params_pruned for s in per_layer)
    flops_orig = sum(s.flops_orig for s in per_layer)
    flops_pruned = sum(s.flops_pruned for s in per_layer)
    return ReductionStats(
        params_orig=params_orig,
        params_pruned=params_pruned,
        flops_orig=flops_orig,
        flops_pruned=flops_pruned,
        params_reduction=_reduction(params_orig, params_pruned),
        flops_reduction=_reduction(flops_orig, flops_pruned),
        prunable_params_reduction=_reduction(prunable_weights["orig"], prunable_weights["kept"]),
        prunable_flops_reduction=_reduction(prunable_weights["flops_orig"], prunable_weights["flops_kept"]),
        per_layer=per_layer,
    )


# =============================================================================
# Files
# =============================================================================

def write_maskset(m: MaskSet, path: PathLike) -> None:
    """Writes the MaskSet as schema v1 JSON; unit masks are never stored."""
    records = []
    for lm in m.layers:
        records.append(MaskLayerRecord(
            name=lm.layer.name,
            kind=lm.layer.kind,
            in_width=lm.layer.in_width,
            out_width=lm.layer.out_width,
            kernel_elems=lm.layer.kernel_elems,
            prunable=lm.prunable,
            in_bounds=list(lm.in_partition.bounds) if lm.in_partition else [],
            out_bounds=list(lm.out_partition.bounds) if lm.out_partition else [],
            bias=lm.layer.bias,
            batch_norm=lm.layer.batch_norm,
        ))
    doc = MaskSetFile(
        schema_version=SCHEMA_VERSION,
        n=m.graph.n,
        k=m.graph.k,
        edges=[list(e) for e in m.graph.edges],
        self_loops=m.self_loops,
        layers=records,
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(doc.model_dump_json(by_alias=True, indent=2))
    console.success(f"MaskSet saved to {path}")


def read_maskset(path: PathLike) -> MaskSet:
    """
    Reads a schema v1 MaskSet file.

    Raises:
        ParseError: If the file is not valid JSON or misses required fields.
        SchemaVersionMismatch: If ``schema_version`` is not 1.
    """
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(raw, dict) or "schema_version" not in raw:
        raise ParseError(f"{path}: missing 'schema_version'")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{path}: schema_version {raw['schema_version']} is not {SCHEMA_VERSION}")
    try:
        doc = MaskSetFile.model_validate(raw)
        graph = RegularGraph.from_edges(doc.n, doc.edges, doc.k)
        layers = []
        for rec in doc.layers:
            spec = LayerSpec(
                name=rec.name, kind=rec.kind, in_width=rec.in_width, out_width=rec.out_width,
                kernel_elems=rec.kernel_elems, prunable=rec.prunable, bias=rec.bias,
                batch_norm=rec.batch_norm,
            )
            if not rec.prunable:
                layers.append(LayerMask(layer=spec))
                continue
            layers.append(LayerMask(
                layer=spec,
                in_partition=Partition(width=rec.in_width, n=doc.n, bounds=tuple(rec.in_bounds)),
                out_partition=Partition(width=rec.out_width, n=doc.n, bounds=tuple(rec.out_bounds)),
            ))
    except ValidationError as e:
        raise ParseError(f"{path}: {e}") from e
    return MaskSet(graph=graph, self_loops=doc.self_loops, layers=layers)


def load_model_spec(name_or_path: str) -> ModelSpec:
    """
    Loads a bundled model spec (``vgg16``, ``resnet18``, ``resnet56``,
    ``resnet50``) or a JSON file.

    Raises:
        ParseError: If the JSON does not describe a valid model.
    """
    try:
        if name_or_path in BUNDLED_MODELS:
            text = resources.files("topoprune.pruning.model_specs").joinpath(
                BUNDLED_MODELS[name_or_path]).read_text(encoding="utf-8")
        else:
            text = Path(name_or_path).read_text(encoding="utf-8")
        return ModelSpec.model_validate_json(text)
    except ValidationError as e:
        raise ParseError(f"{name_or_path}: {e}") from e
