"""Synthetic labeled point clouds for the training demo."""
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from topoprune.utils.errors import ParseError


class BlobConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    classes: int = Field(default=2, ge=2)
    dims: int = Field(default=2, ge=2)
    points: int = Field(default=400, ge=2)
    seed: int = 0
    spread: float = Field(default=1.0, gt=0)
    separation: float = Field(default=4.0, gt=0)


def load_blob_config(path: Union[str, Path]) -> BlobConfig:
    """
    Reads a BlobConfig from JSON; missing fields keep their defaults.

    Raises:
        ParseError: If the file is not valid JSON or a field is out of range.
    """
    try:
        return BlobConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ParseError(f"{path}: {e}") from e


def make_blobs(cfg: BlobConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gaussian blobs with centers spaced evenly on a circle in the first two dims.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Points ``(points, dims)`` and labels.
    """
    rng = np.random.default_rng(cfg.seed)
    angles = 2 * np.pi * np.arange(cfg.classes) / cfg.classes
    centers = np.zeros((cfg.classes, cfg.dims))
    centers[:, 0] = cfg.separation * np.cos(angles)
    centers[:, 1] = cfg.separation * np.sin(angles)

    labels = np.arange(cfg.points) % cfg.classes
    rng.shuffle(labels)
    points = centers[labels] + rng.normal(0.0, cfg.spread, size=(cfg.points, cfg.dims))
    return points, labels
