from collections.abc import Sequence
from enum import StrEnum
from pathlib import Path
from typing import Self

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, field_validator

from crossgraph_absa.errors import ContractError
from crossgraph_absa.utils import write_csv


class GraphKind(StrEnum):
    SYNTACTIC = "syntactic"
    SEMANTIC = "semantic"
    ASPECT = "aspect"


class AdjacencyMatrix(BaseModel):
    """T x T non-negative token graph; rows/columns of padding are zero."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: GraphKind
    weights: np.ndarray

    @field_validator("weights", mode="before")
    @classmethod
    def validate_weights(cls, weights: ArrayLike) -> NDArray[np.float64]:
        array = np.array(weights, dtype=np.float64)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {array.shape}")
        if not np.isfinite(array).all() or (array < 0).any():
            raise ValueError("adjacency weights must be finite and non-negative")
        array.setflags(write=False)
        return array

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def mask(self) -> NDArray[np.bool_]:
        """Neighbourhood mask: True where an edge (weight > 0) exists."""
        return self.weights > 0

    def is_symmetric(self, atol: float = 0.0) -> bool:
        return bool(np.allclose(self.weights, self.weights.T, rtol=0.0, atol=atol))

    def edges(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in zip(*np.nonzero(self.weights), strict=True)}

    def masked(self, pad_mask: Sequence[bool]) -> Self:
        """Copy with rows and columns of padded positions zeroed."""
        keep = np.asarray(pad_mask, dtype=bool)
        if keep.shape[0] != self.size:
            raise ContractError(f"pad mask of length {keep.shape[0]} for a {self.size}-node graph")
        weights = self.weights * np.outer(keep, keep)
        return type(self)(kind=self.kind, weights=weights)

    def to_csv(self, path: Path, labels: Sequence[str] | None = None) -> Path:
        """Export as a square CSV, one row per line; ``labels`` adds a header row/column."""
        if labels is None:
            return write_csv(path, None, self.weights.tolist())
        return export_matrix_csv(path, self.weights, labels)


def export_matrix_csv(path: Path, matrix: ArrayLike, labels: Sequence[str]) -> Path:
    values = np.asarray(matrix)
    rows = [[label, *map(repr, map(float, row))] for label, row in zip(labels, values, strict=True)]
    return write_csv(path, ["", *labels], rows)


def self_loops(pad_mask: Sequence[bool]) -> NDArray[np.float64]:
    return np.diag(np.asarray(pad_mask, dtype=np.float64))
