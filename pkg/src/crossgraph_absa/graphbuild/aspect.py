"""Aspect-centred adjacency and the position-only fixed graph."""

import numpy as np

from crossgraph_absa.corpus.encoding import EncodedInstance
from crossgraph_absa.errors import ContractError
from crossgraph_absa.graphbuild.adjacency import AdjacencyMatrix, GraphKind, self_loops


def _aspect_clique(weights: np.ndarray, encoded: EncodedInstance) -> None:
    positions = list(encoded.aspect_positions)
    weights[np.ix_(positions, positions)] = 1.0


def build_aspect(size: int, encoded: EncodedInstance, radius: int) -> AdjacencyMatrix:
    """Link each aspect token to sentence tokens within ``radius``, symmetrically."""
    if radius < 0:
        raise ContractError(f"aspect radius must be >= 0, got {radius}")
    if size != encoded.max_length:
        raise ContractError(
            f"instance {encoded.instance_id}: graph size {size} != sequence length {encoded.max_length}"
        )
    weights = self_loops(encoded.pad_mask)
    start, end = encoded.sentence_region
    for i in encoded.aspect_positions:
        lo, hi = max(start, i - radius), min(end, i + radius + 1)
        weights[i, lo:hi] = 1.0
        weights[lo:hi, i] = 1.0
    _aspect_clique(weights, encoded)
    return AdjacencyMatrix(kind=GraphKind.ASPECT, weights=weights)


def build_aspect_from_syntax(
    syntactic: AdjacencyMatrix, encoded: EncodedInstance
) -> AdjacencyMatrix:
    """The syntactic graph restricted to edges touching an aspect token."""
    if syntactic.size != encoded.max_length:
        raise ContractError(
            f"instance {encoded.instance_id}: syntactic graph of size {syntactic.size} "
            f"for sequence length {encoded.max_length}"
        )
    touches = np.zeros(syntactic.size, dtype=bool)
    touches[list(encoded.aspect_positions)] = True
    keep = touches[:, None] | touches[None, :]
    weights = np.where(keep, syntactic.weights, 0.0)
    weights = np.maximum(weights, self_loops(encoded.pad_mask))
    _aspect_clique(weights, encoded)
    return AdjacencyMatrix(kind=GraphKind.ASPECT, weights=weights)


def build_fixed(size: int, radius: int) -> AdjacencyMatrix:
    """Band graph |i - j| <= radius over every position; mask per instance before use."""
    if radius < 0:
        raise ContractError(f"fixed adjacency radius must be >= 0, got {radius}")
    index = np.arange(size)
    weights = (np.abs(index[:, None] - index[None, :]) <= radius).astype(np.float64)
    return AdjacencyMatrix(kind=GraphKind.SYNTACTIC, weights=weights)
