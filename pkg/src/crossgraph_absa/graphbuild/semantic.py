"""Semantic graph from cosine similarity of contextual embeddings.

Negative similarities clamp to 0; each row keeps its ``top_k`` largest
off-diagonal entries that reach ``threshold`` (ties go to the lower index) and
a unit self-loop. Rows are pruned independently, so the result may be
asymmetric.
"""

from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike

from crossgraph_absa.errors import ConfigError, DimensionError
from crossgraph_absa.graphbuild.adjacency import AdjacencyMatrix, GraphKind
from crossgraph_absa.numkit import Matrix, as_matrix, cosine_matrix


def semantic_raw(h: ArrayLike, pad_mask: Sequence[bool] | None = None) -> Matrix:
    """Unpruned cosine matrix; padded rows and columns are zero."""
    return cosine_matrix(h, pad_mask)


def build_semantic(
    h: ArrayLike,
    top_k: int,
    threshold: float,
    pad_mask: Sequence[bool] | None = None,
) -> AdjacencyMatrix:
    values = as_matrix(h)
    size = values.shape[0]
    if top_k < 1 or top_k >= size:
        raise ConfigError(f"top_k must lie in [1, T) for T={size}, got {top_k}")
    if not -1.0 <= threshold <= 1.0:
        raise ConfigError(f"threshold must lie in [-1, 1], got {threshold}")
    real = np.ones(size, dtype=bool) if pad_mask is None else np.asarray(pad_mask, dtype=bool)
    if real.shape[0] != size:
        raise DimensionError("build_semantic", values.shape, real.shape)

    clamped = np.maximum(semantic_raw(values, real), 0.0)
    weights = np.zeros_like(clamped)
    for i in np.flatnonzero(real):
        candidates = [j for j in np.flatnonzero(real) if j != i and clamped[i, j] >= threshold]
        # Stable sort on the negated value keeps the lower index first on ties.
        ranked = sorted(candidates, key=lambda j: -clamped[i, j])[:top_k]
        weights[i, ranked] = clamped[i, ranked]
        weights[i, i] = 1.0
    return AdjacencyMatrix(kind=GraphKind.SEMANTIC, weights=weights)
