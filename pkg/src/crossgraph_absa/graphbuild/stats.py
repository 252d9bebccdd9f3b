"""Aspect-to-context distance statistics on the two graph views.

Syntactic distance is the unweighted BFS hop count on the syntactic graph;
semantic distance is 1 - cosine. Both are averaged over (aspect token, other
sentence token) pairs; pairs unreachable in the syntactic graph are left out of
the syntactic mean and reported through ``coverage``.
"""

from collections.abc import Iterable
from typing import Annotated

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from crossgraph_absa.corpus.encoding import EncodedInstance
from crossgraph_absa.errors import DimensionError, EmptyInputError
from crossgraph_absa.graphbuild.adjacency import AdjacencyMatrix


class GraphStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean_syntactic_distance: Annotated[float, Field(ge=0.0)]
    mean_semantic_distance: Annotated[float, Field(ge=0.0)]
    coverage: Annotated[float, Field(ge=0.0, le=1.0)] = 1.0
    pairs: Annotated[int, Field(ge=0)] = 0


def graph_stats(
    syn: AdjacencyMatrix, sem_raw: ArrayLike, encoded: EncodedInstance
) -> GraphStats:
    cosines = np.asarray(sem_raw, dtype=np.float64)
    if cosines.shape != (syn.size, syn.size) or syn.size != encoded.max_length:
        raise DimensionError(
            "graph_stats", (syn.size, syn.size), cosines.shape, (encoded.max_length,)
        )
    aspects = list(encoded.aspect_positions)
    if not aspects:
        raise EmptyInputError(f"instance {encoded.instance_id} has no aspect tokens")
    others = [j for j in encoded.sentence_positions if j not in set(aspects)]
    if not others:
        return GraphStats(mean_syntactic_distance=0.0, mean_semantic_distance=0.0)

    hops = shortest_path(
        csr_matrix(syn.mask.astype(np.float64)), directed=False, unweighted=True, indices=aspects
    )[:, others]
    reachable = np.isfinite(hops)
    semantic = 1.0 - cosines[np.ix_(aspects, others)]
    return GraphStats(
        mean_syntactic_distance=float(hops[reachable].mean()) if reachable.any() else 0.0,
        mean_semantic_distance=float(np.maximum(semantic, 0.0).mean()),
        coverage=float(reachable.mean()),
        pairs=int(hops.size),
    )


def average_stats(stats: Iterable[GraphStats]) -> GraphStats:
    """Pair-weighted average over instances."""
    collected = [item for item in stats if item.pairs]
    if not collected:
        raise EmptyInputError("no instance contributed aspect/context pairs")
    weights = np.array([item.pairs for item in collected], dtype=np.float64)
    return GraphStats(
        mean_syntactic_distance=float(
            np.average([s.mean_syntactic_distance for s in collected], weights=weights)
        ),
        mean_semantic_distance=float(
            np.average([s.mean_semantic_distance for s in collected], weights=weights)
        ),
        coverage=float(np.average([s.coverage for s in collected], weights=weights)),
        pairs=int(weights.sum()),
    )
