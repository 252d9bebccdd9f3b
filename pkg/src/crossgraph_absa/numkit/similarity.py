"""Cosine similarity with the zero-norm policy: a zero vector is similar to nothing."""

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike
from sklearn.metrics.pairwise import cosine_similarity as pairwise_cosine

from crossgraph_absa.errors import DimensionError
from crossgraph_absa.numkit.autodiff import Matrix, as_matrix


def cosine_similarity(u: ArrayLike, v: ArrayLike) -> float:
    """(u . v) / (|u| |v|), or 0.0 with a warning when either norm is zero."""
    left = np.asarray(u, dtype=np.float64).ravel()
    right = np.asarray(v, dtype=np.float64).ravel()
    if left.shape != right.shape:
        raise DimensionError("cosine_similarity", left.shape, right.shape)
    norms = float(np.linalg.norm(left)) * float(np.linalg.norm(right))
    if norms == 0.0:
        logger.warning("cosine_similarity on a zero-norm vector; similarity set to 0")
        return 0.0
    return float(np.clip(left @ right / norms, -1.0, 1.0))


def cosine_matrix(h: ArrayLike, row_mask: ArrayLike | None = None) -> Matrix:
    """All-pairs cosine between rows of ``h``.

    Rows outside ``row_mask`` (padding) and zero-norm rows get similarity 0
    everywhere, including their diagonal.
    """
    values = as_matrix(h)
    keep = (
        np.ones(values.shape[0], dtype=bool)
        if row_mask is None
        else np.asarray(row_mask, dtype=bool)
    )
    zero_rows = keep & ~np.any(values != 0.0, axis=1)
    if zero_rows.any():
        logger.warning(
            f"{int(zero_rows.sum())} zero-norm embedding row(s); similarity set to 0"
        )
    sims = np.clip(pairwise_cosine(values), -1.0, 1.0)
    sims[~keep, :] = 0.0
    sims[:, ~keep] = 0.0
    return sims
