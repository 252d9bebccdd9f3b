from collections.abc import Sequence

import numpy as np

from crossgraph_absa.errors import ContractError, DimensionError
from crossgraph_absa.numkit import DiffNode, element, lift, log_softmax_rows, scale


def cross_entropy_loss(
    logits: DiffNode, label: int, weights: Sequence[float] | np.ndarray | None = None
) -> DiffNode:
    """``-w[label] * log softmax(logits)[label]`` as a 1x1 node."""
    logits = lift(logits)
    if logits.rows != 1:
        raise DimensionError("cross_entropy_loss", logits.shape, (1, logits.cols))
    classes = logits.cols
    if not 0 <= int(label) < classes:
        raise ContractError(f"label {label} outside [0, {classes})")
    w = np.ones(classes) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (classes,):
        raise DimensionError("cross_entropy_loss weights", w.shape, (classes,))
    return scale(element(log_softmax_rows(logits), 0, int(label)), -float(w[int(label)]))
