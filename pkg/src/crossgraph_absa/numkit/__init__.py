"""Dense-matrix arithmetic with reverse-mode differentiation."""

from crossgraph_absa.numkit.autodiff import (
    DEFAULT_DTYPE,
    DiffNode,
    Matrix,
    add,
    as_matrix,
    backward,
    concat_cols,
    constant,
    dropout,
    element,
    layer_norm_rows,
    leaky_relu,
    lift,
    log_softmax_rows,
    mask_rows,
    matmul,
    mean_rows,
    mul,
    parameter,
    relu,
    scale,
    sigmoid,
    slice_cols,
    softmax_rows,
    sub,
    sum_all,
    take_rows,
    transpose,
)
from crossgraph_absa.numkit.gradcheck import GradCheckReport, finite_diff_check
from crossgraph_absa.numkit.similarity import cosine_matrix, cosine_similarity

__all__ = [
    "DEFAULT_DTYPE",
    "DiffNode",
    "GradCheckReport",
    "Matrix",
    "add",
    "as_matrix",
    "backward",
    "concat_cols",
    "constant",
    "cosine_matrix",
    "cosine_similarity",
    "dropout",
    "element",
    "finite_diff_check",
    "layer_norm_rows",
    "leaky_relu",
    "lift",
    "log_softmax_rows",
    "mask_rows",
    "matmul",
    "mean_rows",
    "mul",
    "parameter",
    "relu",
    "scale",
    "sigmoid",
    "slice_cols",
    "softmax_rows",
    "sub",
    "sum_all",
    "take_rows",
    "transpose",
]
