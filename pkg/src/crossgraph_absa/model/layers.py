"""Differentiable building blocks of the network.

Matrices are row-major token stacks (one row per sequence position), so a
linear map is ``X @ W``. ``real`` arguments are the per-position pad masks
(True for real tokens).
"""

from collections.abc import Mapping, Sequence
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from crossgraph_absa.corpus.encoding import EncodedInstance
from crossgraph_absa.errors import ConfigError, ContractError, DimensionError, EmptyInputError
from crossgraph_absa.graphbuild import AdjacencyMatrix
from crossgraph_absa.model.embeddings import PrecomputedEmbeddings
from crossgraph_absa.numkit import (
    DiffNode,
    Matrix,
    add,
    concat_cols,
    constant,
    dropout,
    layer_norm_rows,
    leaky_relu,
    lift,
    mask_rows,
    matmul,
    mean_rows,
    mul,
    relu,
    scale,
    sigmoid,
    slice_cols,
    softmax_rows,
    sub,
    take_rows,
    transpose,
)
from crossgraph_absa.settings import ModelConfig

Params = Mapping[str, DiffNode]


def _pair_mask(real: Sequence[bool] | None, size: int) -> np.ndarray | None:
    if real is None:
        return None
    keep = np.asarray(real, dtype=bool)
    if keep.shape != (size,):
        raise DimensionError("pad mask", keep.shape, (size,))
    return np.outer(keep, keep)


def linear(x: DiffNode, params: Params, prefix: str) -> DiffNode:
    return add(matmul(x, params[f"{prefix}.W"]), params[f"{prefix}.b"])


def sinusoidal_positions(length: int, dim: int, dtype: np.dtype = np.dtype(np.float64)) -> Matrix:
    position = np.arange(length)[:, None]
    rates = np.power(10000.0, -(np.arange(0, dim, 2) / dim))
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(position * rates)
    table[:, 1::2] = np.cos(position * rates[: dim // 2])
    return table.astype(dtype)


# -----------------------------------------------------------------------------
# Self-attention encoder block
# -----------------------------------------------------------------------------


def multi_head_attention(
    x: DiffNode, params: Params, prefix: str, heads: int, real: Sequence[bool] | None
) -> tuple[DiffNode, list[Matrix]]:
    """Masked scaled dot-product self-attention; returns output and per-head weights."""
    width = x.cols
    if width % heads:
        raise ConfigError(f"hidden width {width} is not divisible by {heads} heads")
    head_dim = width // heads
    mask = _pair_mask(real, x.rows)
    q = matmul(x, params[f"{prefix}.Wq"])
    k = matmul(x, params[f"{prefix}.Wk"])
    v = matmul(x, params[f"{prefix}.Wv"])
    outputs: list[DiffNode] = []
    weights: list[Matrix] = []
    for h in range(heads):
        lo, hi = h * head_dim, (h + 1) * head_dim
        scores = scale(
            matmul(slice_cols(q, lo, hi), transpose(slice_cols(k, lo, hi))), 1.0 / np.sqrt(head_dim)
        )
        attention = softmax_rows(scores, mask)
        weights.append(attention.value)
        outputs.append(matmul(attention, slice_cols(v, lo, hi)))
    return matmul(concat_cols(*outputs), params[f"{prefix}.Wo"]), weights


def encoder_block(
    x: DiffNode,
    params: Params,
    prefix: str,
    config: ModelConfig,
    real: Sequence[bool] | None,
    rng: np.random.Generator | None = None,
) -> tuple[DiffNode, list[Matrix]]:
    """Post-norm block: attention and feed-forward sublayers, each with residual + layer norm."""
    attended, weights = multi_head_attention(x, params, f"{prefix}.attn", config.refine_heads, real)
    x = layer_norm_rows(
        add(x, dropout(attended, config.dropout_rate, rng)),
        params[f"{prefix}.ln1.gamma"],
        params[f"{prefix}.ln1.beta"],
        config.layer_norm_eps,
    )
    hidden = linear(relu(linear(x, params, f"{prefix}.ff1")), params, f"{prefix}.ff2")
    x = layer_norm_rows(
        add(x, dropout(hidden, config.dropout_rate, rng)),
        params[f"{prefix}.ln2.gamma"],
        params[f"{prefix}.ln2.beta"],
        config.layer_norm_eps,
    )
    if real is not None:
        x = mask_rows(x, real)
    return x, weights


# -----------------------------------------------------------------------------
# Pipeline stages
# -----------------------------------------------------------------------------


def context_encode(
    encoded: EncodedInstance,
    params: Params,
    config: ModelConfig,
    precomputed: PrecomputedEmbeddings | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[DiffNode, list[Matrix]]:
    """Contextual embeddings ``H`` (max_length x d) plus the context block's attention."""
    real = encoded.pad_mask
    if config.embedding_source == "precomputed":
        if precomputed is None:
            raise ConfigError("embedding_source is 'precomputed' but no vectors were loaded")
        inputs = constant(precomputed.matrix(encoded, config.dtype))
        return mask_rows(linear(inputs, params, "context.proj"), real), []

    table = params["embed.E"]
    if max(encoded.ids) >= table.rows:
        raise ContractError(
            f"instance {encoded.instance_id}: token id {max(encoded.ids)} outside vocabulary of {table.rows}"
        )
    x = linear(take_rows(table, encoded.ids), params, "context.proj")
    x = add(x, sinusoidal_positions(x.rows, x.cols, config.dtype))
    x = dropout(mask_rows(x, real), config.dropout_rate, rng)
    return encoder_block(x, params, "context.block", config, real, rng)


def gat_layer(
    h: DiffNode, adjacency: AdjacencyMatrix, w: DiffNode, a: DiffNode, slope: float
) -> tuple[DiffNode, Matrix]:
    """One graph attention layer over the neighbourhoods ``adjacency > 0``.

    The score for edge (i, j) is LeakyReLU(a . [h_i W || h_j W]), split into a
    source term for i and a target term for j. Rows without neighbours yield
    zero output and a zero attention row.
    """
    h, a = lift(h), lift(a)
    if adjacency.size != h.rows:
        raise DimensionError("gat_layer", h.shape, (adjacency.size, adjacency.size))
    projected = matmul(h, w)
    width = projected.cols
    if a.shape != (2 * width, 1):
        raise DimensionError("gat_layer attention vector", a.shape, (2 * width, 1))
    a_row = transpose(a)
    source = matmul(projected, transpose(slice_cols(a_row, 0, width)))
    target = matmul(projected, transpose(slice_cols(a_row, width, 2 * width)))
    scores = leaky_relu(add(source, transpose(target)), slope)
    alpha = softmax_rows(scores, adjacency.mask)
    return relu(matmul(alpha, projected)), alpha.value


def gat_stack(
    h: DiffNode, adjacency: AdjacencyMatrix, params: Params, prefix: str, layers: int, slope: float
) -> tuple[DiffNode, list[Matrix]]:
    alphas: list[Matrix] = []
    for layer in range(layers):
        h, alpha = gat_layer(
            h, adjacency, params[f"{prefix}.{layer}.W"], params[f"{prefix}.{layer}.a"], slope
        )
        alphas.append(alpha)
    return h, alphas


def cross_attention(
    h: DiffNode,
    h_graph: DiffNode,
    w_q: DiffNode,
    w_k: DiffNode,
    w_v: DiffNode,
    real: Sequence[bool] | None = None,
) -> tuple[DiffNode, Matrix]:
    """Single-head attention with queries from ``h`` and keys/values from ``h_graph``."""
    h, h_graph = lift(h), lift(h_graph)
    if h.shape != h_graph.shape:
        raise DimensionError("cross_attention", h.shape, h_graph.shape)
    q = matmul(h, w_q)
    k = matmul(h_graph, w_k)
    v = matmul(h_graph, w_v)
    scores = scale(matmul(q, transpose(k)), 1.0 / np.sqrt(q.cols))
    attention = softmax_rows(scores, _pair_mask(real, h.rows))
    return matmul(attention, v), attention.value


def fuse(c_syn: DiffNode, c_sem: DiffNode) -> DiffNode:
    c_syn, c_sem = lift(c_syn), lift(c_sem)
    if c_syn.shape != c_sem.shape:
        raise DimensionError("fuse", c_syn.shape, c_sem.shape)
    return concat_cols(c_syn, c_sem)


def refine(
    h_cat: DiffNode,
    params: Params,
    config: ModelConfig,
    real: Sequence[bool] | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[DiffNode, list[Matrix]]:
    """Project 2d -> d, then run the refinement blocks unless they are ablated."""
    h_cat = lift(h_cat)
    if h_cat.cols != 2 * config.hidden_dim:
        raise DimensionError("refine", h_cat.shape, (h_cat.rows, 2 * config.hidden_dim))
    if config.hidden_dim % config.refine_heads:
        raise ConfigError(
            f"hidden_dim {config.hidden_dim} is not divisible by refine_heads {config.refine_heads}"
        )
    x = linear(h_cat, params, "refine.proj")
    if real is not None:
        x = mask_rows(x, real)
    weights: list[Matrix] = []
    if config.ablation.no_transformer_refine:
        return x, weights
    for layer in range(config.refine_layers):
        x, layer_weights = encoder_block(x, params, f"refine.block{layer}", config, real, rng)
        weights.extend(layer_weights)
    return x, weights


def aspect_extract(
    h_refined: DiffNode,
    adjacency: AdjacencyMatrix,
    params: Params,
    encoded: EncodedInstance,
    slope: float,
) -> tuple[DiffNode, DiffNode, Matrix]:
    """Aspect GAT over ``adjacency``; returns (z_aspect, H_aspect, alpha)."""
    if not encoded.aspect_positions:
        raise ContractError(f"instance {encoded.instance_id}: empty aspect span")
    h_aspect, alpha = gat_layer(
        h_refined, adjacency, params["aspect_gat.0.W"], params["aspect_gat.0.a"], slope
    )
    return mean_rows(take_rows(h_aspect, encoded.aspect_positions)), h_aspect, alpha


def pooled_mean(h: DiffNode, real: Sequence[bool]) -> DiffNode:
    """Mean over the rows of real tokens."""
    positions = np.flatnonzero(np.asarray(real, dtype=bool))
    if positions.size == 0:
        raise EmptyInputError("mean pooling over an all-padding sequence")
    return mean_rows(take_rows(h, positions))


class HighwayOutput(NamedTuple):
    z: DiffNode
    h_bar: DiffNode
    u: DiffNode
    gate: Matrix | None


def highway_fuse(
    h_refined: DiffNode,
    z_aspect: DiffNode,
    params: Params,
    real: Sequence[bool],
    gated: bool = True,
) -> HighwayOutput:
    h_bar = pooled_mean(lift(h_refined), real)
    z_aspect = lift(z_aspect)
    if z_aspect.shape != h_bar.shape:
        raise DimensionError("highway_fuse", h_bar.shape, z_aspect.shape)
    u = concat_cols(h_bar, z_aspect)
    if not gated:
        return HighwayOutput(z=u, h_bar=h_bar, u=u, gate=None)
    gate = sigmoid(add(matmul(u, params["highway.W_T"]), params["highway.b_T"]))
    transformed = relu(linear(u, params, "highway.transform"))
    z = add(mul(gate, transformed), mul(sub(1.0, gate), u))
    return HighwayOutput(z=z, h_bar=h_bar, u=u, gate=gate.value)


def predict(logits: ArrayLike) -> int:
    """Argmax; the lowest class index wins ties."""
    values = np.asarray(logits, dtype=np.float64).reshape(-1)
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise ContractError("predict needs a non-empty vector of finite logits")
    return int(np.argmax(values))
