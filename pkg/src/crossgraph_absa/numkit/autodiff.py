"""Reverse-mode differentiation over dense 2-D numpy arrays.

Every public op accepts ``DiffNode`` or array-like operands and returns a new
``DiffNode``. Each node keeps ``(parent, recipe)`` pairs where ``recipe`` maps
the node's output gradient to the contribution for that parent. The graph is
rebuilt on every forward pass and must stay on one thread until ``backward``.
"""

from collections.abc import Callable, Sequence
from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import expit

from crossgraph_absa.errors import (
    ConfigError,
    ContractError,
    DimensionError,
    EmptyInputError,
    NumericalError,
)

Matrix: TypeAlias = NDArray[np.floating]
Recipe: TypeAlias = Callable[[Matrix], Matrix]

DEFAULT_DTYPE = np.float64


def as_matrix(values: ArrayLike, dtype: np.dtype | type | None = None) -> Matrix:
    """Coerce ``values`` into a finite 2-D float array (scalars become 1x1, vectors 1xn)."""
    array = np.asarray(values, dtype=dtype)
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(DEFAULT_DTYPE)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1)
    elif array.ndim != 2:
        raise DimensionError("as_matrix", array.shape)
    if not np.isfinite(array).all():
        raise NumericalError(f"non-finite values in matrix of shape {array.shape}")
    return array


class DiffNode:
    """A matrix value plus its gradient inside a differentiation graph."""

    __slots__ = ("value", "grad", "requires_grad", "name", "parents")

    def __init__(
        self,
        value: ArrayLike,
        *,
        requires_grad: bool = False,
        name: str | None = None,
        parents: Sequence[tuple["DiffNode", Recipe]] = (),
    ) -> None:
        self.value: Matrix = as_matrix(value)
        self.grad: Matrix = np.zeros_like(self.value)
        self.requires_grad = requires_grad
        self.name = name
        self.parents: tuple[tuple[DiffNode, Recipe], ...] = tuple(parents)

    @property
    def shape(self) -> tuple[int, int]:
        rows, cols = self.value.shape
        return rows, cols

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 node, got {self.shape}")
        return float(self.value[0, 0])

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"DiffNode{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: "DiffNode | ArrayLike") -> "DiffNode":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "DiffNode":
        return add(other, self)

    def __sub__(self, other: "DiffNode | ArrayLike") -> "DiffNode":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "DiffNode":
        return sub(other, self)

    def __mul__(self, other: "DiffNode | ArrayLike") -> "DiffNode":
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "DiffNode":
        return mul(other, self)

    def __matmul__(self, other: "DiffNode | ArrayLike") -> "DiffNode":
        return matmul(self, other)

    def __neg__(self) -> "DiffNode":
        return scale(self, -1.0)

    @property
    def T(self) -> "DiffNode":
        return transpose(self)


Operand: TypeAlias = DiffNode | ArrayLike


def parameter(value: ArrayLike, name: str | None = None) -> DiffNode:
    """Create a leaf that accumulates gradients."""
    return DiffNode(value, requires_grad=True, name=name)


def constant(value: ArrayLike) -> DiffNode:
    return DiffNode(value)


def lift(x: Operand) -> DiffNode:
    return x if isinstance(x, DiffNode) else DiffNode(x)


def _result(value: Matrix, parents: Sequence[tuple[DiffNode, Recipe]]) -> DiffNode:
    tracked = [(node, recipe) for node, recipe in parents if node.requires_grad]
    return DiffNode(value, requires_grad=bool(tracked), parents=tracked)


def _unbroadcast(grad: Matrix, shape: tuple[int, int]) -> Matrix:
    if grad.shape == shape:
        return grad
    axes = tuple(axis for axis in (0, 1) if shape[axis] == 1 and grad.shape[axis] != 1)
    return grad.sum(axis=axes, keepdims=True).reshape(shape)


def _check_broadcast(op: str, a: DiffNode, b: DiffNode) -> None:
    for left, right in zip(a.shape, b.shape, strict=True):
        if left != right and left != 1 and right != 1:
            raise DimensionError(op, a.shape, b.shape)


# -----------------------------------------------------------------------------
# Elementwise arithmetic (row/column-vector broadcasting only)
# -----------------------------------------------------------------------------


def add(a: Operand, b: Operand) -> DiffNode:
    a, b = lift(a), lift(b)
    _check_broadcast("add", a, b)
    return _result(
        a.value + b.value,
        [
            (a, lambda g: _unbroadcast(g, a.shape)),
            (b, lambda g: _unbroadcast(g, b.shape)),
        ],
    )


def sub(a: Operand, b: Operand) -> DiffNode:
    a, b = lift(a), lift(b)
    _check_broadcast("sub", a, b)
    return _result(
        a.value - b.value,
        [
            (a, lambda g: _unbroadcast(g, a.shape)),
            (b, lambda g: -_unbroadcast(g, b.shape)),
        ],
    )


def mul(a: Operand, b: Operand) -> DiffNode:
    """Elementwise (Hadamard) product."""
    a, b = lift(a), lift(b)
    _check_broadcast("mul", a, b)
    return _result(
        a.value * b.value,
        [
            (a, lambda g: _unbroadcast(g * b.value, a.shape)),
            (b, lambda g: _unbroadcast(g * a.value, b.shape)),
        ],
    )


def scale(a: Operand, factor: float) -> DiffNode:
    a = lift(a)
    return _result(a.value * factor, [(a, lambda g: g * factor)])


def matmul(a: Operand, b: Operand) -> DiffNode:
    a, b = lift(a), lift(b)
    if a.cols != b.rows:
        raise DimensionError("matmul", a.shape, b.shape)
    return _result(
        a.value @ b.value,
        [
            (a, lambda g: g @ b.value.T),
            (b, lambda g: a.value.T @ g),
        ],
    )


def transpose(a: Operand) -> DiffNode:
    a = lift(a)
    return _result(a.value.T.copy(), [(a, lambda g: g.T)])


# -----------------------------------------------------------------------------
# Layout
# -----------------------------------------------------------------------------


def concat_cols(*parts: Operand) -> DiffNode:
    nodes = [lift(part) for part in parts]
    if not nodes:
        raise EmptyInputError("concat_cols needs at least one operand")
    if len({node.rows for node in nodes}) != 1:
        raise DimensionError("concat_cols", *(node.shape for node in nodes))
    bounds = np.cumsum([0, *(node.cols for node in nodes)])
    parents: list[tuple[DiffNode, Recipe]] = []
    for node, start, stop in zip(nodes, bounds[:-1], bounds[1:], strict=True):
        parents.append((node, lambda g, lo=start, hi=stop: g[:, lo:hi]))
    return _result(np.concatenate([node.value for node in nodes], axis=1), parents)


def slice_cols(a: Operand, start: int, stop: int) -> DiffNode:
    a = lift(a)
    if not 0 <= start < stop <= a.cols:
        raise ContractError(f"slice_cols: [{start}, {stop}) outside {a.cols} columns")

    def recipe(g: Matrix) -> Matrix:
        full = np.zeros_like(a.value)
        full[:, start:stop] = g
        return full

    return _result(a.value[:, start:stop].copy(), [(a, recipe)])


def take_rows(a: Operand, indices: Sequence[int] | NDArray[np.integer]) -> DiffNode:
    """Gather rows by index (embedding lookup); repeated indices accumulate."""
    a = lift(a)
    index = np.asarray(indices, dtype=np.intp)
    if index.size and (index.min() < 0 or index.max() >= a.rows):
        raise ContractError(f"take_rows: index outside [0, {a.rows})")

    def recipe(g: Matrix) -> Matrix:
        full = np.zeros_like(a.value)
        np.add.at(full, index, g)
        return full

    return _result(a.value[index], [(a, recipe)])


def element(a: Operand, row: int, col: int) -> DiffNode:
    a = lift(a)
    if not (0 <= row < a.rows and 0 <= col < a.cols):
        raise ContractError(f"element: ({row}, {col}) outside {a.shape}")

    def recipe(g: Matrix) -> Matrix:
        full = np.zeros_like(a.value)
        full[row, col] = g[0, 0]
        return full

    return _result(a.value[row : row + 1, col : col + 1].copy(), [(a, recipe)])


# -----------------------------------------------------------------------------
# Activations
# -----------------------------------------------------------------------------


def relu(a: Operand) -> DiffNode:
    a = lift(a)
    active = a.value > 0
    return _result(np.where(active, a.value, 0.0), [(a, lambda g: g * active)])


def leaky_relu(a: Operand, slope: float = 0.2) -> DiffNode:
    if not 0.0 < slope < 1.0:
        raise ConfigError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    a = lift(a)
    factor = np.where(a.value >= 0, 1.0, slope)
    return _result(a.value * factor, [(a, lambda g: g * factor)])


def sigmoid(a: Operand) -> DiffNode:
    a = lift(a)
    y = expit(a.value)
    return _result(y, [(a, lambda g: g * y * (1.0 - y))])


def softmax_rows(a: Operand, mask: ArrayLike | None = None) -> DiffNode:
    """Row-wise softmax with max subtraction.

    ``mask`` (same shape, True = allowed) restricts each row to its allowed
    entries; rows with no allowed entry come out as all-zero rows.
    """
    a = lift(a)
    x = a.value
    if mask is None:
        exps = np.exp(x - x.max(axis=1, keepdims=True))
    else:
        allowed = np.asarray(mask, dtype=bool)
        if allowed.shape != x.shape:
            raise DimensionError("softmax_rows", x.shape, allowed.shape)
        row_max = np.where(allowed, x, -np.inf).max(axis=1, keepdims=True)
        row_max = np.where(np.isfinite(row_max), row_max, 0.0)
        exps = np.where(allowed, np.exp(np.where(allowed, x - row_max, 0.0)), 0.0)
    totals = exps.sum(axis=1, keepdims=True)
    y = np.divide(exps, totals, out=np.zeros_like(exps), where=totals > 0)

    def recipe(g: Matrix) -> Matrix:
        return y * (g - (g * y).sum(axis=1, keepdims=True))

    return _result(y, [(a, recipe)])


def log_softmax_rows(a: Operand) -> DiffNode:
    a = lift(a)
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(out)
    return _result(
        out, [(a, lambda g: g - probs * g.sum(axis=1, keepdims=True))]
    )


# -----------------------------------------------------------------------------
# Reductions and normalisation
# -----------------------------------------------------------------------------


def mean_rows(a: Operand) -> DiffNode:
    """Column-wise mean as a 1 x cols row."""
    a = lift(a)
    if a.rows == 0:
        raise EmptyInputError("mean_rows on a matrix with zero rows")
    count = a.rows
    return _result(
        a.value.mean(axis=0, keepdims=True),
        [(a, lambda g: np.repeat(g / count, count, axis=0))],
    )


def sum_all(a: Operand) -> DiffNode:
    a = lift(a)
    return _result(
        np.array([[a.value.sum()]], dtype=a.value.dtype),
        [(a, lambda g: np.full_like(a.value, g[0, 0]))],
    )


def layer_norm_rows(
    a: Operand, gamma: Operand, beta: Operand, eps: float = 1e-5
) -> DiffNode:
    """Normalise each row to zero mean / unit variance, then apply gain and bias."""
    a, gamma, beta = lift(a), lift(gamma), lift(beta)
    if gamma.shape != (1, a.cols) or beta.shape != (1, a.cols):
        raise DimensionError("layer_norm_rows", a.shape, gamma.shape, beta.shape)
    width = a.cols
    centred = a.value - a.value.mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centred**2).mean(axis=1, keepdims=True) + eps)
    x_hat = centred * inv_std

    def input_recipe(g: Matrix) -> Matrix:
        d_hat = g * gamma.value
        return (inv_std / width) * (
            width * d_hat
            - d_hat.sum(axis=1, keepdims=True)
            - x_hat * (d_hat * x_hat).sum(axis=1, keepdims=True)
        )

    return _result(
        x_hat * gamma.value + beta.value,
        [
            (a, input_recipe),
            (gamma, lambda g: (g * x_hat).sum(axis=0, keepdims=True)),
            (beta, lambda g: g.sum(axis=0, keepdims=True)),
        ],
    )


def mask_rows(a: Operand, row_mask: ArrayLike) -> DiffNode:
    """Zero the rows whose mask entry is False."""
    a = lift(a)
    keep = np.asarray(row_mask, dtype=a.value.dtype).reshape(-1, 1)
    if keep.shape[0] != a.rows:
        raise DimensionError("mask_rows", a.shape, keep.shape)
    return mul(a, keep)


def dropout(a: Operand, rate: float, rng: np.random.Generator | None) -> DiffNode:
    """Inverted dropout; identity when ``rng`` is None or ``rate`` is 0."""
    a = lift(a)
    if rng is None or rate <= 0.0:
        return a
    if rate >= 1.0:
        raise ConfigError(f"dropout rate must be below 1, got {rate}")
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return mul(a, keep.astype(a.value.dtype))


# -----------------------------------------------------------------------------
# Reverse pass
# -----------------------------------------------------------------------------


def _reverse_topological(root: DiffNode) -> list[DiffNode]:
    order: list[DiffNode] = []
    visited: set[int] = set()
    stack: list[tuple[DiffNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    order.reverse()
    return order


def backward(output: DiffNode) -> None:
    """Accumulate d(output)/d(node) into ``grad`` of every reachable tracked node."""
    if output.shape != (1, 1):
        raise ContractError(f"backward needs a scalar (1x1) output, got {output.shape}")
    if not output.requires_grad:
        return
    output.grad = np.ones_like(output.value)
    for node in _reverse_topological(output):
        for parent, recipe in node.parents:
            parent.grad += recipe(node.grad)
