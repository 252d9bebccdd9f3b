"""Adam-family updates over named parameters.

``adamw`` decays weights directly (decoupled); ``adam`` adds the decay term to
the gradient before the moment updates (coupled L2).
"""

from collections.abc import Mapping

import numpy as np
from loguru import logger

from crossgraph_absa.numkit import DiffNode, Matrix
from crossgraph_absa.settings import TrainConfig


class AdamState:
    """First/second moments per parameter name and the shared step counter."""

    def __init__(self) -> None:
        self.step = 0
        self.m: dict[str, Matrix] = {}
        self.v: dict[str, Matrix] = {}

    def moments(self, name: str, like: Matrix) -> tuple[Matrix, Matrix]:
        if name not in self.m:
            self.m[name] = np.zeros_like(like)
            self.v[name] = np.zeros_like(like)
        return self.m[name], self.v[name]


def _moment_update(
    state: AdamState, name: str, grad: Matrix, betas: tuple[float, float], eps: float
) -> Matrix:
    beta1, beta2 = betas
    m, v = state.moments(name, grad)
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad**2
    m_hat = m / (1.0 - beta1**state.step)
    v_hat = v / (1.0 - beta2**state.step)
    return m_hat / (np.sqrt(v_hat) + eps)


def adamw_step(
    params: Mapping[str, DiffNode],
    grads: Mapping[str, Matrix],
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 1e-2,
) -> None:
    state.step += 1
    for name, grad in grads.items():
        node = params[name]
        direction = _moment_update(state, name, grad, betas, eps)
        node.value = node.value - lr * (direction + weight_decay * node.value)


def adam_step(
    params: Mapping[str, DiffNode],
    grads: Mapping[str, Matrix],
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    state.step += 1
    for name, grad in grads.items():
        node = params[name]
        direction = _moment_update(state, name, grad + weight_decay * node.value, betas, eps)
        node.value = node.value - lr * direction


def clip_by_global_norm(grads: Mapping[str, Matrix], max_norm: float | None) -> tuple[dict[str, Matrix], float]:
    """Rescale all gradients together when their joint L2 norm exceeds ``max_norm``."""
    norm = float(np.sqrt(sum(float((g**2).sum()) for g in grads.values())))
    if max_norm is None or norm <= max_norm:
        return dict(grads), norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


class Optimizer:
    """The configured update rule with its own moment state."""

    def __init__(self, config: TrainConfig) -> None:
        self.config = config
        self.state = AdamState()

    def step(self, params: Mapping[str, DiffNode], grads: Mapping[str, Matrix]) -> float:
        clipped, norm = clip_by_global_norm(grads, self.config.grad_clip_norm)
        if self.config.grad_clip_norm is not None and norm > self.config.grad_clip_norm:
            logger.debug(f"Gradient norm {norm:.4g} clipped to {self.config.grad_clip_norm}")
        update = adamw_step if self.config.optimizer == "adamw" else adam_step
        update(
            params,
            clipped,
            self.state,
            self.config.learning_rate,
            self.config.betas,
            self.config.adam_eps,
            self.config.weight_decay,
        )
        return norm
