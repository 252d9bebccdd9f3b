"""Central finite-difference oracle for analytic gradients."""

from collections.abc import Callable, Mapping

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from crossgraph_absa.numkit.autodiff import DiffNode, backward


class GradCheckReport(BaseModel):
    """Per-parameter worst relative error between analytic and numeric gradients."""

    model_config = ConfigDict(frozen=True)

    epsilon: float
    max_relative_error: dict[str, float]
    entries_checked: dict[str, int]

    @property
    def worst(self) -> float:
        return max(self.max_relative_error.values(), default=0.0)

    def passed(self, tolerance: float) -> bool:
        return self.worst < tolerance


def relative_error(analytic: float, numeric: float, floor: float) -> float:
    """|a - n| / max(|a|, |n|, floor)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_diff_check(
    f: Callable[[], DiffNode],
    params: Mapping[str, DiffNode],
    *,
    epsilon: float = 1e-6,
    floor: float = 1e-3,
    max_entries_per_param: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare ``backward`` gradients of ``f()`` against central differences.

    Args:
        f: Rebuilds the graph from ``params`` and returns a 1x1 node.
        params: Leaves to check; their values are perturbed in place and restored.
        epsilon: Half-width of the central difference.
        floor: Denominator floor of the relative error.
        max_entries_per_param: Check a seeded random subset of entries per tensor.
        seed: Seed for the entry subset.
    """
    for node in params.values():
        node.zero_grad()
    backward(f())
    analytic = {name: node.grad.copy() for name, node in params.items()}

    rng = np.random.default_rng(seed)
    errors: dict[str, float] = {}
    counts: dict[str, int] = {}
    for name, node in params.items():
        flat_size = node.value.size
        if max_entries_per_param is not None and flat_size > max_entries_per_param:
            picks = rng.choice(flat_size, size=max_entries_per_param, replace=False)
        else:
            picks = np.arange(flat_size)
        worst = 0.0
        for flat in picks:
            index = np.unravel_index(int(flat), node.value.shape)
            original = node.value[index]
            node.value[index] = original + epsilon
            upper = f().item()
            node.value[index] = original - epsilon
            lower = f().item()
            node.value[index] = original
            numeric = (upper - lower) / (2.0 * epsilon)
            worst = max(worst, relative_error(float(analytic[name][index]), numeric, floor))
        errors[name] = worst
        counts[name] = len(picks)
        logger.debug(f"gradcheck {name}: {len(picks)} entries, max rel. error {worst:.3e}")
    return GradCheckReport(
        epsilon=epsilon, max_relative_error=errors, entries_checked=counts
    )
