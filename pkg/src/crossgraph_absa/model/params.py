"""Named learnable tensors.

Every parameter draws from its own generator seeded by ``(seed, crc32(name))``,
so a model built without some components gets bit-identical values for the
parameters it does have.
"""

import zlib
from collections.abc import Iterator, Mapping
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from crossgraph_absa.errors import CheckpointError, ConfigError
from crossgraph_absa.numkit import DiffNode, Matrix, parameter
from crossgraph_absa.settings import ModelConfig

InitScheme = Literal["fan_uniform", "embedding", "zeros", "ones", "gate_bias"]

GATE_BIAS_INIT = -1.0


class ParamSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    shape: tuple[int, int]
    init: InitScheme = "fan_uniform"


def _linear(prefix: str, fan_in: int, fan_out: int) -> dict[str, ParamSpec]:
    return {
        f"{prefix}.W": ParamSpec(shape=(fan_in, fan_out)),
        f"{prefix}.b": ParamSpec(shape=(1, fan_out), init="zeros"),
    }


def _layer_norm(prefix: str, width: int) -> dict[str, ParamSpec]:
    return {
        f"{prefix}.gamma": ParamSpec(shape=(1, width), init="ones"),
        f"{prefix}.beta": ParamSpec(shape=(1, width), init="zeros"),
    }


def _encoder_block(prefix: str, d: int, ff: int) -> dict[str, ParamSpec]:
    specs = {f"{prefix}.attn.{name}": ParamSpec(shape=(d, d)) for name in ("Wq", "Wk", "Wv", "Wo")}
    specs |= _layer_norm(f"{prefix}.ln1", d)
    specs |= _linear(f"{prefix}.ff1", d, ff)
    specs |= _linear(f"{prefix}.ff2", ff, d)
    specs |= _layer_norm(f"{prefix}.ln2", d)
    return specs


def _gat(prefix: str, d: int, layers: int) -> dict[str, ParamSpec]:
    specs: dict[str, ParamSpec] = {}
    for layer in range(layers):
        specs[f"{prefix}.{layer}.W"] = ParamSpec(shape=(d, d))
        specs[f"{prefix}.{layer}.a"] = ParamSpec(shape=(2 * d, 1))
    return specs


def parameter_specs(config: ModelConfig) -> dict[str, ParamSpec]:
    """Shapes of every tensor the configured (possibly ablated) network uses."""
    d, ff, flags = config.hidden_dim, config.ff_dim, config.ablation
    specs: dict[str, ParamSpec] = {}
    if config.embedding_source == "trainable":
        if config.vocab_size is None:
            raise ConfigError("vocab_size must be resolved before parameters are created")
        specs["embed.E"] = ParamSpec(shape=(config.vocab_size, config.embed_dim), init="embedding")
    specs |= _linear("context.proj", config.embed_dim, d)
    if config.embedding_source == "trainable":
        specs |= _encoder_block("context.block", d, ff)
    if not flags.skip_syntax:
        specs |= _gat("gat_syn", d, config.gat_layers)
    if not flags.skip_semantic:
        specs |= _gat("gat_sem", d, config.gat_layers)
    if not flags.no_cross_attention:
        for branch in ("xattn_syn", "xattn_sem"):
            specs |= {f"{branch}.{name}": ParamSpec(shape=(d, d)) for name in ("Wq", "Wk", "Wv")}
    specs |= _linear("refine.proj", 2 * d, d)
    if not flags.no_transformer_refine:
        for layer in range(config.refine_layers):
            specs |= _encoder_block(f"refine.block{layer}", d, ff)
    if not flags.no_aspect_embedding:
        specs |= _gat("aspect_gat", d, 1)
    if not flags.no_highway_gate:
        specs["highway.W_T"] = ParamSpec(shape=(2 * d, 2 * d))
        specs["highway.b_T"] = ParamSpec(shape=(1, 2 * d), init="gate_bias")
        specs |= _linear("highway.transform", 2 * d, 2 * d)
    specs |= _linear("classifier", 2 * d, config.num_classes)
    return specs


def _initial_value(name: str, spec: ParamSpec, seed: int, dtype: np.dtype) -> Matrix:
    rng = np.random.default_rng([seed, zlib.crc32(name.encode("utf-8"))])
    rows, cols = spec.shape
    match spec.init:
        case "zeros":
            value = np.zeros(spec.shape)
        case "ones":
            value = np.ones(spec.shape)
        case "gate_bias":
            value = np.full(spec.shape, GATE_BIAS_INIT)
        case "embedding":
            limit = np.sqrt(3.0 / cols)
            value = rng.uniform(-limit, limit, size=spec.shape)
        case _:
            limit = np.sqrt(6.0 / (rows + cols))
            value = rng.uniform(-limit, limit, size=spec.shape)
    return value.astype(dtype)


class ModelParams(Mapping[str, DiffNode]):
    """Read-only mapping of parameter name to its leaf ``DiffNode``."""

    def __init__(self, tensors: Mapping[str, DiffNode]) -> None:
        self._tensors = dict(tensors)

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> "ModelParams":
        return cls(
            {
                name: parameter(_initial_value(name, spec, seed, config.dtype), name=name)
                for name, spec in parameter_specs(config).items()
            }
        )

    @classmethod
    def from_arrays(cls, config: ModelConfig, arrays: Mapping[str, Matrix]) -> "ModelParams":
        """Wrap arrays after checking names and shapes against ``config``."""
        expected = parameter_specs(config)
        missing = sorted(set(expected) - set(arrays))
        unexpected = sorted(set(arrays) - set(expected))
        if missing or unexpected:
            raise CheckpointError(
                f"parameter names disagree with config: missing {missing}, unexpected {unexpected}"
            )
        for name, spec in expected.items():
            if tuple(np.shape(arrays[name])) != spec.shape:
                raise CheckpointError(
                    f"parameter {name}: shape {tuple(np.shape(arrays[name]))}, "
                    f"config expects {spec.shape}"
                )
        return cls(
            {
                name: parameter(np.asarray(arrays[name], dtype=config.dtype), name=name)
                for name in expected
            }
        )

    def __getitem__(self, name: str) -> DiffNode:
        try:
            return self._tensors[name]
        except KeyError as e:
            raise ConfigError(f"parameter {name!r} is not part of this model") from e

    def __contains__(self, name: object) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def zero_grad(self) -> None:
        for node in self._tensors.values():
            node.zero_grad()

    def snapshot(self) -> dict[str, Matrix]:
        return {name: node.value.copy() for name, node in self._tensors.items()}

    def restore(self, arrays: Mapping[str, Matrix]) -> None:
        for name, value in arrays.items():
            self[name].value = value.copy()
            self[name].zero_grad()

    def count(self) -> int:
        return sum(node.value.size for node in self._tensors.values())
