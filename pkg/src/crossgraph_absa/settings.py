import json
from collections.abc import Mapping
from pathlib import Path
from typing import Annotated, Any, Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from crossgraph_absa.graphbuild.syntax import SyntaxRuleSet

PrecisionName = Annotated[Literal["float64", "float32"], "Floating point precision"]
EmbeddingSource = Annotated[
    Literal["trainable", "precomputed"], "Where token vectors come from"
]
AspectGraphMode = Annotated[
    Literal["window", "syntax"], "Construction of the aspect adjacency"
]
OptimizerName = Annotated[Literal["adam", "adamw"], "Supported optimisers"]
ClassWeighting = Annotated[Literal["none", "weighted"], "Loss class weighting"]

# Candidate values explored for the published model; the defaults below are
# the best column except where noted on the field.
BATCH_SIZE_CANDIDATES = (1, 2, 3)
MAX_LENGTH_CANDIDATES = (80, 100, 128)
EPOCH_CANDIDATES = (10, 20, 30)
LEARNING_RATE_CANDIDATES = (0.01, 0.001, 1e-5, 2e-5)
GAT_LAYER_CANDIDATES = (1, 2, 3, 4, 5, 6, 7)
OPTIMIZER_CANDIDATES = ("adam", "adamw")
CLASS_WEIGHTING_CANDIDATES = ("none", "weighted")
HIDDEN_DIM_CANDIDATES = (256, 512, 768)


class AblationFlags(BaseModel):
    """Components removed from the network; all False is the full model."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    no_syntax_graph: bool = False
    no_semantic_graph: bool = False
    no_graph_branches: bool = False
    no_cross_attention: bool = False
    no_transformer_refine: bool = False
    no_highway_gate: bool = False
    no_aspect_embedding: bool = False
    fixed_adjacency: bool = False

    @model_validator(mode="before")
    @classmethod
    def expand_graph_branches(cls, data: Any) -> Any:
        """``no_graph_branches`` implies both single-graph flags."""
        if isinstance(data, Mapping) and data.get("no_graph_branches"):
            return {**data, "no_syntax_graph": True, "no_semantic_graph": True}
        return data

    @property
    def skip_syntax(self) -> bool:
        return self.no_syntax_graph or self.no_graph_branches

    @property
    def skip_semantic(self) -> bool:
        return self.no_semantic_graph or self.no_graph_branches

    def enabled(self) -> list[str]:
        return [name for name, value in self.model_dump().items() if value]


# Ablation row label -> flag, in published table order.
ABLATION_SETTINGS: dict[str, str] = {
    "No Syntax Graph": "no_syntax_graph",
    "No Semantic Graph": "no_semantic_graph",
    "No Graph Branches": "no_graph_branches",
    "No Cross-Attention": "no_cross_attention",
    "No Transformer": "no_transformer_refine",
    "No Highway Gate": "no_highway_gate",
    "No Aspect Embedding": "no_aspect_embedding",
    "Fixed Adjacency": "fixed_adjacency",
}
BASE_SETTING_LABEL = "CrosGrpsABS Base"


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    vocab_size: Annotated[
        PositiveInt | None,
        Field(default=None, description="|V|, filled in once the vocabulary is built"),
    ]
    embed_dim: Annotated[PositiveInt, Field(default=64, description="d_e")]
    hidden_dim: Annotated[
        PositiveInt,
        Field(default=64, description="d; 768 in the published runs, see HIDDEN_DIM_CANDIDATES"),
    ]
    num_classes: Annotated[int, Field(default=3, ge=2)]
    gat_layers: Annotated[int, Field(default=1, ge=1, le=7)]
    refine_heads: Annotated[PositiveInt, Field(default=4)]
    refine_layers: Annotated[PositiveInt, Field(default=1)]
    ff_multiplier: Annotated[
        PositiveInt, Field(default=2, description="Feed-forward width as a multiple of d")
    ]
    leaky_slope: Annotated[float, Field(default=0.2, gt=0.0, lt=1.0)]
    dropout_rate: Annotated[float, Field(default=0.1, ge=0.0, lt=1.0)]
    layer_norm_eps: Annotated[float, Field(default=1e-5, gt=0.0)]
    embedding_source: EmbeddingSource = "trainable"
    precomputed_path: Annotated[
        Path | None,
        Field(default=None, description="Per-token vector file for the precomputed source"),
    ]
    precision: PrecisionName = "float64"
    ablation: AblationFlags = AblationFlags()

    @model_validator(mode="after")
    def validate_shapes_and_source(self) -> Self:
        if self.hidden_dim % self.refine_heads != 0:
            raise ValueError(
                f"hidden_dim {self.hidden_dim} is not divisible by "
                f"refine_heads {self.refine_heads}"
            )
        if (self.embedding_source == "precomputed") != (
            self.precomputed_path is not None
        ):
            raise ValueError(
                "precomputed_path must be set exactly when embedding_source is 'precomputed'"
            )
        return self

    @property
    def ff_dim(self) -> int:
        return self.hidden_dim * self.ff_multiplier

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.precision)

    def with_vocab(self, vocab_size: int) -> "ModelConfig":
        return self.model_copy(update={"vocab_size": vocab_size})

    def with_ablation(self, **flags: bool) -> "ModelConfig":
        merged = AblationFlags(**{**self.ablation.model_dump(), **flags})
        return self.model_copy(update={"ablation": merged})


class GraphConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    syntax: SyntaxRuleSet = SyntaxRuleSet()
    top_k: Annotated[PositiveInt, Field(default=5)]
    threshold: Annotated[float, Field(default=0.2, ge=-1.0, le=1.0)]
    aspect_radius: Annotated[int, Field(default=3, ge=0)]
    aspect_graph: AspectGraphMode = "window"
    syntax_edges_dir: Annotated[
        Path | None,
        Field(default=None, description="Directory of <instance_id>.edges files"),
    ]


class CorpusConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    min_freq: Annotated[PositiveInt, Field(default=1)]


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: Annotated[PositiveInt, Field(default=20)]
    learning_rate: Annotated[float, Field(default=2e-5, gt=0.0)]
    batch_size: Annotated[PositiveInt, Field(default=1)]
    optimizer: OptimizerName = "adamw"
    weight_decay: Annotated[float, Field(default=1e-2, ge=0.0)]
    betas: tuple[
        Annotated[float, Field(ge=0.0, lt=1.0)], Annotated[float, Field(ge=0.0, lt=1.0)]
    ] = (0.9, 0.999)
    adam_eps: Annotated[float, Field(default=1e-8, gt=0.0)]
    early_stop_patience: Annotated[PositiveInt, Field(default=5)]
    seed: Annotated[int, Field(default=0, ge=0, lt=2**64)]
    max_length: Annotated[int, Field(default=128, ge=5)]
    class_weighting: ClassWeighting = "weighted"
    grad_clip_norm: Annotated[
        float | None,
        Field(default=5.0, gt=0.0, description="Global-norm clip; None disables"),
    ]


class ExperimentSettings(BaseSettings):
    """Everything a run needs, resolved from one JSON document plus CLI overrides.

    Only init kwargs are read: the process environment never reaches a run.
    """

    model_config = SettingsConfigDict(frozen=True, extra="forbid")

    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    graph: GraphConfig = GraphConfig()
    corpus: CorpusConfig = CorpusConfig()

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @classmethod
    def load(
        cls, path: Path | None = None, overrides: Mapping[str, Any] | None = None
    ) -> "ExperimentSettings":
        """Read ``path`` (UTF-8 JSON) and apply nested ``overrides`` on top."""
        document: dict[str, Any] = {}
        if path is not None:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**deep_merge(document, overrides or {}))

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ExperimentSettings":
        return type(self)(**deep_merge(self.model_dump(mode="json"), overrides))


def deep_merge(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Recursively merge ``overrides`` into a copy of ``base``; None values are skipped."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged
