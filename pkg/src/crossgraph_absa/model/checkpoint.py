"""Versioned JSON checkpoints: config, vocabulary and every named tensor."""

from pathlib import Path
from typing import Annotated, Literal, Self

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from crossgraph_absa.corpus.vocab import Vocab
from crossgraph_absa.errors import CheckpointError
from crossgraph_absa.model.network import CrosGraphNet
from crossgraph_absa.model.params import ModelParams
from crossgraph_absa.settings import GraphConfig, ModelConfig
from crossgraph_absa.utils import write_text

CHECKPOINT_FORMAT = 1


class TensorRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    shape: tuple[int, int]
    values: list[float]

    @model_validator(mode="after")
    def validate_size(self) -> Self:
        rows, cols = self.shape
        if rows * cols != len(self.values):
            raise ValueError(f"shape {self.shape} needs {rows * cols} values, got {len(self.values)}")
        return self


class Checkpoint(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    format_version: Literal[1] = CHECKPOINT_FORMAT
    model: ModelConfig
    graph: GraphConfig
    max_length: Annotated[int, Field(ge=5)]
    vocab: tuple[str, ...]
    epoch: int | None = None
    tensors: dict[str, TensorRecord]

    @classmethod
    def from_network(
        cls, net: CrosGraphNet, vocab: Vocab, max_length: int, epoch: int | None = None
    ) -> "Checkpoint":
        return cls(
            model=net.config,
            graph=net.graph,
            max_length=max_length,
            vocab=vocab.tokens,
            epoch=epoch,
            tensors={
                name: TensorRecord(shape=node.shape, values=node.value.ravel().tolist())
                for name, node in net.params.items()
            },
        )

    def save(self, path: Path) -> Path:
        written = write_text(path, self.model_dump_json(indent=1))
        logger.info(f"Checkpoint with {len(self.tensors)} tensors written to {path}")
        return written

    @classmethod
    def load(cls, path: Path) -> "Checkpoint":
        """Parse and validate; any malformed content becomes ``CheckpointError``."""
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(f"{path}: invalid checkpoint: not UTF-8 text ({e.reason})") from e
        try:
            return cls.model_validate_json(raw)
        except ValidationError as e:
            raise CheckpointError(f"{path}: invalid checkpoint: {e}") from e

    def restore(self) -> tuple[CrosGraphNet, Vocab]:
        try:
            vocab = Vocab(tokens=self.vocab)
        except ValidationError as e:
            raise CheckpointError(f"invalid checkpoint vocabulary: {e}") from e
        if self.model.embedding_source == "trainable" and self.model.vocab_size != len(vocab):
            raise CheckpointError(
                f"vocab_size {self.model.vocab_size} disagrees with {len(vocab)} stored tokens"
            )
        arrays = {
            name: np.asarray(record.values, dtype=self.model.dtype).reshape(record.shape)
            for name, record in self.tensors.items()
        }
        params = ModelParams.from_arrays(self.model, arrays)
        return CrosGraphNet(self.model, params, self.graph), vocab
