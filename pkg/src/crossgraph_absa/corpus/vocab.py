from collections import Counter
from collections.abc import Iterable
from typing import Annotated

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator

from crossgraph_absa.corpus.instances import DatasetSplit
from crossgraph_absa.errors import ContractError, DatasetError

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
RESERVED_TOKENS = (PAD, UNK, CLS, SEP)
PAD_ID, UNK_ID, CLS_ID, SEP_ID = range(4)


class Vocab(BaseModel):
    """Index <-> token table; indices 0..3 are the reserved tokens."""

    model_config = ConfigDict(frozen=True)

    tokens: Annotated[tuple[str, ...], Field(min_length=len(RESERVED_TOKENS))]
    _index: dict[str, int] = PrivateAttr(default_factory=dict)

    @field_validator("tokens")
    @classmethod
    def validate_tokens(cls, tokens: tuple[str, ...]) -> tuple[str, ...]:
        if tokens[: len(RESERVED_TOKENS)] != RESERVED_TOKENS:
            raise ValueError(f"vocabulary must start with {RESERVED_TOKENS}")
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary tokens must be unique")
        return tokens

    def model_post_init(self, __context: object) -> None:
        self._index.update({token: i for i, token in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token(self, index: int) -> str:
        return self.tokens[index]

    def lookup(self, tokens: Iterable[str]) -> list[int]:
        return [self.index(token) for token in tokens]


def build_vocab(train: DatasetSplit, min_freq: int = 1) -> Vocab:
    """Tokens seen at least ``min_freq`` times in the training split, first-seen order."""
    if min_freq < 1:
        raise ContractError(f"min_freq must be >= 1, got {min_freq}")
    if train.name != "train":
        raise ContractError(f"vocabulary must be built from the train split, got {train.name!r}")
    if not train.instances:
        raise DatasetError("cannot build a vocabulary from an empty training split")

    counts = Counter(token for instance in train.instances for token in instance.tokens)
    kept = [
        token
        for token, count in counts.items()
        if count >= min_freq and token not in RESERVED_TOKENS
    ]
    logger.info(
        f"Vocabulary: {len(kept)} of {len(counts)} distinct tokens kept (min_freq={min_freq})"
    )
    return Vocab(tokens=(*RESERVED_TOKENS, *kept))
