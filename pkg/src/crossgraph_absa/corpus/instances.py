from enum import IntEnum
from typing import Annotated, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from crossgraph_absa.utils import normalize_text

SplitName = Annotated[
    Literal["train", "validation", "test"], "Dataset split names"
]


class Polarity(IntEnum):
    """Sentiment label; the integer value is the class index."""

    POSITIVE = 0
    NEGATIVE = 1
    NEUTRAL = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: "str | int | Polarity") -> "Polarity":
        if isinstance(value, str) and not value.strip().lstrip("-").isdigit():
            try:
                return cls[value.strip().upper()]
            except KeyError as e:
                raise ValueError(
                    f"polarity {value!r} is not one of {[p.label for p in cls]}"
                ) from e
        return cls(int(value))


class Instance(BaseModel):
    """One (sentence, aspect span, polarity) triple; the span is [start, end)."""

    model_config = ConfigDict(frozen=True)

    id: Annotated[str, Field(min_length=1)]
    tokens: Annotated[tuple[str, ...], Field(min_length=1)]
    aspect_start: Annotated[int, Field(ge=0)]
    aspect_end: int
    polarity: Polarity

    @field_validator("tokens")
    @classmethod
    def normalize_tokens(cls, tokens: tuple[str, ...]) -> tuple[str, ...]:
        normalized = tuple(normalize_text(token) or "" for token in tokens)
        if empty := [i for i, token in enumerate(normalized) if not token]:
            raise ValueError(f"empty token(s) at position(s) {empty}")
        return normalized

    @field_validator("polarity", mode="before")
    @classmethod
    def parse_polarity(cls, value: object) -> Polarity:
        return Polarity.parse(value)  # type: ignore[arg-type]

    @model_validator(mode="after")
    def validate_span(self) -> Self:
        if not self.aspect_start < self.aspect_end <= len(self.tokens):
            raise ValueError(
                f"aspect span [{self.aspect_start}, {self.aspect_end}) does not "
                f"resolve inside {len(self.tokens)} tokens"
            )
        return self

    @property
    def aspect_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.aspect_start : self.aspect_end]


class DatasetSplit(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: SplitName
    instances: tuple[Instance, ...] = ()

    @model_validator(mode="after")
    def validate_unique_ids(self) -> Self:
        seen: set[str] = set()
        for instance in self.instances:
            if instance.id in seen:
                raise ValueError(f"duplicate instance id {instance.id!r} in {self.name}")
            seen.add(instance.id)
        return self

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def labels(self) -> list[Polarity]:
        return [instance.polarity for instance in self.instances]

    def label_counts(self) -> dict[str, int]:
        counts = {polarity.label: 0 for polarity in Polarity}
        for label in self.labels:
            counts[label.label] += 1
        return counts

    def get(self, instance_id: str) -> Instance | None:
        return next((i for i in self.instances if i.id == instance_id), None)


class CorpusSplits(BaseModel):
    """The train/validation/test triple of one dataset."""

    model_config = ConfigDict(frozen=True)

    name: str = "dataset"
    train: DatasetSplit
    validation: DatasetSplit | None = None
    test: DatasetSplit | None = None
