"""Tabular dataset files.

UTF-8, tab-separated, one instance per line, header required::

    id<TAB>tokens (space-joined)<TAB>aspect_start<TAB>aspect_end<TAB>polarity

Lines starting with ``#`` and blank lines are ignored. Converters from the
published spreadsheet / SemEval sources write this format (multi-aspect
sentences become one row per aspect) and own the token-span alignment.
"""

from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError

from crossgraph_absa.corpus.instances import (
    CorpusSplits,
    DatasetSplit,
    Instance,
    Polarity,
    SplitName,
)
from crossgraph_absa.corpus.tokenizer import tokenize
from crossgraph_absa.errors import ContractError, DatasetError, EmptyInputError
from crossgraph_absa.utils import write_text

HEADER = ("id", "tokens", "aspect_start", "aspect_end", "polarity")
SPLIT_FILES: dict[SplitName, tuple[str, ...]] = {
    "train": ("train.tsv",),
    "validation": ("validation.tsv", "dev.tsv"),
    "test": ("test.tsv",),
}


class RowDiagnostic(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class LoadResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: Path
    split: DatasetSplit
    diagnostics: tuple[RowDiagnostic, ...] = ()

    @property
    def label_counts(self) -> dict[str, int]:
        return self.split.label_counts()


def infer_split_name(path: Path) -> SplitName:
    for name, filenames in SPLIT_FILES.items():
        if path.name in filenames:
            return name
    return "train" if "train" in path.stem else "test"


def _parse_row(fields: list[str]) -> dict[str, object]:
    if len(fields) != len(HEADER):
        raise ValueError(f"expected {len(HEADER)} tab-separated fields, got {len(fields)}")
    instance_id, tokens, start, end, polarity = fields
    return {
        "id": instance_id.strip(),
        "tokens": tuple(tokens.split(" ")),
        "aspect_start": int(start),
        "aspect_end": int(end),
        "polarity": polarity.strip(),
    }


def load_tabular(path: Path, name: SplitName | None = None) -> LoadResult:
    """Read one split; bad rows become line-numbered diagnostics, duplicate ids raise."""
    path = Path(path)
    split_name = name or infer_split_name(path)
    instances: list[Instance] = []
    diagnostics: list[RowDiagnostic] = []
    seen: dict[str, int] = {}
    header_seen = False

    with path.open(encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if not header_seen:
                if tuple(field.strip() for field in fields) != HEADER:
                    raise DatasetError(
                        f"{path}: line {line_no}: header {'<TAB>'.join(HEADER)} required"
                    )
                header_seen = True
                continue
            try:
                instance = Instance(**_parse_row(fields))
            except (ValueError, ValidationError) as e:
                message = str(e).splitlines()[-1] if isinstance(e, ValidationError) else str(e)
                diagnostics.append(RowDiagnostic(line=line_no, message=message.strip()))
                continue
            if instance.id in seen:
                raise DatasetError(
                    f"{path}: line {line_no}: duplicate id {instance.id!r} "
                    f"(first seen on line {seen[instance.id]})"
                )
            seen[instance.id] = line_no
            instances.append(instance)

    if not header_seen:
        raise DatasetError(f"{path}: missing header line")
    for diagnostic in diagnostics:
        logger.warning(f"{path}: rejected {diagnostic}")
    split = DatasetSplit(name=split_name, instances=tuple(instances))
    logger.info(f"Loaded {len(split)} {split_name} instances from {path}: {split.label_counts()}")
    return LoadResult(path=path, split=split, diagnostics=tuple(diagnostics))


def split_paths(data_dir: Path) -> dict[SplitName, Path]:
    """Existing split files under a dataset directory."""
    found: dict[SplitName, Path] = {}
    for name, filenames in SPLIT_FILES.items():
        for filename in filenames:
            if (candidate := Path(data_dir) / filename).is_file():
                found[name] = candidate
                break
    return found


def load_dataset(data_dir: Path) -> CorpusSplits:
    """Load train (required), validation and test splits from ``data_dir``."""
    data_dir = Path(data_dir)
    paths = split_paths(data_dir)
    if "train" not in paths:
        raise FileNotFoundError(f"no train.tsv under {data_dir}")
    loaded = {name: load_tabular(path, name).split for name, path in paths.items()}
    return CorpusSplits(
        name=data_dir.name,
        train=loaded["train"],
        validation=loaded.get("validation"),
        test=loaded.get("test"),
    )


def write_tabular(path: Path, instances: Iterable[Instance]) -> Path:
    lines = ["\t".join(HEADER)]
    for instance in instances:
        lines.append(
            "\t".join(
                [
                    instance.id,
                    " ".join(instance.tokens),
                    str(instance.aspect_start),
                    str(instance.aspect_end),
                    instance.polarity.label,
                ]
            )
        )
    return write_text(path, "\n".join(lines) + "\n")


def instance_from_text(
    instance_id: str, text: str, aspect: str, polarity: Polarity | str = Polarity.NEUTRAL
) -> Instance:
    """Tokenise an inline sentence and locate the aspect's first occurrence."""
    tokens, aspect_tokens = tokenize(text), tokenize(aspect)
    if not tokens or not aspect_tokens:
        raise ContractError("inline instance needs a non-empty sentence and aspect")
    width = len(aspect_tokens)
    for start in range(len(tokens) - width + 1):
        if tokens[start : start + width] == aspect_tokens:
            return Instance(
                id=instance_id,
                tokens=tuple(tokens),
                aspect_start=start,
                aspect_end=start + width,
                polarity=polarity,
            )
    raise ContractError(f"aspect {aspect!r} does not occur in {text!r}")


def class_weights(labels: Sequence[Polarity | int], num_classes: int = len(Polarity)) -> np.ndarray:
    """Inverse-frequency weights N / (C * count_c); they average to 1."""
    if not labels:
        raise EmptyInputError("class_weights needs at least one label")
    counts = np.bincount([int(label) for label in labels], minlength=num_classes)
    if absent := [Polarity(c).label if c < len(Polarity) else str(c) for c in np.flatnonzero(counts == 0)]:
        raise DatasetError(f"class_weights: classes absent from the labels: {absent}")
    return len(labels) / (num_classes * counts.astype(np.float64))
