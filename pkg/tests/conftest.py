"""Shared fixtures."""

from pathlib import Path

import pytest
from loguru import logger

from crossgraph_absa.corpus import CorpusSplits, EncodedInstance, Vocab, build_vocab, encode
from crossgraph_absa.corpus.loader import instance_from_text
from crossgraph_absa.settings import ExperimentSettings
from tests.factories import separable_splits, tiny_settings, write_dataset


@pytest.fixture(autouse=True)
def quiet_logs() -> None:
    """Keep test output readable; warnings and errors still show."""
    logger.remove()
    logger.add(lambda message: print(message, end=""), level="WARNING")


@pytest.fixture
def settings() -> ExperimentSettings:
    return tiny_settings()


@pytest.fixture
def splits() -> CorpusSplits:
    return separable_splits()


@pytest.fixture
def vocab(splits: CorpusSplits) -> Vocab:
    return build_vocab(splits.train)


@pytest.fixture
def dataset_dir(tmp_path: Path, splits: CorpusSplits) -> Path:
    return write_dataset(tmp_path / "data", splits)


@pytest.fixture
def encoded_pair(vocab: Vocab) -> EncodedInstance:
    """``[CLS] the food was good [SEP] food [SEP]`` padded to 9 positions."""
    instance = instance_from_text("pair", "the food was good", "food", "positive")
    return encode(instance, vocab, 9)
