"""Tokenisation, vocabulary, input layout and dataset files."""

import re
import unicodedata
from pathlib import Path

import numpy as np
import pytest

from crossgraph_absa.corpus import (
    DatasetSplit,
    Instance,
    Polarity,
    build_vocab,
    class_weights,
    decode,
    encode,
    instance_from_text,
    load_dataset,
    load_tabular,
    tokenize,
    write_tabular,
)
from crossgraph_absa.corpus.vocab import CLS_ID, PAD_ID, SEP_ID, UNK_ID
from crossgraph_absa.errors import ContractError, DatasetError, UnencodableInstanceError

PUBLISHED = Path(__file__).parent / "data" / "published"


def _split(*texts: str, name: str = "train") -> DatasetSplit:
    instances = tuple(
        instance_from_text(f"{name}{i}", text, text.split()[0]) for i, text in enumerate(texts)
    )
    return DatasetSplit(name=name, instances=instances)  # type: ignore[arg-type]


def test_tokenize_detaches_punctuation() -> None:
    """Leading and trailing punctuation become separate tokens."""
    assert tokenize("good food!") == ["good", "food", "!"]
    assert tokenize('"great," she said...') == ['"', "great", ",", '"', "she", "said", ".", ".", "."]


def test_tokenize_empty() -> None:
    """Empty and whitespace-only text yields no tokens."""
    assert tokenize("") == []
    assert tokenize("   \t\n ") == []


def test_tokenize_bengali_danda() -> None:
    """The danda closing a Bengali sentence is its own token."""
    tokens = tokenize("খাবার খুব ভালো।")
    assert tokens == [unicodedata.normalize("NFC", t) for t in ("খাবার", "খুব", "ভালো", "।")]


def test_tokenize_never_emits_empty_tokens() -> None:
    """A chunk made only of punctuation is split, not dropped or emptied."""
    tokens = tokenize("wow !! ok")
    assert "" not in tokens
    assert tokens == ["wow", "!", "!", "ok"]


def test_instance_span_validation() -> None:
    """Spans must lie inside the sentence and be non-empty."""
    with pytest.raises(ValueError, match="does not resolve"):
        Instance(id="x", tokens=("a", "b"), aspect_start=1, aspect_end=3, polarity="positive")
    with pytest.raises(ValueError):
        Instance(id="x", tokens=("a", "b"), aspect_start=1, aspect_end=1, polarity="positive")


def test_polarity_parsing() -> None:
    """Names are case-insensitive; indices are accepted; other values fail."""
    assert Polarity.parse("Negative") is Polarity.NEGATIVE
    assert Polarity.parse(2) is Polarity.NEUTRAL
    with pytest.raises(ValueError):
        Polarity.parse("mixed")


def test_build_vocab_min_freq_threshold() -> None:
    """Tokens below min_freq are left out and map to [UNK]."""
    vocab = build_vocab(_split("a a b"), min_freq=2)
    assert "a" in vocab
    assert "b" not in vocab
    assert vocab.index("b") == UNK_ID


def test_build_vocab_first_seen_order_and_determinism() -> None:
    """Every train token gets an index >= 4 in first-seen order, reproducibly."""
    split = _split("x y", "y z")
    vocab = build_vocab(split)
    assert vocab.tokens[4:] == ("x", "y", "z")
    assert build_vocab(split).tokens == vocab.tokens


def test_build_vocab_rejects_non_train_and_empty_splits() -> None:
    """Only a non-empty train split can seed the vocabulary."""
    with pytest.raises(ContractError):
        build_vocab(_split("a b", name="validation"))
    with pytest.raises(DatasetError):
        build_vocab(DatasetSplit(name="train"))


def test_validation_only_token_encodes_to_unk() -> None:
    """Tokens unseen in training become [UNK]."""
    vocab = build_vocab(_split("good food"))
    encoded = encode(instance_from_text("v", "tasty food", "food"), vocab, 10)
    assert encoded.ids[1] == UNK_ID


def test_encode_layout() -> None:
    """n=3, m=1 gives T=7 with [CLS] at 0 and [SEP] at 4 and 6."""
    vocab = build_vocab(_split("the food arrived"))
    encoded = encode(instance_from_text("e", "the food arrived", "food"), vocab, 10)
    assert encoded.length == 7
    assert encoded.ids[0] == CLS_ID
    assert encoded.ids[4] == SEP_ID
    assert encoded.ids[6] == SEP_ID
    assert encoded.ids[7:] == (PAD_ID,) * 3
    assert encoded.pad_mask == (True,) * 7 + (False,) * 3
    assert encoded.aspect_positions == (2,)
    assert encoded.layout[5] == "food"


def test_encode_decode_reproduces_layout() -> None:
    """Ids mapped back through the vocabulary give the layout, specials included."""
    vocab = build_vocab(_split("the food was good"))
    encoded = encode(instance_from_text("d", "the food was good", "food"), vocab, 12)
    assert decode(encoded, vocab) == list(encoded.layout)
    real_ids = [i for i, real in zip(encoded.ids, encoded.pad_mask, strict=True) if real]
    assert real_ids.count(SEP_ID) == 2
    assert real_ids[0] == CLS_ID


def test_encode_truncates_sentence_and_keeps_aspect() -> None:
    """A 200-token sentence with a 4-token aspect keeps 121 sentence tokens."""
    tokens = tuple(f"w{i}" for i in range(200))
    instance = Instance(id="long", tokens=tokens, aspect_start=10, aspect_end=14, polarity="neutral")
    vocab = build_vocab(DatasetSplit(name="train", instances=(instance,)))
    encoded = encode(instance, vocab, 128)
    assert encoded.length == 128
    assert len(encoded.sentence_tokens) == 121
    assert encoded.was_truncated
    assert [encoded.layout[p] for p in encoded.aspect_positions] == list(instance.aspect_tokens)
    tail = encoded.layout[slice(*encoded.tail_region)]
    assert tail == instance.aspect_tokens


def test_encode_slides_window_to_keep_late_aspect() -> None:
    """An aspect beyond the kept prefix shifts the window so the aspect survives."""
    tokens = tuple(f"w{i}" for i in range(20))
    instance = Instance(id="late", tokens=tokens, aspect_start=18, aspect_end=19, polarity="positive")
    vocab = build_vocab(DatasetSplit(name="train", instances=(instance,)))
    encoded = encode(instance, vocab, 10)
    assert encoded.length == 10
    assert [encoded.layout[p] for p in encoded.aspect_positions] == ["w18"]
    assert encoded.source_offset > 0


def test_encode_rejects_overlong_aspect() -> None:
    """An aspect that cannot fit twice plus three specials is unencodable."""
    instance = Instance(
        id="wide", tokens=tuple("abcdef"), aspect_start=0, aspect_end=4, polarity="negative"
    )
    vocab = build_vocab(DatasetSplit(name="train", instances=(instance,)))
    with pytest.raises(UnencodableInstanceError):
        encode(instance, vocab, 10)


def test_instance_from_text_locates_aspect() -> None:
    """The aspect is found as a token sub-sequence; missing aspects fail."""
    instance = instance_from_text("i", "The battery life is short.", "battery life", "negative")
    assert instance.aspect_tokens == ("battery", "life")
    assert instance.polarity is Polarity.NEGATIVE
    with pytest.raises(ContractError):
        instance_from_text("j", "The screen is bright", "battery")


def test_class_weights_examples() -> None:
    """Balanced labels weigh 1; counts (2, 1, 1) give (2/3, 4/3, 4/3)."""
    assert np.allclose(class_weights([0, 1, 2, 0, 1, 2]), [1.0, 1.0, 1.0])
    assert np.allclose(class_weights([0, 0, 1, 2]), [2 / 3, 4 / 3, 4 / 3])


def test_class_weights_missing_class() -> None:
    """Absent classes are listed in the error."""
    with pytest.raises(DatasetError, match="negative"):
        class_weights([0, 0, 2])


def test_load_tabular_reports_bad_rows(tmp_path: Path) -> None:
    """Malformed rows become line-numbered diagnostics; good rows load."""
    path = tmp_path / "train.tsv"
    path.write_text(
        "id\ttokens\taspect_start\taspect_end\tpolarity\n"
        "# comment\n"
        "r1\tthe food was good\t1\t2\tpositive\n"
        "r2\tslow service\t0\t9\tnegative\n"
        "r3\tokay price\t1\t2\tneutral\n",
        encoding="utf-8",
    )
    result = load_tabular(path)
    assert result.split.name == "train"
    assert [i.id for i in result.split.instances] == ["r1", "r3"]
    assert [d.line for d in result.diagnostics] == [4]
    assert result.label_counts == {"positive": 1, "negative": 0, "neutral": 1}


def test_load_tabular_duplicate_id(tmp_path: Path) -> None:
    """A repeated id is a dataset error naming both lines."""
    path = tmp_path / "test.tsv"
    path.write_text(
        "id\ttokens\taspect_start\taspect_end\tpolarity\n"
        "a\tx y\t0\t1\tpositive\n"
        "a\tx z\t0\t1\tnegative\n",
        encoding="utf-8",
    )
    with pytest.raises(DatasetError, match="duplicate id 'a'"):
        load_tabular(path)


def test_load_tabular_requires_header(tmp_path: Path) -> None:
    """Files without the header line are rejected."""
    path = tmp_path / "train.tsv"
    path.write_text("a\tx y\t0\t1\tpositive\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="header"):
        load_tabular(path)


def test_write_then_load_dataset(tmp_path: Path, splits) -> None:  # type: ignore[no-untyped-def]
    """A written dataset directory loads back with the same splits."""
    root = tmp_path / "cars"
    write_tabular(root / "train.tsv", splits.train.instances)
    write_tabular(root / "dev.tsv", splits.validation.instances)
    loaded = load_dataset(root)
    assert loaded.name == "cars"
    assert loaded.train.instances == splits.train.instances
    assert loaded.validation is not None
    assert loaded.validation.instances == splits.validation.instances
    assert loaded.test is None


def test_load_dataset_without_train_file(tmp_path: Path) -> None:
    """A directory lacking train.tsv is an I/O error naming the directory."""
    with pytest.raises(FileNotFoundError, match=re.escape(str(tmp_path))):
        load_dataset(tmp_path)


@pytest.mark.parametrize(
    ("dataset", "counts"),
    [
        ("car", (1700, 213, 213)),
        ("mobile", (1486, 186, 186)),
        ("movie", (1184, 148, 148)),
        ("restaurant", (1207, 151, 151)),
    ],
)
def test_published_split_sizes(dataset: str, counts: tuple[int, int, int]) -> None:
    """Converted Bengali datasets keep their published split sizes."""
    directory = PUBLISHED / dataset
    if not (directory / "train.tsv").is_file():
        pytest.skip(f"published data not found under {directory}")
    splits = load_dataset(directory)
    assert splits.validation is not None and splits.test is not None
    assert (len(splits.train), len(splits.validation), len(splits.test)) == counts


@pytest.mark.parametrize(
    ("dataset", "split", "counts"),
    [
        ("semeval-laptop", "train", (976, 455, 851)),
        ("semeval-laptop", "test", (337, 167, 128)),
        ("semeval-restaurant", "train", (2164, 637, 807)),
        ("semeval-restaurant", "test", (727, 196, 196)),
    ],
)
def test_published_label_counts(dataset: str, split: str, counts: tuple[int, int, int]) -> None:
    """Converted SemEval files keep their positive / neutral / negative counts."""
    path = PUBLISHED / dataset / f"{split}.tsv"
    if not path.is_file():
        pytest.skip(f"published data not found at {path}")
    label_counts = load_tabular(path).label_counts
    assert (label_counts["positive"], label_counts["neutral"], label_counts["negative"]) == counts
