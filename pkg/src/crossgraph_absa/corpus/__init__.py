"""Dataset ingestion, tokenisation, vocabulary and input layout."""

from crossgraph_absa.corpus.encoding import EncodedInstance, decode, encode
from crossgraph_absa.corpus.instances import (
    CorpusSplits,
    DatasetSplit,
    Instance,
    Polarity,
    SplitName,
)
from crossgraph_absa.corpus.loader import (
    LoadResult,
    RowDiagnostic,
    class_weights,
    instance_from_text,
    load_dataset,
    load_tabular,
    write_tabular,
)
from crossgraph_absa.corpus.tokenizer import tokenize
from crossgraph_absa.corpus.vocab import RESERVED_TOKENS, Vocab, build_vocab

__all__ = [
    "RESERVED_TOKENS",
    "CorpusSplits",
    "DatasetSplit",
    "EncodedInstance",
    "Instance",
    "LoadResult",
    "Polarity",
    "RowDiagnostic",
    "SplitName",
    "Vocab",
    "build_vocab",
    "class_weights",
    "decode",
    "encode",
    "instance_from_text",
    "load_dataset",
    "load_tabular",
    "tokenize",
    "write_tabular",
]
