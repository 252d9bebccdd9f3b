"""Rule-based syntactic graph.

No dependency parser is assumed. Tokens are mapped to coarse classes by a
word-list / suffix lexicon and linked when they sit within ``window_radius`` of
each other or when an ordered class pattern fires within its gap. A
precomputed edge list can replace the rules for any instance.
"""

import re
import unicodedata
from collections.abc import Sequence
from enum import StrEnum
from pathlib import Path
from typing import Annotated, Self

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from crossgraph_absa.corpus.encoding import EncodedInstance
from crossgraph_absa.errors import ContractError, DatasetError
from crossgraph_absa.graphbuild.adjacency import AdjacencyMatrix, GraphKind, self_loops


class CoarseClass(StrEnum):
    NOUN = "NOUN"
    VERB = "VERB"
    MODIFIER = "MODIFIER"
    PARTICLE = "PARTICLE"
    OTHER = "OTHER"


_WORDS: dict[CoarseClass, tuple[str, ...]] = {
    CoarseClass.PARTICLE: (
        "not", "no", "never", "very", "too", "so", "quite", "really", "just",
        "the", "a", "an", "and", "but", "or", "of", "to", "in", "on", "at", "for",
        "with", "না", "নি", "নয়", "খুব", "অনেক", "ও", "আর", "এবং", "কিন্তু",
        "তো", "ই", "যে", "বেশ", "একদম",
    ),
    CoarseClass.VERB: (
        "is", "are", "was", "were", "be", "been", "am", "has", "have", "had",
        "do", "does", "did", "feel", "felt", "like", "liked", "love", "loved",
        "hate", "seems", "looks", "tastes", "works", "হয়", "হয়েছে", "ছিল",
        "আছে", "করে", "করেছে", "লাগে", "লাগলো", "লেগেছে", "দেয়", "চলে",
    ),
    CoarseClass.MODIFIER: (
        "good", "great", "bad", "poor", "excellent", "terrible", "nice",
        "awesome", "awful", "slow", "fast", "cheap", "expensive", "rude",
        "friendly", "delicious", "tasty", "bland", "best", "worst", "amazing",
        "horrible", "fine", "okay", "ok", "ভালো", "ভাল", "খারাপ", "সুন্দর",
        "চমৎকার", "দারুণ", "বাজে", "দামি", "সস্তা", "অসাধারণ", "মজার", "সেরা",
    ),
}  # fmt: skip

_SUFFIXES: dict[CoarseClass, tuple[str, ...]] = {
    CoarseClass.VERB: ("ing", "ed", "েছে", "েছিল", "েছি", "লাম", "বে"),
    CoarseClass.MODIFIER: ("ful", "less", "ous", "ive", "able", "ible", "ly", "est"),
    CoarseClass.NOUN: ("tion", "ment", "ness", "ity", "টা", "টি", "গুলো", "দের"),
}

# Word lists are consulted before suffixes; suffix classes in this order.
_SUFFIX_ORDER = (CoarseClass.VERB, CoarseClass.MODIFIER, CoarseClass.NOUN)


class CoarseLexicon(BaseModel):
    model_config = ConfigDict(frozen=True)

    words: dict[CoarseClass, tuple[str, ...]] = _WORDS
    suffixes: dict[CoarseClass, tuple[str, ...]] = _SUFFIXES
    min_stem: Annotated[
        PositiveInt, Field(default=2, description="Characters that must precede a suffix")
    ]

    def classify(self, token: str) -> CoarseClass:
        lowered = token.casefold()
        for coarse, words in self.words.items():
            if lowered in words:
                return coarse
        if not any(unicodedata.category(char).startswith("L") for char in token):
            return CoarseClass.OTHER
        for coarse in _SUFFIX_ORDER:
            for suffix in self.suffixes.get(coarse, ()):
                if len(lowered) >= len(suffix) + self.min_stem and lowered.endswith(suffix):
                    return coarse
        return CoarseClass.NOUN


class LinkRule(BaseModel):
    """Link a ``left``-class token to a later ``right``-class token at most ``max_gap`` away."""

    model_config = ConfigDict(frozen=True)

    left: CoarseClass
    right: CoarseClass
    max_gap: Annotated[PositiveInt, Field(default=3)]
    bidirectional: bool = True

    def fires(self, first: CoarseClass, second: CoarseClass, gap: int) -> bool:
        if gap > self.max_gap:
            return False
        if (first, second) == (self.left, self.right):
            return True
        return self.bidirectional and (first, second) == (self.right, self.left)


DEFAULT_LINK_RULES = (
    LinkRule(left=CoarseClass.MODIFIER, right=CoarseClass.NOUN, max_gap=3),
    LinkRule(left=CoarseClass.NOUN, right=CoarseClass.VERB, max_gap=4),
    LinkRule(left=CoarseClass.VERB, right=CoarseClass.MODIFIER, max_gap=3),
    LinkRule(left=CoarseClass.PARTICLE, right=CoarseClass.MODIFIER, max_gap=2),
    LinkRule(left=CoarseClass.PARTICLE, right=CoarseClass.VERB, max_gap=2),
)


class SyntaxRuleSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    window_radius: Annotated[int, Field(default=2, ge=1)]
    link_rules: tuple[LinkRule, ...] = DEFAULT_LINK_RULES
    lexicon: CoarseLexicon = CoarseLexicon()
    weighted_edges: Annotated[
        bool, Field(default=False, description="Reserved for typed/fractional edges")
    ]

    @model_validator(mode="after")
    def validate_binary(self) -> Self:
        if self.weighted_edges:
            raise ValueError("weighted syntactic edges are not supported; graphs are binary")
        return self

    def classes(self, tokens: Sequence[str]) -> list[CoarseClass]:
        return [self.lexicon.classify(token) for token in tokens]


def _check_alignment(tokens: Sequence[str], encoded: EncodedInstance) -> None:
    if tuple(tokens) != encoded.sentence_tokens:
        raise ContractError(
            f"instance {encoded.instance_id}: {len(tokens)} tokens do not align with "
            f"the {len(encoded.sentence_tokens)}-token sentence region"
        )


def build_syntactic(
    tokens: Sequence[str], encoded: EncodedInstance, rules: SyntaxRuleSet
) -> AdjacencyMatrix:
    """Binary symmetric graph over the full padded sequence.

    Sentence positions link by window or by a firing link rule; [CLS], [SEP],
    the aspect tail and padding get self-loops only (padding not even that).
    """
    _check_alignment(tokens, encoded)
    weights = self_loops(encoded.pad_mask)
    offset, _ = encoded.sentence_region
    classes = rules.classes(tokens)
    for i in range(len(tokens)):
        for j in range(i + 1, len(tokens)):
            gap = j - i
            linked = gap <= rules.window_radius or any(
                rule.fires(classes[i], classes[j], gap) for rule in rules.link_rules
            )
            if linked:
                weights[offset + i, offset + j] = weights[offset + j, offset + i] = 1.0
    return AdjacencyMatrix(kind=GraphKind.SYNTACTIC, weights=weights)


class EdgeList(BaseModel):
    """Precomputed sentence-token edges (0-based) for an ``n``-token sentence."""

    model_config = ConfigDict(frozen=True)

    n: PositiveInt
    edges: tuple[tuple[int, int], ...]


_HEADER = re.compile(r"^#edges\s+T=(\d+)\s*$")


def load_edge_list(path: Path) -> EdgeList:
    """Parse ``#edges T=<n>`` followed by one ``i j`` pair per line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not (header := _HEADER.match(lines[0].strip())):
        raise DatasetError(f"{path}: line 1: expected header '#edges T=<n>'")
    n = int(header.group(1))
    edges: list[tuple[int, int]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or not all(part.isdigit() for part in parts):
            raise DatasetError(f"{path}: line {line_no}: expected 'i j', got {line!r}")
        i, j = int(parts[0]), int(parts[1])
        if i >= n or j >= n:
            raise DatasetError(f"{path}: line {line_no}: edge ({i}, {j}) outside T={n}")
        edges.append((i, j))
    return EdgeList(n=n, edges=tuple(edges))


def syntactic_from_edges(edge_list: EdgeList, encoded: EncodedInstance) -> AdjacencyMatrix:
    """Place a precomputed edge list onto the encoded layout, dropping truncated tokens."""
    if edge_list.n != encoded.source_length:
        raise ContractError(
            f"instance {encoded.instance_id}: edge list is for T={edge_list.n}, "
            f"sentence has {encoded.source_length} tokens"
        )
    weights = self_loops(encoded.pad_mask)
    start, end = encoded.sentence_region
    dropped = 0
    for i, j in edge_list.edges:
        row, col = start + i - encoded.source_offset, start + j - encoded.source_offset
        if not (start <= row < end and start <= col < end):
            dropped += 1
            continue
        weights[row, col] = weights[col, row] = 1.0
    if dropped:
        logger.debug(f"instance {encoded.instance_id}: {dropped} edges fall outside the kept window")
    return AdjacencyMatrix(kind=GraphKind.SYNTACTIC, weights=np.asarray(weights))
