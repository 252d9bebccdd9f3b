"""Model input layout: ``[CLS] w1..wn [SEP] a1..am [SEP]`` padded to max_length."""

from typing import Annotated

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from crossgraph_absa.corpus.instances import Instance, Polarity
from crossgraph_absa.corpus.vocab import CLS, CLS_ID, PAD_ID, SEP, SEP_ID, Vocab
from crossgraph_absa.errors import UnencodableInstanceError

Region = Annotated[tuple[int, int], "Half-open [start, end) range of sequence positions"]


class EncodedInstance(BaseModel):
    """An instance laid out as model input.

    Positions are sequence coordinates: index 0 is [CLS], the sentence region
    starts at 1. ``source_offset`` is the index in the original instance of the
    first kept sentence token (non-zero only when truncation had to drop tokens
    on the left to keep the aspect).
    """

    model_config = ConfigDict(frozen=True)

    instance_id: str
    ids: tuple[int, ...]
    pad_mask: tuple[bool, ...]
    layout: tuple[str, ...]
    sentence_region: Region
    aspect_positions: Annotated[tuple[int, ...], Field(min_length=1)]
    tail_region: Region
    source_offset: int = 0
    source_length: int
    label: Polarity

    @property
    def max_length(self) -> int:
        return len(self.ids)

    @property
    def length(self) -> int:
        """T, the number of real (unpadded) positions."""
        return len(self.layout)

    @property
    def sentence_positions(self) -> range:
        return range(*self.sentence_region)

    @property
    def sentence_tokens(self) -> tuple[str, ...]:
        start, end = self.sentence_region
        return self.layout[start:end]

    @property
    def was_truncated(self) -> bool:
        start, end = self.sentence_region
        return end - start < self.source_length


def encode(instance: Instance, vocab: Vocab, max_length: int) -> EncodedInstance:
    """Lay out, truncate and pad one instance.

    Sentence tokens are dropped from the right when the layout exceeds
    ``max_length``; the aspect is never cut (the kept window slides left only
    when the aspect would otherwise fall off its right edge).
    """
    aspect = instance.aspect_tokens
    m, n = len(aspect), len(instance.tokens)
    if 2 * m + 3 > max_length:
        raise UnencodableInstanceError(
            f"instance {instance.id!r}: aspect of {m} tokens cannot be laid out "
            f"in max_length={max_length}"
        )

    kept = min(n, max_length - m - 3)
    offset = 0 if instance.aspect_end <= kept else instance.aspect_end - kept
    sentence = instance.tokens[offset : offset + kept]
    if kept < n:
        logger.debug(
            f"instance {instance.id}: sentence truncated from {n} to {kept} tokens"
        )

    layout = (CLS, *sentence, SEP, *aspect, SEP)
    ids = [CLS_ID, *vocab.lookup(sentence), SEP_ID, *vocab.lookup(aspect), SEP_ID]
    padding = max_length - len(ids)
    aspect_from = 1 + instance.aspect_start - offset
    return EncodedInstance(
        instance_id=instance.id,
        ids=(*ids, *[PAD_ID] * padding),
        pad_mask=(*[True] * len(ids), *[False] * padding),
        layout=layout,
        sentence_region=(1, 1 + kept),
        aspect_positions=tuple(range(aspect_from, aspect_from + m)),
        tail_region=(kept + 2, kept + 2 + m),
        source_offset=offset,
        source_length=n,
        label=instance.polarity,
    )


def decode(encoded: EncodedInstance, vocab: Vocab) -> list[str]:
    """Map the unpadded ids back through the vocabulary."""
    return [vocab.token(i) for i, real in zip(encoded.ids, encoded.pad_mask, strict=True) if real]
