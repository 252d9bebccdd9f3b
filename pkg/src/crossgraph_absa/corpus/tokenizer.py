"""Deterministic word-level tokenizer.

Whitespace split after NFC normalisation; leading and trailing punctuation
(Unicode ``P*`` categories plus the Bengali danda) is detached one character
per token.
"""

import unicodedata

from crossgraph_absa.utils import normalize_text

EXTRA_PUNCTUATION = frozenset({"।", "॥"})


def is_punctuation(char: str) -> bool:
    return char in EXTRA_PUNCTUATION or unicodedata.category(char).startswith("P")


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    for chunk in (normalize_text(text) or "").split():
        start, end = 0, len(chunk)
        while start < end and is_punctuation(chunk[start]):
            start += 1
        while end > start and is_punctuation(chunk[end - 1]):
            end -= 1
        tokens.extend(chunk[:start])
        if start < end:
            tokens.append(chunk[start:end])
        tokens.extend(chunk[end:])
    return tokens
