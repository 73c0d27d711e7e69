"""Deterministic tokenizers for linearization.

A tokenizer is any callable ``str -> list[str]``. Subword vocabularies
belong to downstream representation extractors; the tokenizers here are
whitespace/punctuation splitters that never depend on external state.
"""

from __future__ import annotations

import re
from typing import Callable

from .errors import ConfigError

Tokenizer = Callable[[str], "list[str]"]

# A token is a run of word characters or a single other non-space character.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def simple_tokenize(text: str) -> list[str]:
    """Split into word runs and single punctuation characters."""
    return _TOKEN_RE.findall(text)


def whitespace_tokenize(text: str) -> list[str]:
    """Split on whitespace only."""
    return text.split()


TOKENIZERS: dict[str, Tokenizer] = {
    "simple": simple_tokenize,
    "whitespace": whitespace_tokenize,
}


def get_tokenizer(name: str) -> Tokenizer:
    try:
        return TOKENIZERS[name]
    except KeyError:
        valid = ", ".join(sorted(TOKENIZERS))
        raise ConfigError(f"unknown tokenizer {name!r}; valid: {valid}") from None
