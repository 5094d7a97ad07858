"""Text cleaning and lemmatised token streams for feature extraction."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]
    source_id: str = ""

    def __post_init__(self) -> None:
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(f"invalid token in stream: {tok!r}")


def clean(text: str) -> str:
    """Lowercase text with URLs, control characters, punctuation and
    redundant spaces removed. Idempotent and total.

    URL = maximal non-space run starting with http://, https:// or www.
    Punctuation/control = Unicode categories P* and C*; ordinal signs
    (category Lo) survive as letters.
    """
    text = _URL.sub(" ", text)
    chars = [
        " " if unicodedata.category(ch)[0] in "CP" else ch for ch in text
    ]
    return " ".join("".join(chars).lower().split())


def tokenize(text: str) -> list[str]:
    return text.split()


def remove_stopwords(tokens: list[str], stoplist) -> list[str]:
    return [t for t in tokens if t not in stoplist]


def lemmatize(tokens: list[str], lemma_lexicon: dict[str, str], source_id: str = "") -> TokenStream:
    """Replace each token by its lexicon lemma; unknown forms pass through."""
    return TokenStream(tuple(lemma_lexicon.get(t, t) for t in tokens), source_id)


def to_token_stream(
    doc_id: str,
    raw_text: str,
    stopwords,
    lemma_lexicon: dict[str, str],
) -> TokenStream:
    """Full pipeline: clean, tokenize, drop stop-words, lemmatise.

    The stop-word filter is re-applied after lemmatisation so a lemma that
    lands on a stop-word never reaches the vectorizer.
    """
    toks = remove_stopwords(tokenize(clean(raw_text)), stopwords)
    lemmas = lemmatize(toks, lemma_lexicon, doc_id)
    return TokenStream(tuple(remove_stopwords(list(lemmas.tokens), stopwords)), doc_id)
