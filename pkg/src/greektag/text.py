"""Tokenization, word-form normalization, and the annotated corpus format.

Normalization canonically composes (NFC), lowercases, and optionally
removes a configurable set of combining marks.  By default no marks are
removed: the lexicon keeps accent variants as distinct entries, so
normalization must not merge them.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

from .errors import FormatError, TagError
from .tags import Tag, TagSchema, format_tag

#: Sentence-final punctuation: period, semicolon (ano teleia stand-in),
#: Greek question mark (U+037E), interrogation mark.
DEFAULT_BOUNDARY = frozenset({".", ";", ";", "?"})

#: Combining marks removed when accent stripping is requested:
#: acute (tonos/oxia), grave (varia), circumflex (perispomeni).
GREEK_ACCENTS = frozenset({"́", "̀", "͂"})

#: Reserved category for punctuation tokens.
PUNCT_CATEGORY = "punct"


@dataclass(frozen=True)
class Token:
    surface: str
    norm: str
    index: int


@dataclass(frozen=True)
class Sequence:
    tokens: tuple[Token, ...]
    gold_tags: tuple[Tag, ...] | None = None

    def __post_init__(self):
        if self.gold_tags is not None and len(self.gold_tags) != len(self.tokens):
            raise ValueError(
                f"{len(self.gold_tags)} gold tags for {len(self.tokens)} tokens"
            )

    def __len__(self) -> int:
        return len(self.tokens)


def normalize(surface: str, strip_marks: frozenset[str] = frozenset()) -> str:
    """NFC + lowercase + optional combining-mark removal. Idempotent."""
    s = unicodedata.normalize("NFC", surface).lower()
    if strip_marks:
        decomposed = unicodedata.normalize("NFD", s)
        s = "".join(c for c in decomposed if c not in strip_marks)
    return unicodedata.normalize("NFC", s)


def is_punct(s: str) -> bool:
    """True for a non-empty string made only of punctuation characters."""
    return bool(s) and all(unicodedata.category(c).startswith("P") for c in s)


def _split_punct(chunk: str) -> list[str]:
    """Split leading/trailing punctuation characters into their own pieces."""
    lead = []
    while chunk and unicodedata.category(chunk[0]).startswith("P"):
        lead.append(chunk[0])
        chunk = chunk[1:]
    trail = []
    while chunk and unicodedata.category(chunk[-1]).startswith("P"):
        trail.append(chunk[-1])
        chunk = chunk[:-1]
    trail.reverse()
    return lead + ([chunk] if chunk else []) + trail


def tokenize(text: str, boundary: frozenset[str] = DEFAULT_BOUNDARY,
             strip_marks: frozenset[str] = frozenset()) -> list[Sequence]:
    """Split text into sequences of tokens.

    Whitespace separates tokens; leading/trailing punctuation becomes
    separate single-character tokens; a token from the ``boundary`` set
    closes the current sequence.  Every non-whitespace character of the
    input lands in exactly one token.
    """
    sequences: list[Sequence] = []
    current: list[Token] = []

    def close():
        if current:
            sequences.append(Sequence(tuple(current)))
            current.clear()

    for chunk in text.split():
        for piece in _split_punct(chunk):
            current.append(Token(piece, normalize(piece, strip_marks), len(current)))
            if piece in boundary:
                close()
    close()
    return sequences


# -- annotated corpus format ----------------------------------------------
#
# UTF-8 text, one `surface<TAB>tag` per line, blank line ends a sequence,
# `#` starts a comment line.


def read_annotated_corpus(stream, schema: TagSchema, path=None,
                          strip_marks: frozenset[str] = frozenset()) -> list[Sequence]:
    sequences: list[Sequence] = []
    tokens: list[Token] = []
    tags: list[Tag] = []

    def close():
        if tokens:
            sequences.append(Sequence(tuple(tokens), tuple(tags)))
            tokens.clear()
            tags.clear()

    for no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if line.startswith("#"):
            continue
        if not line.strip():
            close()
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise FormatError(
                f"expected 2 tab-separated fields, got {len(fields)}", path, no
            )
        surface, tagstring = fields
        try:
            tag = schema.parse(tagstring)
        except TagError as exc:
            raise FormatError(f"bad tag {tagstring!r}: {exc}", path, no) from None
        tokens.append(Token(surface, normalize(surface, strip_marks), len(tokens)))
        tags.append(tag)
    close()
    return sequences


def write_annotated_corpus(stream, sequences) -> None:
    for seq in sequences:
        tags = seq.gold_tags
        if tags is None:
            raise ValueError("cannot write a sequence without tags")
        for token, tag in zip(seq.tokens, tags):
            stream.write(f"{token.surface}\t{format_tag(tag)}\n")
        stream.write("\n")


def load_annotated_corpus(path, schema: TagSchema,
                          strip_marks: frozenset[str] = frozenset()) -> list[Sequence]:
    with open(path, encoding="utf-8") as fh:
        return read_annotated_corpus(fh, schema, path=str(path), strip_marks=strip_marks)


def save_annotated_corpus(path, sequences) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_annotated_corpus(fh, sequences)
