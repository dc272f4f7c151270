"""Corpus data model: tokenization, CoNLL-style I/O and fold assignment.

Sequences are either forum sentences or complete tweets; both are stored as
lowercased tokens with character offsets into their source text plus optional
per-token BIO labels.
"""
from __future__ import annotations

import logging
import random
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, CorpusError, ParseError

log = logging.getLogger(__name__)


class Source(Enum):
    """Origin of a sequence; fixes its maximum token length."""

    FORUM = "forum-sentence"
    TWEET = "tweet"

    @property
    def max_length(self) -> int:
        return 512 if self is Source.FORUM else 130


class Concept(Enum):
    SYM = "SYM"
    SEVERITY = "SEVERITY"
    BPOC = "BPOC"
    INTENSIFIER = "INTENSIFIER"
    DURATION = "DURATION"
    NEGATION = "NEGATION"


@dataclass(frozen=True)
class LabelTag:
    """A BIO tag: O carries no concept, B and I always do."""

    position: str  # one of "B", "I", "O"
    concept: Concept | None = None

    def __post_init__(self):
        if self.position not in ("B", "I", "O"):
            raise CorpusError(f"illegal tag position {self.position!r}")
        if self.position == "O" and self.concept is not None:
            raise CorpusError("O tag must not carry a concept")
        if self.position != "O" and self.concept is None:
            raise CorpusError(f"{self.position} tag requires a concept")

    def __str__(self) -> str:
        if self.position == "O":
            return "O"
        return f"{self.position}-{self.concept.value}"

    @classmethod
    def parse(cls, text: str) -> "LabelTag":
        if text == "O":
            return cls("O")
        if len(text) > 2 and text[1] == "-" and text[0] in ("B", "I"):
            try:
                return cls(text[0], Concept(text[2:]))
            except ValueError:
                raise CorpusError(f"unknown concept in tag {text!r}") from None
        raise CorpusError(f"malformed tag {text!r}")


OUTSIDE = LabelTag("O")


@dataclass(frozen=True)
class Token:
    """Lowercased surface plus [start, end) character offsets into the source."""

    surface: str
    start: int
    end: int

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise CorpusError(f"token surface {self.surface!r} empty or has whitespace")
        if self.start < 0 or self.end <= self.start:
            raise CorpusError(f"bad offsets [{self.start}, {self.end})")


@dataclass(frozen=True)
class LabeledSequence:
    """A tokenized sentence or tweet, optionally with per-token BIO labels."""

    id: str
    tokens: tuple[Token, ...]
    labels: tuple[LabelTag, ...] | None = None
    source: Source = Source.FORUM

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError(f"sequence {self.id!r} has no tokens")
        if len(self.tokens) > self.source.max_length:
            raise CorpusError(
                f"sequence {self.id!r} has {len(self.tokens)} tokens, "
                f"max for {self.source.value} is {self.source.max_length}"
            )
        if self.labels is not None and len(self.labels) != len(self.tokens):
            raise CorpusError(
                f"sequence {self.id!r}: {len(self.labels)} labels "
                f"for {len(self.tokens)} tokens"
            )

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def with_labels(self, labels: Sequence[LabelTag]) -> "LabeledSequence":
        return LabeledSequence(self.id, self.tokens, tuple(labels), self.source)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def tokenize(text: str, source: Source) -> list[Token]:
    """Split `text` into lowercased tokens.

    Whitespace separates tokens; within a whitespace-free chunk every maximal
    run of punctuation/symbol characters becomes its own token, so digits and
    letters stay attached to their neighbours ("covid-19" -> covid, -, 19).
    Offsets index the original text. Output is truncated at the source's
    maximum length with a warning.
    """
    tokens: list[Token] = []
    start = None
    punct = False

    def flush(end: int):
        nonlocal start
        if start is not None:
            tokens.append(Token(text[start:end].lower(), start, end))
            start = None

    for i, ch in enumerate(text):
        if ch.isspace():
            flush(i)
            continue
        p = _is_punct(ch)
        if start is not None and p != punct:
            flush(i)
        if start is None:
            start, punct = i, p
    flush(len(text))

    limit = source.max_length
    if len(tokens) > limit:
        log.warning(
            "truncating %d-token %s input to %d tokens", len(tokens), source.value, limit
        )
        tokens = tokens[:limit]
    return tokens


def validate_bio(labels: Sequence[LabelTag], seq_id: str = "?") -> None:
    """Raise CorpusError unless every I tag continues a same-concept span."""
    prev: LabelTag | None = None
    for pos, tag in enumerate(labels):
        if tag.position == "I":
            if prev is None or prev.position == "O" or prev.concept != tag.concept:
                raise CorpusError(
                    f"sequence {seq_id!r}: {tag} at position {pos} does not continue a span"
                )
        prev = tag


def normalize_bio(labels: Sequence[LabelTag]) -> tuple[LabelTag, ...]:
    """Repair illegal I tags (after O or a different concept) into B tags."""
    out: list[LabelTag] = []
    prev: LabelTag | None = None
    for tag in labels:
        if tag.position == "I" and (
            prev is None or prev.position == "O" or prev.concept != tag.concept
        ):
            tag = LabelTag("B", tag.concept)
        out.append(tag)
        prev = tag
    return tuple(out)


def _synth_tokens(surfaces: Sequence[str]) -> tuple[Token, ...]:
    """Build tokens with canonical offsets as if surfaces were joined by spaces."""
    tokens = []
    pos = 0
    for s in surfaces:
        tokens.append(Token(s, pos, pos + len(s)))
        pos += len(s) + 1
    return tuple(tokens)


def read_conll(path: str | Path, source: Source = Source.FORUM) -> list[LabeledSequence]:
    """Read a CoNLL-style TSV corpus: one "surface<TAB>tag" per line.

    Blank lines separate sequences; a "#id <string>" comment line before a
    sequence sets its id, otherwise ids default to "seq-<index>". The tag
    column is optional but must be used consistently within one file.
    """
    path = Path(path)
    sequences: list[LabeledSequence] = []
    surfaces: list[str] = []
    tags: list[str] = []
    pending_id: str | None = None
    has_tags: bool | None = None

    def flush():
        nonlocal surfaces, tags, pending_id
        if not surfaces:
            pending_id = None
            return
        seq_id = pending_id if pending_id is not None else f"seq-{len(sequences)}"
        labels = None
        if has_tags:
            labels = tuple(LabelTag.parse(t) for t in tags)
            validate_bio(labels, seq_id)
        sequences.append(
            LabeledSequence(seq_id, _synth_tokens(surfaces), labels, source)
        )
        surfaces, tags, pending_id = [], [], None

    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read corpus: {exc}", path=path) from exc

    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.startswith("#id "):
            pending_id = line[4:].strip()
            continue
        if not line.strip():
            flush()
            continue
        cols = line.split("\t")
        if len(cols) not in (1, 2):
            raise ParseError(f"expected 1 or 2 tab-separated columns, got {len(cols)}",
                             path=path, line=lineno)
        if has_tags is None:
            has_tags = len(cols) == 2
        elif has_tags != (len(cols) == 2):
            raise ParseError("mixed labeled and unlabeled lines in one file",
                             path=path, line=lineno)
        if not cols[0]:
            raise ParseError("empty token surface", path=path, line=lineno)
        surfaces.append(cols[0])
        if has_tags:
            tags.append(cols[1])
    flush()
    return sequences


def write_conll(sequences: Iterable[LabeledSequence], path: str | Path) -> None:
    """Write a corpus in the format read_conll accepts (round-trip identity)."""
    path = Path(path)
    lines: list[str] = []
    for seq in sequences:
        lines.append(f"#id {seq.id}")
        if seq.labels is not None:
            lines.extend(f"{t.surface}\t{tag}" for t, tag in zip(seq.tokens, seq.labels))
        else:
            lines.extend(t.surface for t in seq.tokens)
        lines.append("")
    try:
        path.write_text("\n".join(lines), encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot write corpus: {exc}", path=path) from exc


@dataclass(frozen=True)
class FoldAssignment:
    """Deterministic sequence-id -> fold-index map with balanced folds."""

    num_folds: int
    seed: int
    assignment: dict[str, int] = field(hash=False)

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(i for i, f in self.assignment.items() if f == fold)


def assign_folds(
    sequences: Sequence[LabeledSequence], num_folds: int, seed: int
) -> FoldAssignment:
    """Assign sequences to folds: sorted ids, seeded shuffle, round-robin deal."""
    if num_folds < 2 or num_folds > len(sequences):
        raise ConfigError(
            f"need 2 <= num_folds <= {len(sequences)} sequences, got {num_folds}"
        )
    ids = sorted(s.id for s in sequences)
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate sequence ids in corpus")
    rng = random.Random(seed)
    rng.shuffle(ids)
    assignment = {seq_id: i % num_folds for i, seq_id in enumerate(ids)}
    return FoldAssignment(num_folds, seed, assignment)
