"""Dictionary storage, full-match scanning and per-token feature bits.

A dictionary is a named set of multi-token terms tied to a concept class or a
semantic-lexicon flag. Scanning is leftmost-longest over whole tokens only;
the per-token feature vector has seven bits: symptom, severity, duration,
intensifier, negation, body parts, and a semantic-lexicon flag.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .corpus import Concept, Source, Token, tokenize
from .errors import ConfigError, ParseError

log = logging.getLogger(__name__)

Term = tuple[str, ...]

NUM_BITS = 7


class SemanticFlag(Enum):
    """Semantic-lexicon categories standing in for an external concept tagger."""

    BODY_PART = "BODY-PART-SEMTYPE"
    SIGN_SYMPTOM_OR_DISEASE = "SIGN-SYMPTOM-OR-DISEASE-SEMTYPE"


DictClass = Union[Concept, SemanticFlag]

# Default bit position per dictionary class. Both semantic-lexicon flags share
# the final bit; the body-parts bit belongs to the BPOC gazetteer.
DEFAULT_BIT: dict[DictClass, int] = {
    Concept.SYM: 0,
    Concept.SEVERITY: 1,
    Concept.DURATION: 2,
    Concept.INTENSIFIER: 3,
    Concept.NEGATION: 4,
    Concept.BPOC: 5,
    SemanticFlag.BODY_PART: 6,
    SemanticFlag.SIGN_SYMPTOM_OR_DISEASE: 6,
}


@dataclass(frozen=True)
class Dictionary:
    """A named, deduplicated set of lowercase multi-token terms."""

    name: str
    concept: DictClass
    terms: frozenset[Term]

    def __post_init__(self):
        for term in self.terms:
            if not term or any((not tok) or any(c.isspace() for c in tok) for tok in term):
                raise ConfigError(f"dictionary {self.name!r}: bad term {term!r}")

    def sorted_terms(self) -> list[Term]:
        return sorted(self.terms, key=lambda t: " ".join(t))


@dataclass(frozen=True)
class MatchSpan:
    """A full term match covering tokens [start, end)."""

    dictionary_name: str
    start: int
    end: int
    term: Term

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ConfigError(f"bad span [{self.start}, {self.end})")

    def covers(self, index: int) -> bool:
        return self.start <= index < self.end


@dataclass(frozen=True)
class DictVector:
    """Seven membership bits for one token (see module docstring for order)."""

    bits: tuple[bool, ...]

    def __post_init__(self):
        if len(self.bits) != NUM_BITS:
            raise ConfigError(f"expected {NUM_BITS} bits, got {len(self.bits)}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.float64)


ZERO_VECTOR = DictVector(tuple([False] * NUM_BITS))


def load_dictionary(path: str | Path, name: str, concept: DictClass) -> Dictionary:
    """Load one term per line; "#" comments and blank lines are skipped.

    Each line is tokenized with the corpus tokenizer, so punctuation inside a
    term splits exactly as it does in running text.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise ParseError(f"cannot read dictionary: {exc}", path=path) from exc
    terms: set[Term] = set()
    for line in lines:
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        toks = tokenize(line, Source.FORUM)
        if toks:
            terms.add(tuple(t.surface for t in toks))
    if not terms:
        raise ConfigError(f"dictionary file {path} yields no terms")
    log.info("loaded dictionary %r: %d terms", name, len(terms))
    return Dictionary(name, concept, frozenset(terms))


def write_dictionary(dictionary: Dictionary, path: str | Path) -> None:
    """Write one term per line, tokens joined by single spaces, sorted."""
    Path(path).write_text(
        "\n".join(" ".join(t) for t in dictionary.sorted_terms()) + "\n",
        encoding="utf-8",
    )


class _TrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self):
        self.children: dict[str, _TrieNode] = {}
        self.terminal: Term | None = None


def _build_trie(terms: Iterable[Term]) -> _TrieNode:
    root = _TrieNode()
    for term in terms:
        node = root
        for tok in term:
            node = node.children.setdefault(tok, _TrieNode())
        node.terminal = term
    return root


def scan(dictionary: Dictionary, tokens: Sequence[Token | str]) -> list[MatchSpan]:
    """Leftmost-longest, non-overlapping full matches of dictionary terms.

    Scanning left to right, the longest term matching the token subsequence
    at the current position wins and scanning resumes past it. Matches cover
    whole tokens only; there is no partial or fuzzy matching.
    """
    surfaces = [t.surface if isinstance(t, Token) else t for t in tokens]
    trie = _build_trie(dictionary.terms)
    spans: list[MatchSpan] = []
    i = 0
    n = len(surfaces)
    while i < n:
        node = trie
        best: Term | None = None
        best_end = i
        j = i
        while j < n:
            node = node.children.get(surfaces[j])
            if node is None:
                break
            j += 1
            if node.terminal is not None:
                best, best_end = node.terminal, j
        if best is not None:
            spans.append(MatchSpan(dictionary.name, i, best_end, best))
            i = best_end
        else:
            i += 1
    return spans


def scan_naive(dictionary: Dictionary, tokens: Sequence[Token | str]) -> list[MatchSpan]:
    """Quadratic oracle for scan: try every term at every position."""
    surfaces = [t.surface if isinstance(t, Token) else t for t in tokens]
    spans: list[MatchSpan] = []
    i = 0
    while i < len(surfaces):
        best: Term | None = None
        for term in dictionary.terms:
            if len(term) > len(surfaces) - i:
                continue
            if tuple(surfaces[i : i + len(term)]) == term:
                if best is None or len(term) > len(best):
                    best = term
        if best is not None:
            spans.append(MatchSpan(dictionary.name, i, i + len(best), best))
            i += len(best)
        else:
            i += 1
    return spans


class DictRegistry:
    """Maps dictionaries onto the seven feature bits.

    At most one dictionary may claim a bit, except that semantic-lexicon
    dictionaries sharing a bit are unioned. `bit_overrides` reassigns a named
    dictionary away from its default bit (e.g. a body-part semantic lexicon
    standing in for the body-parts gazetteer).
    """

    def __init__(
        self,
        dictionaries: Sequence[Dictionary],
        bit_overrides: dict[str, int] | None = None,
    ):
        overrides = dict(bit_overrides or {})
        names = [d.name for d in dictionaries]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate dictionary names in registry")
        for name in overrides:
            if name not in names:
                raise ConfigError(f"bit override for unknown dictionary {name!r}")
        self.by_bit: dict[int, list[Dictionary]] = {}
        for d in dictionaries:
            bit = overrides.get(d.name, DEFAULT_BIT[d.concept])
            if not 0 <= bit < NUM_BITS:
                raise ConfigError(f"bit {bit} out of range for {d.name!r}")
            self.by_bit.setdefault(bit, []).append(d)
        for bit, ds in self.by_bit.items():
            if len(ds) > 1 and not all(isinstance(d.concept, SemanticFlag) for d in ds):
                claimants = ", ".join(d.name for d in ds)
                raise ConfigError(f"dictionaries {claimants} all claim bit d{bit + 1}")

    @property
    def dictionaries(self) -> list[Dictionary]:
        return [d for ds in self.by_bit.values() for d in ds]

    def digest_material(self) -> str:
        parts = []
        for bit in sorted(self.by_bit):
            for d in sorted(self.by_bit[bit], key=lambda d: d.name):
                terms = ";".join(" ".join(t) for t in d.sorted_terms())
                parts.append(f"d{bit + 1}|{d.name}|{d.concept.value}|{terms}")
        return "\n".join(parts)


def dict_vectors(
    registry: DictRegistry | Sequence[Dictionary], tokens: Sequence[Token | str]
) -> list[DictVector]:
    """One DictVector per token; bit j is set iff the token lies inside a
    full match of the dictionary assigned to bit j."""
    if not isinstance(registry, DictRegistry):
        registry = DictRegistry(registry)
    bits = [[False] * NUM_BITS for _ in tokens]
    for bit, ds in registry.by_bit.items():
        for d in ds:
            for span in scan(d, tokens):
                for i in range(span.start, span.end):
                    bits[i][bit] = True
    return [DictVector(tuple(row)) for row in bits]
