"""Weak supervision: dictionary tagging and incremental dictionary mixtures.

Symptom dictionaries stand in for human annotation: full matches become
B-SYM/I-SYM spans and everything else is O. Mixtures add a seeded, nested
prefix of one dictionary's novel terms to another, in 20% steps.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import random

from .corpus import Concept, LabelTag, LabeledSequence, OUTSIDE
from .errors import ConfigError
from .gazetteer import Dictionary, Term, scan

log = logging.getLogger(__name__)

ALLOWED_FRACTIONS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class DictionaryMixture:
    """base plus a deterministic prefix of the donor's novel terms."""

    base: Dictionary
    donor: Dictionary
    fraction: float
    seed: int
    manifest: tuple[Term, ...]

    @property
    def dictionary(self) -> Dictionary:
        name = f"{self.base.name}+{int(round(self.fraction * 100))}%{self.donor.name}"
        return Dictionary(name, self.base.concept, self.base.terms | set(self.manifest))

    def manifest_json(self) -> dict:
        return {
            "base": self.base.name,
            "donor": self.donor.name,
            "fraction": self.fraction,
            "seed": self.seed,
            "included_terms": [" ".join(t) for t in self.manifest],
        }

    def write_manifest(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.manifest_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def build_mixture(
    base: Dictionary, donor: Dictionary, fraction: float, seed: int
) -> DictionaryMixture:
    """Include ceil(fraction * |donor \\ base|) donor terms, seeded shuffle.

    Candidates are the donor terms absent from base, sorted then shuffled with
    the seed; increasing fractions under one seed take nested prefixes.
    """
    snapped = next(
        (f for f in ALLOWED_FRACTIONS if math.isclose(fraction, f, abs_tol=1e-9)), None
    )
    if snapped is None:
        raise ConfigError(f"fraction must be one of {ALLOWED_FRACTIONS}, got {fraction}")
    candidates = sorted(donor.terms - base.terms, key=lambda t: " ".join(t))
    rng = random.Random(seed)
    rng.shuffle(candidates)
    take = math.ceil(snapped * len(candidates))
    return DictionaryMixture(base, donor, snapped, seed, tuple(candidates[:take]))


def weak_label(
    dictionary: Dictionary, sequences: Sequence[LabeledSequence]
) -> list[LabeledSequence]:
    """Tag every sequence from scratch: span starts get B-SYM, continuations
    I-SYM, everything else O. Prior labels are discarded."""
    if dictionary.concept is not Concept.SYM:
        raise ConfigError(
            f"weak labeling needs a symptom dictionary, got {dictionary.concept}"
        )
    b_sym = LabelTag("B", Concept.SYM)
    i_sym = LabelTag("I", Concept.SYM)
    out = []
    for seq in sequences:
        labels: list[LabelTag] = [OUTSIDE] * len(seq.tokens)
        for span in scan(dictionary, seq.tokens):
            labels[span.start] = b_sym
            for i in range(span.start + 1, span.end):
                labels[i] = i_sym
        out.append(seq.with_labels(labels))
    return out


def filter_has_symptom(
    dictionary: Dictionary, sequences: Sequence[LabeledSequence]
) -> list[LabeledSequence]:
    """Keep exactly the sequences containing at least one full match."""
    return [s for s in sequences if scan(dictionary, s.tokens)]


@dataclass(frozen=True)
class TermFilter:
    """Exact-term or prefix predicate used to prune dictionary terms."""

    kind: str  # "exact" | "prefix"
    tokens: Term

    def __post_init__(self):
        if self.kind not in ("exact", "prefix"):
            raise ConfigError(f"unknown term filter kind {self.kind!r}")
        if not self.tokens:
            raise ConfigError("term filter needs at least one token")

    def matches(self, term: Term) -> bool:
        if self.kind == "exact":
            return term == self.tokens
        return term[: len(self.tokens)] == self.tokens

    @classmethod
    def parse(cls, text: str) -> "TermFilter":
        kind, _, rest = text.partition(":")
        if not rest:
            kind, rest = "exact", text
        return cls(kind, tuple(rest.split()))


def prune_terms(
    dictionary: Dictionary, drop: Sequence[TermFilter | Callable[[Term], bool]]
) -> Dictionary:
    """Remove terms matched by any predicate; removed terms are logged."""
    def hit(term: Term) -> bool:
        return any(
            p.matches(term) if isinstance(p, TermFilter) else p(term) for p in drop
        )

    kept = frozenset(t for t in dictionary.terms if not hit(t))
    removed = dictionary.terms - kept
    for term in sorted(removed, key=lambda t: " ".join(t)):
        log.info("pruned term %r from %r", " ".join(term), dictionary.name)
    return Dictionary(dictionary.name, dictionary.concept, kept)


@dataclass(frozen=True)
class WeakLabelRun:
    """A tagging run: the mixture used, the tagged corpus and coverage stats."""

    mixture: DictionaryMixture
    corpus_id: str
    tagged: tuple[LabeledSequence, ...]
    span_count: int
    covered_tokens: int

    def manifest_json(self) -> dict:
        return {
            **self.mixture.manifest_json(),
            "corpus": self.corpus_id,
            "sequences": len(self.tagged),
            "spans": self.span_count,
            "covered_tokens": self.covered_tokens,
        }


def run_weak_label(
    mixture: DictionaryMixture, corpus_id: str, sequences: Sequence[LabeledSequence]
) -> WeakLabelRun:
    d = mixture.dictionary
    tagged = weak_label(d, sequences)
    spans = 0
    covered = 0
    for seq in sequences:
        for span in scan(d, seq.tokens):
            spans += 1
            covered += span.end - span.start
    return WeakLabelRun(mixture, corpus_id, tuple(tagged), spans, covered)
