"""Greedy longest-prefix word-piece segmentation over a fixed vocabulary.

Continuation pieces carry the "##" marker; a token with any unmatchable
residue collapses to a single unknown piece. This mirrors the segmentation
rule on the consuming side so row counts line up exactly.
"""
from __future__ import annotations

from typing import Mapping

UNK_PIECE = "[UNK]"
CONTINUATION = "##"


def split_token(surface: str, vocab: Mapping[str, int] | set, unk: str = UNK_PIECE) -> list[str]:
    if not surface:
        return [unk]
    if surface in vocab:
        return [surface]
    pieces: list[str] = []
    start = 0
    while start < len(surface):
        end = len(surface)
        found = None
        while end > start:
            candidate = surface[start:end]
            if start > 0:
                candidate = CONTINUATION + candidate
            if candidate in vocab:
                found = candidate
                break
            end -= 1
        if found is None:
            return [unk]
        pieces.append(found)
        start = end
    return pieces


def split_sequence(surfaces: list[str], vocab, unk: str = UNK_PIECE) -> list[str]:
    pieces: list[str] = []
    for surface in surfaces:
        pieces.extend(split_token(surface, vocab, unk))
    return pieces
