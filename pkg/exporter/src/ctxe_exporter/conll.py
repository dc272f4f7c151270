"""Minimal reader for the CoNLL-style TSV corpus interchange format.

One "surface<TAB>tag" (tag optional) per line, blank line between sequences,
"#id <string>" comments name the following sequence. Only ids and surfaces
matter here; labels are ignored.
"""
from __future__ import annotations

from pathlib import Path


def read_sequences(path: str | Path) -> list[tuple[str, list[str]]]:
    """Returns (sequence id, token surfaces) pairs in file order."""
    out: list[tuple[str, list[str]]] = []
    surfaces: list[str] = []
    pending_id: str | None = None

    def flush():
        nonlocal surfaces, pending_id
        if surfaces:
            seq_id = pending_id if pending_id is not None else f"seq-{len(out)}"
            out.append((seq_id, surfaces))
        surfaces, pending_id = [], None

    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if line.startswith("#id "):
            pending_id = line[4:].strip()
            continue
        if not line.strip():
            flush()
            continue
        surfaces.append(line.split("\t", 1)[0])
    flush()
    return out
