"""Writer for the CTXE binary container.

Layout (all integers and floats little-endian): magic "CTXE", version u16,
dimension u32, then per entry: id-length u16, UTF-8 id, piece-count u32,
piece-count x dimension float32 rows.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

MAGIC = b"CTXE"
VERSION = 1


def write_atomic(path: str | Path, dimension: int,
                 entries: Iterable[tuple[str, np.ndarray]]) -> None:
    """Write the whole store to a temp file, then rename into place."""
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".ctxe.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<HI", VERSION, dimension))
            for seq_id, matrix in entries:
                arr = np.ascontiguousarray(matrix, dtype="<f4")
                if arr.ndim != 2 or arr.shape[1] != dimension:
                    raise ValueError(
                        f"entry {seq_id!r}: shape {arr.shape}, want (m, {dimension})"
                    )
                raw = seq_id.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<I", arr.shape[0]))
                fh.write(arr.tobytes())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
