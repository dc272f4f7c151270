"""Static embeddings, word-piece alignment, and the contextual vector store.

Contextual vectors come precomputed from a frozen encoder and are carried in
a binary "CTXE" file; token-level features are repeated per piece so both
input channels share the piece-level sequence length.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Sequence, TypeVar

import numpy as np

from .corpus import Token
from .errors import ContractViolation, ParseError, StoreError

X = TypeVar("X")

UNK_PIECE = "[UNK]"
CONTINUATION = "##"

CTXE_MAGIC = b"CTXE"
CTXE_VERSION = 1


class StaticEmbeddingTable:
    """Token-surface -> vector map with deterministic random OOV fallback.

    An out-of-vocabulary surface gets a vector drawn uniformly from
    [-0.25, 0.25]^dim, seeded by (oov_seed, surface), and cached so repeated
    lookups within a run return the identical array.
    """

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray], oov_seed: int = 0):
        self.dimension = dimension
        self.vectors = {}
        for surface, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dimension,):
                raise ContractViolation(
                    f"vector for {surface!r} has shape {arr.shape}, want ({dimension},)"
                )
            self.vectors[surface] = arr
        self.oov_seed = oov_seed
        self._oov_cache: dict[str, np.ndarray] = {}

    def __contains__(self, surface: str) -> bool:
        return surface in self.vectors

    def lookup(self, surface: str) -> np.ndarray:
        vec = self.vectors.get(surface)
        if vec is not None:
            return vec
        vec = self._oov_cache.get(surface)
        if vec is None:
            digest = hashlib.blake2b(
                surface.encode("utf-8"), digest_size=8, key=str(self.oov_seed).encode()
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.uniform(-0.25, 0.25, size=self.dimension)
            self._oov_cache[surface] = vec
        return vec


def load_word2vec_text(path: str | Path, oov_seed: int = 0) -> StaticEmbeddingTable:
    """Load the text format: header "count dim", then "token v1 .. vdim" lines."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read embeddings: {exc}", path=path) from exc
    if not lines:
        raise ParseError("empty embedding file", path=path, line=1)
    header = lines[0].split()
    if len(header) != 2 or not all(p.isdigit() for p in header):
        raise ParseError(f"bad header {lines[0]!r}, expected 'count dim'", path=path, line=1)
    count, dim = int(header[0]), int(header[1])
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise ParseError(
                f"expected {dim} values, got {len(parts) - 1}", path=path, line=lineno
            )
        try:
            vectors[parts[0]] = np.array([float(v) for v in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"bad float: {exc}", path=path, line=lineno) from None
    if len(vectors) != count:
        raise ParseError(
            f"header promises {count} entries, file has {len(vectors)}", path=path
        )
    return StaticEmbeddingTable(dim, vectors, oov_seed)


@dataclass(frozen=True)
class PieceAlignment:
    """Word pieces plus, for each piece, the index of its parent token."""

    pieces: tuple[str, ...]
    parent: tuple[int, ...]

    def __post_init__(self):
        if len(self.pieces) != len(self.parent):
            raise ContractViolation("pieces and parent lengths differ")
        if self.parent and self.parent[0] != 0:
            raise ContractViolation("first piece must belong to token 0")
        if any(b - a not in (0, 1) for a, b in zip(self.parent, self.parent[1:])):
            raise ContractViolation(
                "parent indices must be non-decreasing and cover every token"
            )

    @property
    def num_pieces(self) -> int:
        return len(self.pieces)

    @property
    def num_tokens(self) -> int:
        return self.parent[-1] + 1 if self.parent else 0

    def first_piece_index(self, token_index: int) -> int:
        return self.parent.index(token_index)


def wordpiece_token(surface: str, vocab: Collection[str], unk: str = UNK_PIECE) -> list[str]:
    """Greedy longest-prefix decomposition of one token.

    Continuation pieces carry the "##" marker. A token with any unmatchable
    residue collapses to a single unknown piece.
    """
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


def wordpiece(
    tokens: Sequence[Token | str], vocab: Collection[str], unk: str = UNK_PIECE
) -> PieceAlignment:
    """Piece every token and record piece -> token provenance."""
    pieces: list[str] = []
    parent: list[int] = []
    for i, tok in enumerate(tokens):
        surface = tok.surface if isinstance(tok, Token) else tok
        for piece in wordpiece_token(surface, vocab, unk):
            pieces.append(piece)
            parent.append(i)
    return PieceAlignment(tuple(pieces), tuple(parent))


def load_piece_vocab(path: str | Path) -> list[str]:
    """One piece per line; blank lines are skipped; order is preserved."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line for line in lines if line]


def expand_to_pieces(alignment: PieceAlignment, items: Sequence[X]) -> list[X]:
    """Repeat token-level item i once per piece whose parent is i."""
    if len(items) != alignment.num_tokens:
        raise ContractViolation(
            f"{len(items)} token-level items for {alignment.num_tokens} tokens"
        )
    return [items[p] for p in alignment.parent]


def collapse_from_pieces(alignment: PieceAlignment, piece_items: Sequence[X]) -> list[X]:
    """Token-level view of piece-level predictions: first piece wins."""
    if len(piece_items) != alignment.num_pieces:
        raise ContractViolation(
            f"{len(piece_items)} piece-level items for {alignment.num_pieces} pieces"
        )
    out = []
    seen = -1
    for item, parent in zip(piece_items, alignment.parent):
        if parent != seen:
            out.append(item)
            seen = parent
    return out


@dataclass
class ContextualStore:
    """Sequence-id -> (pieces x dimension) float32 matrices."""

    dimension: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def put(self, seq_id: str, matrix: np.ndarray) -> None:
        arr = np.ascontiguousarray(matrix, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[1] != self.dimension:
            raise ContractViolation(
                f"entry {seq_id!r} has shape {arr.shape}, want (m, {self.dimension})"
            )
        self.entries[seq_id] = arr

    def get(self, seq_id: str) -> np.ndarray:
        try:
            return self.entries[seq_id]
        except KeyError:
            raise StoreError(f"no contextual entry for sequence {seq_id!r}") from None


def store_write(store: ContextualStore, path: str | Path) -> None:
    """Write the CTXE binary format (all integers and floats little-endian)."""
    with open(path, "wb") as fh:
        fh.write(CTXE_MAGIC)
        fh.write(struct.pack("<HI", CTXE_VERSION, store.dimension))
        for seq_id, matrix in store.entries.items():
            raw = seq_id.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", matrix.shape[0]))
            fh.write(matrix.astype("<f4").tobytes())


def store_read(path: str | Path) -> ContextualStore:
    data = Path(path).read_bytes()
    view = memoryview(data)
    if len(view) < 10:
        raise StoreError(f"{path}: truncated header")
    if bytes(view[:4]) != CTXE_MAGIC:
        raise StoreError(f"{path}: bad magic {bytes(view[:4])!r}")
    version, dimension = struct.unpack("<HI", view[4:10])
    if version != CTXE_VERSION:
        raise StoreError(f"{path}: unsupported version {version}")
    store = ContextualStore(dimension)
    pos = 10
    while pos < len(view):
        if pos + 2 > len(view):
            raise StoreError(f"{path}: truncated entry header at byte {pos}")
        (id_len,) = struct.unpack("<H", view[pos : pos + 2])
        pos += 2
        if pos + id_len + 4 > len(view):
            raise StoreError(f"{path}: truncated entry at byte {pos}")
        seq_id = bytes(view[pos : pos + id_len]).decode("utf-8")
        pos += id_len
        (rows,) = struct.unpack("<I", view[pos : pos + 4])
        pos += 4
        nbytes = rows * dimension * 4
        if pos + nbytes > len(view):
            raise StoreError(f"{path}: truncated matrix for {seq_id!r}")
        matrix = np.frombuffer(view[pos : pos + nbytes], dtype="<f4").reshape(
            rows, dimension
        )
        pos += nbytes
        store.entries[seq_id] = np.ascontiguousarray(matrix)
    return store
