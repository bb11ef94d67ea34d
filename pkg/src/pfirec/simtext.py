"""Embedding providers and the two similarity primitives.

The built-in provider is a deterministic signed feature-hashing TF-IDF
embedding (FNV-1a 64-bit, 256 buckets). Externally computed embeddings
(e.g. from a pretrained sentence encoder) are loaded from a PFIEMB1
binary file and used through the same store interface.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Set, Union

import numpy as np

from .textprep import TokenSet

__all__ = [
    "EmbeddingStore",
    "EmbeddingFormatError",
    "cosine",
    "jaccard",
    "fnv1a64",
    "embed_hashed_tfidf",
    "fit_hashed_tfidf",
    "load_embeddings",
    "HASHED_DIM",
    "PFIEMB_MAGIC",
]

HASHED_DIM = 256
PFIEMB_MAGIC = b"PFIEMB1\0"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF


class EmbeddingFormatError(ValueError):
    """Raised for malformed PFIEMB1 files; carries the failing byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def cosine(a, b) -> float:
    """Cosine similarity in [-1, 1]; 0 if either vector has zero norm."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = math.sqrt(float(va @ va))
    nb = math.sqrt(float(vb @ vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(va @ vb) / (na * nb)


def jaccard(a: Union[TokenSet, Set[str]], b: Union[TokenSet, Set[str]]) -> float:
    """|a ∩ b| / |a ∪ b|; 0 when both sets are empty."""
    sa = a.tokens if isinstance(a, TokenSet) else a
    sb = b.tokens if isinstance(b, TokenSet) else b
    if not sa and not sb:
        return 0.0
    inter = len(sa & sb)
    if inter == 0:
        return 0.0
    return inter / len(sa | sb)


def fnv1a64(data: Union[str, bytes]) -> int:
    """FNV-1a 64-bit hash."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64_MASK
    return h


_HASH_CACHE: Dict[str, int] = {}


def _token_hash(token: str) -> int:
    h = _HASH_CACHE.get(token)
    if h is None:
        h = fnv1a64(token)
        _HASH_CACHE[token] = h
    return h


@dataclass
class EmbeddingStore:
    """Document-id -> vector map with a hashed-TF-IDF fallback.

    With provider ``hashed_tfidf`` an id missing from the map is embedded
    on the fly from its token set (and cached). With ``external_file``
    missing ids are hard errors: the file is the complete source of truth.
    """

    provider: str
    dim: int
    vectors: Dict[str, np.ndarray] = field(default_factory=dict)
    idf: Optional[Dict[str, float]] = None
    n_docs: int = 0

    def embed(self, tokens: TokenSet) -> np.ndarray:
        if self.provider != "hashed_tfidf":
            raise ValueError("on-the-fly embedding requires the hashed_tfidf provider")
        return embed_hashed_tfidf(tokens, self)

    def vector_for(self, doc_id: str, tokens: Optional[TokenSet] = None) -> np.ndarray:
        vec = self.vectors.get(doc_id)
        if vec is not None:
            return vec
        if self.provider == "hashed_tfidf":
            if tokens is None:
                raise KeyError(f"no cached vector for {doc_id!r} and no tokens given")
            vec = embed_hashed_tfidf(tokens, self)
            self.vectors[doc_id] = vec
            return vec
        raise KeyError(f"document id {doc_id!r} not present in external embedding file")


def fit_hashed_tfidf(doc_tokens: Mapping[str, TokenSet], dim: int = HASHED_DIM) -> EmbeddingStore:
    """Fit IDF weights over a document collection and precompute vectors.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the N given documents.
    """
    df: Dict[str, int] = {}
    for tokens in doc_tokens.values():
        for tok in tokens.tokens:
            df[tok] = df.get(tok, 0) + 1
    n = len(doc_tokens)
    idf = {tok: math.log((1 + n) / (1 + c)) + 1.0 for tok, c in df.items()}
    store = EmbeddingStore(provider="hashed_tfidf", dim=dim, idf=idf, n_docs=n)
    for doc_id, tokens in doc_tokens.items():
        store.vectors[doc_id] = embed_hashed_tfidf(tokens, store)
    return store


def embed_hashed_tfidf(tokens: TokenSet, store: EmbeddingStore) -> np.ndarray:
    """Signed feature hashing of a token set, IDF-weighted, L2-normalized.

    Bucket = low bits of FNV-1a64(token), sign = bit 63. Unknown tokens
    get the df=0 IDF weight. The all-zero vector stays all-zero.
    """
    if store.idf is None:
        raise ValueError("hashed_tfidf store has no fitted idf table")
    vec = np.zeros(store.dim, dtype=np.float64)
    default_idf = math.log(1 + store.n_docs) + 1.0
    for tok in tokens.tokens:
        h = _token_hash(tok)
        bucket = h % store.dim
        sign = -1.0 if (h >> 63) & 1 else 1.0
        vec[bucket] += sign * store.idf.get(tok, default_idf)
    norm = math.sqrt(float(vec @ vec))
    if norm > 0.0:
        vec /= norm
    return vec.astype(np.float32)


def load_embeddings(path: Union[str, Path]) -> EmbeddingStore:
    """Parse a PFIEMB1 file into an external-provider store.

    Layout (little-endian): magic "PFIEMB1\\0", u32 dim, u64 count, then
    count records of [u16 id_len][id utf-8][dim * f32].
    """
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:8] != PFIEMB_MAGIC:
        raise EmbeddingFormatError("bad magic, not a PFIEMB1 file", 0)
    if len(data) < 20:
        raise EmbeddingFormatError("truncated header", len(data))
    dim = struct.unpack_from("<I", data, 8)[0]
    count = struct.unpack_from("<Q", data, 12)[0]
    if dim == 0:
        raise EmbeddingFormatError("dimension must be positive", 8)
    offset = 20
    vec_bytes = 4 * dim
    store = EmbeddingStore(provider="external_file", dim=dim)
    for _ in range(count):
        if offset + 2 > len(data):
            raise EmbeddingFormatError("truncated record header", offset)
        id_len = struct.unpack_from("<H", data, offset)[0]
        offset += 2
        if offset + id_len > len(data):
            raise EmbeddingFormatError("truncated document id", offset)
        try:
            doc_id = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EmbeddingFormatError(f"invalid utf-8 id: {exc}", offset) from exc
        offset += id_len
        if offset + vec_bytes > len(data):
            raise EmbeddingFormatError("truncated vector payload", offset)
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if not np.all(np.isfinite(vec)):
            raise EmbeddingFormatError(f"non-finite values in vector for {doc_id!r}", offset - vec_bytes)
        if doc_id in store.vectors:
            raise EmbeddingFormatError(f"duplicate document id {doc_id!r}", offset - vec_bytes - id_len - 2)
        store.vectors[doc_id] = vec
    if offset != len(data):
        raise EmbeddingFormatError(f"{len(data) - offset} trailing bytes after last record", offset)
    return store
