"""Batch export of sentence-encoder embeddings into the PFIEMB1 format.

Reads {id, text} JSONL (texts already plain, as dumped by the ranking
pipeline's `featurize --dump-texts`), encodes each text with a pretrained
transformer encoder's sentence representation, and writes the vectors as
a PFIEMB1 binary plus a JSON manifest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "PFIEMB_MAGIC",
    "DEFAULT_MODEL",
    "ExportManifest",
    "ExportError",
    "Encoder",
    "read_documents",
    "write_pfiemb",
    "export_embeddings",
]

PFIEMB_MAGIC = b"PFIEMB1\0"
DEFAULT_MODEL = "princeton-nlp/sup-simcse-bert-base-uncased"


class ExportError(RuntimeError):
    pass


@dataclass
class ExportManifest:
    model: str
    dim: int
    count: int
    input_digest: str
    created_at: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "dim": self.dim,
                "count": self.count,
                "input_digest": self.input_digest,
                "created_at": self.created_at,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"


def read_documents(path) -> List[Tuple[str, str]]:
    """Parse {id, text} JSONL; order preserved, duplicate ids rejected."""
    docs: List[Tuple[str, str]] = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{line_no}: malformed JSON: {exc.msg}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise ExportError(f"{path}:{line_no}: expected an object with 'id' and 'text'")
            doc_id = str(obj["id"])
            if doc_id in seen:
                raise ExportError(f"{path}:{line_no}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            docs.append((doc_id, str(obj["text"])))
    return docs


class Encoder:
    """Thin wrapper around a transformers encoder.

    Uses the model's pooler output when it has one (the SimCSE-style
    sentence representation), otherwise attention-masked mean pooling
    over the last hidden state.
    """

    def __init__(self, model_name: str, max_length: int = 128, device: str = "cpu"):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self.model_name = model_name
        self.max_length = max_length
        self.device = device
        self._torch = torch
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name)
        except Exception as exc:
            raise ExportError(f"cannot load encoder {model_name!r}: {exc}") from exc
        self.model.to(device)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        torch = self._torch
        enc = self.tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        ).to(self.device)
        with torch.no_grad():
            out = self.model(**enc)
        pooled = getattr(out, "pooler_output", None)
        if pooled is None:
            mask = enc["attention_mask"].unsqueeze(-1).to(out.last_hidden_state.dtype)
            summed = (out.last_hidden_state * mask).sum(dim=1)
            pooled = summed / mask.sum(dim=1).clamp(min=1.0)
        return pooled.cpu().numpy().astype(np.float32)


def write_pfiemb(path, dim: int, records: Iterable[Tuple[str, np.ndarray]]) -> int:
    """Write [magic][u32 dim][u64 count][count * (u16 id_len, id, dim*f32)].

    The record count is patched into the header after the stream is
    written; returns the number of records."""
    path = Path(path)
    count = 0
    with open(path, "wb") as fh:
        fh.write(PFIEMB_MAGIC)
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", 0))
        for doc_id, vec in records:
            encoded = doc_id.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ExportError(f"document id too long ({len(encoded)} bytes): {doc_id[:40]!r}...")
            vec = np.asarray(vec, dtype="<f4")
            if vec.shape != (dim,):
                raise ExportError(f"vector for {doc_id!r} has shape {vec.shape}, expected ({dim},)")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(vec.tobytes())
            count += 1
        fh.seek(12)
        fh.write(struct.pack("<Q", count))
    return count


def export_embeddings(
    docs_path,
    model_name: str = DEFAULT_MODEL,
    out_path=None,
    batch_size: int = 32,
    max_length: int = 128,
    device: str = "cpu",
) -> ExportManifest:
    """Encode every document and write the PFIEMB1 file plus manifest.

    Empty texts become zero vectors (with a warning); ids come out in
    input order. The manifest lands at ``<out_path>.manifest.json``.
    """
    if out_path is None:
        raise ExportError("out_path is required")
    if batch_size < 1:
        raise ExportError("batch_size must be >= 1")
    docs = read_documents(docs_path)
    encoder = Encoder(model_name, max_length=max_length, device=device)

    def records():
        empty = 0
        for start in range(0, len(docs), batch_size):
            batch = docs[start : start + batch_size]
            texts = [text for _, text in batch]
            nonempty_idx = [i for i, t in enumerate(texts) if t.strip()]
            vectors = np.zeros((len(batch), encoder.dim), dtype=np.float32)
            if nonempty_idx:
                encoded = encoder.encode([texts[i] for i in nonempty_idx])
                for row, i in enumerate(nonempty_idx):
                    vectors[i] = encoded[row]
            for i, (doc_id, text) in enumerate(batch):
                if not text.strip():
                    empty += 1
                    log.warning("document %r has empty text; writing a zero vector", doc_id)
                yield doc_id, vectors[i]

    count = write_pfiemb(out_path, encoder.dim, records())
    digest = hashlib.sha256(Path(docs_path).read_bytes()).hexdigest()
    manifest = ExportManifest(
        model=model_name,
        dim=encoder.dim,
        count=count,
        input_digest=digest,
        created_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    )
    Path(str(out_path) + ".manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest
