"""embed_export: pretrained sentence-encoder embeddings -> PFIEMB1 files."""

from .exporter import (
    DEFAULT_MODEL,
    Encoder,
    ExportError,
    ExportManifest,
    export_embeddings,
    read_documents,
    write_pfiemb,
)

__version__ = "0.1.0"
