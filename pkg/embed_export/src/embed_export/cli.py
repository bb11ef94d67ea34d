"""CLI for the embedding exporter.

Exit codes: 0 ok, 1 export/model error, 2 bad usage, 3 missing input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .exporter import DEFAULT_MODEL, ExportError, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Batch-export sentence-encoder embeddings into a PFIEMB1 file.",
        epilog="exit codes: 0 ok, 1 export/model error, 2 bad usage, 3 missing input",
    )
    parser.add_argument("--docs", required=True,
                        help="{id, text} JSONL (plain texts, e.g. from 'pfirec featurize --dump-texts')")
    parser.add_argument("--out", required=True, help="output PFIEMB1 path")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"encoder name or local path (default: {DEFAULT_MODEL})")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--max-length", type=int, default=128,
                        help="token truncation length (default 128)")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if not Path(args.docs).exists():
        print(f"embed-export: error: docs file not found: {args.docs}", file=sys.stderr)
        return 3
    try:
        manifest = export_embeddings(
            args.docs,
            model_name=args.model,
            out_path=args.out,
            batch_size=args.batch_size,
            max_length=args.max_length,
            device=args.device,
        )
    except ExportError as exc:
        print(f"embed-export: error: {exc}", file=sys.stderr)
        return 1
    print(f"exported {manifest.count} embeddings (dim {manifest.dim}) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
