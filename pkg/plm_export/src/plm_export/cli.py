"""Command line for the embedding exporter."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .export import ExportJob, export
from .formats import ExportError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plm-export",
        description="Run a frozen encoder over a corpus and write an EMBC embedding cache",
    )
    parser.add_argument("--corpus", type=Path, required=True, help="directory of *.gimc.json files")
    parser.add_argument(
        "--encoder",
        default="hash",
        help='"hash" or "transformers:<model name>" (e.g. transformers:bert-base-multilingual-cased)',
    )
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--dim", type=int, default=32, help="vector width for the hash backend")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)
    try:
        summary = export(
            ExportJob(
                corpus_path=args.corpus,
                encoder_name=args.encoder,
                output_path=args.out,
                dim=args.dim,
                device=args.device,
            )
        )
    except ExportError as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
