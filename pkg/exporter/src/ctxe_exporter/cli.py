"""Command-line entry point for the exporter."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .export import MAX_LENGTH_BY_SOURCE, ExportJob, export


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ctxe-export",
        description="Export frozen-transformer last-layer vectors to a CTXE file",
    )
    parser.add_argument("--corpus", required=True, help="input corpus (CoNLL TSV)")
    parser.add_argument("--model", required=True, help="model identifier or local path")
    parser.add_argument("--output", required=True, help="output CTXE path")
    parser.add_argument("--vocab-out", required=True,
                        help="where to write the piece vocabulary used")
    parser.add_argument("--source", choices=sorted(MAX_LENGTH_BY_SOURCE),
                        default="forum-sentence")
    parser.add_argument("--batch-size", type=int, default=8)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        job = ExportJob(args.corpus, args.model, args.output, args.vocab_out,
                        args.source, args.batch_size)
        result = export(job)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.entries} entries of dimension {result.dimension} "
          f"to {args.output}")
    if result.truncated:
        print(f"{len(result.truncated)} sequence(s) truncated; see sidecar log",
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
