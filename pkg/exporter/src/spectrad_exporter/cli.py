"""Command-line front end: one operation, exporting a checkpoint."""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import FRAMEWORKS, ExportError, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectrad-export",
        description="Export 2-D dense-layer weight matrices from a saved "
                    "model checkpoint as float32 NPY files plus a "
                    "manifest.json",
    )
    parser.add_argument("--model", required=True, help="checkpoint file")
    parser.add_argument("--framework", required=True, choices=FRAMEWORKS)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--include",
                        help="glob on layer names; non-matching layers are "
                             "not exported")
    return parser


def _configure_logging() -> None:
    # rebind to the current sys.stderr on every invocation; skip lines are
    # part of the CLI contract and must be visible
    logger = logging.getLogger("spectrad_exporter")
    logger.setLevel(logging.INFO)
    logger.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    logger.addHandler(handler)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging()
    try:
        manifest = export(ExportJob(model_path=args.model,
                                    framework=args.framework,
                                    output_dir=args.out,
                                    include=args.include))
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(manifest['layers'])} layer file(s) and manifest.json "
          f"to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
