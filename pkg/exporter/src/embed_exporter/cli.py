"""Command-line export: image folder + template files -> bundle directory.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ExportError
from .export import (
    ExportJob,
    export_bundle,
    load_templates_general,
    load_templates_specific,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="embed an image-folder dataset into the bundle byte layout",
    )
    parser.add_argument("--dataset", required=True, help="image-folder root")
    parser.add_argument("--split", default=None,
                        help="subdirectory of the root to export (default: root itself)")
    parser.add_argument("--templates-general", required=True,
                        help="text file, one {}-slotted template per line")
    parser.add_argument("--templates-specific", required=True,
                        help="JSON file mapping class name to template list")
    parser.add_argument("--views", type=int, default=64,
                        help="rows per sample including the original (default 64)")
    parser.add_argument("--out", required=True, help="output bundle directory")
    parser.add_argument("--seed", type=int, default=0, help="crop stream seed")
    parser.add_argument("--encoder", default="palette",
                        help='"palette", "clip", or "clip:<model-id>"')
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.views < 1:
        parser.error(f"--views must be >= 1, got {args.views}")
    try:
        job = ExportJob(
            dataset=args.dataset,
            split=args.split,
            out=args.out,
            templates_general=load_templates_general(args.templates_general),
            templates_specific=load_templates_specific(args.templates_specific),
            encoder=args.encoder,
            views=args.views,
            seed=args.seed,
        )
        summary = export_bundle(job)
    except (ExportError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {summary.out_dir}: samples={summary.num_samples} "
        f"views={summary.num_views} classes={summary.num_classes} "
        f"dim={summary.dim} skipped={len(summary.skipped)} "
        f"zero-shot={summary.zero_shot_accuracy:.4f}%"
    )
    return 0


def entry() -> None:
    sys.exit(main())
