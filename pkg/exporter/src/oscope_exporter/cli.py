"""Command line for checkpoint exports."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import ExportError
from .jobs import ExportJob, export_attention, export_embeddings


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscope-export",
        description="Export CLIP-family embeddings/attention in the harness's formats.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--checkpoint", required=True, help="checkpoint id or local path")
        p.add_argument("--manifest", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--batch-size", type=int, default=64)
        p.add_argument("--device", default="cpu")

    p = sub.add_parser("text", help="encode a caption manifest into a text store")
    common(p)

    p = sub.add_parser("image", help="encode rendered scene images into an image store")
    common(p)
    p.add_argument("--image-dir", required=True, type=Path, help="directory of <image_id>.png")

    p = sub.add_parser("attention", help="export CLS-attention records for scene images")
    common(p)
    p.add_argument("--image-dir", required=True, type=Path)
    p.add_argument("--masks", required=True, type=Path, help="pixel label grids JSONL")

    args = parser.parse_args(argv)
    job = ExportJob(
        checkpoint_id=args.checkpoint,
        manifest=args.manifest,
        out_path=args.out,
        modality="text" if args.verb == "text" else "image",
        image_dir=getattr(args, "image_dir", None),
        masks=getattr(args, "masks", None),
        batch_size=args.batch_size,
        device=args.device,
    )
    try:
        if args.verb == "attention":
            export_attention(job)
        else:
            export_embeddings(job)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
