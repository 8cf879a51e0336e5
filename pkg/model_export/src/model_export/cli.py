"""Command-line surface: `export` writes graph + manifest, `fixture` writes
the parity fixture and records its checksum in the manifest."""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, export_backbone, export_random_init
from .fixtures import generate_parity_fixture


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="model-export",
        description="Export the face backbone to ONNX with five named stage taps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_export = sub.add_parser("export", help="weights -> backbone.onnx + manifest.json")
    group = p_export.add_mutually_exclusive_group(required=True)
    group.add_argument("--weights", help="path to a state-dict checkpoint")
    group.add_argument(
        "--random-init",
        type=int,
        metavar="SEED",
        help="export a seeded random initialization (also writes weights.pt)",
    )
    p_export.add_argument("--out", required=True, help="output directory")

    p_fix = sub.add_parser("fixture", help="write input/output parity tensors")
    p_fix.add_argument("--weights", required=True)
    p_fix.add_argument("--out", required=True, help="output base path (.bin/.json)")
    p_fix.add_argument("--count", type=int, default=4)
    p_fix.add_argument("--seed", type=int, default=0)
    p_fix.add_argument("--manifest", help="manifest to update with the fixture checksum")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            if args.weights:
                manifest = export_backbone(args.weights, args.out)
            else:
                manifest = export_random_init(args.random_init, args.out)
            print(f"exported {args.out}/{manifest.graph_path} (sha256 {manifest.graph_sha256[:12]})")
        else:
            index = generate_parity_fixture(
                args.weights, args.out, args.count, args.seed, args.manifest
            )
            print(f"fixture with {index['cases']} cases (sha256 {index['checksum'][:12]})")
        return 0
    except ExportError as exc:
        print(f"model-export: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
