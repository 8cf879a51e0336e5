#!/usr/bin/env python3
"""Write the seeded analytic pyramid as an ONNX graph plus JSON sidecar.

Produces the same file pair the real backbone exporter emits, so the
graph-execution path can be exercised without any pretrained weights:

    python scripts/export_analytic_backend.py --seed 0 --out backends/analytic
    favor score --ref a.y4m --dist b.y4m --backend backends/analytic/analytic.json
"""

import argparse
from pathlib import Path

from favor.backend import save_analytic_onnx


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    graph = out / "analytic.onnx"
    sidecar = out / "analytic.json"
    save_analytic_onnx(args.seed, graph, sidecar)
    print(f"wrote {graph}")
    print(f"wrote {sidecar}")


if __name__ == "__main__":
    main()
