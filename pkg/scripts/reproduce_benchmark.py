#!/usr/bin/env python3
"""End-to-end benchmark harness over a locally held video corpus.

Scores every manifest pair, joins predictions with a MOS CSV, and writes the
grouped correlation report. Results depend on the corpus and the exported
backbone supplied by the user; with the published 3,240-clip face-video
corpus and its trained backbone the overall SRCC is expected near 0.906.

    python scripts/reproduce_benchmark.py \
        --manifest corpus_manifest.csv --mos mos.csv \
        --backend backbone/manifest.json --out report.json

Manifest columns: video_id,ref_path,dist_path[,codec,level]; MOS columns:
video_id,mos[,std,n].
"""

import argparse
import csv
import sys
from pathlib import Path

from favor.cli import _backend_factory
from favor.evaluate import EvalRecord, evaluate
from favor.ingest import load_video
from favor.pipeline import dumps_fixed, score_pair
from favor.pooling import MemoryParams


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--mos", required=True)
    parser.add_argument("--backend", required=True)
    parser.add_argument("--group-by", default="codec")
    parser.add_argument("--l", type=int, default=4)
    parser.add_argument("--gamma", type=float, default=0.1)
    parser.add_argument("--jobs", type=int, default=4)
    parser.add_argument("--out", default="report.json")
    parser.add_argument("--scores-out", help="optional CSV of per-video predictions")
    args = parser.parse_args()

    factory = _backend_factory(args.backend)
    mem = MemoryParams(l=args.l, gamma=args.gamma)

    mos_by_video = {}
    with open(args.mos, newline="") as fh:
        for row in csv.DictReader(fh):
            mos_by_video[row["video_id"]] = float(row["mos"])

    base = Path(args.manifest).parent
    records = []
    with open(args.manifest, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for idx, row in enumerate(rows, start=1):
        ref = load_video(base / row["ref_path"] if not Path(row["ref_path"]).is_absolute() else row["ref_path"])
        dist = load_video(base / row["dist_path"] if not Path(row["dist_path"]).is_absolute() else row["dist_path"])
        result = score_pair(
            ref, dist, backend_factory=factory, mem_params=mem, jobs=args.jobs
        )
        records.append(
            EvalRecord(
                row["video_id"],
                row.get("codec", ""),
                row.get("level", ""),
                result.video_score,
                mos_by_video[row["video_id"]],
            )
        )
        print(f"[{idx}/{len(rows)}] {row['video_id']}: {result.video_score:.6f}", file=sys.stderr)

    if args.scores_out:
        with open(args.scores_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["video_id", "codec", "level", "pred", "mos"])
            for r in records:
                writer.writerow([r.video_id, r.codec, r.level, f"{r.pred:.6f}", f"{r.mos:.6f}"])

    group_by = tuple(g for g in args.group_by.split(",") if g)
    report = evaluate(records, group_by)
    Path(args.out).write_text(dumps_fixed(report) + "\n")
    overall = report["overall"]
    print(
        f"overall: n={overall['n']} plcc={overall['plcc']:.4f} "
        f"srcc={overall['srcc']:.4f} krcc={overall['krcc']:.4f} rmse={overall['rmse']:.4f}"
    )


if __name__ == "__main__":
    main()
