"""Command-line interface.

Commands: score (one ref/dist pair), batch (manifest of pairs), mos
(ratings CSV -> MOS CSV), eval (prediction CSV -> correlation report), pool
(re-pool a stored score series). The default backend comes from the
FAVOR_BACKEND environment variable; `--backend analytic[:seed]` selects the
self-contained analytic pyramid. Y4M inputs without a colorspace tag are
treated as BT.601 limited-range C420.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .backend import BackendConfig, analytic_backend, load_backend
from .errors import FavorError, SchemaError
from .evaluate import evaluate, load_records_csv
from .ingest import load_video
from .mos import compute_mos, load_ratings_csv, write_mos_csv
from .pipeline import METRICS, MEMORY_POOL, dumps_fixed, pool_series, score_pair
from .pooling import POOL_STRATEGIES, FrameScoreSeries, MemoryParams
from .quality import SimilarityWeights

BACKEND_ENV = "FAVOR_BACKEND"


def _backend_factory(spec: str):
    if spec.startswith("analytic"):
        _, _, seed = spec.partition(":")
        return lambda: analytic_backend(int(seed) if seed else 0)
    config = BackendConfig.from_json(spec)
    return lambda: load_backend(config)


def _parse_pool_args(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise SchemaError(f"--pool-arg expects k=v, got {pair!r}")
        try:
            out[key] = int(value)
        except ValueError:
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out


def _mem_params(args) -> MemoryParams:
    return MemoryParams(l=args.l, gamma=args.gamma, sigma_w=args.sigma_w)


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _add_scoring_options(sub) -> None:
    sub.add_argument("--metric", choices=METRICS, default="favor")
    sub.add_argument(
        "--backend",
        default=os.environ.get(BACKEND_ENV),
        help="backend sidecar JSON, or analytic[:seed] "
        f"(default from ${BACKEND_ENV})",
    )
    sub.add_argument("--weights", help="JSON file overriding per-channel weights")
    sub.add_argument("--pool", default=MEMORY_POOL, choices=(MEMORY_POOL,) + POOL_STRATEGIES)
    sub.add_argument("--pool-arg", action="append", metavar="K=V")
    sub.add_argument("--l", type=int, default=4, help="memory window length")
    sub.add_argument("--gamma", type=float, default=0.1, help="direct/indirect mix")
    sub.add_argument("--sigma-w", type=float, default=None, help="rank weight width")
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--out", help="output path (default stdout)")


def _resolve_scoring(args):
    factory = None
    weights = None
    if args.metric == "favor":
        if not args.backend:
            raise FavorError(
                f"--metric favor needs --backend or ${BACKEND_ENV} "
                "(use 'analytic' for the built-in test backend)"
            )
        factory = _backend_factory(args.backend)
        if args.weights:
            probe = factory()
            weights = SimilarityWeights.from_file(args.weights, probe.channel_counts)
            weights.validate()
    if args.jobs < 1:
        raise FavorError("--jobs must be >= 1")
    return factory, weights


def _cmd_score(args) -> int:
    factory, weights = _resolve_scoring(args)
    ref = load_video(args.ref, args.format)
    dist = load_video(args.dist, args.format)
    record = score_pair(
        ref,
        dist,
        metric=args.metric,
        backend_factory=factory,
        weights=weights,
        pool_name=args.pool,
        mem_params=_mem_params(args),
        pool_params=_parse_pool_args(args.pool_arg),
        jobs=args.jobs,
        video_id=args.video_id or "",
    )
    _write_out(dumps_fixed(record.as_dict()), args.out)
    return 0


def _cmd_batch(args) -> int:
    factory, weights = _resolve_scoring(args)
    rows = []
    with open(args.manifest, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["video_id", "ref_path", "dist_path"]
        if header is None or [h.strip().lower() for h in header[:3]] != expected:
            raise SchemaError(f"expected header {','.join(expected)}", row=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 3:
                raise SchemaError("expected 3 columns", row=lineno)
            rows.append((row[0], row[1], row[2]))

    base = Path(args.manifest).parent
    records = []
    for video_id, ref_path, dist_path in rows:
        ref = load_video(_resolve(base, ref_path))
        dist = load_video(_resolve(base, dist_path))
        record = score_pair(
            ref,
            dist,
            metric=args.metric,
            backend_factory=factory,
            weights=weights,
            pool_name=args.pool,
            mem_params=_mem_params(args),
            pool_params=_parse_pool_args(args.pool_arg),
            jobs=args.jobs,
            video_id=video_id,
        )
        records.append(record.as_dict())
    _write_out(dumps_fixed(records), args.out)
    return 0


def _resolve(base: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def _cmd_mos(args) -> int:
    subjects = None
    if args.subjects:
        subjects = {
            line.strip()
            for line in Path(args.subjects).read_text().splitlines()
            if line.strip()
        }
    matrix = load_ratings_csv(args.ratings, subjects)
    result = compute_mos(matrix)
    write_mos_csv(result, args.out)
    return 0


def _cmd_eval(args) -> int:
    records = load_records_csv(args.records)
    group_by = tuple(g for g in (args.group_by or "").split(",") if g)
    for g in group_by:
        if g not in ("codec", "level"):
            raise SchemaError(f"--group-by accepts codec and/or level, got {g!r}")
    report = evaluate(records, group_by)
    _write_out(dumps_fixed(report), args.out)
    return 0


def _cmd_pool(args) -> int:
    doc = json.loads(Path(args.scores).read_text())
    if isinstance(doc, dict):
        raw = doc.get("per_frame_scores")
        video_id = doc.get("video_id", "")
        if raw is None:
            raise SchemaError("scores JSON lacks per_frame_scores")
    else:
        raw, video_id = doc, ""
    raw = [float(v) for v in raw]  # "inf"/"nan" strings parse as floats
    series, score = pool_series(
        FrameScoreSeries(raw).raw,
        args.pool,
        _mem_params(args),
        _parse_pool_args(args.pool_arg),
    )
    payload = {
        "video_id": args.video_id or video_id,
        "per_frame_scores": [float(v) for v in series.raw],
        "refined_scores": [float(v) for v in series.refined],
        "video_score": float(score),
    }
    _write_out(dumps_fixed(payload), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="favor", description="Full-reference quality assessment for face videos"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser(
        "score",
        help="score one reference/distorted pair",
        description="Score one pair. Y4M chroma is converted assuming BT.601 "
        "limited range when the stream header does not specify a colorspace.",
    )
    p_score.add_argument("--ref", required=True)
    p_score.add_argument("--dist", required=True)
    p_score.add_argument("--format", choices=("y4m", "frame-dir"), default=None)
    p_score.add_argument("--video-id", default=None)
    _add_scoring_options(p_score)
    p_score.set_defaults(fn=_cmd_score)

    p_batch = sub.add_parser("batch", help="score a CSV manifest of pairs")
    p_batch.add_argument("--manifest", required=True)
    _add_scoring_options(p_batch)
    p_batch.set_defaults(fn=_cmd_batch)

    p_mos = sub.add_parser("mos", help="ratings CSV -> MOS CSV")
    p_mos.add_argument("--ratings", required=True)
    p_mos.add_argument("--out", required=True)
    p_mos.add_argument("--subjects", help="keep only subject ids listed in this file")
    p_mos.set_defaults(fn=_cmd_mos)

    p_eval = sub.add_parser("eval", help="prediction CSV -> correlation report")
    p_eval.add_argument("--records", required=True)
    p_eval.add_argument("--group-by", default="")
    p_eval.add_argument("--out")
    p_eval.set_defaults(fn=_cmd_eval)

    p_pool = sub.add_parser("pool", help="re-pool a stored frame-score series")
    p_pool.add_argument("--scores", required=True, help="score record JSON or bare list")
    p_pool.add_argument("--pool", default=MEMORY_POOL, choices=(MEMORY_POOL,) + POOL_STRATEGIES)
    p_pool.add_argument("--pool-arg", action="append", metavar="K=V")
    p_pool.add_argument("--l", type=int, default=4)
    p_pool.add_argument("--gamma", type=float, default=0.1)
    p_pool.add_argument("--sigma-w", type=float, default=None)
    p_pool.add_argument("--video-id", default=None)
    p_pool.add_argument("--out")
    p_pool.set_defaults(fn=_cmd_pool)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FavorError as exc:
        print(f"favor: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"favor: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
