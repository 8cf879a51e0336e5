"""Subjective-rating processing: per-subject Z-scores, rescaling, MOS.

Raw 1..5 ratings are standardized per subject (sample std over that
subject's ratings), mapped linearly to a nominal [0, 100] scale via
100*(z+3)/6 without clamping, and averaged per video. The per-video std is
the sample (N-1) standard deviation of the rescaled scores.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateSubject, InsufficientRatings, SchemaError


@dataclass
class RatingsMatrix:
    """Sparse subject x video ratings, stored as (subject, video, score) rows."""

    rows: list  # list of (subject_id, video_id, float score)

    def subjects(self) -> dict:
        out: dict = {}
        for subject, video, score in self.rows:
            out.setdefault(subject, []).append((video, score))
        return out

    def videos(self) -> list:
        seen = {}
        for _, video, _ in self.rows:
            seen.setdefault(video, None)
        return sorted(seen)


@dataclass
class MosResult:
    """Per-video MOS, std, and rating counts, keyed by video id."""

    omega: dict
    sigma: dict
    counts: dict

    def videos(self) -> list:
        return sorted(self.omega)


def load_ratings_csv(path, subjects: set | None = None) -> RatingsMatrix:
    """Read `subject_id,video_id,score` rows; optionally keep only listed subjects."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != [
            "subject_id",
            "video_id",
            "score",
        ]:
            raise SchemaError("expected header subject_id,video_id,score", row=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 3:
                raise SchemaError("expected 3 columns", row=lineno)
            try:
                score = float(row[2])
            except ValueError as exc:
                raise SchemaError(f"bad score {row[2]!r}", row=lineno) from exc
            if subjects is not None and row[0] not in subjects:
                continue
            rows.append((row[0], row[1], score))
    return RatingsMatrix(rows)


def zscore(matrix: RatingsMatrix) -> dict:
    """Per-entry Z-scores keyed (subject_id, video_id).

    Each subject's mean and sample std are taken over all their ratings.
    """
    out = {}
    for subject, pairs in matrix.subjects().items():
        scores = np.asarray([s for _, s in pairs], dtype=np.float64)
        if scores.size < 2:
            raise DegenerateSubject(subject, "fewer than 2 ratings")
        mu = scores.mean()
        delta = scores.std(ddof=1)
        if delta == 0.0:
            raise DegenerateSubject(subject)
        for video, score in pairs:
            out[(subject, video)] = (score - mu) / delta
    return out


def rescale(z: float) -> float:
    """Linear map of a Z-score onto the nominal [0, 100] scale (no clamping)."""
    return 100.0 * (z + 3.0) / 6.0


def mos(zscores: dict) -> MosResult:
    """Aggregate rescaled Z-scores into per-video MOS and sample std."""
    per_video: dict = {}
    for (_, video), z in zscores.items():
        per_video.setdefault(video, []).append(rescale(z))
    if not per_video:
        raise InsufficientRatings("no ratings present")
    omega, sigma, counts = {}, {}, {}
    for video, values in per_video.items():
        arr = np.asarray(values, dtype=np.float64)
        omega[video] = float(arr.mean())
        sigma[video] = float(arr.std(ddof=1)) if arr.size >= 2 else float("nan")
        counts[video] = int(arr.size)
    return MosResult(omega, sigma, counts)


def compute_mos(matrix: RatingsMatrix) -> MosResult:
    return mos(zscore(matrix))


def write_mos_csv(result: MosResult, path) -> None:
    """Emit `video_id,mos,std,n` sorted by video id, floats at 6 decimals."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["video_id", "mos", "std", "n"])
        for video in result.videos():
            writer.writerow(
                [
                    video,
                    f"{result.omega[video]:.6f}",
                    f"{result.sigma[video]:.6f}",
                    result.counts[video],
                ]
            )
