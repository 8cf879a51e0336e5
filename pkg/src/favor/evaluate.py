"""Benchmark harness: logistic remap, correlation metrics, grouped reports.

Before PLCC/RMSE, predictions are remapped through the five-parameter
monotone curve

    f(x) = b1 * (1/2 - 1/(1 + exp(b2*(x - b3)))) + b4*x + b5

fitted by least squares with a derivative-free simplex. SRCC uses average
ranks for ties; KRCC is the tie-corrected tau-b. Grouped evaluation fits the
remap per group independently.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInput, SchemaError

logger = logging.getLogger(__name__)

MIN_GROUP_SIZE = 5
_MAX_ITER = 5000
_TOL = 1e-10
_RESTARTS = 3


@dataclass
class FitParams:
    beta: np.ndarray
    residual_rmse: float
    iterations: int
    converged: bool


@dataclass
class EvalRecord:
    video_id: str
    codec: str
    level: str
    pred: float
    mos: float


def logistic(beta, x):
    beta = np.asarray(beta, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    u = np.clip(beta[1] * (x - beta[2]), -500.0, 500.0)
    return beta[0] * (0.5 - 1.0 / (1.0 + np.exp(u))) + beta[3] * x + beta[4]


def _sse(beta, x, y):
    r = logistic(beta, x) - y
    return float(np.dot(r, r))


def fit_logistic(x, y) -> FitParams:
    """Least-squares fit of the 5-parameter remap; deterministic.

    Simplex search (max 5000 iterations, tolerance 1e-10) from a standard
    initialization plus three perturbed restarts; the returned parameters
    are never worse than the identity or constant-mean maps.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 5:
        raise DegenerateInput(f"need >= 5 paired points, got {x.size}")
    if np.ptp(x) == 0.0:
        raise DegenerateInput("predictions are all equal")

    span = float(np.ptp(y))
    steep = 4.0 / float(x.std())
    mid = float(np.median(x))
    base = np.array([span, steep, mid, 0.0, float(y.mean())])
    slope, intercept = np.polyfit(x, y, 1)
    starts = [base, np.array([0.0, steep, mid, slope, intercept])]
    rng = np.random.default_rng(0)
    for _ in range(_RESTARTS - 1):
        starts.append(base * rng.normal(1.0, 0.25, size=5) + rng.normal(0.0, 0.1, size=5))

    best_beta, best_sse = None, np.inf
    best_iters, best_ok = 0, False
    for start in starts:
        res = minimize(
            _sse,
            start,
            args=(x, y),
            method="Nelder-Mead",
            options={
                "maxiter": _MAX_ITER,
                "xatol": _TOL,
                "fatol": _TOL,
                "adaptive": True,
            },
        )
        if res.fun < best_sse:
            best_beta, best_sse = res.x, float(res.fun)
            best_iters, best_ok = int(res.nit), bool(res.success)

    # Floor candidates keep the fit no worse than trivial maps.
    for cand in (
        np.array([0.0, 1.0, mid, 1.0, 0.0]),  # identity
        np.array([0.0, 1.0, mid, 0.0, float(y.mean())]),  # constant mean
    ):
        sse = _sse(cand, x, y)
        if sse < best_sse:
            best_beta, best_sse = cand, sse
            best_iters, best_ok = 0, True

    return FitParams(
        beta=np.asarray(best_beta, dtype=np.float64),
        residual_rmse=float(np.sqrt(best_sse / x.size)),
        iterations=best_iters,
        converged=best_ok,
    )


# ---------------------------------------------------------------------------
# correlation metrics
# ---------------------------------------------------------------------------

def _check_pair(x, y, min_n=2):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise DegenerateInput("length mismatch")
    if x.size < min_n:
        raise DegenerateInput(f"need >= {min_n} points, got {x.size}")
    return x, y


def average_ranks(v) -> np.ndarray:
    """1-based ranks, ties receiving the mean of their covered positions."""
    v = np.asarray(v, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def plcc(x, y) -> float:
    x, y = _check_pair(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    den = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if den == 0.0:
        raise DegenerateInput("zero variance input")
    return float(np.dot(xc, yc) / den)


def srcc(x, y) -> float:
    x, y = _check_pair(x, y)
    return plcc(average_ranks(x), average_ranks(y))


def krcc(x, y) -> float:
    """Kendall tau-b via pairwise sign comparison with tie correction."""
    x, y = _check_pair(x, y)
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(x.size, k=1)
    sx, sy = dx[iu], dy[iu]
    concordance = float(np.dot(sx, sy))
    n0 = sx.size
    tx = n0 - int(np.count_nonzero(sx))
    ty = n0 - int(np.count_nonzero(sy))
    den = np.sqrt(float(n0 - tx) * float(n0 - ty))
    if den == 0.0:
        raise DegenerateInput("zero variance input")
    return float(concordance / den)


def rmse(x, y) -> float:
    x, y = _check_pair(x, y, min_n=1)
    return float(np.sqrt(np.mean((x - y) ** 2)))


# ---------------------------------------------------------------------------
# grouped evaluation
# ---------------------------------------------------------------------------

def _metrics_block(preds, targets) -> dict:
    fit = fit_logistic(preds, targets)
    remapped = logistic(fit.beta, preds)
    return {
        "n": int(len(preds)),
        "plcc": plcc(remapped, targets),
        "srcc": srcc(preds, targets),
        "krcc": krcc(preds, targets),
        "rmse": rmse(remapped, targets),
        "beta": [float(b) for b in fit.beta],
        "fit_iterations": fit.iterations,
        "fit_converged": fit.converged,
    }


def evaluate(records, group_by=()) -> dict:
    """Per-group and overall correlation report.

    group_by names record fields (codec, level). Groups smaller than
    MIN_GROUP_SIZE are skipped with a warning.
    """
    records = list(records)
    if len(records) < MIN_GROUP_SIZE:
        raise DegenerateInput(
            f"need >= {MIN_GROUP_SIZE} records, got {len(records)}"
        )
    preds = np.asarray([r.pred for r in records], dtype=np.float64)
    targets = np.asarray([r.mos for r in records], dtype=np.float64)
    report = {"overall": _metrics_block(preds, targets), "groups": {}, "skipped_groups": []}

    if group_by:
        keys = {}
        for idx, record in enumerate(records):
            key = "/".join(str(getattr(record, g)) for g in group_by)
            keys.setdefault(key, []).append(idx)
        for key in sorted(keys):
            idxs = keys[key]
            if len(idxs) < MIN_GROUP_SIZE:
                logger.warning(
                    "group %s has %d records (< %d), skipped", key, len(idxs), MIN_GROUP_SIZE
                )
                report["skipped_groups"].append(key)
                continue
            report["groups"][key] = _metrics_block(preds[idxs], targets[idxs])
    return report


def load_records_csv(path) -> list:
    """Read `video_id,codec,level,pred,mos` rows."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["video_id", "codec", "level", "pred", "mos"]
        if header is None or [h.strip().lower() for h in header[:5]] != expected:
            raise SchemaError(f"expected header {','.join(expected)}", row=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 5:
                raise SchemaError("expected 5 columns", row=lineno)
            try:
                pred, target = float(row[3]), float(row[4])
            except ValueError as exc:
                raise SchemaError(f"bad numeric value in {row!r}", row=lineno) from exc
            records.append(EvalRecord(row[0], row[1], row[2], pred, target))
    return records
