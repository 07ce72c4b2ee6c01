"""Benchmark methodology: target-grid ECDF, expected running time, and
learning-curve cross-validation.

ECDF aggregates over (run, target) pairs: at effort x it reports the
fraction of pairs whose running best reached the target within x.  ERT
charges failed runs their full budget and divides by the number of
successes.  Learning curves evaluate GP mean-absolute error across
training-set sizes under k-fold cross validation.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .gp import DOT_PRODUCT
from .gp import fit as gp_fit
from .gp import predict
from .graph import parse_smiles
from .runlog import RunLog
from .shingles import ShingleDictionary, sparse_encode
from . import graphcore

CALLS = "calls"
CPU_TIME = "cpuTime"

_AXIS_FIELD = {CALLS: "callIndex", CPU_TIME: "cpuTimeS"}


@dataclass(frozen=True)
class TargetGrid:
    lo: float = -10.0
    hi: float = -1.0
    step: float = 0.01

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if self.step <= 0:
            raise ValueError("need step > 0")

    def values(self) -> np.ndarray:
        count = int(round((self.hi - self.lo) / self.step)) + 1
        # snap to 9 decimals so accumulated float error cannot move a
        # target across an exactly-attained objective value
        return np.round(self.lo + self.step * np.arange(count), 9)


def _check_same_objective(logs):
    first = logs[0].header.get("objective")
    for log in logs[1:]:
        if log.header.get("objective") != first:
            raise ValueError("mixed-objective run logs")


def _effort_to_target(log: RunLog, targets: np.ndarray, axis: str):
    """Per-target effort at which the run's best first reaches it, else inf."""
    field = _AXIS_FIELD[axis]
    efforts = np.full(len(targets), math.inf)
    best = -math.inf
    for rec in log.records:
        if rec["bestSoFar"] <= best:
            continue
        hit = (targets <= rec["bestSoFar"]) & (targets > best)
        efforts[hit] = rec[field]
        best = rec["bestSoFar"]
    return efforts


def ecdf(logs, grid: TargetGrid, axis: str = CALLS, mixed_ok: bool = False):
    """Proportion of achieved (run, target) pairs versus effort.

    Returns a list of (effort, proportion) points, one per distinct
    effort at which any run recorded a call, nondecreasing in both
    coordinates and bounded by 1.
    """
    if not logs:
        raise ValueError("no run logs")
    if axis not in _AXIS_FIELD:
        raise ValueError("unknown axis %r" % (axis,))
    if not mixed_ok:
        _check_same_objective(logs)
    targets = grid.values()
    total = len(logs) * len(targets)
    hits = np.concatenate([_effort_to_target(log, targets, axis) for log in logs])
    field = _AXIS_FIELD[axis]
    xs = sorted({rec[field] for log in logs for rec in log.records})
    finite = np.sort(hits[np.isfinite(hits)])
    return [(x, float(np.searchsorted(finite, x, side="right")) / total)
            for x in xs]


NO_SUCCESS = "no success"


def ert(logs, target: float, axis: str = CALLS, mixed_ok: bool = False):
    """Expected running time to ``target``: mean effort with failed runs
    charged their full budget; NO_SUCCESS when nothing reached it."""
    if not logs:
        raise ValueError("no run logs")
    if axis not in _AXIS_FIELD:
        raise ValueError("unknown axis %r" % (axis,))
    if not mixed_ok:
        _check_same_objective(logs)
    field = _AXIS_FIELD[axis]
    successes = []
    total_effort = 0.0
    for log in logs:
        effort = None
        for rec in log.records:
            if rec["bestSoFar"] >= target:
                effort = rec[field]
                break
        if effort is None:
            # full-budget convention for failures
            if axis == CALLS:
                budget = log.header.get("config", {}).get("budget")
                effort = budget if budget else log.records[-1][field]
            else:
                effort = log.records[-1][field]
        else:
            successes.append(effort)
        total_effort += effort
    if not successes:
        return NO_SUCCESS
    return total_effort / len(successes)


def success_efforts(logs, target: float, axis: str = CALLS):
    """Efforts of the runs that reached ``target`` (for dispersion columns)."""
    field = _AXIS_FIELD[axis]
    out = []
    for log in logs:
        for rec in log.records:
            if rec["bestSoFar"] >= target:
                out.append(rec[field])
                break
    return out


def learning_curve(dataset, sizes, folds, spec, rng,
                   capacity: int = 2000, max_atoms: int = 9):
    """Mean absolute error of the GP versus training-set size.

    ``dataset`` is a list of (smiles, value).  The shingle dictionary is
    built over the full dataset first, so every fold sees the same
    columns.  For each size the folds each hold out their slice, the
    training molecules are drawn at random from the rest, and the MAE on
    the held-out fold is recorded; rows are (size, mean, std, min,
    median, max) over folds.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    n = len(dataset)
    fold_size = n // folds
    if max(sizes) + fold_size > n:
        raise ValueError("dataset of %d too small for size %d with %d folds"
                         % (n, max(sizes), folds))
    dct = ShingleDictionary(capacity)
    rows = []
    for smiles, _ in dataset:
        g = parse_smiles(smiles, graphcore.MAX_VERTICES)
        idx, cnt, _ = sparse_encode(g, dct, frozen=False)
        row = np.zeros(capacity)
        row[idx] = cnt
        rows.append(row)
    X_all = np.array(rows)
    if spec.family != DOT_PRODUCT:
        X_all = X_all / math.sqrt(capacity)
    y_all = np.array([v for _, v in dataset])

    order = rng.permutation(n)
    table = []
    for size in sizes:
        maes = []
        for f in range(folds):
            test = order[f * fold_size: (f + 1) * fold_size]
            pool = np.concatenate([order[: f * fold_size],
                                   order[(f + 1) * fold_size:]])
            train = rng.choice(pool, size=size, replace=False)
            model = gp_fit(X_all[train], y_all[train], spec, rng=f)
            preds = np.array([predict(model, X_all[i]).mean for i in test])
            maes.append(float(np.mean(np.abs(preds - y_all[test]))))
        maes = np.array(maes)
        table.append({"size": size,
                      "mae_mean": float(maes.mean()),
                      "mae_std": float(maes.std()),
                      "mae_min": float(maes.min()),
                      "mae_median": float(np.median(maes)),
                      "mae_max": float(maes.max())})
    return table


# ---------------------------------------------------------------------------
# CSV writers (reports are CSVs; plotting is out of scope)
# ---------------------------------------------------------------------------

def write_ecdf_csv(path, curves):
    """``curves`` maps method label -> list of (x, proportion)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "x", "proportion"])
        for label in sorted(curves):
            for x, p in curves[label]:
                w.writerow([label, x, p])


def write_ert_csv(path, rows):
    """Rows: dicts with label, target, ert, successes, runs, min/median/max."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "target", "ert", "successes", "runs",
                    "min", "median", "max"])
        for r in rows:
            w.writerow([r["label"], r["target"], r["ert"], r["successes"],
                        r["runs"], r["min"], r["median"], r["max"]])


def write_learning_curve_csv(path, table, folds):
    with open(path, "w", newline="") as fh:
        fh.write("# protocol: %d-folds cross validation\n" % folds)
        w = csv.writer(fh)
        w.writerow(["size", "mae_mean", "mae_std", "mae_min", "mae_median",
                    "mae_max"])
        for row in table:
            w.writerow([row["size"], row["mae_mean"], row["mae_std"],
                        row["mae_min"], row["mae_median"], row["mae_max"]])
