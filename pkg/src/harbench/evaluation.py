"""Leave-one-user-out evaluation and the window-size x overlap sweep.

Every (test user, window size, overlap, mode) cell is an independent job;
finished cells are persisted as JSON so an interrupted sweep resumes without
recomputation. Reports are plain CSV: a long-form per-activity table, one
accuracy heat map per (user, mode), and a cross-user summary.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .dataset import PROTOCOL_ACTIVITIES
from .ensemble import Ensemble, LearnerParams
from .features import N_FEATURES, extract_stream
from .windowing import DEFAULT_PURITY, WindowConfig, labeled_windows

STUDY_WINDOWS = tuple(range(100, 1001, 100))
STUDY_OVERLAPS = tuple(round(0.1 * i, 1) for i in range(10))
SINGLE_ACTIVITY_USER = 9  # rope-jumping-only subject, skews cross-user averages


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class Fold:
    test_user: int
    train_users: tuple

    def __post_init__(self):
        if self.test_user in self.train_users:
            raise EvaluationError("test user leaked into training set")


@dataclass
class FoldResult:
    user: int
    window_size: int
    overlap: float
    mode: str
    n_windows: int
    n_correct: int
    per_activity_windows: dict  # activity -> window count
    per_activity_correct: dict
    self_updates: int = 0
    empty: bool = False  # no test windows at this configuration

    @property
    def accuracy(self):
        if self.empty or self.n_windows == 0:
            return None
        return self.n_correct / self.n_windows

    def per_activity_accuracy(self):
        return {a: (self.per_activity_correct[a] / n if n else None)
                for a, n in self.per_activity_windows.items()}

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["per_activity_windows"] = {int(k): v for k, v
                                     in d["per_activity_windows"].items()}
        d["per_activity_correct"] = {int(k): v for k, v
                                     in d["per_activity_correct"].items()}
        return cls(**d)


def louo_split(streams) -> list:
    """One fold per user: that user tests, all others train."""
    users = sorted(s.user_id for s in streams)
    if len(users) != len(set(users)):
        raise EvaluationError("duplicate user ids")
    if len(users) < 2:
        raise EvaluationError("leave-one-user-out needs at least 2 users")
    return [Fold(test_user=u,
                 train_users=tuple(v for v in users if v != u))
            for u in users]


def pipeline_instances(stream, config, purity=DEFAULT_PURITY,
                       valid_labels=PROTOCOL_ACTIVITIES):
    """Segment, label and featurize one stream in order."""
    return extract_stream(labeled_windows(stream, config, purity, valid_labels))


def evaluate_fold(streams_by_user, fold, config, mode,
                  params=None, purity=DEFAULT_PURITY,
                  valid_labels=PROTOCOL_ACTIVITIES, return_audit=False):
    """Train on the fold's training users, run the test user online."""
    train_instances = []
    for user in fold.train_users:
        for fv in pipeline_instances(streams_by_user[user], config, purity,
                                     valid_labels):
            if fv.user_id == fold.test_user:
                raise EvaluationError("test-user instance in training data")
            train_instances.append(fv)
    test_instances = pipeline_instances(streams_by_user[fold.test_user],
                                        config, purity, valid_labels)

    result = FoldResult(user=fold.test_user, window_size=config.window_size,
                        overlap=config.overlap, mode=mode,
                        n_windows=len(test_instances), n_correct=0,
                        per_activity_windows={a: 0 for a in valid_labels},
                        per_activity_correct={a: 0 for a in valid_labels})
    if not test_instances:
        result.empty = True
        return (result, []) if return_audit else result

    model = Ensemble(valid_labels, n_features=N_FEATURES, params=params)
    model.train_offline(train_instances)
    predictions, audit = model.run_online(test_instances, mode)
    for fv, pred in zip(test_instances, predictions):
        result.per_activity_windows[fv.label] += 1
        if pred.label == fv.label:
            result.n_correct += 1
            result.per_activity_correct[fv.label] += 1
    result.self_updates = model.self_updates
    return (result, audit) if return_audit else result


# ---------------------------------------------------------------------------
# Sweep with per-cell persistence


def _cell_name(user, window_size, overlap, mode, seed):
    return f"u{user}_w{window_size}_o{overlap:.1f}_{mode}_s{seed}.json"


def _run_cell(args):
    streams_by_user, fold, window_size, overlap, mode, params, purity, \
        valid_labels = args
    config = WindowConfig(window_size, overlap)
    return evaluate_fold(streams_by_user, fold, config, mode, params, purity,
                         valid_labels)


def sweep(streams, windows, overlaps, modes, seed, out_dir,
          params=None, purity=DEFAULT_PURITY,
          valid_labels=PROTOCOL_ACTIVITIES, workers=1, resume=True,
          progress=None):
    """Evaluate the full (user x window x overlap x mode) grid.

    Completed cells live in out_dir/cells/ and are skipped on resume.
    Deterministic given (inputs, seed); single-worker runs are byte-stable.
    """
    streams_by_user = {s.user_id: s for s in streams}
    folds = {f.test_user: f for f in louo_split(streams)}
    cell_dir = os.path.join(out_dir, "cells")
    os.makedirs(cell_dir, exist_ok=True)

    jobs = []
    results = []
    for user in sorted(folds):
        for w in windows:
            for o in overlaps:
                for mode in modes:
                    path = os.path.join(cell_dir,
                                        _cell_name(user, w, o, mode, seed))
                    if resume and os.path.exists(path):
                        with open(path) as fh:
                            results.append(FoldResult.from_dict(json.load(fh)))
                        continue
                    jobs.append((path, (streams_by_user, folds[user], w, o,
                                        mode, params, purity, valid_labels)))

    def finish(path, result):
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(result.to_dict(), fh, sort_keys=True)
        os.replace(tmp, path)
        results.append(result)
        if progress:
            progress(result)

    if workers > 1 and jobs:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (path, _), result in zip(jobs, pool.map(_run_cell,
                                                        [a for _, a in jobs])):
                finish(path, result)
    else:
        for path, args in jobs:
            finish(path, _run_cell(args))

    results.sort(key=lambda r: (r.user, r.window_size, r.overlap, r.mode))
    return results


# ---------------------------------------------------------------------------
# Reports


def _fmt(value):
    return "" if value is None else repr(value)


def emit_reports(results, out_dir, include_single_activity_user=False,
                 valid_labels=PROTOCOL_ACTIVITIES):
    """Write long.csv, per-(user, mode) heat maps, and summary.csv.

    Missing cells (no test windows) are emitted as empty fields, never 0.
    Returns the list of written paths.
    """
    if not results:
        raise EvaluationError("no results to report")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    long_path = os.path.join(out_dir, "long.csv")
    try:
        with open(long_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user", "activity", "window_size", "overlap",
                             "mode", "n_windows", "accuracy"])
            for r in results:
                per_acc = r.per_activity_accuracy()
                for a in valid_labels:
                    n = r.per_activity_windows.get(a, 0)
                    writer.writerow([r.user, a, r.window_size, r.overlap,
                                     r.mode, n, _fmt(per_acc.get(a))])
    except OSError as exc:
        raise EvaluationError(f"cannot write {long_path}: {exc}") from exc
    written.append(long_path)

    windows = sorted({r.window_size for r in results})
    overlaps = sorted({r.overlap for r in results})
    cells = {(r.user, r.mode, r.window_size, r.overlap): r for r in results}
    for user in sorted({r.user for r in results}):
        for mode in sorted({r.mode for r in results}):
            rows = [["window_size"] + [f"o={o}" for o in overlaps]]
            any_cell = False
            for w in windows:
                row = [w]
                for o in overlaps:
                    r = cells.get((user, mode, w, o))
                    row.append(_fmt(r.accuracy if r else None))
                    any_cell = any_cell or r is not None
                rows.append(row)
            if not any_cell:
                continue
            path = os.path.join(out_dir, f"heatmap_user{user}_{mode}.csv")
            with open(path, "w", newline="") as fh:
                csv.writer(fh).writerows(rows)
            written.append(path)

    summary_path = os.path.join(out_dir, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "window_size", "overlap", "n_users",
                         "mean_accuracy", "var_accuracy",
                         "weighted_mean_accuracy"])
        for mode in sorted({r.mode for r in results}):
            for w in windows:
                for o in overlaps:
                    group = [r for r in results
                             if r.mode == mode and r.window_size == w
                             and r.overlap == o and r.accuracy is not None
                             and (include_single_activity_user
                                  or r.user != SINGLE_ACTIVITY_USER)]
                    if not group:
                        writer.writerow([mode, w, o, 0, "", "", ""])
                        continue
                    accs = np.array([r.accuracy for r in group])
                    weighted = (sum(r.n_correct for r in group)
                                / sum(r.n_windows for r in group))
                    writer.writerow([mode, w, o, len(group),
                                     repr(float(accs.mean())),
                                     repr(float(accs.var())),
                                     repr(float(weighted))])
    written.append(summary_path)
    return written
