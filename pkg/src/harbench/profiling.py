"""Phase timing and energy estimation for a pipeline run.

Mirrors the three-phase breakdown used in the accuracy/energy trade-off
study: sampling (window instantiation), feature extraction and
classification. Energy comes from a pluggable phase->watts model, or from an
external power log (timestamp_seconds, watts CSV) integrated over the run.
Profiling must run single-threaded; do not overlap it with parallel sweep
jobs.
"""

from __future__ import annotations

import csv
import json
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import PROTOCOL_ACTIVITIES
from .ensemble import Ensemble
from .features import N_FEATURES, extract
from .windowing import DEFAULT_PURITY, label_window, segment

PHASES = ("sampling", "features", "classification")
_TIMER_RESOLUTION_WARN_NS = 1000  # warn above 1 us


class ProfilingError(Exception):
    pass


@dataclass
class TimingBreakdown:
    """Per-phase wall time in nanoseconds (medians over repetitions)."""
    sampling_ns: int
    feature_ns: int
    classification_ns: int
    n_windows: int
    window_size: int
    overlap: float
    repetitions: int
    n_correct: int = 0
    per_rep_total_ns: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def total_ns(self):
        return self.sampling_ns + self.feature_ns + self.classification_ns

    def seconds(self, phase):
        ns = {"sampling": self.sampling_ns, "features": self.feature_ns,
              "classification": self.classification_ns}[phase]
        return ns / 1e9


@dataclass(frozen=True)
class PowerModel:
    """Constant watts per phase; idle applies outside the measured region."""
    sampling_watts: float
    feature_watts: float
    classification_watts: float
    idle_watts: float = 0.0

    def __post_init__(self):
        for name in ("sampling_watts", "feature_watts",
                     "classification_watts", "idle_watts"):
            if getattr(self, name) < 0:
                raise ProfilingError(f"{name} must be >= 0")

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            cfg = json.load(fh)
        try:
            return cls(sampling_watts=float(cfg["sampling_watts"]),
                       feature_watts=float(cfg["feature_watts"]),
                       classification_watts=float(cfg["classification_watts"]),
                       idle_watts=float(cfg.get("idle_watts", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProfilingError(f"invalid power model {path}: {exc}") from exc


def _one_rep(train_instances, test_stream, config, mode, purity, valid_labels,
             params):
    model = Ensemble(valid_labels, n_features=N_FEATURES, params=params)
    model.train_offline(train_instances)

    t0 = time.perf_counter_ns()
    windows = []
    for cand in segment(test_stream, config):
        win = label_window(cand, purity, valid_labels)
        if win is not None:
            windows.append(win)
    t1 = time.perf_counter_ns()
    instances = [extract(w, i) for i, w in enumerate(windows)]
    t2 = time.perf_counter_ns()
    predictions = []
    for fv in instances:
        pred = model.classify(fv)
        if mode == "semi_supervised":
            model.self_update(fv, pred)
        predictions.append(pred)
    t3 = time.perf_counter_ns()
    n_correct = sum(1 for fv, p in zip(instances, predictions)
                    if p.label == fv.label)
    return t1 - t0, t2 - t1, t3 - t2, len(windows), n_correct


def timed_run(train_streams, test_stream, config, mode="supervised_frozen",
              purity=DEFAULT_PURITY, valid_labels=PROTOCOL_ACTIVITIES,
              params=None, repetitions=5) -> TimingBreakdown:
    """Median per-phase times for processing the test stream.

    Offline training is rebuilt per repetition but not timed; the measured
    region covers sampling, feature extraction and classification only.
    """
    if repetitions < 1:
        raise ProfilingError("repetitions must be >= 1")
    from .evaluation import pipeline_instances  # avoid import cycle at module load
    train_instances = []
    for stream in train_streams:
        train_instances.extend(
            pipeline_instances(stream, config, purity, valid_labels))

    warnings = []
    res = time.get_clock_info("perf_counter").resolution
    if res > _TIMER_RESOLUTION_WARN_NS / 1e9:
        warnings.append(f"timer resolution {res}s is coarser than 1us")

    reps = [_one_rep(train_instances, test_stream, config, mode, purity,
                     valid_labels, params) for _ in range(repetitions)]
    n_windows = reps[0][3]
    return TimingBreakdown(
        sampling_ns=int(statistics.median(r[0] for r in reps)),
        feature_ns=int(statistics.median(r[1] for r in reps)),
        classification_ns=int(statistics.median(r[2] for r in reps)),
        n_windows=n_windows,
        window_size=config.window_size,
        overlap=config.overlap,
        repetitions=repetitions,
        n_correct=reps[0][4],
        per_rep_total_ns=[r[0] + r[1] + r[2] for r in reps],
        warnings=warnings)


def estimate_energy(breakdown, power_model) -> float:
    """Joules under the phase-constant model: sum of watts x seconds."""
    return (power_model.sampling_watts * breakdown.seconds("sampling")
            + power_model.feature_watts * breakdown.seconds("features")
            + power_model.classification_watts
            * breakdown.seconds("classification"))


def read_power_log(path):
    """Load a (timestamp_seconds, watts) CSV; returns two float arrays."""
    ts, watts = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["timestamp_seconds", "watts"]:
            raise ProfilingError(f"unexpected power log header: {header}")
        for row in reader:
            ts.append(float(row[0]))
            watts.append(float(row[1]))
    return np.array(ts), np.array(watts)


def integrate_power_log(ts, watts, start, end) -> float:
    """Trapezoidal integral of logged watts over [start, end] seconds."""
    if start < ts[0] or end > ts[-1]:
        raise ProfilingError(
            f"power log [{ts[0]}, {ts[-1]}] does not cover run [{start}, {end}]")
    if (watts < 0).any():
        raise ProfilingError("negative watts in power log")
    grid = np.concatenate([[start], ts[(ts > start) & (ts < end)], [end]])
    return float(np.trapezoid(np.interp(grid, ts, watts), grid))


def emit_energy_heatmap(entries, path):
    """Write the (W, o) -> (joules, accuracy) trade-off grid as CSV.

    entries: iterable of dicts with window_size, overlap, joules, accuracy,
    n_windows.
    """
    entries = sorted(entries, key=lambda e: (e["window_size"], e["overlap"]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_size", "overlap", "joules", "accuracy",
                         "n_windows"])
        for e in entries:
            acc = e.get("accuracy")
            writer.writerow([e["window_size"], e["overlap"],
                             repr(float(e["joules"])),
                             "" if acc is None else repr(float(acc)),
                             e["n_windows"]])
    return path
