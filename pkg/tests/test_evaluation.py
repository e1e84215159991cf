import os

import numpy as np
import pytest

from harbench.ensemble import LearnerParams
from harbench.evaluation import (EvaluationError, Fold, FoldResult,
                                 SINGLE_ACTIVITY_USER, emit_reports,
                                 evaluate_fold, louo_split,
                                 pipeline_instances, sweep)
from harbench.windowing import WindowConfig

FAST = LearnerParams(knn_capacity=500, vfdt_grace_period=50)


def by_user(streams):
    return {s.user_id: s for s in streams}


def fold_for(streams, test_user):
    return next(f for f in louo_split(streams) if f.test_user == test_user)


class TestLouoSplit:
    def test_one_fold_per_user(self, small_streams):
        folds = louo_split(small_streams)
        assert [f.test_user for f in folds] == [1, 2, 3]
        for f in folds:
            assert f.test_user not in f.train_users
            assert len(f.train_users) == 2

    def test_needs_two_users(self, small_streams):
        with pytest.raises(EvaluationError):
            louo_split(small_streams[:1])

    def test_duplicate_users_rejected(self, small_streams):
        with pytest.raises(EvaluationError):
            louo_split([small_streams[0], small_streams[0]])

    def test_fold_leakage_guard(self):
        with pytest.raises(EvaluationError):
            Fold(test_user=1, train_users=(1, 2))


class TestFoldResult:
    def make(self, **kw):
        base = dict(user=1, window_size=100, overlap=0.5, mode="supervised_frozen",
                    n_windows=10, n_correct=7,
                    per_activity_windows={1: 6, 2: 4},
                    per_activity_correct={1: 5, 2: 2})
        base.update(kw)
        return FoldResult(**base)

    def test_accuracy(self):
        assert self.make().accuracy == 0.7

    def test_empty_accuracy_is_none(self):
        r = self.make(n_windows=0, n_correct=0, empty=True,
                      per_activity_windows={}, per_activity_correct={})
        assert r.accuracy is None

    def test_dict_round_trip_restores_int_keys(self):
        import json
        r = self.make()
        back = FoldResult.from_dict(json.loads(json.dumps(r.to_dict())))
        assert back == r
        assert all(isinstance(k, int) for k in back.per_activity_windows)


class TestEvaluateFold:
    def test_per_activity_counts_recompose_totals(self, small_streams, small_spec):
        result = evaluate_fold(by_user(small_streams),
                               fold_for(small_streams, 3),
                               WindowConfig(50, 0.5), "supervised_frozen",
                               params=FAST, valid_labels=small_spec.class_labels)
        assert sum(result.per_activity_windows.values()) == result.n_windows
        assert sum(result.per_activity_correct.values()) == result.n_correct
        assert result.n_windows > 0

    def test_frozen_mode_never_self_updates(self, small_streams, small_spec):
        result = evaluate_fold(by_user(small_streams),
                               fold_for(small_streams, 1),
                               WindowConfig(50, 0.0), "supervised_frozen",
                               params=FAST, valid_labels=small_spec.class_labels)
        assert result.self_updates == 0

    def test_audit_covers_every_test_window(self, small_streams, small_spec):
        result, audit = evaluate_fold(by_user(small_streams),
                                      fold_for(small_streams, 2),
                                      WindowConfig(50, 0.5), "semi_supervised",
                                      params=FAST,
                                      valid_labels=small_spec.class_labels,
                                      return_audit=True)
        assert len(audit) == result.n_windows
        assert sum(1 for rec in audit if rec.updated) == result.self_updates
        # the audit trail alone must reproduce the headline accuracy
        recount = sum(1 for rec in audit if rec.predicted_label == rec.true_label)
        assert recount == result.n_correct

    def test_window_longer_than_stream_is_empty(self, small_streams, small_spec):
        result = evaluate_fold(by_user(small_streams),
                               fold_for(small_streams, 1),
                               WindowConfig(10_000, 0.0), "supervised_frozen",
                               params=FAST, valid_labels=small_spec.class_labels)
        assert result.empty and result.accuracy is None

    def test_matches_manual_pipeline(self, small_streams, small_spec):
        # the fold's test instances are exactly the test user's pipeline output
        config = WindowConfig(50, 0.0)
        manual = pipeline_instances(small_streams[2], config,
                                    valid_labels=small_spec.class_labels)
        result = evaluate_fold(by_user(small_streams),
                               fold_for(small_streams, 3), config,
                               "supervised_frozen", params=FAST,
                               valid_labels=small_spec.class_labels)
        assert result.n_windows == len(manual)


class TestSweep:
    WINDOWS = [50]
    OVERLAPS = [0.0, 0.5]
    MODES = ["supervised_frozen", "semi_supervised"]

    def run(self, streams, labels, out, **kw):
        return sweep(streams, self.WINDOWS, self.OVERLAPS, self.MODES, seed=0,
                     out_dir=str(out), params=FAST, valid_labels=labels, **kw)

    def test_full_grid_of_cells(self, small_streams, small_spec, tmp_path):
        results = self.run(small_streams, small_spec.class_labels, tmp_path)
        assert len(results) == 3 * len(self.WINDOWS) * len(self.OVERLAPS) * 2
        assert len(os.listdir(tmp_path / "cells")) == len(results)

    def test_resume_skips_finished_cells(self, small_streams, small_spec,
                                         tmp_path):
        first = self.run(small_streams, small_spec.class_labels, tmp_path)
        recomputed = []
        again = self.run(small_streams, small_spec.class_labels, tmp_path,
                         resume=True, progress=recomputed.append)
        assert recomputed == []  # everything loaded from disk
        assert again == first

    def test_rerun_reports_byte_identical(self, small_streams, small_spec,
                                          tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        ra = self.run(small_streams, small_spec.class_labels, a)
        rb = self.run(small_streams, small_spec.class_labels, b)
        emit_reports(ra, str(a), valid_labels=small_spec.class_labels)
        emit_reports(rb, str(b), valid_labels=small_spec.class_labels)
        for name in ("long.csv", "summary.csv", "heatmap_user1_semi_supervised.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


def result_cell(user, w, o, mode, n, correct):
    return FoldResult(user=user, window_size=w, overlap=o, mode=mode,
                      n_windows=n, n_correct=correct,
                      per_activity_windows={1: n},
                      per_activity_correct={1: correct},
                      empty=n == 0)


class TestEmitReports:
    def test_empty_results_rejected(self, tmp_path):
        with pytest.raises(EvaluationError):
            emit_reports([], str(tmp_path))

    def test_heatmap_shape_and_missing_cells(self, tmp_path):
        results = [result_cell(1, 100, 0.0, "supervised_frozen", 10, 8),
                   result_cell(1, 200, 0.5, "supervised_frozen", 10, 9),
                   result_cell(1, 200, 0.0, "supervised_frozen", 0, 0)]
        emit_reports(results, str(tmp_path), valid_labels=(1,))
        lines = (tmp_path / "heatmap_user1_supervised_frozen.csv").read_text() \
            .splitlines()
        assert lines[0] == "window_size,o=0.0,o=0.5"
        assert lines[1] == "100,0.8,"      # (100, 0.5) never ran -> empty
        assert lines[2] == "200,,0.9"      # (200, 0.0) empty cell -> empty, not 0
        assert len(lines) == 3

    def test_summary_recount_oracle(self, tmp_path):
        rng = np.random.default_rng(11)
        results = []
        for user in (1, 2, 3):
            n = int(rng.integers(50, 150))
            results.append(result_cell(user, 100, 0.0, "supervised_frozen", n,
                                       int(rng.integers(0, n + 1))))
        emit_reports(results, str(tmp_path), valid_labels=(1,))
        row = (tmp_path / "summary.csv").read_text().splitlines()[1].split(",")
        accs = [r.accuracy for r in results]
        assert float(row[4]) == pytest.approx(np.mean(accs), abs=1e-12)
        assert float(row[5]) == pytest.approx(np.var(accs), abs=1e-12)
        weighted = (sum(r.n_correct for r in results)
                    / sum(r.n_windows for r in results))
        assert float(row[6]) == pytest.approx(weighted, abs=1e-12)

    def test_single_activity_user_excluded_by_default(self, tmp_path):
        results = [result_cell(1, 100, 0.0, "supervised_frozen", 10, 10),
                   result_cell(SINGLE_ACTIVITY_USER, 100, 0.0,
                               "supervised_frozen", 10, 0)]
        emit_reports(results, str(tmp_path), valid_labels=(1,))
        row = (tmp_path / "summary.csv").read_text().splitlines()[1].split(",")
        assert row[3] == "1" and float(row[4]) == 1.0
        emit_reports(results, str(tmp_path), valid_labels=(1,),
                     include_single_activity_user=True)
        row = (tmp_path / "summary.csv").read_text().splitlines()[1].split(",")
        assert row[3] == "2" and float(row[4]) == 0.5

    def test_long_csv_rows(self, tmp_path):
        results = [result_cell(1, 100, 0.0, "supervised_frozen", 10, 8)]
        emit_reports(results, str(tmp_path), valid_labels=(1, 2))
        lines = (tmp_path / "long.csv").read_text().splitlines()
        assert lines[0] == ("user,activity,window_size,overlap,mode,"
                            "n_windows,accuracy")
        assert len(lines) == 3  # one row per (result, activity)
        assert lines[1].split(",")[-1] == "0.8"
        assert lines[2].split(",")[-2:] == ["0", ""]  # unseen activity
