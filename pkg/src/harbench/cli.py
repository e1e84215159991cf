"""Command-line entry point.

Subcommands: validate (dataset count check), sweep (full grid evaluation),
eval (single cell), profile (timing/energy grid), synth (write synthetic
streams). Exit codes: 0 ok, 2 invalid grid or arguments, 3 missing data,
4 unwritable output, 1 anything else.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import dataset, evaluation, profiling
from .dataset import (ACTIVITY_NAMES, PROTOCOL_ACTIVITIES, REFERENCE_COUNTS,
                      SyntheticSpec, TOTAL_RAW_SAMPLES, DatasetError)
from .ensemble import LearnerParams, write_audit_csv
from .evaluation import STUDY_OVERLAPS, STUDY_WINDOWS
from .windowing import DEFAULT_PURITY, WindowConfig, WindowingError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAD_GRID = 2
EXIT_MISSING_DATA = 3
EXIT_UNWRITABLE = 4

DATA_DIR_ENV = "HARBENCH_DATA_DIR"


class CliError(Exception):
    def __init__(self, message, code=EXIT_ERROR):
        super().__init__(message)
        self.code = code


def _subject_path(data_dir, user):
    candidates = [os.path.join(data_dir, f"subject10{user}.dat"),
                  os.path.join(data_dir, "Protocol", f"subject10{user}.dat")]
    for path in candidates:
        if os.path.exists(path):
            return path
    return None


def load_pamap2(data_dir, users=range(1, 10), require_all=False):
    """Parse and protocol-filter available subject files."""
    if not data_dir or not os.path.isdir(data_dir):
        raise CliError(f"data directory not found: {data_dir!r}",
                       EXIT_MISSING_DATA)
    streams, missing = [], []
    for user in users:
        path = _subject_path(data_dir, user)
        if path is None:
            missing.append(user)
            continue
        raw = dataset.parse_subject_file(path, user)
        streams.append((raw, dataset.filter_protocol_activities(raw)))
    if missing and require_all:
        raise CliError(f"missing subject files for users {missing}",
                       EXIT_MISSING_DATA)
    if not streams:
        raise CliError(f"no subject files found under {data_dir}",
                       EXIT_MISSING_DATA)
    return streams, missing


def _load_streams(args):
    """Streams plus the class set, from PAMAP2 or a synthetic spec."""
    if args.synthetic:
        spec = SyntheticSpec.from_file(args.synthetic)
        return dataset.generate_synthetic(spec), spec.class_labels
    data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV)
    pairs, missing = load_pamap2(data_dir)
    if missing:
        print(f"warning: missing subject files for users {missing}",
              file=sys.stderr)
    return [filtered for _, filtered in pairs], PROTOCOL_ACTIVITIES


def _parse_grid(args):
    if args.grid == "study":
        windows, overlaps = list(STUDY_WINDOWS), list(STUDY_OVERLAPS)
    else:
        try:
            windows = [int(w) for w in args.windows.split(",")]
            overlaps = [float(o) for o in args.overlaps.split(",")]
        except (AttributeError, ValueError) as exc:
            raise CliError(f"invalid grid: {exc}", EXIT_BAD_GRID) from exc
    if not windows or not overlaps:
        raise CliError("empty grid", EXIT_BAD_GRID)
    for w in windows:
        if w < 2:
            raise CliError(f"window size {w} must be >= 2", EXIT_BAD_GRID)
    for o in overlaps:
        if not 0.0 <= o < 1.0:
            raise CliError(f"overlap {o} must be in [0, 1)", EXIT_BAD_GRID)
    if not args.allow_any_grid:
        bad_w = [w for w in windows if w not in STUDY_WINDOWS]
        bad_o = [o for o in overlaps if round(o, 1) not in STUDY_OVERLAPS
                 or round(o, 1) != o]
        if bad_w or bad_o:
            raise CliError(
                f"grid values outside the study bounds (windows {bad_w}, "
                f"overlaps {bad_o}); pass --allow-any-grid to override",
                EXIT_BAD_GRID)
    return windows, overlaps


def _modes(arg):
    return {"sup": ["supervised_frozen"],
            "semi": ["semi_supervised"],
            "both": ["supervised_frozen", "semi_supervised"]}[arg]


def _learner_params(args):
    return LearnerParams(k=args.k, knn_capacity=args.knn_capacity,
                         vfdt_delta=args.delta,
                         vfdt_tie_threshold=args.tie_threshold,
                         vfdt_grace_period=args.grace_period,
                         confidence_threshold=args.theta)


def _ensure_out(path):
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write_probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise CliError(f"output directory not writable: {path}: {exc}",
                       EXIT_UNWRITABLE) from exc


def cmd_validate(args):
    data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV)
    pairs, missing = load_pamap2(data_dir)
    for user in missing:
        print(f"user {user}: MISSING subject file")
    ok = not missing
    total_raw = 0
    for raw, filtered in pairs:
        total_raw += len(raw)
        counts = dataset.sample_counts(filtered)
        expected = REFERENCE_COUNTS[raw.user_id]
        diffs = {a: (counts[a], expected[a]) for a in PROTOCOL_ACTIVITIES
                 if counts[a] != expected[a]}
        status = "PASS" if not diffs else "FAIL"
        ok = ok and not diffs
        print(f"user {raw.user_id}: raw={len(raw)} filtered={len(filtered)} "
              f"{status}")
        for a, (got, want) in sorted(diffs.items()):
            print(f"  {ACTIVITY_NAMES[a]}: got {got}, expected {want}")
    print(f"total raw samples: {total_raw} "
          f"(reference {TOTAL_RAW_SAMPLES})")
    if total_raw != TOTAL_RAW_SAMPLES:
        ok = False
    print("RESULT:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_ERROR


def cmd_sweep(args):
    streams, classes = _load_streams(args)
    windows, overlaps = _parse_grid(args)
    _ensure_out(args.out)
    results = evaluation.sweep(
        streams, windows, overlaps, _modes(args.mode), seed=args.seed,
        out_dir=args.out, params=_learner_params(args), purity=args.purity,
        valid_labels=classes, workers=args.workers, resume=args.resume,
        progress=(lambda r: print(
            f"user {r.user} W={r.window_size} o={r.overlap} {r.mode}: "
            f"acc={'n/a' if r.accuracy is None else f'{r.accuracy:.4f}'}"))
        if args.verbose else None)
    paths = evaluation.emit_reports(results, args.out,
                                    include_single_activity_user=args.include_user9,
                                    valid_labels=classes)
    for p in paths:
        print("wrote", p)
    return EXIT_OK


def cmd_eval(args):
    streams, classes = _load_streams(args)
    config = WindowConfig(args.window, args.overlap)
    folds = {f.test_user: f for f in evaluation.louo_split(streams)}
    if args.user not in folds:
        raise CliError(f"user {args.user} not in data", EXIT_MISSING_DATA)
    streams_by_user = {s.user_id: s for s in streams}
    result, audit = evaluation.evaluate_fold(
        streams_by_user, folds[args.user], config, _modes(args.mode)[0],
        params=_learner_params(args), purity=args.purity,
        valid_labels=classes, return_audit=True)
    acc = result.accuracy
    print(f"user {args.user} W={args.window} o={args.overlap} {result.mode}: "
          f"windows={result.n_windows} "
          f"accuracy={'n/a' if acc is None else f'{acc:.4f}'} "
          f"self_updates={result.self_updates}")
    for a, pa in sorted(result.per_activity_accuracy().items()):
        n = result.per_activity_windows[a]
        if n:
            name = ACTIVITY_NAMES.get(a, str(a))
            print(f"  {name}: n={n} accuracy={pa:.4f}")
    if args.out:
        _ensure_out(args.out)
        path = os.path.join(args.out, f"audit_u{args.user}.csv")
        write_audit_csv(audit, path)
        print("wrote", path)
    return EXIT_OK


def cmd_profile(args):
    streams, classes = _load_streams(args)
    windows, overlaps = _parse_grid(args)
    _ensure_out(args.out)
    power = (profiling.PowerModel.from_file(args.power_model)
             if args.power_model
             else profiling.PowerModel(1.0, 2.0, 1.5))
    users = sorted(s.user_id for s in streams)
    test_user = args.user if args.user is not None else users[-1]
    if test_user not in users:
        raise CliError(f"user {test_user} not in data", EXIT_MISSING_DATA)
    train = [s for s in streams if s.user_id != test_user]
    test = next(s for s in streams if s.user_id == test_user)

    entries = []
    import csv as _csv
    timing_path = os.path.join(args.out, "timing.csv")
    with open(timing_path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["window_size", "overlap", "n_windows",
                         "sampling_ns", "feature_ns", "classification_ns",
                         "rep_total_ns_list", "warnings"])
        for w in windows:
            for o in overlaps:
                config = WindowConfig(w, o)
                bd = profiling.timed_run(train, test, config,
                                         mode=_modes(args.mode)[0],
                                         purity=args.purity,
                                         valid_labels=classes,
                                         params=_learner_params(args),
                                         repetitions=args.reps)
                writer.writerow([w, o, bd.n_windows, bd.sampling_ns,
                                 bd.feature_ns, bd.classification_ns,
                                 ";".join(map(str, bd.per_rep_total_ns)),
                                 ";".join(bd.warnings)])
                acc = bd.n_correct / bd.n_windows if bd.n_windows else None
                entries.append({"window_size": w, "overlap": o,
                                "joules": profiling.estimate_energy(bd, power),
                                "accuracy": acc, "n_windows": bd.n_windows})
                print(f"W={w} o={o}: windows={bd.n_windows} "
                      f"total={bd.total_ns / 1e6:.1f}ms "
                      f"energy={entries[-1]['joules']:.4f}J")
    heat_path = profiling.emit_energy_heatmap(
        entries, os.path.join(args.out, "energy_heatmap.csv"))
    print("wrote", timing_path)
    print("wrote", heat_path)
    return EXIT_OK


def cmd_synth(args):
    spec = SyntheticSpec.from_file(args.spec)
    _ensure_out(args.out)
    for stream in dataset.generate_synthetic(spec):
        path = os.path.join(args.out, f"synthetic{stream.user_id:03d}.dat")
        with open(path, "w") as fh:
            fh.write(dataset.serialize_stream(stream))
        print(f"wrote {path} ({len(stream)} samples)")
    return EXIT_OK


def _add_common(parser, need_seed=False):
    parser.add_argument("--data-dir", default=None,
                        help=f"PAMAP2 directory (default ${DATA_DIR_ENV})")
    parser.add_argument("--synthetic", default=None, metavar="SPEC_JSON",
                        help="synthetic spec file instead of PAMAP2")
    parser.add_argument("--purity", type=float, default=DEFAULT_PURITY,
                        help="minimum modal-label fraction to keep a window")
    parser.add_argument("--seed", type=int, required=need_seed,
                        default=None if need_seed else 0)
    parser.add_argument("--k", type=int, default=5, help="kNN neighbors")
    parser.add_argument("--knn-capacity", type=int, default=5000)
    parser.add_argument("--delta", type=float, default=1e-7,
                        help="VFDT split confidence")
    parser.add_argument("--tie-threshold", type=float, default=0.05)
    parser.add_argument("--grace-period", type=int, default=200)
    parser.add_argument("--theta", type=float, default=0.99,
                        help="self-update confidence gate (strict >)")


def _add_grid(parser):
    parser.add_argument("--grid", choices=["study", "custom"], default="custom")
    parser.add_argument("--windows", default="100,500,1000",
                        help="comma-separated window sizes")
    parser.add_argument("--overlaps", default="0.0,0.5,0.8",
                        help="comma-separated overlap factors")
    parser.add_argument("--allow-any-grid", action="store_true",
                        help="permit values outside the study grid bounds")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="harbench",
        description="Streaming HAR benchmark: windowed features, "
                    "semi-supervised ensemble, accuracy/energy sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check PAMAP2 sample counts")
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="run the full evaluation grid")
    _add_common(p, need_seed=True)
    _add_grid(p)
    p.add_argument("--mode", choices=["sup", "semi", "both"], default="both")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true",
                   help="skip cells already persisted in --out")
    p.add_argument("--include-user9", action="store_true",
                   help="include the single-activity user in summaries")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="evaluate one (user, W, o, mode) cell")
    _add_common(p)
    p.add_argument("--user", type=int, required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--overlap", type=float, required=True)
    p.add_argument("--mode", choices=["sup", "semi"], default="semi")
    p.add_argument("--out", default=None, help="write the audit CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("profile", help="time phases and estimate energy")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--mode", choices=["sup", "semi"], default="semi")
    p.add_argument("--user", type=int, default=None,
                   help="test user (default: highest user id)")
    p.add_argument("--power-model", default=None,
                   help="JSON phase-to-watts file")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("synth", help="materialize synthetic streams")
    p.add_argument("--spec", required=True, help="synthetic spec JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DatasetError, WindowingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_GRID if isinstance(exc, WindowingError) else EXIT_MISSING_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE


if __name__ == "__main__":
    sys.exit(main())
