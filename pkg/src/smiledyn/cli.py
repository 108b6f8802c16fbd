"""Command-line entry point: synth / extract / train / evaluate / cv / report.

Every command writes its artifacts only under --out (plus the resolved
configuration as run_config.json) and is deterministic for fixed flags and
inputs. Usage errors exit with 2; pipeline errors exit with 1 and name the
failing video and stage where applicable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, io, svm, synth
from .features import FEATURE_MODES, FeatureConfig, extract_matrix
from .normalization import normalize_sequence
from .optflow import FlowParams
from .types import LABEL_SIGNS, FeatureLayout, LandmarkFrame, SmiledynError

CACHE_ENV = "SMILEDYN_CACHE"
DATE_ENV = "SMILEDYN_DATE"


def _add_feature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", required=True, choices=FEATURE_MODES + ("flow",))
    p.add_argument("--components", choices=("x", "y", "xy"), default="xy",
                   help="flow components when --features flow")
    p.add_argument("--window", type=int, default=5, help="signal smoothing window (odd)")
    p.add_argument("--beta", type=float, default=0.15, help="flow data-term weight")
    p.add_argument("--levels", type=int, default=4, help="flow pyramid levels")
    p.add_argument("--jobs", type=int, default=1, help="parallel extraction workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smiledyn",
        description="Classify smile videos as spontaneous or posed.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--preset", choices=sorted(synth.PRESETS), default="easy")
    p.add_argument("--n-per-class", type=int, default=50)

    p = sub.add_parser("extract", help="write per-video feature CSV rows")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-normalized", action="store_true",
                   help="also write <video_id>.norm.csv normalized landmarks")
    _add_feature_flags(p)

    p = sub.add_parser("train", help="fit a model on every manifest video")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--C", type=float, default=1.0)
    _add_feature_flags(p)

    p = sub.add_parser("evaluate", help="80/20 holdout (or apply a saved model)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--model", help="evaluate this saved model on the whole manifest")
    _add_feature_flags(p)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--C", type=float, default=1.0)
    _add_feature_flags(p)

    p = sub.add_parser("report", help="re-render a report JSON as text")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", help="also write report.txt here")

    return parser


def _mode_of(args) -> str:
    if args.features == "flow":
        return {"x": "flow_x", "y": "flow_y", "xy": "flow_xy"}[args.components]
    return args.features


def _config_of(args) -> FeatureConfig:
    return FeatureConfig(
        window=args.window,
        flow=FlowParams(beta=args.beta, pyramid_levels=args.levels),
    )


def _cache_dir(out: Path) -> Path:
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else out / "cache"


def _write_run_config(args, out: Path) -> None:
    payload = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "command"
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_config.json").write_text(
        json.dumps({"command": args.command, "args": payload}, sort_keys=True, indent=2)
        + "\n",
        encoding="utf-8",
        newline="\n",
    )


def _load_labeled(manifest: str):
    records = io.load_manifest(manifest)
    if not records:
        raise SmiledynError(f"manifest {manifest} has no videos")
    return records


def _feature_csv(records, X, path: Path) -> None:
    header = ["video_id", "label"] + [f"f{i:03d}" for i in range(X.shape[1])]
    lines = [",".join(header)]
    for rec, row in zip(records, X):
        values = ",".join(format(v, ".9g") for v in row)
        lines.append(f"{rec.video_id},{rec.label or ''},{values}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _dump_normalized(records, out: Path) -> None:
    norm_dir = out / "normalized"
    norm_dir.mkdir(parents=True, exist_ok=True)
    for rec in records:
        frames = io.load_landmarks(rec.landmarks_path)
        normalized = normalize_sequence(frames)
        as_frames = [
            LandmarkFrame(frame_index=f.frame_index, points=n.points)
            for f, n in zip(frames, normalized)
        ]
        io.save_landmarks(as_frames, norm_dir / f"{rec.video_id}.norm.csv")


def _cmd_synth(args) -> int:
    params = synth.PRESETS[args.preset](seed=args.seed, n_per_class=args.n_per_class)
    records, _ = synth.generate(params, args.out)
    print(f"wrote {len(records)} videos under {args.out}")
    return 0


def _cmd_extract(args) -> int:
    out = Path(args.out)
    records = _load_labeled(args.manifest)
    mode = _mode_of(args)
    X, layout = extract_matrix(
        records, mode, _config_of(args), _cache_dir(out), jobs=args.jobs
    )
    _write_run_config(args, out)
    csv_path = out / f"features_{mode}.csv"
    _feature_csv(records, X, csv_path)
    if args.dump_normalized:
        _dump_normalized(records, out)
    print(f"wrote {csv_path} ({X.shape[0]} videos x {layout.length} features)")
    return 0


def _cmd_train(args) -> int:
    out = Path(args.out)
    records = _load_labeled(args.manifest)
    mode = _mode_of(args)
    X, layout = extract_matrix(
        records, mode, _config_of(args), _cache_dir(out), jobs=args.jobs
    )
    y = np.array([LABEL_SIGNS[r.label] for r in records])
    model = svm.train(
        X,
        y,
        C=args.C,
        layout=layout,
        metadata={"seed": args.seed, "date": os.environ.get(DATE_ENV, "")},
    )
    _write_run_config(args, out)
    model_path = out / "model.json"
    svm.save_model(model, model_path)
    print(f"wrote {model_path}")
    return 0


def _cmd_evaluate(args) -> int:
    out = Path(args.out)
    records = _load_labeled(args.manifest)
    mode = _mode_of(args)
    cfg = _config_of(args)
    cache = _cache_dir(out)
    if args.model:
        model = svm.load_model(args.model)
        X, layout = extract_matrix(records, mode, cfg, cache, jobs=args.jobs)
        if layout.length != model.n_features:
            raise SmiledynError(
                f"model expects {model.n_features} features but mode {mode} "
                f"yields {layout.length}"
            )
        y = np.array([LABEL_SIGNS[r.label] for r in records])
        pred, _ = svm.predict_batch(model, X)
        cm = evaluation.confusion(pred, y)
        report = evaluation.CvReport(
            feature_mode=mode,
            layout=layout,
            protocol="model",
            k=1,
            seed=args.seed,
            C=model.C,
            n_videos=len(records),
            fold_accuracies=[100.0 * float(np.mean(pred == y))],
            confusion_matrix=cm,
            params=evaluation.params_dict(cfg),
        )
    else:
        report = evaluation.run_holdout(
            records,
            mode,
            train_frac=args.train_frac,
            seed=args.seed,
            C=args.C,
            cfg=cfg,
            cache_dir=cache,
            jobs=args.jobs,
        )
    _write_run_config(args, out)
    evaluation.write_report(report, out)
    print(evaluation.render_report_text(report), end="")
    return 0


def _cmd_cv(args) -> int:
    out = Path(args.out)
    records = _load_labeled(args.manifest)
    report = evaluation.run_experiment(
        records,
        _mode_of(args),
        k=args.k,
        seed=args.seed,
        C=args.C,
        cfg=_config_of(args),
        cache_dir=_cache_dir(out),
        jobs=args.jobs,
    )
    _write_run_config(args, out)
    evaluation.write_report(report, out)
    print(evaluation.render_report_text(report), end="")
    return 0


def _cmd_report(args) -> int:
    doc = json.loads(Path(args.in_path).read_text(encoding="utf-8"))
    try:
        report = evaluation.CvReport(
            feature_mode=doc["feature_mode"],
            layout=FeatureLayout[doc["layout"]],
            protocol=doc["protocol"],
            k=doc["k"],
            seed=doc["seed"],
            C=doc["C"],
            n_videos=doc["n_videos"],
            fold_accuracies=doc["fold_accuracies"],
            confusion_matrix=evaluation.ConfusionMatrix(
                counts=np.array(doc["confusion"]["counts"])
            ),
            params=doc.get("params", {}),
            aggregation=doc.get("aggregation", "pooled"),
        )
    except KeyError as exc:
        raise SmiledynError(f"{args.in_path}: missing report field {exc}") from None
    text = evaluation.render_report_text(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8", newline="\n")
    print(text, end="")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "cv": _cmd_cv,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except SmiledynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
