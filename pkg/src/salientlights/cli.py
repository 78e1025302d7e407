"""Command-line entry point.

Subcommands: validate, stats, split, diff-salience, train, evaluate,
experiment, plot. Exit codes: 0 success, 1 validation failure,
2 usage/config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dataset as ds
from . import evaluation as ev
from .config import ConfigError, apply_overrides, load_config
from .experiment import make_scenes, run_experiment, sweep_model
from .geometry import parse_predictions
from .plotting import plot_svg
from .toy import TrainingDivergedError, load_model, save_model, train

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"file not found: {path}", EXIT_USAGE)
    return p.read_text()


def _load_dataset(path: str) -> ds.Dataset:
    try:
        return ds.parse_dataset(_read_text(path))
    except ds.ParseError as e:
        raise CliError(f"{path}: {e}", EXIT_VALIDATION)


def _load_run_config(args) -> "RunConfig":
    cfg = load_config(getattr(args, "config", None))
    return apply_overrides(
        cfg,
        seed=getattr(args, "seed", None),
        omega=getattr(args, "omega", None),
        gamma=getattr(args, "gamma", None),
        alpha=getattr(args, "alpha", None),
        epochs=getattr(args, "epochs", None),
        lr=getattr(args, "lr", None),
        iou_threshold=getattr(args, "iou_threshold", None),
    )


def cmd_validate(args) -> int:
    data = _load_dataset(args.dataset)
    violations = ds.validate(data)
    for v in violations:
        where = v.frame_id if v.annotation_index is None \
            else f"{v.frame_id}[{v.annotation_index}]"
        print(f"{where} {v.rule}: {v.message}")
    return EXIT_VALIDATION if violations else EXIT_OK


def cmd_stats(args) -> int:
    data = _load_dataset(args.dataset)
    st = ds.stats(data)
    rows = sorted(st.per_category.items())
    if args.csv:
        print("salient,color,status,directional,count")
        for (salient, color, status, directional), count in rows:
            print(f"{str(salient).lower()},{color},{status},"
                  f"{str(directional).lower()},{count}")
    else:
        print(f"total annotations: {st.total_annotations}")
        print(f"salient:           {st.salient_count}")
        print(f"non-salient:       {st.non_salient_count}")
        if rows:
            print()
            print(f"{'salient':8} {'color':10} {'status':10} "
                  f"{'directional':12} count")
            for (salient, color, status, directional), count in rows:
                print(f"{str(salient).lower():8} {color:10} {status:10} "
                      f"{str(directional).lower():12} {count}")
    return EXIT_OK


def cmd_split(args) -> int:
    data = _load_dataset(args.dataset)
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
        parts = ds.split(data, ratios, args.seed)  # type: ignore[arg-type]
    except (ValueError, ds.DatasetError) as e:
        raise CliError(str(e), EXIT_USAGE)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "val", "test"), parts):
        (out / f"{name}.jsonl").write_text(ds.serialize_dataset(part))
        print(f"{name}: {len(part.frames)} frames")
    return EXIT_OK


def cmd_diff_salience(args) -> int:
    a = _load_dataset(args.dataset_a)
    b = _load_dataset(args.dataset_b)
    try:
        diffs = ds.salience_diff(a, b)
    except ds.DatasetError as e:
        raise CliError(str(e), EXIT_VALIDATION)
    for d in diffs:
        print(f"{d.frame_id}[{d.annotation_index}]: "
              f"salient {str(d.salient_a).lower()} vs {str(d.salient_b).lower()}")
    return EXIT_VALIDATION if diffs else EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    train_scenes, _, _ = make_scenes(cfg)
    model, history = train(train_scenes, cfg.train)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.sltm")
    lines = ["epoch,mean_loss"]
    lines += [f"{i},{loss:.6f}" for i, loss in enumerate(history)]
    (out / "history.csv").write_text("".join(ln + "\n" for ln in lines))
    print(f"trained {cfg.train.epochs} epochs; final mean loss "
          f"{history[-1]:.6f}; model written to {out / 'model.sltm'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _load_run_config(args)
    if args.predictions:
        data = _load_dataset(args.dataset)
        try:
            preds = parse_predictions(_read_text(args.predictions))
        except ds.ParseError as e:
            raise CliError(f"{args.predictions}: {e}", EXIT_VALIDATION)
        gts = {f.frame_id: [(a.box, a.salient) for a in f.annotations]
               for f in data.frames}
        try:
            points = ev.pr_sweep(preds, gts, cfg.eval)
        except ev.EvaluationError as e:
            raise CliError(str(e), EXIT_VALIDATION)
    elif args.model:
        _, _, test_scenes = make_scenes(cfg)
        model = load_model(args.model)
        points = sweep_model(model, test_scenes, cfg)
    else:
        raise CliError("evaluate needs --predictions (with --dataset) "
                       "or --model", EXIT_USAGE)
    csv_text = ev.write_metrics_csv(points)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(csv_text)
        print(f"metrics written to {out / 'metrics.csv'}")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _load_run_config(args)
    summary = run_experiment(cfg, args.out)
    print(summary["summary_line"])
    return EXIT_OK


def cmd_plot(args) -> int:
    series = []
    for path in args.csvs:
        rows = ev.read_metrics_csv(_read_text(path))
        for col in (args.x, args.y):
            if rows and col not in rows[0]:
                raise CliError(f"unknown metrics column {col!r}", EXIT_USAGE)
        series.append((Path(path).stem,
                       [(row[args.x], row[args.y]) for row in rows]))
    try:
        svg = plot_svg(series, title=f"{args.y} vs {args.x}",
                       x_label=args.x, y_label=args.y)
    except ValueError as e:
        raise CliError(str(e), EXIT_USAGE)
    Path(args.out).write_text(svg)
    print(f"plot written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="salientlights",
        description="Salience-aware traffic-light detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, config=False, out=False):
        if config:
            p.add_argument("--config", help="TOML run configuration")
            p.add_argument("--seed", type=int, help="override random seed")
            p.add_argument("--iou-threshold", dest="iou_threshold", type=float)
            p.add_argument("--omega", type=float)
            p.add_argument("--gamma", type=float)
            p.add_argument("--alpha", type=float)
            p.add_argument("--epochs", type=int)
            p.add_argument("--lr", type=float)
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("validate", help="structurally validate a dataset")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="dataset annotation statistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="seeded train/val/test split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    add_common(p, out=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("diff-salience",
                       help="compare salience flags of two annotation passes")
    p.add_argument("dataset_a")
    p.add_argument("dataset_b")
    p.set_defaults(func=cmd_diff_salience)

    p = sub.add_parser("train", help="train the toy detector")
    add_common(p, config=True, out=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="confidence-sweep evaluation")
    add_common(p, config=True)
    p.add_argument("--dataset", help="ground-truth annotation file")
    p.add_argument("--predictions", help="predictions file to score")
    p.add_argument("--model", help="model checkpoint to score on test scenes")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment",
                       help="train weighted and baseline models, emit "
                            "metrics and figures")
    add_common(p, config=True, out=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("plot", help="plot metrics CSV columns as SVG")
    p.add_argument("csvs", nargs="+", help="metrics CSV files")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--x", default="precision_all")
    p.add_argument("--y", default="recall_all")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergedError as e:
        print(f"error: training diverged: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
