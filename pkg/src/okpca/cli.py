"""Command-line interface: ``okpca <subcommand> [options]``.

Subcommands:
    simulate      write training and test datasets for one trial
    fit           fit a model to the normal trajectories of a dataset
    score         reconstruction errors of a dataset against a model
    detect        errors plus threshold and verdict per trajectory
    experiment    repeated randomized trials (or an M sweep) with FP/FN rates
    compare-kpca  OKPCA against pointwise KPCA on identical trial data

Every CSV written starts with the resolved config as ``# `` comment lines, so
``--config <output file>`` repeats the run that produced it.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from okpca import experiment as exp
from okpca import plotting
from okpca.config import PRESETS, ExperimentConfig, header_lines, load_config, load_preset, parse_config
from okpca.detector import (
    classify_many,
    reconstruction_errors,
    threshold_from_errors,
    training_errors,
    write_report_csv,
)
from okpca.errors import DatasetError, OkpcaError
from okpca.io import read_dataset, write_dataset
from okpca.kernel import KernelSpec
from okpca.model import fit, load_model, read_model_header, save_model

logger = logging.getLogger("okpca")

QUADROTOR_NAMES = ("x", "y", "z", "u", "v", "w", "phi", "theta", "psi", "p", "q", "r")


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="INI config, or any output file carrying a config echo")
    src.add_argument("--preset", choices=PRESETS, help="named built-in config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trials", type=int, help="override the number of trials")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    p.add_argument("--out", type=Path, default=Path("okpca-out"), help="output directory")
    p.add_argument("--no-figures", action="store_true", help="write CSV only, skip PNG figures")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="okpca", description="Occupation-kernel PCA fault detection for trajectories."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write train/ and test/ datasets for one trial")
    p.add_argument("--trial", type=int, default=0, help="trial index whose data to write")
    _add_common(p)

    p = sub.add_parser("fit", help="fit a model on the normal trajectories of a dataset")
    p.add_argument("dataset", type=Path)
    _add_common(p)

    for name, text in (("score", "reconstruction errors only"), ("detect", "errors, threshold, verdicts")):
        p = sub.add_parser(name, help=text)
        p.add_argument("dataset", type=Path)
        p.add_argument("--model", type=Path, required=True, help="model file written by fit")
        if name == "detect":
            p.add_argument(
                "--threshold", type=float,
                help="explicit threshold (default: multiplier x max training error)",
            )
        _add_common(p)

    p = sub.add_parser("experiment", help="randomized trials, or an M sweep if the config has one")
    _add_common(p)

    p = sub.add_parser("compare-kpca", help="OKPCA vs pointwise KPCA (default: exp1 and exp1-noisy)")
    _add_common(p)
    return parser


def resolve_config(args, default: str | None = "exp1") -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.preset is not None:
        cfg = load_preset(args.preset)
    elif default is not None:
        cfg = load_preset(default)
    else:
        cfg = ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return cfg.with_overrides(**changes) if changes else cfg


def _echo(cfg: ExperimentConfig, args, **extra) -> list[str]:
    return header_lines(cfg, {"command": args.command, **extra})


def _write_rows(path: Path, columns, rows, echo) -> None:
    with open(path, "w", newline="") as fh:
        for line in echo:
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    data = exp.generate_trial(cfg, args.trial)
    echo = _echo(cfg, args, trial=args.trial)
    write_dataset(args.out / "train", data.train, ["normal"] * len(data.train), header_lines=echo)
    write_dataset(args.out / "test", data.test, data.test_labels, header_lines=echo)
    if not args.no_figures:
        if cfg.system.is_quadrotor and data.test_normal and data.test_faulty:
            plotting.plot_time_series(
                data.test_normal[0], data.test_faulty[0], args.out / "trajectories.png", QUADROTOR_NAMES
            )
        else:
            plotting.plot_trajectories(
                {"train": data.train, "normal": data.test_normal, "faulty": data.test_faulty},
                args.out / "trajectories.png",
            )
    print(f"wrote {len(data.train)} training and {len(data.test)} test trajectories to {args.out}")
    return 0


def _training_set(dataset_dir: Path):
    ds = read_dataset(dataset_dir)
    train = ds.with_label("normal")
    if not train:
        raise DatasetError(f"{dataset_dir}: no trajectories labelled 'normal' to train on")
    return train


def cmd_fit(args) -> int:
    cfg = resolve_config(args)
    train = _training_set(args.dataset)
    model = fit(KernelSpec(cfg.mu), cfg.quadrature, train, cfg.N)
    echo = _echo(cfg, args, dataset=args.dataset)
    args.out.mkdir(parents=True, exist_ok=True)
    path = save_model(model, args.out / "model.npz", config_echo=echo)
    errs = training_errors(model)
    _write_rows(
        args.out / "training_errors.csv", ("id", "reconstruction_error"),
        [{"id": tr.id, "reconstruction_error": repr(float(e))} for tr, e in zip(model.training, errs)],
        echo,
    )
    if not args.no_figures:
        plotting.plot_errors(
            errs, ["normal"] * len(errs), args.out / "training_errors.png",
            threshold=cfg.threshold_multiplier * float(errs.max()), title="training errors",
        )
    print(f"fitted {model.num_components} components on {model.num_training} trajectories -> {path}")
    print(f"max training error {errs.max():.6g}")
    return 0


def _model_config(args) -> ExperimentConfig:
    """Explicit --config/--preset wins; otherwise the config stored with the model."""
    if args.config is not None or args.preset is not None:
        return resolve_config(args)
    echo = read_model_header(args.model).get("config", [])
    text = "\n".join(line for line in echo if not line.startswith(";"))
    if not text:
        return ExperimentConfig()
    return parse_config(text, source=f"{args.model}:config")


def cmd_score(args) -> int:
    cfg = _model_config(args)
    model = load_model(args.model)
    ds = read_dataset(args.dataset)
    errs = reconstruction_errors(model, ds.trajectories)
    args.out.mkdir(parents=True, exist_ok=True)
    rows = [
        {"id": tr.id, "label": lab, "reconstruction_error": repr(max(float(e), 0.0))}
        for tr, lab, e in zip(ds.trajectories, ds.labels, errs)
    ]
    echo = _echo(cfg, args, dataset=args.dataset, model=args.model)
    _write_rows(args.out / "scores.csv", ("id", "label", "reconstruction_error"), rows, echo)
    if not args.no_figures:
        plotting.plot_errors(errs, ds.labels, args.out / "scores.png")
    print(f"scored {len(rows)} trajectories -> {args.out / 'scores.csv'}")
    return 0


def cmd_detect(args) -> int:
    cfg = _model_config(args)
    model = load_model(args.model)
    ds = read_dataset(args.dataset)
    if args.threshold is not None:
        threshold = args.threshold
    else:
        threshold = threshold_from_errors(training_errors(model), cfg.threshold_multiplier)
    reports = classify_many(model, threshold, ds.trajectories)
    args.out.mkdir(parents=True, exist_ok=True)
    echo = _echo(cfg, args, dataset=args.dataset, model=args.model, threshold=repr(threshold))
    write_report_csv(reports, args.out / "report.csv", echo)
    if not args.no_figures:
        plotting.plot_reports(reports, ds.labels, args.out / "report.png")
    flagged = sum(r.verdict.value == "faulty" for r in reports)
    print(f"threshold {threshold:.6g}: {flagged} of {len(reports)} trajectories faulty")
    outcome = exp.TrialOutcome(0, exp.OKPCA, threshold, float("nan"), *_labelled(reports, ds.labels))
    if outcome.reports:
        print(
            f"labelled: FP {outcome.false_positives}/{outcome.num_normal}, "
            f"FN {outcome.false_negatives}/{outcome.num_faulty}"
        )
    return 0


def _labelled(reports, labels):
    keep = [(r, lab) for r, lab in zip(reports, labels) if lab != "unknown"]
    return [r for r, _ in keep], [lab for _, lab in keep]


def _print_summary(s: exp.ExperimentSummary) -> None:
    print(
        f"{s.config.name:<24} {s.method:<6} M={s.config.M:<4} trials={len(s.outcomes):<4} "
        f"FP {s.false_positives}/{s.num_normal} ({100 * s.fp_rate:.3f}%)  "
        f"FN {s.false_negatives}/{s.num_faulty} ({100 * s.fn_rate:.3f}%)"
    )


def _trial_figure(summary: exp.ExperimentSummary, out: Path) -> None:
    o = summary.outcomes[0]
    plotting.plot_reports(
        o.reports, o.labels, out / f"{summary.method}_trial_{o.trial:04d}.png",
        title=f"{summary.config.name} ({summary.method}), trial {o.trial}",
    )


def cmd_experiment(args) -> int:
    cfg = resolve_config(args)
    if cfg.sweep_M:
        summaries = exp.run_sweep(cfg, threads=args.threads)
        for s in summaries:
            exp.write_experiment(s, args.out / f"M{s.config.M}")
            _print_summary(s)
        exp.write_summary_csv(summaries, args.out / "summary.csv", cfg)
        if not args.no_figures:
            plotting.plot_rates([s.row() for s in summaries], args.out / "sweep.png", title=cfg.name)
        return 0
    summary = exp.run_experiment(cfg, threads=args.threads)
    exp.write_experiment(summary, args.out)
    if not args.no_figures:
        _trial_figure(summary, args.out)
    _print_summary(summary)
    return 0


def cmd_compare(args) -> int:
    if args.config is not None or args.preset is not None:
        cfgs = [resolve_config(args)]
    else:
        cfgs = [resolve_config(argparse.Namespace(**{**vars(args), "preset": p})) for p in ("exp1", "exp1-noisy")]
    pairs = exp.run_comparison(cfgs, threads=args.threads)
    rows = []
    for cfg, (ok, kp) in zip(cfgs, pairs):
        out = args.out / cfg.name
        trial_dir = out / "trials"
        trial_dir.mkdir(parents=True, exist_ok=True)
        for s in (ok, kp):
            for o in s.outcomes:
                exp.write_trials_csv([o], trial_dir / f"{s.method}_trial_{o.trial:04d}.csv", cfg)
            if not args.no_figures:
                _trial_figure(s, out)
            _print_summary(s)
            rows.append(s.row())
        exp.write_summary_csv([ok, kp], out / "summary.csv", cfg)
    # one file per config carries a re-runnable echo; the combined table lists them
    echo = [f";command: {args.command}"] + [f";config: {c.name}/summary.csv" for c in cfgs]
    _write_rows(args.out / "comparison.csv", exp.SUMMARY_COLUMNS, rows, echo)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "score": cmd_score,
    "detect": cmd_detect,
    "experiment": cmd_experiment,
    "compare-kpca": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        print("okpca: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (OkpcaError, ValueError, OSError) as exc:
        print(f"okpca {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
