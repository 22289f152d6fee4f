"""Command-line interface.

Verbs: ``generate`` builds a benchmark directory from a generation config,
``evaluate`` runs a predictor and writes raw metrics, ``score`` turns metrics
into a score report, ``run`` does the whole pipeline and appends to the
leaderboard, ``leaderboard`` lists recorded entries, ``report`` renders a
stored score report. Exit codes: 0 success, 2 validation error, 3 predictor
failure, 4 rejection.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import shlex
import sys
from pathlib import Path

from .errors import AirbenchError, InferenceError, TrainingError
from .harness import (
    PredictorSpec,
    leaderboard_list,
    render_report,
    resolve_store_path,
    run_benchmark,
    run_inference,
    run_training,
)
from .baselines import resolve_builtin
from .io import dataset_digest, read_dataset
from .metrics import SplitMetrics, evaluate_split
from .scoring import (
    ML_CRITERIA,
    OOD_CRITERIA,
    PHYSICS_CRITERIA,
    ScoreReport,
    ScoringConfig,
    compute_speedup,
    criterion_values_from_metrics,
    default_scoring_config,
    score_from_values,
)
from .synthflow import GenerationConfig, generate_benchmark

STORE_ENV_VAR_NAME = "AIRBENCH_STORE"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PREDICTOR = 3
EXIT_REJECTED = 4


def _predictor_spec(args) -> PredictorSpec:
    name = args.predictor
    label = args.label or name
    train_cmd = shlex.split(args.train_cmd) if getattr(args, "train_cmd", None) else None
    budget = getattr(args, "train_budget", None)
    if name in ("oracle", "constant") or name.startswith("knn:"):
        return PredictorSpec(
            label=label, builtin=name, training_command=train_cmd, training_budget_s=budget
        )
    return PredictorSpec(
        label=label,
        command=shlex.split(name),
        working_dir=getattr(args, "workdir", None),
        training_command=train_cmd,
        training_budget_s=budget,
    )


def _scoring_config(path: str | None) -> ScoringConfig:
    if path is None:
        return default_scoring_config()
    return ScoringConfig.from_json(path)


def _cmd_generate(args) -> int:
    config = GenerationConfig.from_json(args.config) if args.config else GenerationConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    datasets = generate_benchmark(config, args.out)
    for name in ("train", "test", "ood"):
        print(f"{name}: {len(datasets[name].samples)} samples  digest {dataset_digest(Path(args.out) / name)}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _scoring_config(args.config)
    spec = _predictor_spec(args)
    bench = Path(args.bench)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    predictor = resolve_builtin(spec.builtin) if spec.builtin else None
    budget = spec.training_budget_s if spec.training_budget_s is not None else config.training_budget_s
    outcome = run_training(spec, bench / "train", budget, predictor=predictor)
    if outcome.rejected:
        print(f"rejected: {outcome.reason}", file=sys.stderr)
        return EXIT_REJECTED

    doc = {}
    for name in ("test", "ood"):
        elapsed, predictions = run_inference(
            spec, bench / name, out / "pred" / name, predictor=predictor, repeat=args.repeat
        )
        used = args.fixed_time if args.fixed_time is not None else elapsed
        dataset = read_dataset(bench / name)
        metrics = evaluate_split(
            dataset, predictions, config.field_criteria, total_inference_time_s=used
        )
        doc[name] = metrics.to_dict()
    path = out / "metrics.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_score(args) -> int:
    config = _scoring_config(args.config)
    doc = json.loads(Path(args.metrics).read_text(encoding="utf-8"))
    metrics = {name: SplitMetrics.from_dict(doc[name]) for name in ("test", "ood")}
    speedups = {
        name: compute_speedup(m.total_solver_time_s, m.total_inference_time_s)
        for name, m in metrics.items()
    }
    report = score_from_values(
        ml_values=criterion_values_from_metrics(metrics["test"], ML_CRITERIA),
        ood_values=criterion_values_from_metrics(metrics["ood"], OOD_CRITERIA),
        physics_values=criterion_values_from_metrics(metrics["test"], PHYSICS_CRITERIA),
        speedup_ml=speedups["test"],
        speedup_ood=speedups["ood"],
        config=config,
    )
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    print(render_report(report), end="")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = _scoring_config(args.config)
    spec = _predictor_spec(args)
    fixed = args.fixed_time
    report, entry = run_benchmark(
        spec,
        args.bench,
        config,
        out_dir=args.out,
        store_path=resolve_store_path(args.store),
        fixed_inference_time_s=fixed,
        include_timestamp=not args.no_timestamp,
        repeat=args.repeat,
    )
    print(render_report(report, label=entry.label), end="")
    return EXIT_REJECTED if report.rejected else EXIT_OK


def _cmd_leaderboard(args) -> int:
    entries = leaderboard_list(resolve_store_path(args.store))
    if not entries:
        print("(empty leaderboard)")
        return EXIT_OK
    print(f"{'rank':<5} {'label':<24} {'global':>8} {'ml':>8} {'ood':>8} {'physics':>8}  timestamp")
    for rank, e in enumerate(entries, 1):
        note = f"  REJECTED: {e.rejection_reason}" if e.rejection_reason else ""
        print(
            f"{rank:<5} {e.label:<24} {100 * e.global_score:>7.2f}% "
            f"{e.score_ml:>8.4f} {e.score_ood:>8.4f} {e.score_physics:>8.4f}  {e.timestamp}{note}"
        )
    return EXIT_OK


def _cmd_report(args) -> int:
    data = json.loads(Path(args.score_report).read_text(encoding="utf-8"))
    print(render_report(ScoreReport.from_dict(data), label=args.label), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="airbench", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("generate", help="generate a benchmark directory")
    p.add_argument("--config", default=None, help="generation config JSON (defaults if omitted)")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--out", required=True, help="output benchmark directory")
    p.set_defaults(func=_cmd_generate)

    def add_predictor_args(p):
        p.add_argument("--predictor", required=True, help="builtin name (oracle, constant, knn:<k>) or external command")
        p.add_argument("--label", default=None, help="leaderboard label (defaults to the predictor name)")
        p.add_argument("--config", default=None, help="scoring config JSON (shipped default if omitted)")
        p.add_argument("--repeat", type=int, default=1, help="time inference k times, keep the minimum")
        p.add_argument("--fixed-time", type=float, default=None, dest="fixed_time",
                       help="score with this fixed inference time instead of the measured one")
        p.add_argument("--train-cmd", default=None, dest="train_cmd", help="external training command")
        p.add_argument("--train-budget", type=float, default=None, dest="train_budget",
                       help="training wall-clock budget in seconds (defaults to the scoring config)")
        p.add_argument("--workdir", default=None, help="working directory for external commands")

    p = sub.add_parser("evaluate", help="run a predictor and write raw metrics")
    add_predictor_args(p)
    p.add_argument("--bench", required=True, help="benchmark directory (train/test/ood)")
    p.add_argument("--out", required=True, help="output directory for predictions and metrics.json")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("score", help="score a raw metrics file")
    p.add_argument("--metrics", required=True, help="metrics.json from the evaluate verb")
    p.add_argument("--config", default=None, help="scoring config JSON (shipped default if omitted)")
    p.add_argument("--out", default=None, help="optional score report JSON output path")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("run", help="full pipeline: train, infer, score, record")
    add_predictor_args(p)
    p.add_argument("--bench", required=True, help="benchmark directory (train/test/ood)")
    p.add_argument("--out", default=None, help="run output directory (predictions, metrics, reports)")
    p.add_argument("--store", default=None, help=f"leaderboard path (or ${STORE_ENV_VAR_NAME})")
    p.add_argument("--no-timestamp", action="store_true", dest="no_timestamp",
                   help="record an empty timestamp for byte-reproducible entries")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("leaderboard", help="list recorded runs, best first")
    p.add_argument("--store", default=None, help=f"leaderboard path (or ${STORE_ENV_VAR_NAME})")
    p.set_defaults(func=_cmd_leaderboard)

    p = sub.add_parser("report", help="render a stored score report")
    p.add_argument("score_report", help="score_report.json path")
    p.add_argument("--label", default=None)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TrainingError, InferenceError) as e:
        print(f"airbench: predictor failure: {e}", file=sys.stderr)
        return EXIT_PREDICTOR
    except AirbenchError as e:
        print(f"airbench: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        print(f"airbench: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
