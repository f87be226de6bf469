"""Command-line interface.

Exit codes: 0 success, 1 I/O error, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import drift
from .config import default_config_doc, parse_policy_doc
from .contract import ContractError
from .drift import FailureClassifier, HeuristicWeights, TrainHyper
from .harness import compare, fixtures, format_compare, gen_training_data, run_suite, threshold_sweep
from .policy import LadderConfig
from .validator import validate

IO_ERROR = 1
CONFIG_ERROR = 2


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def load_policy(ref: str) -> tuple[LadderConfig, HeuristicWeights, FailureClassifier | None]:
    """Policy file, or the literal string 'baseline'."""
    if ref == "baseline":
        return LadderConfig.baseline(), HeuristicWeights(), None
    path = Path(ref)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read policy file: {exc}", IO_ERROR) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"policy file is not valid JSON: {exc}", CONFIG_ERROR) from exc
    try:
        return parse_policy_doc(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"invalid policy config: {exc}", CONFIG_ERROR) from exc


def cmd_run(args) -> int:
    cfg, heuristic, classifier = load_policy(args.policy)
    if args.classifier:
        try:
            classifier = FailureClassifier.from_dict(
                json.loads(Path(args.classifier).read_text(encoding="utf-8"))
            )
        except OSError as exc:
            raise CliError(f"cannot read classifier: {exc}", IO_ERROR) from exc
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise CliError(f"invalid classifier file: {exc}", CONFIG_ERROR) from exc
    try:
        suite = fixtures.load_suite(args.suite)
    except OSError as exc:
        raise CliError(f"cannot read suite: {exc}", IO_ERROR) from exc
    except (ValueError, json.JSONDecodeError, ContractError) as exc:
        raise CliError(f"invalid suite: {exc}", CONFIG_ERROR) from exc
    if args.sweep:
        return _run_sweep(args, suite, cfg, heuristic, classifier)
    try:
        report = run_suite(suite, cfg, out_dir=args.out, classifier=classifier, heuristic=heuristic)
    except OSError as exc:
        raise CliError(f"cannot write outputs: {exc}", IO_ERROR) from exc
    overall = report["overall"]
    print(
        f"{report['suite']} [{report['mode']}]: "
        f"success {overall['first_attempt_success']:.3f}, "
        f"schema {overall['schema_validity']:.3f}, "
        f"mean corrections {overall['mean_corrections']:.2f} "
        f"({overall['n_runs']} runs)"
    )
    if args.out:
        print(f"report written to {Path(args.out) / 'report.json'}")
    return 0


def _run_sweep(args, suite, cfg, heuristic, classifier) -> int:
    try:
        grid = json.loads(Path(args.sweep).read_text(encoding="utf-8"))
        threshold_sets = [tuple(float(t) for t in row) for row in grid]
    except OSError as exc:
        raise CliError(f"cannot read sweep file: {exc}", IO_ERROR) from exc
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise CliError(f"invalid sweep grid: {exc}", CONFIG_ERROR) from exc
    try:
        result = threshold_sweep(
            suite, threshold_sets, base_policy=cfg, out_dir=args.out,
            classifier=classifier, heuristic=heuristic,
        )
    except ValueError as exc:
        raise CliError(str(exc), CONFIG_ERROR) from exc
    except OSError as exc:
        raise CliError(f"cannot write outputs: {exc}", IO_ERROR) from exc
    for row in result["sweep"]:
        o = row["overall"]
        print(
            f"thresholds {row['thresholds']}: success {o['first_attempt_success']:.3f}, "
            f"mean corrections {o['mean_corrections']:.2f}, mean cost {o['mean_cost']:.1f}"
        )
    return 0


def cmd_compare(args) -> int:
    reports = []
    for ref in (args.baseline, args.controlled):
        p = Path(ref)
        if p.is_dir():
            p = p / "report.json"
        try:
            reports.append(json.loads(p.read_text(encoding="utf-8")))
        except OSError as exc:
            raise CliError(f"cannot read report {ref!r}: {exc}", IO_ERROR) from exc
        except json.JSONDecodeError as exc:
            raise CliError(f"report {ref!r} is not valid JSON: {exc}", CONFIG_ERROR) from exc
    try:
        delta = compare(reports[0], reports[1])
    except (ValueError, KeyError) as exc:
        raise CliError(f"reports are not comparable: {exc}", CONFIG_ERROR) from exc
    print(format_compare(delta))
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(delta, indent=2, sort_keys=True), encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.out!r}: {exc}", IO_ERROR) from exc
    return 0


def cmd_train(args) -> int:
    logs_dir = Path(args.logs)
    manifest_path = logs_dir / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {manifest_path}: {exc}", IO_ERROR) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"bad manifest: {exc}", CONFIG_ERROR) from exc
    from .contract import ContractSpec

    all_runs = []
    skipped = 0
    for task, spec_doc in manifest["tasks"].items():
        spec = ContractSpec.from_dict(spec_doc)
        log_path = logs_dir / f"{task}.jsonl"
        if not log_path.exists():
            continue
        labeled = drift.label_trajectories(
            log_path.read_text(encoding="utf-8").splitlines(), spec
        )
        all_runs.extend(labeled.runs)
        skipped += labeled.skipped
    labeled = drift.LabeledRuns(runs=sorted(all_runs, key=lambda r: r[0]), skipped=skipped)
    if not labeled.runs:
        raise CliError("no labeled runs found in logs", CONFIG_ERROR)
    train_runs, held_runs = drift.heldout_split(labeled)
    hyper = TrainHyper(learning_rate=args.lr, epochs=args.epochs, l2=args.l2)
    result = drift.train_classifier(train_runs.flatten(), hyper)
    if result.warning:
        print(f"warning: {result.warning}", file=sys.stderr)
    if skipped:
        print(f"warning: skipped {skipped} malformed log lines", file=sys.stderr)
    train_acc = drift.classify_accuracy(result.classifier, train_runs.flatten())
    held = held_runs.flatten()
    held_acc = drift.classify_accuracy(result.classifier, held) if held else float("nan")
    try:
        Path(args.out).write_text(
            json.dumps(result.classifier.to_dict(), indent=2), encoding="utf-8"
        )
    except OSError as exc:
        raise CliError(f"cannot write classifier: {exc}", IO_ERROR) from exc
    print(
        f"trained on {len(train_runs.runs)} runs ({len(train_runs.flatten())} steps), "
        f"loss {result.final_loss:.4f}, train acc {train_acc:.3f}, held-out acc {held_acc:.3f}"
    )
    print(f"classifier written to {args.out}")
    return 0


def cmd_gen_data(args) -> int:
    try:
        suite = fixtures.load_suite(args.suite)
        path = gen_training_data(suite, args.runs, args.out, base_seed=args.seed)
    except OSError as exc:
        raise CliError(f"I/O failure: {exc}", IO_ERROR) from exc
    except ValueError as exc:
        raise CliError(str(exc), CONFIG_ERROR) from exc
    print(f"trajectory logs written to {path}")
    return 0


def cmd_validate(args) -> int:
    try:
        spec = fixtures.load_contract_spec(args.spec)
    except OSError as exc:
        raise CliError(f"cannot read spec: {exc}", IO_ERROR) from exc
    except ContractError as exc:
        raise CliError(f"invalid contract spec: {exc}", CONFIG_ERROR) from exc
    try:
        data = sys.stdin.buffer.read() if args.input == "-" else Path(args.input).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read input: {exc}", IO_ERROR) from exc
    report = validate(data, spec)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_config(args) -> int:
    if args.action != "init":
        raise CliError(f"unknown config action {args.action!r}", CONFIG_ERROR)
    text = json.dumps(default_config_doc(), indent=2)
    if args.out:
        try:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.out!r}: {exc}", IO_ERROR) from exc
        print(f"default policy config written to {args.out}")
    else:
        print(text)
    return 0


def cmd_hook_serve(args) -> int:
    from .hook import serve_stdio

    return serve_stdio()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tokrail", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a benchmark suite")
    p.add_argument("--suite", required=True, help="suite fixture name or JSON path")
    p.add_argument("--policy", required=True, help="policy config path or 'baseline'")
    p.add_argument("--out", default=None, help="output directory for report and logs")
    p.add_argument("--classifier", default=None, help="classifier JSON overriding the policy file")
    p.add_argument("--sweep", default=None,
                   help="JSON file with a list of threshold quadruples; runs the suite per row")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="diff two suite reports")
    p.add_argument("baseline")
    p.add_argument("controlled")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("train", help="train the failure classifier from trajectory logs")
    p.add_argument("--logs", required=True, help="logs directory (with manifest.json)")
    p.add_argument("--out", required=True, help="classifier JSON output path")
    p.add_argument("--lr", type=float, default=TrainHyper().learning_rate)
    p.add_argument("--epochs", type=int, default=TrainHyper().epochs)
    p.add_argument("--l2", type=float, default=TrainHyper().l2)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gen-data", help="generate baseline trajectory logs for training")
    p.add_argument("--suite", required=True)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=77000)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("validate", help="validate an output file against a contract")
    p.add_argument("--spec", required=True, help="contract fixture name or JSON path")
    p.add_argument("--input", required=True, help="file to check, or - for stdin")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("config", help="configuration helpers")
    p.add_argument("action", choices=["init"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("hook-serve", help="serve the per-step logits hook over stdin/stdout")
    p.set_defaults(func=cmd_hook_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
