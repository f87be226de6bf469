"""Suite execution: seeded runs, trajectory logs, training data generation."""

from __future__ import annotations

import json
from pathlib import Path

from ..contract import Contract, ContractSpec, compile_spec
from ..controller import RunResult, SamplingConfig, generate
from ..drift import FailureClassifier, HeuristicWeights
from ..policy import LadderConfig
from . import fixtures, targets
from .models import FailureProneModel
from .report import build_report, schema_valid

# Seed stream offsets so target, model plan, and sampler draws stay independent.
_TARGET_STREAM = 31337
_MODEL_STREAM = 700001


def _task_contract(task: dict, cache: dict[str, tuple[ContractSpec, Contract]]) -> tuple[ContractSpec, Contract]:
    ref = task["contract"]
    if ref not in cache:
        spec = fixtures.load_contract_spec(ref)
        cache[ref] = (spec, compile_spec(spec))
    return cache[ref]


def run_task(
    task: dict,
    policy: LadderConfig,
    classifier: FailureClassifier | None = None,
    heuristic: HeuristicWeights | None = None,
    contract_cache: dict | None = None,
) -> list[RunResult]:
    cache = contract_cache if contract_cache is not None else {}
    spec, contract = _task_contract(task, cache)
    model_cfg = dict(task.get("model", {}))
    sampling_mode = task.get("sampling", "greedy")
    max_tokens = int(task.get("max_tokens", 160))
    drop_key = task.get("drop_key")
    results = []
    for i in range(int(task["trials"])):
        seed = int(task["base_seed"]) + i
        target = targets.make_target(spec, seed + _TARGET_STREAM, drop_key)
        model = FailureProneModel(target=target, seed=seed + _MODEL_STREAM, **model_cfg)
        result = generate(
            model,
            prompt=[],
            contract=contract,
            classifier=classifier,
            heuristic=heuristic,
            policy_cfg=policy,
            sampling=SamplingConfig(mode=sampling_mode, seed=seed),
            max_tokens=max_tokens,
        )
        results.append(result)
    return results


def run_suite(
    suite: dict | str,
    policy: LadderConfig,
    out_dir: str | Path | None = None,
    classifier: FailureClassifier | None = None,
    heuristic: HeuristicWeights | None = None,
) -> dict:
    """Run every (task, seed) exactly once; returns (and optionally writes) the report."""
    doc = fixtures.load_suite(suite) if isinstance(suite, str) else suite
    mode = "baseline" if policy.observe_only else "controlled"
    cache: dict = {}
    per_task: dict[str, list[RunResult]] = {}
    for task in doc["tasks"]:
        per_task[task["name"]] = run_task(
            task, policy, classifier=classifier, heuristic=heuristic, contract_cache=cache
        )
    report = build_report(doc, mode, policy, per_task)
    if out_dir is not None:
        out = Path(out_dir)
        (out / "logs").mkdir(parents=True, exist_ok=True)
        manifest = {"suite": doc["name"], "mode": mode, "tasks": {}}
        for task in doc["tasks"]:
            name = task["name"]
            spec, _ = _task_contract(task, cache)
            manifest["tasks"][name] = spec.to_dict()
            write_trajectory_log(out / "logs" / f"{name}.jsonl", name, per_task[name])
        (out / "logs" / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        (out / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True), encoding="utf-8"
        )
    return report


def write_trajectory_log(path: Path, task_name: str, results: list[RunResult]) -> None:
    """One JSON document per step plus one terminal record per run."""
    with path.open("w", encoding="utf-8") as fh:
        for r in results:
            run_id = f"{task_name}-{r.seed}"
            for rec in r.steps:
                fh.write(json.dumps(rec.to_dict(run_id), sort_keys=True) + "\n")
            terminal = {
                "run_id": run_id,
                "valid": r.valid,
                "schema_valid": schema_valid(r),
                "diagnostics": r.diagnostics,
                "corrections": r.corrections,
                "max_rollback_used": r.max_rollback_used,
                "wall_ms": r.wall_ms,
                "cost": r.cost,
                "text": r.text,
                "terminal_reason": r.terminal_reason,
                "seed": r.seed,
            }
            fh.write(json.dumps(terminal, sort_keys=True) + "\n")


# Failure-probability grid cycled over training runs. Half the cells are
# clean or nearly clean so run-level labels stay balanced; a lopsided base
# rate floors the learned failure probability everywhere (weak labeling).
_TRAIN_GRID = (
    {"p_preamble": 0.0, "p_fence": 0.0, "p_trailing": 0.0},
    {"p_preamble": 0.9, "p_fence": 0.0, "p_trailing": 0.1},
    {"p_preamble": 0.1, "p_fence": 0.0, "p_trailing": 0.0},
    {"p_preamble": 0.3, "p_fence": 0.6, "p_trailing": 0.0},
    {"p_preamble": 0.0, "p_fence": 0.1, "p_trailing": 0.0},
    {"p_preamble": 0.0, "p_fence": 0.9, "p_trailing": 0.3},
    {"p_preamble": 0.0, "p_fence": 0.0, "p_trailing": 0.1},
    {"p_preamble": 0.6, "p_fence": 0.3, "p_trailing": 0.5},
)


def gen_training_data(
    suite: dict | str,
    runs: int,
    out_dir: str | Path,
    base_seed: int = 77000,
) -> Path:
    """Baseline-mode runs with failure probabilities varied across a grid.

    Logs land in out_dir/logs (one file per task plus manifest) in the same
    format as run_suite, ready for labeling and classifier training.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    doc = fixtures.load_suite(suite) if isinstance(suite, str) else suite
    tasks = doc["tasks"]
    baseline = LadderConfig.baseline()
    cache: dict = {}
    per_task: dict[str, list[RunResult]] = {t["name"]: [] for t in tasks}
    for r in range(runs):
        task = dict(tasks[r % len(tasks)])
        grid = dict(_TRAIN_GRID[(r // len(tasks)) % len(_TRAIN_GRID)])
        model_cfg = dict(task.get("model", {}))
        model_cfg.update(grid)
        task["model"] = model_cfg
        task["trials"] = 1
        task["base_seed"] = base_seed + r
        per_task[task["name"]].extend(run_task(task, baseline, contract_cache=cache))
    out = Path(out_dir)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    manifest = {"suite": doc["name"], "mode": "baseline", "tasks": {}}
    for task in tasks:
        name = task["name"]
        spec, _ = _task_contract(task, cache)
        manifest["tasks"][name] = spec.to_dict()
        write_trajectory_log(out / "logs" / f"{name}.jsonl", name, per_task[name])
    (out / "logs" / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return out / "logs"
