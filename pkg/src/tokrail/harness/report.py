"""Benchmark report assembly and baseline/controlled comparison."""

from __future__ import annotations

import json
from typing import Sequence

from .. import kernels
from ..controller import RunResult
from ..policy import LadderConfig

_SYNTAX_CODES = {"parse_error", "extra_prefix", "extra_suffix"}


def run_metrics(results: Sequence[RunResult], lam: float) -> dict:
    n = len(results)
    hist: dict[str, int] = {}
    reasons: dict[str, int] = {}
    for r in results:
        for k, v in r.action_histogram().items():
            hist[k] = hist.get(k, 0) + v
        reasons[r.terminal_reason] = reasons.get(r.terminal_reason, 0) + 1
    mean_cost = sum(r.cost for r in results) / n
    return {
        "n_runs": n,
        "first_attempt_success": sum(r.valid for r in results) / n,
        "schema_validity": sum(schema_valid(r) for r in results) / n,
        "mean_corrections": sum(r.corrections for r in results) / n,
        "max_rollback_depth": max((r.max_rollback_used for r in results), default=0),
        "intervention_histogram": hist,
        "terminal_reasons": reasons,
        "mean_cost": mean_cost,
        "lambda_cost": lam * mean_cost,
    }


def schema_valid(result: RunResult) -> bool:
    """Syntactically one well-formed JSON object, schema conformance aside."""
    return not any(d["code"] in _SYNTAX_CODES for d in result.diagnostics)


def build_report(
    suite: dict,
    mode: str,
    policy: LadderConfig,
    per_task: dict[str, list[RunResult]],
) -> dict:
    tasks = {}
    everything: list[RunResult] = []
    for name, results in per_task.items():
        m = run_metrics(results, policy.lam)
        m["seeds"] = [r.seed for r in results]
        m["timing"] = {"mean_wall_ms": sum(r.wall_ms for r in results) / len(results)}
        tasks[name] = m
        everything.extend(results)
    overall = run_metrics(everything, policy.lam)
    overall["timing"] = {"mean_wall_ms": sum(r.wall_ms for r in everything) / len(everything)}
    return {
        "suite": suite["name"],
        "regime": suite.get("regime", ""),
        "mode": mode,
        "policy": policy.to_dict(),
        "backend": kernels.BACKEND,
        "tasks": tasks,
        "overall": overall,
    }


def strip_timing(report: dict) -> dict:
    """Reproducibility view: drop wall-clock fields."""
    out = json.loads(json.dumps(report))
    out["overall"].pop("timing", None)
    for t in out["tasks"].values():
        t.pop("timing", None)
    return out


def _pp(x: float) -> float:
    return round(x * 100.0, 1)


def compare(baseline: dict, controlled: dict) -> dict:
    """Per-task and overall deltas; requires identical suites and seeds."""
    if baseline["suite"] != controlled["suite"]:
        raise ValueError("reports come from different suites")
    if set(baseline["tasks"]) != set(controlled["tasks"]):
        raise ValueError("reports cover different tasks")
    rows = {}
    for name in sorted(baseline["tasks"]):
        a, b = baseline["tasks"][name], controlled["tasks"][name]
        if a["seeds"] != b["seeds"]:
            raise ValueError(f"task {name!r}: seed lists differ")
        rows[name] = _delta_row(a, b)
    rows["overall"] = _delta_row(baseline["overall"], controlled["overall"])
    return {
        "suite": baseline["suite"],
        "tasks": rows,
    }


def _delta_row(a: dict, b: dict) -> dict:
    sa, sb = a["first_attempt_success"], b["first_attempt_success"]
    la = a["timing"]["mean_wall_ms"]
    lb = b["timing"]["mean_wall_ms"]
    return {
        "baseline_success": _pp(sa),
        "controlled_success": _pp(sb),
        "delta_pp": round(_pp(sb) - _pp(sa), 1),
        "schema_validity_delta_pp": round(_pp(b["schema_validity"]) - _pp(a["schema_validity"]), 1),
        "latency_ratio": round(lb / la, 3) if la > 0 else None,
        "mean_corrections": b["mean_corrections"],
    }


def format_compare(delta: dict) -> str:
    lines = []
    for name, row in delta["tasks"].items():
        lines.append(
            f"{name}: {row['baseline_success']:.1f}% -> {row['controlled_success']:.1f}% "
            f"({row['delta_pp']:+.1f}pp)"
        )
    return "\n".join(lines)
