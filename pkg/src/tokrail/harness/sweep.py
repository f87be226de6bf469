"""Threshold-sweep mode: rerun one suite across a grid of ladder bands."""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from ..drift import FailureClassifier, HeuristicWeights
from ..policy import LadderConfig
from . import fixtures
from .suite import run_suite


def threshold_sweep(
    suite: dict | str,
    threshold_sets: list[tuple[float, float, float, float]],
    base_policy: LadderConfig | None = None,
    out_dir: str | Path | None = None,
    classifier: FailureClassifier | None = None,
    heuristic: HeuristicWeights | None = None,
) -> dict:
    """Run the suite once per threshold quadruple; identical seeds throughout.

    Returns {"sweep": [{"thresholds": [...], "overall": {...}}, ...]} ordered
    as given, plus the shared suite name.
    """
    if not threshold_sets:
        raise ValueError("threshold_sets must be nonempty")
    doc = fixtures.load_suite(suite) if isinstance(suite, str) else suite
    base = base_policy or LadderConfig()
    rows = []
    for ts in threshold_sets:
        cfg = replace(base, thresholds=tuple(float(t) for t in ts))
        report = run_suite(doc, cfg, classifier=classifier, heuristic=heuristic)
        rows.append(
            {
                "thresholds": list(cfg.thresholds),
                "overall": {
                    k: report["overall"][k]
                    for k in (
                        "first_attempt_success",
                        "schema_validity",
                        "mean_corrections",
                        "max_rollback_depth",
                        "mean_cost",
                    )
                },
            }
        )
    result = {"suite": doc["name"], "sweep": rows}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(json.dumps(result, indent=2, sort_keys=True), encoding="utf-8")
    return result
