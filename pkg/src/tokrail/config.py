"""Policy/runtime configuration documents shared by the CLI and the hook."""

from __future__ import annotations

from .drift import FailureClassifier, HeuristicWeights
from .policy import LadderConfig


def default_config_doc() -> dict:
    doc = LadderConfig().to_dict()
    hw = HeuristicWeights()
    doc["heuristic"] = {"w_mass": hw.w_mass, "w_argmax": hw.w_argmax, "w_entropy": hw.w_entropy}
    doc["classifier"] = None
    return doc


def parse_policy_doc(doc: dict) -> tuple[LadderConfig, HeuristicWeights, FailureClassifier | None]:
    """Parse one policy document (ladder fields plus optional heuristic and
    classifier sections). Raises ValueError/KeyError/TypeError on bad input."""
    cfg = LadderConfig.from_dict(doc)
    h = doc.get("heuristic") or {}
    heuristic = HeuristicWeights(
        w_mass=float(h.get("w_mass", 0.6)),
        w_argmax=float(h.get("w_argmax", 0.3)),
        w_entropy=float(h.get("w_entropy", 0.1)),
    )
    clf_doc = doc.get("classifier")
    classifier = FailureClassifier.from_dict(clf_doc) if clf_doc else None
    return cfg, heuristic, classifier
