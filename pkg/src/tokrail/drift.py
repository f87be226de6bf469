"""Per-step drift signals: feature extraction, a rule-based score, a learned
logistic failure model with its trainer, and the combined risk."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .contract import ContractSpec, ContractState
from .validator import validate

FEATURE_VERSION = 1
N_FEATURES = 7
FEATURE_NAMES = (
    "entropy_norm",
    "max_prob",
    "invalid_mass",
    "argmax_inadmissible",
    "steps_since_progress",
    "corrections_norm",
    "is_structural",
)
_PROGRESS_CAP = 16


@dataclass(frozen=True)
class DriftFeatures:
    """Fixed-arity feature vector; field order is the classifier's index order."""

    entropy_norm: float
    max_prob: float
    invalid_mass: float
    argmax_inadmissible: float
    steps_since_progress: float
    corrections_norm: float
    is_structural: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.entropy_norm,
                self.max_prob,
                self.invalid_mass,
                self.argmax_inadmissible,
                self.steps_since_progress,
                self.corrections_norm,
                self.is_structural,
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "DriftFeatures":
        if len(arr) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(arr)}")
        return cls(*(float(v) for v in arr))


@dataclass(frozen=True)
class HeuristicWeights:
    """Mixing weights for the rule-based drift score."""

    w_mass: float = 0.6
    w_argmax: float = 0.3
    w_entropy: float = 0.1

    def __post_init__(self):
        if min(self.w_mass, self.w_argmax, self.w_entropy) < 0:
            raise ValueError("heuristic weights must be nonnegative")
        if self.w_mass + self.w_argmax + self.w_entropy > 1.0 + 1e-12:
            raise ValueError("heuristic weights must sum to at most 1")


@dataclass(frozen=True)
class FailureClassifier:
    """Logistic model over DriftFeatures."""

    weights: tuple[float, ...]
    bias: float

    def __post_init__(self):
        if len(self.weights) != N_FEATURES:
            raise ValueError(f"classifier expects {N_FEATURES} weights")
        if not all(np.isfinite(w) for w in self.weights) or not np.isfinite(self.bias):
            raise ValueError("classifier parameters must be finite")

    @classmethod
    def zeros(cls) -> "FailureClassifier":
        return cls(weights=(0.0,) * N_FEATURES, bias=0.0)

    def to_dict(self) -> dict:
        return {
            "weights": list(self.weights),
            "bias": self.bias,
            "feature_version": FEATURE_VERSION,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FailureClassifier":
        if doc.get("feature_version") != FEATURE_VERSION:
            raise ValueError(f"unsupported feature_version {doc.get('feature_version')!r}")
        return cls(weights=tuple(float(w) for w in doc["weights"]), bias=float(doc["bias"]))


def extract_features(
    dist: np.ndarray,
    state: ContractState,
    allowed: np.ndarray | Iterable[int],
    steps_since_progress: int,
    corrections: int,
    max_corrections: int,
    vocab_size: int,
) -> DriftFeatures:
    arr = np.asarray(dist, dtype=np.float64)
    if isinstance(allowed, np.ndarray) and allowed.dtype == np.uint8:
        mask = allowed
    else:
        mask = np.zeros(vocab_size, dtype=np.uint8)
        for i in allowed:
            mask[i] = 1
    h = kernels.entropy(arr)
    h_norm = h / np.log(vocab_size) if vocab_size > 1 else 0.0
    am = kernels.argmax_low(arr)
    return DriftFeatures(
        entropy_norm=float(min(max(h_norm, 0.0), 1.0)),
        max_prob=float(arr[am]),
        invalid_mass=float(min(max(kernels.invalid_mass(arr, mask), 0.0), 1.0)),
        argmax_inadmissible=0.0 if mask[am] else 1.0,
        steps_since_progress=min(steps_since_progress, _PROGRESS_CAP) / _PROGRESS_CAP,
        corrections_norm=min(corrections / max_corrections, 1.0) if max_corrections > 0 else 0.0,
        is_structural=1.0 if state.is_structural else 0.0,
    )


def heuristic_drift(f: DriftFeatures, w: HeuristicWeights) -> float:
    """Rule-based drift score; entropy counts only at structural stages."""
    raw = (
        w.w_mass * f.invalid_mass
        + w.w_argmax * f.argmax_inadmissible
        + w.w_entropy * f.entropy_norm * f.is_structural
    )
    return min(max(raw, 0.0), 1.0)


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return float(e / (1.0 + e))


def failure_prob(c: FailureClassifier, f: DriftFeatures) -> float:
    z = float(np.dot(np.asarray(c.weights), f.as_array()) + c.bias)
    return sigmoid(z)


def risk(d: float, f: float) -> float:
    """Combined risk: the more alarmed of the two detectors wins."""
    return max(d, f)


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 0.5
    epochs: int = 400
    l2: float = 1e-4


@dataclass
class TrainResult:
    classifier: FailureClassifier
    final_loss: float
    losses: list[float]
    warning: str | None = None


def logistic_loss(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float) -> float:
    z = X @ w + b
    # log(1 + e^z) - y*z, numerically stable
    per = np.logaddexp(0.0, z) - y * z
    return float(per.mean() + l2 * float(w @ w))


def logistic_grad(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float
) -> tuple[np.ndarray, float]:
    z = X @ w + b
    p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    r = p - y
    gw = X.T @ r / X.shape[0] + 2.0 * l2 * w
    gb = float(r.mean())
    return gw, gb


def train_classifier(
    dataset: Sequence[tuple[DriftFeatures, int]],
    hyper: TrainHyper = TrainHyper(),
) -> TrainResult:
    """Full-batch gradient descent from zero init; deterministic."""
    if not dataset:
        raise ValueError("dataset must be nonempty")
    X = np.stack([f.as_array() for f, _ in dataset])
    y = np.array([float(lbl) for _, lbl in dataset])
    warning = None
    if len(set(y.tolist())) < 2:
        warning = "degenerate dataset: only one label present"
    w = np.zeros(N_FEATURES)
    b = 0.0
    losses = [logistic_loss(X, y, w, b, hyper.l2)]
    for _ in range(hyper.epochs):
        gw, gb = logistic_grad(X, y, w, b, hyper.l2)
        w = w - hyper.learning_rate * gw
        b = b - hyper.learning_rate * gb
        losses.append(logistic_loss(X, y, w, b, hyper.l2))
    clf = FailureClassifier(weights=tuple(float(v) for v in w), bias=b)
    return TrainResult(classifier=clf, final_loss=losses[-1], losses=losses, warning=warning)


def classify_accuracy(clf: FailureClassifier, dataset: Sequence[tuple[DriftFeatures, int]]) -> float:
    hits = sum(1 for f, lbl in dataset if (failure_prob(clf, f) >= 0.5) == bool(lbl))
    return hits / len(dataset)


# ---------------------------------------------------------------------------
# trajectory labeling


@dataclass
class LabeledRuns:
    """Per-run feature blocks with run-level labels (weak labeling)."""

    runs: list[tuple[str, np.ndarray, int]]
    skipped: int = 0
    warning: str | None = None

    def flatten(self) -> list[tuple[DriftFeatures, int]]:
        out = []
        for _, feats, label in self.runs:
            for row in feats:
                out.append((DriftFeatures.from_array(row), label))
        return out


def label_trajectories(lines: Iterable[str], spec: ContractSpec) -> LabeledRuns:
    """Assign each step of a run the run's terminal outcome.

    The terminal label is recomputed with validate() on the recorded final
    text (not trusted from the log). Malformed lines are skipped and counted.
    """
    steps: dict[str, list[list[float]]] = {}
    finals: dict[str, str] = {}
    skipped = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            run_id = rec["run_id"]
            if "features" in rec:
                feats = [float(v) for v in rec["features"]]
                if len(feats) != N_FEATURES:
                    raise ValueError("bad feature arity")
                steps.setdefault(run_id, []).append(feats)
            elif "text" in rec:
                finals[run_id] = rec["text"]
            else:
                raise ValueError("record is neither step nor terminal")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            skipped += 1
    runs = []
    for run_id, feats in steps.items():
        if run_id not in finals:
            skipped += 1
            continue
        label = 0 if validate(finals[run_id], spec).valid else 1
        runs.append((run_id, np.asarray(feats, dtype=np.float64), label))
    runs.sort(key=lambda r: r[0])
    warning = "empty dataset" if not runs else None
    return LabeledRuns(runs=runs, skipped=skipped, warning=warning)


def heldout_split(labeled: LabeledRuns, heldout_fraction: float = 0.2) -> tuple[LabeledRuns, LabeledRuns]:
    """Stable run-level split keyed by a hash of the run id."""
    buckets = max(2, round(1.0 / heldout_fraction))
    train, held = [], []
    for run in labeled.runs:
        h = int.from_bytes(hashlib.sha1(run[0].encode("utf-8")).digest()[:4], "big")
        (held if h % buckets == 0 else train).append(run)
    return (
        LabeledRuns(runs=train, skipped=labeled.skipped),
        LabeledRuns(runs=held, skipped=0),
    )
