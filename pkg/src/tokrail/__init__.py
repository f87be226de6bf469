"""tokrail: closed-loop runtime control for structured token generation.

A per-step controller observes the model's token distribution, tracks
progress through a compiled JSON output contract, scores drift with rule
and learned detectors, and applies graduated logit interventions up to
mid-generation rollback with re-steering.
"""

from . import contract, controller, drift, harness, kernels, logits, policy, validator
from .contract import Contract, ContractSpec, ContractState, KeyField, Stage, compile_spec, invalid_mass
from .controller import (
    ControlSession,
    RollbackBuffer,
    RunResult,
    RuntimeState,
    SamplingConfig,
    generate,
    replay_check,
    uncontrolled_sample,
)
from .drift import (
    DriftFeatures,
    FailureClassifier,
    HeuristicWeights,
    extract_features,
    failure_prob,
    heuristic_drift,
    label_trajectories,
    risk,
    train_classifier,
)
from .logits import (
    SUPPRESSED,
    ContractDeadlockError,
    Vocabulary,
    apply_bias,
    apply_mask,
    apply_temperature,
    entropy,
    sample,
    softmax,
    top_k,
)
from .policy import ActionKind, ControlAction, LadderConfig, action_cost, apply, decide
from .validator import ValidationReport, validate

__version__ = "0.1.0"
