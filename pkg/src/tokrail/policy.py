"""Graduated intervention ladder: risk bands to control actions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import logits as lg


class ActionKind(IntEnum):
    """Ordered by intervention strength."""

    NOOP = 0
    BIAS = 1
    TEMPERATURE = 2
    MASK = 3
    CORRECT = 4

    @property
    def label(self) -> str:
        return _KIND_LABELS[int(self)]


_KIND_LABELS = ("noop", "bias", "temperature", "mask", "correct")
_KIND_BY_LABEL = {l: ActionKind(i) for i, l in enumerate(_KIND_LABELS)}


@dataclass(frozen=True)
class ControlAction:
    kind: ActionKind
    beta: float | None = None
    tau: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.kind == ActionKind.CORRECT and (self.n is None or self.n < 1):
            raise ValueError("correct must carry n >= 1")

    def label(self) -> str:
        return self.kind.label

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.label}
        if self.beta is not None:
            d["beta"] = self.beta
        if self.tau is not None:
            d["tau"] = self.tau
        if self.n is not None:
            d["n"] = self.n
        return d


NOOP = ControlAction(ActionKind.NOOP)


@dataclass(frozen=True)
class LadderConfig:
    """Risk bands plus the knobs every intervention needs.

    thresholds are non-decreasing; theta1 >= 1 is the documented "control
    disabled" configuration used for baselines. lam only scales the cost
    figure in reports and never feeds back into decisions.
    """

    thresholds: tuple[float, float, float, float] = (0.2, 0.4, 0.6, 0.85)
    beta: float = 4.0
    tau: float = 0.7
    rollback_depth: int = 2
    max_rollback_depth: int = 3
    max_corrections: int = 4
    value_stage_cap: ActionKind = ActionKind.BIAS
    lam: float = 0.1
    mask_at_value_stages: bool = False
    temperature_only_band: bool = False
    progress_patience: int = 8

    def __post_init__(self):
        t1, t2, t3, t4 = self.thresholds
        if not (0.0 <= t1 <= t2 <= t3 <= t4 <= 1.0):
            raise ValueError("thresholds must satisfy 0 <= t1 <= t2 <= t3 <= t4 <= 1")
        if not (0 < self.tau <= 1):
            raise ValueError("tau must be in (0, 1]")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if self.rollback_depth < 1 or self.rollback_depth > self.max_rollback_depth:
            raise ValueError("need 1 <= rollback_depth <= max_rollback_depth")
        if self.max_corrections < 0:
            raise ValueError("max_corrections must be nonnegative")
        if self.progress_patience < 1:
            raise ValueError("progress_patience must be positive")
        if self.value_stage_cap == ActionKind.CORRECT:
            raise ValueError("correct is never permitted at value stages")

    @property
    def observe_only(self) -> bool:
        return self.thresholds[0] >= 1.0

    @classmethod
    def baseline(cls) -> "LadderConfig":
        return cls(thresholds=(1.0, 1.0, 1.0, 1.0))

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "beta": self.beta,
            "tau": self.tau,
            "rollback_depth": self.rollback_depth,
            "max_rollback_depth": self.max_rollback_depth,
            "max_corrections": self.max_corrections,
            "value_stage_cap": self.value_stage_cap.label,
            "lambda": self.lam,
            "mask_at_value_stages": self.mask_at_value_stages,
            "temperature_only_band": self.temperature_only_band,
            "progress_patience": self.progress_patience,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LadderConfig":
        kwargs: dict = {}
        if "thresholds" in doc:
            kwargs["thresholds"] = tuple(float(t) for t in doc["thresholds"])
        for k in (
            "beta", "tau", "rollback_depth", "max_rollback_depth", "max_corrections",
            "mask_at_value_stages", "temperature_only_band", "progress_patience",
        ):
            if k in doc:
                kwargs[k] = doc[k]
        if "lambda" in doc:
            kwargs["lam"] = float(doc["lambda"])
        if "value_stage_cap" in doc:
            kwargs["value_stage_cap"] = _KIND_BY_LABEL[doc["value_stage_cap"]]
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "LadderConfig":
        return cls.from_dict(json.loads(text))


def decide(
    rho: float,
    stage_is_structural: bool,
    corrections_used: int,
    cfg: LadderConfig,
) -> ControlAction:
    """Weakest plausible intervention for the current risk, then stage gating."""
    if cfg.observe_only:
        return NOOP
    t1, t2, t3, t4 = cfg.thresholds
    if rho < t1:
        action = NOOP
    elif rho < t2:
        action = ControlAction(ActionKind.BIAS, beta=cfg.beta)
    elif rho < t3:
        if cfg.temperature_only_band:
            action = ControlAction(ActionKind.TEMPERATURE, tau=cfg.tau)
        else:
            action = ControlAction(ActionKind.TEMPERATURE, tau=cfg.tau, beta=cfg.beta)
    elif rho < t4:
        action = ControlAction(ActionKind.MASK)
    else:
        if corrections_used < cfg.max_corrections:
            action = ControlAction(ActionKind.CORRECT, n=cfg.rollback_depth, beta=cfg.beta)
        else:
            action = ControlAction(ActionKind.MASK)
    if not stage_is_structural:
        cap = cfg.value_stage_cap
        if cfg.mask_at_value_stages and action.kind in (ActionKind.MASK, ActionKind.CORRECT):
            return ControlAction(ActionKind.MASK)
        if action.kind > cap:
            return _at_strength(cap, cfg)
    return action


def _at_strength(kind: ActionKind, cfg: LadderConfig) -> ControlAction:
    if kind == ActionKind.NOOP:
        return NOOP
    if kind == ActionKind.BIAS:
        return ControlAction(ActionKind.BIAS, beta=cfg.beta)
    if kind == ActionKind.TEMPERATURE:
        if cfg.temperature_only_band:
            return ControlAction(ActionKind.TEMPERATURE, tau=cfg.tau)
        return ControlAction(ActionKind.TEMPERATURE, tau=cfg.tau, beta=cfg.beta)
    if kind == ActionKind.MASK:
        return ControlAction(ActionKind.MASK)
    raise ValueError("correct cannot be produced by clamping")


def apply(action: ControlAction, logit_values: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    """Apply a primitive action; `allowed` is a uint8 mask over the vocabulary.

    correct is a controller-level composite and is rejected here.
    """
    kind = action.kind
    if kind == ActionKind.NOOP:
        return logit_values
    if kind == ActionKind.BIAS:
        return lg.kernels.apply_bias(logit_values, allowed, float(action.beta))
    if kind == ActionKind.TEMPERATURE:
        out = lg.kernels.apply_temperature(logit_values, float(action.tau))
        if action.beta is not None:
            out = lg.kernels.apply_bias(out, allowed, float(action.beta))
        return out
    if kind == ActionKind.MASK:
        return lg.apply_mask_array(logit_values, allowed)
    raise ValueError("correct is a composite action and cannot be applied to logits")


_BASE_COST = {
    ActionKind.NOOP: 0.0,
    ActionKind.BIAS: 1.0,
    ActionKind.TEMPERATURE: 2.0,
    ActionKind.MASK: 3.0,
}


def action_cost(action: ControlAction) -> float:
    """Reporting-only intervention cost; a run's cost is the per-step sum."""
    if action.kind == ActionKind.CORRECT:
        return 5.0 + float(action.n or 0)
    return _BASE_COST[action.kind]
