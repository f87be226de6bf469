"""The closed control loop: observe, predict, control, sample, update.

ControlSession is the host-agnostic per-step engine: it mirrors the committed
token sequence, advances the contract, scores drift, picks an action and
shapes the logits, and asks its host for rollbacks instead of performing
them. generate() is the built-in host driving a ModelAdapter; the hook
binding is another host feeding externally produced logits, so both paths
run byte-identical control logic.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from . import logits as lg
from . import policy as pol
from .contract import Contract, ContractState, Stage
from .drift import (
    DriftFeatures,
    FailureClassifier,
    HeuristicWeights,
    extract_features,
    failure_prob,
    heuristic_drift,
    risk,
)
from .logits import Vocabulary
from .validator import validate


class ModelAdapter(Protocol):
    """Step-wise decoding interface with an opaque prefix cache.

    step() must be a deterministic function of the full token sequence:
    truncating the cache to length k and replaying tokens k..t must reproduce
    the original logits at t exactly.
    """

    vocab: Vocabulary
    eos_token_id: int | None

    def step(self, tokens: Sequence[int], cache: object | None) -> tuple[np.ndarray, object]:
        ...

    def truncate(self, cache: object, keep_len: int) -> object:
        ...


@dataclass(frozen=True)
class SamplingConfig:
    mode: str = "greedy"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("greedy", "multinomial"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")


@dataclass(frozen=True)
class Snapshot:
    """State checkpoint taken just before a token is committed."""

    n_tokens: int
    contract_state: ContractState
    steps_since_progress: int
    cache_len: int
    violations: int


class RollbackBuffer:
    """Ring of the most recent snapshots, newest last."""

    def __init__(self, depth: int):
        self.depth = depth
        self._ring: list[Snapshot] = []

    def push(self, snap: Snapshot) -> None:
        self._ring.append(snap)
        if len(self._ring) > self.depth:
            self._ring.pop(0)

    def pop_n(self, n: int) -> Snapshot:
        """Discard the n-1 newest snapshots and return the n-th newest."""
        if not 1 <= n <= len(self._ring):
            raise ValueError(f"cannot pop {n} snapshots from {len(self._ring)}")
        snap = self._ring[-n]
        del self._ring[-n:]
        return snap

    def __len__(self) -> int:
        return len(self._ring)


@dataclass
class RuntimeState:
    """Mutable per-generation state mirrored by the session."""

    tokens: list[int] = field(default_factory=list)
    logits_last: np.ndarray | None = None
    dist_last: np.ndarray | None = None
    entropy_last: float = 0.0
    contract_state: ContractState = field(default_factory=ContractState)
    drift_last: float = 0.0
    failure_last: float = 0.0
    corrections: int = 0
    steps_since_progress: int = 0
    cache_len: int = 0
    violations: int = 0


@dataclass
class StepRecord:
    step: int
    stage: str
    features: list[float]
    rho: float
    action: dict
    token_id: int
    rolled_back: int
    raw_hash: str
    cost: float

    def to_dict(self, run_id: str) -> dict:
        return {
            "run_id": run_id,
            "step": self.step,
            "stage": self.stage,
            "features": self.features,
            "rho": self.rho,
            "action": self.action,
            "token_id": self.token_id,
            "rolled_back": self.rolled_back,
        }


@dataclass
class RunResult:
    text: str
    valid: bool
    diagnostics: list[dict]
    steps: list[StepRecord]
    tokens: list[int]
    corrections: int
    max_rollback_used: int
    wall_ms: float
    cost: float
    terminal_reason: str
    final_stage: str
    violations: int
    seed: int
    enforcing: bool
    prompt: list[int] = field(default_factory=list)

    def action_histogram(self) -> dict[str, int]:
        hist: dict[str, int] = {}
        for rec in self.steps:
            k = rec.action["kind"]
            hist[k] = hist.get(k, 0) + 1
        return hist


@dataclass
class ControlDecision:
    """Outcome of one control() call."""

    controlled: np.ndarray | None = None
    rollback_request: int = 0
    deadlock: bool = False
    record: StepRecord | None = None


@dataclass
class SyncStatus:
    done: bool = False
    reason: str = ""


def _hash_logits(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype=np.float64).tobytes()).hexdigest()[:24]


class ControlSession:
    """Observe/predict/control engine for one generation.

    The host owns sampling and the model cache. Protocol per position:
    call sync(tokens) with the committed ids, stop if done; otherwise call
    control(raw_logits); on a rollback request drop that many trailing
    tokens (and truncate the cache) and start the position over; otherwise
    sample from the controlled logits and commit the token.
    """

    def __init__(
        self,
        contract: Contract,
        vocab: Vocabulary,
        cfg: pol.LadderConfig,
        heuristic: HeuristicWeights | None = None,
        classifier: FailureClassifier | None = None,
        eos_token_id: int | None = None,
        rollback_supported: bool = True,
    ):
        self.contract = contract
        self.vocab = vocab
        self.cfg = cfg
        self.heuristic = heuristic or HeuristicWeights()
        self.classifier = classifier
        self.eos_token_id = eos_token_id
        self.rollback_supported = rollback_supported
        self.enforcing = not cfg.observe_only

        self.state = RuntimeState(contract_state=contract.initial_state())
        self.buffer = RollbackBuffer(cfg.max_rollback_depth)
        self.records: list[StepRecord] = []
        self.max_rollback_used = 0
        self._pending: dict | None = None
        self._resteer_depth = 0
        self._await_truncate = 0

    @property
    def cost(self) -> float:
        # Summed over committed records only, so a report recomputed from the
        # trajectory log lands on the same figure after rollbacks.
        return sum(r.cost for r in self.records)

    # -- update phase --------------------------------------------------------

    def sync(self, tokens: Sequence[int]) -> SyncStatus:
        """Reconcile with the host's committed sequence and advance the contract."""
        st = self.state
        mine = st.tokens
        if len(tokens) < len(mine):
            drop = len(mine) - len(tokens)
            if drop != self._await_truncate:
                raise ValueError(f"host dropped {drop} tokens, expected {self._await_truncate}")
            snap = self.buffer.pop_n(drop)
            del mine[snap.n_tokens :]
            del self.records[snap.n_tokens :]
            st.contract_state = snap.contract_state
            st.steps_since_progress = snap.steps_since_progress
            st.cache_len = snap.cache_len
            st.violations = snap.violations
            self._resteer_depth = drop
            self._await_truncate = 0
        elif self._await_truncate:
            raise ValueError(f"rollback of {self._await_truncate} tokens not honored")
        if list(tokens[: len(mine)]) != mine:
            raise ValueError("committed prefix diverged from session mirror")
        for tok in tokens[len(mine) :]:
            status = self._commit(int(tok))
            if status.done:
                return status
        return self._termination_status()

    def _commit(self, token_id: int) -> SyncStatus:
        st = self.state
        if token_id == self.eos_token_id:
            # Control token: never stepped through the contract.
            st.tokens.append(token_id)
            self._finish_record(token_id)
            return SyncStatus(True, "eos")
        before = st.contract_state
        self.buffer.push(
            Snapshot(
                n_tokens=len(st.tokens),
                contract_state=before,
                steps_since_progress=st.steps_since_progress,
                cache_len=st.cache_len,
                violations=st.violations,
            )
        )
        st.tokens.append(token_id)
        nxt, violation = self.contract.step(before, token_id, self.vocab, enforcing=self.enforcing)
        if violation:
            st.violations += 1
        if nxt.as_tuple() != before.as_tuple():
            st.steps_since_progress = 0
        else:
            st.steps_since_progress += 1
        st.contract_state = nxt
        self._finish_record(token_id)
        return self._termination_status()

    def _finish_record(self, token_id: int) -> None:
        if self._pending is None:
            return
        p = self._pending
        self._pending = None
        rec = StepRecord(
            step=p["step"],
            stage=p["stage"],
            features=p["features"],
            rho=p["rho"],
            action=p["action"],
            token_id=token_id,
            rolled_back=p["rolled_back"],
            raw_hash=p["raw_hash"],
            cost=p["cost"],
        )
        self.records.append(rec)

    def _termination_status(self) -> SyncStatus:
        st = self.state
        stage = st.contract_state.stage
        if not self.enforcing:
            return SyncStatus(False, "")
        if stage == Stage.DONE:
            return SyncStatus(True, "done")
        if stage == Stage.FAILED:
            if (
                st.corrections >= self.cfg.max_corrections
                or not self.rollback_supported
                or len(self.buffer) == 0
            ):
                return SyncStatus(True, "failed_budget")
        return SyncStatus(False, "")

    # -- observe / predict / control ------------------------------------------

    def control(self, raw_logits: np.ndarray) -> ControlDecision:
        st = self.state
        stage_now = st.contract_state.stage

        if self.enforcing and stage_now == Stage.FAILED:
            # Certain violation: correct immediately, no observation needed.
            return self._request_rollback()

        raw = lg.check_logits(raw_logits, self.vocab.size)
        dist = lg.softmax(raw, 1.0)
        allowed = self._allowed_mask(st.contract_state)
        feats = extract_features(
            dist,
            st.contract_state,
            allowed,
            st.steps_since_progress,
            st.corrections,
            self.cfg.max_corrections,
            self.vocab.size,
        )
        d = heuristic_drift(feats, self.heuristic)
        f = failure_prob(self.classifier, feats) if self.classifier is not None else 0.0
        rho = risk(d, f)
        st.logits_last = raw
        st.dist_last = dist
        st.entropy_last = lg.entropy(dist)
        st.drift_last = d
        st.failure_last = f

        if self.enforcing and not allowed.any():
            # No admissible continuation exists; the run can never validate.
            return ControlDecision(deadlock=True)

        resteer = self._resteer_depth
        self._resteer_depth = 0
        if resteer and self.enforcing:
            ctl = lg.apply_mask_array(raw, allowed)
            ctl = lg.kernels.apply_bias(ctl, allowed, 2.0 * self.cfg.beta)
            st.corrections += 1
            self.max_rollback_used = max(self.max_rollback_used, resteer)
            action = pol.ControlAction(pol.ActionKind.CORRECT, n=resteer, beta=self.cfg.beta)
            self._stash(raw, feats, rho, action, rolled_back=resteer)
            return ControlDecision(controlled=ctl)

        if self.enforcing:
            action = pol.decide(rho, st.contract_state.is_structural, st.corrections, self.cfg)
            if (
                action.kind != pol.ActionKind.CORRECT
                and st.contract_state.is_structural
                and st.steps_since_progress >= self.cfg.progress_patience
                and st.corrections < self.cfg.max_corrections
            ):
                action = pol.ControlAction(
                    pol.ActionKind.CORRECT, n=self.cfg.rollback_depth, beta=self.cfg.beta
                )
            if action.kind == pol.ActionKind.CORRECT:
                if self.rollback_supported and len(self.buffer) > 0:
                    return self._request_rollback()
                action = pol.ControlAction(pol.ActionKind.MASK)
        else:
            action = pol.NOOP

        ctl = pol.apply(action, raw, allowed) if self.enforcing else raw
        self._stash(raw, feats, rho, action, rolled_back=0)
        return ControlDecision(controlled=ctl)

    def _request_rollback(self) -> ControlDecision:
        depth = min(self.cfg.rollback_depth, len(self.buffer))
        self._await_truncate = depth
        return ControlDecision(rollback_request=depth)

    def _stash(
        self,
        raw: np.ndarray,
        feats: DriftFeatures,
        rho: float,
        action: pol.ControlAction,
        rolled_back: int,
    ) -> None:
        self._pending = {
            "step": len(self.state.tokens),
            "stage": self.state.contract_state.stage.tag,
            "features": [float(v) for v in feats.as_array()],
            "rho": float(rho),
            "action": action.to_dict(),
            "cost": pol.action_cost(action),
            "rolled_back": rolled_back,
            "raw_hash": _hash_logits(raw),
        }

    def _allowed_mask(self, state: ContractState) -> np.ndarray:
        if state.is_absorbing:
            # Observe-only runs sample past Done; nothing is admissible there.
            mask = np.zeros(self.vocab.size, dtype=np.uint8)
            mask.flags.writeable = False
            return mask
        mask = self.contract.allowlist_mask(state, self.vocab)
        if self.eos_token_id is not None and mask[self.eos_token_id]:
            mask = mask.copy()
            mask[self.eos_token_id] = 0
            mask.flags.writeable = False
        return mask

    def summary(self) -> dict:
        st = self.state
        return {
            "valid_so_far": st.contract_state.stage == Stage.DONE,
            "corrections": st.corrections,
            "max_rollback_used": self.max_rollback_used,
            "cost": self.cost,
            "violations": st.violations,
            "stage": st.contract_state.stage.tag,
        }


def generate(
    model: ModelAdapter,
    prompt: Sequence[int],
    contract: Contract,
    classifier: FailureClassifier | None,
    heuristic: HeuristicWeights | None,
    policy_cfg: pol.LadderConfig,
    sampling: SamplingConfig,
    max_tokens: int,
) -> RunResult:
    """One closed-loop generation; exactly one attempt, no retries."""
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    vocab = model.vocab
    session = ControlSession(
        contract,
        vocab,
        policy_cfg,
        heuristic=heuristic,
        classifier=classifier,
        eos_token_id=model.eos_token_id,
    )
    rng = np.random.default_rng(sampling.seed)
    tokens: list[int] = []
    cache: object | None = None
    reason = "max_tokens"
    started = time.perf_counter()

    max_iters = max_tokens + policy_cfg.max_corrections * (policy_cfg.max_rollback_depth + 1) + 8
    for _ in range(max_iters):
        status = session.sync(tokens)
        if status.done:
            reason = status.reason
            break
        if len(tokens) >= max_tokens:
            reason = "max_tokens"
            break
        raw, cache = model.step(list(prompt) + tokens, cache)
        session.state.cache_len = len(prompt) + len(tokens)
        decision = session.control(raw)
        if decision.deadlock:
            reason = "deadlock"
            break
        if decision.rollback_request:
            depth = decision.rollback_request
            del tokens[len(tokens) - depth :]
            cache = model.truncate(cache, len(prompt) + len(tokens))
            continue
        dist = lg.softmax(decision.controlled, 1.0)
        token = lg.sample(dist, sampling.mode, rng)
        if token == model.eos_token_id:
            status = session.sync(tokens + [token])
            tokens.append(token)
            reason = "eos"
            break
        tokens.append(token)
    wall_ms = (time.perf_counter() - started) * 1000.0

    eos_skip = frozenset() if model.eos_token_id is None else frozenset({model.eos_token_id})
    text = vocab.decode(session.state.tokens, skip=eos_skip)
    report = validate(text, contract.spec)
    return RunResult(
        text=text,
        valid=report.valid,
        diagnostics=[d.__dict__ for d in report.diagnostics],
        steps=list(session.records),
        tokens=list(session.state.tokens),
        corrections=session.state.corrections,
        max_rollback_used=session.max_rollback_used,
        wall_ms=wall_ms,
        cost=session.cost,
        terminal_reason=reason,
        final_stage=session.state.contract_state.stage.tag,
        violations=session.state.violations,
        seed=sampling.seed,
        enforcing=session.enforcing,
        prompt=list(prompt),
    )


def uncontrolled_sample(
    model: ModelAdapter,
    prompt: Sequence[int],
    sampling: SamplingConfig,
    max_tokens: int,
) -> list[int]:
    """Reference sampler with no contract and no control; stops on EOS."""
    rng = np.random.default_rng(sampling.seed)
    tokens: list[int] = []
    cache: object | None = None
    while len(tokens) < max_tokens:
        raw, cache = model.step(list(prompt) + tokens, cache)
        dist = lg.softmax(raw, 1.0)
        token = lg.sample(dist, sampling.mode, rng)
        tokens.append(token)
        if token == model.eos_token_id:
            break
    return tokens


def replay_check(result: RunResult, model: ModelAdapter, contract: Contract) -> bool:
    """Recompute the committed trajectory from scratch, without any cache.

    True iff the recorded text matches the tokens, every per-position raw
    logit vector matches its recorded hash, and the contract fold lands on
    the recorded final stage.
    """
    vocab = model.vocab
    eos = model.eos_token_id
    eos_skip = frozenset() if eos is None else frozenset({eos})
    if vocab.decode(result.tokens, skip=eos_skip) != result.text:
        return False
    if len(result.steps) != len(result.tokens):
        return False
    state = contract.initial_state()
    violations = 0
    for t, (rec, tok) in enumerate(zip(result.steps, result.tokens)):
        raw, _ = model.step(list(result.prompt) + result.tokens[:t], None)
        if _hash_logits(raw) != rec.raw_hash:
            return False
        if rec.token_id != tok:
            return False
        if tok == eos:
            continue
        state, violation = contract.step(state, tok, vocab, enforcing=result.enforcing)
        violations += int(violation)
    return state.stage.tag == result.final_stage and violations == result.violations


__all__ = [
    "ModelAdapter",
    "SamplingConfig",
    "Snapshot",
    "RollbackBuffer",
    "RuntimeState",
    "StepRecord",
    "RunResult",
    "ControlSession",
    "ControlDecision",
    "SyncStatus",
    "generate",
    "uncontrolled_sample",
    "replay_check",
]
