"""Per-step logits hook for external inference stacks.

Exposes the control loop as three calls over a JSON-lines protocol
(stdin/stdout via `tokrail hook-serve`): open a session with a contract and
policy (both as JSON strings) plus the host's vocabulary table, then feed
each decoding step's token prefix and flat logits array, and close to get a
summary. The hook performs no sampling and owns no cache: a rollback_request
of n in a step response asks the host to drop its n trailing tokens (and
truncate its cache) and call again from the shortened position.

Wire conventions: arrays are flat JSON lists; suppressed logits (-inf) cross
as null in both directions, since JSON has no infinities. Responses are
serialized canonically (sorted keys, compact separators), so recorded
exchanges are byte-reproducible.
"""

from __future__ import annotations

import json
import sys

import numpy as np

from .config import parse_policy_doc
from .contract import ContractError, ContractSpec, compile_spec
from .controller import ControlSession
from .logits import Vocabulary


def encode_logits(values: np.ndarray) -> list:
    return [None if v == float("-inf") else float(v) for v in values.tolist()]


def decode_logits(values: list) -> np.ndarray:
    return np.array([float("-inf") if v is None else float(v) for v in values], dtype=np.float64)


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


class HookError(Exception):
    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class HookRegistry:
    """Independent sessions, one per generation; ids are never reused."""

    def __init__(self):
        self._sessions: dict[str, ControlSession] = {}
        self._counter = 0

    def open(self, payload: dict) -> dict:
        try:
            contract_json = payload["contract"]
            policy_json = payload["policy"]
            vocab_table = payload["vocab"]
        except KeyError as exc:
            raise HookError(f"open is missing field {exc}") from exc
        try:
            spec = ContractSpec.from_json(contract_json)
        except ContractError as exc:
            pos = getattr(getattr(exc, "__cause__", None), "pos", None)
            raise HookError(f"bad contract: {exc}", position=pos) from exc
        try:
            policy_doc = json.loads(policy_json)
        except json.JSONDecodeError as exc:
            raise HookError(f"bad policy JSON: {exc}", position=exc.pos) from exc
        try:
            cfg, heuristic, classifier = parse_policy_doc(policy_doc)
            vocab = Vocabulary(vocab_table)
        except (ValueError, KeyError, TypeError) as exc:
            raise HookError(f"bad configuration: {exc}") from exc
        eos = payload.get("eos_token_id")
        if eos is not None and not 0 <= int(eos) < vocab.size:
            raise HookError(f"eos_token_id {eos} outside vocabulary")
        session = ControlSession(
            compile_spec(spec),
            vocab,
            cfg,
            heuristic=heuristic,
            classifier=classifier,
            eos_token_id=None if eos is None else int(eos),
            rollback_supported=bool(payload.get("supports_rollback", True)),
        )
        self._counter += 1
        session_id = f"s{self._counter}"
        self._sessions[session_id] = session
        return {"ok": True, "session_id": session_id}

    def _get(self, payload: dict) -> tuple[str, ControlSession]:
        sid = payload.get("session_id")
        session = self._sessions.get(sid)
        if session is None:
            raise HookError(f"unknown session {sid!r}")
        return sid, session

    def step(self, payload: dict) -> dict:
        _, session = self._get(payload)
        try:
            token_ids = [int(t) for t in payload["token_ids"]]
            raw_list = payload["logits"]
        except (KeyError, TypeError, ValueError) as exc:
            raise HookError(f"bad step payload: {exc}") from exc
        if len(raw_list) != session.vocab.size:
            raise HookError(
                f"logits length {len(raw_list)} != vocabulary size {session.vocab.size}"
            )
        try:
            status = session.sync(token_ids)
        except ValueError as exc:
            raise HookError(str(exc)) from exc
        if status.done:
            return {
                "ok": True,
                "logits": raw_list,
                "rollback_request": 0,
                "done": True,
                "reason": status.reason,
            }
        raw = decode_logits(raw_list)
        try:
            decision = session.control(raw)
        except ValueError as exc:
            raise HookError(str(exc)) from exc
        if decision.deadlock:
            return {
                "ok": True,
                "logits": raw_list,
                "rollback_request": 0,
                "done": True,
                "reason": "deadlock",
            }
        if decision.rollback_request:
            return {
                "ok": True,
                "logits": raw_list,
                "rollback_request": decision.rollback_request,
                "done": False,
            }
        return {
            "ok": True,
            "logits": encode_logits(decision.controlled),
            "rollback_request": 0,
            "done": False,
        }

    def close(self, payload: dict) -> dict:
        sid, session = self._get(payload)
        del self._sessions[sid]
        return {"ok": True, "summary": session.summary()}

    def handle_line(self, line: str) -> str:
        try:
            try:
                req = json.loads(line)
            except json.JSONDecodeError as exc:
                raise HookError(f"request is not valid JSON: {exc.msg}", position=exc.pos) from exc
            op = req.get("op")
            if op == "open":
                resp = self.open(req)
            elif op == "step":
                resp = self.step(req)
            elif op == "close":
                resp = self.close(req)
            else:
                raise HookError(f"unknown op {op!r}")
        except HookError as exc:
            resp = {"ok": False, "error": str(exc)}
            if exc.position is not None:
                resp["position"] = exc.position
        return dumps(resp)


def serve_stdio() -> int:
    """Serve requests line by line until stdin closes."""
    registry = HookRegistry()
    out = sys.stdout
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        out.write(registry.handle_line(line) + "\n")
        out.flush()
    return 0
