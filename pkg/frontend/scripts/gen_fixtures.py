#!/usr/bin/env python3
"""Regenerates the conformance fixtures in frontend/fixtures/.

Each fixture records a full hook session as raw request/response lines,
produced by invoking the engine's registry directly (no subprocess): the
TypeScript binding replays the request lines through `tokrail hook-serve`
and must reproduce every response line byte for byte.

Run from the repo root: python3 frontend/scripts/gen_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from tokrail.config import default_config_doc
from tokrail.harness import FailureProneModel, load_contract_spec
from tokrail.hook import HookRegistry, decode_logits, dumps, encode_logits
from tokrail.logits import sample, softmax

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

SPEC_JSON = json.dumps(load_contract_spec("name_age_city").to_dict())
POLICY_JSON = json.dumps(default_config_doc())


def open_line(model, **over) -> str:
    doc = {
        "op": "open",
        "contract": SPEC_JSON,
        "policy": POLICY_JSON,
        "vocab": [model.vocab.text(i) for i in range(model.vocab.size)],
        "eos_token_id": model.eos_token_id,
    }
    doc.update(over)
    return dumps(doc)


def record_session(name: str, model, sampling_mode: str, seed: int, max_tokens: int = 96) -> dict:
    registry = HookRegistry()
    requests: list[str] = []
    responses: list[str] = []

    def call(line: str) -> dict:
        requests.append(line)
        out = registry.handle_line(line)
        responses.append(out)
        return json.loads(out)

    opened = call(open_line(model))
    sid = opened["session_id"]
    rng = np.random.default_rng(seed)
    tokens: list[int] = []
    cache = None
    steps = 0
    for _ in range(max_tokens + 40):
        raw, cache = model.step(tokens, cache)
        resp = call(dumps({"op": "step", "session_id": sid, "token_ids": list(tokens),
                           "logits": encode_logits(raw)}))
        steps += 1
        if resp["done"]:
            break
        if resp["rollback_request"]:
            n = resp["rollback_request"]
            del tokens[len(tokens) - n:]
            cache = model.truncate(cache, len(tokens))
            continue
        tok = sample(softmax(decode_logits(resp["logits"]), 1.0), sampling_mode, rng)
        if tok == model.eos_token_id:
            break
        tokens.append(tok)
        if len(tokens) >= max_tokens:
            break
    summary = call(dumps({"op": "close", "session_id": sid}))
    return {
        "name": name,
        "step_exchanges": steps,
        "corrections": summary["summary"]["corrections"],
        "requests": requests,
        "responses": responses,
    }


def record_errors() -> dict:
    registry = HookRegistry()
    requests = [
        '{"op": "open", bad json',
        dumps({"op": "step", "session_id": "s42", "token_ids": [], "logits": [0.0]}),
        dumps({"op": "nonsense"}),
        dumps({"op": "close", "session_id": "s42"}),
    ]
    responses = [registry.handle_line(r) for r in requests]
    return {"name": "errors", "step_exchanges": 0, "requests": requests, "responses": responses}


def main() -> int:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    target = '{"name":"Ada","age":36,"city":"London"}'
    sessions = [
        record_session(
            "clean_greedy",
            FailureProneModel(target=target, seed=100, noise_sigma=0.3),
            "greedy", seed=100,
        ),
        record_session(
            "preamble_fence_greedy",
            FailureProneModel(target=target, seed=101, p_preamble=1.0, p_fence=1.0),
            "greedy", seed=101,
        ),
        record_session(
            "noisy_multinomial_with_rollback",
            FailureProneModel(target=target, seed=102, p_preamble=0.6, p_fence=0.5,
                              noise_sigma=0.9),
            "multinomial", seed=102,
        ),
        record_session(
            "isolation_a",
            FailureProneModel(target='{"name":"Ada","age":7,"city":"Oslo"}',
                              seed=103, p_preamble=1.0),
            "greedy", seed=103,
        ),
        record_session(
            "isolation_b",
            FailureProneModel(target='{"name":"Ken","age":52,"city":"Kyoto"}',
                              seed=104, p_fence=1.0),
            "greedy", seed=104,
        ),
    ]
    rollback_runs = [s for s in sessions if s["corrections"] > 0]
    assert rollback_runs, "fixtures must include at least one corrected session"
    total = sum(s["step_exchanges"] for s in sessions)
    assert total >= 50, f"only {total} step exchanges recorded"

    for doc in sessions + [record_errors()]:
        path = FIXTURE_DIR / f"{doc['name']}.json"
        path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
        print(f"wrote {path} ({doc['step_exchanges']} step exchanges)")
    print(f"total step exchanges: {total}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
