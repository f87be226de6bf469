"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's own stage machine and
recursive-descent validator: the reference checker rides on the stdlib json
parser, and the contract-language enumerator builds strings from the grammar
directly. They exist to check the production code paths, never to reuse them.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from tokrail.contract import Contract, ContractSpec, ContractState, KeyField, Stage
from tokrail.logits import Vocabulary

WS_CHARS = " \t\n\r"


# ---------------------------------------------------------------------------
# vocabularies


def byte_vocab(chars: str) -> Vocabulary:
    return Vocabulary([c for c in chars])


@pytest.fixture(scope="session")
def printable_vocab() -> Vocabulary:
    # The 96 single-byte tokens 0x20..0x7F.
    return Vocabulary([chr(b) for b in range(0x20, 0x80)])


def spec_of(keys: list[tuple], **flags) -> ContractSpec:
    fields = []
    for item in keys:
        if len(item) == 2:
            fields.append(KeyField(name=item[0], value_type=item[1]))
        else:
            fields.append(KeyField(name=item[0], value_type=item[1], const_value=item[2]))
    return ContractSpec(keys=tuple(fields), **flags)


# ---------------------------------------------------------------------------
# reference full-output checker (stdlib json + schema walk)


def reference_check(text: str | bytes, spec: ContractSpec) -> bool:
    """Independent validity oracle built on the stdlib JSON parser."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError:
            return False
    brace = text.find("{")
    if brace < 0:
        return False
    if not spec.allow_preamble:
        lead = text[:brace]
        if spec.allow_whitespace:
            if lead.strip(WS_CHARS):
                return False
        elif lead:
            return False
    decoder = json.JSONDecoder(
        object_pairs_hook=lambda pairs: ("obj", pairs),
        parse_int=lambda raw: ("int", raw),
        parse_float=lambda raw: ("float", raw),
        strict=True,
    )
    try:
        value, end = decoder.raw_decode(text, brace)
    except json.JSONDecodeError:
        return False
    tail = text[end:]
    if spec.allow_whitespace:
        if tail.strip(WS_CHARS):
            return False
    elif tail:
        return False
    if not spec.allow_whitespace:
        # The object slice itself must be whitespace-free outside strings;
        # cheap check: re-serialize compactly and compare lengths.
        if _contains_structural_ws(text[brace:end]):
            return False
    if not (isinstance(value, tuple) and value[0] == "obj"):
        return False
    pairs = value[1]
    names = [k.name for k in spec.keys]
    got = [k for k, _ in pairs]
    if sorted(got) != sorted(names):
        return False
    if spec.ordered and got != names:
        return False
    by_key = dict(pairs)
    if len(by_key) != len(pairs):
        return False
    for k in spec.keys:
        v = by_key[k.name]
        if k.value_type == "string":
            if not isinstance(v, str):
                return False
        elif k.value_type == "const":
            if not isinstance(v, str) or v != k.const_value:
                return False
        elif k.value_type == "boolean":
            if not isinstance(v, bool):
                return False
        elif k.value_type == "integer":
            if not (isinstance(v, tuple) and v[0] == "int" and len(v[1]) <= 64):
                return False
        elif k.value_type == "number":
            if not (isinstance(v, tuple) and v[0] in ("int", "float") and len(v[1]) <= 64):
                return False
    return True


def _contains_structural_ws(obj_text: str) -> bool:
    in_string = False
    escape = False
    for ch in obj_text:
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in WS_CHARS:
            return True
    return False


# ---------------------------------------------------------------------------
# greedy tokenizer + trace folding


def greedy_tokenize(text: str, vocab: Vocabulary) -> list[int]:
    by_len = sorted(range(vocab.size), key=lambda i: -len(vocab.text(i)))
    out = []
    pos = 0
    while pos < len(text):
        for tid in by_len:
            t = vocab.text(tid)
            if text.startswith(t, pos):
                out.append(tid)
                pos += len(t)
                break
        else:
            raise ValueError(f"untokenizable text at {pos}: {text[pos:pos+8]!r}")
    return out


def fold_trace(contract: Contract, vocab: Vocabulary, token_ids: list[int]) -> tuple[ContractState, int]:
    """Fold tokens until Done/rejection; returns (state, tokens consumed)."""
    state = contract.initial_state()
    for i, tid in enumerate(token_ids):
        if state.stage == Stage.DONE:
            return state, i
        ok, state = contract.token_admissible(state, vocab.text_bytes(tid))
        if not ok:
            return state, i
    return state, len(token_ids)


# ---------------------------------------------------------------------------
# exhaustive admissible-trace DFS


def dfs_done_strings(contract: Contract, vocab: Vocabulary, max_depth: int) -> set[str]:
    """Every decoded string of an admissible trace that ends exactly at Done."""
    done: set[str] = set()
    initial = contract.initial_state()

    def rec(state: ContractState, text: str, depth: int):
        if depth == max_depth:
            return
        for tid in range(vocab.size):
            ok, nxt = contract.token_admissible(state, vocab.text_bytes(tid))
            if not ok:
                continue
            t2 = text + vocab.text(tid)
            if nxt.stage == Stage.DONE:
                done.add(t2)
            else:
                rec(nxt, t2, depth + 1)

    rec(initial, "", 0)
    return done


# ---------------------------------------------------------------------------
# independent contract-language enumerator (grammar-driven)


def _ws_variants(max_len: int, enabled: bool) -> list[str]:
    if not enabled:
        return [""]
    outs = [""]
    frontier = [""]
    for _ in range(max_len):
        frontier = [w + c for w in frontier for c in (" ", "\t", "\n")]
        outs.extend(frontier)
    return outs


def _enumerate_numbers(digits: str, max_len: int, integer_only: bool) -> list[str]:
    ints = []
    frontier = [""]
    for _ in range(max_len):
        frontier = [s + d for s in frontier for d in digits]
        ints.extend(frontier)

    def fits(s):
        return 1 <= len(s) <= max_len

    bodies = set()
    int_parts = [i for i in ints if fits(i)] + ["-" + i for i in ints if fits("-" + i)]
    # No '0' in the digit pool, so leading-zero rules stay out of scope here.
    for ip in int_parts:
        bodies.add(ip)
        if integer_only:
            continue
        for fp in ints:
            if fits(ip + "." + fp):
                bodies.add(ip + "." + fp)
        for sign in ("", "+", "-"):
            for ep in ints:
                cand = ip + "e" + sign + ep
                if ep and fits(cand):
                    bodies.add(cand)
        for fp in ints:
            for sign in ("", "+", "-"):
                for ep in ints:
                    cand = ip + "." + fp + "e" + sign + ep
                    if fp and ep and fits(cand):
                        bodies.add(cand)
    return sorted(b for b in bodies if fits(b))


def _enumerate_strings(content: str, escapes: str, max_inner_bytes: int) -> list[str]:
    # Units: one content char (1 byte) or an escape pair (2 bytes).
    units = [c for c in content] + ["\\" + e for e in escapes]
    outs = [""]
    frontier = [""]
    for _ in range(max_inner_bytes):
        frontier = [s + u for s in frontier for u in units if len(s + u) <= max_inner_bytes]
        outs.extend(frontier)
    return sorted(set(['"' + s + '"' for s in outs]))


def enumerate_valid_strings(
    spec: ContractSpec,
    max_len: int,
    value_bodies: list[str],
    key: str = "k",
) -> set[str]:
    """All contract-valid single-key strings of length <= max_len, built from
    the grammar: ws { ws "k" ws : ws VALUE ws }   (no trailing whitespace)."""
    ws = spec.allow_whitespace
    outs: set[str] = set()
    quoted = f'"{key}"'
    for body in value_bodies:
        fixed = 1 + len(quoted) + 1 + len(body) + 1  # { "k" : body }
        budget = max_len - fixed
        if budget < 0:
            continue
        for a in _ws_variants(budget, ws):
            for b in _ws_variants(budget - len(a), ws):
                for c in _ws_variants(budget - len(a) - len(b), ws):
                    for d in _ws_variants(budget - len(a) - len(b) - len(c), ws):
                        rem = budget - len(a) - len(b) - len(c) - len(d)
                        for e in _ws_variants(rem, ws):
                            s = a + "{" + b + quoted + c + ":" + d + body + e + "}"
                            if len(s) <= max_len:
                                outs.add(s)
    return outs


# ---------------------------------------------------------------------------
# misc


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


def random_logits(rng: np.random.Generator, size: int, suppress_frac: float = 0.0) -> np.ndarray:
    z = rng.normal(0.0, 3.0, size)
    if suppress_frac > 0:
        k = min(size - 1, int(size * suppress_frac))
        if k > 0:
            idx = rng.choice(size, size=k, replace=False)
            z[idx] = -np.inf
    return z
