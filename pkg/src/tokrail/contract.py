"""Output contracts: a compiled character-level stage machine over flat JSON
object records, with token admissibility, per-stage allowlists, and the
transition used by the control loop.

The machine operates on bytes so that multi-character tokens spanning
structural boundaries (e.g. `","`) fold deterministically: a token is
admissible iff every byte of its text is accepted in sequence, which makes
admissibility prefix-compositional by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterable

import numpy as np

from . import kernels
from .kernels import automaton as atm
from .logits import Vocabulary

VALUE_TYPES = ("string", "integer", "number", "boolean", "const")
_VT_CODE = {name: i for i, name in enumerate(VALUE_TYPES)}

# Key names and const values take part in exact char-by-char matching, so
# they must not need JSON escaping.
_BAD_LITERAL_BYTES = set(b'"\\') | set(range(0x20))


class ContractError(ValueError):
    """Invalid contract specification."""


class Stage(IntEnum):
    PRE_START = atm.PRE_START
    EXPECT_KEY = atm.EXPECT_KEY
    IN_KEY_NAME = atm.IN_KEY_NAME
    EXPECT_COLON = atm.EXPECT_COLON
    EXPECT_VALUE = atm.EXPECT_VALUE
    IN_STRING_VALUE = atm.IN_STRING_VALUE
    IN_STRING_ESCAPE = atm.IN_STRING_ESCAPE
    IN_NUMBER_VALUE = atm.IN_NUMBER_VALUE
    IN_LITERAL_VALUE = atm.IN_LITERAL_VALUE
    EXPECT_COMMA_OR_END = atm.EXPECT_COMMA_OR_END
    DONE = atm.DONE
    FAILED = atm.FAILED

    @property
    def is_structural(self) -> bool:
        return atm.is_structural(int(self))

    @property
    def is_absorbing(self) -> bool:
        return atm.is_absorbing(int(self))

    @property
    def tag(self) -> str:
        return atm.STAGE_NAMES[int(self)]


@dataclass(frozen=True)
class KeyField:
    name: str
    value_type: str
    const_value: str | None = None

    def __post_init__(self):
        if not self.name:
            raise ContractError("key name must be nonempty")
        if self.value_type not in VALUE_TYPES:
            raise ContractError(f"unknown value type {self.value_type!r}")
        if self.value_type == "const":
            if self.const_value is None:
                raise ContractError(f"key {self.name!r}: const requires a value")
            _check_literal(self.const_value, f"const value of {self.name!r}")
        elif self.const_value is not None:
            raise ContractError(f"key {self.name!r}: const_value only valid for const type")
        _check_literal(self.name, f"key name {self.name!r}")


def _check_literal(text: str, what: str) -> None:
    data = text.encode("utf-8")
    if any(b in _BAD_LITERAL_BYTES for b in data):
        raise ContractError(f"{what} contains characters that would need JSON escaping")


@dataclass(frozen=True)
class ContractSpec:
    """Declarative description of one flat JSON record contract."""

    keys: tuple[KeyField, ...]
    ordered: bool = True
    allow_whitespace: bool = True
    allow_preamble: bool = False
    permit_raw_newlines: bool = False

    def __post_init__(self):
        names = [k.name for k in self.keys]
        if len(set(names)) != len(names):
            raise ContractError("duplicate key names")
        if len(self.keys) > atm.MAX_KEYS:
            raise ContractError(f"at most {atm.MAX_KEYS} keys supported")

    @classmethod
    def from_dict(cls, doc: dict) -> "ContractSpec":
        try:
            keys = tuple(
                KeyField(
                    name=k["name"],
                    value_type=k["type"],
                    const_value=k.get("value"),
                )
                for k in doc["keys"]
            )
        except (KeyError, TypeError) as exc:
            raise ContractError(f"malformed contract spec: {exc}") from exc
        return cls(
            keys=keys,
            ordered=bool(doc.get("ordered", True)),
            allow_whitespace=bool(doc.get("allow_whitespace", True)),
            allow_preamble=bool(doc.get("allow_preamble", False)),
            permit_raw_newlines=bool(doc.get("permit_raw_newlines", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "ContractSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ContractError(f"contract spec is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        keys = []
        for k in self.keys:
            d: dict = {"name": k.name, "type": k.value_type}
            if k.value_type == "const":
                d["value"] = k.const_value
            keys.append(d)
        return {
            "keys": keys,
            "ordered": self.ordered,
            "allow_whitespace": self.allow_whitespace,
            "allow_preamble": self.allow_preamble,
            "permit_raw_newlines": self.permit_raw_newlines,
        }


@dataclass(frozen=True)
class ContractState:
    """Progress through one contract; a small immutable value.

    emitted_mask / key_candidates_mask / literal_select / number_state /
    escape_hex_remaining carry the sub-state the coarse stage tag cannot:
    which keys were seen (unordered mode), which keys are still consistent
    with a half-typed name, and position inside number/escape grammars.
    """

    stage: Stage = Stage.PRE_START
    keys_emitted: int = 0
    emitted_mask: int = 0
    current_key_index: int = -1
    key_candidates_mask: int = 0
    key_char_cursor: int = 0
    value_char_count: int = 0
    literal_select: int = 0
    pending_literal_cursor: int = 0
    number_state: int = 0
    escape_hex_remaining: int = 0

    def as_tuple(self) -> tuple:
        return (
            int(self.stage),
            self.keys_emitted,
            self.emitted_mask,
            self.current_key_index,
            self.key_candidates_mask,
            self.key_char_cursor,
            self.value_char_count,
            self.literal_select,
            self.pending_literal_cursor,
            self.number_state,
            self.escape_hex_remaining,
        )

    @classmethod
    def from_tuple(cls, t: tuple) -> "ContractState":
        return cls(
            stage=Stage(t[0]),
            keys_emitted=t[1],
            emitted_mask=t[2],
            current_key_index=t[3],
            key_candidates_mask=t[4],
            key_char_cursor=t[5],
            value_char_count=t[6],
            literal_select=t[7],
            pending_literal_cursor=t[8],
            number_state=t[9],
            escape_hex_remaining=t[10],
        )

    @property
    def is_structural(self) -> bool:
        return self.stage.is_structural

    @property
    def is_absorbing(self) -> bool:
        return self.stage.is_absorbing

    def failed(self) -> "ContractState":
        return replace(self, stage=Stage.FAILED)


class Contract:
    """Immutable compiled contract; shareable across concurrent generations.

    The allowlist memo is keyed by (vocabulary signature, state fingerprint);
    under the GIL dict get/set are atomic, so concurrent readers are safe.
    """

    def __init__(self, spec: ContractSpec):
        self.spec = spec
        self.tables = atm.build_tables(
            key_texts=tuple(k.name.encode("utf-8") for k in spec.keys),
            value_types=tuple(_VT_CODE[k.value_type] for k in spec.keys),
            const_values=tuple(
                (k.const_value or "").encode("utf-8") for k in spec.keys
            ),
            ordered=spec.ordered,
            allow_whitespace=spec.allow_whitespace,
            allow_preamble=spec.allow_preamble,
            permit_raw_newlines=spec.permit_raw_newlines,
        )
        self._allow_memo: dict[tuple, tuple[np.ndarray, frozenset]] = {}

    def initial_state(self) -> ContractState:
        return ContractState()

    def admit_char(self, state: ContractState, ch: int | bytes | str) -> tuple[bool, ContractState]:
        """Single character step; rejection returns the state unchanged."""
        if state.is_absorbing:
            raise ValueError(f"admit_char on absorbing stage {state.stage.tag}")
        b = _as_byte(ch)
        ok, nxt = atm.admit_byte(self.tables, state.as_tuple(), b)
        return ok, ContractState.from_tuple(nxt) if ok else state

    def token_admissible(self, state: ContractState, token_text: bytes | str) -> tuple[bool, ContractState]:
        """Fold admit_char over every byte of the token text."""
        data = token_text.encode("utf-8") if isinstance(token_text, str) else token_text
        if not data:
            raise ValueError("token text must be nonempty")
        if state.is_absorbing:
            raise ValueError(f"token_admissible on absorbing stage {state.stage.tag}")
        ok, nxt = kernels.fold_token(self.tables, state.as_tuple(), data)
        return (True, ContractState.from_tuple(nxt)) if ok else (False, state)

    def allowlist_mask(self, state: ContractState, vocab: Vocabulary) -> np.ndarray:
        """uint8 admissibility mask over the vocabulary; memoized per state class."""
        if state.is_absorbing:
            raise ValueError(f"allowlist on absorbing stage {state.stage.tag}")
        key = (vocab.signature, atm.fingerprint(self.tables, state.as_tuple()))
        hit = self._allow_memo.get(key)
        if hit is not None:
            return hit[0]
        mask = np.zeros(vocab.size, dtype=np.uint8)
        kernels.allowlist_mask(self.tables, state.as_tuple(), vocab.token_flat, vocab.token_off, mask)
        mask.flags.writeable = False
        self._allow_memo[key] = (mask, frozenset(int(i) for i in np.nonzero(mask)[0]))
        return mask

    def allowlist(self, state: ContractState, vocab: Vocabulary) -> frozenset[int]:
        """Set of admissible token ids at this state (may be empty: deadlock)."""
        self.allowlist_mask(state, vocab)
        key = (vocab.signature, atm.fingerprint(self.tables, state.as_tuple()))
        return self._allow_memo[key][1]

    def step(
        self,
        state: ContractState,
        token_id: int,
        vocab: Vocabulary,
        enforcing: bool = True,
    ) -> tuple[ContractState, bool]:
        """Advance by one sampled token.

        Returns (next_state, violation). Inadmissible tokens move the state
        to Failed when enforcing, otherwise leave it unchanged and flag the
        violation for the caller to record. Absorbing stages are fixed points.
        """
        if state.is_absorbing:
            return state, False
        ok, nxt = self.token_admissible(state, vocab.text_bytes(token_id))
        if ok:
            return nxt, False
        return (state.failed() if enforcing else state), True


def compile_spec(spec: ContractSpec) -> Contract:
    return Contract(spec)


def invalid_mass(dist: np.ndarray, allowed: Iterable[int] | np.ndarray) -> float:
    """Total probability outside the allowlist."""
    arr = np.asarray(dist, dtype=np.float64)
    if isinstance(allowed, np.ndarray) and allowed.dtype == np.uint8:
        mask = allowed
    else:
        mask = np.zeros(arr.shape[0], dtype=np.uint8)
        for i in allowed:
            mask[i] = 1
    return kernels.invalid_mass(arr, mask)


def _as_byte(ch: int | bytes | str) -> int:
    if isinstance(ch, int):
        return ch
    if isinstance(ch, str):
        data = ch.encode("utf-8")
    else:
        data = ch
    if len(data) != 1:
        raise ValueError("admit_char takes exactly one byte")
    return data[0]
