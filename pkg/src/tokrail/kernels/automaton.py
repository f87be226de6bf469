"""Character-level stage automaton for flat JSON object contracts.

This module is the normative definition of the transition relation; the
compiled kernel mirrors it byte for byte. States are plain tuples of ints so
they hash cheaply and cross the extension boundary as a small int64 array.

State tuple layout (indices are the S_* constants):

    (stage, keys_emitted, emitted_mask, current_key, candidates_mask,
     key_cursor, value_char_count, literal_select, literal_cursor,
     number_state, escape_hex_remaining)

candidates_mask is live only while inside a key name: bit k set means key k
is still consistent with the characters typed so far. emitted_mask caps the
number of keys at 60 so it fits an int64 in the compiled path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Stage codes.
PRE_START = 0
EXPECT_KEY = 1
IN_KEY_NAME = 2
EXPECT_COLON = 3
EXPECT_VALUE = 4
IN_STRING_VALUE = 5
IN_STRING_ESCAPE = 6
IN_NUMBER_VALUE = 7
IN_LITERAL_VALUE = 8
EXPECT_COMMA_OR_END = 9
DONE = 10
FAILED = 11

STAGE_NAMES = (
    "PreStart",
    "ExpectKey",
    "InKeyName",
    "ExpectColon",
    "ExpectValue",
    "InStringValue",
    "InStringEscape",
    "InNumberValue",
    "InLiteralValue",
    "ExpectCommaOrEnd",
    "Done",
    "Failed",
)

# Value-stage tags: interventions are relaxed there, and entropy does not
# count toward the heuristic drift score.
_VALUE_STAGES = frozenset({IN_STRING_VALUE, IN_STRING_ESCAPE, IN_NUMBER_VALUE, IN_LITERAL_VALUE})

# State tuple indices.
S_STAGE = 0
S_KEYS_EMITTED = 1
S_EMITTED_MASK = 2
S_CURRENT_KEY = 3
S_CANDIDATES = 4
S_KEY_CURSOR = 5
S_VALUE_COUNT = 6
S_LITERAL_SELECT = 7
S_LITERAL_CURSOR = 8
S_NUMBER_STATE = 9
S_ESCAPE_HEX = 10
STATE_LEN = 11

# Value type codes.
VT_STRING = 0
VT_INTEGER = 1
VT_NUMBER = 2
VT_BOOLEAN = 3
VT_CONST = 4

# literal_select codes.
LIT_NONE = 0
LIT_TRUE = 1
LIT_FALSE = 2
LIT_CONST = 3

# JSON number sub-states.
NUM_AFTER_SIGN = 1
NUM_AFTER_ZERO = 2
NUM_IN_INT = 3
NUM_FRAC_START = 4
NUM_IN_FRAC = 5
NUM_EXP_START = 6
NUM_EXP_SIGN = 7
NUM_IN_EXP = 8

# Number states after which the number is a complete JSON number.
_NUM_COMPLETE = frozenset({NUM_AFTER_ZERO, NUM_IN_INT, NUM_IN_FRAC, NUM_IN_EXP})

_WS = frozenset({0x20, 0x09, 0x0A, 0x0D})
_HEX = frozenset(b"0123456789abcdefABCDEF")
_ESCAPES = frozenset(b'"\\/bfnrt')

_LIT_TRUE = b"true"
_LIT_FALSE = b"false"

MAX_KEYS = 60

INITIAL_STATE = (PRE_START, 0, 0, -1, 0, 0, 0, LIT_NONE, 0, 0, 0)


@dataclass(frozen=True)
class Tables:
    """Compiled per-contract transition tables.

    key_flat/key_off concatenate the key names; const_flat/const_off hold the
    full quoted literal ('"' + value + '"') for const keys and are empty
    otherwise. The numpy arrays are what the compiled kernel reads.
    """

    n_keys: int
    key_texts: tuple[bytes, ...]
    value_types: tuple[int, ...]
    const_literals: tuple[bytes, ...]
    ordered: bool
    allow_whitespace: bool
    allow_preamble: bool
    permit_raw_newlines: bool
    number_cap: int
    key_flat: np.ndarray
    key_off: np.ndarray
    const_flat: np.ndarray
    const_off: np.ndarray
    vtypes: np.ndarray


def build_tables(
    key_texts: tuple[bytes, ...],
    value_types: tuple[int, ...],
    const_values: tuple[bytes, ...],
    ordered: bool,
    allow_whitespace: bool,
    allow_preamble: bool,
    permit_raw_newlines: bool = False,
    number_cap: int = 64,
) -> Tables:
    if len(key_texts) > MAX_KEYS:
        raise ValueError(f"at most {MAX_KEYS} keys supported, got {len(key_texts)}")
    const_literals = tuple(
        b'"' + cv + b'"' if vt == VT_CONST else b""
        for vt, cv in zip(value_types, const_values)
    )
    key_flat = np.frombuffer(b"".join(key_texts), dtype=np.uint8).copy()
    key_off = np.zeros(len(key_texts) + 1, dtype=np.int64)
    np.cumsum([len(k) for k in key_texts], out=key_off[1:])
    const_flat = np.frombuffer(b"".join(const_literals), dtype=np.uint8).copy()
    const_off = np.zeros(len(const_literals) + 1, dtype=np.int64)
    np.cumsum([len(c) for c in const_literals], out=const_off[1:])
    return Tables(
        n_keys=len(key_texts),
        key_texts=key_texts,
        value_types=tuple(value_types),
        const_literals=const_literals,
        ordered=ordered,
        allow_whitespace=allow_whitespace,
        allow_preamble=allow_preamble,
        permit_raw_newlines=permit_raw_newlines,
        number_cap=number_cap,
        key_flat=key_flat,
        key_off=key_off,
        const_flat=const_flat,
        const_off=const_off,
        vtypes=np.asarray(value_types, dtype=np.int64),
    )


def is_structural(stage: int) -> bool:
    return stage not in _VALUE_STAGES


def is_absorbing(stage: int) -> bool:
    return stage == DONE or stage == FAILED


def _all_emitted(t: Tables, s: tuple) -> bool:
    return s[S_KEYS_EMITTED] == t.n_keys


def _keys_remain(t: Tables, s: tuple) -> bool:
    return s[S_KEYS_EMITTED] < t.n_keys


def _literal_bytes(t: Tables, s: tuple) -> bytes:
    sel = s[S_LITERAL_SELECT]
    if sel == LIT_TRUE:
        return _LIT_TRUE
    if sel == LIT_FALSE:
        return _LIT_FALSE
    return t.const_literals[s[S_CURRENT_KEY]]


def admit_byte(t: Tables, s: tuple, b: int) -> tuple[bool, tuple]:
    """One character step. Rejection leaves the state untouched.

    Absorbing stages reject everything; callers that want an error on
    absorbing input must check before calling.
    """
    stage = s[S_STAGE]
    ls = list(s)

    if stage == PRE_START:
        if b == 0x7B:  # '{'
            ls[S_STAGE] = EXPECT_KEY if t.n_keys > 0 else EXPECT_COMMA_OR_END
            return True, tuple(ls)
        if t.allow_preamble:
            return True, s
        if t.allow_whitespace and b in _WS:
            return True, s
        return False, s

    if stage == EXPECT_KEY:
        if b == 0x22:  # '"'
            if t.ordered:
                cand = 1 << s[S_KEYS_EMITTED]
            else:
                cand = ((1 << t.n_keys) - 1) & ~s[S_EMITTED_MASK]
            ls[S_STAGE] = IN_KEY_NAME
            ls[S_CANDIDATES] = cand
            ls[S_KEY_CURSOR] = 0
            return True, tuple(ls)
        if t.allow_whitespace and b in _WS:
            return True, s
        return False, s

    if stage == IN_KEY_NAME:
        cand = s[S_CANDIDATES]
        cursor = s[S_KEY_CURSOR]
        if b == 0x22:  # closing quote: some candidate must match exactly
            for k in range(t.n_keys):
                if cand & (1 << k) and len(t.key_texts[k]) == cursor:
                    ls[S_STAGE] = EXPECT_COLON
                    ls[S_CURRENT_KEY] = k
                    ls[S_EMITTED_MASK] = s[S_EMITTED_MASK] | (1 << k)
                    ls[S_KEYS_EMITTED] = s[S_KEYS_EMITTED] + 1
                    ls[S_CANDIDATES] = 0
                    ls[S_KEY_CURSOR] = 0
                    return True, tuple(ls)
            return False, s
        nxt = 0
        for k in range(t.n_keys):
            if cand & (1 << k):
                kt = t.key_texts[k]
                if cursor < len(kt) and kt[cursor] == b:
                    nxt |= 1 << k
        if nxt:
            ls[S_CANDIDATES] = nxt
            ls[S_KEY_CURSOR] = cursor + 1
            return True, tuple(ls)
        return False, s

    if stage == EXPECT_COLON:
        if b == 0x3A:  # ':'
            ls[S_STAGE] = EXPECT_VALUE
            return True, tuple(ls)
        if t.allow_whitespace and b in _WS:
            return True, s
        return False, s

    if stage == EXPECT_VALUE:
        if t.allow_whitespace and b in _WS:
            return True, s
        vt = t.value_types[s[S_CURRENT_KEY]]
        if vt == VT_STRING:
            if b == 0x22:
                ls[S_STAGE] = IN_STRING_VALUE
                ls[S_VALUE_COUNT] = 0
                return True, tuple(ls)
            return False, s
        if vt == VT_CONST:
            if b == 0x22:
                ls[S_STAGE] = IN_LITERAL_VALUE
                ls[S_LITERAL_SELECT] = LIT_CONST
                ls[S_LITERAL_CURSOR] = 1
                return True, tuple(ls)
            return False, s
        if vt in (VT_INTEGER, VT_NUMBER):
            if b == 0x2D:  # '-'
                ns = NUM_AFTER_SIGN
            elif b == 0x30:  # '0'
                ns = NUM_AFTER_ZERO
            elif 0x31 <= b <= 0x39:
                ns = NUM_IN_INT
            else:
                return False, s
            ls[S_STAGE] = IN_NUMBER_VALUE
            ls[S_NUMBER_STATE] = ns
            ls[S_VALUE_COUNT] = 1
            return True, tuple(ls)
        if vt == VT_BOOLEAN:
            if b == 0x74:  # 't'
                sel = LIT_TRUE
            elif b == 0x66:  # 'f'
                sel = LIT_FALSE
            else:
                return False, s
            ls[S_STAGE] = IN_LITERAL_VALUE
            ls[S_LITERAL_SELECT] = sel
            ls[S_LITERAL_CURSOR] = 1
            return True, tuple(ls)
        return False, s

    if stage == IN_STRING_VALUE:
        if b == 0x22:
            ls[S_STAGE] = EXPECT_COMMA_OR_END
            ls[S_CURRENT_KEY] = -1
            ls[S_VALUE_COUNT] = 0
            return True, tuple(ls)
        if b == 0x5C:  # backslash
            ls[S_STAGE] = IN_STRING_ESCAPE
            ls[S_ESCAPE_HEX] = 0
            return True, tuple(ls)
        if b == 0x0A and t.permit_raw_newlines:
            ls[S_VALUE_COUNT] = s[S_VALUE_COUNT] + 1
            return True, tuple(ls)
        if b >= 0x20:
            ls[S_VALUE_COUNT] = s[S_VALUE_COUNT] + 1
            return True, tuple(ls)
        return False, s

    if stage == IN_STRING_ESCAPE:
        hexleft = s[S_ESCAPE_HEX]
        if hexleft > 0:
            if b in _HEX:
                if hexleft == 1:
                    ls[S_STAGE] = IN_STRING_VALUE
                    ls[S_ESCAPE_HEX] = 0
                    ls[S_VALUE_COUNT] = s[S_VALUE_COUNT] + 1
                else:
                    ls[S_ESCAPE_HEX] = hexleft - 1
                return True, tuple(ls)
            return False, s
        if b in _ESCAPES:
            ls[S_STAGE] = IN_STRING_VALUE
            ls[S_VALUE_COUNT] = s[S_VALUE_COUNT] + 1
            return True, tuple(ls)
        if b == 0x75:  # 'u' starts a 4-hex-digit escape
            ls[S_ESCAPE_HEX] = 4
            return True, tuple(ls)
        return False, s

    if stage == IN_NUMBER_VALUE:
        ns = s[S_NUMBER_STATE]
        complete = ns in _NUM_COMPLETE
        if complete:
            if b == 0x2C:  # ','
                if _keys_remain(t, s):
                    ls[S_STAGE] = EXPECT_KEY
                    ls[S_CURRENT_KEY] = -1
                    ls[S_NUMBER_STATE] = 0
                    ls[S_VALUE_COUNT] = 0
                    return True, tuple(ls)
                return False, s
            if b == 0x7D:  # '}'
                if _all_emitted(t, s):
                    ls[S_STAGE] = DONE
                    ls[S_CURRENT_KEY] = -1
                    ls[S_NUMBER_STATE] = 0
                    ls[S_VALUE_COUNT] = 0
                    return True, tuple(ls)
                return False, s
            if t.allow_whitespace and b in _WS:
                ls[S_STAGE] = EXPECT_COMMA_OR_END
                ls[S_CURRENT_KEY] = -1
                ls[S_NUMBER_STATE] = 0
                ls[S_VALUE_COUNT] = 0
                return True, tuple(ls)
        if s[S_VALUE_COUNT] >= t.number_cap:
            return False, s
        vt = t.value_types[s[S_CURRENT_KEY]]
        digit = 0x30 <= b <= 0x39
        nxt = -1
        if ns == NUM_AFTER_SIGN:
            if b == 0x30:
                nxt = NUM_AFTER_ZERO
            elif digit:
                nxt = NUM_IN_INT
        elif ns == NUM_AFTER_ZERO:
            if vt == VT_NUMBER:
                if b == 0x2E:  # '.'
                    nxt = NUM_FRAC_START
                elif b in (0x65, 0x45):  # e E
                    nxt = NUM_EXP_START
        elif ns == NUM_IN_INT:
            if digit:
                nxt = NUM_IN_INT
            elif vt == VT_NUMBER and b == 0x2E:
                nxt = NUM_FRAC_START
            elif vt == VT_NUMBER and b in (0x65, 0x45):
                nxt = NUM_EXP_START
        elif ns == NUM_FRAC_START:
            if digit:
                nxt = NUM_IN_FRAC
        elif ns == NUM_IN_FRAC:
            if digit:
                nxt = NUM_IN_FRAC
            elif b in (0x65, 0x45):
                nxt = NUM_EXP_START
        elif ns == NUM_EXP_START:
            if b in (0x2B, 0x2D):
                nxt = NUM_EXP_SIGN
            elif digit:
                nxt = NUM_IN_EXP
        elif ns == NUM_EXP_SIGN:
            if digit:
                nxt = NUM_IN_EXP
        elif ns == NUM_IN_EXP:
            if digit:
                nxt = NUM_IN_EXP
        if nxt < 0:
            return False, s
        ls[S_NUMBER_STATE] = nxt
        ls[S_VALUE_COUNT] = s[S_VALUE_COUNT] + 1
        return True, tuple(ls)

    if stage == IN_LITERAL_VALUE:
        lit = _literal_bytes(t, s)
        cursor = s[S_LITERAL_CURSOR]
        if cursor < len(lit) and lit[cursor] == b:
            if cursor + 1 == len(lit):
                ls[S_STAGE] = EXPECT_COMMA_OR_END
                ls[S_CURRENT_KEY] = -1
                ls[S_LITERAL_SELECT] = LIT_NONE
                ls[S_LITERAL_CURSOR] = 0
            else:
                ls[S_LITERAL_CURSOR] = cursor + 1
            return True, tuple(ls)
        return False, s

    if stage == EXPECT_COMMA_OR_END:
        if b == 0x2C:
            if _keys_remain(t, s):
                ls[S_STAGE] = EXPECT_KEY
                return True, tuple(ls)
            return False, s
        if b == 0x7D:
            if _all_emitted(t, s):
                ls[S_STAGE] = DONE
                return True, tuple(ls)
            return False, s
        if t.allow_whitespace and b in _WS:
            return True, s
        return False, s

    # Done / Failed absorb by rejecting every byte.
    return False, s


def fold_bytes(t: Tables, s: tuple, data: bytes) -> tuple[bool, tuple]:
    """Fold admit_byte over data: admissible iff every byte is accepted."""
    cur = s
    for b in data:
        ok, cur = admit_byte(t, cur, b)
        if not ok:
            return False, s
    return True, cur


def fingerprint(t: Tables, s: tuple) -> tuple:
    """Collapse state fields that cannot affect any future admissibility.

    Inside string values the char count never matters; inside numbers only
    its saturation against the length cap does. Everything else (candidate
    masks, emitted set, sub-states) can change multi-byte token folds and is
    kept verbatim.
    """
    stage = s[S_STAGE]
    if stage == IN_NUMBER_VALUE:
        vc = min(s[S_VALUE_COUNT], t.number_cap)
    else:
        vc = 0
    return s[:S_VALUE_COUNT] + (vc,) + s[S_VALUE_COUNT + 1 :]
