# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend. Mirrors tokrail.kernels._pure exactly;
the pure module is the normative definition."""

from libc.math cimport exp, log, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()


# ---------------------------------------------------------------------------
# numeric kernels

def softmax(cnp.ndarray[cnp.float64_t, ndim=1] values, double temperature):
    cdef Py_ssize_t n = values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double m = -INFINITY
    cdef double s = 0.0
    for i in range(n):
        if values[i] > m:
            m = values[i]
    for i in range(n):
        out[i] = exp((values[i] - m) / temperature)
        s += out[i]
    for i in range(n):
        out[i] /= s
    return out


def entropy(cnp.ndarray[cnp.float64_t, ndim=1] probs):
    cdef Py_ssize_t i, n = probs.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        if probs[i] > 0.0:
            acc -= probs[i] * log(probs[i])
    return acc


def apply_bias(cnp.ndarray[cnp.float64_t, ndim=1] values,
               cnp.ndarray[cnp.uint8_t, ndim=1] favored_mask, double beta):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = values.copy()
    for i in range(n):
        if favored_mask[i]:
            out[i] += beta
    return out


def apply_temperature(cnp.ndarray[cnp.float64_t, ndim=1] values, double tau):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = values[i] / tau
    return out


def apply_mask(cnp.ndarray[cnp.float64_t, ndim=1] values,
               cnp.ndarray[cnp.uint8_t, ndim=1] allowed_mask):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = values.copy()
    for i in range(n):
        if not allowed_mask[i]:
            out[i] = -INFINITY
    return out


def invalid_mass(cnp.ndarray[cnp.float64_t, ndim=1] probs,
                 cnp.ndarray[cnp.uint8_t, ndim=1] allowed_mask):
    cdef Py_ssize_t i, n = probs.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        if not allowed_mask[i]:
            acc += probs[i]
    return acc


def argmax_low(cnp.ndarray[cnp.float64_t, ndim=1] values):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef Py_ssize_t best = 0
    cdef double bv = values[0]
    for i in range(1, n):
        if values[i] > bv:
            bv = values[i]
            best = i
    return best


def multinomial_pick(cnp.ndarray[cnp.float64_t, ndim=1] probs, double u):
    cdef Py_ssize_t i, n = probs.shape[0]
    cdef double acc = 0.0
    cdef Py_ssize_t last = 0
    for i in range(n):
        if probs[i] > 0.0:
            acc += probs[i]
            last = i
            if u < acc:
                return i
    return last


# ---------------------------------------------------------------------------
# contract automaton

DEF PRE_START = 0
DEF EXPECT_KEY = 1
DEF IN_KEY_NAME = 2
DEF EXPECT_COLON = 3
DEF EXPECT_VALUE = 4
DEF IN_STRING_VALUE = 5
DEF IN_STRING_ESCAPE = 6
DEF IN_NUMBER_VALUE = 7
DEF IN_LITERAL_VALUE = 8
DEF EXPECT_COMMA_OR_END = 9
DEF DONE = 10
DEF FAILED = 11

DEF VT_STRING = 0
DEF VT_INTEGER = 1
DEF VT_NUMBER = 2
DEF VT_BOOLEAN = 3
DEF VT_CONST = 4

DEF LIT_NONE = 0
DEF LIT_TRUE = 1
DEF LIT_FALSE = 2
DEF LIT_CONST = 3

DEF NUM_AFTER_SIGN = 1
DEF NUM_AFTER_ZERO = 2
DEF NUM_IN_INT = 3
DEF NUM_FRAC_START = 4
DEF NUM_IN_FRAC = 5
DEF NUM_EXP_START = 6
DEF NUM_EXP_SIGN = 7
DEF NUM_IN_EXP = 8


cdef struct CState:
    long stage
    long keys_emitted
    long emitted_mask
    long current_key
    long candidates
    long key_cursor
    long value_count
    long literal_select
    long literal_cursor
    long number_state
    long escape_hex


cdef struct CTables:
    long n_keys
    const unsigned char* key_flat
    const long* key_off
    const unsigned char* const_flat
    const long* const_off
    const long* vtypes
    bint ordered
    bint allow_ws
    bint allow_preamble
    bint permit_raw_newlines
    long number_cap


cdef const unsigned char* LIT_TRUE_B = b"true"
cdef const unsigned char* LIT_FALSE_B = b"false"


cdef inline bint _is_ws(int b) nogil:
    return b == 0x20 or b == 0x09 or b == 0x0A or b == 0x0D


cdef inline bint _is_hex(int b) nogil:
    return (0x30 <= b <= 0x39) or (0x61 <= b <= 0x66) or (0x41 <= b <= 0x46)


cdef bint _admit_byte(CTables* t, CState* s, int b) nogil:
    """In-place character step; returns False and leaves *s untouched on reject."""
    cdef long stage = s.stage
    cdef long cand, cursor, k, nxt, ns, vt, lit_len
    cdef const unsigned char* lit
    cdef bint digit, complete

    if stage == PRE_START:
        if b == 0x7B:
            s.stage = EXPECT_KEY if t.n_keys > 0 else EXPECT_COMMA_OR_END
            return True
        if t.allow_preamble:
            return True
        if t.allow_ws and _is_ws(b):
            return True
        return False

    if stage == EXPECT_KEY:
        if b == 0x22:
            if t.ordered:
                cand = (<long>1) << s.keys_emitted
            else:
                cand = (((<long>1) << t.n_keys) - 1) & ~s.emitted_mask
            s.stage = IN_KEY_NAME
            s.candidates = cand
            s.key_cursor = 0
            return True
        if t.allow_ws and _is_ws(b):
            return True
        return False

    if stage == IN_KEY_NAME:
        cand = s.candidates
        cursor = s.key_cursor
        if b == 0x22:
            for k in range(t.n_keys):
                if (cand & ((<long>1) << k)) and (t.key_off[k + 1] - t.key_off[k]) == cursor:
                    s.stage = EXPECT_COLON
                    s.current_key = k
                    s.emitted_mask |= (<long>1) << k
                    s.keys_emitted += 1
                    s.candidates = 0
                    s.key_cursor = 0
                    return True
            return False
        nxt = 0
        for k in range(t.n_keys):
            if cand & ((<long>1) << k):
                if cursor < (t.key_off[k + 1] - t.key_off[k]) and t.key_flat[t.key_off[k] + cursor] == <unsigned char>b:
                    nxt |= (<long>1) << k
        if nxt:
            s.candidates = nxt
            s.key_cursor = cursor + 1
            return True
        return False

    if stage == EXPECT_COLON:
        if b == 0x3A:
            s.stage = EXPECT_VALUE
            return True
        if t.allow_ws and _is_ws(b):
            return True
        return False

    if stage == EXPECT_VALUE:
        if t.allow_ws and _is_ws(b):
            return True
        vt = t.vtypes[s.current_key]
        if vt == VT_STRING:
            if b == 0x22:
                s.stage = IN_STRING_VALUE
                s.value_count = 0
                return True
            return False
        if vt == VT_CONST:
            if b == 0x22:
                s.stage = IN_LITERAL_VALUE
                s.literal_select = LIT_CONST
                s.literal_cursor = 1
                return True
            return False
        if vt == VT_INTEGER or vt == VT_NUMBER:
            if b == 0x2D:
                ns = NUM_AFTER_SIGN
            elif b == 0x30:
                ns = NUM_AFTER_ZERO
            elif 0x31 <= b <= 0x39:
                ns = NUM_IN_INT
            else:
                return False
            s.stage = IN_NUMBER_VALUE
            s.number_state = ns
            s.value_count = 1
            return True
        if vt == VT_BOOLEAN:
            if b == 0x74:
                s.literal_select = LIT_TRUE
            elif b == 0x66:
                s.literal_select = LIT_FALSE
            else:
                return False
            s.stage = IN_LITERAL_VALUE
            s.literal_cursor = 1
            return True
        return False

    if stage == IN_STRING_VALUE:
        if b == 0x22:
            s.stage = EXPECT_COMMA_OR_END
            s.current_key = -1
            s.value_count = 0
            return True
        if b == 0x5C:
            s.stage = IN_STRING_ESCAPE
            s.escape_hex = 0
            return True
        if b == 0x0A and t.permit_raw_newlines:
            s.value_count += 1
            return True
        if b >= 0x20:
            s.value_count += 1
            return True
        return False

    if stage == IN_STRING_ESCAPE:
        if s.escape_hex > 0:
            if _is_hex(b):
                if s.escape_hex == 1:
                    s.stage = IN_STRING_VALUE
                    s.escape_hex = 0
                    s.value_count += 1
                else:
                    s.escape_hex -= 1
                return True
            return False
        if b == 0x22 or b == 0x5C or b == 0x2F or b == 0x62 or b == 0x66 or b == 0x6E or b == 0x72 or b == 0x74:
            s.stage = IN_STRING_VALUE
            s.value_count += 1
            return True
        if b == 0x75:
            s.escape_hex = 4
            return True
        return False

    if stage == IN_NUMBER_VALUE:
        ns = s.number_state
        complete = ns == NUM_AFTER_ZERO or ns == NUM_IN_INT or ns == NUM_IN_FRAC or ns == NUM_IN_EXP
        if complete:
            if b == 0x2C:
                if s.keys_emitted < t.n_keys:
                    s.stage = EXPECT_KEY
                    s.current_key = -1
                    s.number_state = 0
                    s.value_count = 0
                    return True
                return False
            if b == 0x7D:
                if s.keys_emitted == t.n_keys:
                    s.stage = DONE
                    s.current_key = -1
                    s.number_state = 0
                    s.value_count = 0
                    return True
                return False
            if t.allow_ws and _is_ws(b):
                s.stage = EXPECT_COMMA_OR_END
                s.current_key = -1
                s.number_state = 0
                s.value_count = 0
                return True
        if s.value_count >= t.number_cap:
            return False
        vt = t.vtypes[s.current_key]
        digit = 0x30 <= b <= 0x39
        nxt = -1
        if ns == NUM_AFTER_SIGN:
            if b == 0x30:
                nxt = NUM_AFTER_ZERO
            elif digit:
                nxt = NUM_IN_INT
        elif ns == NUM_AFTER_ZERO:
            if vt == VT_NUMBER:
                if b == 0x2E:
                    nxt = NUM_FRAC_START
                elif b == 0x65 or b == 0x45:
                    nxt = NUM_EXP_START
        elif ns == NUM_IN_INT:
            if digit:
                nxt = NUM_IN_INT
            elif vt == VT_NUMBER and b == 0x2E:
                nxt = NUM_FRAC_START
            elif vt == VT_NUMBER and (b == 0x65 or b == 0x45):
                nxt = NUM_EXP_START
        elif ns == NUM_FRAC_START:
            if digit:
                nxt = NUM_IN_FRAC
        elif ns == NUM_IN_FRAC:
            if digit:
                nxt = NUM_IN_FRAC
            elif b == 0x65 or b == 0x45:
                nxt = NUM_EXP_START
        elif ns == NUM_EXP_START:
            if b == 0x2B or b == 0x2D:
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
            return False
        s.number_state = nxt
        s.value_count += 1
        return True

    if stage == IN_LITERAL_VALUE:
        if s.literal_select == LIT_TRUE:
            lit = LIT_TRUE_B
            lit_len = 4
        elif s.literal_select == LIT_FALSE:
            lit = LIT_FALSE_B
            lit_len = 5
        else:
            lit = t.const_flat + t.const_off[s.current_key]
            lit_len = t.const_off[s.current_key + 1] - t.const_off[s.current_key]
        cursor = s.literal_cursor
        if cursor < lit_len and lit[cursor] == <unsigned char>b:
            if cursor + 1 == lit_len:
                s.stage = EXPECT_COMMA_OR_END
                s.current_key = -1
                s.literal_select = LIT_NONE
                s.literal_cursor = 0
            else:
                s.literal_cursor = cursor + 1
            return True
        return False

    if stage == EXPECT_COMMA_OR_END:
        if b == 0x2C:
            if s.keys_emitted < t.n_keys:
                s.stage = EXPECT_KEY
                return True
            return False
        if b == 0x7D:
            if s.keys_emitted == t.n_keys:
                s.stage = DONE
                return True
            return False
        if t.allow_ws and _is_ws(b):
            return True
        return False

    return False


cdef class _TablesView:
    """Keeps the backing numpy arrays alive while holding raw pointers."""
    cdef CTables ct
    cdef object _keep

    def __init__(self, tables):
        cdef cnp.ndarray[cnp.uint8_t, ndim=1] kf = tables.key_flat
        cdef cnp.ndarray[cnp.int64_t, ndim=1] ko = tables.key_off
        cdef cnp.ndarray[cnp.uint8_t, ndim=1] cf = tables.const_flat
        cdef cnp.ndarray[cnp.int64_t, ndim=1] co = tables.const_off
        cdef cnp.ndarray[cnp.int64_t, ndim=1] vt = tables.vtypes
        self._keep = (kf, ko, cf, co, vt)
        self.ct.n_keys = tables.n_keys
        self.ct.key_flat = <const unsigned char*>cnp.PyArray_DATA(kf)
        self.ct.key_off = <const long*>cnp.PyArray_DATA(ko)
        self.ct.const_flat = <const unsigned char*>cnp.PyArray_DATA(cf)
        self.ct.const_off = <const long*>cnp.PyArray_DATA(co)
        self.ct.vtypes = <const long*>cnp.PyArray_DATA(vt)
        self.ct.ordered = tables.ordered
        self.ct.allow_ws = tables.allow_whitespace
        self.ct.allow_preamble = tables.allow_preamble
        self.ct.permit_raw_newlines = tables.permit_raw_newlines
        self.ct.number_cap = tables.number_cap


_view_cache = {}


cdef _TablesView _get_view(tables):
    key = id(tables)
    v = _view_cache.get(key)
    if v is None or v[1] is not tables:
        v = (_TablesView(tables), tables)
        _view_cache[key] = v
    return v[0]


cdef inline void _state_from_tuple(tuple s, CState* cs):
    cs.stage = s[0]
    cs.keys_emitted = s[1]
    cs.emitted_mask = s[2]
    cs.current_key = s[3]
    cs.candidates = s[4]
    cs.key_cursor = s[5]
    cs.value_count = s[6]
    cs.literal_select = s[7]
    cs.literal_cursor = s[8]
    cs.number_state = s[9]
    cs.escape_hex = s[10]


cdef inline tuple _state_to_tuple(CState* cs):
    return (cs.stage, cs.keys_emitted, cs.emitted_mask, cs.current_key,
            cs.candidates, cs.key_cursor, cs.value_count, cs.literal_select,
            cs.literal_cursor, cs.number_state, cs.escape_hex)


def fold_token(tables, tuple state, bytes token_bytes):
    cdef _TablesView tv = _get_view(tables)
    cdef CState cs
    _state_from_tuple(state, &cs)
    cdef const unsigned char* data = token_bytes
    cdef Py_ssize_t i, n = len(token_bytes)
    for i in range(n):
        if not _admit_byte(&tv.ct, &cs, data[i]):
            return False, state
    return True, _state_to_tuple(&cs)


def allowlist_mask(tables, tuple state,
                   cnp.ndarray[cnp.uint8_t, ndim=1] token_flat,
                   cnp.ndarray[cnp.int64_t, ndim=1] token_off,
                   cnp.ndarray[cnp.uint8_t, ndim=1] out):
    cdef _TablesView tv = _get_view(tables)
    cdef CState base, cs
    _state_from_tuple(state, &base)
    cdef Py_ssize_t i, j, n_tok = token_off.shape[0] - 1
    cdef bint ok
    for i in range(n_tok):
        cs = base
        ok = True
        for j in range(token_off[i], token_off[i + 1]):
            if not _admit_byte(&tv.ct, &cs, token_flat[j]):
                ok = False
                break
        out[i] = 1 if ok else 0
