"""Pure (numpy + Python) kernel backend.

Semantics here are normative; tokrail.kernels._speed mirrors them in C.
All vectors are float64; the suppressed sentinel is -inf.
"""

from __future__ import annotations

import math

import numpy as np

from . import automaton

NEG_INF = float("-inf")


def softmax(values: np.ndarray, temperature: float) -> np.ndarray:
    m = float(np.max(values))
    e = np.exp((values - m) / temperature)
    return e / e.sum()


def entropy(probs: np.ndarray) -> float:
    nz = probs[probs > 0.0]
    return float(-(nz * np.log(nz)).sum())


def apply_bias(values: np.ndarray, favored_mask: np.ndarray, beta: float) -> np.ndarray:
    out = values.copy()
    out[favored_mask != 0] += beta
    return out


def apply_temperature(values: np.ndarray, tau: float) -> np.ndarray:
    return values / tau


def apply_mask(values: np.ndarray, allowed_mask: np.ndarray) -> np.ndarray:
    out = values.copy()
    out[allowed_mask == 0] = NEG_INF
    return out


def invalid_mass(probs: np.ndarray, allowed_mask: np.ndarray) -> float:
    return float(probs[allowed_mask == 0].sum())


def argmax_low(values: np.ndarray) -> int:
    # np.argmax returns the first (lowest-id) maximal entry.
    return int(np.argmax(values))


def multinomial_pick(probs: np.ndarray, u: float) -> int:
    # Explicit left-to-right accumulation so the compiled kernel can
    # reproduce the exact same float64 walk.
    acc = 0.0
    last = 0
    p = probs.tolist()
    for i, pi in enumerate(p):
        if pi > 0.0:
            acc += pi
            last = i
            if u < acc:
                return i
    return last


def fold_token(tables: automaton.Tables, state: tuple, token_bytes: bytes) -> tuple[bool, tuple]:
    return automaton.fold_bytes(tables, state, token_bytes)


def allowlist_mask(
    tables: automaton.Tables,
    state: tuple,
    token_flat: np.ndarray,
    token_off: np.ndarray,
    out: np.ndarray,
) -> None:
    """Fill out[i] = 1 iff token i folds admissibly from state."""
    flat = token_flat.tobytes()
    off = token_off.tolist()
    for i in range(len(off) - 1):
        ok, _ = automaton.fold_bytes(tables, state, flat[off[i] : off[i + 1]])
        out[i] = 1 if ok else 0


def entropy_scalar_check() -> float:
    # Tiny self-test hook used by the benchmark to confirm backend identity.
    return math.e
