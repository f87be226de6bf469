"""Distributions over a token vocabulary and the primitive logit edits.

Logit vectors and probability distributions are plain float64 numpy arrays.
The "suppressed" sentinel is -inf: exp(-inf) is exactly 0.0, so a masked
token's probability is exactly zero with no tolerance games. +inf and NaN are
invalid inputs everywhere.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from . import kernels

SUPPRESSED = float("-inf")

_vocab_counter = itertools.count(1)


class Vocabulary:
    """Ordered token table: ids are exactly 0..size-1, each with nonempty text."""

    def __init__(self, texts: Sequence[str]):
        if len(texts) == 0:
            raise ValueError("vocabulary must be nonempty")
        for i, t in enumerate(texts):
            if not isinstance(t, str) or t == "":
                raise ValueError(f"token {i} has empty or non-string text")
        self._texts = tuple(texts)
        self._bytes = tuple(t.encode("utf-8") for t in texts)
        flat = b"".join(self._bytes)
        self.token_flat = np.frombuffer(flat, dtype=np.uint8).copy()
        self.token_off = np.zeros(len(texts) + 1, dtype=np.int64)
        np.cumsum([len(b) for b in self._bytes], out=self.token_off[1:])
        # Unique signature for allowlist memoization keyed by vocabulary.
        self.signature = next(_vocab_counter)

    @property
    def size(self) -> int:
        return len(self._texts)

    def __len__(self) -> int:
        return len(self._texts)

    def text(self, token_id: int) -> str:
        return self._texts[token_id]

    def text_bytes(self, token_id: int) -> bytes:
        return self._bytes[token_id]

    def decode(self, token_ids: Iterable[int], skip: frozenset[int] = frozenset()) -> str:
        return "".join(self._texts[i] for i in token_ids if i not in skip)

    def id_of(self, text: str) -> int:
        """First id with the given text; raises KeyError if absent."""
        try:
            return self._texts.index(text)
        except ValueError:
            raise KeyError(text) from None

    def __repr__(self) -> str:
        return f"Vocabulary(size={self.size})"


def check_logits(values: np.ndarray, vocab_size: int | None = None) -> np.ndarray:
    """Validate a logit vector: float64, -inf allowed, +inf/NaN not, >=1 live entry."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("logits must be one-dimensional")
    if vocab_size is not None and arr.shape[0] != vocab_size:
        raise ValueError(f"logit length {arr.shape[0]} != vocabulary size {vocab_size}")
    if np.isnan(arr).any() or (arr == np.inf).any():
        raise ValueError("logits contain NaN or +inf")
    if not (arr > SUPPRESSED).any():
        raise ValueError("all logits suppressed")
    return arr


def ids_to_mask(ids: Iterable[int], size: int) -> np.ndarray:
    mask = np.zeros(size, dtype=np.uint8)
    for i in ids:
        if not 0 <= i < size:
            raise ValueError(f"token id {i} outside vocabulary of size {size}")
        mask[i] = 1
    return mask


def softmax(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Stabilized softmax; suppressed entries map to exactly 0."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    arr = check_logits(logits)
    return kernels.softmax(arr, float(temperature))


def entropy(dist: np.ndarray) -> float:
    """Shannon entropy in nats, with 0*ln(0) = 0."""
    return kernels.entropy(np.asarray(dist, dtype=np.float64))


def top_k(dist: np.ndarray, k: int) -> list[tuple[int, float]]:
    """k highest-probability (id, prob) pairs, descending; ties go to lower id."""
    arr = np.asarray(dist, dtype=np.float64)
    if not 1 <= k <= arr.shape[0]:
        raise ValueError(f"k={k} out of range for size {arr.shape[0]}")
    order = np.lexsort((np.arange(arr.shape[0]), -arr))
    return [(int(i), float(arr[i])) for i in order[:k]]


def apply_bias(logits: np.ndarray, favored: Iterable[int], beta: float) -> np.ndarray:
    """Add beta to the favored ids; suppressed entries stay suppressed."""
    arr = check_logits(logits)
    if not np.isfinite(beta):
        raise ValueError("beta must be finite")
    mask = ids_to_mask(favored, arr.shape[0])
    return kernels.apply_bias(arr, mask, float(beta))


def apply_temperature(logits: np.ndarray, tau: float) -> np.ndarray:
    """Sharpen by dividing live logits by tau; only narrowing (tau <= 1) allowed."""
    if not 0 < tau <= 1:
        raise ValueError("tau must be in (0, 1]")
    arr = check_logits(logits)
    return kernels.apply_temperature(arr, float(tau))


def apply_mask(logits: np.ndarray, allowed: Iterable[int]) -> np.ndarray:
    """Suppress everything outside `allowed`."""
    arr = check_logits(logits)
    mask = ids_to_mask(allowed, arr.shape[0])
    if not mask.any():
        raise ContractDeadlockError("empty allowlist: nothing to sample")
    return kernels.apply_mask(arr, mask)


def apply_mask_array(logits: np.ndarray, allowed_mask: np.ndarray) -> np.ndarray:
    """apply_mask over a precomputed uint8 mask (hot path)."""
    if not allowed_mask.any():
        raise ContractDeadlockError("empty allowlist: nothing to sample")
    return kernels.apply_mask(logits, allowed_mask)


def sample(dist: np.ndarray, mode: str, rng: np.random.Generator | None = None) -> int:
    """Draw a token id: greedy argmax (ties to lower id) or seeded multinomial."""
    arr = np.asarray(dist, dtype=np.float64)
    if mode == "greedy":
        return kernels.argmax_low(arr)
    if mode == "multinomial":
        if rng is None:
            raise ValueError("multinomial sampling needs a generator")
        return kernels.multinomial_pick(arr, float(rng.random()))
    raise ValueError(f"unknown sampling mode {mode!r}")


class ContractDeadlockError(RuntimeError):
    """No token is admissible; the caller decides how to surface it."""
