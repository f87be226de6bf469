"""Deterministic toy models for the benchmark harness.

Both adapters compute logits as a pure function of the token prefix, so
cache truncation plus replay reproduces identical logits by construction;
the integer "cache" exists to catch callers that forget to truncate it.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..logits import Vocabulary

DISTRACTORS = ("Sure", "Here", "```", "json", "``` ", ", ")
EOS_TEXT = "<eos>"

_PREAMBLES = (
    "Sure, here is the JSON you asked for:\n",
    "Here is the requested object:\n",
    "Sure thing! ",
)
_TRAILING = "\nLet me know if you need anything else."


def build_failure_vocab() -> Vocabulary:
    """Printable ASCII bytes, tab/newline, multi-byte distractors, EOS."""
    texts = [chr(b) for b in range(0x20, 0x7F)]
    texts.append("\n")
    texts.append("\t")
    texts.extend(DISTRACTORS)
    texts.append(EOS_TEXT)
    return Vocabulary(texts)


def _check_cache(tokens: Sequence[int], cache: object | None) -> None:
    if cache is None:
        return
    if not isinstance(cache, int) or cache < 0:
        raise TypeError(f"bad cache handle {cache!r}")
    if cache > len(tokens):
        raise RuntimeError(
            f"cache holds {cache} positions but prefix has {len(tokens)}: missing truncate()"
        )


class ScriptedModel:
    """Replays a fixed list of logit vectors, then repeats the last one."""

    def __init__(self, vocab: Vocabulary, script: Sequence[np.ndarray], eos_token_id: int | None = None):
        if not script:
            raise ValueError("script must be nonempty")
        self.vocab = vocab
        self.eos_token_id = eos_token_id
        self._script = [np.asarray(v, dtype=np.float64).copy() for v in script]
        for v in self._script:
            if v.shape != (vocab.size,):
                raise ValueError("script vector length != vocabulary size")

    def step(self, tokens: Sequence[int], cache: object | None) -> tuple[np.ndarray, object]:
        _check_cache(tokens, cache)
        pos = min(len(tokens), len(self._script) - 1)
        return self._script[pos].copy(), len(tokens) + 1

    def truncate(self, cache: object, keep_len: int) -> object:
        return min(int(cache), keep_len)


class FailureProneModel:
    """Emits a target JSON record wrapped in seeded failure patterns.

    Per run (seed) the model may plan a conversational preamble, a markdown
    fence, and trailing chatter around the target. It peaks the next planned
    token and adds Gaussian noise everywhere. Once the emitted prefix leaves
    the plan (a controller forced a different token, or sampling noise won),
    it gives up on the decoration and completes the bare target from wherever
    a greedy character match says it stands; with nothing left it peaks EOS.
    """

    def __init__(
        self,
        target: str,
        seed: int,
        p_preamble: float = 0.0,
        p_fence: float = 0.0,
        p_trailing: float = 0.0,
        peak: float = 5.0,
        noise_sigma: float = 0.5,
        vocab: Vocabulary | None = None,
        prompt_len: int = 0,
    ):
        self.vocab = vocab or build_failure_vocab()
        self.eos_token_id = self.vocab.id_of(EOS_TEXT)
        self.target = target
        self.seed = seed
        self.peak = peak
        self.noise_sigma = noise_sigma
        self.prompt_len = prompt_len

        rng = np.random.default_rng(seed)
        pre = str(rng.choice(_PREAMBLES)) if rng.random() < p_preamble else ""
        fence = rng.random() < p_fence
        trail = _TRAILING if rng.random() < p_trailing else ""
        open_f, close_f = ("```json\n", "\n```") if fence else ("", "")
        self.plan = pre + open_f + target + close_f + trail

        # Longest-first token table for greedy planning over the remainder.
        self._by_len = sorted(range(self.vocab.size), key=lambda i: -len(self.vocab.text(i)))

    def _remainder(self, text: str) -> str:
        if self.plan.startswith(text):
            return self.plan[len(text) :]
        cursor = 0
        for ch in text:
            if cursor < len(self.target) and ch == self.target[cursor]:
                cursor += 1
        return self.target[cursor:]

    def _intended_token(self, remainder: str) -> int:
        for tid in self._by_len:
            if tid != self.eos_token_id and remainder.startswith(self.vocab.text(tid)):
                return tid
        return self.eos_token_id

    def step(self, tokens: Sequence[int], cache: object | None) -> tuple[np.ndarray, object]:
        _check_cache(tokens, cache)
        text = self.vocab.decode(tokens[self.prompt_len :])
        remainder = self._remainder(text)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, len(tokens)])))
        logits = rng.normal(0.0, self.noise_sigma, self.vocab.size) if self.noise_sigma > 0 else np.zeros(self.vocab.size)
        target_id = self._intended_token(remainder) if remainder else self.eos_token_id
        logits[target_id] += self.peak
        return logits, len(tokens) + 1

    def truncate(self, cache: object, keep_len: int) -> object:
        return min(int(cache), keep_len)
