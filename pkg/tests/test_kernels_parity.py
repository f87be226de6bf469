"""Pure vs compiled kernel backends must agree.

Numeric kernels agree to float64 tolerance (summation order may differ by
ulps); integer-valued results (argmax, picks, automaton steps, masks) must
agree exactly.
"""

import numpy as np
import pytest

from tokrail import kernels
from tokrail.contract import compile_spec
from tokrail.kernels import automaton

from conftest import byte_vocab, spec_of

pure = kernels.get_backend("pure")
try:
    speed = kernels.get_backend("compiled")
except ImportError:  # pragma: no cover - extension not built
    speed = None

needs_ext = pytest.mark.skipif(speed is None, reason="compiled extension not built")


def random_cases(rng, n=300):
    for _ in range(n):
        size = int(rng.integers(2, 60))
        z = rng.normal(0, 4, size)
        k = int(rng.integers(0, size))
        if k:
            z[rng.choice(size, size=k, replace=False)] = -np.inf
        if not np.isfinite(z).any():
            z[0] = 0.0
        mask = (rng.random(size) < 0.5).astype(np.uint8)
        if not mask.any():
            mask[int(rng.integers(size))] = 1
        yield z, mask


@needs_ext
class TestNumericParity:
    def test_softmax_entropy(self, rng):
        for z, _ in random_cases(rng):
            for tau in (1.0, 0.7):
                a = pure.softmax(z, tau)
                b = speed.softmax(z, tau)
                np.testing.assert_allclose(a, b, atol=1e-12)
                # Exact zeros must agree exactly.
                np.testing.assert_array_equal(a == 0.0, b == 0.0)
                assert pure.entropy(a) == pytest.approx(speed.entropy(b), abs=1e-12)

    def test_edits(self, rng):
        for z, mask in random_cases(rng):
            np.testing.assert_array_equal(pure.apply_mask(z, mask), speed.apply_mask(z, mask))
            np.testing.assert_allclose(
                pure.apply_bias(z, mask, 2.5), speed.apply_bias(z, mask, 2.5), atol=0
            )
            np.testing.assert_allclose(
                pure.apply_temperature(z, 0.7), speed.apply_temperature(z, 0.7), atol=0
            )

    def test_scalar_kernels(self, rng):
        for z, mask in random_cases(rng):
            p = pure.softmax(z, 1.0)
            assert pure.argmax_low(p) == speed.argmax_low(p)
            assert pure.invalid_mass(p, mask) == pytest.approx(speed.invalid_mass(p, mask), abs=1e-15)
            for u in rng.random(5):
                assert pure.multinomial_pick(p, float(u)) == speed.multinomial_pick(p, float(u))

    def test_argmax_tie_break(self):
        v = np.array([0.4, 0.4, 0.2])
        assert pure.argmax_low(v) == speed.argmax_low(v) == 0


@needs_ext
class TestAutomatonParity:
    SPECS = [
        spec_of([("name", "string"), ("age", "integer"), ("city", "string")]),
        spec_of([("tool", "const", "search"), ("query", "string")]),
        spec_of([("a", "number"), ("b", "boolean")], ordered=False),
        spec_of([("a", "string")], allow_whitespace=False, permit_raw_newlines=True),
        spec_of([("a", "integer")], allow_preamble=True),
    ]

    def _reachable_states(self, contract, rng, walks=40, depth=30):
        vocab = byte_vocab("".join(chr(b) for b in range(0x20, 0x80)) + "\n\t")
        seen = {contract.initial_state().as_tuple()}
        for _ in range(walks):
            s = contract.initial_state()
            for _ in range(depth):
                if s.is_absorbing:
                    break
                al = sorted(contract.allowlist(s, vocab))
                if not al:
                    break
                tid = al[int(rng.integers(len(al)))]
                _, s = contract.token_admissible(s, vocab.text_bytes(tid))
                seen.add(s.as_tuple())
        return seen

    def test_admit_byte_exhaustive_over_reachable_states(self, rng):
        for spec in self.SPECS:
            contract = compile_spec(spec)
            for state in self._reachable_states(contract, rng):
                if automaton.is_absorbing(state[0]):
                    continue
                for b in range(256):
                    ok_p, next_p = pure.fold_token(contract.tables, state, bytes([b]))
                    ok_c, next_c = speed.fold_token(contract.tables, state, bytes([b]))
                    assert ok_p == ok_c, (spec, state, b)
                    assert next_p == next_c, (spec, state, b)

    def test_allowlist_masks_match(self, rng):
        vocab = byte_vocab("".join(chr(b) for b in range(0x20, 0x80)) + "\n\t")
        for spec in self.SPECS:
            contract = compile_spec(spec)
            for state in self._reachable_states(contract, rng, walks=15):
                if automaton.is_absorbing(state[0]):
                    continue
                mp = np.zeros(vocab.size, dtype=np.uint8)
                mc = np.zeros(vocab.size, dtype=np.uint8)
                pure.allowlist_mask(contract.tables, state, vocab.token_flat, vocab.token_off, mp)
                speed.allowlist_mask(contract.tables, state, vocab.token_flat, vocab.token_off, mc)
                np.testing.assert_array_equal(mp, mc)

    def test_multibyte_token_folds_match(self, rng):
        contract = compile_spec(self.SPECS[0])
        tokens = [b'"name"', b'": "', b"Sure", b", ", b'{"', b"\\n", b"36,", b'"x y"']
        for state in self._reachable_states(contract, rng, walks=10):
            if automaton.is_absorbing(state[0]):
                continue
            for tok in tokens:
                assert pure.fold_token(contract.tables, state, tok) == speed.fold_token(
                    contract.tables, state, tok
                )


class TestBackendSelection:
    def test_selected_backend_exposed(self):
        assert kernels.BACKEND in ("pure", "compiled")

    def test_env_override(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c", "from tokrail import kernels; print(kernels.BACKEND)"],
            env={"TOKRAIL_PURE": "1", "PATH": "/usr/bin:/bin"},
            capture_output=True,
            text=True,
        )
        assert out.stdout.strip() == "pure"
