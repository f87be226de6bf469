#!/usr/bin/env python3
"""Micro-benchmark: compiled kernel extension vs pure backend.

Times the hot paths of the control loop (softmax, logit edits, allowlist
computation via the char automaton) and a full controlled suite run per
backend. Run from the repo root:

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from tokrail import kernels
from tokrail.contract import compile_spec
from tokrail.harness import build_failure_vocab, load_contract_spec


def timeit(fn, repeats: int, inner: int) -> float:
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best.append((time.perf_counter() - t0) / inner)
    return min(best)


def bench_backend(backend, repeats: int) -> dict[str, float]:
    rng = np.random.default_rng(0)
    vocab = build_failure_vocab()
    z = rng.normal(0, 3, vocab.size)
    mask = (rng.random(vocab.size) < 0.3).astype(np.uint8)
    mask[0] = 1

    contract = compile_spec(load_contract_spec("name_age_city"))
    state = contract.initial_state().as_tuple()
    out = np.zeros(vocab.size, dtype=np.uint8)

    results = {
        "softmax": timeit(lambda: backend.softmax(z, 1.0), repeats, 2000),
        "apply_mask": timeit(lambda: backend.apply_mask(z, mask), repeats, 2000),
        "apply_bias": timeit(lambda: backend.apply_bias(z, mask, 4.0), repeats, 2000),
        "invalid_mass": timeit(
            lambda: backend.invalid_mass(backend.softmax(z, 1.0), mask), repeats, 2000
        ),
        "allowlist_mask": timeit(
            lambda: backend.allowlist_mask(
                contract.tables, state, vocab.token_flat, vocab.token_off, out
            ),
            repeats,
            200,
        ),
        "fold_token": timeit(
            lambda: backend.fold_token(contract.tables, state, b'{"name":"Ada"'), repeats, 2000
        ),
    }
    return results


def bench_suite(env_value: str) -> float:
    """Wall time of a 40-run controlled suite in a fresh interpreter."""
    code = (
        "import time; from tokrail.harness import run_suite; "
        "from tokrail.policy import LadderConfig; "
        "suite={'name':'bench','tasks':[{'name':'name_age_city','contract':'name_age_city',"
        "'trials':40,'base_seed':0,'model':{'p_preamble':0.5,'p_fence':0.3},"
        "'sampling':'greedy','max_tokens':128}]}; "
        "t0=time.perf_counter(); run_suite(suite, LadderConfig()); "
        "print(time.perf_counter()-t0)"
    )
    env = dict(os.environ)
    env["TOKRAIL_PURE"] = env_value
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    return float(out.stdout.strip())


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--skip-suite", action="store_true")
    args = parser.parse_args()

    pure = kernels.get_backend("pure")
    try:
        speed = kernels.get_backend("compiled")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1

    rp = bench_backend(pure, args.repeats)
    rs = bench_backend(speed, args.repeats)
    width = max(len(k) for k in rp)
    print(f"{'kernel':<{width}}  {'pure':>12}  {'compiled':>12}  {'speedup':>8}")
    for k in rp:
        print(f"{k:<{width}}  {rp[k] * 1e6:>10.2f}us  {rs[k] * 1e6:>10.2f}us  {rp[k] / rs[k]:>7.1f}x")

    if not args.skip_suite:
        tp = bench_suite("1")
        ts = bench_suite("0")
        print(f"\ncontrolled 40-run suite: pure {tp:.3f}s, compiled {ts:.3f}s, speedup {tp / ts:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
