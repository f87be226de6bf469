"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Every tolerance and threshold is pinned here, not configurable.
"""

import time

import numpy as np
import pytest

from tokrail.contract import Stage, compile_spec
from tokrail.controller import SamplingConfig, generate, replay_check, uncontrolled_sample
from tokrail.drift import (
    TrainHyper,
    classify_accuracy,
    logistic_grad,
    logistic_loss,
    train_classifier,
)
from tokrail.harness import FailureProneModel, load_contract_spec, load_suite, run_suite, run_task
from tokrail.kernels import BACKEND
from tokrail.logits import apply_mask, apply_temperature, entropy, softmax
from tokrail.policy import LadderConfig
from tokrail.validator import validate

from conftest import (
    byte_vocab,
    dfs_done_strings,
    enumerate_valid_strings,
    fold_trace,
    greedy_tokenize,
    reference_check,
    spec_of,
    _enumerate_numbers,
    _enumerate_strings,
)
from corpus import build_corpus
from test_drift import separable_dataset


def report(criterion: int, description: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f" [{detail}]" if detail else ""
    print(f"{status} criterion {criterion}: {description}{suffix}")
    assert passed, f"criterion {criterion} failed: {description}{suffix}"


def test_criterion_1_mask_completeness():
    rng = np.random.default_rng(101)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        size = int(rng.integers(2, 64))
        z = rng.normal(0, 4, size)
        k = int(rng.integers(1, size + 1))
        allowed = set(int(i) for i in rng.choice(size, size=k, replace=False))
        p0 = softmax(z, 1.0)
        p1 = softmax(apply_mask(z, allowed), 1.0)
        invalid = sum(p1[i] for i in range(size) if i not in allowed)
        assert invalid == 0.0
        sub = sum(p0[i] for i in allowed)
        for i in allowed:
            worst = max(worst, abs(p1[i] - p0[i] / sub))
    elapsed = time.perf_counter() - started
    report(
        1,
        "mask completeness over 1000 random (logits, allowset) pairs",
        worst < 1e-9 and elapsed < 1.0,
        f"max ratio error {worst:.2e}, {elapsed:.2f}s, backend {BACKEND}",
    )


def test_criterion_2_temperature_control():
    rng = np.random.default_rng(202)
    ok = True
    for _ in range(1000):
        z = rng.normal(0, 3, int(rng.integers(2, 64)))
        p0 = softmax(z, 1.0)
        h0 = entropy(p0)
        a0 = int(np.argmax(p0))
        for tau in (0.5, 0.7, 0.9):
            p1 = softmax(apply_temperature(z, tau), 1.0)
            ok = ok and int(np.argmax(p1)) == a0 and entropy(p1) <= h0 + 1e-12
    report(2, "temperature: exact argmax invariance and entropy non-increase", ok)


def test_criterion_3_validator_oracle_equivalence():
    cases = build_corpus()
    mismatches = [
        (label, text[:50])
        for label, text, spec in cases
        if validate(text, spec).valid != reference_check(text, spec)
    ]
    report(
        3,
        f"validator agrees with stdlib-json reference on {len(cases)} cases",
        len(cases) >= 200 and not mismatches,
        f"{len(mismatches)} mismatches",
    )


def test_criterion_4_machine_validator_brute_force():
    started = time.perf_counter()
    vocab20 = '{}":k57-.e+ trulsf\\n'
    vocab = byte_vocab(vocab20)
    jobs = [
        (spec_of([("k", "integer")]), 12, _enumerate_numbers("57", 6, True)),
        (spec_of([("k", "number")]), 12, _enumerate_numbers("57", 6, False)),
        (spec_of([("k", "boolean")]), 12, ["true", "false"]),
        (spec_of([("k", "const", "ts")]), 12, ['"ts"']),
        (
            spec_of([("k", "string")]),
            10,
            _enumerate_strings("".join(sorted(set(vocab20) - {'"', "\\"})), 'ntrf"\\', 2),
        ),
    ]
    total_traces = 0
    ok = True
    for spec, depth, bodies in jobs:
        contract = compile_spec(spec)
        done = dfs_done_strings(contract, vocab, depth)
        total_traces += len(done)
        for s in done:
            ok = ok and validate(s, spec).valid
        enumerated = {
            s for s in enumerate_valid_strings(spec, depth, bodies) if set(s) <= set(vocab20)
        }
        ok = ok and done == enumerated
        for s in enumerated:
            ids = greedy_tokenize(s, vocab)
            state, consumed = fold_trace(contract, vocab, ids)
            ok = ok and state.stage == Stage.DONE and consumed == len(ids)
    elapsed = time.perf_counter() - started
    report(
        4,
        "stage machine and validator agree by exhaustive enumeration",
        ok and elapsed < 60.0,
        f"{total_traces} Done traces, {elapsed:.1f}s",
    )


def test_criterion_5_classifier():
    rng = np.random.default_rng(505)
    X = rng.random((20, 7))
    y = (rng.random(20) > 0.5).astype(float)
    w = rng.normal(0, 1, 7)
    b, l2, eps = 0.3, 1e-3, 1e-5
    gw, gb = logistic_grad(X, y, w, b, l2)
    max_rel = 0.0
    for j in range(7):
        wp, wm = w.copy(), w.copy()
        wp[j] += eps
        wm[j] -= eps
        num = (logistic_loss(X, y, wp, b, l2) - logistic_loss(X, y, wm, b, l2)) / (2 * eps)
        max_rel = max(max_rel, abs(num - gw[j]) / max(abs(num), 1e-12))
    num_b = (logistic_loss(X, y, w, b + eps, l2) - logistic_loss(X, y, w, b - eps, l2)) / (2 * eps)
    max_rel = max(max_rel, abs(num_b - gb) / max(abs(num_b), 1e-12))

    data = separable_dataset(200)
    acc = classify_accuracy(train_classifier(data).classifier, data)
    losses = train_classifier(data, TrainHyper(learning_rate=0.01, epochs=150)).losses
    nonincreasing = all(b2 <= a2 + 1e-12 for a2, b2 in zip(losses, losses[1:]))
    report(
        5,
        "classifier: gradient check, separable accuracy, loss monotonicity",
        max_rel < 1e-4 and acc >= 0.95 and nonincreasing,
        f"grad rel err {max_rel:.1e}, accuracy {acc:.3f}",
    )


def test_criterion_6_end_to_end_benchmark():
    started = time.perf_counter()
    suite = load_suite("acceptance_e2e")
    assert suite["tasks"][0]["trials"] == 200
    baseline = run_suite(suite, LadderConfig.baseline())
    controlled = run_suite(suite, LadderConfig())
    elapsed = time.perf_counter() - started
    b = baseline["overall"]["first_attempt_success"]
    c = controlled["overall"]["first_attempt_success"]
    mc = controlled["overall"]["mean_corrections"]
    mr = controlled["overall"]["max_rollback_depth"]
    report(
        6,
        "end-to-end synthetic benchmark over 200 seeded greedy runs",
        b <= 0.40 and c >= 0.90 and mc <= 3.0 and mr <= 3 and elapsed < 300.0,
        f"baseline {b:.3f}, controlled {c:.3f}, mean corrections {mc:.2f}, "
        f"max rollback {mr}, {elapsed:.1f}s",
    )


def test_criterion_7_baseline_equivalence():
    contract = compile_spec(load_contract_spec("name_age_city"))
    target = '{"name":"Ada","age":36,"city":"London"}'
    identical = 0
    for i in range(100):
        mode = "multinomial" if i % 2 else "greedy"
        kw = dict(
            target=target,
            seed=i,
            p_preamble=0.4 + 0.2 * (i % 3) / 2,
            p_fence=0.3,
            p_trailing=0.3,
            noise_sigma=0.7,
        )
        sampling = SamplingConfig(mode, i)
        r = generate(
            FailureProneModel(**kw), [], contract, None, None,
            LadderConfig.baseline(), sampling, 96,
        )
        reference = uncontrolled_sample(FailureProneModel(**kw), [], sampling, 96)
        identical += r.tokens == reference
    report(
        7,
        "theta1=1 runs byte-identical to uncontrolled sampling over 100 runs",
        identical == 100,
        f"{identical}/100 identical",
    )


def test_criterion_8_rollback_determinism():
    suite = load_suite("acceptance_e2e")
    task = dict(suite["tasks"][0])
    task["trials"] = 60
    task["sampling"] = "multinomial"
    task["model"] = dict(task["model"], noise_sigma=0.9)
    spec = load_contract_spec(task["contract"])
    contract = compile_spec(spec)
    results = run_task(task, LadderConfig())

    from tokrail.harness import targets
    from tokrail.harness.suite import _MODEL_STREAM, _TARGET_STREAM

    replays = 0
    with_corrections = 0
    for i, r in enumerate(results):
        seed = task["base_seed"] + i
        target = targets.make_target(spec, seed + _TARGET_STREAM, None)
        fresh = FailureProneModel(target=target, seed=seed + _MODEL_STREAM, **task["model"])
        replays += replay_check(r, fresh, contract)
        with_corrections += r.corrections > 0
    report(
        8,
        "replay_check true on 100% of harness runs including corrections",
        replays == len(results) and with_corrections > 0,
        f"{replays}/{len(results)} replayed, {with_corrections} runs with corrections",
    )
