"""Acceptance suite: one test per release criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` (or ``-rA``) to see the
per-criterion PASS lines.
"""

import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from sqsa.automata import (
    FamilyConfig,
    build_family,
    min_alphabet_copies,
    min_word_length,
    run_word,
)
from sqsa.cli import main as cli_main
from sqsa.perm import all_permutations, all_transpositions, fix_count
from sqsa.sq import (
    StatQuery,
    certify_sq_dimension,
    elimination_bound,
    make_session,
    oracle_answer,
    query_lower_bound,
)
from sqsa.symrep import (
    Partition,
    char_ratio,
    irrep_dim,
    partitions,
    perm_matrix,
    std_matrix,
)
from sqsa.walk import (
    agreement_brute_force,
    agreement_exact,
    expected_operator,
    expected_spectrum,
    fixed_point_fourier_check,
    fourier_matrix,
    mixing_scan,
    spectral_norm,
    step_distribution,
)


def verdict(number: int, name: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {number} ({name}): {'PASS' if passed else 'FAIL'} — {detail}")
    assert passed, f"criterion {number} ({name}) failed: {detail}"


def test_criterion_1_agreement_formula_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for index in range(100):
        n = int(rng.choice([3, 4, 5]))
        k = int(rng.choice([1, 2]))
        t = int(rng.integers(0, 5))
        family = build_family(FamilyConfig(n, k, 2, 0.5, seed=100_000 + index))
        exact = agreement_exact(family.members[0], family.members[1], t)
        brute = agreement_brute_force(family.members[0], family.members[1], t)
        worst = max(worst, abs(exact.p_agree - brute.p_agree))
    elapsed = time.perf_counter() - started
    verdict(
        1,
        "agreement formula equivalence",
        worst <= 1e-10 and elapsed < 60,
        f"max |spectral - enumeration| = {worst:.3e} over 100 instances in {elapsed:.1f}s",
    )


def test_criterion_2_expected_spectrum():
    started = time.perf_counter()
    worst = 0.0
    for n in range(4, 9):
        computed = np.linalg.eigvalsh(expected_operator(n, 0.5))[::-1]
        closed = np.array(
            [float(value) for value, mult in expected_spectrum(n) for _ in range(mult)]
        )
        assert computed.shape == closed.shape  # multiplicities must match exactly
        worst = max(worst, float(np.abs(computed - closed).max()))
    elapsed = time.perf_counter() - started
    verdict(
        2,
        "expected spectrum",
        worst <= 1e-9 and elapsed < 60,
        f"max eigenvalue error {worst:.3e} over n=4..8 in {elapsed:.1f}s",
    )


def test_criterion_3_fixed_point_fourier_lemma():
    started = time.perf_counter()
    details = []
    passed = True
    for n in (3, 4, 5):
        report = fixed_point_fourier_check(n)
        passed = passed and report.passed
        details.append(
            f"n={n}: factor {report.scalar_factor}, rel {report.rel_err_diagonal:.2e}, "
            f"off-diag {max(report.max_abs_left_trivial, report.max_abs_right_trivial):.2e}"
        )
    elapsed = time.perf_counter() - started
    verdict(
        3,
        "fixed-point Fourier lemma",
        passed and elapsed < 300,
        "; ".join(details) + f" in {elapsed:.1f}s",
    )


def _threshold_pairs(n, count, seed_base):
    copies = min_alphabet_copies(n)
    for repeat in range(count):
        family = build_family(FamilyConfig(n, copies, 2, 0.5, seed=seed_base + repeat))
        yield family.members[0], family.members[1]


def test_criterion_4_mixing_bounds():
    started = time.perf_counter()
    n = 5
    applied_upper = applied_lower = 0
    violations = 0
    for a, b in _threshold_pairs(n, 200, 30_000):
        scan = mixing_scan(a, b, 200)
        applied_upper += scan.upper_applies
        applied_lower += scan.lower_applies
        violations += len(scan.upper_violations) + len(scan.lower_violations)
    elapsed = time.perf_counter() - started
    verdict(
        4,
        "mixing bounds",
        violations == 0 and applied_upper == 200 and applied_lower == 200,
        f"0 violations expected, saw {violations}; envelopes applied on "
        f"{applied_upper}/200 (upper) and {applied_lower}/200 (lower) pairs in {elapsed:.1f}s",
    )


def test_criterion_5_concentration_frequency():
    started = time.perf_counter()
    n = 5
    expected = expected_operator(n, 0.5)
    exceedances = 0
    worst = 0.0
    for a, b in _threshold_pairs(n, 200, 30_000):
        deviation = spectral_norm(fourier_matrix(step_distribution(a, b)) - expected)
        worst = max(worst, deviation)
        exceedances += deviation > 1.0 / (2 * n)
    elapsed = time.perf_counter() - started
    verdict(
        5,
        "concentration frequency",
        exceedances == 0,
        f"max deviation {worst:.4f} vs cutoff {1 / (2 * n)}, {exceedances}/200 exceedances "
        f"in {elapsed:.1f}s",
    )


def test_criterion_6_indistinguishability_target():
    started = time.perf_counter()
    n = 5
    copies = min_alphabet_copies(n)
    length = min_word_length(n)
    family = build_family(FamilyConfig(n, copies, 24, 0.5, seed=20_251))
    worst = 0.0
    for i in range(24):
        for j in range(i + 1, 24):
            report = agreement_exact(family.members[i], family.members[j], length)
            worst = max(worst, abs(report.residual))
    certificate = certify_sq_dimension(family.members, length, 24)
    elapsed = time.perf_counter() - started
    verdict(
        6,
        "indistinguishability target",
        worst <= 1 / 120 and certificate.passed and elapsed < 600,
        f"max |p_agree - 1/5| = {worst:.3e} <= 1/120 over 276 pairs at T={length}, "
        f"certificate(d=24) passed={certificate.passed} in {elapsed:.1f}s",
    )


def _centered_label_vectors(member, word_length):
    n = member.n_states
    rows = []
    for word in itertools.product(range(member.alphabet_size), repeat=word_length):
        for start in range(n):
            row = np.full(n, -1.0 / n)
            row[run_word(member, word, start)] += 1.0
            rows.append(row)
    return np.array(rows)


def test_criterion_7_sq_machinery():
    started = time.perf_counter()

    # (a) inner products of centered label vectors equal correlations, exhaustively
    family = build_family(FamilyConfig(3, 1, 4, 0.5, seed=6))
    worst_identity = 0.0
    for t in range(4):
        vectors = [_centered_label_vectors(member, t) for member in family.members]
        for i in range(4):
            for j in range(4):
                inner = float((vectors[i] * vectors[j]).sum(axis=1).mean())
                chi = agreement_brute_force(family.members[i], family.members[j], t).residual
                worst_identity = max(worst_identity, abs(inner - chi))

    # (b) per-query eliminations never exceed the cap when d * tau^2 > labels;
    # exhaustive battery on a certified-at-d=4 family (T=3), then a sampled
    # battery on a certified-at-d=24 family where the cap is non-vacuous
    battery = build_family(FamilyConfig(3, 4, 8, 0.5, seed=503))
    certificate = certify_sq_dimension(battery.members, 3, 4)
    assert certificate.passed
    tau = 0.9
    assert 4 * tau**2 > 3
    cap = elimination_bound(4, tau, 3)
    session = make_session(battery, 3, tolerance=tau)
    max_eliminated = 0
    for member in range(4):
        oracle_answer(session, StatQuery("state-agreement", {"member": member}))
    oracle_answer(session, StatQuery("label-indicator", {"label": 0}))
    oracle_answer(session, StatQuery("final-state-parity"))
    for record in session.ledger:
        assert record.method == "exact"
        max_eliminated = max(max_eliminated, len(record.eliminated_ids))
    cap_ok = max_eliminated <= cap

    wide = build_family(FamilyConfig(3, 64, 24, 0.5, seed=8800))
    wide_certificate = certify_sq_dimension(wide.members, 8, 24)
    assert wide_certificate.passed
    wide_tau = 0.6
    wide_cap = elimination_bound(24, wide_tau, 3)
    assert wide_cap < 24  # the cap actually binds here
    wide_session = make_session(wide, 8, tolerance=wide_tau, seed=4242, mc_samples=20_000)
    for member in range(8):
        oracle_answer(wide_session, StatQuery("state-agreement", {"member": member}))
    wide_max = max(len(r.eliminated_ids) for r in wide_session.ledger)
    cap_ok = cap_ok and wide_max <= wide_cap

    # (c) the query lower bound against independent rational arithmetic
    tuples = [
        (120, 0.5, 5),
        (2, 0.9, 2),
        (24, 0.6, 3),
        (10, 1.0, 2),
        (7, 0.3, 4),
        (100, 0.25, 6),
        (1, 0.7, 9),
        (720, 0.1, 6),
        (36, 0.75, 4),
        (5, 0.4, 5),
    ]
    worst_formula = 0.0
    for d, tau_value, labels in tuples:
        by_hand = (
            Fraction(d - 1)
            * (d * Fraction(tau_value) ** 2 - labels)
            / (2 * d * (labels - 1))
        )
        worst_formula = max(
            worst_formula, abs(query_lower_bound(d, tau_value, labels) - float(by_hand))
        )

    elapsed = time.perf_counter() - started
    verdict(
        7,
        "SQ machinery",
        worst_identity <= 1e-12 and cap_ok and worst_formula <= 1e-12,
        f"inner-product identity within {worst_identity:.1e}; eliminations <= caps "
        f"({max_eliminated} <= {cap:.1f} exact, {wide_max} <= {wide_cap:.1f} sampled); "
        f"lower-bound formula within {worst_formula:.1e} in {elapsed:.1f}s",
    )


def test_criterion_8_representation_theory_base():
    started = time.perf_counter()
    # dimension squares sum to the group order
    sums_ok = all(
        sum(irrep_dim(p) ** 2 for p in partitions(n)) == math.factorial(n)
        for n in range(1, 8)
    )
    # permutation character = 1 + standard character, exhaustively
    char_ok = True
    for n in range(2, 6):
        for g in all_permutations(n):
            lhs = np.trace(perm_matrix(g))
            rhs = 1.0 + np.trace(std_matrix(g))
            char_ok = char_ok and abs(lhs - rhs) < 1e-10
            char_ok = char_ok and abs(lhs - fix_count(g)) < 1e-12
    # character ratios against matrix traces for trivial and standard
    ratio_ok = True
    for n in range(2, 6):
        swap = all_transpositions(n)[0].as_permutation(n)
        traced = np.trace(std_matrix(swap)) / (n - 1)
        ratio_ok = ratio_ok and abs(traced - float(char_ratio(Partition.standard(n)))) < 1e-10
        ratio_ok = ratio_ok and char_ratio(Partition.trivial(n)) == 1
    # tensor-square character identity at a transposition
    identity_ok = True
    for n in range(4, 8):
        chi_std = char_ratio(Partition.standard(n)) * irrep_dim(Partition.standard(n))
        chi_22 = char_ratio(Partition((n - 2, 2))) * irrep_dim(Partition((n - 2, 2)))
        chi_211 = char_ratio(Partition((n - 2, 1, 1))) * irrep_dim(Partition((n - 2, 1, 1)))
        identity_ok = identity_ok and chi_std**2 == 1 + chi_std + chi_22 + chi_211
    elapsed = time.perf_counter() - started
    verdict(
        8,
        "representation-theory base",
        sums_ok and char_ok and ratio_ok and identity_ok,
        f"dimension sums n<=7: {sums_ok}; perm=1+std n<=5: {char_ok}; "
        f"ratios vs traces: {ratio_ok}; tensor-square identity n=4..7: {identity_ok} "
        f"in {elapsed:.1f}s",
    )


def test_criterion_9_cli_determinism(tmp_path):
    started = time.perf_counter()
    family_path = tmp_path / "family.sqsa"
    queries_path = tmp_path / "queries.json"
    queries_path.write_text(
        json.dumps(
            [
                {"builtin": "state-agreement", "params": {"member": 0}},
                {"builtin": "label-indicator", "params": {"label": 2}},
                {"builtin": "final-state-parity"},
            ]
        )
    )
    assert cli_main(["family", "--n", "4", "--k", "3", "--m", "6", "--seed", "11", "--out", str(family_path)]) == 0
    commands = {
        "family": ["family", "--n", "4", "--k", "3", "--m", "6", "--seed", "11"],
        "pagree-mc": [
            "pagree", "--family", str(family_path), "--t", "6", "--method", "mc",
            "--samples", "20000", "--seed", "5",
        ],
        "pagree-exact": ["pagree", "--family", str(family_path), "--t", "6"],
        "spectrum": ["spectrum", "--n", "5", "--p", "0.5"],
        "mixing": ["mixing", "--family", str(family_path), "--t-max", "50"],
        "certify": ["certify", "--family", str(family_path), "--t", "6", "--d", "6"],
        "oracle": [
            "oracle", "--family", str(family_path), "--t", "3", "--tau", "0.4",
            "--seed", "7", "--queries", str(queries_path),
        ],
    }
    mismatches = []
    for name, argv in commands.items():
        first = tmp_path / f"{name}.1"
        second = tmp_path / f"{name}.2"
        assert cli_main(argv + ["--jobs", "1", "--out", str(first)]) == 0
        assert cli_main(argv + ["--jobs", "4", "--out", str(second)]) == 0
        if first.read_bytes() != second.read_bytes():
            mismatches.append(name)
    elapsed = time.perf_counter() - started
    verdict(
        9,
        "CLI determinism",
        not mismatches,
        f"byte-identical reruns across --jobs for {len(commands)} commands "
        f"(mismatches: {mismatches or 'none'}) in {elapsed:.1f}s",
    )
