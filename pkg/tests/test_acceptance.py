"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the criterion lines are
written straight to the terminal.  Criterion 8 cannot be met (see the
skewness note on that test) and is marked as a strict expected failure, so it
is still executed and reported as FAIL.
"""
import io
import json
import math
import time
from collections import Counter
from contextlib import redirect_stdout
from itertools import permutations

import numpy as np
import pytest
from gmpy2 import mpq

from bullets.cli import main as cli_main
from bullets.engine import Configuration, realize, resolve
from bullets.enumeration import CrossingSet, Side, constrained_profile, enumerate_ff
from bullets.errors import RecursionStuck
from bullets.law import central_moments_floating, decomposition, q_exact, zero_product
from bullets.models import (ImpetusProblem, compare_empirical, flock_destruction_times, flock_run,
                            odd_cycle_count, sample_many, sample_odd_cycles, two_step_bernoullis,
                            two_step_distances, two_step_law)
from bullets.rng import stream
from bullets.scheme import survivors_from_tcs, tcs_from_shots
from bullets.verify import seeded_constrained, seeded_parameters

SEED = 20240611


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        return ok
    return emit


def _cli(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main(argv)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def ff_tables():
    """Exhaustive FF tables for n = 2..6: three generic parameters plus one with V_1 = 0."""
    out = {}
    for n in range(2, 7):
        params = seeded_parameters(n, 3, SEED) + seeded_parameters(n, 1, SEED, zero_min=True)
        out[n] = [(p, enumerate_ff(p)) for p in params]
    return out


def test_criterion_1_recurrence_values(report):
    start = time.perf_counter()
    values = (q_exact(2).mass == {0: mpq(1, 2), 2: mpq(1, 2)}
              and q_exact(3).mass == {1: mpq(5, 6), 3: mpq(1, 6)}
              and q_exact(4).mass == {0: mpq(3, 8), 2: mpq(7, 12), 4: mpq(1, 24)})
    product = all(q_exact(2 * m).mass.get(0, 0) == zero_product(m) for m in range(1, 101))
    elapsed = time.perf_counter() - start
    ok = values and product and elapsed < 1
    report(1, ok, f"values {values}, product formula m<=100 {product}, {elapsed:.3f}s")
    assert ok


def test_criterion_2_enumeration_equals_law(report, ff_tables):
    bad = []
    for n, rows in ff_tables.items():
        law = q_exact(n).probabilities()
        for p, table in rows:
            if table.frequencies() != law:
                bad.append((n, p.to_json()))
        zero_p, zero_t = rows[-1]
        assert zero_p.speeds[0] == 0
        split = {k: decomposition(n, k) for k in range(n + 1) if decomposition(n, k)}
        if zero_t.frequencies() != split or zero_t.by_speed[0] * n != zero_t.total:
            bad.append((n, "zero-speed decomposition"))
    ok = not bad
    report(2, ok, f"{sum(len(r) for r in ff_tables.values())} parameters, n=2..6, "
                  f"mismatches {bad}")
    assert ok


def test_criterion_3_parameter_invariance(report, ff_tables):
    same = all(len({tuple(t.frequencies().items()) for _, t in rows}) == 1
               for rows in ff_tables.values())
    vectors = {tuple(t.by_position) for _, t in ff_tables[4]}
    witness = len(vectors) > 1
    ok = same and witness
    report(3, ok, f"laws identical across parameters {same}; n=4 survival-by-position "
                  f"vectors {sorted(vectors)}")
    assert ok


def test_criterion_4_tcs_oracle(report, ff_tables):
    configs = mismatches = stuck = 0
    for n in range(2, 6):
        params = [p for p, _ in ff_tables[n]] + seeded_parameters(n, 3, SEED + 1)
        for p in params:
            for sigma in permutations(range(n)):
                for tau in permutations(range(n - 1)):
                    shots = realize(p, Configuration(sigma, tau))
                    configs += 1
                    try:
                        if survivors_from_tcs(tcs_from_shots(shots)) != resolve(shots).survivors:
                            mismatches += 1
                    except RecursionStuck:
                        stuck += 1
    ok = mismatches == 0 and stuck == 0
    report(4, ok, f"{configs} configurations, {mismatches} mismatches, {stuck} stuck")
    assert ok


def _restrict(tally, h, A):
    out = Counter()
    for (hi, c, k), num in tally.items():
        if hi == h and A.contains(c):
            out[k] += num
    return out


def test_criterion_5_left_right_counts(report):
    checks = failures = crossed = 0
    g_equal = True
    for n in range(3, 7):
        for cp in seeded_constrained(n, 3, SEED):
            heights = (mpq(0), cp.height / 2, cp.height)
            left, _ = constrained_profile(cp, Side.LEFT, heights)
            right, _ = constrained_profile(cp, Side.RIGHT, heights)
            for h in range(3):
                for A in CrossingSet:
                    checks += 1
                    failures += _restrict(left, h, A) != _restrict(right, h, A)
            g_equal &= _restrict(left, 0, CrossingSet.ZERO) == _restrict(right, 0, CrossingSet.ZERO)
            crossed += sum(num for (h, c, _), num in left.items() if h == 2 and c > 0)
    ok = failures == 0 and g_equal and crossed > 0
    report(5, ok, f"{checks} (n, parameter, s, A) comparisons, {failures} unequal; "
                  f"s=0 zero-crossing counts equal {g_equal}; {crossed} crossing configurations")
    assert ok


def test_criterion_6_combinatorial_equivalences(report):
    flock_ok = cycles_ok = True
    for n in range(1, 9):
        law = q_exact(n).mass
        total = math.factorial(n)
        flock = Counter(flock_run(p)[0] for p in permutations(range(n)))
        cycles = Counter(odd_cycle_count(p) for p in permutations(range(n)))
        flock_ok &= {k: mpq(c, total) for k, c in flock.items()} == law
        cycles_ok &= {k: mpq(c, total) for k, c in cycles.items()} == law
    tree_bad = [n for n in range(0, 501) if two_step_law(n).mass != q_exact(n).mass]
    ok = flock_ok and cycles_ok and not tree_bad
    report(6, ok, f"flock n<=8 {flock_ok}, odd cycles n<=8 {cycles_ok}, "
                  f"two-step tree n<=500 mismatches {tree_bad}")
    assert ok


def test_criterion_7_monte_carlo(report):
    samples = 10 ** 5
    rows = []
    for n in (8, 10):
        p = seeded_parameters(n, 1, SEED + 7)[0]
        ip = ImpetusProblem(p.speeds, p.delays, "sqrt")
        jobs = {"ru": {}, "rr": {}, "ff": {"parameter": p}, "faf": {"problem": ip}, "matrix": {}}
        for i, (model, options) in enumerate(jobs.items()):
            draws = sample_many(model, n, samples, SEED + 10 * n + i, options=options)
            tv, _, pval = compare_empirical(draws, q_exact(n))
            rows.append((model, n, tv, pval))
    ok = all(tv < 0.02 and pval > 1e-3 for _, _, tv, pval in rows)
    detail = ", ".join(f"{m}@{n}: tv {tv:.4f} p {pval:.3f}" for m, n, tv, pval in rows)
    report(7, ok, detail)
    assert ok


def test_criterion_8_moment_parts():
    """The attainable parts of criterion 8, guarded on their own."""
    n = 10 ** 6
    mean, var, _ = central_moments_floating(n)
    assert abs(mean - 0.5 * math.log(n)) <= 1
    assert abs(var - 0.5 * math.log(n)) <= 1.5


@pytest.mark.xfail(strict=True, reason="the exact skewness of X_n at n=10^5 is 0.373, "
                                       "so no unbiased sample can fall below 0.2")
def test_criterion_8_asymptotic_moments(report):
    n = 10 ** 6
    mean, var, _ = central_moments_floating(n)
    half_log = 0.5 * math.log(n)
    mean_ok = abs(mean - half_log) <= 1
    var_ok = abs(var - half_log) <= 1.5
    x = sample_odd_cycles(10 ** 5, 10 ** 5, stream(SEED, 8)).astype(float)
    z = (x - x.mean()) / x.std()
    skew = float(np.mean(z ** 3))
    exact_skew = central_moments_floating(10 ** 5)[2]
    skew_ok = abs(skew) < 0.2
    ok = mean_ok and var_ok and skew_ok
    report(8, ok, f"mean {mean:.4f} vs {half_log:.4f} ({mean_ok}); variance {var:.4f} "
                  f"({var_ok}); sample skewness {skew:.4f} at n=10^5, exact {exact_skew:.4f} "
                  f"({skew_ok})")
    assert ok


def test_criterion_9_flock_checks(report):
    parts = []
    ok = True
    for x in (0.5, 0.9):
        t = flock_destruction_times(x, 10 ** 6, stream(SEED, 9, int(10 * x)))
        target = 1 / (1 - x) ** 2
        se = t.std(ddof=1) / math.sqrt(t.size)
        good = abs(t.mean() - target) <= 3 * se
        ok &= good
        parts.append(f"x={x}: mean {t.mean():.3f} target {target:.0f} se {se:.3f}")
    _, sizes = flock_run(stream(SEED, 9, 1).random(10 ** 5))
    returns = sizes[10:].count(0)
    ok &= returns > 0
    g = stream(SEED, 9, 2)
    monotone = True
    for _ in range(200):
        D = two_step_distances(two_step_bernoullis(2000, g))
        monotone &= all(D[i] <= D[i + 2] for i in range(len(D) - 2))
    ok &= monotone
    report(9, ok, "; ".join(parts) + f"; trajectory returns to 0: {returns}; "
                  f"two-step monotone in 200 runs: {monotone}")
    assert ok


def test_criterion_10_trajectory(report, tmp_path):
    target = tmp_path / "trajectory.csv"
    start = time.perf_counter()
    code, _ = _cli(["trajectory", "--n", "5000", "--seed", str(SEED), "--out", str(target)])
    elapsed = time.perf_counter() - start
    rows = target.read_text().splitlines()
    sizes = [int(r.split(",")[1]) for r in rows[1:]]
    steps_ok = all(abs(b - a) == 1 for a, b in zip(sizes, sizes[1:]))
    ok = code == 0 and rows[0] == "j,size" and len(sizes) == 5000 and steps_ok and elapsed < 120
    report(10, ok, f"{len(sizes)} rows, all steps +-1 {steps_ok}, final size {sizes[-1]}, "
                   f"{elapsed:.1f}s")
    assert ok


def test_criterion_11_determinism(report, tmp_path):
    params = tmp_path / "p.json"
    params.write_text(json.dumps(seeded_parameters(6, 1, SEED)[0].to_json()))
    commands = [
        ["dist", "--n", "12"],
        ["enumerate", "--params", str(params), "--model", "ff"],
        ["simulate", "--model", "ru", "--n", "8", "--samples", "30000"],
        ["simulate", "--model", "ff", "--params", str(params), "--samples", "30000"],
        ["alt", "--model", "matrix", "--n", "8", "--samples", "30000"],
        ["trajectory", "--n", "300"],
        ["verify", "--suite", "lrrr", "--max-n", "5"],
    ]
    differing = []
    for argv in commands:
        outs = {_cli(argv + ["--seed", "7", "--jobs", str(j)])[1] for j in (1, 2)}
        if len(outs) != 1:
            differing.append(argv[0])
    ok = not differing
    report(11, ok, f"{len(commands)} commands run with --jobs 1 and 2; differing: {differing}")
    assert ok
