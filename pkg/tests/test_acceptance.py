"""Acceptance suite: the twelve end-to-end criteria at their stated tolerances.

Each ``criterion_*`` function returns ``(ok, detail)``. Under pytest every
criterion is one test that records a PASS/FAIL line (shown in the
"acceptance criteria" section of the terminal summary) and then asserts.
Run ``python3 tests/test_acceptance.py`` to print the lines without pytest.
"""

from __future__ import annotations

import json
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_registry import record  # noqa: E402
from oracles import box_relations, brute_is_prime, subgroup, units  # noqa: E402
from regevkit import experiments as ex  # noqa: E402
from regevkit.arith import is_probable_prime, perfect_power  # noqa: E402
from regevkit.characters import (  # noqa: E402
    DirichletCharacter,
    char_order,
    characters,
    max_root_multiplicity,
    orthogonality_sums,
    prime_char_average,
)
from regevkit.group import (  # noqa: E402
    exp_floor,
    kernel_size,
    m_star,
    regev_dimension,
    unit_group_structure,
)
from regevkit.lattice import relation_lattice  # noqa: E402
from regevkit.pipelines import is_rsa_safe_modulus, verify_short_product  # noqa: E402

SEED = 20240601
PRIME_CACHE = Path(__file__).parent / "data" / "short_basis_primes.json"
IDENTITY_FLAGS = ("identity_ok", "decomposition_ok", "orthogonal_ok", "lattice_count_ok", "det_ok")


def _identity_rows():
    if not hasattr(_identity_rows, "rows"):
        _identity_rows.rows = ex.identity_grid(SEED)
    return _identity_rows.rows


def criterion_1():
    start = time.perf_counter()
    rows = _identity_rows()
    bad = [r for r in rows if not r["identity_ok"]]
    # the library's own enumeration is cross-checked against modular exponentiation
    brute_bad = [r for r in rows if box_relations(r["elements"], r["M"], r["H"], r["N"]) != r["lhs"]]
    elapsed = time.perf_counter() - start
    ok = not bad and not brute_bad and len(rows) == 756 and elapsed < 120
    return ok, f"{len(rows)} cases, {len(bad)} identity mismatches, {len(brute_bad)} enumeration mismatches, {elapsed:.1f}s"


def criterion_2():
    rows = _identity_rows()
    bad_dec = sum(not r["decomposition_ok"] for r in rows)
    bad_orth = 0
    for r in rows:
        size = len(subgroup([pow(b, r["M"], r["N"]) for b in r["elements"]], r["N"]))
        if Fraction(r["orthogonal"]) != Fraction((2 * r["H"] + 1) ** r["k"], size):
            bad_orth += 1
    return bad_dec == 0 and bad_orth == 0, f"{len(rows)} cases, {bad_dec} decomposition and {bad_orth} main-term mismatches"


def criterion_3():
    bad = []
    for N in range(3, 2001):
        s = unit_group_structure(N)
        d = regev_dimension(N)
        M = m_star(s, d)
        if M > exp_floor(10 * d):
            bad.append((N, "size"))
        K = kernel_size(s, M)
        for h in range(1, 51):
            if Fraction(kernel_size(s, M * h), K) ** 10 > h**d:
                bad.append((N, h))
    return not bad, f"N in [3, 2000], h <= 50: {len(bad)} violations {bad[:5]}"


def criterion_4():
    bad, checked = [], 0
    for N in range(3, 501):
        s = unit_group_structure(N)
        d = regev_dimension(N)
        M = m_star(s, d)
        for h in range(1, 21):
            checked += 1
            if max_root_multiplicity(s, M, h) ** 10 > h**d:
                bad.append((N, h))
    return not bad, f"{checked} (N, h) pairs, {len(bad)} violations {bad[:5]}"


def criterion_5():
    start = time.perf_counter()
    rep = ex.cube_lemma_experiment(SEED, (2, 3, 4), (1, 2, 4, 8), 10_000)
    elapsed = time.perf_counter() - start
    ok = rep.summary["total_violations"] == 0 and elapsed < 60
    worst = max(r["max_count"] / r["bound"] for r in rep.rows)
    return ok, f"12 cases x 10^4 normals, {rep.summary['total_violations']} violations, max count/bound {worst:.3f}, {elapsed:.1f}s"


def criterion_6():
    rng = random.Random(SEED)
    bad = 0
    for _ in range(200):
        N = rng.randint(3, 2000)
        gens = [rng.choice(units(N)) for _ in range(rng.randint(1, 4))]
        M = rng.choice([1, 2, 3, 4, 6, 12])
        lat = relation_lattice(unit_group_structure(N), gens, M)
        if lat.covolume != len(subgroup([pow(g, M, N) for g in gens], N)):
            bad += 1
    return bad == 0, f"200 lattices, {bad} determinant mismatches"


def _factor_moduli(count: int = 20) -> list[int]:
    rng = random.Random(SEED)
    picked: set[int] = set()
    while len(picked) < count:
        N = rng.randrange(9, 10_001, 2)
        if brute_is_prime(N) or perfect_power(N)[1] > 1 and brute_is_prime(perfect_power(N)[0]):
            continue
        picked.add(N)
    return sorted(picked)


def criterion_7():
    start = time.perf_counter()
    moduli = _factor_moduli()
    rep = ex.factor_experiment(moduli, 100, SEED, X=10**4, retries=1)
    elapsed = time.perf_counter() - start
    freqs = {int(k): v["frequency"] for k, v in rep.summary["per_modulus"].items()}
    low = {k: v for k, v in freqs.items() if v < 0.35}
    ok = rep.summary["invalid_witnesses"] == 0 and not low and elapsed < 300
    return ok, (
        f"20 moduli x 100 trials, min frequency {min(freqs.values()):.2f} (N={min(freqs, key=freqs.get)}), "
        f"{rep.summary['invalid_witnesses']} invalid witnesses, {elapsed:.1f}s"
    )


def criterion_8():
    rep = ex.dlog_experiment(100, 20, SEED, max_modulus=10**4, X=10**4, retries=8)
    s = rep.summary
    rate = s["valid_instances"]["frequency"]
    ok = s["wrong_witnesses"] == 0 and rate >= 0.95 and s["invalid_detected"] == s["invalid_instances"] == 20
    return ok, f"success {rate:.2f} on 100 valid, {s['wrong_witnesses']} wrong witnesses, {s['invalid_detected']}/20 invalid detected"


def criterion_9():
    rep = ex.bench_mulexp(SEED, instances=1000)
    ds, ms = (16, 32, 64, 128, 256), (512, 1024, 2048, 4096)
    uncapped = ex.mulexp_cost_table(ds, ms)
    fixed = ex.mulexp_cost_table(ds, ms, modulus_bits=2048)
    ratios = [(r["doubling_ratio"], r["d"], r["m"], label) for label, rows in (("d*m-bit", uncapped), ("2048-bit", fixed))
              for r in rows if r["doubling_ratio"] is not None]
    worst = max(ratios)
    over = [x for x in ratios if x[0] > 2.6]
    tree_ok = all(r["tree_cost"] <= r["fold_cost"] for r in uncapped)
    ok = rep.summary["mismatches"] == 0 and not over and tree_ok
    return ok, (
        f"{rep.summary['mismatches']} mismatches in 1000 instances; max doubling ratio {worst[0]:.4f} "
        f"(d {worst[1] // 2}->{worst[1]}, m={worst[2]}, {worst[3]} modulus), {len(over)} ratios > 2.6; "
        f"tree <= fold for all d >= 16, m >= 512: {tree_ok}"
    )


def _check_cached_primes() -> tuple[int, int]:
    """Base-2 strong probable-prime test on every cached tuple; returns (checked, failed)."""
    import gmpy2

    if not PRIME_CACHE.exists():
        return 0, 0
    data = json.loads(PRIME_CACHE.read_text())
    checked = failed = 0
    for entry in data.values():
        for p in entry["primes"]:
            checked += 1
            failed += not gmpy2.is_strong_prp(int(p), 2)
    return checked, failed


def criterion_10():
    start = time.perf_counter()
    checked, failed = _check_cached_primes()
    rep = ex.short_basis_experiment(200, SEED_SHORT_BASIS, cache_path=str(PRIME_CACHE))
    s = rep.summary
    f = s["short_basis"]
    ok = s["invariant_violations"] == 0 and failed == 0 and s["asymptotic_X"]
    lo, hi = f["wilson95"]
    return ok, (
        f"200 trials (dims {s['by_dim']}), {s['invariant_violations']} invariant violations, "
        f"short-basis frequency {f['frequency']:.3f} [{lo:.3f}, {hi:.3f}], "
        f"max log-norm / 42(d+r) = {s['max_log_norm_over_bound']:.4f}, "
        f"norm bound met {s['mahler_bound_ok']}/{s['mahler_checked']}, "
        f"cached primes re-tested {checked} ({failed} failed), {time.perf_counter() - start:.0f}s"
    )


# the prime cache was filled from this seed; changing it forces fresh sampling at X = d^(1000 d)
SEED_SHORT_BASIS = 1


def criterion_11():
    N = 1081
    safe = is_rsa_safe_modulus(N)
    rep = ex.toy_rsa_experiment(500, SEED, N=N)
    unverified = 0
    for r in rep.rows:
        if r["status"] == "success" and not verify_short_product(N, r["b0"], r["primes"], r["exponents"], r["x"]):
            unverified += 1
    f = rep.summary["representation_found"]
    lo, hi = f["wilson95"]
    ok = safe and unverified == 0 and rep.summary["unverified_witnesses"] == 0
    return ok, f"N=1081 safe: {safe}; {f['successes']}/500 found, frequency {f['frequency']:.3f} [{lo:.3f}, {hi:.3f}], {unverified} unverified"


def criterion_12():
    orth_bad = 0
    for N in range(3, 201):
        for a, v in orthogonality_sums(unit_group_structure(N)).items():
            orth_bad += v != (1 if a == 1 else 0)
    principal_bad = abs_bad = 0
    for N, X in ((15, 1000), (91, 5000), (1081, 10**4), (997, 3000)):
        s = unit_group_structure(N)
        principal_bad += prime_char_average(DirichletCharacter(s, (0,) * len(s.orders)), X, exact=True) != 1
        for chi in characters(s):
            abs_bad += abs(prime_char_average(chi, X)) > 1 + 1e-12
    s1081 = unit_group_structure(1081)
    order_two = sum(char_order(chi) == 2 for chi in characters(s1081))
    ok = orth_bad == 0 and principal_bad == 0 and abs_bad == 0 and order_two == 3
    return ok, (
        f"orthogonality violations for N <= 200: {orth_bad}; principal average != 1: {principal_bad}; "
        f"|average| > 1: {abs_bad}; order-2 characters mod 1081: {order_two}"
    )


CRITERIA = {
    1: ("count-by-characters identity", criterion_1),
    2: ("main-term decomposition", criterion_2),
    3: ("M* properties", criterion_3),
    4: ("root-multiplicity bound", criterion_4),
    5: ("hyperplane cube lemma", criterion_5),
    6: ("lattice determinant = subgroup size", criterion_6),
    7: ("factoring pipeline", criterion_7),
    8: ("discrete-log pipeline", criterion_8),
    9: ("product-tree multi-exponentiation", criterion_9),
    10: ("short-basis experiment", criterion_10),
    11: ("toy short-product search", criterion_11),
    12: ("character-sum diagnostics", criterion_12),
}


def _run(number: int) -> tuple[bool, str]:
    title, fn = CRITERIA[number]
    ok, detail = fn()
    line = record(number, title, ok, detail)
    print(line)
    return ok, line


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[f"C{n:02d}" for n in sorted(CRITERIA)])
def test_acceptance_criterion(number):
    ok, line = _run(number)
    assert ok, line


if __name__ == "__main__":
    results = [_run(n)[0] for n in sorted(CRITERIA)]
    sys.exit(0 if all(results) else 1)
