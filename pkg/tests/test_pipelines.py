import random

import pytest

from oracles import brute_order, units
from regevkit.group import unit_group_structure
from regevkit.lattice import relation_lattice
from regevkit.pipelines import (
    Status,
    count_representations,
    derive_params,
    dlog,
    dlog_from_lattice,
    factor,
    find_order,
    is_rsa_safe_modulus,
    order_from_lattice,
    shor_split,
    toy_short_product,
)
from regevkit.errors import InputError
from regevkit.sampler import SeededStream

SCALED_X = 10**4


def test_derive_params_defaults_and_overrides():
    p = derive_params(15)
    assert (p.n, p.d, p.X) == (4, 2, 2**2000)
    assert not p.scaled
    q = derive_params(15, X=100, d=None)
    assert q.X == 100 and q.d == 2 and q.scaled
    assert q.describe()["overrides"] == {"X": 100}
    assert p.describe()["X"] == "<2001-bit>"
    with pytest.raises(InputError):
        derive_params(15, bogus=1)
    with pytest.raises(InputError):
        derive_params(2)


@pytest.mark.parametrize("N, x, expected", [(15, 2, 4), (15, 1, 1), (15, 14, 2), (7, 3, 6)])
def test_order_examples(N, x, expected):
    out = find_order(N, x, derive_params(N, X=SCALED_X), SeededStream(1))
    assert out.status is Status.SUCCESS and out.witness == expected


def test_order_from_lattice_matches_brute_force():
    rng = random.Random(20)
    for N in range(3, 600, 5):
        s = unit_group_structure(N)
        for x in rng.sample(units(N), min(5, len(units(N)))):
            primes = [p for p in (2, 3, 5, 7, 11, 13) if N % p][:2] or [1]
            lat = relation_lattice(s, [*primes, x])
            assert order_from_lattice(lat) == brute_order(x, N)


def test_order_rejects_non_units():
    assert find_order(15, 5).status is Status.INVALID


@pytest.mark.parametrize("N, x, r, expected", [(15, 2, 4, 3), (15, 14, 2, None), (21, 2, 6, 7)])
def test_shor_split_examples(N, x, r, expected):
    assert shor_split(N, x, r) == expected


def test_shor_split_rejects_wrong_order():
    with pytest.raises(InputError):
        shor_split(15, 2, 3)


def test_factor_invalid_inputs():
    assert factor(9).status is Status.INVALID
    assert factor(9).diagnostics["root"] == 3
    assert factor(13).status is Status.INVALID
    assert factor(16).status is Status.INVALID
    assert factor(2).status is Status.INVALID


def test_factor_succeeds_on_small_composites():
    for N in (15, 21, 33, 35, 105, 1081, 3 * 3 * 5):
        out = factor(N, derive_params(N, X=SCALED_X), SeededStream(11))
        assert out.status is Status.SUCCESS, N
        assert 1 < out.witness < N and N % out.witness == 0


def test_factor_is_deterministic_for_a_seed():
    a = factor(1081, derive_params(1081, X=SCALED_X), SeededStream(5))
    b = factor(1081, derive_params(1081, X=SCALED_X), SeededStream(5))
    assert (a.status, a.witness, a.diagnostics) == (b.status, b.witness, b.diagnostics)


def test_dlog_examples():
    out = dlog(7, 3, 6, derive_params(7, X=SCALED_X), SeededStream(1))
    assert out.status is Status.SUCCESS and out.witness == 3
    assert dlog(15, 2, 7, derive_params(15, X=SCALED_X), SeededStream(1)).status is Status.INVALID
    assert dlog(15, 5, 7).status is Status.INVALID


def test_dlog_against_brute_force():
    rng = random.Random(21)
    for _ in range(60):
        N = rng.randint(3, 3000)
        g = rng.choice(units(N))
        y = rng.choice(units(N))
        powers = {pow(g, e, N): e for e in reversed(range(brute_order(g, N)))}
        out = dlog(N, g, y, derive_params(N, X=SCALED_X), SeededStream(2, (N,)))
        if y in powers:
            assert out.status is Status.SUCCESS and out.witness == powers[y]
        else:
            assert out.status is Status.INVALID


def test_dlog_from_lattice_without_solution():
    s = unit_group_structure(15)
    x, r = dlog_from_lattice(relation_lattice(s, [7, 2, 7]))
    assert x is None and r == 4
    x, r = dlog_from_lattice(relation_lattice(s, [7, 2, 8]))
    assert x == 3 and r == 4


def test_retryable_when_primes_cannot_be_found():
    # every prime <= 5 divides 30, so no draw can qualify
    starved = derive_params(30, X=5)
    out = find_order(30, 7, starved, SeededStream(0), retries=3)
    assert out.status is Status.RETRYABLE and out.diagnostics["attempts"] == 3


def test_rsa_safe_modulus():
    assert is_rsa_safe_modulus(1081)  # 23 * 47, 11 and 23 prime
    assert not is_rsa_safe_modulus(15)  # (3-1)/2 = 1 is not prime
    assert not is_rsa_safe_modulus(23 * 23)


def test_count_representations_agree():
    s = unit_group_structure(1081)
    for target in (1, 2, 100, 1080):
        enum, chars = count_representations(s, target, [2, 3, 5], 12)
        assert abs(enum - chars) < 1e-6


def test_toy_short_product():
    params = derive_params(1081, X=50, d=2)
    outcomes = [toy_short_product(1081, 2, params, SeededStream(4, (t,)), H=46) for t in range(20)]
    for out in outcomes:
        assert out.diagnostics["character_residual"] < 1e-6
        if out.ok:
            b0, primes = out.diagnostics["b0"], out.diagnostics["primes"]
            acc = b0
            for p, h in zip(primes, out.witness):
                assert 0 <= h < 46
                acc = acc * pow(p, h, 1081) % 1081
            assert acc == 2
        else:
            assert out.diagnostics["representations"] == 0
    assert any(o.ok for o in outcomes)
    assert toy_short_product(15, 2, params, SeededStream(0), H=4).status is Status.INVALID
