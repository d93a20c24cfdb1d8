import math
from collections import Counter
from fractions import Fraction

import pytest

from oracles import brute_factor, brute_kernel, brute_order, phi, units
from regevkit.errors import InputError, ResourceError
from regevkit.group import (
    coordinate_table,
    dlog_vector,
    element_order,
    exp_floor,
    factor_integer,
    kernel_size,
    m_star,
    regev_dimension,
    unit_group_structure,
)


@pytest.mark.parametrize(
    "n, expected", [(15, [(3, 1), (5, 1)]), (1024, [(2, 10)]), (1081, [(23, 1), (47, 1)])]
)
def test_factor_examples(n, expected):
    assert factor_integer(n) == expected


def test_factor_matches_trial_division_and_large_semiprimes():
    for n in range(2, 3000):
        assert factor_integer(n) == brute_factor(n)
    p, q = 999_983, 1_000_003
    assert factor_integer(p * q) == [(p, 1), (q, 1)]
    assert factor_integer(2**39) == [(2, 39)]
    with pytest.raises(ResourceError):
        factor_integer(10**13, budget=10**12)
    with pytest.raises(InputError):
        factor_integer(1)


def test_structure_examples():
    s15 = unit_group_structure(15)
    assert sorted(s15.orders) == [2, 4] and s15.group_order == 8
    assert unit_group_structure(7).orders == (6,)
    s1081 = unit_group_structure(1081)
    assert sorted(s1081.orders) == [22, 46] and s1081.group_order == 1012
    assert unit_group_structure(4).orders == (2,)
    assert sorted(unit_group_structure(32).orders) == [2, 8]
    with pytest.raises(InputError):
        unit_group_structure(2)


@pytest.mark.parametrize("n", list(range(3, 400)))
def test_structure_invariants(n):
    s = unit_group_structure(n)
    assert math.prod(s.orders) == phi(n) == s.group_order
    for c in s.components:
        assert brute_order(c.generator, n) == c.order
    # coordinates are a bijection onto the units
    table = coordinate_table(s)
    images = {s.element(table[a]) for a in units(n)}
    assert images == set(units(n))


def test_dlog_examples():
    s7 = unit_group_structure(7)
    assert dlog_vector(s7, 1) == (0,)
    g = s7.generators[0]
    assert dlog_vector(s7, g) == (1,)
    s15 = unit_group_structure(15)
    assert s15.element(dlog_vector(s15, 2)) == 2
    with pytest.raises(InputError):
        dlog_vector(s15, 5)


def test_dlog_round_trip_all_moduli_up_to_2000():
    for n in range(3, 2001):
        s = unit_group_structure(n)
        for a in units(n):
            v = dlog_vector(s, a)
            assert all(0 <= x < o for x, o in zip(v, s.orders))
            assert s.element(v) == a


def test_dlog_large_components_use_pohlig_hellman():
    p = 1_000_003  # order 2 * 3 * 166667, beyond the table limit
    s = unit_group_structure(p)
    for a in (2, 12345, p - 1, 999_999):
        assert s.element(dlog_vector(s, a)) == a
    s2 = unit_group_structure(2**20)
    for a in (3, 5, 2**20 - 1, 12345):
        assert s2.element(dlog_vector(s2, a)) == a


def test_element_order_examples():
    s15 = unit_group_structure(15)
    assert element_order(s15, 2) == 4
    assert element_order(s15, 1) == 1
    assert element_order(s15, 14) == 2


def test_order_multiset_matches_brute_force():
    for n in range(3, 2001, 3):
        s = unit_group_structure(n)
        fast = Counter(element_order(s, a) for a in units(n))
        slow = Counter(brute_order(a, n) for a in units(n))
        assert fast == slow, n


def test_kernel_size_examples():
    s15 = unit_group_structure(15)
    assert kernel_size(s15, 2) == 4
    assert kernel_size(s15, 1) == 1
    assert kernel_size(s15, 4) == 8


def test_kernel_size_matches_brute_force():
    for n in range(3, 501):
        s = unit_group_structure(n)
        for h in range(1, 25):
            assert kernel_size(s, h) == brute_kernel(n, h)


def _m_star_oracle(n: int, d: int) -> int:
    """Largest m per prime with K(p^m)^10 >= p^(d m), scanning m up to a generous cap."""
    s = unit_group_structure(n)
    result = 1
    for p, _ in factor_integer(s.group_order) if s.group_order > 1 else []:
        best = 0
        for m in range(1, 200):
            if brute_kernel(n, p**m) ** 10 >= p ** (d * m):
                best = m
        result *= p**best
    return result


def test_m_star_examples():
    s15 = unit_group_structure(15)
    assert m_star(s15, 2) == 32768
    assert m_star(s15, 2) <= exp_floor(20)
    for n in (21, 35, 45, 91, 105):
        for d in (1, 2, 3, 5):
            assert m_star(unit_group_structure(n), d) == _m_star_oracle(n, d)


def test_m_star_tie_counts_as_satisfied():
    # N = 3: K(2^m) = 2 for every m >= 1, so d = 10 ties exactly at m = 1
    assert m_star(unit_group_structure(3), 10) == 2
    assert m_star(unit_group_structure(3), 11) == 1


def test_exp_floor_and_dimension():
    assert exp_floor(0) == 1
    assert exp_floor(1) == 2
    assert exp_floor(20) == 485165195
    assert exp_floor(4) == 54
    assert regev_dimension(15) == 2
    assert regev_dimension(1000) == 3
    assert regev_dimension(8103) == 3
    assert regev_dimension(8104) == 4
    assert regev_dimension(10**6) == 4
    for n in (3, 9, 55, 100, 9000, 10**7):
        d = regev_dimension(n)
        assert d - 1 < math.sqrt(math.log(n)) <= d


def test_lemma_conclusions_for_small_moduli():
    for n in range(3, 300):
        s = unit_group_structure(n)
        d = regev_dimension(n)
        M = m_star(s, d)
        assert M <= exp_floor(10 * d)
        KM = kernel_size(s, M)
        for h in range(1, 51):
            ratio = Fraction(kernel_size(s, M * h), KM)
            assert ratio**10 <= h**d
