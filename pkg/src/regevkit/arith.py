"""Modular arithmetic kernels, primality, and product-tree multi-exponentiation.

The product tree follows the classical schedule used to evaluate
``prod a_i^{t_i} mod N`` with selector bits ``t_i``: leaves are combined
pairwise in a balanced binary tree so that the bulk of the multiplications
involve short operands. A :class:`MulExpPlan` carries the schedule together
with a multiplication cost model ``M(x) = x * log2(x + 2)`` charged once per
multiplication of combined operand length ``x`` bits.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import numpy as np

from .errors import InputError, ResourceError

__all__ = [
    "MulExpPlan",
    "mod_pow",
    "plan_mulexp",
    "naive_fold_cost",
    "mulexp_product_tree",
    "mulexp_naive_fold",
    "multiplication_cost",
    "is_probable_prime",
    "primes_up_to",
    "integer_root",
    "perfect_power",
]


def mod_pow(base: int, exponent: int, modulus: int) -> int:
    """Return ``base**exponent mod modulus`` by square-and-multiply."""
    if modulus < 2:
        raise InputError(f"modulus must be >= 2, got {modulus}")
    if exponent < 0:
        raise InputError("exponent must be nonnegative")
    return int(gmpy2.powmod(base, exponent, modulus))


def multiplication_cost(bits: int) -> int:
    """Cost units charged for one multiplication of combined length ``bits``."""
    return math.ceil(bits * math.log2(bits + 2))


@dataclass(frozen=True)
class MulExpPlan:
    """Balanced binary-tree schedule for a selector multi-exponentiation.

    ``levels[0]`` holds the leaf bit bounds; ``levels[j]`` holds the operand
    bound of every multiply node at height ``j``. A node's bound is the sum of
    its children's bounds, capped at ``modulus_bits`` once the product has to
    be reduced.
    """

    leaf_count: int
    leaf_bit_bound: int
    modulus_bits: int
    levels: tuple[tuple[int, ...], ...]
    cost_units: int

    @property
    def internal_nodes(self) -> int:
        return sum(len(level) for level in self.levels[1:])

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def _pad_power_of_two(d: int) -> int:
    return 1 << (d - 1).bit_length()


def plan_mulexp(d: int, m: int, modulus_bits: int) -> MulExpPlan:
    """Build the product-tree plan for ``d`` bases of at most ``m`` bits.

    ``d`` is padded to the next power of two with identity leaves (1 bit).
    """
    if d < 1 or m < 1 or modulus_bits < 1:
        raise InputError("d, m and modulus_bits must be positive")
    leaves = _pad_power_of_two(d)
    level = tuple([m] * d + [1] * (leaves - d))
    levels = [level]
    cost = 0
    while len(level) > 1:
        nxt = []
        for left, right in zip(level[0::2], level[1::2]):
            combined = left + right
            cost += multiplication_cost(combined)
            nxt.append(min(combined, modulus_bits))
        level = tuple(nxt)
        levels.append(level)
    return MulExpPlan(leaves, m, modulus_bits, tuple(levels), cost)


def naive_fold_cost(d: int, m: int, modulus_bits: int) -> int:
    """Cost units of the left-fold schedule ``((a1*a2)*a3)*...`` under the same model."""
    if d < 1 or m < 1 or modulus_bits < 1:
        raise InputError("d, m and modulus_bits must be positive")
    acc = m
    cost = 0
    for _ in range(d - 1):
        combined = acc + m
        cost += multiplication_cost(combined)
        acc = min(combined, modulus_bits)
    return cost


def _check_mulexp_args(bases, selectors, modulus):
    if len(bases) != len(selectors):
        raise InputError(
            f"bases and selectors differ in length ({len(bases)} != {len(selectors)})"
        )
    if not bases:
        raise InputError("at least one base is required")
    if modulus < 2:
        raise InputError(f"modulus must be >= 2, got {modulus}")
    for a in bases:
        if not 0 <= a < modulus:
            raise InputError(f"base {a} not reduced modulo {modulus}")
    for t in selectors:
        if t not in (0, 1):
            raise InputError(f"selectors must be bits, got {t}")


def mulexp_product_tree(
    bases: list[int], selectors: list[int], modulus: int
) -> tuple[int, int]:
    """Compute ``prod bases[i]**selectors[i] mod modulus`` with a product tree.

    Returns ``(residue, cost_units)`` where the cost comes from the plan for
    ``d = len(bases)`` and ``m = max bit length of the bases``. Intermediate
    products are reduced only when they outgrow the modulus bit length.
    """
    _check_mulexp_args(bases, selectors, modulus)
    n_bits = modulus.bit_length()
    m = max(1, max(a.bit_length() for a in bases))
    plan = plan_mulexp(len(bases), m, n_bits)

    level = [gmpy2.mpz(a) if t else gmpy2.mpz(1) for a, t in zip(bases, selectors)]
    level += [gmpy2.mpz(1)] * (plan.leaf_count - len(level))
    while len(level) > 1:
        nxt = []
        for left, right in zip(level[0::2], level[1::2]):
            prod = left * right
            if prod.bit_length() > n_bits:
                prod %= modulus
            nxt.append(prod)
        level = nxt
    return int(level[0] % modulus), plan.cost_units


def mulexp_naive_fold(
    bases: list[int], selectors: list[int], modulus: int
) -> tuple[int, int]:
    """Left-fold evaluation of the same product, with its cost under the same model."""
    _check_mulexp_args(bases, selectors, modulus)
    m = max(1, max(a.bit_length() for a in bases))
    acc = 1
    for a, t in zip(bases, selectors):
        if t:
            acc = acc * a % modulus
    return acc, naive_fold_cost(len(bases), m, modulus.bit_length())


# -- primality -------------------------------------------------------------

_SMALL_PRIMES = tuple(p for p in range(2, 1000) if all(p % q for q in range(2, math.isqrt(p) + 1)))

# Jaeschke/Sorenson-Webster: the first 13 prime bases are deterministic below this bound.
_DETERMINISTIC_BOUND = 3_317_044_064_679_887_385_961_981
_DETERMINISTIC_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


@lru_cache(maxsize=1)
def _primorial() -> gmpy2.mpz:
    return gmpy2.mpz(math.prod(int(p) for p in primes_up_to(1 << 17)))


def _strong_probable_prime(n: int, base: int, d: int, s: int) -> bool:
    x = gmpy2.powmod(base, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = gmpy2.powmod(x, 2, n)
        if x == n - 1:
            return True
        if x == 1:
            return False
    return False


def is_probable_prime(n: int, rounds: int = 64, rng: random.Random | None = None) -> bool:
    """Miller-Rabin primality test.

    Primes always pass. Below 3.3e24 a fixed witness set makes the answer
    exact; above it a composite survives with probability at most
    ``4**-rounds``. Random bases are drawn from ``rng`` (default: a generator
    seeded by ``n`` so repeated calls agree).
    """
    if rounds < 1:
        raise InputError("rounds must be positive")
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    if n < 1_000_000:
        return True
    if n.bit_length() > 18 and gmpy2.gcd(n, _primorial()) != 1:
        return False

    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    if n < _DETERMINISTIC_BOUND:
        return all(_strong_probable_prime(n, a, d, s) for a in _DETERMINISTIC_BASES)

    if not _strong_probable_prime(n, 2, d, s):
        return False
    rng = rng if rng is not None else random.Random(n)
    for _ in range(rounds - 1):
        if not _strong_probable_prime(n, rng.randrange(3, n - 1), d, s):
            return False
    return True


def primes_up_to(x: int, budget: int = 10**8, segment: int = 1 << 20) -> np.ndarray:
    """All primes ``<= x`` as an int64 array, by a segmented sieve."""
    if x > budget:
        raise ResourceError(f"sieve bound {x} exceeds budget {budget}")
    if x < 2:
        return np.zeros(0, dtype=np.int64)
    root = math.isqrt(x)
    base = np.ones(root + 1, dtype=bool)
    base[:2] = False
    for p in range(2, math.isqrt(root) + 1):
        if base[p]:
            base[p * p :: p] = False
    base_primes = np.flatnonzero(base)

    chunks = [base_primes]
    lo = root + 1
    while lo <= x:
        hi = min(lo + segment, x + 1)
        seg = np.ones(hi - lo, dtype=bool)
        for p in base_primes:
            p = int(p)
            start = max(p * p, -(-lo // p) * p)
            if start >= hi:
                continue
            seg[start - lo :: p] = False
        chunks.append(np.flatnonzero(seg) + lo)
        lo = hi
    return np.concatenate(chunks).astype(np.int64)


def integer_root(n: int, k: int) -> int:
    """Floor of the real ``k``-th root of ``n >= 0``."""
    if n < 0 or k < 1:
        raise InputError("integer_root needs n >= 0 and k >= 1")
    return int(gmpy2.iroot(n, k)[0])


def perfect_power(n: int) -> tuple[int, int]:
    """Write ``n = base**exp`` with ``exp`` as large as possible (``exp = 1`` if not a power)."""
    if n < 2:
        raise InputError("perfect_power needs n >= 2")
    for k in range(n.bit_length(), 1, -1):
        r = integer_root(n, k)
        if r > 1 and r**k == n:
            return r, k
    return n, 1
