"""Structure of the unit group (Z/NZ)^x at desk scale.

The group is decomposed through the CRT into cyclic components, one per odd
prime power and at most two for the power of two. Every unit then has an
exponent vector with respect to the component generators; all lattice and
character computations elsewhere work in these coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from functools import lru_cache, reduce

import numpy as np

from .arith import is_probable_prime
from .errors import InputError, ResourceError

__all__ = [
    "CyclicComponent",
    "UnitGroupStructure",
    "DEFAULT_FACTOR_BUDGET",
    "factor_integer",
    "unit_group_structure",
    "dlog_vector",
    "element_order",
    "kernel_size",
    "m_star",
    "regev_dimension",
    "exp_floor",
    "discrete_log_cyclic",
    "coordinate_table",
]

DEFAULT_FACTOR_BUDGET = 10**12


# -- factorisation ---------------------------------------------------------


def _pollard_brent(n: int) -> int:
    """Return a nontrivial factor of the odd composite ``n``."""
    for c in range(1, 200):
        y, r, q, g = 2, 1, 1, 1
        x = ys = 2
        m = 64
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise ArithmeticError(f"Pollard rho failed on {n}")


def factor_integer(n: int, budget: int = DEFAULT_FACTOR_BUDGET) -> list[tuple[int, int]]:
    """Prime factorisation of ``n >= 2`` as ``[(p, e), ...]`` with increasing ``p``.

    Trial division to 1000, then Pollard-Brent on the cofactor.
    """
    if n < 2:
        raise InputError(f"cannot factor {n}")
    if n > budget:
        raise ResourceError(f"{n} exceeds the factoring budget {budget}")
    counts: dict[int, int] = {}
    for p in range(2, 1000):
        if p * p > n:
            break
        while n % p == 0:
            counts[p] = counts.get(p, 0) + 1
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if is_probable_prime(m):
            counts[m] = counts.get(m, 0) + 1
            continue
        f = _pollard_brent(m)
        stack += [f, m // f]
    return sorted(counts.items())


# -- group structure -------------------------------------------------------


@dataclass(frozen=True)
class CyclicComponent:
    """One cyclic factor of the unit group.

    ``generator`` is a residue mod N that is congruent to 1 modulo every other
    prime power of N; ``local_generator`` is its image mod ``prime_power``.
    ``kind`` is ``"odd"`` (odd prime power), ``"sign"`` (the -1 factor at 2)
    or ``"five"`` (the cyclic 5-power factor mod 2^k, k >= 3).
    """

    generator: int
    order: int
    prime: int
    prime_power: int
    local_generator: int
    kind: str


@dataclass(frozen=True)
class UnitGroupStructure:
    modulus: int
    factorization: tuple[tuple[int, int], ...]
    components: tuple[CyclicComponent, ...]
    group_order: int

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(c.order for c in self.components)

    @property
    def generators(self) -> tuple[int, ...]:
        return tuple(c.generator for c in self.components)

    @property
    def exponent(self) -> int:
        """Exponent of the group (lcm of the component orders)."""
        return reduce(math.lcm, self.orders, 1)

    @property
    def bit_length(self) -> int:
        """``n = ceil(log2 N)``."""
        return (self.modulus - 1).bit_length()

    def element(self, coords) -> int:
        """The unit with exponent vector ``coords``."""
        n = self.modulus
        out = 1
        for c, v in zip(self.components, coords):
            out = out * pow(c.generator, int(v) % c.order, n) % n
        return out

    def units(self):
        """Iterate over all units (ascending)."""
        n = self.modulus
        return (a for a in range(1, n) if math.gcd(a, n) == 1)


def _crt_lift(local: int, q: int, n: int) -> int:
    """Residue mod n that is ``local`` mod q and 1 mod n/q."""
    rest = n // q
    # x = 1 + rest * t with 1 + rest * t = local (mod q)
    t = (local - 1) * pow(rest, -1, q) % q if q > 1 else 0
    return (1 + rest * t) % n


def _primitive_root(p: int, q: int) -> int:
    """Generator of (Z/qZ)^x for an odd prime power ``q = p^k``."""
    phi_p = p - 1
    qs = [f for f, _ in factor_integer(phi_p)] if phi_p > 1 else []
    g = 2
    while True:
        if g % p and all(pow(g, phi_p // f, p) != 1 for f in qs):
            break
        g += 1
    if q != p and pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _build_structure(n: int, budget: int) -> UnitGroupStructure:
    fac = tuple(factor_integer(n, budget))
    comps: list[CyclicComponent] = []
    for p, e in fac:
        q = p**e
        if p == 2:
            if e >= 2:
                comps.append(CyclicComponent(_crt_lift(q - 1, q, n), 2, 2, q, q - 1, "sign"))
            if e >= 3:
                comps.append(CyclicComponent(_crt_lift(5, q, n), q // 4, 2, q, 5, "five"))
        else:
            g = _primitive_root(p, q)
            comps.append(CyclicComponent(_crt_lift(g, q, n), q // p * (p - 1), p, q, g, "odd"))
    phi = math.prod((p - 1) * p ** (e - 1) for p, e in fac)
    return UnitGroupStructure(n, fac, tuple(comps), phi)


@lru_cache(maxsize=4096)
def _cached_structure(n: int, budget: int) -> UnitGroupStructure:
    return _build_structure(n, budget)


def unit_group_structure(n: int, budget: int = DEFAULT_FACTOR_BUDGET) -> UnitGroupStructure:
    """CRT/cyclic decomposition of (Z/nZ)^x for ``n >= 3``."""
    if n < 3:
        raise InputError(f"modulus must be >= 3, got {n}")
    return _cached_structure(n, budget)


# -- discrete logarithms ---------------------------------------------------


def _bsgs(g: int, h: int, order: int, mod: int) -> int:
    """Solve ``g^x = h (mod mod)`` with ``0 <= x < order`` where ``g`` has order ``order``."""
    m = math.isqrt(order - 1) + 1 if order > 1 else 1
    table = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = cur * g % mod
    step = pow(g, -m, mod)
    cur = h % mod
    for i in range(m + 1):
        j = table.get(cur)
        if j is not None:
            return (i * m + j) % order
        cur = cur * step % mod
    raise ArithmeticError("element not in the cyclic subgroup")


_TABLE_LIMIT = 1 << 14


@lru_cache(maxsize=1024)
def _log_table(g: int, order: int, mod: int) -> dict[int, int]:
    table = {}
    cur = 1
    for x in range(order):
        table[cur] = x
        cur = cur * g % mod
    return table


def discrete_log_cyclic(
    g: int, h: int, order: int, order_factors: list[tuple[int, int]], mod: int
) -> int:
    """Pohlig-Hellman in the cyclic group generated by ``g`` (mod ``mod``).

    Small groups are answered from a cached table of all powers of ``g``.
    """
    if order <= _TABLE_LIMIT:
        try:
            return _log_table(g, order, mod)[h % mod]
        except KeyError:
            raise ArithmeticError("element not in the cyclic subgroup") from None
    residues, moduli = [], []
    for p, e in order_factors:
        pe = p**e
        cofactor = order // pe
        gi = pow(g, cofactor, mod)  # order p^e
        hi = pow(h, cofactor, mod)
        gamma = pow(gi, p ** (e - 1), mod)  # order p
        x = 0
        for k in range(e):
            hk = pow(pow(gi, -x, mod) * hi % mod, p ** (e - 1 - k), mod)
            x += _bsgs(gamma, hk, p, mod) * p**k
        residues.append(x)
        moduli.append(pe)
    x, m = 0, 1
    for r, pe in zip(residues, moduli):
        # combine x (mod m) with r (mod pe)
        t = (r - x) * pow(m, -1, pe) % pe
        x += m * t
        m *= pe
    return x % order


@lru_cache(maxsize=4096)
def _order_factors(order: int) -> tuple[tuple[int, int], ...]:
    return tuple(factor_integer(order)) if order > 1 else ()


def dlog_vector(structure: UnitGroupStructure, a: int) -> tuple[int, ...]:
    """Exponent vector of the unit ``a``: ``prod gen_i^{v_i} = a (mod N)``."""
    n = structure.modulus
    a %= n
    if math.gcd(a, n) != 1:
        raise InputError(f"{a} is not a unit modulo {n}")
    coords = []
    sign_bit = {}
    for c in structure.components:
        q = c.prime_power
        local = a % q
        if c.kind == "sign":
            bit = 0 if local % 4 == 1 else 1
            sign_bit[q] = bit
            coords.append(bit)
        elif c.kind == "five":
            if sign_bit.get(q):
                local = (-local) % q
            coords.append(discrete_log_cyclic(5, local, c.order, list(_order_factors(c.order)), q))
        else:
            coords.append(
                discrete_log_cyclic(
                    c.local_generator, local, c.order, list(_order_factors(c.order)), q
                )
            )
    return tuple(coords)


@lru_cache(maxsize=64)
def _coordinate_table(structure: UnitGroupStructure) -> np.ndarray:
    n = structure.modulus
    residues = np.ones(1, dtype=np.int64)
    coords = np.zeros((1, 0), dtype=np.int64)
    for c in structure.components:
        powers = np.array([pow(c.generator, v, n) for v in range(c.order)], dtype=np.int64)
        residues = (residues[:, None] * powers[None, :] % n).reshape(-1)
        coords = np.concatenate(
            [
                np.repeat(coords, c.order, axis=0),
                np.tile(np.arange(c.order, dtype=np.int64), len(coords))[:, None],
            ],
            axis=1,
        )
    table = np.full((n, len(structure.components)), -1, dtype=np.int64)
    table[residues] = coords
    table.setflags(write=False)
    return table


def coordinate_table(structure: UnitGroupStructure, budget: int = 2_000_000) -> np.ndarray:
    """Exponent vectors of every residue mod N as an ``(N, components)`` array.

    Rows of non-units are filled with ``-1``. Built by enumerating the group
    once, so it is only available while ``N <= budget``.
    """
    if structure.modulus > budget:
        raise ResourceError(f"coordinate table for N={structure.modulus} exceeds budget {budget}")
    return _coordinate_table(structure)


def element_order(structure: UnitGroupStructure, a: int) -> int:
    """Multiplicative order of the unit ``a`` modulo N."""
    v = dlog_vector(structure, a)
    return reduce(math.lcm, (o // math.gcd(o, x) for o, x in zip(structure.orders, v)), 1)


def kernel_size(structure: UnitGroupStructure, h: int) -> int:
    """K(h): the number of units x with x^h = 1."""
    if h < 1:
        raise InputError("h must be positive")
    return math.prod(math.gcd(h, o) for o in structure.orders)


def _p_adic_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def m_star(structure: UnitGroupStructure, d: int) -> int:
    """Subgroup exponent M* = prod p^{m_p}.

    ``m_p`` is the largest ``m >= 0`` with ``K(p^m) >= p^{d m / 10}``. Since
    ``K(p^m)`` is a power of p, say ``p^a``, the test is the exact integer
    comparison ``10 a >= d m`` (ties count as satisfied).
    """
    if d < 1:
        raise InputError("d must be positive")
    phi = structure.group_order
    if phi == 1:
        return 1
    bound = -(-10 * (phi.bit_length()) // d)
    result = 1
    for p, _ in factor_integer(phi):
        best = 0
        for m in range(1, bound + 1):
            a = _p_adic_valuation(kernel_size(structure, p**m), p)
            if 10 * a >= d * m:
                best = m
        result *= p**best
    return result


# -- parameters ------------------------------------------------------------


def exp_floor(x: int) -> int:
    """``floor(e**x)`` for an integer ``x >= 0``, computed with enough precision to be exact."""
    with localcontext() as ctx:
        ctx.prec = int(x * 0.45) + 40
        return int(Decimal(x).exp().to_integral_value(rounding="ROUND_FLOOR"))


def regev_dimension(n: int) -> int:
    """``d = ceil(sqrt(log N))`` (natural log), i.e. the least d with ``e^{d^2} >= N``."""
    if n < 2:
        raise InputError("N must be >= 2")
    d = max(1, math.ceil(math.sqrt(math.log(n))))
    # e^{d^2} is irrational, so e^{d^2} >= N  <=>  floor(e^{d^2}) >= N
    while d > 1 and exp_floor((d - 1) ** 2) >= n:
        d -= 1
    while exp_floor(d * d) < n:
        d += 1
    return d

