"""Factoring, discrete logarithms and order finding via relation lattices.

The quantum step of the lattice-based algorithms (recovering a basis of the
relation lattice of sampled small primes and the target elements) is
replaced by exact classical recovery from the group structure. Everything
downstream of that step is the classical post-processing: LLL, reading the
order or logarithm off a Hermite normal form, and the gcd split.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .arith import is_probable_prime, mulexp_product_tree, perfect_power
from .errors import InputError
from .group import (
    DEFAULT_FACTOR_BUDGET,
    UnitGroupStructure,
    coordinate_table,
    factor_integer,
    regev_dimension,
    unit_group_structure,
)
from .lattice import RelationLattice, hnf_basis, lll_reduce, relation_lattice
from .sampler import SeededStream, default_k_draws, sample_primes, sample_unit

__all__ = [
    "Status",
    "RegevParams",
    "PipelineOutcome",
    "derive_params",
    "order_from_lattice",
    "dlog_from_lattice",
    "shor_split",
    "factor",
    "dlog",
    "find_order",
    "is_rsa_safe_modulus",
    "count_representations",
    "toy_short_product",
    "verify_short_product",
    "DEFAULT_RETRIES",
]

DEFAULT_RETRIES = 8


class Status(str, enum.Enum):
    SUCCESS = "success"
    RETRYABLE = "retryable-failure"
    INVALID = "invalid-input"


@dataclass(frozen=True)
class RegevParams:
    N: int
    n: int
    d: int
    X: int
    H_cap: int | None = None
    k_draws: int | None = None
    overrides: dict = field(default_factory=dict)

    @property
    def scaled(self) -> bool:
        return bool(self.overrides)

    def describe(self) -> dict:
        """JSON-friendly summary; a huge ``X`` is shown by its bit length."""
        x = self.X if self.X.bit_length() <= 64 else f"<{self.X.bit_length()}-bit>"
        return {
            "N": self.N,
            "n": self.n,
            "d": self.d,
            "X": x,
            "H_cap": self.H_cap,
            "k_draws": self.k_draws or default_k_draws(self.d),
            "scaled": self.scaled,
            "overrides": {
                k: v if v.bit_length() <= 64 else f"<{v.bit_length()}-bit>"
                for k, v in self.overrides.items()
            },
        }


def derive_params(N: int, **overrides) -> RegevParams:
    """Parameters ``n = ceil(log2 N)``, ``d = ceil(sqrt(ln N))``, ``X = d^(1000 d)``.

    Keyword overrides (``d``, ``X``, ``H_cap``, ``k_draws``) replace the
    defaults and are recorded; any override marks the parameters as scaled.
    """
    if N < 3:
        raise InputError("N must be >= 3")
    unknown = set(overrides) - {"d", "X", "H_cap", "k_draws"}
    if unknown:
        raise InputError(f"unknown parameter overrides: {sorted(unknown)}")
    given = {k: v for k, v in overrides.items() if v is not None}
    d = given.get("d", regev_dimension(N))
    X = given.get("X", d ** (1000 * d))
    if d < 1 or X < 2:
        raise InputError("need d >= 1 and X >= 2")
    return RegevParams(
        N, (N - 1).bit_length(), d, X, given.get("H_cap"), given.get("k_draws"), given
    )


@dataclass(frozen=True)
class PipelineOutcome:
    status: Status
    witness: Any = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.SUCCESS


# -- reading answers off a lattice -----------------------------------------


def _permuted_hnf(lattice: RelationLattice, front: list[int]) -> list[list[int]]:
    k = lattice.ambient_dim
    order = front + [i for i in range(k) if i not in front]
    rows = [[row[i] for i in order] for row in lattice.basis]
    return hnf_basis(rows)


def order_from_lattice(lattice: RelationLattice) -> int:
    """Least ``r >= 1`` with ``(0, .., 0, r)`` in the lattice.

    With the last coordinate moved to the front, the lower Hermite form has
    first row ``(r, 0, .., 0)``, and that ``r`` is the answer.
    """
    if lattice.power != 1:
        raise InputError("order extraction needs the lattice with M = 1")
    h = _permuted_hnf(lattice, [lattice.ambient_dim - 1])
    r = h[0][0]
    if r < 1:
        raise ArithmeticError("degenerate relation lattice")
    return r


def dlog_from_lattice(lattice: RelationLattice) -> tuple[int | None, int]:
    """Logarithm of ``y`` to base ``g`` from the lattice of ``(b_1..b_d, g, y)``.

    Returns ``(x, ord(g))`` with ``0 <= x < ord(g)`` and ``g^x = y``, or
    ``(None, ord(g))`` when ``y`` is not a power of ``g``. The vectors
    supported on the ``(g, y)`` coordinates form a rank-2 lattice with Hermite
    basis ``(r, 0), (c, s)``; a vector ``(f, 1)`` exists iff ``s = 1``, and it
    encodes ``g^f y = 1``.
    """
    k = lattice.ambient_dim
    if lattice.power != 1 or k < 2:
        raise InputError("need the M = 1 lattice of (b.., g, y)")
    h = _permuted_hnf(lattice, [k - 2, k - 1])
    r, c, s = h[0][0], h[1][0], h[1][1]
    if s != 1:
        return None, r
    return (-c) % r, r


def shor_split(N: int, x: int, r: int) -> int | None:
    """``gcd(N, x^(r/2) - 1)`` when it is a proper divisor, else ``None``."""
    if r < 1 or pow(x, r, N) != 1:
        raise InputError(f"{x}^{r} is not 1 modulo {N}")
    if r % 2:
        return None
    y = pow(x, r // 2, N)
    if y in (1, N - 1):
        return None
    g = math.gcd(N, y - 1)
    return g if 1 < g < N else None


# -- pipelines ---------------------------------------------------------------


def _max_norm(basis) -> float:
    return math.sqrt(max(sum(v * v for v in row) for row in basis))


def _sample_small_primes(N: int, params: RegevParams, stream: SeededStream):
    return sample_primes(N, params.d, params.X, stream.rng(), params.k_draws)


def _reduced_lattice(structure, gens) -> tuple[RelationLattice, list[list[int]]]:
    lat = relation_lattice(structure, gens)
    reduced = lll_reduce([list(r) for r in lat.basis])
    return lat.with_basis(reduced), reduced


def _structure(N: int, budget: int) -> UnitGroupStructure:
    return unit_group_structure(N, budget)


def factor(
    N: int,
    params: RegevParams | None = None,
    stream: SeededStream | None = None,
    retries: int = DEFAULT_RETRIES,
    budget: int = DEFAULT_FACTOR_BUDGET,
) -> PipelineOutcome:
    """Find a nontrivial divisor of an odd composite ``N`` that is not a prime power.

    Attempt ``j`` uses ``stream.child(j)``: sample ``d`` small primes and a
    unit ``x``, build and reduce the relation lattice of ``(b, x)``, read the
    order of ``x`` off it and try the gcd split.
    """
    stream = stream or SeededStream(0)
    if N < 3:
        return PipelineOutcome(Status.INVALID, None, {"reason": "N < 3"})
    if N % 2 == 0:
        return PipelineOutcome(Status.INVALID, None, {"reason": "even modulus", "divisor": 2})
    if is_probable_prime(N):
        return PipelineOutcome(Status.INVALID, None, {"reason": "prime modulus"})
    base, exp = perfect_power(N)
    if exp > 1 and is_probable_prime(base):
        return PipelineOutcome(
            Status.INVALID, None, {"reason": "prime power", "root": base, "exponent": exp}
        )
    params = params or derive_params(N)
    structure = _structure(N, budget)
    attempts = []
    for j in range(retries):
        sub = stream.child(j)
        primes = _sample_small_primes(N, params, sub.child(0))
        if primes is None:
            attempts.append({"stage": "primes"})
            continue
        x = sample_unit(N, sub.child(1).rng())
        lat, reduced = _reduced_lattice(structure, [*primes, x])
        r = order_from_lattice(lat)
        divisor = shor_split(N, x, r)
        info = {"x": x, "order": r, "max_norm": _max_norm(reduced)}
        attempts.append(info)
        if divisor is not None:
            return PipelineOutcome(
                Status.SUCCESS, divisor, {"attempts": len(attempts), "last": info, "stream": sub.label()}
            )
    return PipelineOutcome(Status.RETRYABLE, None, {"attempts": len(attempts), "log": attempts})


def dlog(
    N: int,
    g: int,
    y: int,
    params: RegevParams | None = None,
    stream: SeededStream | None = None,
    retries: int = DEFAULT_RETRIES,
    budget: int = DEFAULT_FACTOR_BUDGET,
) -> PipelineOutcome:
    """Smallest ``x >= 0`` with ``g^x = y (mod N)`` from the lattice of ``(b_1..b_d, g, y)``."""
    stream = stream or SeededStream(0)
    if N < 3:
        return PipelineOutcome(Status.INVALID, None, {"reason": "N < 3"})
    g, y = g % N, y % N
    for name, v in (("base", g), ("target", y)):
        if math.gcd(v, N) != 1:
            return PipelineOutcome(Status.INVALID, None, {"reason": f"{name} is not a unit"})
    params = params or derive_params(N)
    structure = _structure(N, budget)
    failures = 0
    for j in range(retries):
        sub = stream.child(j)
        primes = _sample_small_primes(N, params, sub.child(0))
        if primes is None:
            failures += 1
            continue
        lat, reduced = _reduced_lattice(structure, [*primes, g, y])
        x, r = dlog_from_lattice(lat)
        diag = {"attempts": j + 1, "order_of_base": r, "max_norm": _max_norm(reduced), "stream": sub.label()}
        if x is None:
            return PipelineOutcome(Status.INVALID, None, {**diag, "reason": "target not in <base>"})
        return PipelineOutcome(Status.SUCCESS, x, diag)
    return PipelineOutcome(Status.RETRYABLE, None, {"attempts": retries, "prime_failures": failures})


def find_order(
    N: int,
    x: int,
    params: RegevParams | None = None,
    stream: SeededStream | None = None,
    retries: int = DEFAULT_RETRIES,
    budget: int = DEFAULT_FACTOR_BUDGET,
) -> PipelineOutcome:
    """Multiplicative order of ``x`` from the lattice of ``(b_1..b_d, x)``."""
    stream = stream or SeededStream(0)
    if N < 3:
        return PipelineOutcome(Status.INVALID, None, {"reason": "N < 3"})
    if math.gcd(x, N) != 1:
        return PipelineOutcome(Status.INVALID, None, {"reason": "not a unit"})
    params = params or derive_params(N)
    structure = _structure(N, budget)
    for j in range(retries):
        sub = stream.child(j)
        primes = _sample_small_primes(N, params, sub.child(0))
        if primes is None:
            continue
        lat, reduced = _reduced_lattice(structure, [*primes, x % N])
        r = order_from_lattice(lat)
        return PipelineOutcome(
            Status.SUCCESS, r, {"attempts": j + 1, "max_norm": _max_norm(reduced), "stream": sub.label()}
        )
    return PipelineOutcome(Status.RETRYABLE, None, {"attempts": retries})


# -- safe RSA moduli and short products ------------------------------------


def is_rsa_safe_modulus(N: int, budget: int = DEFAULT_FACTOR_BUDGET) -> bool:
    """``N = P Q`` with distinct primes ``P, Q >= N^(1/4)`` and ``(P-1)/2, (Q-1)/2`` prime."""
    if N < 6:
        return False
    fac = factor_integer(N, budget)
    if len(fac) != 2 or any(e != 1 for _, e in fac):
        return False
    return all(p**4 >= N and p % 2 == 1 and is_probable_prime((p - 1) // 2) for p, _ in fac)


def count_representations(
    structure: UnitGroupStructure, target: int, elements, H: int
) -> tuple[int, float]:
    """Number of ``h in [0, H)^k`` with ``prod b_i^{h_i} = target``, two ways.

    Returns ``(enumerated, by_characters)``: the first by walking exponent
    coordinates, the second as ``|G|^{-1} sum_chi conj(chi(target)) prod_i
    sum_{0 <= h < H} chi(b_i)^h`` in floating point.
    """
    from .characters import _weights, dual_frequencies

    table = coordinate_table(structure)
    orders = np.array(structure.orders, dtype=np.int64)
    coords = table[[int(b) % structure.modulus for b in elements]]
    t = table[target % structure.modulus]
    if (coords < 0).any() or (t < 0).any():
        raise InputError("elements and target must be units")
    hs = np.arange(H, dtype=np.int64)
    ok = np.ones(H ** len(coords), dtype=bool)
    for j, o in enumerate(orders):
        acc = np.zeros(1, dtype=np.int64)
        for c in coords:
            acc = ((acc[:, None] + (hs * c[j] % o)[None, :]) % o).reshape(-1)
        ok &= acc == t[j]
    enumerated = int(np.count_nonzero(ok))

    L = structure.exponent
    w = dual_frequencies(structure) * (L // orders)
    angles = 2 * np.pi * ((w @ coords.T) % L) / L  # (chars, k)
    z = np.exp(1j * angles)
    geo = np.where(
        np.isclose(angles, 0), H, (1 - z**H) / np.where(np.isclose(angles, 0), 1, 1 - z)
    )
    tz = np.exp(-2j * np.pi * ((w @ t) % L) / L)
    by_chars = float((tz * geo.prod(axis=1)).sum().real / len(w))
    return enumerated, by_chars


def _mitm_representation(N: int, target: int, elements, H: int) -> tuple[int, ...] | None:
    """Exponents ``0 <= h_i < H`` with ``prod b_i^{h_i} = target``, by meet in the middle."""
    k = len(elements)
    half = k // 2
    left_b, right_b = elements[:half], elements[half:]

    def products(bs):
        out = {(): 1}
        for b in bs:
            powers = [pow(b, h, N) for h in range(H)]
            out = {key + (h,): v * p % N for key, v in out.items() for h, p in enumerate(powers)}
        return out

    table: dict[int, tuple[int, ...]] = {}
    for key, v in sorted(products(left_b).items()):
        table.setdefault(v, key)
    for key, v in sorted(products(right_b).items()):
        need = target * pow(v, -1, N) % N
        if need in table:
            return table[need] + key
    return None


def verify_short_product(N: int, b0: int, elements, exponents, x: int) -> bool:
    """Check ``b0 prod b_i^{h_i} = x (mod N)`` with one product-tree multi-exponentiation."""
    bases, selectors = [b0 % N], [1]
    for b, h in zip(elements, exponents):
        p = b % N
        for bit in range(max(1, int(h).bit_length())):
            bases.append(p)
            selectors.append((h >> bit) & 1)
            p = p * p % N
    value, _ = mulexp_product_tree(bases, selectors, N)
    return value == x % N


def toy_short_product(
    N: int,
    x: int,
    params: RegevParams,
    stream: SeededStream,
    H: int | None = None,
    budget: int = DEFAULT_FACTOR_BUDGET,
) -> PipelineOutcome:
    """Search ``b_0 prod_{i>=1} b_i^{h_i} = x`` with ``0 <= h_i < H`` for a safe RSA modulus.

    ``b_0`` is a uniform unit and ``b_1..b_d`` are sampled primes. The exact
    number of representations is found by enumeration and cross-checked
    against the character formula; a witness comes from meet in the middle
    and is re-verified with the product tree.
    """
    if not is_rsa_safe_modulus(N, budget):
        return PipelineOutcome(Status.INVALID, None, {"reason": "not a product of two safe primes"})
    if math.gcd(x, N) != 1:
        return PipelineOutcome(Status.INVALID, None, {"reason": "x is not a unit"})
    H = H or params.H_cap
    if not H or H < 1:
        raise InputError("toy search needs H >= 1")
    structure = _structure(N, budget)
    b0 = sample_unit(N, stream.child(0).rng())
    primes = _sample_small_primes(N, params, stream.child(1))
    if primes is None:
        return PipelineOutcome(Status.RETRYABLE, None, {"reason": "prime sampling failed", "b0": b0})
    target = x * pow(b0, -1, N) % N
    count, by_chars = count_representations(structure, target, primes, H)
    diag = {
        "b0": b0,
        "primes": list(primes),
        "representations": count,
        "character_count": by_chars,
        "character_residual": abs(by_chars - count),
    }
    if count == 0:
        return PipelineOutcome(Status.RETRYABLE, None, diag)
    h = _mitm_representation(N, target, [p % N for p in primes], H)
    if h is None or not verify_short_product(N, b0, primes, h, x):
        raise ArithmeticError("representation count and search disagree")
    return PipelineOutcome(Status.SUCCESS, tuple(h), diag)
