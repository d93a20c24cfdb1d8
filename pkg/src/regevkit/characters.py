"""Dirichlet characters of (Z/NZ)^x and the character-sum side of lattice counting.

A character is stored as a frequency vector ``f`` in the dual of the cyclic
decomposition: ``chi(a) = exp(2 pi i sum_j f_j v_j / o_j)`` where ``v`` is
the exponent vector of ``a``. With ``L`` the group exponent every value is
``zeta_L^k`` for an integer index ``k``, so exact sums live in the
cyclotomic ring Z[zeta_L]. :class:`CyclotomicNumber` implements that ring
(group ring Z[x]/(x^L - 1), reduced modulo the L-th cyclotomic polynomial
when a canonical form is needed).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np

from .arith import primes_up_to
from .errors import InputError, ResourceError
from .group import UnitGroupStructure, coordinate_table, dlog_vector, regev_dimension
from .sampler import SeededStream, sample_primes_unbounded

__all__ = [
    "CyclotomicNumber",
    "DirichletCharacter",
    "CharacterCount",
    "CountDecomposition",
    "CharSumProfile",
    "ExceptionalHistogram",
    "MomentEstimate",
    "cyclotomic_polynomial",
    "characters",
    "dual_frequencies",
    "dual_subgroup_size",
    "char_index",
    "char_eval",
    "char_order",
    "f_chi_h",
    "count_by_characters",
    "orthogonal_contribution",
    "count_decomposition",
    "orthogonality_sum",
    "orthogonality_sums",
    "max_root_multiplicity",
    "prime_char_average",
    "exceptional_histogram",
    "second_moment_estimate",
]


# -- exact cyclotomic arithmetic -------------------------------------------


@lru_cache(maxsize=256)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Integer coefficients (constant term first) of the n-th cyclotomic polynomial."""
    if n < 1:
        raise InputError("n must be positive")
    num = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in range(1, n):
        if n % d == 0:
            num = _exact_div(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


def _exact_div(num: list[int], den: list[int]) -> list[int]:
    """Quotient of integer polynomials when ``den`` is monic and divides ``num``."""
    num = list(num)
    q = [0] * (len(num) - len(den) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = num[i + len(den) - 1]
        q[i] = c
        if c:
            for j, b in enumerate(den):
                num[i + j] -= c * b
    if any(num[: len(den) - 1]):
        raise ArithmeticError("polynomial division is not exact")
    return q


def _reduce_mod(coeffs, modulus: tuple[int, ...]) -> tuple[int, ...]:
    r = [int(c) for c in coeffs]
    deg = len(modulus) - 1
    for i in range(len(r) - 1, deg - 1, -1):
        c = r[i]
        if c:
            for j, b in enumerate(modulus):
                r[i - deg + j] -= c * b
    r = r[:deg] + [0] * (deg - len(r))
    return tuple(r)


@dataclass(frozen=True)
class CyclotomicNumber:
    """``(sum_j coeffs[j] zeta_L^j) / denom`` with exact integer coefficients."""

    order: int
    coeffs: tuple[int, ...]
    denom: int = 1

    @classmethod
    def from_counts(cls, order: int, counts, denom: int = 1) -> "CyclotomicNumber":
        counts = [int(c) for c in counts]
        counts += [0] * (order - len(counts))
        return cls(order, tuple(counts), denom)

    @classmethod
    def integer(cls, order: int, value: int) -> "CyclotomicNumber":
        return cls.from_counts(order, [value])

    def _check(self, other: "CyclotomicNumber") -> None:
        if self.order != other.order:
            raise InputError("cyclotomic numbers of different orders")

    def __add__(self, other: "CyclotomicNumber") -> "CyclotomicNumber":
        self._check(other)
        den = math.lcm(self.denom, other.denom)
        a, b = den // self.denom, den // other.denom
        return CyclotomicNumber(
            self.order, tuple(a * x + b * y for x, y in zip(self.coeffs, other.coeffs)), den
        )

    def __neg__(self) -> "CyclotomicNumber":
        return CyclotomicNumber(self.order, tuple(-x for x in self.coeffs), self.denom)

    def __sub__(self, other: "CyclotomicNumber") -> "CyclotomicNumber":
        return self + (-other)

    def __mul__(self, other: "CyclotomicNumber") -> "CyclotomicNumber":
        self._check(other)
        L = self.order
        out = [0] * L
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    if y:
                        out[(i + j) % L] += x * y
        return CyclotomicNumber(L, tuple(out), self.denom * other.denom)

    def canonical(self) -> tuple[tuple[Fraction, ...], int]:
        """Coordinates in the power basis ``1, zeta, .., zeta^(phi(L)-1)`` (unique)."""
        red = _reduce_mod(self.coeffs, cyclotomic_polynomial(self.order))
        return tuple(Fraction(c, self.denom) for c in red), self.order

    def is_rational(self) -> bool:
        coords, _ = self.canonical()
        return not any(coords[1:])

    def as_fraction(self) -> Fraction:
        coords, _ = self.canonical()
        if any(coords[1:]):
            raise ValueError("cyclotomic number is not rational")
        return coords[0] if coords else Fraction(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.as_fraction() == other
        if not isinstance(other, CyclotomicNumber):
            return NotImplemented
        return self.order == other.order and (self - other).canonical()[0] == tuple(
            Fraction(0) for _ in range(len(cyclotomic_polynomial(self.order)) - 1)
        )

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __complex__(self) -> complex:
        L = self.order
        z = sum(c * cmath.exp(2j * math.pi * k / L) for k, c in enumerate(self.coeffs) if c)
        return complex(z) / self.denom


# -- characters --------------------------------------------------------------


@dataclass(frozen=True)
class DirichletCharacter:
    structure: UnitGroupStructure
    frequencies: tuple[int, ...]

    def __post_init__(self):
        orders = self.structure.orders
        freqs = tuple(int(f) for f in self.frequencies)
        if len(freqs) != len(orders):
            raise InputError("one frequency per cyclic component is required")
        if any(not 0 <= f < o for f, o in zip(freqs, orders)):
            raise InputError(f"frequencies {freqs} out of range for orders {orders}")
        object.__setattr__(self, "frequencies", freqs)

    @property
    def is_principal(self) -> bool:
        return not any(self.frequencies)

    def power(self, h: int) -> "DirichletCharacter":
        return DirichletCharacter(
            self.structure,
            tuple(h * f % o for f, o in zip(self.frequencies, self.structure.orders)),
        )


def _weights(structure: UnitGroupStructure) -> np.ndarray:
    L = structure.exponent
    return np.array([L // o for o in structure.orders], dtype=np.int64)


def dual_frequencies(structure: UnitGroupStructure, M: int = 1) -> np.ndarray:
    """Frequency vectors of the characters that are M-th powers, as an integer array.

    ``chi^M`` has frequencies ``M f_j mod o_j``, which range over the
    multiples of ``gcd(o_j, M)``; the product of the ranges has
    ``phi(N) / K(M)`` elements.
    """
    if M < 1:
        raise InputError("M must be positive")
    axes = [np.arange(0, o, math.gcd(o, M), dtype=np.int64) for o in structure.orders]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def dual_subgroup_size(structure: UnitGroupStructure, M: int = 1) -> int:
    return math.prod(o // math.gcd(o, M) for o in structure.orders)


def characters(structure: UnitGroupStructure, M: int = 1):
    """Iterate over the characters ``chi^M``, i.e. the subgroup of M-th powers of the dual."""
    for f in dual_frequencies(structure, M):
        yield DirichletCharacter(structure, tuple(int(x) for x in f))


def char_index(chi: DirichletCharacter, a: int) -> int:
    """``k`` with ``chi(a) = zeta_L^k`` where ``L`` is the group exponent."""
    v = dlog_vector(chi.structure, a)
    L = chi.structure.exponent
    return sum(f * x * (L // o) for f, x, o in zip(chi.frequencies, v, chi.structure.orders)) % L


def char_eval(chi: DirichletCharacter, a: int, exact: bool = False):
    """``chi(a)``; a :class:`CyclotomicNumber` when ``exact`` else a complex float."""
    k = char_index(chi, a)
    L = chi.structure.exponent
    if exact:
        counts = [0] * L
        counts[k] = 1
        return CyclotomicNumber.from_counts(L, counts)
    return cmath.exp(2j * math.pi * k / L)


def char_order(chi: DirichletCharacter) -> int:
    return reduce(
        math.lcm,
        (o // math.gcd(o, f) for f, o in zip(chi.frequencies, chi.structure.orders)),
        1,
    )


# -- F_{chi,H} -------------------------------------------------------------


def _symmetric_sum_float(k: int, L: int, H: int) -> float:
    """``sum_{|h| <= H} zeta_L^{h k}``, a real number (Dirichlet kernel)."""
    if k % L == 0:
        return float(2 * H + 1)
    half = math.pi * k / L
    return math.sin((2 * H + 1) * half) / math.sin(half)


def _symmetric_sum_counts(k: int, L: int, H: int) -> np.ndarray:
    exps = (np.arange(-H, H + 1, dtype=np.int64) * k) % L
    return np.bincount(exps, minlength=L)


def _cyclic_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    L = len(a)
    full = np.convolve(a, b)
    out = full[:L].copy()
    out[: len(full) - L] += full[L:]
    return out


def _indices(structure: UnitGroupStructure, elements) -> np.ndarray:
    n = structure.modulus
    rows = []
    for b in elements:
        if math.gcd(int(b), n) != 1:
            raise InputError(f"{b} is not a unit modulo {n}")
        rows.append(dlog_vector(structure, int(b)))
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(structure.orders))


def f_chi_h(chi: DirichletCharacter, H: int, elements, exact: bool = False):
    """``prod_i sum_{|h| <= H} chi(b_i)^h``.

    Each factor is real (the sum is symmetric in ``h``), so the float result
    is a real number computed from the closed form
    ``sin((2H+1) t/2) / sin(t/2)``. With ``exact=True`` the product is formed
    in the cyclotomic ring instead.
    """
    if H < 0:
        raise InputError("H must be nonnegative")
    s = chi.structure
    L = s.exponent
    coords = _indices(s, elements)
    ks = (coords * np.array(chi.frequencies, dtype=np.int64) * _weights(s)).sum(axis=1) % L
    if exact:
        acc = np.zeros(L, dtype=object)
        acc[0] = 1
        for k in ks:
            acc = _cyclic_convolve(acc, _symmetric_sum_counts(int(k), L, H).astype(object))
        return CyclotomicNumber.from_counts(L, acc)
    return math.prod(_symmetric_sum_float(int(k), L, H) for k in ks)


# -- counting lattice points through characters ----------------------------


def _box_count(structure: UnitGroupStructure, M: int, H: int, coords: np.ndarray, budget: int) -> int:
    """``#{e in [-H, H]^k : sum_i e_i M v_i = 0 in prod Z/o_j}`` by direct enumeration."""
    k = len(coords)
    if (2 * H + 1) ** k > budget:
        raise ResourceError(f"box of {(2 * H + 1) ** k} points exceeds budget {budget}")
    es = np.arange(-H, H + 1, dtype=np.int64)
    ok = np.ones((2 * H + 1) ** k, dtype=bool)
    for j, o in enumerate(structure.orders):
        acc = np.zeros(1, dtype=np.int64)
        for i in range(k):
            step = es * (M * int(coords[i, j])) % o
            acc = ((acc[:, None] + step[None, :]) % o).reshape(-1)
        ok &= acc == 0
    return int(np.count_nonzero(ok))


def _f_counts_for_all(structure, freqs: np.ndarray, coords: np.ndarray, H: int) -> np.ndarray:
    """Group-ring coefficient vectors of ``F_{chi,H}(b)`` for every row of ``freqs``."""
    L = structure.exponent
    ks = (freqs * _weights(structure)) @ coords.T % L  # (chars, k)
    out = np.zeros((len(freqs), L), dtype=object)
    cache: dict[int, np.ndarray] = {}
    for c, row in enumerate(ks):
        acc = np.zeros(L, dtype=object)
        acc[0] = 1
        for k in row:
            k = int(k)
            if k not in cache:
                cache[k] = _symmetric_sum_counts(k, L, H).astype(object)
            acc = _cyclic_convolve(acc, cache[k])
        out[c] = acc
    return out


@dataclass(frozen=True)
class CharacterCount:
    lhs: int
    rhs: CyclotomicNumber
    num_characters: int

    @property
    def agrees(self) -> bool:
        return self.rhs == self.lhs


def count_by_characters(
    structure: UnitGroupStructure, M: int, H: int, elements, budget: int = 10**7
) -> CharacterCount:
    """Both sides of the character-sum formula for lattice points in a box.

    ``lhs`` counts ``e in [-H, H]^k`` with ``prod b_i^{M e_i} = 1`` by
    enumerating the box in exponent coordinates. ``rhs`` is
    ``|D|^{-1} sum_{chi in D} F_{chi,H}(b)`` over the group ``D`` of M-th
    powers of characters, evaluated exactly in the cyclotomic ring.
    """
    if M < 1 or H < 0:
        raise InputError("need M >= 1 and H >= 0")
    coords = _indices(structure, elements)
    lhs = _box_count(structure, M, H, coords, budget)
    freqs = dual_frequencies(structure, M)
    if len(freqs) * len(coords) > budget:
        raise ResourceError("character enumeration exceeds budget")
    total = _f_counts_for_all(structure, freqs, coords, H).sum(axis=0)
    rhs = CyclotomicNumber.from_counts(structure.exponent, total, len(freqs))
    return CharacterCount(lhs, rhs, len(freqs))


def orthogonal_contribution(structure: UnitGroupStructure, M: int, H: int, elements) -> Fraction:
    """``(2H+1)^k / |<b_1^M, .., b_k^M>|`` with the subgroup size taken from the relation lattice."""
    from .lattice import relation_lattice

    k = len(elements)
    size = relation_lattice(structure, list(elements), M).covolume
    return Fraction((2 * H + 1) ** k, size)


@dataclass(frozen=True)
class CountDecomposition:
    lhs: int
    orthogonal: Fraction
    remainder: CyclotomicNumber
    orthogonal_characters: int

    @property
    def residual(self) -> CyclotomicNumber:
        """``lhs - orthogonal - remainder``; zero when the decomposition holds."""
        L = self.remainder.order
        main = CyclotomicNumber.from_counts(
            L, [self.orthogonal.numerator], self.orthogonal.denominator
        )
        return CyclotomicNumber.integer(L, self.lhs) - main - self.remainder


def count_decomposition(
    structure: UnitGroupStructure, M: int, H: int, elements, budget: int = 10**7
) -> CountDecomposition:
    """Split the box count into the main term and the remaining character sum.

    The main term is :func:`orthogonal_contribution`. The remainder is
    ``|D|^{-1}`` times the sum of ``F_{chi,H}(b)`` over the characters in
    ``D`` that are nontrivial on some ``b_i``.
    """
    coords = _indices(structure, elements)
    lhs = _box_count(structure, M, H, coords, budget)
    freqs = dual_frequencies(structure, M)
    L = structure.exponent
    ks = (freqs * _weights(structure)) @ coords.T % L
    nontrivial = (ks != 0).any(axis=1)
    total = _f_counts_for_all(structure, freqs[nontrivial], coords, H).sum(axis=0)
    if not nontrivial.any():
        total = np.zeros(L, dtype=object)
    remainder = CyclotomicNumber.from_counts(L, total, len(freqs))
    return CountDecomposition(
        lhs,
        orthogonal_contribution(structure, M, H, elements),
        remainder,
        int(np.count_nonzero(~nontrivial)),
    )


def orthogonality_sums(structure: UnitGroupStructure) -> dict[int, CyclotomicNumber]:
    """``|G|^{-1} sum_{chi} chi(a)`` for every unit ``a``, exactly."""
    L = structure.exponent
    table = coordinate_table(structure)
    units = np.flatnonzero(table[:, 0] >= 0)
    freqs = dual_frequencies(structure, 1)
    w = freqs * _weights(structure)
    out = {}
    for a in units:
        ks = (w @ table[a]) % L
        counts = np.bincount(ks, minlength=L)
        out[int(a)] = CyclotomicNumber.from_counts(L, counts, len(freqs))
    return out


def orthogonality_sum(structure: UnitGroupStructure, a: int) -> CyclotomicNumber:
    L = structure.exponent
    freqs = dual_frequencies(structure, 1)
    v = np.array(dlog_vector(structure, a), dtype=np.int64)
    ks = (freqs * _weights(structure)) @ v % L
    return CyclotomicNumber.from_counts(L, np.bincount(ks, minlength=L), len(freqs))


def max_root_multiplicity(structure: UnitGroupStructure, M: int, h: int) -> int:
    """``max_psi #{chi in D : chi^h = psi}`` over the group D of M-th powers, by enumeration."""
    if h < 1:
        raise InputError("h must be positive")
    orders = np.array(structure.orders, dtype=np.int64)
    freqs = dual_frequencies(structure, M)
    powered = freqs * h % orders
    radix = np.concatenate([[1], np.cumprod(orders[::-1])[:-1]])[::-1]
    keys = powered @ radix
    _, counts = np.unique(keys, return_counts=True)
    return int(counts.max())


# -- averages over primes --------------------------------------------------


def _qualifying_primes(n: int, x: int, budget: int) -> np.ndarray:
    ps = primes_up_to(x, budget)
    return ps[n % ps != 0]


def prime_char_average(
    chi: DirichletCharacter, x: int, exact: bool = False, budget: int = 10**8
):
    """Mean of ``chi(p)`` over primes ``p <= x`` that do not divide N."""
    s = chi.structure
    if x < 2:
        raise InputError("x must be >= 2")
    ps = _qualifying_primes(s.modulus, x, budget)
    if len(ps) == 0:
        raise InputError(f"no primes <= {x} coprime to {s.modulus}")
    L = s.exponent
    table = coordinate_table(s)
    coords = table[ps % s.modulus]
    ks = coords @ (np.array(chi.frequencies, dtype=np.int64) * _weights(s)) % L
    counts = np.bincount(ks, minlength=L)
    value = CyclotomicNumber.from_counts(L, counts, len(ps))
    return value if exact else complex(value)


def _prime_count_grid(structure: UnitGroupStructure, x: int, budget: int) -> tuple[np.ndarray, int]:
    """Number of qualifying primes in each residue class, indexed by exponent coordinates."""
    ps = _qualifying_primes(structure.modulus, x, budget)
    table = coordinate_table(structure)
    coords = table[ps % structure.modulus]
    grid = np.zeros(structure.orders, dtype=np.float64)
    np.add.at(grid, tuple(coords.T), 1.0)
    return grid, len(ps)


@dataclass(frozen=True)
class CharSumProfile:
    frequencies: tuple[int, ...]
    order: int
    value: float
    worst_power: int
    bucket: int | None  # None marks an exactly vanishing maximum


@dataclass(frozen=True)
class ExceptionalHistogram:
    counts: tuple[tuple[int | None, int], ...]
    worst: dict
    profiles: tuple[CharSumProfile, ...]
    prime_count: int

    @property
    def total(self) -> int:
        return sum(c for _, c in self.counts)


def _bucket(value: float) -> int:
    """``j`` with ``value in (e^{-j-1}, e^{-j}]``."""
    j = math.floor(-math.log(value))
    # guard the interval ends against rounding in log
    while j > 0 and value > math.exp(-j):
        j -= 1
    while value <= math.exp(-j - 1):
        j += 1
    return max(j, 0)


def exceptional_histogram(
    structure: UnitGroupStructure,
    X: int,
    H: int,
    M: int | None = None,
    budget: int = 10**5,
    prime_budget: int = 10**8,
) -> ExceptionalHistogram:
    """Bucket characters of order > 2 by ``max_{0<|h|<H} |mean_{p<=X} chi^h(p)|``.

    Character sums for the whole dual group come from one inverse FFT of the
    prime counts per residue class. With ``M`` given, only M-th powers of
    characters are considered. Maxima below ``1e-9`` are confirmed to vanish
    exactly before landing in the ``None`` bucket.
    """
    if H < 2:
        raise InputError("H must be >= 2 so that 0 < |h| < H is nonempty")
    if structure.group_order > budget:
        raise ResourceError(f"phi(N) = {structure.group_order} exceeds budget {budget}")
    orders = np.array(structure.orders, dtype=np.int64)
    grid, count = _prime_count_grid(structure, X, prime_budget)
    if count == 0:
        raise InputError(f"no primes <= {X} coprime to {structure.modulus}")
    sums = np.fft.ifftn(grid) * grid.size
    freqs = dual_frequencies(structure, M or 1)
    profiles = []
    for f in freqs:
        chi = DirichletCharacter(structure, tuple(int(x) for x in f))
        order = char_order(chi)
        if order <= 2:
            continue
        best, best_h = -1.0, 1
        for h in range(1, H):
            idx = tuple(f * h % orders)
            v = abs(sums[idx]) / count
            if v > best:
                best, best_h = v, h
        if best < 1e-9:
            exact = prime_char_average(chi.power(best_h), X, exact=True, budget=prime_budget)
            if exact == 0 and all(
                prime_char_average(chi.power(h), X, exact=True, budget=prime_budget) == 0
                for h in range(1, H)
            ):
                profiles.append(CharSumProfile(chi.frequencies, order, 0.0, best_h, None))
                continue
        profiles.append(CharSumProfile(chi.frequencies, order, float(best), best_h, _bucket(best)))
    tally: dict = {}
    worst: dict = {}
    for p in profiles:
        tally[p.bucket] = tally.get(p.bucket, 0) + 1
        if p.bucket not in worst or p.value > worst[p.bucket].value:
            worst[p.bucket] = p
    keys = sorted(tally, key=lambda j: math.inf if j is None else j)
    return ExceptionalHistogram(tuple((j, tally[j]) for j in keys), worst, tuple(profiles), count)


# -- Monte Carlo second moment ---------------------------------------------


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    trials: int
    d: int
    samples: tuple[float, ...]


def second_moment_estimate(
    chi: DirichletCharacter,
    H: int,
    X: int,
    trials: int,
    stream: SeededStream,
    d: int | None = None,
) -> MomentEstimate:
    """Monte Carlo mean of ``|F_{chi,H}(b_1..b_d)|^2`` over random primes ``b_i <= X`` not dividing N.

    Trial ``t`` draws its primes from ``stream.child(t)``; ``d`` defaults to
    the dimension ``ceil(sqrt(log N))``.
    """
    if trials < 1:
        raise InputError("trials must be positive")
    s = chi.structure
    d = regev_dimension(s.modulus) if d is None else d
    samples = []
    for t in range(trials):
        primes, _ = sample_primes_unbounded(s.modulus, d, X, stream.child(t).rng())
        samples.append(f_chi_h(chi, H, primes) ** 2)
    arr = np.array(samples)
    stderr = float(arr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return MomentEstimate(float(arr.mean()), stderr, trials, d, tuple(samples))
