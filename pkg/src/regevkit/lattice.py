"""Relation lattices and the integer linear algebra around them.

A relation lattice for units ``g_1..g_k`` mod N and a power M is

    L_M = { e in Z^k : prod g_i^(M e_i) = 1 (mod N) },

a full-rank sublattice of Z^k whose index equals the size of the subgroup
generated by the ``g_i^M``. It is computed exactly from exponent vectors in
the CRT decomposition of the unit group, as the kernel of an integer matrix
modulo the component orders.

Matrices are plain lists of integer rows. Bases are row bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import InputError, ResourceError
from .group import UnitGroupStructure, dlog_vector

__all__ = [
    "RelationLattice",
    "CubeCountEstimate",
    "NormBoundResult",
    "hnf",
    "hnf_basis",
    "determinant",
    "solve_in_lattice",
    "same_lattice",
    "relation_lattice",
    "relation_holds",
    "generated_subgroup_size",
    "verify_relation_lattice",
    "lattice_points_in_box",
    "count_points_in_box",
    "enumerate_cube_points",
    "lll_reduce",
    "is_lll_reduced",
    "extract_li_vectors",
    "basis_with_norm_bound",
    "basis_from_independent_vectors",
    "hyperplane_cube_count",
    "hyperplane_cube_counts",
]

Matrix = list[list[int]]


def _identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def _dot(u, v) -> int:
    return sum(x * y for x, y in zip(u, v))


# -- Hermite normal form ---------------------------------------------------


def _hnf_upper(matrix: Matrix, transform: bool = True) -> tuple[Matrix, Matrix | None]:
    """Upper row-echelon HNF: ``U @ A = H`` with pivots moving right, entries above pivots reduced."""
    h = [list(map(int, row)) for row in matrix]
    m = len(h)
    n = len(h[0]) if m else 0
    u = _identity(m) if transform else None
    r = 0
    for c in range(n):
        if r == m:
            break
        for i in range(r + 1, m):
            if h[i][c] == 0:
                continue
            a, b = h[r][c], h[i][c]
            g, x, y = _xgcd(a, b)
            p, q = -b // g, a // g
            hr, hi = h[r], h[i]
            h[r] = [x * s + y * t for s, t in zip(hr, hi)]
            h[i] = [p * s + q * t for s, t in zip(hr, hi)]
            if u is not None:
                ur, ui = u[r], u[i]
                u[r] = [x * s + y * t for s, t in zip(ur, ui)]
                u[i] = [p * s + q * t for s, t in zip(ur, ui)]
        piv = h[r][c]
        if piv == 0:
            continue
        if piv < 0:
            h[r] = [-v for v in h[r]]
            if u is not None:
                u[r] = [-v for v in u[r]]
            piv = -piv
        for i in range(r):
            q = h[i][c] // piv
            if q:
                h[i] = [s - q * t for s, t in zip(h[i], h[r])]
                if u is not None:
                    u[i] = [s - q * t for s, t in zip(u[i], u[r])]
        r += 1
    return h, u


def hnf(matrix: Matrix) -> tuple[Matrix, Matrix]:
    """Row-style Hermite normal form in the lower-triangular convention.

    Returns ``(H, U)`` with ``U`` unimodular and ``U @ matrix == H``. For a
    square nonsingular input, ``H`` is lower triangular with positive
    diagonal and every entry below a pivot lies in ``[0, pivot)``.
    Zero rows (rank deficiency) come first.
    """
    m = len(matrix)
    if m == 0:
        return [], []
    rev = [list(reversed(row)) for row in matrix]
    h_up, u_up = _hnf_upper(rev)
    h = [list(reversed(row)) for row in reversed(h_up)]
    u = list(reversed(u_up))
    return h, u


def hnf_basis(rows: Matrix) -> Matrix:
    """Canonical (lower HNF) basis of the lattice generated by ``rows``."""
    if not rows:
        return []
    rev = [list(reversed(row)) for row in rows]
    h_up, _ = _hnf_upper(rev, transform=False)
    nonzero = [row for row in h_up if any(row)]
    return [list(reversed(row)) for row in reversed(nonzero)]


def determinant(matrix: Matrix) -> int:
    """Determinant of a square integer matrix by Bareiss fraction-free elimination."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    if any(len(row) != n for row in a):
        raise InputError("determinant needs a square matrix")
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


def solve_in_lattice(basis: Matrix, v) -> list[int] | None:
    """Integer coefficients ``z`` with ``z @ basis == v``, or ``None`` if ``v`` is not in the lattice.

    ``basis`` must be square and nonsingular. Solved by back-substitution in
    the lower HNF.
    """
    n = len(basis)
    h, u = hnf(basis)
    if any(h[i][i] == 0 for i in range(n)):
        raise InputError("basis is singular")
    z = [0] * n
    for j in range(n - 1, -1, -1):
        rest = int(v[j]) - sum(z[i] * h[i][j] for i in range(j + 1, n))
        if rest % h[j][j]:
            return None
        z[j] = rest // h[j][j]
    return [sum(z[i] * u[i][k] for i in range(n)) for k in range(n)]


def same_lattice(a: Matrix, b: Matrix) -> bool:
    return hnf_basis(a) == hnf_basis(b)


def _rank(rows) -> int:
    echelon: list[tuple[int, list[Fraction]]] = []
    for v in rows:
        w = [Fraction(x) for x in v]
        for piv, row in echelon:
            if w[piv]:
                f = w[piv] / row[piv]
                w = [x - f * y for x, y in zip(w, row)]
        nz = next((i for i, x in enumerate(w) if x), None)
        if nz is not None:
            echelon.append((nz, w))
    return len(echelon)


# -- relation lattices -----------------------------------------------------


@dataclass(frozen=True)
class RelationLattice:
    ambient_dim: int
    basis: tuple[tuple[int, ...], ...]
    generators: tuple[int, ...]
    power: int
    modulus: int
    structure: UnitGroupStructure = field(compare=False, repr=False)

    @property
    def covolume(self) -> int:
        return abs(determinant([list(r) for r in self.basis]))

    def with_basis(self, basis) -> "RelationLattice":
        return RelationLattice(
            self.ambient_dim,
            tuple(tuple(int(x) for x in r) for r in basis),
            self.generators,
            self.power,
            self.modulus,
            self.structure,
        )


def relation_lattice(
    structure: UnitGroupStructure, generators, power: int = 1
) -> RelationLattice:
    """The lattice of exponent vectors ``e`` with ``prod g_i^(power * e_i) = 1 (mod N)``.

    Kernel of ``e -> sum_i e_i * power * dlog(g_i)`` in ``prod Z/order_j``,
    read off from the HNF of ``[[A | I], [diag(orders) | 0]]``.
    """
    n = structure.modulus
    if power < 1:
        raise InputError("power must be positive")
    gens = tuple(int(g) % n for g in generators)
    if not gens:
        raise InputError("at least one generator is required")
    for g in gens:
        if math.gcd(g, n) != 1:
            raise InputError(f"generator {g} is not a unit modulo {n}")
    orders = structure.orders
    k, c = len(gens), len(orders)
    rows = []
    for i, g in enumerate(gens):
        v = dlog_vector(structure, g)
        rows.append([power * x % o for x, o in zip(v, orders)] + [int(i == j) for j in range(k)])
    for j, o in enumerate(orders):
        rows.append([o if jj == j else 0 for jj in range(c)] + [0] * k)
    h, _ = _hnf_upper(rows, transform=False)
    kernel = [row[c:] for row in h[c:]]
    basis = hnf_basis(kernel)
    return RelationLattice(
        k, tuple(tuple(r) for r in basis), gens, power, n, structure
    )


def relation_holds(lattice: RelationLattice, e) -> bool:
    """Direct modular check of ``prod g_i^(M e_i) = 1 (mod N)``."""
    n = lattice.modulus
    acc = 1
    for g, x in zip(lattice.generators, e):
        acc = acc * pow(g, lattice.power * int(x), n) % n
    return acc == 1


def generated_subgroup_size(n: int, elements, budget: int = 2_000_000) -> int:
    """Size of the subgroup of (Z/nZ)^x generated by ``elements``, by closure."""
    seen = {1}
    frontier = [1]
    gens = [int(a) % n for a in elements]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g % n
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if len(seen) > budget:
            raise ResourceError(f"subgroup closure exceeds {budget} elements")
        frontier = nxt
    return len(seen)


def _power_table(g: int, exponent_scale: int, radius: int, n: int) -> np.ndarray:
    return np.array(
        [pow(g, exponent_scale * e, n) for e in range(-radius, radius + 1)], dtype=np.int64
    )


def verify_relation_lattice(
    lattice: RelationLattice,
    box: int = 10,
    point_budget: int = 2_000_000,
    subgroup_budget: int = 2_000_000,
) -> dict:
    """Check the defining invariants of a relation lattice by direct modular arithmetic.

    1. every basis row is a relation;
    2. ``|det|`` equals the size of ``<g_i^M>`` computed by closure;
    3. every relation in ``[-R, R]^k`` lies in the row span, where ``R <= box``
       is shrunk until ``(2R+1)^k`` fits ``point_budget``.

    Returns a dict with ``violations`` (list of messages), ``box_radius`` and
    ``relations_checked``.
    """
    n = lattice.modulus
    k = lattice.ambient_dim
    basis = [list(r) for r in lattice.basis]
    violations = []
    for row in basis:
        if not relation_holds(lattice, row):
            violations.append(f"basis row {row} is not a relation")

    det = abs(determinant(basis))
    gens_m = [pow(g, lattice.power, n) for g in lattice.generators]
    size = generated_subgroup_size(n, gens_m, subgroup_budget)
    if det != size:
        violations.append(f"|det| = {det} but |<g^M>| = {size}")

    radius = box
    while radius > 0 and (2 * radius + 1) ** k > point_budget:
        radius -= 1
    checked = 0
    if radius > 0:
        if n >= 3_000_000_000:
            raise ResourceError("vectorised span check needs N < 3e9")
        acc = np.ones(1, dtype=np.int64)
        for g in lattice.generators:
            table = _power_table(g, lattice.power, radius, n)
            acc = (acc[:, None] * table[None, :] % n).reshape(-1)
        hits = np.flatnonzero(acc == 1)
        side = 2 * radius + 1
        for flat in hits:
            e = []
            rem = int(flat)
            for _ in range(k):
                rem, digit = divmod(rem, side)
                e.append(digit - radius)
            e.reverse()
            checked += 1
            if solve_in_lattice(basis, e) is None:
                violations.append(f"relation {e} not in the row span")
                break
    return {"violations": violations, "box_radius": radius, "relations_checked": checked}


# -- points in boxes -------------------------------------------------------


def _triangular(basis: Matrix) -> Matrix:
    h = hnf_basis(basis)
    n = len(basis[0]) if basis else 0
    if len(h) != n or any(h[i][i] <= 0 for i in range(n)):
        raise InputError("basis must be square and nonsingular")
    return h


def lattice_points_in_box(basis: Matrix, radius: int, budget: int | None = None):
    """Yield every lattice point with sup-norm ``<= radius``.

    Walks the lower-triangular HNF from the last coordinate down; each
    coefficient range is an exact integer interval, so no point is missed and
    no branch leaves the box.
    """
    h = _triangular([list(r) for r in basis])
    n = len(h)
    x = [0] * n
    offs = [0] * n
    produced = 0

    def rec(i):
        nonlocal produced
        piv = h[i][i]
        s = offs[i]
        lo = -((radius + s) // piv)
        hi = (radius - s) // piv
        row = h[i]
        for z in range(lo, hi + 1):
            x[i] = s + z * piv
            if i == 0:
                produced += 1
                if budget is not None and produced > budget:
                    raise ResourceError(f"more than {budget} lattice points in the box")
                yield tuple(x)
                continue
            for j in range(i):
                offs[j] += z * row[j]
            yield from rec(i - 1)
            for j in range(i):
                offs[j] -= z * row[j]

    if n == 0:
        return
    yield from rec(n - 1)


def count_points_in_box(basis: Matrix, radius: int) -> int:
    """Number of lattice points with sup-norm ``<= radius`` (innermost level counted, not listed)."""
    h = _triangular([list(r) for r in basis])
    n = len(h)
    offs = [0] * n

    def rec(i):
        piv = h[i][i]
        s = offs[i]
        lo = -((radius + s) // piv)
        hi = (radius - s) // piv
        if i == 0:
            return max(0, hi - lo + 1)
        total = 0
        row = h[i]
        for z in range(lo, hi + 1):
            for j in range(i):
                offs[j] += z * row[j]
            total += rec(i - 1)
            for j in range(i):
                offs[j] -= z * row[j]
        return total

    return rec(n - 1)


@dataclass(frozen=True)
class CubeCountEstimate:
    H: int
    count: int
    theta: Fraction


def _grid_count(lattice: RelationLattice, radius: int) -> int:
    n = lattice.modulus
    acc = np.ones(1, dtype=np.int64)
    for g in lattice.generators:
        table = _power_table(g, lattice.power, radius, n)
        acc = (acc[:, None] * table[None, :] % n).reshape(-1)
    return int(np.count_nonzero(acc == 1))


def enumerate_cube_points(
    lattice: RelationLattice | Matrix,
    H: int,
    method: str = "auto",
    grid_limit: int = 10**7,
) -> CubeCountEstimate:
    """Exact count of lattice points in ``[-H, H]^dim`` with ``theta = count * covol / (2H+1)^dim``.

    ``method="grid"`` scans the whole box testing the relation by modular
    arithmetic (relation lattices only); ``"basis"`` walks the triangular
    basis. ``"auto"`` picks the grid while ``(2H+1)^dim <= grid_limit``.
    """
    if H < 1:
        raise InputError("H must be positive")
    if isinstance(lattice, RelationLattice):
        basis = [list(r) for r in lattice.basis]
    else:
        basis = [list(map(int, r)) for r in lattice]
    dim = len(basis)
    covol = abs(determinant(basis))
    box = (2 * H + 1) ** dim
    if method == "auto":
        method = "grid" if isinstance(lattice, RelationLattice) and box <= grid_limit else "basis"
    if method == "grid":
        if not isinstance(lattice, RelationLattice):
            raise InputError("grid counting needs a relation lattice")
        if box > grid_limit:
            raise ResourceError(f"grid of {box} points exceeds {grid_limit}")
        count = _grid_count(lattice, H)
    elif method == "basis":
        count = count_points_in_box(basis, H)
    else:
        raise InputError(f"unknown method {method!r}")
    return CubeCountEstimate(H, count, Fraction(count * covol, box))


# -- LLL -------------------------------------------------------------------


def lll_reduce(basis: Matrix, delta: Fraction = Fraction(99, 100)) -> Matrix:
    """LLL-reduce the rows of ``basis`` in exact integer arithmetic.

    Integral variant (Cohen, Alg. 2.6.7): the Gram-Schmidt data is kept as
    the integers ``d_i`` (Gram determinants) and ``lambda_ij = d_j mu_ij``.
    """
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise InputError("delta must lie in (1/4, 1)")
    n = len(basis)
    if n == 0:
        return []
    b = [None] + [list(map(int, row)) for row in basis]
    p, q = delta.numerator, delta.denominator
    d = [0] * (n + 1)
    d[0] = 1
    lam = [[0] * (n + 1) for _ in range(n + 1)]
    d[1] = _dot(b[1], b[1])
    if d[1] == 0:
        raise InputError("basis rows are linearly dependent")

    def redi(k, l):
        if 2 * abs(lam[k][l]) <= d[l]:
            return
        r = (2 * lam[k][l] + d[l]) // (2 * d[l])
        b[k] = [s - r * t for s, t in zip(b[k], b[l])]
        lam[k][l] -= r * d[l]
        for i in range(1, l):
            lam[k][i] -= r * lam[l][i]

    def swapi(k, kmax):
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(1, k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        big = (d[k - 2] * d[k] + lm * lm) // d[k - 1]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k] * lam[i][k - 1] - lm * t) // d[k - 1]
            lam[i][k - 1] = (big * t + lm * lam[i][k]) // d[k]
        d[k - 1] = big

    k, kmax = 2, 1
    while k <= n:
        if k > kmax:
            kmax = k
            for j in range(1, k + 1):
                u = _dot(b[k], b[j])
                for i in range(1, j):
                    u = (d[i] * u - lam[k][i] * lam[j][i]) // d[i - 1]
                if j < k:
                    lam[k][j] = u
                else:
                    if u == 0:
                        raise InputError("basis rows are linearly dependent")
                    d[k] = u
        redi(k, k - 1)
        if q * (d[k] * d[k - 2] + lam[k][k - 1] ** 2) < p * d[k - 1] ** 2:
            swapi(k, kmax)
            k = max(2, k - 1)
        else:
            for l in range(k - 2, 0, -1):
                redi(k, l)
            k += 1
    return b[1:]


def _gram_schmidt(rows: Matrix) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    ortho: list[list[Fraction]] = []
    mu = [[Fraction(0)] * len(rows) for _ in rows]
    for i, v in enumerate(rows):
        w = [Fraction(x) for x in v]
        for j in range(i):
            mu[i][j] = _dot(v, ortho[j]) / _dot(ortho[j], ortho[j])
            w = [a - mu[i][j] * c for a, c in zip(w, ortho[j])]
        ortho.append(w)
    return ortho, mu


def is_lll_reduced(basis: Matrix, delta: Fraction = Fraction(99, 100)) -> bool:
    """Size reduction and the Lovasz condition, checked with rational Gram-Schmidt."""
    ortho, mu = _gram_schmidt(basis)
    for i in range(len(basis)):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    for k in range(1, len(basis)):
        lhs = _dot(ortho[k], ortho[k])
        rhs = (Fraction(delta) - mu[k][k - 1] ** 2) * _dot(ortho[k - 1], ortho[k - 1])
        if lhs < rhs:
            return False
    return True


# -- short independent vectors and bases -----------------------------------


def extract_li_vectors(
    lattice: RelationLattice | Matrix, H1: int, dim: int | None = None, budget: int = 10**6
) -> list[tuple[int, ...]] | None:
    """``dim`` linearly independent lattice vectors of sup-norm ``<= H1``, or ``None``.

    Greedy rank building over all points of the box, shortest first. Each
    point is taken up to sign (first nonzero coordinate positive) and ties in
    Euclidean norm are broken lexicographically.
    """
    basis = [list(r) for r in (lattice.basis if isinstance(lattice, RelationLattice) else lattice)]
    n = len(basis)
    dim = n if dim is None else dim
    cands = []
    for v in lattice_points_in_box(basis, H1, budget):
        first = next((x for x in v if x), 0)
        if first > 0:
            cands.append(v)
    cands.sort(key=lambda v: (_dot(v, v), v))
    chosen: list[tuple[int, ...]] = []
    echelon: list[tuple[int, list[Fraction]]] = []
    for v in cands:
        w = [Fraction(x) for x in v]
        for piv, row in echelon:
            if w[piv]:
                f = w[piv] / row[piv]
                w = [a - f * c for a, c in zip(w, row)]
        nz = next((i for i, x in enumerate(w) if x), None)
        if nz is None:
            continue
        echelon.append((nz, w))
        chosen.append(v)
        if len(chosen) == dim:
            return chosen
    return None


def _integer_inverse(u: Matrix) -> Matrix:
    n = len(u)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(u)]
    for c in range(n):
        piv = next(i for i in range(c, n) if a[i][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        f = a[c][c]
        a[c] = [x / f for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                g = a[i][c]
                a[i] = [x - g * y for x, y in zip(a[i], a[c])]
    out = [[x for x in row[n:]] for row in a]
    if any(x.denominator != 1 for row in out for x in row):
        raise InputError("matrix is not unimodular")
    return [[int(x) for x in row] for row in out]


def basis_from_independent_vectors(basis: Matrix, vectors: Matrix) -> Matrix:
    """Turn ``n`` independent lattice vectors into a basis that is not much longer.

    Finds a basis ``R`` with ``vectors = W @ R`` for a lower-triangular
    integer ``W``, then size-reduces it. Each row then satisfies
    ``|r_i|^2 <= (1 + (i-1)/4) max_j |s_j|^2``.
    """
    n = len(basis)
    t = []
    for s in vectors:
        z = solve_in_lattice(basis, s)
        if z is None:
            raise InputError(f"{list(s)} is not a lattice vector")
        t.append(z)
    if _rank(t) != n:
        raise InputError("vectors are not linearly independent")
    # T V = W lower triangular  <=>  V^T T^T = W^T upper triangular
    tt = [list(col) for col in zip(*t)]
    _, u_up = _hnf_upper(tt)
    v = [list(col) for col in zip(*u_up)]
    v_inv = _integer_inverse(v)
    r = [[sum(v_inv[i][k] * basis[k][j] for k in range(n)) for j in range(len(basis[0]))] for i in range(n)]
    ortho, _ = _gram_schmidt(r)
    for i in range(1, n):
        for j in range(i - 1, -1, -1):
            m = Fraction(_dot(r[i], ortho[j])) / _dot(ortho[j], ortho[j])
            c = math.floor(m + Fraction(1, 2))
            if c:
                r[i] = [a - c * bb for a, bb in zip(r[i], r[j])]
    return r


@dataclass(frozen=True)
class NormBoundResult:
    basis: tuple[tuple[int, ...], ...]
    max_norm: float
    max_norm_sq: int
    bound: float
    bound_ok: bool
    route: str


def basis_with_norm_bound(
    lattice: RelationLattice | Matrix,
    li_vectors,
    M: int,
    H: int,
    delta: Fraction = Fraction(99, 100),
) -> NormBoundResult:
    """Basis of ``lattice`` checked against the bound ``dim^{3/2} M H``.

    ``li_vectors`` are ``dim`` independent vectors of sup-norm ``<= H`` from
    a lattice ``L1`` with ``M * L1`` inside ``lattice``. The basis is the LLL
    reduction of the HNF of ``[basis; M * li_vectors]``. If that basis misses
    the bound, the independent vectors ``M * li`` are converted into a basis
    directly (``route = "independent-vectors"``), which meets it by
    construction. The comparison is exact: ``max |b|^2 <= dim^3 M^2 H^2``.
    """
    basis = [list(r) for r in (lattice.basis if isinstance(lattice, RelationLattice) else lattice)]
    n = len(basis)
    li = [list(map(int, v)) for v in li_vectors]
    if len(li) != n or _rank(li) != n:
        raise InputError(f"need {n} linearly independent vectors")
    if any(abs(x) > H for v in li for x in v):
        raise InputError(f"independent vectors exceed sup-norm {H}")
    scaled = [[M * x for x in v] for v in li]
    stacked = hnf_basis(basis + scaled)
    if stacked != hnf_basis(basis):
        raise InputError("M * li_vectors do not lie in the lattice")
    reduced = lll_reduce(stacked, delta)
    bound_sq = n**3 * M * M * H * H
    route = "lll"
    max_sq = max(_dot(r, r) for r in reduced)
    if max_sq > bound_sq:
        reduced = basis_from_independent_vectors(stacked, scaled)
        route = "independent-vectors"
        max_sq = max(_dot(r, r) for r in reduced)
    return NormBoundResult(
        tuple(tuple(r) for r in reduced),
        math.sqrt(max_sq),
        max_sq,
        n**1.5 * M * H,
        max_sq <= bound_sq,
        route,
    )


# -- hyperplanes through unit cubes ----------------------------------------


def _integer_normal(normal) -> list[int]:
    fr = [Fraction(x) for x in normal]
    if not any(fr):
        raise InputError("normal vector must be nonzero")
    den = math.lcm(*(f.denominator for f in fr))
    return [int(f * den) for f in fr]


def hyperplane_cube_count(d: int, L: int, normal) -> tuple[int, int]:
    """Unit cubes of ``[-L, L]^d`` whose closed body meets ``{x : <x, normal> = 0}``.

    A cube ``[c, c+1]`` meets the hyperplane iff the linear form takes both
    signs (or zero) on its corners; the minimum over corners is
    ``sum_i min(n_i c_i, n_i (c_i+1))`` and the maximum exceeds it by
    ``|n|_1``. Returns ``(count, (d+1)(2L)^{d-1})``.
    """
    if len(normal) != d:
        raise InputError("normal has the wrong dimension")
    if L < 1 or d < 1:
        raise InputError("need d >= 1 and L >= 1")
    vec = _integer_normal(normal)
    count = int(hyperplane_cube_counts(d, L, [vec])[0])
    return count, (d + 1) * (2 * L) ** (d - 1)


def hyperplane_cube_counts(d: int, L: int, normals: np.ndarray) -> np.ndarray:
    """Vectorised :func:`hyperplane_cube_count` for integer normals (one per row)."""
    normals = [[int(v) for v in vec] for vec in normals]
    wide = max(abs(v) for vec in normals for v in vec) * (L + 1) * d >= 2**61
    out = np.zeros(len(normals), dtype=np.int64)
    half = d // 2
    for idx, vec in enumerate(normals):
        l1 = sum(abs(v) for v in vec)
        cs = range(-L, L)
        lows = [[min(v * c, v * (c + 1)) for c in cs] for v in vec]
        if wide:
            total = 0
            for combo in product(*lows):
                s = sum(combo)
                total += -l1 <= s <= 0
            out[idx] = total
            continue
        left = np.zeros(1, dtype=np.int64)
        for ax in lows[:half]:
            left = (left[:, None] + np.array(ax, dtype=np.int64)[None, :]).reshape(-1)
        right = np.zeros(1, dtype=np.int64)
        for ax in lows[half:]:
            right = (right[:, None] + np.array(ax, dtype=np.int64)[None, :]).reshape(-1)
        right.sort()
        # count pairs with -l1 <= a + b <= 0
        hi = np.searchsorted(right, -left, side="right")
        lo = np.searchsorted(right, -l1 - left, side="left")
        out[idx] = int((hi - lo).sum())
    return out
