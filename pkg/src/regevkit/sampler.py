"""Seeded random inputs: small primes not dividing N, and uniform units.

Streams are addressed by ``(seed, path)``. The path is hashed together with
the seed through numpy's ``SeedSequence`` so that distinct paths give
independent generators, and the resulting state seeds a ``random.Random``
(whose big-integer ``randrange`` is stable across platforms).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .arith import is_probable_prime
from .errors import InputError

__all__ = [
    "SeededStream",
    "sample_primes",
    "sample_primes_unbounded",
    "sample_unit",
    "default_k_draws",
]


@dataclass(frozen=True)
class SeededStream:
    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit nonnegative integer")
        if any(p < 0 for p in self.path):
            raise InputError("stream path entries must be nonnegative")

    def child(self, *indices: int) -> "SeededStream":
        return SeededStream(self.seed, self.path + tuple(indices))

    def rng(self) -> random.Random:
        """A fresh generator; equal streams always produce equal draws."""
        words = np.random.SeedSequence(self.seed, spawn_key=self.path).generate_state(
            4, dtype=np.uint64
        )
        return random.Random(int.from_bytes(words.tobytes(), "little"))

    def label(self) -> str:
        return "/".join([str(self.seed), *map(str, self.path)])


def default_k_draws(d: int) -> int:
    return d**4


def sample_primes(
    n: int,
    d: int,
    x: int,
    rng: random.Random,
    k_draws: int | None = None,
    rounds: int = 64,
) -> tuple[int, ...] | None:
    """Draw ``k_draws`` uniform integers in ``[1, x]``; keep the first ``d`` primes not dividing ``n``.

    Returns ``None`` when fewer than ``d`` draws qualify. Every draw is made
    up front, so the outcome does not depend on how many candidates qualify
    early.
    """
    if x < 2:
        raise InputError("prime bound x must be >= 2")
    if d < 1:
        raise InputError("d must be positive")
    k = default_k_draws(d) if k_draws is None else k_draws
    if k < d:
        raise InputError(f"k_draws={k} is smaller than d={d}")
    draws = [rng.randrange(1, x + 1) for _ in range(k)]
    found: list[int] = []
    for c in draws:
        if c <= n and n % c == 0:
            continue
        if is_probable_prime(c, rounds, rng):
            found.append(c)
            if len(found) == d:
                return tuple(found)
    return None


def sample_primes_unbounded(
    n: int, d: int, x: int, rng: random.Random, rounds: int = 64, max_draws: int | None = None
) -> tuple[tuple[int, ...], int]:
    """Draw until ``d`` qualifying primes are found; return them with the draw count.

    Equivalent in distribution to :func:`sample_primes` conditioned on
    success; used when ``x`` is so large that ``d^4`` draws rarely suffice.
    """
    if x < 2 or d < 1:
        raise InputError("need x >= 2 and d >= 1")
    found: list[int] = []
    draws = 0
    while len(found) < d:
        if max_draws is not None and draws >= max_draws:
            raise InputError(f"no {d} primes found in {max_draws} draws")
        c = rng.randrange(1, x + 1)
        draws += 1
        if c <= n and n % c == 0:
            continue
        if is_probable_prime(c, rounds, rng):
            found.append(c)
    return tuple(found), draws


def sample_unit(n: int, rng: random.Random) -> int:
    """Uniform element of (Z/nZ)^x by rejection from ``[1, n-1]``."""
    if n < 3:
        raise InputError("modulus must be >= 3")
    while True:
        a = rng.randrange(1, n)
        if math.gcd(a, n) == 1:
            return a
