"""Model parameters and the exact moment functions shared by every other module.

The angular averages, sphere moments and the collision-gap constant are all
small factorial formulas.  They are evaluated in exact rational arithmetic
(`fractions.Fraction`) and converted to float only at the API boundary, so the
spectral assembly downstream never sees cancellation error.

All rate-like quantities carry units of 1/time; velocities are in units where
the equilibrium variance is 1/beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


@dataclass(frozen=True)
class Params:
    """Model constants: particle count N, collision rate, thermostat rate, inverse temperature."""

    n_particles: int
    lam: float = 1.0
    mu: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ValueError(f"n_particles must be an integer >= 1, got {self.n_particles}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.mu < 0.0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class MultiIndex:
    """Tuple of nonnegative integers indexing monomial/Hermite bases; |alpha| = sum of entries."""

    entries: tuple[int, ...]

    def __post_init__(self):
        e = tuple(int(x) for x in self.entries)
        if any(x < 0 for x in e):
            raise ValueError(f"multi-index entries must be nonnegative, got {e}")
        object.__setattr__(self, "entries", e)

    @property
    def weight(self) -> int:
        return sum(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]


def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1."""
    if n < -1:
        raise ValueError(f"double factorial undefined for {n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@lru_cache(maxsize=None)
def hermite_eigenvalue_s_exact(alpha: int) -> Fraction:
    """Angular average of cos^alpha over a full period, as an exact rational.

    Zero for odd alpha; (2a)!/(2^(2a) a!^2) for alpha = 2a.  Strictly decreasing
    along even orders and -> 0.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha % 2:
        return Fraction(0)
    a = alpha // 2
    return Fraction(math.factorial(alpha), 4**a * math.factorial(a) ** 2)


def hermite_eigenvalue_s(alpha: int) -> float:
    return float(hermite_eigenvalue_s_exact(alpha))


@lru_cache(maxsize=None)
def angular_moment_exact(p: int, q: int) -> Fraction:
    """Full-period average of cos^p * sin^q: zero unless p and q are both even,
    else (p-1)!!(q-1)!!/(p+q)!!."""
    if p < 0 or q < 0:
        raise ValueError(f"powers must be >= 0, got ({p}, {q})")
    if p % 2 or q % 2:
        return Fraction(0)
    return Fraction(double_factorial(p - 1) * double_factorial(q - 1), double_factorial(p + q))


def angular_moment(p: int, q: int) -> float:
    return float(angular_moment_exact(p, q))


def kac_gap_Lambda(n_particles: int) -> float:
    """Gap of the pair-collision operator off the radial subspace: (N+2)/(2(N-1))."""
    if n_particles < 2:
        raise ValueError(f"pair collisions need N >= 2, got {n_particles}")
    return 0.5 * (n_particles + 2) / (n_particles - 1)


def kac_gap_Lambda_exact(n_particles: int) -> Fraction:
    if n_particles < 2:
        raise ValueError(f"pair collisions need N >= 2, got {n_particles}")
    return Fraction(n_particles + 2, 2 * (n_particles - 1))


def sphere_moment_Gamma_exact(alpha) -> Fraction:
    """Moment of v_1^(2a_1)...v_N^(2a_N) over the unit sphere with normalized
    surface measure: prod (2a_i - 1)!! / [N (N+2) ... (N + 2|a| - 2)]."""
    entries = tuple(int(x) for x in alpha)
    if not entries:
        raise ValueError("multi-index must have at least one entry")
    if any(x < 0 for x in entries):
        raise ValueError(f"entries must be nonnegative, got {entries}")
    n = len(entries)
    weight = sum(entries)
    num = 1
    for a in entries:
        num *= double_factorial(2 * a - 1)
    den = 1
    for k in range(weight):
        den *= n + 2 * k
    return Fraction(num, den)


def sphere_moment_Gamma(alpha) -> float:
    return float(sphere_moment_Gamma_exact(alpha))


def multinomial(total: int, parts) -> int:
    """total! / prod(parts_i!); parts must sum to total."""
    parts = tuple(parts)
    if sum(parts) != total:
        raise ValueError(f"parts {parts} do not sum to {total}")
    out = math.factorial(total)
    for p in parts:
        out //= math.factorial(p)
    return out


def compositions(total: int, parts: int) -> tuple[tuple[int, ...], ...]:
    """All weak compositions of `total` into `parts` slots, descending lexicographic."""
    if parts < 1:
        raise ValueError("need at least one slot")

    def rec(remaining, slots):
        if slots == 1:
            yield (remaining,)
            return
        for v in range(remaining, -1, -1):
            for rest in rec(remaining - v, slots - 1):
                yield (v,) + rest

    return tuple(rec(total, parts))


def partitions(total: int, max_parts: int) -> tuple[tuple[int, ...], ...]:
    """Partitions of `total` into at most `max_parts` parts, zero-padded to
    length max_parts, descending entries, descending lexicographic order."""
    if max_parts < 1:
        raise ValueError("need at least one slot")

    def rec(remaining, cap, slots):
        if remaining == 0:
            yield (0,) * slots
            return
        if slots == 0:
            return
        for v in range(min(remaining, cap), 0, -1):
            for rest in rec(remaining - v, v, slots - 1):
                yield (v,) + rest

    return tuple(rec(total, total, max_parts))


def orbit_size(index, n_particles: int) -> int:
    """Number of distinct permutations of `index` zero-padded to length n_particles."""
    entries = tuple(int(x) for x in index)
    if len(entries) > n_particles:
        raise ValueError("index longer than particle count")
    entries = entries + (0,) * (n_particles - len(entries))
    counts: dict[int, int] = {}
    for v in entries:
        counts[v] = counts.get(v, 0) + 1
    out = math.factorial(n_particles)
    for c in counts.values():
        out //= math.factorial(c)
    return out


def gaussian_moment(order: int, variance: float, mean: float = 0.0) -> float:
    """k-th raw moment of a normal distribution."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    out = 0.0
    for j in range(0, order + 1, 2):
        out += (
            math.comb(order, j)
            * double_factorial(j - 1)
            * variance ** (j // 2)
            * mean ** (order - j)
        )
    return out
