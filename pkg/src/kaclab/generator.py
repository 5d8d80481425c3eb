"""Assembly of the thermostat + collision generator on even Hermite sectors.

The generator acts on mean-zero functions of the N velocities; on the sector
of degree-2l products of (monic, probabilists') Hermite polynomials it is a
finite symmetric matrix.  Three operators are assembled:

  L_T  -- thermostat sum, diagonal with entries sum_i (1 - s_{2 alpha_i});
  L_K  -- pair-collision operator N(I - Q), whose kernel on each sector is the
          single radialized polynomial of that degree;
  L_R  -- Lambda_N (I - B) with B the rank-one projection onto that radial
          direction, the comparison operator that yields closed-form bounds.

The collision operator is expanded on monomials with exact rational
coefficients and transferred verbatim to the Hermite basis (the transfer is an
identity of coefficients for any operator preserving homogeneous even degree).
Matrices are expressed in the orthonormalized basis, optionally reduced to the
permutation-symmetric subspace, and stay symmetric to ~1e-15.

The first spectral gap is mu/2 with eigenfunction sum_i (v_i^2 - 1/beta); the
second gap is the lower root of an explicit quadratic.  Both are recomputed
here by independent routes and cross-checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core import (
    MultiIndex,
    Params,
    angular_moment_exact,
    compositions,
    hermite_eigenvalue_s_exact,
    kac_gap_Lambda,
    multinomial,
    orbit_size,
    partitions,
    sphere_moment_Gamma_exact,
)

DEFAULT_L_MAX = 4
AGREEMENT_TOL = 1e-10


class AssemblyError(RuntimeError):
    """Cross-route disagreement or a malformed sector matrix: an assembly bug."""


@dataclass(frozen=True)
class SectorBasis:
    """Ordered basis of the even sector of degree 2l.

    `indices` lists the half-exponents alpha (|alpha| = l): all weak
    compositions for the full sector, or partition representatives when
    restricted to permutation-symmetric combinations.
    """

    n_particles: int
    degree: int
    indices: tuple[MultiIndex, ...]
    symmetric: bool

    @property
    def level(self) -> int:
        return self.degree // 2

    @property
    def dim(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class SectorMatrix:
    basis: SectorBasis
    entries: np.ndarray
    operator_tag: str

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


def sector_basis(n_particles: int, level: int, symmetric: bool = False) -> SectorBasis:
    """Basis of the degree-2*level sector for N particles."""
    if n_particles < 1:
        raise ValueError("need at least one particle")
    if level < 0:
        raise ValueError("level must be >= 0")
    idx = partitions(level, n_particles) if symmetric else compositions(level, n_particles)
    return SectorBasis(
        n_particles=n_particles,
        degree=2 * level,
        indices=tuple(MultiIndex(t) for t in idx),
        symmetric=symmetric,
    )


def _norm2(alpha: tuple[int, ...]) -> int:
    # squared Hermite norm of the monic product: prod (2 a_i)!
    out = 1
    for a in alpha:
        out *= math.factorial(2 * a)
    return out


@lru_cache(maxsize=None)
def _pair_rotation_avg(ai: int, aj: int) -> tuple[tuple[tuple[int, int], Fraction], ...]:
    """Average over the rotation angle of x^(2ai) y^(2aj) composed with the
    pair rotation (x, y) -> (x cos + y sin, -x sin + y cos), expanded in even
    monomials {(bi, bj): coefficient of x^(2bi) y^(2bj)}."""
    acc: dict[tuple[int, int], Fraction] = {}
    for r in range(2 * ai + 1):
        for t in range(2 * aj + 1):
            if (r + t) % 2:
                continue
            ang = angular_moment_exact(r + 2 * aj - t, 2 * ai - r + t)
            if not ang:
                continue
            c = math.comb(2 * ai, r) * math.comb(2 * aj, t) * ang
            if t % 2:
                c = -c
            key = ((r + t) // 2, (2 * ai + 2 * aj - r - t) // 2)
            acc[key] = acc.get(key, Fraction(0)) + c
    return tuple(sorted(acc.items()))


def apply_Q_monomial(exponents, l_max: int = DEFAULT_L_MAX) -> dict[tuple[int, ...], Fraction]:
    """Expand the pair-collision average of the monomial v^exponents.

    `exponents` is the raw exponent tuple (all entries even); the result maps
    even exponent tuples of the same total degree to exact coefficients.
    """
    e = tuple(int(x) for x in exponents)
    if any(x < 0 for x in e):
        raise ValueError(f"exponents must be nonnegative, got {e}")
    if any(x % 2 for x in e):
        raise ValueError(f"only even monomials are handled, got exponents {e}")
    n = len(e)
    if n < 2:
        raise ValueError("pair collisions need at least two variables")
    alpha = tuple(x // 2 for x in e)
    level = sum(alpha)
    if level > l_max:
        raise ValueError(f"degree {2 * level} exceeds 2*l_max = {2 * l_max}")

    weight = Fraction(1, math.comb(n, 2))
    acc: dict[tuple[int, ...], Fraction] = {}
    for i in range(n - 1):
        for j in range(i + 1, n):
            for (bi, bj), c in _pair_rotation_avg(alpha[i], alpha[j]):
                b = list(alpha)
                b[i], b[j] = bi, bj
                key = tuple(2 * x for x in b)
                acc[key] = acc.get(key, Fraction(0)) + weight * c
    return acc


def _q_columns(alpha: tuple[int, ...], l_max: int) -> dict[tuple[int, ...], Fraction]:
    # half-exponent view of apply_Q_monomial
    raw = apply_Q_monomial(tuple(2 * x for x in alpha), l_max=l_max)
    return {tuple(x // 2 for x in k): v for k, v in raw.items()}


def _b_columns(alpha: tuple[int, ...], level: int) -> dict[tuple[int, ...], Fraction]:
    # radial projection on monomials: B[v^(2 alpha)] = Gamma(alpha) * r^(2l)
    gamma = sphere_moment_Gamma_exact(alpha)
    n = len(alpha)
    return {
        beta: gamma * multinomial(level, beta)
        for beta in compositions(level, n)
    }


def _assemble(basis: SectorBasis, columns, scale: float, subtract_from_identity: bool,
              tag: str) -> SectorMatrix:
    """Matrix of scale*(I - A) (or scale*A) in the orthonormalized Hermite basis,
    `columns` giving the exact monomial expansion of A per basis representative."""
    idx = [tuple(mi.entries) for mi in basis.indices]
    dim = len(idx)
    n = basis.n_particles
    mat = np.zeros((dim, dim))
    if basis.symmetric:
        pos = {p: k for k, p in enumerate(idx)}
        orb = {p: orbit_size(p, n) for p in idx}
        n2 = {p: _norm2(p) for p in idx}
        for col, p in enumerate(idx):
            grouped: dict[tuple[int, ...], Fraction] = {}
            for beta, c in columns(p).items():
                q = tuple(sorted(beta, reverse=True))
                grouped[q] = grouped.get(q, Fraction(0)) + c
            for q, s in grouped.items():
                ratio = Fraction(orb[p] * n2[q], orb[q] * n2[p])
                mat[pos[q], col] = float(s) * math.sqrt(float(ratio))
    else:
        pos = {a: k for k, a in enumerate(idx)}
        n2 = {a: _norm2(a) for a in idx}
        for col, a in enumerate(idx):
            for beta, c in columns(a).items():
                ratio = Fraction(n2[beta], n2[a])
                mat[pos[beta], col] = float(c) * math.sqrt(float(ratio))
    if subtract_from_identity:
        mat = scale * (np.eye(dim) - mat)
    else:
        mat = scale * mat
    asym = float(np.max(np.abs(mat - mat.T))) if dim else 0.0
    if asym > 1e-12 * max(1.0, float(np.max(np.abs(mat))) if dim else 1.0):
        raise AssemblyError(f"{tag} sector matrix asymmetric by {asym:.3e}")
    return SectorMatrix(basis=basis, entries=mat, operator_tag=tag)


def build_LT(basis: SectorBasis) -> SectorMatrix:
    """Thermostat sum: diagonal with sigma_{2 alpha} = sum_i (1 - s_{2 alpha_i})."""
    diag = [
        float(sum(1 - hermite_eigenvalue_s_exact(2 * a) for a in mi.entries))
        for mi in basis.indices
    ]
    return SectorMatrix(basis=basis, entries=np.diag(diag), operator_tag="L_T")


def build_LK(basis: SectorBasis) -> SectorMatrix:
    """Pair-collision operator N(I - Q) on the sector."""
    if basis.n_particles < 2:
        raise ValueError("pair collisions need N >= 2")
    level = basis.level
    l_max = max(DEFAULT_L_MAX, level)
    return _assemble(
        basis,
        lambda a: _q_columns(a, l_max),
        scale=float(basis.n_particles),
        subtract_from_identity=True,
        tag="L_K",
    )


def build_LR(basis: SectorBasis) -> SectorMatrix:
    """Comparison operator Lambda_N (I - B), B the radial rank-one projection."""
    if basis.n_particles < 2:
        raise ValueError("pair collisions need N >= 2")
    level = basis.level
    return _assemble(
        basis,
        lambda a: _b_columns(a, level),
        scale=kac_gap_Lambda(basis.n_particles),
        subtract_from_identity=True,
        tag="L_R",
    )


def build_B(basis: SectorBasis) -> SectorMatrix:
    """The radial projection B itself (for rank / idempotency checks)."""
    level = basis.level
    return _assemble(
        basis,
        lambda a: _b_columns(a, level),
        scale=1.0,
        subtract_from_identity=False,
        tag="B",
    )


def build_generator(basis: SectorBasis, params: Params, comparison: bool = False) -> SectorMatrix:
    """mu*L_T + lam*L_K on the sector (lam*L_R instead with comparison=True)."""
    lt = build_LT(basis)
    lk = build_LR(basis) if comparison else build_LK(basis)
    entries = params.mu * lt.entries + params.lam * lk.entries
    return SectorMatrix(basis=basis, entries=entries, operator_tag="full")


def radial_direction(basis: SectorBasis) -> np.ndarray:
    """Unit coefficient vector of the degree-2l radialized polynomial (the
    Hermite transfer of (sum v_i^2)^l) in the basis' orthonormal coordinates."""
    level = basis.level
    vec = np.zeros(basis.dim)
    for k, mi in enumerate(basis.indices):
        a = tuple(mi.entries)
        coef = float(multinomial(level, a)) * math.sqrt(float(_norm2(a)))
        if basis.symmetric:
            coef *= math.sqrt(orbit_size(a, basis.n_particles))
        vec[k] = coef
    return vec / np.linalg.norm(vec)


def energy_square_direction(basis: SectorBasis) -> np.ndarray:
    """Unit coefficient vector of sum_j v_j^4 - 3/(N+2) (sum_j v_j^2)^2 on the
    degree-4 sector: the collision operator's nonzero eigendirection there."""
    if basis.level != 2:
        raise ValueError("defined on the degree-4 sector only")
    n = basis.n_particles
    mono = {
        (2,) + (0,) * (n - 1): 1.0 - 3.0 / (n + 2),
        (1, 1) + (0,) * (n - 2): -6.0 / (n + 2),
    }
    vec = np.zeros(basis.dim)
    for k, mi in enumerate(basis.indices):
        a = tuple(mi.entries)
        key = tuple(sorted(a, reverse=True))
        if key not in mono:
            continue
        coef = mono[key] * math.sqrt(float(_norm2(a)))
        if basis.symmetric:
            coef *= math.sqrt(orbit_size(a, n))
        vec[k] = coef
    return vec / np.linalg.norm(vec)


@dataclass(frozen=True)
class FirstGap:
    value: float
    eigenvector: np.ndarray  # coefficients of H_2(v_i) per particle: the function sum_i (v_i^2 - 1/beta)
    eigenvalues_checked: np.ndarray


def first_gap(params: Params, tol: float = AGREEMENT_TOL) -> FirstGap:
    """Smallest nonzero eigenvalue of the generator: mu/2, eigenfunction
    sum_i (v_i^2 - 1/beta).  Verified against a fresh eigensolve of the
    assembled operator on the symmetric degree-2 and degree-4 sectors."""
    n = params.n_particles
    if n < 2:
        raise ValueError("gap computation needs N >= 2")
    closed = params.mu / 2.0
    g2 = build_generator(sector_basis(n, 1, symmetric=True), params)
    g4 = build_generator(sector_basis(n, 2, symmetric=True), params)
    ev2 = g2.eigenvalues()
    ev4 = g4.eigenvalues()
    allev = np.sort(np.concatenate([ev2, ev4]))
    if params.mu > 0:
        if abs(allev[0] - closed) > tol:
            raise AssemblyError(
                f"eigensolve gap {allev[0]!r} disagrees with closed form {closed!r}"
            )
        if ev4.min() <= closed + tol:
            raise AssemblyError("first-gap eigenvector not isolated in the degree-2 sector")
    else:
        # thermostat off: the radial kernel is degenerate across sectors
        if abs(allev[0]) > tol or abs(allev[1]) > tol:
            raise AssemblyError("expected a degenerate kernel at mu = 0")
    return FirstGap(value=closed, eigenvector=np.ones(n), eigenvalues_checked=allev)


def _second_gap_quadratic_coeffs(params: Params) -> tuple[float, float]:
    n = params.n_particles
    lam_L = params.lam * kac_gap_Lambda(n)
    b = lam_L + 13.0 * params.mu / 8.0
    c = params.mu * (lam_L + 5.0 * params.mu / 8.0) - (3.0 / 8.0) * lam_L * params.mu * (
        3.0 / (n + 2)
    )
    return b, c


def _lower_root(b: float, c: float) -> tuple[float, float]:
    disc = b * b - 4.0 * c
    if disc < 0:
        if disc < -1e-12 * max(1.0, b * b):
            raise AssemblyError(f"complex roots in gap quadratic (disc={disc!r})")
        disc = 0.0
    root = math.sqrt(disc)
    hi = 0.5 * (b + root)
    lo = c / hi if hi != 0 else 0.5 * (b - root)  # stable for the smaller root
    return lo, hi


def second_gap_quadratic(params: Params) -> float:
    """Lower root of the explicit second-gap quadratic."""
    b, c = _second_gap_quadratic_coeffs(params)
    return _lower_root(b, c)[0]


def second_gap_matrix(params: Params) -> np.ndarray:
    """Closed-form 2x2 matrix of the generator on the symmetric degree-4 sector,
    basis ordered (pair H_2 H_2 combination, single H_4 sum)."""
    n = params.n_particles
    lam, mu = params.lam, params.mu
    off = -math.sqrt(3.0) * lam / (2.0 * math.sqrt(n - 1.0))
    return np.array(
        [
            [mu + 3.0 * lam / (2.0 * (n - 1)), off],
            [off, 5.0 * mu / 8.0 + lam / 2.0],
        ]
    )


def second_gap_limit(params: Params) -> float:
    """Large-N limit of the second gap: min(lam/2 + 5 mu/8, mu)."""
    return min(params.lam / 2.0 + 5.0 * params.mu / 8.0, params.mu)


def second_gap_pair(params: Params) -> tuple[float, float]:
    """Both roots of the second-gap quadratic (lower, upper).  Which branch an
    eigenfunction class follows for extreme lam/mu ratios is not decided here."""
    b, c = _second_gap_quadratic_coeffs(params)
    return _lower_root(b, c)


def second_gap(params: Params, tol: float = AGREEMENT_TOL) -> float:
    """Second spectral gap by three independent routes (quadratic formula,
    closed-form 2x2 eigendecomposition, assembled symmetric degree-4 sector),
    required to agree to `tol`."""
    if params.n_particles < 2:
        raise ValueError("second gap needs N >= 2")
    if not params.mu > 0:
        raise ValueError("second gap needs mu > 0")
    r_quad = second_gap_quadratic(params)
    r_mat = float(np.linalg.eigvalsh(second_gap_matrix(params))[0])
    sect = build_generator(sector_basis(params.n_particles, 2, symmetric=True), params)
    r_sector = float(sect.eigenvalues()[0])
    values = (r_quad, r_mat, r_sector)
    if max(values) - min(values) > tol:
        raise AssemblyError(
            "second-gap routes disagree: "
            f"quadratic={r_quad!r} matrix={r_mat!r} sector={r_sector!r}"
        )
    return r_quad


def sector_gap_bound(level: int, params: Params) -> float:
    """Closed-form lower bound x_l for the smallest eigenvalue of
    mu*L_T + lam*L_R on the degree-2l sector."""
    if level < 1:
        raise ValueError("level must be >= 1")
    n = params.n_particles
    lam_L = params.lam * kac_gap_Lambda(n)
    mu = params.mu
    s = float(hermite_eigenvalue_s_exact(2 * level))
    n_gamma = n * float(sphere_moment_Gamma_exact((level,) + (0,) * (n - 1)))
    b = lam_L + (2.0 - s) * mu
    c = (1.0 - s) * mu * mu + lam_L * mu - lam_L * mu * s * n_gamma
    return _lower_root(b, c)[0]
