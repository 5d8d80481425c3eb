"""Entropy functionals and the smoothing operators behind the decay bounds.

Functions of one velocity are represented on a uniform grid (half width 8, in
units of the equilibrium standard deviation, 2048 nodes by default) and
integrated with the trapezoid rule; the angle average uses a 256-point
periodic rule (spectrally exact for trigonometric polynomials) and the
Gaussian partner integral a 32-node Gauss-Hermite rule.  Ratio-type functions
G = f/g live against the standard Gaussian weight g; physical velocities are
rescaled by sqrt(beta) before estimation.

Off-grid evaluation (the quadratures reach past the grid edge) extrapolates
log G by the one-sided parabola through the three edge nodes, which is exact
for Gaussian-family ratios, and falls back to edge clamping when the edge
values are not positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from .core import Params
from .simulator import InitialCondition, initial_relative_entropy, run

GRID_POINTS = 2048
GRID_HALF_WIDTH = 8.0
THETA_NODES = 256
GAUSS_NODES = 32
_STENCIL = 8
_LOG_FLOOR = 1e-300


class EstimatorError(RuntimeError):
    """Not enough (or degenerate) data for a reliable entropy estimate."""


class EntropyCheckError(RuntimeError):
    """A proved inequality failed numerically beyond tolerance."""


def standard_gaussian(v: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.asarray(v) ** 2) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Uniform velocity grid with values; represents a density f or a ratio f/g.

    `extension` is an optional callable giving exact values beyond the grid
    edge (set automatically by `from_function`); without it, off-grid values
    come from a one-sided log-quadratic tail fit, which is exact for
    Gaussian-family ratios, with edge clamping as the last resort.
    """

    nodes: np.ndarray
    values: np.ndarray
    extension: object = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < _STENCIL:
            raise ValueError(f"grid needs at least {_STENCIL} nodes")
        if values.shape != nodes.shape:
            raise ValueError("nodes and values must match")
        spacing = np.diff(nodes)
        if not np.allclose(spacing, spacing[0], rtol=1e-12, atol=0.0):
            raise ValueError("grid must be uniform")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.nodes))

    def normalized(self) -> "DensityGrid":
        z = self.integral()
        if z <= 0:
            raise ValueError("cannot normalize a grid with nonpositive mass")
        ext = self.extension
        return DensityGrid(
            nodes=self.nodes,
            values=self.values / z,
            extension=None if ext is None else (lambda v: np.asarray(ext(v)) / z),
        )

    @classmethod
    def uniform_nodes(cls, n: int = GRID_POINTS, half_width: float = GRID_HALF_WIDTH) -> np.ndarray:
        return np.linspace(-half_width, half_width, n)

    @classmethod
    def from_function(cls, fn, n: int = GRID_POINTS,
                      half_width: float = GRID_HALF_WIDTH) -> "DensityGrid":
        nodes = cls.uniform_nodes(n, half_width)
        return cls(nodes=nodes, values=np.asarray(fn(nodes), dtype=float), extension=fn)

    @classmethod
    def gaussian(cls, variance: float = 1.0, mean: float = 0.0, n: int = GRID_POINTS,
                 half_width: float = GRID_HALF_WIDTH) -> "DensityGrid":
        def fn(v):
            v = np.asarray(v, dtype=float)
            return np.exp(-((v - mean) ** 2) / (2 * variance)) / math.sqrt(
                2 * math.pi * variance
            )

        return cls.from_function(fn, n=n, half_width=half_width)


_TAIL_WINDOW = 128  # one-sided fit window, ~1 velocity unit on the default grid


def _tail_model(nodes: np.ndarray, values: np.ndarray, left: bool):
    """Least-squares log-quadratic over the edge window, or None for clamping."""
    sl = slice(0, _TAIL_WINDOW) if left else slice(-_TAIL_WINDOW, None)
    x, y = nodes[sl], values[sl]
    edge = values[0] if left else values[-1]
    if np.any(y <= 0.0) or not np.all(np.isfinite(y)):
        return None, edge
    coef = np.polyfit(x, np.log(y), 2)
    return coef, edge


def evaluate(grid: DensityGrid, points: np.ndarray) -> np.ndarray:
    """Evaluate the gridded function at arbitrary points: 8-point Lagrange
    interpolation inside the grid, the exact extension or tail model outside."""
    nodes, values = grid.nodes, grid.values
    pts = np.asarray(points, dtype=float)
    flat = pts.ravel()
    out = np.empty_like(flat)
    h = grid.spacing
    x0 = nodes[0]
    n = nodes.size

    inside = (flat >= x0) & (flat <= nodes[-1])
    if np.any(inside):
        p = flat[inside]
        pos = (p - x0) / h
        snapped = np.round(pos)
        near = np.abs(pos - snapped) < 5e-9
        pos[near] = snapped[near]
        base = np.clip(np.floor(pos).astype(np.int64) - (_STENCIL // 2 - 1), 0, n - _STENCIL)
        t = pos - base
        acc = np.zeros_like(p)
        for m in range(_STENCIL):
            w = np.ones_like(p)
            for k in range(_STENCIL):
                if k == m:
                    continue
                w *= (t - k) / (m - k)
            acc += w * values[base + m]
        out[inside] = acc

    outside = ~inside
    if np.any(outside):
        if grid.extension is not None:
            out[outside] = np.asarray(grid.extension(flat[outside]), dtype=float)
        else:
            for is_left, mask in ((True, flat < x0), (False, flat > nodes[-1])):
                if not np.any(mask):
                    continue
                coef, edge = _tail_model(nodes, values, left=is_left)
                if coef is None:
                    out[mask] = edge
                else:
                    logs = np.clip(np.polyval(coef, flat[mask]), -745.0, 700.0)
                    out[mask] = np.exp(logs)
    return out.reshape(pts.shape)


def _gauss_nodes(n: int = GAUSS_NODES):
    x, w = hermite_e.hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


def ou_apply(G: DensityGrid, s: float, n_gauss: int = GAUSS_NODES) -> DensityGrid:
    """Gaussian smoothing semigroup at time s: the value at v is the Gaussian
    average of G(e^-s v + sqrt(1 - e^-2s) w)."""
    if s < 0:
        raise ValueError("s must be >= 0")
    if s == 0.0:
        return DensityGrid(nodes=G.nodes, values=G.values.copy())
    c = math.exp(-s)
    spread = math.sqrt(max(0.0, 1.0 - c * c))
    x, w = _gauss_nodes(n_gauss)
    pts = c * G.nodes[:, None] + spread * x[None, :]
    vals = evaluate(G, pts) @ w
    return DensityGrid(nodes=G.nodes, values=vals)


def t_apply(G: DensityGrid, n_theta: int = THETA_NODES,
            n_gauss: int = GAUSS_NODES) -> DensityGrid:
    """Thermostat averaging operator: Gaussian partner plus uniform rotation
    angle.  Output is even in v; odd input is annihilated."""
    x, w = _gauss_nodes(n_gauss)
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    acc = np.zeros_like(G.nodes)
    for th in theta:
        pts = math.cos(th) * G.nodes[:, None] + math.sin(th) * x[None, :]
        acc += evaluate(G, pts) @ w
    return DensityGrid(nodes=G.nodes, values=acc / n_theta)


def quarter_average_apply(G: DensityGrid, n_theta: int = 64,
                          n_gauss: int = GAUSS_NODES) -> DensityGrid:
    """Same operator with the angle averaged over a quarter period only;
    agrees with t_apply on even functions."""
    t_gl, w_gl = np.polynomial.legendre.leggauss(n_theta)
    theta = 0.25 * math.pi * (t_gl + 1.0)
    w_theta = w_gl / 2.0  # normalized average over [0, pi/2]
    x, w = _gauss_nodes(n_gauss)
    acc = np.zeros_like(G.nodes)
    for th, wt in zip(theta, w_theta):
        pts = math.cos(th) * G.nodes[:, None] + math.sin(th) * x[None, :]
        acc += wt * (evaluate(G, pts) @ w)
    return DensityGrid(nodes=G.nodes, values=acc)


def _xlogx(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log(a[pos])
    return out


def gauss_weighted_entropy(G: DensityGrid) -> float:
    """The entropy functional of a ratio: integral of g * G log G."""
    g = standard_gaussian(G.nodes)
    return float(np.trapezoid(g * _xlogx(G.values), G.nodes))


def gauss_inner(a: DensityGrid, b: DensityGrid) -> float:
    g = standard_gaussian(a.nodes)
    return float(np.trapezoid(g * a.values * b.values, a.nodes))


def semigroup_defect(G: DensityGrid, s: float, t: float) -> float:
    """L2(g) distance between the composed and the one-shot smoothing."""
    two = ou_apply(ou_apply(G, s), t)
    one = ou_apply(G, s + t)
    g = standard_gaussian(G.nodes)
    return math.sqrt(float(np.trapezoid(g * (two.values - one.values) ** 2, G.nodes)))


def relative_entropy_grid(f: DensityGrid, beta: float) -> float:
    """Relative entropy of the gridded density f against the Gaussian with
    variance 1/beta, with the 0 log 0 = 0 convention."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    vals = f.values
    if np.any(vals < -1e-12 * max(1.0, float(np.max(np.abs(vals))))):
        raise ValueError("density has negative values")
    mass = f.integral()
    if abs(mass - 1.0) > 1e-8:
        raise ValueError(f"density is not normalized: integral = {mass!r}")
    g = np.exp(-0.5 * beta * f.nodes**2) * math.sqrt(beta / (2.0 * math.pi))
    pos = vals > 0
    integrand = np.zeros_like(vals)
    integrand[pos] = vals[pos] * (np.log(vals[pos]) - np.log(np.maximum(g[pos], _LOG_FLOOR)))
    return float(np.trapezoid(integrand, f.nodes))


# ---------------------------------------------------------------------------
# sample estimator

@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    stderr: float
    n_samples: int
    n_occupied: int


def _gaussian_cell_masses(edges: np.ndarray) -> np.ndarray:
    cdf = np.array([0.5 * (1.0 + math.erf(x / math.sqrt(2.0))) for x in edges])
    inner = np.diff(cdf)
    return np.concatenate([[cdf[0]], inner, [1.0 - cdf[-1]]])


def _cell_counts(u: np.ndarray, edges: np.ndarray) -> np.ndarray:
    inner, _ = np.histogram(u, bins=edges)
    under = int(np.count_nonzero(u < edges[0]))
    over = int(np.count_nonzero(u >= edges[-1]))
    return np.concatenate([[under], inner, [over]]).astype(np.int64)


def _plugin_kl(p: np.ndarray, q: np.ndarray, n: int) -> float:
    occ = p > 0
    value = float(np.sum(p[occ] * np.log(p[occ] / np.maximum(q[occ], _LOG_FLOOR))))
    return value - (int(occ.sum()) - 1) / (2.0 * n)  # Miller-Madow style correction


def relative_entropy_samples(
    samples,
    beta: float,
    bins: int = 256,
    half_width: float = GRID_HALF_WIDTH,
    n_bootstrap: int = 200,
    seed: int = 0,
) -> EntropyEstimate:
    """Histogram plug-in estimate (bias corrected) of the relative entropy of
    the sample law against the Gaussian with variance 1/beta, with a
    multinomial-bootstrap error bar."""
    u = np.asarray(samples, dtype=float).ravel() * math.sqrt(beta)
    n = u.size
    if n < 1000:
        raise EstimatorError(f"need at least 1000 samples, got {n}")
    if float(u.std()) == 0.0:
        raise EstimatorError("degenerate sample (all values equal)")
    edges = np.linspace(-half_width, half_width, bins + 1)
    counts = _cell_counts(u, edges)
    q = _gaussian_cell_masses(edges)
    p = counts / n
    value = _plugin_kl(p, q, n)
    rng = np.random.default_rng(seed)
    boots = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        pb = rng.multinomial(n, p) / n
        boots[b] = _plugin_kl(pb, q, n)
    return EntropyEstimate(
        value=value,
        stderr=float(boots.std(ddof=1)),
        n_samples=n,
        n_occupied=int(np.count_nonzero(counts)),
    )


# ---------------------------------------------------------------------------
# inequality checks

@dataclass(frozen=True)
class ThermostatEntropyReport:
    lhs: float            # g-weighted integral of T[G] log G
    lhs_smoothed: float   # g-weighted integral of T[G] log T[G]
    rhs: float            # half the entropy functional of G
    margin: float
    margin_smoothed: float


def check_thermostat_entropy_inequality(
    G: DensityGrid, tol: float = 1e-8, strict: bool = True
) -> ThermostatEntropyReport:
    """Both forms of the one-particle thermostat entropy inequality."""
    g = standard_gaussian(G.nodes)
    mass = float(np.trapezoid(g * G.values, G.nodes))
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"g*G is not a normalized density: integral = {mass!r}")
    tg = t_apply(G)
    log_g_vals = np.log(np.maximum(G.values, _LOG_FLOOR))
    lhs = float(np.trapezoid(g * tg.values * log_g_vals, G.nodes))
    lhs_smoothed = float(np.trapezoid(g * _xlogx(tg.values), G.nodes))
    rhs = 0.5 * gauss_weighted_entropy(G)
    report = ThermostatEntropyReport(
        lhs=lhs,
        lhs_smoothed=lhs_smoothed,
        rhs=rhs,
        margin=rhs - lhs,
        margin_smoothed=rhs - lhs_smoothed,
    )
    if strict and (report.margin < -tol or report.margin_smoothed < -tol):
        raise EntropyCheckError(f"thermostat entropy inequality violated: {report}")
    return report


@dataclass(frozen=True)
class MarginalEntropyReport:
    lhs: float
    rhs: float
    margin: float


def check_marginal_entropy_inequality(
    joint, tol: float = 1e-10, strict: bool = True
) -> MarginalEntropyReport:
    """Sum of dropped-coordinate marginal entropies against (N-1) times the
    joint entropy, for a discrete joint density on a product grid."""
    p = np.asarray(joint, dtype=float)
    n = p.ndim
    if n < 2 or n > 4:
        raise ValueError(f"joint density must have 2..4 axes, got {n}")
    if np.any(p < 0):
        raise ValueError("joint density has negative entries")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"joint density is not normalized: sum = {total!r}")
    lhs = sum(float(_xlogx(p.sum(axis=j)).sum()) for j in range(n))
    rhs = (n - 1) * float(_xlogx(p).sum())
    report = MarginalEntropyReport(lhs=lhs, rhs=rhs, margin=rhs - lhs)
    if strict and report.margin < -tol:
        raise EntropyCheckError(f"marginal entropy inequality violated: {report}")
    return report


# ---------------------------------------------------------------------------
# decay experiment

@dataclass
class EntropyDecaySeries:
    times: np.ndarray
    estimate: np.ndarray   # one-particle proxy: N * S(pooled marginal | g)
    stderr: np.ndarray
    bound: np.ndarray      # exp(-mu t / 2) * closed-form initial entropy
    fitted_exponent: float
    initial_entropy: float


def _pooled_estimate_with_cluster_bootstrap(
    snapshot: np.ndarray, beta: float, bins: int, n_bootstrap: int,
    rng: np.random.Generator
) -> tuple[float, float]:
    m, n = snapshot.shape
    edges = np.linspace(-GRID_HALF_WIDTH, GRID_HALF_WIDTH, bins + 1)
    q = _gaussian_cell_masses(edges)
    u = snapshot * math.sqrt(beta)
    counts = np.empty((m, bins + 2), dtype=np.int64)
    for r in range(m):
        counts[r] = _cell_counts(u[r], edges)
    total = counts.sum(axis=0)
    n_tot = m * n
    value = _plugin_kl(total / n_tot, q, n_tot)
    boots = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        weights = rng.multinomial(m, np.full(m, 1.0 / m)).astype(float)
        pb = (weights @ counts) / n_tot
        boots[b] = _plugin_kl(pb, q, n_tot)
    return value, float(boots.std(ddof=1))


def entropy_decay_experiment(
    params: Params,
    initial: InitialCondition,
    horizon: float,
    n_replicas: int,
    sample_times=None,
    seed: int = 0,
    bins: int = 256,
    n_bootstrap: int = 200,
) -> EntropyDecaySeries:
    """Track the one-particle relative-entropy proxy along a simulation and
    compare with the exponential bound from the closed-form initial entropy.

    The proxy N*S(pooled marginal | g) never exceeds the full N-body relative
    entropy (superadditivity plus convexity over the particle average), so the
    bound curve dominates it up to estimator noise.  Error bars come from a
    bootstrap over replicas, which respects the within-replica correlation
    that collisions introduce.
    """
    s0 = initial_relative_entropy(initial, params)
    if sample_times is None:
        sample_times = np.linspace(0.0, horizon, 13)
    times = np.asarray(sample_times, dtype=float)
    series = run(
        params,
        n_replicas=n_replicas,
        horizon=horizon,
        sample_times=times,
        seed=seed,
        initial=initial,
        snapshot_times=times,
    )
    n = params.n_particles
    rng = np.random.default_rng(seed + 0x5EED)
    est = np.empty(times.size)
    err = np.empty(times.size)
    for k, t in enumerate(times):
        value, stderr = _pooled_estimate_with_cluster_bootstrap(
            series.snapshots[float(t)], params.beta, bins, n_bootstrap, rng
        )
        est[k] = n * value
        err[k] = n * stderr
    bound = s0 * np.exp(-params.mu * times / 2.0)

    usable = est > np.maximum(3.0 * err, 1e-3 * max(est[0], 1e-12))
    if usable.sum() >= 3:
        slope = np.polyfit(times[usable], np.log(est[usable]), 1)[0]
        fitted = -float(slope)
    else:
        fitted = float("nan")
    return EntropyDecaySeries(
        times=times,
        estimate=est,
        stderr=err,
        bound=bound,
        fitted_exponent=fitted,
        initial_entropy=s0,
    )
