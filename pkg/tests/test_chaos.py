import math

import numpy as np
import pytest

from kaclab.core import Params
from kaclab.chaos import (
    _DICTIONARY_DEGREES,
    _PHI,
    BoltzmannComparison,
    chaos_ladder,
    chaos_metric,
    compare_to_boltzmann,
    extract_marginals,
    mckean_series_radius,
)
from kaclab.simulator import ProductGaussian

SEED = 20260808


def forced_pair_collision(rng, n_samples):
    # two-particle states: product uniform start, then exactly one collision
    v = rng.uniform(-1.0, 1.0, (n_samples, 2))
    th = rng.uniform(0.0, 2.0 * math.pi, n_samples)
    c, s = np.cos(th), np.sin(th)
    out = np.empty_like(v)
    out[:, 0] = v[:, 0] * c + v[:, 1] * s
    out[:, 1] = -v[:, 0] * s + v[:, 1] * c
    return out


def oracle_forced_pair_metric():
    # quadrature oracle for the post-collision factorization defect of the
    # uniform product start (Gauss-Legendre in both velocities, periodic
    # rule in the angle)
    x, w = np.polynomial.legendre.leggauss(64)
    th = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    c, s = np.cos(th), np.sin(th)
    v1 = 0.5 * x[:, None, None] * c  # weight 1/2 from uniform on [-1, 1]
    v1 = x[:, None, None] * c[None, None, :]
    v2 = x[None, :, None] * s[None, None, :]
    a = v1 + v2                       # first post-collision velocity
    b = -x[:, None, None] * s + x[None, :, None] * c
    ww = 0.25 * w[:, None, None] * w[None, :, None] / th.size
    singles = {d: float(np.sum(ww * _PHI[d](a))) for d in range(5)}
    worst = 0.0
    for i, j in _DICTIONARY_DEGREES:
        pair_val = float(np.sum(ww * _PHI[i](a) * _PHI[j](b)))
        worst = max(worst, abs(pair_val - singles[i] * singles[j]))
    return worst


class TestExtractMarginals:
    def test_mass_accounting(self):
        rng = np.random.default_rng(SEED)
        snap = rng.standard_normal((200, 8))
        for k in (1, 2):
            m = extract_marginals(snap, k)
            assert math.isclose(float(m.masses.sum()), 1.0, abs_tol=1e-12)

    def test_exchangeability_bit_identical(self):
        rng = np.random.default_rng(SEED)
        snap = rng.standard_normal((50, 6)) * 1.3
        perm = rng.permutation(6)
        for k in (1, 2):
            a = extract_marginals(snap, k)
            b = extract_marginals(snap[:, perm], k)
            assert np.array_equal(a.masses, b.masses)

    def test_product_data_factorizes(self):
        rng = np.random.default_rng(SEED)
        snap = rng.standard_normal((3000, 10))
        metric = chaos_metric(extract_marginals(snap, 1), extract_marginals(snap, 2))
        assert metric < 0.01

    def test_equilibrium_marginal_matches_gaussian(self):
        rng = np.random.default_rng(SEED)
        snap = rng.standard_normal((5000, 10))
        m = extract_marginals(snap, 1)
        centers = m.centers
        width = m.edges[1] - m.edges[0]
        want = np.exp(-(centers**2) / 2) / math.sqrt(2 * math.pi) * width
        noise = 4.0 * np.sqrt(np.maximum(want, 1e-12) / snap.size)  # ~4 sigma per cell
        assert np.all(np.abs(m.masses[1:-1] - want) < noise + 1e-4)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            extract_marginals(np.zeros((3, 3)), 3)
        with pytest.raises(ValueError):
            extract_marginals(np.zeros((3, 1)), 2)


class TestChaosMetric:
    def test_forced_collision_correlates(self):
        oracle = oracle_forced_pair_metric()
        assert oracle > 0.02  # the defect is real, bounded away from zero
        rng = np.random.default_rng(SEED)
        snap = forced_pair_collision(rng, 400_000)
        metric = chaos_metric(extract_marginals(snap, 1), extract_marginals(snap, 2))
        assert metric > 0.5 * oracle
        assert abs(metric - oracle) < 0.3 * oracle

    def test_requires_matched_orders(self):
        snap = np.zeros((10, 4))
        m1 = extract_marginals(snap, 1)
        with pytest.raises(ValueError):
            chaos_metric(m1, m1)


class TestLadder:
    def test_metric_decreases_in_system_size(self):
        pts = chaos_ladder(
            Params(n_particles=2, lam=1.0, mu=1.0),
            n_values=(4, 16, 64),
            n_replicas=1500,
            seed=SEED,
            n_bootstrap=4,
        )
        metrics = [p.metric for p in pts]
        assert metrics[0] > metrics[-1]
        assert all(p.stderr >= 0 or math.isnan(p.stderr) for p in pts)


class TestBoltzmannComparison:
    def test_equilibrium_consistent(self):
        p = Params(n_particles=10, lam=1.0, mu=1.0)
        reports = compare_to_boltzmann(
            p, ProductGaussian(temperature=1.0), horizon=1.0,
            n_values=(40,), n_replicas=300, seed=SEED,
        )
        assert reports[40].max_standardized < 4.5

    def test_exact_low_moment_tracking(self):
        # m1 and m2 of the pooled ensemble obey the hierarchy exactly at any
        # finite N, so their standardized discrepancies are pure noise
        p = Params(n_particles=10, lam=1.0, mu=1.0)
        reports = compare_to_boltzmann(
            p, ProductGaussian(temperature=2.0, mean=0.5), horizon=2.0,
            n_values=(30,), n_replicas=400, seed=SEED,
        )
        rep = reports[30]
        assert np.max(np.abs(rep.standardized[:, :2])) < 4.5

    def test_rejects_non_product(self):
        with pytest.raises(TypeError):
            compare_to_boltzmann(
                Params(n_particles=10, lam=1.0, mu=1.0), initial=None, horizon=1.0
            )


class TestSeriesBound:
    def test_pinned_radii(self):
        assert mckean_series_radius(Params(2, lam=1.0, mu=1.0), 1).radius == 0.2
        assert mckean_series_radius(Params(2, lam=0.0, mu=1.0), 1).radius == 1.0
        assert mckean_series_radius(Params(2, lam=0.0, mu=0.0), 3).radius == math.inf

    def test_term_bound_sequence(self):
        b = mckean_series_radius(Params(2, lam=0.5, mu=1.0), 2)
        assert b.term_bound(0) == 1.0
        assert b.term_bound(1) == b.growth_rate * 2
        assert b.term_bound(3) == b.growth_rate**3 * 2 * 3 * 4

    def test_ratio_threshold(self):
        p = Params(2, lam=1.0, mu=1.0)
        b = mckean_series_radius(p, 3)
        inner = 0.9 / b.growth_rate
        outer = 1.1 / b.growth_rate
        assert b.term_ratio(200, inner) < 1.0
        assert b.term_ratio(200, outer) > 1.0
        # below the growth threshold the ratios settle below one eventually
        ratios = [b.term_ratio(l, inner) for l in range(400)]
        assert all(r < 1.0 for r in ratios[50:])
