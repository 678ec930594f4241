import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcredit.circuit import StateVector, apply
from qcredit.distributions import Asset, Portfolio, build_latent_grid
from qcredit.errors import SizeError
from qcredit.model_circuits import build_A
from qcredit.qae import error_bound, run_qae
from qcredit.risk import (
    DiscreteDistribution,
    bisection_var,
    discretization_bound,
    ecr,
    exact_loss_distribution,
    expected_loss,
    expected_loss_gci,
    expected_loss_gci_continuous,
    expected_loss_independent,
    loss_distribution_from_state,
    mc_convergence,
    mc_losses,
    mc_simulate,
    var_bisection_qae,
    var_exact,
)


def trapezoid_expected_loss(portfolio, n=10 ** 6, span=12.0):
    """Continuous E[L] by a plain trapezoid rule built on math.erfc."""
    z = np.linspace(-span, span, n)
    phi = np.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    erfc = np.vectorize(math.erfc)
    total = np.zeros_like(z)
    for a in portfolio.assets:
        # inverse CDF by bisection on erfc, independent of the library path
        lo, hi = -40.0, 40.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if 0.5 * math.erfc(-mid / math.sqrt(2)) < a.pd0:
                lo = mid
            else:
                hi = mid
        u = (0.5 * (lo + hi) - math.sqrt(a.rho) * z) / math.sqrt(1 - a.rho)
        total += a.lgd * 0.5 * erfc(-u / math.sqrt(2))
    f = total * phi
    return float((f[:-1] + f[1:]).sum() * (z[1] - z[0]) / 2)


class TestDiscreteDistribution:
    def test_validation(self):
        with pytest.raises(ValueError):
            DiscreteDistribution.from_probs([0.5, 0.6])
        with pytest.raises(ValueError):
            DiscreteDistribution.from_probs([1.1, -0.1])

    def test_cdf_and_mean(self):
        d = DiscreteDistribution.from_probs([0.25, 0.25, 0.5, 0.0])
        np.testing.assert_allclose(d.cdf(), [0.25, 0.5, 1, 1])
        assert d.mean() == 1.25


class TestExactDistribution:
    def test_single_asset(self):
        d = exact_loss_distribution(Portfolio([Asset(1, 0.15)]))
        np.testing.assert_allclose(d.probs, [0.85, 0.15], atol=1e-15)

    def test_two_asset_independent(self, two_asset):
        d = exact_loss_distribution(two_asset)
        assert d.probs[0] == pytest.approx(0.85 * 0.75, abs=1e-15)
        np.testing.assert_allclose(d.probs, [0.6375, 0.1125, 0.2125, 0.0375], atol=1e-15)

    def test_two_asset_gci_matches_statevector(self, two_asset, grid2, backend):
        d = exact_loss_distribution(two_asset, grid2)
        assert d.probs.sum() == pytest.approx(1.0, abs=1e-12)
        A = build_A(two_asset, grid2, 0, "exact")
        s = apply(A.operator, StateVector.zero(A.n_qubits), backend)
        assert d.total_variation(loss_distribution_from_state(s, two_asset, grid2)) <= 1e-10

    def test_two_asset_reference_cdf(self, two_asset):
        cdf = exact_loss_distribution(two_asset, build_latent_grid(2, 3.0)).cdf()
        np.testing.assert_allclose(cdf, [0.6413, 0.7491, 0.9558, 1.0], atol=1e-4)

    def test_size_guard(self):
        pf = Portfolio([Asset(1, 0.1)] * 4)
        with pytest.raises(SizeError):
            exact_loss_distribution(pf, build_latent_grid(3), max_bits=6)

    @pytest.mark.parametrize("seed", range(10))
    def test_cross_oracle_total_variation(self, seed):
        rng = np.random.default_rng(seed)
        K = int(rng.integers(1, 5))
        pf = Portfolio([Asset(int(rng.integers(1, 5)), float(rng.uniform(0, 0.5)),
                              float(rng.uniform(0, 0.4))) for _ in range(K)])
        g = None if seed % 3 == 0 else build_latent_grid(int(rng.integers(1, 4)))
        d = exact_loss_distribution(pf, g)
        assert np.all(np.diff(d.cdf()) >= 0)
        A = build_A(pf, g, 0, "exact")
        s = apply(A.operator, StateVector.zero(A.n_qubits))
        assert d.total_variation(loss_distribution_from_state(s, pf, g)) <= 1e-10


class TestExpectedLoss:
    def test_independent(self, two_asset):
        assert expected_loss_independent(two_asset) == pytest.approx(0.65, abs=1e-15)
        assert expected_loss_independent(Portfolio([Asset(5, 0.0)])) == 0.0
        assert exact_loss_distribution(two_asset).mean() == pytest.approx(0.65, abs=1e-12)

    def test_gci_uncorrelated(self):
        pf = Portfolio([Asset(1, 0.15), Asset(2, 0.25), Asset(3, 0.4)])
        assert expected_loss_gci(pf, build_latent_grid(3)) == pytest.approx(expected_loss_independent(pf), abs=1e-12)

    @pytest.mark.parametrize("n_z", [1, 2, 3, 4])
    def test_gci_is_distribution_mean(self, two_asset, n_z):
        g = build_latent_grid(n_z)
        assert expected_loss_gci(two_asset, g) == pytest.approx(exact_loss_distribution(two_asset, g).mean(), abs=1e-12)

    def test_gci_against_continuous_quadrature(self, two_asset):
        g = build_latent_grid(4, 3.0)
        ref = trapezoid_expected_loss(two_asset)
        # E[p_k(Z)] = pd0 for any rho, so the continuous value is 0.65
        assert ref == pytest.approx(0.65, abs=1e-9)
        assert expected_loss_gci_continuous(two_asset) == pytest.approx(ref, abs=1e-9)
        bound = discretization_bound(two_asset, g)
        assert abs(expected_loss_gci(two_asset, g) - ref) <= bound
        assert bound < 0.1

    def test_dispatch(self, two_asset, grid2):
        assert expected_loss(two_asset, None) == expected_loss_independent(two_asset)
        assert expected_loss(two_asset, grid2) == expected_loss_gci(two_asset, grid2)


class TestVarExact:
    def test_point_mass(self):
        d = DiscreteDistribution.from_probs([1.0, 0, 0, 0])
        for a in (0.01, 0.5, 0.999, 1.0):
            assert var_exact(d, a) == 0

    def test_alpha_one(self):
        d = DiscreteDistribution.from_probs([0.5, 0.5, 0.0, 0.0])
        assert var_exact(d, 1.0) == 1

    def test_two_asset_gci_scan(self, two_asset, grid2):
        d = exact_loss_distribution(two_asset, grid2)
        cdf = d.cdf()
        scan = next(x for x in range(len(cdf)) if cdf[x] >= 0.95)
        assert var_exact(d, 0.95) == scan == 2

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
    def test_domain(self, alpha):
        with pytest.raises(ValueError):
            var_exact(DiscreteDistribution.from_probs([1.0]), alpha)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=16), st.floats(0.01, 1), st.floats(0.01, 1))
    def test_monotone_in_alpha(self, w, a1, a2):
        w = np.asarray(w) + 1e-3
        d = DiscreteDistribution.from_probs(w / w.sum())
        lo, hi = sorted((a1, a2))
        assert var_exact(d, lo) <= var_exact(d, hi)


class TestBisection:
    def test_exact_cdf_reproduces_scan(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n_S = int(rng.integers(1, 6))
            w = rng.random(1 << n_S)
            d = DiscreteDistribution.from_probs(w / w.sum())
            alpha = float(rng.uniform(0.05, 1.0))
            cdf = d.cdf()
            var, trace, warn = bisection_var(lambda x: (cdf[x], 0.0), n_S, alpha)
            assert var == var_exact(d, alpha)
            assert len(trace) <= n_S
            assert not warn

    def test_non_monotone_flagged(self):
        # probes visit 3, 5, 4; the estimate at 4 dips below the one at 3
        fake = {3: 0.5, 5: 0.99, 4: 0.3}
        var, trace, warn = bisection_var(lambda x: (fake[x], 0.0), 3, 0.95)
        assert [t["threshold"] for t in trace] == [3, 5, 4]
        assert warn
        assert var == 5

    def test_qae_zero_risk(self):
        pf = Portfolio([Asset(1, 0.0), Asset(1, 0.0)])
        r = var_bisection_qae(pf, None, 0.95, 3)
        assert r.var == 0
        assert r.probes <= 2

    def test_qae_two_asset_reference_configuration(self, two_asset):
        g = build_latent_grid(2)
        r = var_bisection_qae(two_asset, g, 0.95, 4)
        assert r.var == var_exact(exact_loss_distribution(two_asset, g), 0.95)
        assert r.probes <= two_asset.n_S == 2
        assert r.ecr == r.var - r.expected_loss
        for step in r.diagnostics:
            assert {"threshold", "estimate", "bound"} <= step.keys()

    def test_shots_reproducible(self, two_asset, grid2):
        a = var_bisection_qae(two_asset, grid2, 0.95, 4, shots=50, seed=11)
        b = var_bisection_qae(two_asset, grid2, 0.95, 4, shots=50, seed=11)
        assert a.as_dict() == b.as_dict()


class TestEcr:
    def test_deterministic_portfolio(self):
        pf = Portfolio([Asset(2, 1.0)])
        for method in ("exact", "qae"):
            r = ecr(pf, None, 0.95, method=method, m=3)
            assert (r.var, r.expected_loss, r.ecr) == (2, 2.0, 0.0)

    def test_two_asset_independent(self, two_asset):
        r = ecr(two_asset, None, 0.95)
        assert r.ecr == var_exact(exact_loss_distribution(two_asset), 0.95) - 0.65
        assert r.ecr == pytest.approx(2 - 0.65, abs=1e-15)

    def test_methods_agree_when_var_agrees(self, two_asset, grid2):
        ex = ecr(two_asset, grid2, 0.95, "exact")
        qa = ecr(two_asset, grid2, 0.95, "qae", m=4)
        assert ex.var == qa.var
        assert ex.ecr == qa.ecr

    def test_unknown_method(self, two_asset):
        with pytest.raises(ValueError):
            ecr(two_asset, None, 0.95, method="analytic")


class TestMonteCarlo:
    def test_deterministic(self, two_asset, grid2):
        a = mc_simulate(two_asset, grid2, 10_000, seed=5)
        b = mc_simulate(two_asset, grid2, 10_000, seed=5)
        np.testing.assert_array_equal(a[0].probs, b[0].probs)
        assert a[1].as_dict() == b[1].as_dict()

    def test_partitions_deterministic(self, two_asset, grid2):
        a = mc_losses(two_asset, grid2, 10_001, seed=9, partitions=4)
        b = mc_losses(two_asset, grid2, 10_001, seed=9, partitions=4)
        assert a.shape == (10_001,)
        np.testing.assert_array_equal(a, b)

    def test_uncorrelated_loss_zero(self):
        pf = Portfolio([Asset(1, 0.15), Asset(2, 0.25)])
        n = 10 ** 6
        dist, _ = mc_simulate(pf, build_latent_grid(2), n, seed=2024)
        se = math.sqrt(0.6375 * 0.3625 / n)
        assert abs(dist.probs[0] - 0.6375) <= 4 * se

    def test_large_sample_var(self, two_asset, grid2):
        _, r = mc_simulate(two_asset, grid2, 10 ** 6, seed=1)
        assert r.var == var_exact(exact_loss_distribution(two_asset, grid2), 0.95)

    def test_convergence_slope(self, two_asset):
        rows, slope, x = mc_convergence(two_asset, build_latent_grid(2), [100, 1000, 10000], trials=200, seed=0)
        assert len(rows) == 3
        assert -0.6 <= slope <= -0.4

    def test_validation(self, two_asset):
        with pytest.raises(ValueError):
            mc_losses(two_asset, None, 0)
        with pytest.raises(ValueError):
            mc_losses(two_asset, None, 10, partitions=0)


def _random_small_portfolio(rng):
    K = int(rng.integers(1, 4))
    pf = Portfolio([Asset(int(rng.integers(1, 3)), float(rng.uniform(0.02, 0.5)),
                          float(rng.uniform(0, 0.3))) for _ in range(K)])
    return pf, build_latent_grid(int(rng.integers(1, 4)), float(rng.uniform(1.5, 3.0)))


@pytest.mark.parametrize("m", [4, 5, 6])
def test_qae_against_exact_cdf(two_asset, m):
    rng = np.random.default_rng(1000 + m)
    cases = [(two_asset, build_latent_grid(2), x) for x in range(4)]
    for _ in range(20):
        pf, g = _random_small_portfolio(rng)
        cases.append((pf, g, int(rng.integers(0, 1 << pf.n_S))))
    for pf, g, x in cases:
        exact = exact_loss_distribution(pf, g).cdf()[x]
        r = run_qae(build_A(pf, g, x, "exact"), m)
        assert abs(r.estimate - exact) <= error_bound(exact, 1 << m) + math.pi / (1 << m)
