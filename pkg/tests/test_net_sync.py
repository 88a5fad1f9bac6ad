import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reactivity import dynamics as dy
from reactivity import net_sync as ns
from reactivity.errors import DivergenceError
from reactivity.linalg_core import spectral_norm

HENON = dy.henon()


@pytest.fixture(scope="module")
def wheel():
    return ns.GRAPHS["wheel5"]()


@pytest.fixture(scope="module")
def henon_sample():
    return ns.sample_attractor(HENON, [0.1, 0.1], count=2000, seed=0)


class TestNetwork:
    def test_laplacian(self, wheel):
        L = wheel.laplacian
        np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
        off = ~np.eye(5, dtype=bool)
        np.testing.assert_array_equal(L[off], -wheel.adjacency[off])
        np.testing.assert_array_equal(np.diag(L), wheel.adjacency.sum(axis=1))

    def test_wheel_spectrum(self, wheel):
        sp = ns.spectrum(wheel)
        np.testing.assert_allclose(sp.eigenvalues, [0, 3, 3, 5, 5], atol=1e-10)
        assert sp.ratio == pytest.approx(5 / 3, abs=1e-10)
        assert sp.connected

    def test_triangle(self):
        np.testing.assert_allclose(ns.spectrum(ns.GRAPHS["k3"]()).eigenvalues, [0, 3, 3], atol=1e-12)

    def test_path(self):
        np.testing.assert_allclose(ns.spectrum(ns.GRAPHS["path3"]()).eigenvalues, [0, 1, 3], atol=1e-12)

    def test_disconnected(self):
        sp = ns.spectrum(ns.build_network(np.zeros((2, 2))))
        assert not sp.connected and sp.lambda2 == 0.0 and sp.ratio == math.inf

    @pytest.mark.parametrize("A", [
        [[0, 1], [0, 0]],
        [[0, -1], [-1, 0]],
        [[1, 1], [1, 0]],
    ])
    def test_rejects_bad_adjacency(self, A):
        with pytest.raises(ValueError):
            ns.build_network(np.array(A, dtype=float))

    @settings(max_examples=100)
    @given(st.integers(2, 7), st.integers(0, 10_000))
    def test_random_graph_spectrum(self, n, seed):
        rng = np.random.default_rng(seed)
        W = np.triu(rng.uniform(0, 2, (n, n)) * (rng.uniform(size=(n, n)) < 0.6), 1)
        net = ns.build_network(W + W.T)
        np.testing.assert_allclose(net.laplacian.sum(axis=1), 0.0, atol=1e-12)
        sp = ns.spectrum(net)
        assert np.all(sp.eigenvalues >= -1e-8)
        np.testing.assert_allclose(sp.eigenvalues, np.linalg.eigvalsh(net.laplacian), atol=1e-9)


class TestSampling:
    def test_henon_box(self):
        s = ns.sample_attractor(HENON, [0.1, 0.1], count=100_000, seed=0)
        assert s.points.shape == (100_000, 2)
        assert np.all(np.isfinite(s.points))
        assert np.max(np.abs(s.points[:, 0])) <= 1.5 and np.max(np.abs(s.points[:, 1])) <= 0.45

    def test_logistic_fixed_point(self):
        s = ns.sample_attractor(dy.logistic(2.0), [0.3], count=100)
        np.testing.assert_allclose(s.points, 0.5, atol=1e-6)

    def test_single(self):
        assert ns.sample_attractor(HENON, [0.1, 0.1], count=1).points.shape == (1, 2)

    def test_deterministic(self):
        a = ns.sample_attractor(HENON, [0.1, 0.1], count=50, seed=3)
        b = ns.sample_attractor(HENON, [0.1, 0.1], count=50, seed=3)
        c = ns.sample_attractor(HENON, [0.1, 0.1], count=50, seed=4)
        np.testing.assert_array_equal(a.points, b.points)
        assert not np.array_equal(a.points, c.points)

    def test_divergence(self):
        with pytest.raises(DivergenceError) as exc:
            ns.sample_attractor(HENON, [3.0, 3.0], count=10)
        assert exc.value.step is not None

    def test_needs_time_invariant(self):
        with pytest.raises(ValueError):
            ns.sample_attractor(dy.time_varying_logistic(0.5), [0.3], count=10)

    def test_orbit_order(self, henon_sample):
        nxt = HENON.eval(0, henon_sample.points[:-1])
        np.testing.assert_allclose(nxt, henon_sample.points[1:], atol=1e-15)


class TestBeta:
    def test_constant_jacobian(self):
        F = dy.linear(np.diag([2.0, 0.5]))
        s = ns.sample_attractor(F, [0.0, 1.0], burn_in=0, count=20)
        for p in (1, 3, 10):
            b = ns.beta_stats(F, s, p)
            assert b.beta_mean == pytest.approx(2.0 ** p, rel=1e-14)
            assert b.beta_max == pytest.approx(2.0 ** p, rel=1e-14)

    def test_henon_p1(self, henon_sample):
        b = ns.beta_stats(HENON, henon_sample, 1)
        assert b.beta_max >= b.beta_mean > 1

    def test_logistic_critical(self):
        F = dy.logistic(2.0)
        s = ns.sample_attractor(F, [0.25], count=10)
        b = ns.beta_stats(F, s, 1)
        assert b.beta_mean == 0.0 and b.beta_max == 0.0

    @pytest.mark.parametrize("p", [1, 2, 7, 25])
    def test_matches_p_jacobian(self, henon_sample, p):
        fast = ns.beta_stats(HENON, henon_sample, p)
        ref = ns.beta_stats_reference(HENON, henon_sample, p)
        assert fast.beta_mean == pytest.approx(ref.beta_mean, rel=1e-10)
        assert fast.beta_max == pytest.approx(ref.beta_max, rel=1e-10)

    def test_profile_consistent(self, henon_sample):
        prof = ns.beta_profile(HENON, henon_sample, 12)
        assert [b.p for b in prof] == list(range(1, 13))
        assert prof[11] == ns.beta_stats(HENON, henon_sample, 12)
        assert all(b.beta_max >= b.beta_mean > 0 for b in prof)


class TestBounds:
    def test_beta_one(self, wheel):
        sp = ns.spectrum(wheel)
        kb = ns.kappa_bounds(sp, ns.BetaStats(4, 1.0, 1.0, 1))
        assert kb.L_mean == 0.0 and kb.U_mean == pytest.approx(2 / 5)
        assert kb.S_mean == math.inf and kb.S_max == math.inf

    def test_substitution(self, wheel):
        sp = ns.spectrum(wheel)
        kb = ns.kappa_bounds(sp, ns.BetaStats(2, 9.0, 9.0, 1))
        assert kb.L_mean == pytest.approx(2 / 9, rel=1e-12)
        assert kb.U_mean == pytest.approx(4 / 15, rel=1e-12)
        assert kb.S_mean == pytest.approx(2.0, rel=1e-12)

    def test_disconnected_rejected(self):
        sp = ns.spectrum(ns.build_network(np.zeros((3, 3))))
        with pytest.raises(ValueError):
            ns.kappa_bounds(sp, ns.BetaStats(1, 2.0, 2.0, 1))

    @settings(max_examples=300)
    @given(st.floats(0.01, 1e6), st.floats(1.0, 100.0), st.integers(1, 100),
           st.floats(0.1, 10.0), st.floats(1.0, 10.0))
    def test_nesting(self, beta_mean, factor, p, lam2, spread):
        sp = ns.SpectrumInfo(np.array([0.0, lam2, lam2 * spread]), lam2, lam2 * spread, spread, True)
        kb = ns.kappa_bounds(sp, ns.BetaStats(p, beta_mean, beta_mean * factor, 1))
        assert kb.nested()
        assert kb.S_max <= kb.S_mean

    def test_henon_wheel_nested(self, wheel, henon_sample):
        sp = ns.spectrum(wheel)
        for b in ns.beta_profile(HENON, henon_sample, 30):
            kb = ns.kappa_bounds(sp, b)
            assert kb.nested() and kb.S_max <= kb.S_mean


class TestTransverse:
    def test_optimal_kappa(self):
        sp = ns.SpectrumInfo(np.array([0.0, 3.0, 5.0]), 3.0, 5.0, 5 / 3, True)
        assert ns.topology_factor(sp, 0.25, 1) == pytest.approx(0.25)
        assert ns.transverse_reactivity(sp, 2.0, 0.25, 1) == pytest.approx(-0.5)

    def test_uncoupled(self, wheel):
        sp = ns.spectrum(wheel)
        for p in (1, 4):
            assert ns.transverse_reactivity(sp, 3.0, 0.0, p) == pytest.approx(2.0)

    def test_single_eigenvalue(self):
        sp = ns.SpectrumInfo(np.array([0.0, 2.0]), 2.0, 2.0, 1.0, True)
        assert ns.transverse_reactivity(sp, 123.0, 0.5, 7) == -1.0

    def test_sup_and_lim_variants(self, wheel):
        sp = ns.spectrum(wheel)
        b = ns.BetaStats(1, 2.0, 3.0, 10)
        assert ns.transverse_reactivity(sp, b, 0.2, 1, sup=True) > ns.transverse_reactivity(sp, b, 0.2, 1, sup=False)

    def test_negative_kappa(self, wheel):
        with pytest.raises(ValueError):
            ns.transverse_reactivity(ns.spectrum(wheel), 2.0, -0.1, 1)

    def test_h_equals_f_structure(self, wheel, henon_sample):
        sp = ns.spectrum(wheel)
        s = henon_sample.points[5]
        Z = ns.general_transverse_step(HENON, HENON, sp, 0.3, s)
        expected = np.kron(np.diag(1 - 0.3 * sp.transverse), HENON.jacobian(0, s))
        np.testing.assert_allclose(Z, expected, atol=1e-14)

    def test_uncoupled_sigma(self, wheel, henon_sample):
        sp = ns.spectrum(wheel)
        s = henon_sample.points[3]
        assert ns.transverse_sigma1(HENON, HENON, sp, 0.0, s) == pytest.approx(spectral_norm(HENON.jacobian(0, s)))

    def test_two_nodes(self):
        sp = ns.spectrum(ns.build_network([[0.0, 0.5], [0.5, 0.0]]))
        H = dy.linear(np.eye(2))
        s = np.array([0.2, 0.1])
        Z = ns.general_transverse_step(HENON, H, sp, 0.4, s)
        np.testing.assert_allclose(Z, HENON.jacobian(0, s) - 0.4 * np.eye(2), atol=1e-15)

    @settings(max_examples=200)
    @given(st.integers(0, 1999), st.floats(0.0, 0.6), st.sampled_from(["wheel5", "k3", "path3"]))
    def test_blockwise_matches_dense(self, i, kappa, graph):
        sp = ns.spectrum(ns.GRAPHS[graph]())
        s = SAMPLE.points[i]
        H = dy.linear(np.array([[1.0, 0.2], [0.0, 0.5]]))
        dense = spectral_norm(ns.dense_transverse_step(HENON, H, sp, kappa, s))
        assert ns.transverse_sigma1(HENON, H, sp, kappa, s) == pytest.approx(dense, rel=1e-10, abs=1e-12)

    @settings(max_examples=100)
    @given(st.integers(0, 1900), st.floats(0.0, 0.6), st.integers(1, 8))
    def test_p_step_multiplicativity(self, i, kappa, p):
        sp = ns.spectrum(ns.GRAPHS["wheel5"]())
        pts = SAMPLE.points[i:i + p]
        Zp = np.eye(2 * 4)
        for s in pts:
            Zp = ns.general_transverse_step(HENON, HENON, sp, kappa, s) @ Zp
        DFp = np.eye(2)
        for s in pts:
            DFp = HENON.jacobian(0, s) @ DFp
        rhs = ns.topology_factor(sp, kappa, p) * spectral_norm(DFp)
        assert spectral_norm(Zp) == pytest.approx(rhs, rel=1e-10, abs=1e-12)


SAMPLE = ns.sample_attractor(HENON, [0.1, 0.1], count=2000, seed=0)


class TestSimulation:
    def test_identical_states_stay_synchronized(self, wheel):
        X0 = np.tile([0.2, 0.1], (5, 1))
        rec, X = ns.simulate_coupled(wheel, HENON, None, 0.7, X0, k_f=1000, k_0=0, trajectory=True)
        assert rec.E <= 1e-15 and rec.synchronized
        np.testing.assert_array_equal(X, np.tile(X[0], (5, 1)))

    def test_uncoupled_not_synchronized(self, wheel):
        X0 = ns.initial_states(SAMPLE, 5, seed=1)
        rec = ns.simulate_coupled(wheel, HENON, None, 0.0, X0, k_f=2000, k_0=1000)
        assert rec.E > 1e-3 and not rec.synchronized

    def test_kappa_quarter_synchronizes(self, wheel):
        X0 = ns.initial_states(SAMPLE, 5, seed=0)
        rec = ns.simulate_coupled(wheel, HENON, None, 0.25, X0)
        assert rec.synchronized and rec.E < 1e-10

    def test_divergence_recorded(self, wheel):
        X0 = ns.initial_states(SAMPLE, 5, seed=0)
        rec = ns.simulate_coupled(wheel, HENON, None, 1.0, X0, k_f=200, k_0=100)
        assert rec.diverged and not rec.synchronized and rec.E == math.inf

    def test_error_normalization(self):
        # Two static nodes at distance 2: node-average distance to the mean is 1.
        net = ns.build_network([[0.0, 1.0], [1.0, 0.0]])
        ident = dy.linear(np.eye(1))
        rec = ns.simulate_coupled(net, ident, None, 0.0, [[1.0], [-1.0]], k_f=10, k_0=5)
        assert rec.E == pytest.approx(6 / 5)

    def test_bad_horizon(self, wheel):
        with pytest.raises(ValueError):
            ns.simulate_coupled(wheel, HENON, None, 0.2, np.zeros((5, 2)), k_f=10, k_0=10)


class TestSweep:
    def test_report(self, wheel):
        rep = ns.sweep_kappa(wheel, HENON, range(1, 11), [0.0, 0.2, 0.25, 0.3], SAMPLE, k_f=3000, k_0=2000)
        assert [b.p for b in rep.bounds] == list(range(1, 11))
        assert rep.contiguous()
        assert 0.25 in rep.sync_kappas() and 0.0 not in rep.sync_kappas()
        flags = rep.trend_flags()
        assert set(flags) == {"U_mean_nondecreasing", "L_mean_nonincreasing"}

    def test_contiguity_detects_gap(self, wheel):
        recs = [ns.SyncRecord(k, 0.0 if ok else 1.0, ok, False) for k, ok in
                [(0.1, True), (0.2, False), (0.3, True)]]
        rep = ns.SyncReport(ns.spectrum(wheel), [], recs, 1, 0)
        assert not rep.contiguous()
