import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reactivity import dynamics as dy
from reactivity.errors import DivergenceError


def ap_closed_form(lam, k, p):
    # [[0.5^p, 0.5^(p-1) lam^k (1 + ... + lam^(p-1))], [0, 0.5^p]]
    s = sum(lam ** j for j in range(p))
    return np.array([[0.5 ** p, 0.5 ** (p - 1) * lam ** k * s], [0.0, 0.5 ** p]])


class TestBuiltins:
    def test_logistic_range(self):
        with pytest.raises(ValueError):
            dy.logistic(4.5)
        with pytest.raises(ValueError):
            dy.logistic(-0.1)

    def test_time_invariant_spot_check(self):
        for sys, x in ((dy.logistic(3.3), [0.2]), (dy.henon(), [0.3, -0.1])):
            assert sys.time_invariant
            np.testing.assert_array_equal(sys.eval(0, np.array(x)), sys.eval(17, np.array(x)))

    def test_tv_logistic_phase(self):
        sys = dy.time_varying_logistic(2.6)
        x = np.array([0.3])
        np.testing.assert_allclose(sys.eval(0, x), 5.675 * 0.3 * 0.7)
        np.testing.assert_allclose(sys.eval(1, x), 0.475 * 0.3 * 0.7)
        assert not sys.time_invariant and sys.period == 2

    def test_alternating_needs_shared_dim(self):
        with pytest.raises(ValueError):
            dy.alternating_map([dy.logistic(2), dy.henon()])
        with pytest.raises(ValueError):
            dy.alternating_map([dy.logistic(2)])

    def test_broadcasting(self):
        sys = dy.henon()
        X = np.array([[0.1, 0.2], [0.3, -0.4]])
        np.testing.assert_allclose(sys.eval(0, X), [sys.eval(0, x) for x in X])
        assert sys.jacobian(0, X).shape == (2, 2, 2)


class TestOrbit:
    def test_logistic(self):
        np.testing.assert_allclose(dy.orbit(dy.logistic(2), [0.25], length=3)[:, 0], [0.25, 0.375, 0.46875])

    def test_henon_origin(self):
        np.testing.assert_allclose(dy.orbit(dy.henon(), [0, 0], length=2), [[0, 0], [1, 0]])

    def test_single(self):
        np.testing.assert_array_equal(dy.orbit(dy.henon(), [0.5, 0.5], length=1), [[0.5, 0.5]])

    def test_divergence_reports_step(self):
        with pytest.raises(DivergenceError) as exc:
            dy.orbit(dy.henon(), [5.0, 5.0], length=50)
        assert exc.value.step is not None and exc.value.step <= 10

    def test_bad_length(self):
        with pytest.raises(ValueError):
            dy.orbit(dy.henon(), [0, 0], length=0)


class TestCompose:
    def test_logistic_two_steps(self):
        assert dy.p_compose(dy.logistic(2), 0, [0.25], 2)[0] == pytest.approx(0.46875)

    def test_p1_is_eval(self):
        sys = dy.henon()
        x = np.array([0.2, 0.1])
        np.testing.assert_array_equal(dy.p_compose(sys, 3, x, 1), sys.eval(3, x))

    def test_alternating(self):
        g = dy.scalar_map(lambda x: x + 1, lambda x: 1.0, "g")
        h = dy.scalar_map(lambda x: 3 * x, lambda x: 3.0, "h")
        alt = dy.alternating_map([g, h])
        assert dy.p_compose(alt, 0, [2.0], 2)[0] == 9.0
        assert dy.p_compose(alt, 1, [2.0], 2)[0] == 7.0

    @settings(max_examples=100)
    @given(st.floats(0.01, 0.99), st.integers(1, 6), st.integers(1, 6), st.integers(0, 5))
    def test_associativity(self, x, p, q, k):
        # e = 0.5 keeps both parameters in [0, 4], so orbits stay in [0, 1].
        sys = dy.time_varying_logistic(0.5)
        lhs = dy.p_compose(sys, k, [x], p + q)
        rhs = dy.p_compose(sys, k + p, dy.p_compose(sys, k, [x], p), q)
        np.testing.assert_array_equal(lhs, rhs)


class TestJacobian:
    def test_example1(self):
        np.testing.assert_allclose(dy.p_jacobian(dy.example1_linear(0.9), 0, [3.0, -1.0], 2),
                                   [[0.25, 0.95], [0, 0.25]], atol=1e-15)

    def test_logistic_critical_point(self):
        for p in (1, 2, 5):
            assert dy.p_jacobian(dy.logistic(3.7), 0, [0.5], p)[0, 0] == 0.0

    def test_henon_origin(self):
        np.testing.assert_allclose(dy.p_jacobian(dy.henon(), 0, [0, 0], 1), [[0, 1], [0.3, 0]])

    def test_linear_p_matrix(self):
        rule = lambda k: dy.example1_matrix(0.9, k)
        np.testing.assert_array_equal(dy.linear_p_matrix(rule, 4, 1), rule(4))
        np.testing.assert_allclose(dy.linear_p_matrix(rule, 0, 3), [[0.125, 0.6775], [0, 0.125]], atol=1e-15)
        np.testing.assert_array_equal(dy.linear_p_matrix(lambda k: np.eye(3), 2, 7), np.eye(3))

    def test_linear_p_matrix_mismatch(self):
        with pytest.raises(ValueError):
            dy.linear_p_matrix(lambda k: np.eye(2 + k % 2), 0, 2)

    def test_closed_form_grid(self):
        sys = dy.example1_linear(0.9)
        for p in range(1, 21):
            for k in range(0, 51, 5):
                np.testing.assert_allclose(dy.p_jacobian(sys, k, [1.0, 1.0], p), ap_closed_form(0.9, k, p),
                                           rtol=0, atol=1e-12)

    @settings(max_examples=100)
    @given(st.floats(-0.5, 0.5), st.floats(-0.3, 0.3), st.integers(1, 4), st.integers(1, 4))
    def test_chain_rule(self, x, y, p, q):
        sys = dy.henon()
        x0 = np.array([x, y])
        xp = dy.p_compose(sys, 0, x0, p)
        lhs = dy.p_jacobian(sys, 0, x0, p + q)
        rhs = dy.p_jacobian(sys, p, xp, q) @ dy.p_jacobian(sys, 0, x0, p)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, np.max(np.abs(lhs))))

    @pytest.mark.parametrize("sys,x0", [
        (dy.henon(), [0.2, 0.1]),
        (dy.logistic(3.7), [0.31]),
        (dy.time_varying_logistic(2.6), [0.42]),
    ])
    def test_finite_differences(self, sys, x0):
        x0 = np.array(x0, dtype=float)
        for p in (1, 2, 3):
            J = dy.p_jacobian(sys, 0, x0, p)
            h = 1e-6
            fd = np.column_stack([
                (dy.p_compose(sys, 0, x0 + h * e, p) - dy.p_compose(sys, 0, x0 - h * e, p)) / (2 * h)
                for e in np.eye(sys.dim)
            ])
            assert np.max(np.abs(J - fd)) <= 1e-5 * max(1.0, np.max(np.abs(J)))


class TestPIteration:
    def test_steps(self):
        sys = dy.time_varying_logistic(2.6)
        P = dy.p_iteration(sys, 2)
        assert P.time_invariant
        x = np.array([0.3])
        np.testing.assert_allclose(P.eval(1, x), dy.p_compose(sys, 2, x, 2))
        np.testing.assert_allclose(P.jacobian(0, x), dy.p_jacobian(sys, 0, x, 2))

    def test_odd_p_of_period_two_is_time_varying(self):
        assert not dy.p_iteration(dy.time_varying_logistic(2.6), 3).time_invariant
