import math

import numpy as np
import pytest
from hypothesis import given

from gyrotop import models as M
from gyrotop.integrate import simulate
from gyrotop.poisson import PhasePoint
from gyrotop.zhukovskiy import (
    DEGENERATE_CONE,
    PARALLEL_PLANE,
    SKIPPED,
    ZH_COLUMNS,
    max_residual,
    trace_rows,
    zh_state,
    zh_trace,
    zh_verify,
)

from strategies import seeds


def random_state(rng):
    I = rng.uniform(0.5, 2.0, 3)
    L = rng.uniform(-1.0, 1.0, 3)
    om = rng.uniform(-1.0, 1.0, 3)
    return I, L, om


class TestSpherical:
    def test_points(self):
        w = 1.7
        g = zh_state([1.0, 1.0, 1.0], np.zeros(3), 1.0, [0.0, 0.0, w])
        np.testing.assert_allclose(g.N, [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(g.S, g.N, atol=1e-15)
        assert g.p == pytest.approx(1.0)
        assert g.p * w == pytest.approx(math.sqrt(2 * g.h))
        np.testing.assert_array_equal(g.L_pt, 0.0)
        assert np.linalg.norm(g.L_pt - g.N) == pytest.approx(g.k / math.sqrt(2 * g.h))
        assert DEGENERATE_CONE in g.flags
        assert g.theta_prime == 0.0 and g.alpha == 0.0

    def test_residuals(self):
        res = zh_verify(zh_state([1.0, 1.0, 1.0], np.zeros(3), 1.0, [0.0, 0.0, 1.0]))
        assert res["c"] == res["d"] == res["f"] == SKIPPED
        assert res["a"] <= 1e-15 and res["b"] <= 1e-15


class TestRecord:
    def test_hand_computed_state(self):
        g = zh_state([2.0, 1.0, 1.0], [0.0, 0.0, 0.3], 1.0, [1.0, 1.0, 0.0])
        r3 = math.sqrt(3.0)
        assert g.h == pytest.approx(1.5)
        assert g.k == pytest.approx(math.sqrt(5.09))
        np.testing.assert_allclose(g.N, np.array([2.0, 1.0, 0.0]) / r3)
        np.testing.assert_allclose(g.S, r3 / 2 * np.array([1.0, 1.0, 0.0]))
        assert g.p == pytest.approx(math.sqrt(6.0) / 2)
        np.testing.assert_allclose(g.L_pt, [0.0, 0.0, -0.3 / r3])
        np.testing.assert_allclose(g.K_pt, np.array([2.0, 1.0, 0.3]) / r3)
        assert math.cos(g.alpha) == pytest.approx(3.0 / math.sqrt(10.18))
        assert g.theta == pytest.approx(3.0 / math.sqrt(5.09))
        assert abs(g.p * math.sqrt(2.0) - math.sqrt(2 * g.h / g.m)) <= 1e-12
        assert abs(float(g.F @ g.K)) <= 1e-12
        assert g.flags == ()
        assert max_residual(zh_verify(g)) <= 1e-12

    def test_N_on_ellipsoid_and_S_in_tangent_plane(self, rng):
        for _ in range(50):
            I, L, om = random_state(rng)
            m = rng.uniform(0.5, 2.0)
            g = zh_state(I, L, m, om)
            assert abs(float(np.sum(g.N ** 2 / I)) - 1.0 / m) <= 1e-12
            normal = g.N / I
            assert abs(float(normal @ (g.S - g.N))) <= 1e-12


class TestIdentities:
    def test_random_states(self, rng):
        worst = 0.0
        for _ in range(1000):
            I, L, om = random_state(rng)
            g = zh_state(I, L, rng.uniform(0.5, 2.0), om)
            if g.flags:
                continue
            res = zh_verify(g)
            assert SKIPPED not in res.values()
            worst = max(worst, max_residual(res))
        assert worst <= 1e-10

    def test_two_forms_of_theta_agree(self, rng):
        for _ in range(100):
            I, L, om = random_state(rng)
            g = zh_state(I, L, 1.0, om)
            speed = math.sqrt(2 * g.h / g.m)
            assert g.theta == pytest.approx(speed / g.p * math.cos(g.alpha), rel=1e-10)

    @given(seeds)
    def test_homogeneity_without_gyro(self, seed):
        rng = np.random.default_rng(seed)
        I, _, om = random_state(rng)
        c = rng.uniform(0.2, 5.0)
        a, b = zh_state(I, np.zeros(3), 1.0, om), zh_state(I, np.zeros(3), 1.0, c * om)
        assert abs(b.theta - c * a.theta) <= 1e-12 * max(1.0, c * a.theta)
        assert abs(b.theta_prime - c * a.theta_prime) <= 1e-12 * max(1.0, c * a.theta_prime)

    @given(seeds)
    def test_homogeneity_with_scaled_gyro(self, seed):
        rng = np.random.default_rng(seed)
        I, L, om = random_state(rng)
        c = rng.uniform(0.2, 5.0)
        a, b = zh_state(I, L, 1.0, om), zh_state(I, c * L, 1.0, c * om)
        assert abs(b.theta - c * a.theta) <= 1e-12 * max(1.0, c * a.theta)
        assert abs(b.theta_prime - c * a.theta_prime) <= 1e-12 * max(1.0, c * a.theta_prime)

    def test_parallel_plane_flag(self):
        # g is along Omega; choose L so that K = M + L is orthogonal to Omega
        I = np.array([1.0, 2.0, 3.0])
        om = np.array([1.0, 0.0, 0.0])
        g = zh_state(I, [-1.0, 1.0, 0.0], 1.0, om)
        assert PARALLEL_PLANE in g.flags
        assert g.K_pt is None and math.isnan(g.theta)
        res = zh_verify(g)
        assert all(res[k] == SKIPPED for k in ("c", "d", "e_theta", "e_theta_prime", "f"))

    @pytest.mark.parametrize("bad", [
        dict(I=[1.0, -1.0, 1.0], m=1.0, om=[1.0, 0, 0]),
        dict(I=[1.0, 1.0, 1.0], m=0.0, om=[1.0, 0, 0]),
        dict(I=[1.0, 1.0, 1.0], m=1.0, om=[0.0, 0, 0]),
    ])
    def test_bad_inputs(self, bad):
        with pytest.raises(ValueError):
            zh_state(bad["I"], np.zeros(3), bad["m"], bad["om"])


class TestTrace:
    def spec_and_point(self, L):
        spec = M.classical_euler([1.0, 2.0, 3.0], L)
        return spec, PhasePoint("r3", np.array([0.6, -0.9, 0.4]), np.zeros(3))

    def test_constants_of_motion(self):
        spec, x = self.spec_and_point([0.2, -0.3, 0.5])
        trace = zh_trace(simulate("rk4", spec, x, 1e-3, 10.0), stride=10)
        assert max(trace.drift.values()) <= 1e-7
        assert trace.flagged_fraction <= 0.01
        for s in trace.samples:
            assert max_residual(zh_verify(s)) <= 1e-10

    def test_zero_gyro_centre(self):
        spec, x = self.spec_and_point([0.0, 0.0, 0.0])
        trace = zh_trace(simulate("rk4", spec, x, 1e-2, 2.0))
        for s in trace.samples:
            np.testing.assert_array_equal(s.L_pt, 0.0)

    def test_standard_representation(self):
        spec, x = self.spec_and_point([0.2, -0.3, 0.5])
        xs = M.to_representation(spec, x, "standard")
        a = zh_trace(simulate("rk4", spec, x, 1e-2, 1.0))
        b = zh_trace(simulate("rk4", spec, xs, 1e-2, 1.0))
        np.testing.assert_allclose(a.samples[-1].N, b.samples[-1].N, atol=1e-13)

    def test_rejects_other_families(self, rng):
        spec = M.classical_lagrange(1.0, 0.5, 0.5, 0.0)
        traj = simulate("rk4", spec, M.random_point(spec, rng), 1e-2, 0.1)
        with pytest.raises(ValueError):
            zh_trace(traj)

    def test_rows(self):
        spec, x = self.spec_and_point([0.2, -0.3, 0.5])
        trace = zh_trace(simulate("rk4", spec, x, 1e-2, 0.1))
        rows = list(trace_rows(trace))
        assert len(rows) == len(trace.samples)
        assert all(len(r) == len(ZH_COLUMNS) for r in rows)
        assert rows[0][0] == 0.0 and rows[0][-1] == ""
