import logging

import numpy as np
import pytest
from hypothesis import given

from gyrotop import models as M
from gyrotop.diagnostics import bracket_gyro
from gyrotop.lax import (
    LaxPolynomial,
    build_lax,
    convolve,
    hat_matrix,
    hat_vector,
    lax_residual,
    lax_residual_coefficients,
    noether_integrals,
    powers,
    shift_integrals,
    spectral_invariants,
)
from gyrotop.poisson import PhasePoint, bracket, fd_gradient
from gyrotop.skew import basis_bivector, commutator, inner, skew

from strategies import seeds
from test_models import family_specs

LAX_FAMILIES = ("lagrange_so_so", "bitop", "totally_symmetric", "belyaev_e_n", "manakov_gyro")


@pytest.fixture
def specs(rng):
    return [s for s in family_specs(rng) if s.family in LAX_FAMILIES]


def by_label(fam, label):
    (f,) = [f for f in fam if f.label == label]
    return f


class TestPolynomials:
    def test_convolution_matches_sampling(self, rng):
        a = [rng.normal(size=(3, 3)) for _ in range(3)]
        b = [rng.normal(size=(3, 3)) for _ in range(2)]
        p = LaxPolynomial(tuple(a)) @ LaxPolynomial(tuple(b))
        for lam in (-1.3, 0.0, 0.7, 2.0):
            np.testing.assert_allclose(p(lam), LaxPolynomial(tuple(a))(lam) @ LaxPolynomial(tuple(b))(lam), atol=1e-12)
        assert len(convolve(a, b)) == 4

    def test_powers(self, rng):
        p = [rng.normal(size=(3, 3)) for _ in range(2)]
        third = LaxPolynomial(tuple(powers(p, 3)[3]))
        np.testing.assert_allclose(third(0.4), np.linalg.matrix_power(p[0] + 0.4 * p[1], 3), atol=1e-12)

    def test_hatted_blocks(self):
        xi = basis_bivector(3, 0, 1)
        eta = np.array([1.0, 2.0, 3.0])
        h = hat_matrix(xi) + hat_vector(eta)
        assert np.array_equal(h, -h.T)
        assert np.array_equal(h[:3, :3], xi)
        assert np.array_equal(h[:3, 3], eta)
        assert h[3, 3] == 0.0

    @given(seeds)
    def test_hatted_embedding_is_homomorphism(self, seed):
        # [xi^ + a^, eta^ + b^] = ([xi, eta] + (xi b - eta a))^ on the semidirect product
        rng = np.random.default_rng(seed)
        xi, eta = skew(rng.normal(size=(4, 4))), skew(rng.normal(size=(4, 4)))
        a, b = rng.normal(size=4), rng.normal(size=4)
        lhs = commutator(hat_matrix(xi) + hat_vector(a), hat_matrix(eta) + hat_vector(b))
        rhs = hat_matrix(commutator(xi, eta) - np.outer(a, b) + np.outer(b, a)) + hat_vector(xi @ b - eta @ a)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestBuildLax:
    def test_lagrange_top_coefficient(self, rng):
        spec = M.lagrange_top(5, 0.9, 0.4, 0.5)
        lax, a = build_lax(spec, M.random_point(spec, rng))
        assert lax.degree == 2
        np.testing.assert_allclose(lax.coeffs[2], (0.9 + 0.4) * spec.chi, rtol=0, atol=0)
        np.testing.assert_array_equal(a.coeffs[1], spec.chi)

    def test_totally_symmetric_top_coefficient(self, rng):
        chi = skew(rng.uniform(-1, 1, (4, 4)))
        spec = M.totally_symmetric(4, 0.7, chi)
        lax, _ = build_lax(spec, M.random_point(spec, rng))
        np.testing.assert_array_equal(lax.coeffs[2], 2 * 0.7 * chi)

    def test_manakov_degree_and_constant_term(self, rng):
        spec = M.manakov_gyro([1.0, 1.0, 0.5, 0.5], basis_bivector(4, 0, 1))
        x = M.random_point(spec, rng)
        lax, a = build_lax(spec, x)
        assert lax.degree == 1 and a.degree == 1
        np.testing.assert_array_equal(lax.coeffs[0], x.momentum + spec.L)
        np.testing.assert_array_equal(lax.coeffs[1], np.diag(spec.J ** 2))

    def test_belyaev_is_hatted(self, rng):
        spec = M.belyaev_top(4, 1.0, 0.5, 0.5)
        x = M.random_point(spec, rng)
        lax, _ = build_lax(spec, x)
        assert lax.dim == 5
        np.testing.assert_array_equal(lax.coeffs[0], hat_vector(x.field))
        np.testing.assert_allclose(lax.coeffs[2], 1.5 * hat_vector(spec.chi))

    def test_standard_points_are_converted(self, rng):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5)
        spec = spec.with_(L=M.generic_gyro(spec, rng))
        x = M.random_point(spec, rng, "magnetic")
        a, _ = build_lax(spec, x)
        b, _ = build_lax(spec, M.to_representation(spec, x, "standard"))
        np.testing.assert_allclose(a.coeffs[1], b.coeffs[1], atol=1e-15)


class TestResidual:
    def test_all_families_vanish(self, specs, rng):
        for spec in specs:
            for rep in ("magnetic", "standard"):
                worst = max(lax_residual(spec, M.random_point(spec, rng, rep)) for _ in range(100))
                assert worst <= 1e-12, spec.family

    def test_gyro_outside_h_is_detected(self, rng):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5, basis_bivector(4, 0, 2))
        assert M.validate(spec)
        vals = [lax_residual(spec, M.random_point(spec, rng), check=False) for _ in range(20)]
        assert min(vals) > 1e-3

    def test_invalid_spec_raises(self):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5, basis_bivector(4, 0, 2))
        with pytest.raises(M.ModelError):
            lax_residual(spec, M.random_point(spec, np.random.default_rng(0)))

    def test_manakov_linear_coefficient(self, rng):
        spec = M.manakov_gyro([1.0, 1.0, 0.5, 0.5, 0.75, 0.75])
        spec = spec.with_(L=M.generic_gyro(spec, rng))
        x = M.random_point(spec, rng)
        J = np.diag(spec.J)
        om = M.angular_velocity(spec, x)
        # the lambda-one identity, independent of the Lax machinery
        assert np.max(np.abs(commutator(J @ J, om) + commutator(x.momentum, J))) <= 1e-14
        assert lax_residual_coefficients(spec, x)[1] <= 1e-14


class TestSpectral:
    def test_manakov_quadratic_constant_term(self):
        spec = M.manakov_gyro([1.0, 2.0, 3.0])
        fam = spectral_invariants(spec)
        x = PhasePoint("so", basis_bivector(3, 0, 1))
        assert by_label(fam, "tr(K+lJ^2)^2k:1[0]").value(x) == pytest.approx(-2.0)

    def test_constant_coefficients_dropped(self, caplog):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5)
        with caplog.at_level(logging.DEBUG, logger="gyrotop.lax"):
            fam = spectral_invariants(spec)
        # tr(L^2) has lambda-powers 0..4; the top one is (a1 + a2)^2 tr(chi^2)
        assert "trL^2k:1[4]" not in fam.labels
        assert "trL^2k:1[3]" in fam.labels
        assert "trL^2k:2[8]" not in fam.labels
        assert "dropping" in caplog.text

    def test_quadratic_coefficients_by_expansion(self, rng):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5)
        spec = spec.with_(L=M.generic_gyro(spec, rng))
        fam = spectral_invariants(spec)
        x = M.random_point(spec, rng)
        K, G, C = x.momentum + spec.L, x.field, 1.5 * spec.chi
        tr = np.trace
        expected = {0: tr(G @ G), 1: 2 * tr(G @ K), 2: tr(K @ K) + 2 * tr(G @ C), 3: 2 * tr(K @ C)}
        for p, v in expected.items():
            assert by_label(fam, f"trL^2k:1[{p}]").value(x) == pytest.approx(v, abs=1e-12)

    def test_gradients_match_finite_differences(self, specs, rng):
        for spec in specs:
            for f in spectral_invariants(spec) + shift_integrals(spec):
                for _ in range(10):
                    x = M.random_point(spec, rng)
                    g = f.grad(x).coords()
                    fd = fd_gradient(f.value, x).coords()
                    assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g)), (spec.family, f.label)

    def test_isospectral(self, specs, rng):
        for spec in specs:
            fam = spectral_invariants(spec)
            for rep in ("magnetic", "standard"):
                for _ in range(10):
                    x = M.random_point(spec, rng, rep)
                    v = M.vector_field(spec, x).coords()
                    for f in fam:
                        g = f.grad(x).coords()
                        assert abs(g @ v) <= 1e-10 * max(1.0, np.linalg.norm(g)), (spec.family, f.label)

    def test_manakov_odd_powers_only_for_manakov(self, specs):
        for spec in specs:
            odd = [lab for lab in spectral_invariants(spec).labels if "2k+1" in lab]
            assert bool(odd) == (spec.family == "manakov_gyro")


class TestShift:
    def test_zero_gyro_gives_noether(self):
        spec = M.lagrange_top(5, 1.0, 0.5, 0.5)
        fam = shift_integrals(spec)
        assert {f.kind for f in fam} == {"noether"}
        assert len(fam) == len(M.symmetry_subalgebra(spec).basis)

    def test_quadratic_term(self, rng):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5)
        spec = spec.with_(L=M.generic_gyro(spec, rng))
        h = M.symmetry_subalgebra(spec)
        fam = shift_integrals(spec)
        assert "tr(Kh+lI^-1L)^2i:1[2]" not in fam.labels
        x = M.random_point(spec, rng)
        Kh = h.project(x.momentum + spec.L)
        assert by_label(fam, "tr(Kh+lI^-1L)^2i:1[0]").value(x) == pytest.approx(np.trace(Kh @ Kh), abs=1e-12)

    def test_noether_values(self, rng):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5)
        spec = spec.with_(L=M.generic_gyro(spec, rng))
        x = M.random_point(spec, rng)
        fam = noether_integrals(spec)
        assert fam.labels == ["N12", "N34"]
        K = x.momentum + spec.L
        assert abs(fam[0].value(x)) == pytest.approx(abs(K[0, 1]), abs=1e-14)

    def test_commute_with_gyroscopic_hamiltonian(self, specs, rng):
        for spec in specs:
            H = M.hamiltonian_field(spec)
            for f in shift_integrals(spec).of_kind("shift"):
                for _ in range(10):
                    x = M.random_point(spec, rng)
                    val = bracket(H, f, x, bracket_gyro(spec, x))
                    assert abs(val) <= 1e-9 * max(1.0, np.linalg.norm(f.grad(x).coords())), (spec.family, f.label)

    def test_classical_rejected(self):
        with pytest.raises(ValueError):
            shift_integrals(M.classical_euler([1.0, 2.0, 3.0]))


@given(seeds)
def test_belyaev_hatted_gyro_commutes_with_field(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    spec = M.belyaev_top(n, 1.0, 0.5, float(rng.uniform(0.1, 1.0)))
    spec = spec.with_(L=M.generic_gyro(spec, rng))
    assert np.array_equal(commutator(hat_matrix(spec.L), hat_vector(spec.chi)), np.zeros((n + 1, n + 1)))
    assert inner(spec.L, spec.L) > 0
