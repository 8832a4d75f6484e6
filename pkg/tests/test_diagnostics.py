import numpy as np
import pytest

from gyrotop import models as M
from gyrotop.diagnostics import (
    asserted_pairs,
    bracket_gyro,
    brute_force_rank,
    completeness_count,
    crosscheck_so3,
    expected_rank_oracle,
    independence_rank,
    integrability_family,
    involution_matrix,
    jacobi_residual,
    poisson_map_check,
    structure_relation_residual,
)
from gyrotop.poisson import IntegralFamily, ModelMismatch, casimirs, product_field
from gyrotop.skew import basis_bivector, skew


def with_gyro(spec, rng):
    return spec.with_(L=M.generic_gyro(spec, rng))


def regular_chi(n, rng):
    return skew(rng.uniform(-0.5, 0.5, (n, n)))


def all_specs(rng, sizes=(3, 4, 5, 6)):
    out = [with_gyro(M.lagrange_bitop(1.0, 0.5, 0.5, 0.3), rng)]
    for n in sizes:
        out += [
            with_gyro(M.lagrange_top(n, 1.0, 0.5, 0.5), rng),
            with_gyro(M.totally_symmetric(n, 1.0, regular_chi(n, rng)), rng),
            with_gyro(M.belyaev_top(n, 1.0, 0.5, 0.5), rng),
        ]
    out += [with_gyro(M.manakov_gyro([1.0, 1.0, 0.5, 0.5]), rng),
            with_gyro(M.manakov_gyro([1.0, 1.0, 0.5, 0.5, 0.75, 0.75]), rng)]
    return out


class TestCompleteness:
    @pytest.mark.parametrize("model,n,leaf,dof,expected", [
        ("so_so", 4, 8, 4, 8),
        ("so_so", 3, 4, 2, 4),
        ("e_n", 3, 4, 2, 4),
        ("e_n", 4, 8, 4, 6),
        ("so", 4, 4, 2, 4),
    ])
    def test_counts(self, model, n, leaf, dof, expected):
        spec = {"so_so": M.lagrange_top(n, 1.0, 0.5, 0.5),
                "e_n": M.belyaev_top(n, 1.0, 0.5, 0.5),
                "so": M.manakov_gyro([1.0] * n)}[model]
        c = completeness_count(spec)
        assert (c.leaf_dim, c.dof, c.expected_rank) == (leaf, dof, expected)

    def test_counts_match_poisson_tensor(self, rng):
        for spec in all_specs(rng):
            pts = [M.random_point(spec, rng) for _ in range(5)]
            assert expected_rank_oracle(spec, pts) == completeness_count(spec), (spec.family, spec.n)

    def test_casimir_count_matches_family(self, rng):
        for spec in all_specs(rng):
            assert len(casimirs(spec.model, spec.n)) == completeness_count(spec).casimirs


class TestRank:
    def test_dependent_pair(self, rng):
        q1 = casimirs("e_n", 3)[0]
        x = M.random_point(M.belyaev_top(3, 1.0, 0.5, 0.5), rng)
        assert independence_rank(IntegralFamily([q1, product_field(q1, q1)]), x) == 1

    def test_bitop_standard(self, rng):
        spec = with_gyro(M.lagrange_bitop(1.0, 0.5, 0.5, 0.3), rng)
        fam = integrability_family(spec, commutative=True)
        for _ in range(5):
            x = M.random_point(spec, rng, "standard")
            assert independence_rank(fam, x) == 8
            assert brute_force_rank(fam, x) == 8

    def test_lagrange_n3(self, rng):
        spec = with_gyro(M.lagrange_top(3, 1.0, 0.5, 0.5), rng)
        x = M.random_point(spec, rng)
        assert independence_rank(integrability_family(spec, commutative=True), x) == 4

    @pytest.mark.parametrize("which", [
        "bitop", "totsym4", "totsym5", "totsym6", "lagrange4", "belyaev4", "belyaev5", "manakov4",
    ])
    def test_generic_rank(self, which):
        rng = np.random.default_rng(sum(map(ord, which)))
        spec = {
            "bitop": M.lagrange_bitop(1.0, 0.5, 0.5, 0.3),
            "totsym4": M.totally_symmetric(4, 1.0, regular_chi(4, rng)),
            "totsym5": M.totally_symmetric(5, 1.0, regular_chi(5, rng)),
            "totsym6": M.totally_symmetric(6, 1.0, regular_chi(6, rng)),
            "lagrange4": M.lagrange_top(4, 1.0, 0.5, 0.5),
            "belyaev4": M.belyaev_top(4, 1.0, 0.5, 0.5),
            "belyaev5": M.belyaev_top(5, 1.0, 0.5, 0.5),
            "manakov4": M.manakov_gyro([1.0, 1.0, 0.5, 0.5]),
        }[which]
        spec = with_gyro(spec, rng)
        fam = integrability_family(spec, commutative=True)
        expected = completeness_count(spec).expected_rank
        ranks = [independence_rank(fam, M.random_point(spec, rng)) for _ in range(20)]
        assert max(ranks) <= expected
        assert sum(r == expected for r in ranks) >= 19


class TestInvolution:
    def test_asserted_pairs_vanish(self, rng):
        for spec in all_specs(rng):
            fam = integrability_family(spec)
            rep = involution_matrix(spec, fam, [M.random_point(spec, rng) for _ in range(10)])
            assert rep.max_asserted(normalized=True) <= 1e-9, (spec.family, spec.n, rep.worst_pair())
            if spec.n <= 4:
                # gradients stay small enough here for the absolute bound to clear rounding
                assert rep.max_asserted() <= 1e-9, (spec.family, spec.n, rep.worst_pair())
            assert np.array_equal(rep.matrix, rep.matrix.T)
            assert np.all(rep.matrix >= 0)

    def test_casimirs_against_everything(self, rng):
        spec = with_gyro(M.lagrange_top(5, 1.0, 0.5, 0.5), rng)
        fam = integrability_family(spec)
        rep = involution_matrix(spec, fam, [M.random_point(spec, rng) for _ in range(10)])
        cas = [i for i, k in enumerate(rep.kinds) if k == "casimir"]
        assert rep.normalized[cas].max() <= 1e-10

    def test_bitop_spectral(self, rng):
        spec = with_gyro(M.lagrange_bitop(1.0, 0.5, 0.5, 0.3), rng)
        fam = integrability_family(spec).of_kind("spectral")
        rep = involution_matrix(spec, fam, [M.random_point(spec, rng) for _ in range(10)])
        assert rep.max_asserted() <= 1e-9

    def test_bitop_noether_commute(self, rng):
        spec = with_gyro(M.lagrange_bitop(1.0, 0.5, 0.5, 0.3), rng)
        fam = integrability_family(spec).of_kind("noether")
        assert fam.labels == ["N12", "N34"]
        rep = involution_matrix(spec, fam, [M.random_point(spec, rng) for _ in range(10)])
        assert rep.matrix[0, 1] == 0.0

    def test_noncommutative_h_is_ungated(self, rng):
        spec = with_gyro(M.lagrange_top(5, 1.0, 0.5, 0.5), rng)
        fam = integrability_family(spec)
        mask = asserted_pairs(spec, fam)
        kinds = [F.kind for F in fam]
        n_idx = [i for i, k in enumerate(kinds) if k == "noether"]
        s_idx = [i for i, k in enumerate(kinds) if k == "spectral"]
        assert not mask[n_idx[0], n_idx[1]]
        assert mask[n_idx[0], s_idx[0]]
        rep = involution_matrix(spec, fam, [M.random_point(spec, rng) for _ in range(5)])
        assert rep.normalized[~mask].max() > 1e-3  # these really do not commute

    def test_failures_listing(self, rng):
        spec = with_gyro(M.lagrange_bitop(1.0, 0.5, 0.5, 0.3), rng)
        fam = integrability_family(spec)
        rep = involution_matrix(spec, fam, [M.random_point(spec, rng) for _ in range(3)])
        assert rep.failures(1e-6) == []
        assert rep.failures(0.0)

    def test_model_mismatch(self, rng):
        spec = M.lagrange_bitop(1.0, 0.5, 0.5, 0.3)
        other = M.belyaev_top(4, 1.0, 0.5, 0.5)
        with pytest.raises(ModelMismatch):
            involution_matrix(spec, integrability_family(spec), [M.random_point(other, rng)])


class TestPoissonMap:
    def test_shift_is_poisson(self, rng):
        for spec in all_specs(rng, sizes=(3, 4)):
            pts = [M.random_point(spec, rng, "magnetic") for _ in range(5)]
            assert poisson_map_check(spec.L, pts, rng, pairs=20) <= 1e-10, spec.family

    def test_wrong_shift_detected(self, rng):
        spec = with_gyro(M.lagrange_top(4, 1.0, 0.5, 0.5), rng)
        pts = [M.random_point(spec, rng) for _ in range(5)]
        assert poisson_map_check(spec.L, pts, rng, pairs=20, shift_factor=2.0) > 1e-3

    def test_zero_gyro(self, rng):
        spec = M.belyaev_top(4, 1.0, 0.5, 0.5)
        pts = [M.random_point(spec, rng) for _ in range(3)]
        assert poisson_map_check(spec.L, pts, rng, pairs=10) == 0.0

    def test_needs_points(self, rng):
        with pytest.raises(ValueError):
            poisson_map_check(np.zeros((3, 3)), [], rng)


class TestStructure:
    def test_relations_and_jacobi(self, rng):
        for spec in all_specs(rng, sizes=(3, 4)):
            for rep in ("magnetic", "standard"):
                x = M.random_point(spec, rng, rep)
                gyro = bracket_gyro(spec, x)
                assert structure_relation_residual(x, gyro) <= 1e-13
                assert jacobi_residual(x, gyro, rng, triples=5) <= 1e-9

    def test_gyro_only_on_magnetic_points(self, rng):
        spec = with_gyro(M.lagrange_top(4, 1.0, 0.5, 0.5), rng)
        assert bracket_gyro(spec, M.random_point(spec, rng, "standard")) is None
        assert np.array_equal(bracket_gyro(spec, M.random_point(spec, rng, "magnetic")), spec.L)


class TestCrosscheck:
    @pytest.mark.parametrize("which", ["lagrange", "totsym", "belyaev"])
    def test_matrix_and_vector_forms_agree(self, which, rng):
        spec = {"lagrange": M.lagrange_top(3, 1.0, 0.5, 0.5),
                "totsym": M.totally_symmetric(3, 1.0, regular_chi(3, rng)),
                "belyaev": M.belyaev_top(3, 1.0, 0.5, 0.5)}[which]
        spec = with_gyro(spec, rng)
        for rep in ("magnetic", "standard"):
            for _ in range(20):
                assert crosscheck_so3(spec, M.random_point(spec, rng, rep)) <= 1e-12

    def test_free_top(self, rng):
        spec = M.lagrange_top(3, 0.8, 0.3, 0.0)
        assert crosscheck_so3(spec, M.random_point(spec, rng)) <= 1e-13

    def test_rejects_other_dimensions(self, rng):
        spec = M.lagrange_top(4, 1.0, 0.5, 0.5)
        with pytest.raises(ValueError):
            crosscheck_so3(spec, M.random_point(spec, rng))
        with pytest.raises(ValueError):
            crosscheck_so3(M.classical_euler([1, 2, 3]), M.random_point(M.classical_euler([1, 2, 3]), rng))

    def test_detects_a_broken_vector_field(self, rng, monkeypatch):
        import gyrotop.diagnostics as D

        spec = with_gyro(M.lagrange_top(3, 1.0, 0.5, 0.5), rng)
        x = M.random_point(spec, rng)
        real = D.vector_field
        monkeypatch.setattr(D, "vector_field", lambda s, p: real(s, p).replace(field=-real(s, p).field))
        assert crosscheck_so3(spec, x) > 1e-3
