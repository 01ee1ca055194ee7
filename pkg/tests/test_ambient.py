import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banachmet import AmbientSpace, NormSpec, Subspace, ambient
from banachmet.suites import make_norm

EUC2 = AmbientSpace(2)
L1_2 = AmbientSpace(2, NormSpec.lp(1))
LINF_2 = AmbientSpace(2, NormSpec.linf())


def line(theta):
    return Subspace(np.array([[math.cos(theta)], [math.sin(theta)]]))


E1 = Subspace(np.array([[1.0], [0.0]]))
E2 = Subspace(np.array([[0.0], [1.0]]))


class TestOperatorNorm:
    def test_euclidean_diag(self):
        assert ambient.operator_norm(EUC2, np.diag([3.0, 2.0])) == pytest.approx(3.0)

    def test_linf_shear_attains_at_sign_vertex(self):
        assert ambient.operator_norm(LINF_2, [[1.0, 1.0], [0.0, 1.0]]) == pytest.approx(2.0)

    @pytest.mark.parametrize("sp", [EUC2, L1_2, LINF_2])
    def test_zero_operator(self, sp):
        assert ambient.operator_norm(sp, np.zeros((2, 2))) == 0.0

    def test_l1_is_max_column_sum(self, rng):
        a = rng.standard_normal((4, 4))
        sp = AmbientSpace(4, NormSpec.lp(1))
        assert ambient.operator_norm(sp, a, rng) == pytest.approx(np.abs(a).sum(axis=0).max(), rel=1e-9)


class TestDistance:
    def test_orthogonal(self):
        assert ambient.dist_to_subspace(EUC2, [0.0, 1.0], E1) == pytest.approx(1.0)

    def test_member(self):
        assert ambient.dist_to_subspace(L1_2, [2.0, 0.0], E1) == pytest.approx(0.0, abs=1e-12)

    def test_l1_convex_minimization(self):
        assert ambient.dist_to_subspace(L1_2, [1.0, 1.0], E1) == pytest.approx(1.0)

    def test_linf_diagonal(self):
        # min_t max(|1 - t|, |1 + t|) over the line spanned by (1, -1) is 1
        F = Subspace(np.array([[1.0], [-1.0]]))
        assert ambient.dist_to_subspace(LINF_2, [1.0, 1.0], F) == pytest.approx(1.0)


class TestMinAngle:
    def test_orthogonal_pair(self):
        res = ambient.min_angle(EUC2, E1, E2)
        assert res.sin_theta == pytest.approx(1.0)
        assert res.proj_norm == pytest.approx(1.0)

    def test_intersecting_pair(self):
        res = ambient.min_angle(EUC2, E1, E1)
        assert res.sin_theta == pytest.approx(0.0, abs=1e-12)
        assert math.isinf(res.proj_norm)

    @pytest.mark.parametrize("alpha", [0.1, 0.7, 1.2, math.pi / 2])
    def test_planar_closed_form(self, alpha):
        res = ambient.min_angle(EUC2, E1, line(alpha))
        assert res.sin_theta == pytest.approx(math.sin(alpha), abs=1e-9)


class TestComplements:
    def test_euclidean_orthogonal_complement(self, rng):
        sp = AmbientSpace(4)
        E = Subspace.random(4, 2, rng)
        split = ambient.auerbach_complement(sp, E, rng)
        assert split.proj_norm == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(E.basis.T @ split.F.basis, 0.0, atol=1e-9)

    @pytest.mark.parametrize("label", ["l1", "linf", "w15"])
    def test_lines_have_norm_one_projections(self, label, rng):
        sp = AmbientSpace(3, make_norm(label, 3, rng))
        split = ambient.auerbach_complement(sp, Subspace.random(3, 1, rng), rng)
        assert split.proj_norm <= 1 + sp.eps_opt
        assert split.certified

    def test_linf_diagonal_line(self, rng):
        sp = AmbientSpace(3, NormSpec.linf())
        E = Subspace(np.ones((3, 1)))
        split = ambient.auerbach_complement(sp, E, rng)
        ang = ambient.min_angle(sp, E, split.F, rng)
        assert split.proj_norm <= 1 + sp.eps_opt
        assert ang.proj_norm == pytest.approx(split.proj_norm, rel=1e-6)

    @pytest.mark.parametrize("label", ["l1", "linf", "w15"])
    def test_sqrt_q_bound(self, label, rng):
        sp = AmbientSpace(5, make_norm(label, 5, rng))
        split = ambient.auerbach_complement(sp, Subspace.random(5, 3, rng), rng)
        assert split.proj_norm <= math.sqrt(3) + sp.eps_opt

    def test_preimage_identity(self, rng):
        sp = AmbientSpace(3)
        E1_, F2 = Subspace.random(3, 1, rng), Subspace.random(3, 2, rng)
        split = ambient.preimage_complement(sp, np.eye(3), E1_, F2)
        assert ambient.hausdorff(sp, split.F, F2) == pytest.approx(0.0, abs=1e-9)

    def test_preimage_diag(self):
        split = ambient.preimage_complement(EUC2, np.diag([2.0, 1.0]), E1, E2)
        assert ambient.hausdorff(EUC2, split.F, E2) == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(split.projection_matrix, np.diag([1.0, 0.0]), atol=1e-12)

    def test_preimage_singular_raises(self):
        with pytest.raises(ValueError):
            ambient.preimage_complement(EUC2, np.diag([0.0, 1.0]), E1, E2)


class TestGapAndHausdorff:
    @pytest.mark.parametrize("sp", [EUC2, L1_2, LINF_2])
    def test_identical(self, sp):
        U = line(0.4)
        assert ambient.gap(sp, U, U) == pytest.approx(0.0, abs=1e-9)
        assert ambient.hausdorff(sp, U, U) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.05, 0.5, 1.0, 1.5])
    def test_planar_lines(self, alpha):
        U, V = E1, line(alpha)
        assert ambient.gap(EUC2, U, V) == pytest.approx(math.sin(alpha), abs=1e-9)
        assert ambient.hausdorff(EUC2, U, V) == pytest.approx(2 * math.sin(alpha / 2), abs=1e-9)

    def test_contained(self, rng):
        sp = AmbientSpace(3, NormSpec.lp(1))
        V = Subspace.random(3, 2, rng)
        U = Subspace(V.basis[:, :1])
        assert ambient.gap(sp, U, V, rng) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("label", ["euclidean", "l1", "linf", "w15"])
    @settings(max_examples=8, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_sandwich_property(self, label, seed):
        rng = np.random.default_rng(seed)
        sp = AmbientSpace(3, make_norm(label, 3, rng))
        U, V = Subspace.random(3, 1, rng), Subspace.random(3, 1, rng)
        g = max(ambient.gap(sp, U, V, rng), ambient.gap(sp, V, U, rng))
        h = ambient.hausdorff(sp, U, V, rng)
        assert g - 2 * sp.eps_opt <= h <= 2 * g + 2 * sp.eps_opt


class TestPerturbedSplitting:
    def test_unperturbed(self):
        res = ambient.perturbed_splitting(EUC2, E1, E1, E2)
        assert res.applicable and res.is_splitting
        assert res.measured == pytest.approx(0.0, abs=1e-12)
        assert res.graph_norm_bound == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("t", [1e-3, 0.05, 0.2])
    def test_planar_tilt(self, t):
        # e1 = (1, t) - t e2, so the projection onto F along E' maps e1 to -t e2
        Ep = Subspace(np.array([[1.0], [t]]))
        res = ambient.perturbed_splitting(EUC2, E1, Ep, E2)
        assert res.measured == pytest.approx(t, rel=1e-9)
        assert res.holds
        dh = res.d_h
        assert res.graph_norm_bound == pytest.approx(2 * dh / (1 - dh), rel=1e-9)

    def test_not_a_splitting(self):
        with pytest.raises(ValueError):
            ambient.perturbed_splitting(EUC2, E1, E1, E1)

    def test_too_far_is_inapplicable(self):
        res = ambient.perturbed_splitting(EUC2, E1, line(1.4), line(0.3))
        assert not res.applicable
