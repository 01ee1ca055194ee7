import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banachmet import AmbientSpace, NormSpec, Subspace, volume
from banachmet.suites import make_norm

PLANE = Subspace(np.eye(2))


def test_omega_closed_forms():
    assert volume.omega(1) == pytest.approx(2.0)
    assert volume.omega(2) == pytest.approx(math.pi)
    assert volume.omega(3) == pytest.approx(4 * math.pi / 3)


class TestUnitBallVolume:
    def test_euclidean_disk(self, rng):
        E = Subspace.random(4, 2, rng)
        assert volume.unit_ball_volume(AmbientSpace(4), E).value == pytest.approx(math.pi, rel=1e-9)

    def test_square(self):
        v = volume.unit_ball_volume(AmbientSpace(2, NormSpec.linf()), PLANE)
        assert v.value == pytest.approx(4.0, rel=1e-9)

    def test_cross_polytope(self):
        v = volume.unit_ball_volume(AmbientSpace(2, NormSpec.lp(1)), PLANE)
        assert v.value == pytest.approx(2.0, rel=1e-9)

    def test_cube_and_octahedron(self):
        E = Subspace(np.eye(3))
        assert volume.unit_ball_volume(AmbientSpace(3, NormSpec.linf()), E).value == pytest.approx(8.0, rel=1e-9)
        assert volume.unit_ball_volume(AmbientSpace(3, NormSpec.lp(1)), E).value == pytest.approx(4 / 3, rel=1e-9)


class TestJohnForm:
    def test_euclidean_gram_is_identity(self, rng):
        E = Subspace.random(4, 3, rng)
        jf = volume.john_form(AmbientSpace(4), E)
        np.testing.assert_allclose(jf.gram, np.eye(3), atol=1e-8)

    def test_square_gram(self):
        jf = volume.john_form(AmbientSpace(2, NormSpec.linf()), PLANE)
        np.testing.assert_allclose(jf.gram, (math.pi / 4) * np.eye(2), rtol=1e-3)

    @pytest.mark.parametrize("label", ["l1", "linf", "w15"])
    def test_line_form_is_ambient_norm(self, label, rng):
        sp = AmbientSpace(3, make_norm(label, 3, rng))
        E = Subspace.random(3, 1, rng)
        jf = volume.john_form(sp, E)
        c = rng.standard_normal((20, 1))
        np.testing.assert_allclose(jf.norm(c), sp.norm(c @ E.basis.T), rtol=1e-9)

    @pytest.mark.parametrize("label", ["l1", "linf", "w15"])
    def test_sandwich_and_positive_gram(self, label, rng):
        sp = AmbientSpace(4, make_norm(label, 4, rng))
        E = Subspace.random(4, 3, rng)
        jf = volume.john_form(sp, E)
        assert np.all(np.linalg.eigvalsh(jf.gram) > 0)
        c = rng.standard_normal((500, 3))
        ratio = jf.norm(c) / sp.norm(c @ E.basis.T)
        s = math.sqrt(3) * (1 + 1e-3)
        assert ratio.max() <= s and ratio.min() >= 1 / s

    def test_fixture_constants(self):
        consts = volume.load_john_constants()
        assert consts  # shipped with the package
        for q in range(1, 5):
            assert volume.john_distortion(q) >= math.sqrt(q)
        assert volume.john_distortion(3, euclidean=True) == pytest.approx(1.0)


class TestParallelepiped:
    def test_orthonormal_euclidean(self, rng):
        E = Subspace.random(3, 2, rng)
        v = volume.parallelepiped_volume(AmbientSpace(3), E, E.basis)
        assert v.value == pytest.approx(1.0, rel=1e-9)

    def test_square_coordinate_vectors(self):
        v = volume.parallelepiped_volume(AmbientSpace(2, NormSpec.linf()), PLANE, np.eye(2))
        assert v.value == pytest.approx(math.pi / 4, rel=1e-9)

    @pytest.mark.parametrize("label", ["l1", "w15"])
    def test_scaling_first_vector(self, label, rng):
        sp = AmbientSpace(3, make_norm(label, 3, rng))
        E = Subspace.random(3, 2, rng)
        w = E.basis.copy()  # vectors are columns
        base = volume.parallelepiped_volume(sp, E, w).value
        w[:, 0] *= 2.5
        assert volume.parallelepiped_volume(sp, E, w).value == pytest.approx(2.5 * base, rel=1e-9)


class TestDeterminant:
    def test_diag(self):
        assert volume.determinant(AmbientSpace(2), np.diag([2.0, 3.0]), PLANE) == pytest.approx(6.0)

    @pytest.mark.parametrize("label", ["euclidean", "l1", "linf", "w15"])
    def test_homogeneity(self, label, rng):
        sp = AmbientSpace(3, make_norm(label, 3, rng))
        E = Subspace.random(3, 2, rng)
        assert volume.determinant(sp, 2 * np.eye(3), E) == pytest.approx(4.0, rel=1e-2)

    def test_rank_deficient_is_zero(self, rng):
        sp = AmbientSpace(3, NormSpec.lp(1))
        A = np.diag([1.0, 0.0, 0.0])
        assert volume.determinant(sp, A, Subspace(np.eye(3)[:, 1:])) == 0.0

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 5))
    def test_gram_oracle(self, seed, d):
        rng = np.random.default_rng(seed)
        q = int(rng.integers(1, d + 1))
        A = rng.standard_normal((d, d))
        E = Subspace.random(d, q, rng)
        w = A @ E.basis
        want = math.sqrt(max(np.linalg.det(w.T @ w), 0.0))
        if want < 1e-8:
            return
        assert volume.determinant(AmbientSpace(d), A, E) == pytest.approx(want, rel=1e-8)

    def test_coordinate_polytopes_are_exact(self):
        sp = AmbientSpace(3, NormSpec.linf())
        est = volume.determinant_estimate(sp, np.diag([2.0, 3.0, 5.0]), Subspace(np.eye(3)))
        assert est.value == pytest.approx(30.0, rel=1e-9)
        assert est.rel_error < 1e-6


class TestSVDAndBounds:
    def test_identity(self, rng):
        res = volume.approx_svd_basis(AmbientSpace(3, NormSpec.lp(1)), np.eye(3), Subspace(np.eye(3)))
        assert res.hadamard_holds
        np.testing.assert_allclose(res.products, 1.0, rtol=1e-6)

    def test_euclidean_diag(self):
        res = volume.approx_svd_basis(AmbientSpace(2), np.diag([3.0, 2.0]), PLANE)
        assert res.det == pytest.approx(6.0)
        assert float(np.prod(res.products)) == pytest.approx(6.0)

    def test_min_expansion_examples(self, rng):
        sp = AmbientSpace(2)
        assert volume.min_expansion_bound(sp, np.eye(2), PLANE, rng).holds
        res = volume.min_expansion_bound(sp, np.diag([3.0, 1.0]), PLANE, rng)
        assert res.holds
        assert res.lhs == pytest.approx(3.0, rel=1e-6)
        zero = volume.min_expansion_bound(sp, np.diag([1.0, 0.0]), PLANE, rng)
        assert zero.rhs == 0.0 and zero.holds

    def test_block_identity_and_product(self, rng):
        sp = AmbientSpace(2)
        res = volume.block_det_bounds(sp, np.eye(2), Subspace(np.eye(2)[:, :1]), Subspace(np.eye(2)[:, 1:]), rng)
        assert res.ratio == pytest.approx(1.0) and res.holds
        res = volume.block_det_bounds(sp, np.diag([5.0, 0.2]), Subspace(np.eye(2)[:, :1]),
                                      Subspace(np.eye(2)[:, 1:]), rng)
        assert res.ratio == pytest.approx(1.0)

    @pytest.mark.parametrize("label", ["l1", "linf", "w15"])
    def test_block_random(self, label, rng):
        sp = AmbientSpace(3, make_norm(label, 3, rng))
        for _ in range(3):
            res = volume.block_det_bounds(sp, rng.standard_normal((3, 3)), Subspace.random(3, 1, rng),
                                          Subspace.random(3, 2, rng), rng)
            assert res.holds


class TestBallSection:
    def test_centered_euclidean(self, rng):
        E = Subspace.random(3, 2, rng)
        est = volume.ball_section_volume(AmbientSpace(3), E, np.zeros(3), 0.7)
        assert est.value == pytest.approx(0.49 * math.pi, rel=1e-6)

    def test_far_point_is_empty(self):
        E = Subspace(np.eye(3)[:, :2])
        est = volume.ball_section_volume(AmbientSpace(3), E, np.array([0.0, 0.0, 2.0]), 1.0)
        assert est.value == 0.0

    def test_linf_plane(self, rng):
        sp = AmbientSpace(3, NormSpec.linf())
        E = Subspace.random(3, 2, rng)
        est = volume.ball_section_volume(sp, E, rng.standard_normal(3) * 0.3, 1.0)
        assert est.value <= 4 * volume.omega(2) + 3 * est.rel_error * est.value
