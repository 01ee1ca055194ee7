import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banachmet import AmbientSpace, NormSpec, Subspace, ambient, spectral
from banachmet.suites import make_norm

EUC3 = AmbientSpace(3)
DIAG321 = np.diag([3.0, 2.0, 1.0])


def test_volume_growth_diag_with_witness(rng):
    res = spectral.max_volume_growth(EUC3, DIAG321, 2, rng)
    assert res.value == pytest.approx(6.0, rel=1e-9)
    assert ambient.hausdorff(EUC3, res.witness, Subspace(np.eye(3)[:, :2])) < 1e-6


@pytest.mark.parametrize("label", ["euclidean", "l1", "linf", "w15"])
@pytest.mark.parametrize("q", [1, 2])
def test_identity_has_unit_growth(label, q, rng):
    sp = AmbientSpace(3, make_norm(label, 3, rng))
    assert spectral.max_volume_growth(sp, np.eye(3), q, rng).value == pytest.approx(1.0, rel=1e-2)
    assert spectral.gelfand_number(sp, np.eye(3), q, rng).value == pytest.approx(1.0, rel=1e-6)


def test_rank_below_q(rng):
    A = np.outer([1.0, 2.0, 0.0], [0.5, -1.0, 1.0])
    assert spectral.max_volume_growth(EUC3, A, 2, rng).value == pytest.approx(0.0, abs=1e-10)
    assert spectral.gelfand_number(EUC3, A, 2, rng).value == pytest.approx(0.0, abs=1e-10)


def test_gelfand_diag(rng):
    for q, want in ((1, 3.0), (2, 2.0), (3, 1.0)):
        assert spectral.gelfand_number(EUC3, DIAG321, q, rng).value == pytest.approx(want, rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_svd_oracles_property(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    q = int(rng.integers(1, d + 1))
    A = rng.standard_normal((d, d))
    s = np.linalg.svd(A, compute_uv=False)
    sp = AmbientSpace(d)
    v = spectral.max_volume_growth(sp, A, q, rng).value
    assert 0.95 * np.prod(s[:q]) <= v <= np.prod(s[:q]) * (1 + 1e-9)
    c = spectral.gelfand_number(sp, A, q, rng).value
    assert c == pytest.approx(s[q - 1], rel=0.05)


def test_euclidean_ratio_is_one(rng):
    A = rng.standard_normal((3, 3))
    prof = spectral.singular_profile(EUC3, A, 3, rng)
    np.testing.assert_allclose(list(prof.ratios().values()), 1.0, rtol=1e-6)


@pytest.mark.parametrize("label", ["l1", "linf"])
def test_gelfand_volume_ratio_linf(label, rng):
    sp = AmbientSpace(2, make_norm(label, 2, rng))
    for _ in range(3):
        res = spectral.gelfand_volume_check(sp, rng.standard_normal((2, 2)), 2, rng)
        assert res.holds


def test_identity_ratio_any_norm(rng):
    sp = AmbientSpace(3, NormSpec.linf())
    res = spectral.gelfand_volume_check(sp, np.eye(3), 2, rng)
    assert res.ratio == pytest.approx(1.0, rel=1e-2)


def test_tail_identity_constant():
    tail = spectral.volume_growth_tail(AmbientSpace(4), np.eye(4), range(1, 5))
    np.testing.assert_allclose([v for _, v in tail.values], 0.0, atol=1e-9)
    assert tail.monotone_tail


def test_tail_decreasing_after_first():
    A = np.diag([1.0, 1e-3, 1e-3, 1e-3])
    tail = spectral.volume_growth_tail(AmbientSpace(4), A, range(1, 5))
    assert np.all(np.diff([v for _, v in tail.values]) < 0)
    assert tail.monotone_tail


def test_tail_rank_deficient_is_minus_inf():
    A = np.diag([2.0, 1.0, 0.0])
    tail = spectral.volume_growth_tail(EUC3, A, range(1, 4))
    assert tail.values[-1] == (3, -math.inf)
