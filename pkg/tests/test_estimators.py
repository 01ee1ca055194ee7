import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from banachmet import LyapunovSpectrum, NormSpec, lyapunov_exponents
from banachmet._validation import check_operator, check_operator_stack, check_q, check_vectors
from banachmet.estimators import resolve_norm


def constant_stack(m, n=1500):
    return np.repeat(np.asarray(m, dtype=float)[None], n, axis=0)


DIAG421 = constant_stack(np.diag([4.0, 2.0, 1.0]))


def test_params_round_trip():
    est = LyapunovSpectrum(norm="l1", q_max=2, n_starts=3, random_state=7)
    params = est.get_params()
    assert params["norm"] == "l1" and params["q_max"] == 2 and params["random_state"] == 7
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(n_starts=5)
    assert est.n_starts == 5


def test_fit_exponents_and_filtration():
    est = LyapunovSpectrum().fit(DIAG421)
    assert est.exponents_ == pytest.approx([math.log(4), math.log(2), 0.0], abs=1e-2)
    assert list(est.multiplicities_) == [1, 1, 1]
    assert list(est.offsets_) == [0, 1, 2, 3]
    assert est.filtration_.codims[1:] == [1, 2]
    assert est.n_features_in_ == 3


def test_predict_levels():
    est = LyapunovSpectrum().fit(DIAG421)
    np.testing.assert_array_equal(est.predict(np.eye(3)), [0, 1, 2])
    assert est.predict([1.0, 1.0, 1.0])[0] == 0


def test_predict_without_filtration_uses_rates():
    est = LyapunovSpectrum(extract_filtration=False).fit(DIAG421)
    np.testing.assert_array_equal(est.predict(np.eye(3)), [0, 1, 2])


def test_transform_rates():
    est = LyapunovSpectrum(extract_filtration=False).fit(DIAG421)
    out = est.transform(np.eye(3))
    assert out.shape == (3, 1)
    np.testing.assert_allclose(out[:, 0], [math.log(4), math.log(2), 0.0], atol=1e-12)


def test_norm_choices_agree():
    rates = []
    for norm in ("euclidean", "linf", {"kind": "lp", "p": 1}, NormSpec.weighted(1.5, [1, 2, 0.5])):
        est = LyapunovSpectrum(norm=norm, extract_filtration=False).fit(DIAG421)
        rates.append(est.exponents_)
    for r in rates[1:]:
        np.testing.assert_allclose(r, rates[0], atol=2e-2)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        LyapunovSpectrum().predict(np.eye(2))


def test_wrong_feature_count():
    est = LyapunovSpectrum(extract_filtration=False).fit(DIAG421)
    with pytest.raises(ValueError):
        est.transform(np.eye(2))


def test_deterministic_given_random_state():
    ops = np.random.default_rng(0).standard_normal((300, 3, 3))
    a = LyapunovSpectrum(extract_filtration=False, random_state=1).fit(ops).exponents_
    b = LyapunovSpectrum(extract_filtration=False, random_state=1).fit(ops).exponents_
    np.testing.assert_array_equal(a, b)


def test_convenience_wrapper_repeats_multiplicity():
    vals = lyapunov_exponents(constant_stack(np.diag([3.0, 3.0, 1.0])))
    assert vals == pytest.approx([math.log(3), math.log(3), 0.0], abs=1e-2)


def test_rank_deficient_input():
    ops = constant_stack(np.diag([2.0, 1.0, 0.0]), 200)
    est = LyapunovSpectrum(extract_filtration=False).fit(ops)
    assert est.exponents_[-1] == -math.inf


class TestValidation:
    def test_operator(self):
        assert check_operator([[1, 2], [3, 4]]).dtype == np.float64
        with pytest.raises(ValueError):
            check_operator([[1, 2, 3], [4, 5, 6]])
        with pytest.raises(ValueError):
            check_operator([[1, np.inf], [0, 1]])
        with pytest.raises(ValueError):
            check_operator(np.eye(3), dim=2)

    def test_stack(self):
        assert check_operator_stack(np.eye(2)).shape == (1, 2, 2)
        with pytest.raises(ValueError):
            check_operator_stack(np.zeros((3, 2, 3)))
        with pytest.raises(ValueError):
            check_operator_stack(np.full((2, 2, 2), np.nan))

    def test_vectors(self):
        assert check_vectors([1.0, 2.0], 2).shape == (1, 2)
        with pytest.raises(ValueError):
            check_vectors([[1.0, 2.0, 3.0]], 2)

    def test_q(self):
        assert check_q(2, 3) == 2
        for bad in (0, 4, 2.5, True):
            with pytest.raises(ValueError):
                check_q(bad, 3)

    def test_resolve_norm(self):
        assert resolve_norm("l1").p == 1
        with pytest.raises(ValueError):
            resolve_norm("l7")
