import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from banachmet import AmbientSpace, NormSpec

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
NORMS = [NormSpec.euclidean(), NormSpec.lp(1), NormSpec.linf(), NormSpec.lp(3),
         NormSpec.weighted(1.5, [0.5, 2.0, 1.0])]


def test_closed_form_values():
    x = np.array([3.0, -4.0, 0.0])
    assert NormSpec.euclidean()(x) == pytest.approx(5.0)
    assert NormSpec.lp(1)(x) == pytest.approx(7.0)
    assert NormSpec.linf()(x) == pytest.approx(4.0)
    w = NormSpec.weighted(2, [2.0, 1.0, 1.0])
    assert w(np.array([1.0, 0.0, 0.0])) == pytest.approx(2.0)


def test_batched_rows():
    x = np.array([[1.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(NormSpec.lp(1)(x), [1.0, 2.0])


@pytest.mark.parametrize("norm", NORMS, ids=repr)
@settings(max_examples=60, deadline=None)
@given(u=arrays(np.float64, 3, elements=finite), v=arrays(np.float64, 3, elements=finite),
       a=finite)
def test_norm_axioms(norm, u, v, a):
    nu, nv = float(norm(u)), float(norm(v))
    assert float(norm(u + v)) <= nu + nv + 1e-9 * (1 + nu + nv)
    assert float(norm(a * u)) == pytest.approx(abs(a) * nu, rel=1e-9, abs=1e-9)
    if np.any(u != 0):
        assert nu > 0


@pytest.mark.parametrize("norm", NORMS, ids=repr)
@settings(max_examples=40, deadline=None)
@given(x=arrays(np.float64, 3, elements=st.floats(-10, 10)))
def test_dual_pairing_is_norming(norm, x):
    # sup_{|f|_* <= 1} f(x) = |x|, attained by the norming functional
    if not np.any(np.abs(x) > 1e-6):
        return
    f = norm.norming_functionals(x[None])[0]
    dual = norm.dual()
    assert float(dual(f)) == pytest.approx(1.0, rel=1e-8)
    assert float(f @ x) == pytest.approx(float(norm(x)), rel=1e-8)


def test_dual_exponents():
    assert NormSpec.lp(1).dual().kind == "linf"
    d = NormSpec.lp(3).dual()
    assert d.p == pytest.approx(1.5)


def test_round_trip_serialization():
    for norm in NORMS:
        again = NormSpec.from_dict(norm.to_dict())
        x = np.array([0.3, -1.2, 2.0])
        assert float(again(x)) == pytest.approx(float(norm(x)))
    sp = AmbientSpace(3, NORMS[-1])
    assert AmbientSpace.from_dict(sp.to_dict()).dim == 3


@pytest.mark.parametrize("bad", [{"kind": "lp", "p": 0.5}, {"kind": "weighted_lp", "p": 2, "weights": [1, -1]},
                                 {"kind": "bogus"}])
def test_invalid_norms_rejected(bad):
    with pytest.raises((ValueError, KeyError)):
        NormSpec.from_dict(bad)


def test_custom_norm_is_accepted():
    n = NormSpec.custom(lambda x: np.abs(np.asarray(x)).sum(axis=-1))
    assert n.is_custom
    assert float(n(np.array([1.0, -2.0]))) == pytest.approx(3.0)


def test_tolerances_positive():
    sp = AmbientSpace(4, NormSpec.linf())
    assert 0 < sp.eps_opt < 1e-3
    assert 0 < sp.tau_sub < 1e-3
    assert math.isfinite(sp.eps_opt)
