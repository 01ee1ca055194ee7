import numpy as np
import pytest

from banachmet import suites


@pytest.mark.parametrize("inv", [i for i in suites.INVARIANTS if not i.deterministic], ids=lambda i: i.name)
def test_random_invariants_small(inv):
    for res in suites.run_invariant(inv, draws=2, seed=5):
        assert res.passed, res.to_dict()


def test_deterministic_invariants():
    for res in suites.run_suite("met", seed=0):
        assert res.passed, res.to_dict()


def test_gap_inequalities_combined():
    inv = suites.Invariant("gap_inequalities", "geometry", "", suites.gap_inequalities)
    for res in suites.run_invariant(inv, draws=10, seed=9):
        assert res.passed and res.applicable >= 20


def test_draws_reproducible_and_isolated():
    inv = suites.BY_NAME["norm_axioms"]
    a = suites.run_invariant(inv, 3, seed=1, norms=("w15",))[0]
    b = suites.run_invariant(inv, 3, seed=1, norms=("w15",))[0]
    assert a.worst_margin == b.worst_margin
    g1 = suites._generator(1, "x", "l1").standard_normal(3)
    g2 = suites._generator(1, "y", "l1").standard_normal(3)
    assert not np.allclose(g1, g2)


def test_unknown_suite():
    with pytest.raises(ValueError):
        suites.run_suite("nope")


def test_make_norm_labels():
    rng = np.random.default_rng(0)
    w = suites.make_norm("w15", 4, rng)
    assert w.p == 1.5 and all(0.5 <= x <= 2 for x in w.weights)
    with pytest.raises(ValueError):
        suites.make_norm("l3", 2, rng)
