import json

import pytest

from banachmet import config

DIAG42 = {"space": {"dim": 2}, "cocycle": {"kind": "constant", "params": {"matrix": [[4, 0], [0, 2]]}}}


def test_defaults_filled():
    cfg = config.validate(DIAG42)
    assert cfg["seed"] == 0 and cfg["N"] == 2000 and cfg["rng"] == "philox"
    assert cfg["tolerances"]["exponent"] == 1e-2
    assert cfg["space"]["norm"] == {"kind": "euclidean"}


def test_partial_tolerances_merge():
    cfg = config.validate({**DIAG42, "tolerances": {"exponent": 0.5}})
    assert cfg["tolerances"]["exponent"] == 0.5
    assert cfg["tolerances"]["subspace"] == 1e-6


@pytest.mark.parametrize("bad", [
    {**DIAG42, "sead": 1},
    {**DIAG42, "space": {"dim": 2, "extra": 1}},
    {**DIAG42, "tolerances": {"exponet": 0.1}},
    {**DIAG42, "rng": "mt19937"},
    {**DIAG42, "q_max": 7},
    {**DIAG42, "seed": -1},
    {"space": {"dim": 2, "norm": {"kind": "lp", "p": 0.5}}},
    {"space": {"dim": 2, "norm": {"kind": "weighted_lp", "p": 2, "weights": [1.0]}}},
    {"space": {"dim": 2}, "cocycle": {"kind": "constant", "params": {"matrix": [[1, 0, 0]]}}},
    {"space": {"dim": 2}, "operator": [[1, 0, 0], [0, 1, 0]]},
    {"space": {"dim": 3}, "subspaces": {"E": [[1], [0]]}},
    {"cocycle": {"kind": "constant", "params": {"matrix": [[1]]}}},
    {"space": {"dim": 2}, "cocycle": {"kind": "mystery"}},
])
def test_rejections(bad):
    with pytest.raises(config.ConfigError):
        config.validate(bad)


def test_load_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(config.ConfigError, match="not valid JSON"):
        config.load_config(str(p))
    with pytest.raises(config.ConfigError, match="cannot read"):
        config.load_config(str(tmp_path / "missing.json"))


def test_load_ok(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(DIAG42))
    cfg = config.load_config(str(p))
    assert config.cocycle(cfg).kind == "constant"
    assert config.space(cfg).dim == 2


def test_cocycle_required():
    with pytest.raises(config.ConfigError):
        config.cocycle(config.validate({"space": {"dim": 2}}))
