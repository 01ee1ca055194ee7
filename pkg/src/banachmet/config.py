"""Experiment configuration: JSON schema, loading and defaults.

A configuration describes the ambient space, the cocycle, the random stream
and the algorithm parameters of one run. Unknown keys are rejected at every
level so that typos fail loudly instead of silently using a default.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .cocycles import COCYCLE_KINDS, CocycleConfigError, CocycleSpec
from .norms import AmbientSpace, NormSpec

RNG_NAME = "philox"

_NUMBER_OR_INF = {"anyOf": [{"type": "number"}, {"enum": ["inf", "infinity"]}]}
_MATRIX = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}

_NORM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["euclidean", "lp", "linf", "weighted_lp"]},
        "p": _NUMBER_OR_INF,
        "weights": {"type": "array", "minItems": 1,
                    "items": {"type": "number", "exclusiveMinimum": 0}},
    },
}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "banachmet experiment",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "space": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim"],
            "properties": {"dim": {"type": "integer", "minimum": 1, "maximum": 64},
                           "norm": _NORM},
        },
        "cocycle": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"enum": list(COCYCLE_KINDS)},
                           "params": {"type": "object"}},
        },
        "rng": {"const": RNG_NAME},
        "seed": {"type": "integer", "minimum": 0},
        "N": {"type": "integer", "minimum": 1, "maximum": 1_000_000},
        "q_max": {"type": "integer", "minimum": 1, "maximum": 6},
        "n_slow": {"type": "integer", "minimum": 2},
        "n_starts": {"type": "integer", "minimum": 1},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "exponent": {"type": "number", "exclusiveMinimum": 0},
                "restricted": {"type": "number", "exclusiveMinimum": 0},
                "subspace": {"type": "number", "exclusiveMinimum": 0},
                "sublevel": {"type": "number", "exclusiveMinimum": 0},
                "cauchy_slack": {"type": "number", "minimum": 0},
            },
        },
        "operator": _MATRIX,
        "subspaces": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"E": _MATRIX, "F": _MATRIX},
        },
        "sublevel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"burn_in": {"type": "integer", "minimum": 0},
                           "horizon": {"type": "integer", "minimum": 1},
                           "n_dirs": {"type": "integer", "minimum": 16}},
        },
        "out": {"type": "string", "minLength": 1},
    },
}

DEFAULTS: dict = {
    "space": {"dim": 2, "norm": {"kind": "euclidean"}},
    "rng": RNG_NAME,
    "seed": 0,
    "N": 2000,
    "n_slow": 200,
    "n_starts": 8,
    "tolerances": {"exponent": 1e-2, "subspace": 1e-6, "sublevel": 1e-2, "cauchy_slack": 0.05},
    "sublevel": {"n_dirs": 4096},
    "out": "out",
}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(data: Any) -> dict:
    """Schema-check a raw configuration and fill in defaults."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {err.message}") from None
    cfg = _merge(DEFAULTS, data)
    if "cocycle" in data and "space" not in data:
        raise ConfigError("config error: a cocycle needs a space with its dimension")
    try:
        space(cfg)
    except ValueError as err:
        raise ConfigError(f"config error in space: {err}") from None
    if "cocycle" in cfg:
        try:
            cocycle(cfg)
        except (CocycleConfigError, ValueError, KeyError, TypeError) as err:
            raise ConfigError(f"config error in cocycle: {err}") from None
    d = cfg["space"]["dim"]
    if "operator" in cfg and (len(cfg["operator"]) != d or any(len(r) != d for r in cfg["operator"])):
        raise ConfigError(f"config error: operator must be {d}x{d}")
    for name, m in cfg.get("subspaces", {}).items():
        if len(m) != d:
            raise ConfigError(f"config error: subspace {name} needs {d} rows (basis vectors as columns)")
    return cfg


def load_config(path: Optional[str]) -> dict:
    """Read, validate and complete a JSON configuration file."""
    if path is None:
        return validate({})
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err.msg} (line {err.lineno})") from None
    return validate(data)


def space(cfg: dict) -> AmbientSpace:
    sp = cfg["space"]
    return AmbientSpace(int(sp["dim"]), NormSpec.from_dict(sp.get("norm", {"kind": "euclidean"})))


def cocycle(cfg: dict) -> CocycleSpec:
    if "cocycle" not in cfg:
        raise ConfigError("config error: this command needs a cocycle")
    c = cfg["cocycle"]
    sp = space(cfg)
    return CocycleSpec(c["kind"], sp.dim, dict(c.get("params", {})), sp.norm, int(cfg["seed"]))
