"""Replayable operator streams T_0, T_1, ... and analytic exponent oracles.

Randomness comes from the counter-based Philox generator keyed by the seed
and the step index, so any step can be regenerated independently and the
stream is identical across platforms and runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy import integrate

from .norms import AmbientSpace, NormSpec

COCYCLE_KINDS = ("constant", "iid_diagonal", "iid_general", "triangular",
                 "rotation_driven", "rank_deficient")
LAWS = ("choice", "loguniform", "uniform", "gaussian")

_DESCRIPTIONS = {
    "constant": "the same matrix at every step",
    "iid_diagonal": "diagonal matrices with i.i.d. entries drawn from a law",
    "iid_general": "mean matrix plus i.i.d. gaussian noise",
    "triangular": "upper-triangular: diagonal law plus coupling law above the diagonal",
    "rotation_driven": "A0 + cos(2 pi x) A1 + sin(2 pi x) A2 along x -> x + alpha mod 1",
    "rank_deficient": "a base cocycle with a column zeroed at scheduled steps",
}


class CocycleConfigError(ValueError):
    """Malformed cocycle specification."""


def describe_kinds() -> dict:
    return dict(_DESCRIPTIONS)


# ---------------------------------------------------------------------------
# Entry laws
# ---------------------------------------------------------------------------

def _check_law(law: dict) -> dict:
    if not isinstance(law, dict) or law.get("law") not in LAWS:
        raise CocycleConfigError(f"law must be one of {LAWS}")
    kind = law["law"]
    if kind == "choice":
        vals = np.asarray(law.get("values", []), dtype=float)
        if vals.ndim != 1 or len(vals) == 0:
            raise CocycleConfigError("choice law needs a non-empty list of values")
        probs = law.get("probs")
        if probs is not None:
            probs = np.asarray(probs, dtype=float)
            if probs.shape != vals.shape or np.any(probs < 0) or not math.isclose(probs.sum(), 1.0):
                raise CocycleConfigError("choice probs must be nonnegative and sum to 1")
    elif kind in ("loguniform", "uniform"):
        lo, hi = law.get("low"), law.get("high")
        if lo is None or hi is None or not float(lo) < float(hi):
            raise CocycleConfigError(f"{kind} law needs low < high")
        if kind == "loguniform" and float(lo) <= 0:
            raise CocycleConfigError("loguniform law needs low > 0")
    else:
        if float(law.get("std", 1.0)) <= 0:
            raise CocycleConfigError("gaussian law needs std > 0")
    return law


def _sample_law(law: dict, rng: np.random.Generator, size=None):
    kind = law["law"]
    if kind == "choice":
        return rng.choice(np.asarray(law["values"], dtype=float), size=size, p=law.get("probs"))
    if kind == "loguniform":
        return np.exp(rng.uniform(math.log(law["low"]), math.log(law["high"]), size=size))
    if kind == "uniform":
        return rng.uniform(law["low"], law["high"], size=size)
    return rng.normal(law.get("mean", 0.0), law.get("std", 1.0), size=size)


def expected_log_abs(law: dict) -> float:
    """E[log |X|] for X drawn from the law (-inf if X = 0 has positive mass)."""
    kind = law["law"]
    if kind == "choice":
        vals = np.abs(np.asarray(law["values"], dtype=float))
        probs = np.full(len(vals), 1 / len(vals)) if law.get("probs") is None else np.asarray(law["probs"])
        if np.any((vals == 0) & (probs > 0)):
            return -math.inf
        keep = probs > 0
        return float(np.dot(probs[keep], np.log(vals[keep])))
    if kind == "loguniform":
        return 0.5 * (math.log(law["low"]) + math.log(law["high"]))
    if kind == "uniform":
        lo, hi = float(law["low"]), float(law["high"])
        # integral of log|x| over [lo, hi] is F(hi) - F(lo) with F(x) = x log|x| - x
        f = lambda x: (x * math.log(abs(x)) if x != 0 else 0.0) - x
        return (f(hi) - f(lo)) / (hi - lo)
    mu, sd = float(law.get("mean", 0.0)), float(law.get("std", 1.0))
    dens = lambda x: math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
    g = lambda x: math.log(abs(x)) * dens(x) if x != 0 else 0.0
    lo, hi = mu - 40 * sd, mu + 40 * sd
    pts = [0.0] if lo < 0 < hi else None
    val, _ = integrate.quad(g, lo, hi, points=pts, limit=400)
    return float(val)


# ---------------------------------------------------------------------------
# Specification
# ---------------------------------------------------------------------------

def _matrix(x, d, name):
    m = np.asarray(x, dtype=float)
    if m.shape != (d, d) or not np.all(np.isfinite(m)):
        raise CocycleConfigError(f"{name} must be a finite {d}x{d} matrix")
    return m


@dataclass(frozen=True, eq=False)
class CocycleSpec:
    """Description of a cocycle: kind, parameters, dimension, norm and seed.

    Parameters by kind
    ------------------
    constant : ``matrix``
    iid_diagonal : ``law`` (one law for all entries) or ``laws`` (one per entry)
    iid_general : ``mean`` (matrix, default 0) and ``std`` (default 1)
    triangular : ``diagonal`` (law or list of laws) and ``coupling`` (law)
    rotation_driven : ``alpha``, ``x0`` (default 0) and ``family`` = [A0, A1, A2]
    rank_deficient : ``base`` (a nested {kind, params}), ``column`` (default
        last) and ``kill`` (list of steps) and/or ``every`` (period)
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    norm: NormSpec = NormSpec()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in COCYCLE_KINDS:
            raise CocycleConfigError(f"unknown cocycle kind {self.kind!r}")
        if int(self.dim) < 1:
            raise CocycleConfigError("dim must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "seed", int(self.seed))
        self._validate()

    def _validate(self):
        d, p = self.dim, self.params
        if self.kind == "constant":
            _matrix(p.get("matrix"), d, "matrix")
        elif self.kind == "iid_diagonal":
            for law in self.diagonal_laws():
                _check_law(law)
        elif self.kind == "iid_general":
            if "mean" in p:
                _matrix(p["mean"], d, "mean")
            if float(p.get("std", 1.0)) <= 0:
                raise CocycleConfigError("std must be positive")
        elif self.kind == "triangular":
            for law in self.diagonal_laws():
                _check_law(law)
            _check_law(p.get("coupling", {"law": "gaussian", "std": 1.0}))
        elif self.kind == "rotation_driven":
            if "alpha" not in p:
                raise CocycleConfigError("rotation_driven needs alpha")
            fam = p.get("family")
            if not isinstance(fam, (list, tuple)) or len(fam) != 3:
                raise CocycleConfigError("family must be [A0, A1, A2]")
            for i, m in enumerate(fam):
                _matrix(m, d, f"family[{i}]")
        else:
            base = p.get("base")
            if not isinstance(base, dict) or base.get("kind") == "rank_deficient":
                raise CocycleConfigError("rank_deficient needs a base cocycle")
            self.base_spec()
            col = int(p.get("column", d - 1))
            if not 0 <= col < d:
                raise CocycleConfigError("column out of range")
            if "kill" not in p and "every" not in p:
                raise CocycleConfigError("rank_deficient needs kill and/or every")
            if "every" in p and int(p["every"]) < 1:
                raise CocycleConfigError("every must be >= 1")

    def diagonal_laws(self) -> list:
        p = self.params
        key = "law" if self.kind == "iid_diagonal" else "diagonal"
        if self.kind == "iid_diagonal" and "laws" in p:
            laws = p["laws"]
        else:
            laws = p.get(key)
        if isinstance(laws, dict):
            laws = [laws] * self.dim
        if not isinstance(laws, (list, tuple)) or len(laws) != self.dim:
            raise CocycleConfigError(f"need one law or {self.dim} laws")
        return list(laws)

    def base_spec(self) -> "CocycleSpec":
        base = self.params["base"]
        return CocycleSpec(base["kind"], self.dim, base.get("params", {}), self.norm, self.seed)

    @property
    def space(self) -> AmbientSpace:
        return AmbientSpace(self.dim, self.norm)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "params": _jsonable(self.params),
                "norm": self.norm.to_dict(), "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "CocycleSpec":
        norm = NormSpec.from_dict(data.get("norm", {"kind": "euclidean"}))
        return cls(data["kind"], int(data["dim"]), dict(data.get("params", {})), norm,
                   int(data.get("seed", 0)))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


# ---------------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------------

def _step_rng(seed: int, n: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, 0x6D6574], dtype=np.uint64)
    counter = np.array([0, 0, 0, n], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _operator(spec: CocycleSpec, n: int) -> np.ndarray:
    d, p = spec.dim, spec.params
    kind = spec.kind
    if kind == "constant":
        return np.asarray(p["matrix"], dtype=float)
    if kind == "rotation_driven":
        x = (float(p.get("x0", 0.0)) + n * float(p["alpha"])) % 1.0
        a0, a1, a2 = (np.asarray(m, dtype=float) for m in p["family"])
        return a0 + math.cos(2 * math.pi * x) * a1 + math.sin(2 * math.pi * x) * a2
    if kind == "rank_deficient":
        a = _operator(spec.base_spec(), n).copy()
        kill = n in set(int(k) for k in p.get("kill", []))
        if "every" in p:
            kill |= n % int(p["every"]) == 0
        if kill:
            a[:, int(p.get("column", d - 1))] = 0.0
        return a
    rng = _step_rng(spec.seed, n)
    if kind == "iid_diagonal":
        return np.diag([float(_sample_law(law, rng)) for law in spec.diagonal_laws()])
    if kind == "triangular":
        diag = [float(_sample_law(law, rng)) for law in spec.diagonal_laws()]
        coupling = _sample_law(p.get("coupling", {"law": "gaussian", "std": 1.0}), rng, size=(d, d))
        return np.triu(np.asarray(coupling, dtype=float), 1) + np.diag(diag)
    mean = np.asarray(p.get("mean", np.zeros((d, d))), dtype=float)
    return mean + float(p.get("std", 1.0)) * rng.standard_normal((d, d))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A replayable finite sequence of operators T_0, ..., T_{N-1}.

    Either generated from a ``CocycleSpec`` or wrapping explicit matrices.
    """

    space: AmbientSpace
    length_budget: int
    spec: Optional[CocycleSpec] = None
    explicit: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.spec is None and self.explicit is None:
            raise ValueError("trajectory needs a spec or explicit operators")
        if self.explicit is not None:
            ops = np.array(self.explicit, dtype=float)
            if ops.ndim != 3 or ops.shape[1:] != (self.space.dim, self.space.dim):
                raise ValueError("operators must have shape (N, d, d)")
            if not np.all(np.isfinite(ops)):
                raise ValueError("operators have non-finite entries")
            ops.flags.writeable = False
            object.__setattr__(self, "explicit", ops)
            object.__setattr__(self, "length_budget", min(int(self.length_budget), len(ops)))

    @property
    def seed(self) -> int:
        return self.spec.seed if self.spec is not None else 0

    @classmethod
    def from_operators(cls, space: AmbientSpace, operators) -> "Trajectory":
        ops = np.asarray(operators, dtype=float)
        return cls(space, len(ops), None, ops)

    def operator(self, n: int) -> np.ndarray:
        if not 0 <= n < self.length_budget:
            raise IndexError("step outside the length budget")
        if self.explicit is not None:
            return self.explicit[n]
        return _operator(self.spec, n)

    def take(self, n: Optional[int] = None, start: int = 0) -> np.ndarray:
        """Stack of operators T_start, ..., T_{start+n-1}."""
        n = self.length_budget - start if n is None else n
        if start + n > self.length_budget:
            raise IndexError("request exceeds the length budget")
        if self.explicit is not None:
            return np.array(self.explicit[start:start + n])
        if self.spec.kind == "constant":
            return np.broadcast_to(_operator(self.spec, 0), (n, self.space.dim, self.space.dim)).copy()
        return np.array([_operator(self.spec, k) for k in range(start, start + n)])

    def __iter__(self) -> Iterator[np.ndarray]:
        for k in range(self.length_budget):
            yield self.operator(k)

    def __len__(self) -> int:
        return self.length_budget

    def with_budget(self, n: int) -> "Trajectory":
        return Trajectory(self.space, n, self.spec, self.explicit)


def stream(spec: CocycleSpec, N: int = 1000) -> Trajectory:
    """Replayable trajectory of length N for the spec."""
    if int(N) < 1:
        raise CocycleConfigError("N must be >= 1")
    return Trajectory(spec.space, int(N), spec)


def product(ops) -> np.ndarray:
    """T^n = T_{n-1} ... T_0 for a stack of operators."""
    ops = np.asarray(ops, dtype=float)
    out = np.eye(ops.shape[1])
    for a in ops:
        out = a @ out
    return out


# ---------------------------------------------------------------------------
# Analytic oracles
# ---------------------------------------------------------------------------

def analytic_exponent_list(spec: CocycleSpec) -> Optional[list]:
    """Lyapunov exponents repeated with multiplicity, descending, or None."""
    if spec.kind == "constant":
        ev = np.abs(np.linalg.eigvals(np.asarray(spec.params["matrix"], dtype=float)))
        vals = [math.log(v) if v > 0 else -math.inf for v in ev]
    elif spec.kind in ("iid_diagonal", "triangular"):
        vals = [expected_log_abs(law) for law in spec.diagonal_laws()]
    else:
        return None
    return sorted(vals, reverse=True)


def analytic_exponents(spec: CocycleSpec):
    """Exact ExponentReport for supported kinds, None otherwise."""
    vals = analytic_exponent_list(spec)
    if vals is None:
        return None
    from .met import report_from_exponents

    return report_from_exponents(vals)
