"""Norm oracles on finite-dimensional real vector spaces.

Every built-in norm belongs to the weighted l^p family

    |x| = || w * x ||_p ,   1 <= p <= inf,

so euclidean, lp, linf and weighted_lp only differ in ``p`` and ``weights``.
A ``custom`` norm wraps an arbitrary callable; operations that need duality or
vertex enumeration fall back to generic optimization for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

KINDS = ("euclidean", "lp", "linf", "weighted_lp", "custom")


@dataclass(frozen=True)
class NormSpec:
    """A norm on R^d.

    Parameters
    ----------
    kind : str
        One of ``euclidean``, ``lp``, ``linf``, ``weighted_lp``, ``custom``.
    p : float
        Exponent for the l^p family (``math.inf`` allowed).
    weights : tuple of float, optional
        Positive coordinate weights (``weighted_lp`` only).
    func : callable, optional
        For ``custom``: maps an ``(n, d)`` array to ``n`` norms.
    """

    kind: str = "euclidean"
    p: float = 2.0
    weights: Optional[tuple] = None
    func: Optional[Callable] = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "euclidean":
            object.__setattr__(self, "p", 2.0)
        elif self.kind == "linf":
            object.__setattr__(self, "p", math.inf)
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom norm requires func")
            return
        p = float(self.p)
        if not p >= 1.0:
            raise ValueError("p must be >= 1")
        object.__setattr__(self, "p", p)
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if any(not (x > 0 and math.isfinite(x)) for x in w):
                raise ValueError("weights must be positive and finite")
            object.__setattr__(self, "weights", w)
        elif self.kind == "weighted_lp":
            raise ValueError("weighted_lp requires weights")

    # -- constructors -------------------------------------------------
    @classmethod
    def euclidean(cls) -> "NormSpec":
        return cls("euclidean")

    @classmethod
    def lp(cls, p: float) -> "NormSpec":
        if p == 2:
            return cls("euclidean")
        if math.isinf(p):
            return cls("linf")
        return cls("lp", p=p)

    @classmethod
    def linf(cls) -> "NormSpec":
        return cls("linf")

    @classmethod
    def weighted(cls, p: float, weights) -> "NormSpec":
        return cls("weighted_lp", p=p, weights=tuple(weights))

    @classmethod
    def custom(cls, func: Callable) -> "NormSpec":
        return cls("custom", p=float("nan"), func=func)

    # -- properties ---------------------------------------------------
    @property
    def is_custom(self) -> bool:
        return self.kind == "custom"

    @property
    def is_euclidean(self) -> bool:
        return self.kind != "custom" and self.p == 2.0 and self.weights is None

    @property
    def is_polyhedral(self) -> bool:
        return self.kind != "custom" and (self.p == 1.0 or math.isinf(self.p))

    def weight_vector(self, d: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(d)
        if len(self.weights) != d:
            raise ValueError(f"norm has {len(self.weights)} weights, space has dimension {d}")
        return np.asarray(self.weights)

    # -- evaluation ---------------------------------------------------
    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "custom":
            flat = x.reshape(-1, x.shape[-1])
            return np.asarray(self.func(flat), dtype=float).reshape(x.shape[:-1])
        if self.weights is not None:
            x = x * self.weight_vector(x.shape[-1])
        p = self.p
        if math.isinf(p):
            return np.max(np.abs(x), axis=-1)
        if p == 1.0:
            return np.sum(np.abs(x), axis=-1)
        if p == 2.0:
            out = np.sqrt(np.sum(x * x, axis=-1))
            # rescale only where the plain sum of squares under- or overflowed
            bad = (out < 1e-150) | (out > 1e150)
            if not np.any(bad):
                return out
        a = np.abs(x)
        m = np.max(a, axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        return (m[..., 0] * np.sum((a / safe) ** p, axis=-1) ** (1.0 / p))

    def dual(self) -> "NormSpec":
        """Dual norm: || y / w ||_{p'}."""
        if self.is_custom:
            raise NotImplementedError("dual of a custom norm is not available")
        q = 1.0 if math.isinf(self.p) else (math.inf if self.p == 1.0 else self.p / (self.p - 1.0))
        if self.weights is None:
            return NormSpec.lp(q)
        return NormSpec.weighted(q, tuple(1.0 / w for w in self.weights))

    def norming_functionals(self, x) -> np.ndarray:
        """Rows y with |y|_* = 1 and y . x = |x| (x != 0)."""
        if self.is_custom:
            raise NotImplementedError("norming functionals need a dual norm")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        w = self.weight_vector(x.shape[-1])
        z = x * w
        p = self.p
        if math.isinf(p):
            g = np.zeros_like(z)
            i = np.argmax(np.abs(z), axis=-1)
            rows = np.arange(z.shape[0])
            g[rows, i] = np.sign(z[rows, i])
        elif p == 1.0:
            g = np.sign(z)
        else:
            nz = NormSpec.lp(p)(z)[:, None]
            g = np.sign(z) * (np.abs(z) / nz) ** (p - 1.0)
        return g * w

    # -- serialization ------------------------------------------------
    def to_dict(self) -> dict:
        if self.is_custom:
            raise ValueError("custom norms are not serializable")
        out = {"kind": self.kind}
        if self.kind in ("lp", "weighted_lp"):
            out["p"] = "inf" if math.isinf(self.p) else self.p
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NormSpec":
        kind = data["kind"]
        p = data.get("p", 2.0)
        p = math.inf if p in ("inf", "infinity") else float(p)
        if kind == "lp":
            return cls.lp(p)
        if kind == "weighted_lp":
            return cls.weighted(p, data["weights"])
        if kind in ("euclidean", "linf"):
            return cls(kind)
        raise ValueError(f"cannot deserialize norm kind {kind!r}")

    def __repr__(self):
        if self.is_custom:
            return "NormSpec(custom)"
        if self.weights is not None:
            return f"NormSpec(weighted_lp, p={self.p}, weights={self.weights})"
        return f"NormSpec({self.kind}, p={self.p})"


@dataclass(frozen=True)
class AmbientSpace:
    """R^dim equipped with a norm."""

    dim: int
    norm: NormSpec = NormSpec()

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))
        if self.norm.weights is not None and len(self.norm.weights) != self.dim:
            raise ValueError("norm weights do not match dimension")

    @property
    def eps_opt(self) -> float:
        """Optimizer slack used in certified inequalities."""
        if self.norm.is_euclidean or self.norm.is_polyhedral:
            return 1e-9
        return 1e-6

    @property
    def tau_sub(self) -> float:
        return 1e-8 if self.norm.is_euclidean else 1e-6

    def dual(self) -> "AmbientSpace":
        return AmbientSpace(self.dim, self.norm.dual())

    def to_dict(self) -> dict:
        return {"dim": self.dim, "norm": self.norm.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "AmbientSpace":
        return cls(int(data["dim"]), NormSpec.from_dict(data.get("norm", {"kind": "euclidean"})))
