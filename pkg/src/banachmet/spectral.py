"""Maximal volume growth V_q and Gelfand numbers c_q of an operator.

V_q(A) is the supremum of det(A|E) over q-dimensional subspaces E and
c_q(A) the infimum of |A restricted to R| over subspaces R of codimension
q - 1. Both are searched over the Grassmannian by multi-start pattern
search; V_q reports attained values (lower bounds), c_q attained values
(upper bounds).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import volume
from ._optim import grassmann_optimize, sphere_optimize
from .ambient import (Subspace, as_matrix, numerical_rank, restricted_operator_norm,
                      section_extreme_points, sup_over_sphere)
from .norms import AmbientSpace

N_RESTART = 64


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class Witnessed:
    """An optimized value with the subspace that attains it."""

    value: float
    witness: Subspace

    def to_dict(self) -> dict:
        return {"value": self.value, "witness": self.witness.to_dict()}


def _det_objective(space, a, q):
    norm = space.norm
    if norm.is_euclidean:
        def f(frames):
            m = a @ frames
            g = np.swapaxes(m, -1, -2) @ m
            return np.sqrt(np.clip(np.linalg.det(g), 0.0, None))
        return f

    def f(frames):
        return np.array([volume.determinant_estimate(space, a, Subspace(fr), coarse=True).value
                         for fr in frames])
    return f


def _search_params(space, d, q):
    # ``polish`` caps the objective calls of the final chart line search
    if space.norm.is_euclidean:
        return dict(n_start=N_RESTART, n_local=6, tol=1e-7, polish=4000)
    return dict(n_start=N_RESTART // 2, n_local=3, tol=1e-5, n_dirs=min(2 * q * (d - q), 8),
                polish=300 if space.norm.is_polyhedral else 0)


def max_volume_growth(space: AmbientSpace, A, q: int, rng=None) -> Witnessed:
    """V_q(A) = sup over q-dim E of det(A|E), with the witness subspace."""
    a = as_matrix(A)
    d = space.dim
    volume._check_budget(q)
    if not 0 <= q <= d:
        raise ValueError("q must lie in [0, dim]")
    rng = _rng(rng)
    if q == 0:
        return Witnessed(1.0, Subspace.zero(d))
    if numerical_rank(a) < q:
        return Witnessed(0.0, Subspace(np.eye(d)[:, :q]))
    if q == 1:
        if space.norm.is_euclidean:
            _, s, vt = np.linalg.svd(a)
            return Witnessed(float(s[0]), Subspace(vt[0]))
        val, u = sup_over_sphere(space.norm, np.eye(d), lambda x: space.norm(x @ a.T), rng)
        return Witnessed(float(val), Subspace(u))
    extra = None
    if not space.norm.is_euclidean:
        extra = np.linalg.svd(a)[2][:q].T[None]
    _, frame = grassmann_optimize(_det_objective(space, a, q), d, q, rng, maximize=True,
                                  extra=extra, **_search_params(space, d, q))
    E = Subspace(frame)
    return Witnessed(float(volume.determinant(space, a, E)), E)


def _restricted_norm_objective(space, a):
    norm = space.norm
    d = space.dim

    def complement(frame):
        qf = np.linalg.qr(frame, mode="complete")[0]
        return qf[:, frame.shape[1]:]

    if norm.is_euclidean:
        def f(frames):
            qf = np.linalg.qr(frames, mode="complete")[0][:, :, frames.shape[2]:]
            return np.linalg.norm(a @ qf, ord=2, axis=(-2, -1))
        return f
    if norm.is_polyhedral:
        def f(frames):
            out = []
            for fr in frames:
                b = complement(fr)
                pts = section_extreme_points(norm, b) @ (a @ b).T
                out.append(norm(pts).max())
            return np.array(out)
        return f

    def f(frames):
        out = []
        for fr in frames:
            b = complement(fr)
            g = lambda c: norm(c @ (a @ b).T) / norm(c @ b.T)
            out.append(sphere_optimize(g, b.shape[1], np.random.default_rng(0), n_start=8,
                                       n_local=2, tol=1e-6)[0])
        return np.array(out)
    return f


def gelfand_number(space: AmbientSpace, A, q: int, rng=None) -> Witnessed:
    """c_q(A) = inf over codimension-(q-1) subspaces R of |A restricted to R|."""
    a = as_matrix(A)
    d = space.dim
    if not 1 <= q <= d:
        raise ValueError("q must lie in [1, dim]")
    rng = _rng(rng)
    if q == 1:
        R = Subspace.full(d)
        return Witnessed(restricted_operator_norm(space.norm, a, R.basis, rng), R)
    if numerical_rank(a) < q:
        ker = sla.null_space(a, rcond=1e-10)
        return Witnessed(0.0, Subspace(ker[:, : d - q + 1]))
    # search over annihilator frames; random starts only
    _, frame = grassmann_optimize(_restricted_norm_objective(space, a), d, q - 1, rng,
                                  maximize=False, **_search_params(space, d, q - 1))
    R = Subspace.kernel_of(frame)
    return Witnessed(restricted_operator_norm(space.norm, a, R.basis, rng), R)


@dataclass(frozen=True)
class GelfandVolumeCheck:
    q: int
    ratio: float
    lower: float
    upper: float
    branch: str  # "regular" or "finite_rank"

    @property
    def holds(self) -> bool:
        if self.branch != "regular":
            return True
        return self.lower * (1 - 1e-6) <= self.ratio <= self.upper * (1 + 1e-6)

    def to_dict(self) -> dict:
        return {"q": self.q, "ratio": self.ratio, "lower": self.lower, "upper": self.upper,
                "branch": self.branch, "holds": self.holds}


def gelfand_volume_check(space: AmbientSpace, A, q: int, rng=None) -> GelfandVolumeCheck:
    """Compare V_q with c_q V_{q-1} against the pinned constant."""
    if q < 2:
        raise ValueError("q must be at least 2")
    rng = _rng(rng)
    vq = max_volume_growth(space, A, q, rng).value
    vq1 = max_volume_growth(space, A, q - 1, rng).value
    cq = gelfand_number(space, A, q, rng).value
    c = volume.gelfand_constant(q, space.norm.is_euclidean)
    if vq1 == 0 or cq == 0:
        return GelfandVolumeCheck(q, math.nan, 1.0 / c, c, "finite_rank")
    return GelfandVolumeCheck(q, vq / (cq * vq1), 1.0 / c, c, "regular")


@dataclass(frozen=True)
class TailDiagnostic:
    values: list  # (q, (1/q) log V_q)
    monotone_tail: bool

    def to_dict(self) -> dict:
        return {"values": [[q, v] for q, v in self.values], "monotone_tail": self.monotone_tail}


def volume_growth_tail(space: AmbientSpace, A, q_range, rng=None, tol: float = 1e-6) -> TailDiagnostic:
    """(q, (1/q) log V_q(A)) for q in q_range, with log 0 = -inf.

    The tail is certified monotone when the sequence does not increase (beyond
    ``tol``) after its maximum.
    """
    rng = _rng(rng)
    out = []
    for q in q_range:
        v = max_volume_growth(space, A, q, rng).value
        out.append((int(q), math.log(v) / q if v > 0 else -math.inf))
    vals = [v for _, v in out]
    start = int(np.argmax(vals)) if vals else 0
    ok = all(vals[i + 1] <= vals[i] + tol for i in range(start, len(vals) - 1))
    return TailDiagnostic(out, ok)


@dataclass(frozen=True, eq=False)
class SingularProfile:
    vq: dict
    cq: dict
    argmax_subspaces: dict = field(default_factory=dict)
    argmin_restrictions: dict = field(default_factory=dict)

    def ratios(self) -> dict:
        out = {}
        for q in self.vq:
            if q >= 2 and q - 1 in self.vq and q in self.cq:
                den = self.cq[q] * self.vq[q - 1]
                out[q] = self.vq[q] / den if den > 0 else math.nan
        return out

    def to_dict(self) -> dict:
        return {"vq": {str(k): v for k, v in self.vq.items()},
                "cq": {str(k): v for k, v in self.cq.items()},
                "ratio": {str(k): v for k, v in self.ratios().items()},
                "argmax_subspaces": {str(k): s.to_dict() for k, s in self.argmax_subspaces.items()},
                "argmin_restrictions": {str(k): s.to_dict() for k, s in self.argmin_restrictions.items()}}


def singular_profile(space: AmbientSpace, A, q_max: int, rng=None) -> SingularProfile:
    """V_q and c_q for q = 1..q_max with their witnesses."""
    rng = _rng(rng)
    q_max = min(q_max, space.dim, volume.Q_MAX)
    vq, cq, wv, wc = {}, {}, {}, {}
    for q in range(1, q_max + 1):
        v = max_volume_growth(space, A, q, rng)
        c = gelfand_number(space, A, q, rng)
        vq[q], wv[q] = v.value, v.witness
        cq[q], wc[q] = c.value, c.witness
    return SingularProfile(vq, cq, wv, wc)
