"""Subspaces of a finite-dimensional normed space and their global geometry.

Distances, angles, gaps and projection norms are computed exactly for the
euclidean and polyhedral (l^1, l^inf, weighted) norms and by multi-start
search otherwise. Maximizations return attained values (lower bounds of the
supremum) and minimizations attained values (upper bounds of the infimum).
"""
from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog, minimize

from ._optim import sphere_optimize, zoom_refine
from .norms import AmbientSpace, NormSpec

TAU_RANK = 1e-10
TAU_ANGLE = 1e-12

_CACHE_SIZE = 2048


class _LRU(OrderedDict):
    def get_or(self, key, make):
        if key is None:
            return make()
        if key in self:
            self.move_to_end(key)
            return self[key]
        val = make()
        self[key] = val
        if len(self) > _CACHE_SIZE:
            self.popitem(last=False)
        return val


_extreme_cache = _LRU()
_distance_cache = _LRU()
_gap_cache = _LRU()


def _key(norm: NormSpec, *arrays):
    if norm.is_custom:
        return None
    return (norm,) + tuple((a.shape, a.tobytes()) for a in arrays)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def numerical_rank(m, rtol=TAU_RANK) -> int:
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """A linear map of R^d as a dense matrix."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise ValueError("operator must be a 2-D matrix")
        if not np.all(np.isfinite(a)):
            raise ValueError("operator has non-finite entries")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    def to_dict(self) -> dict:
        return {"entries": self.entries.tolist()}

    @classmethod
    def from_dict(cls, data) -> "OperatorMatrix":
        return cls(np.asarray(data["entries"] if isinstance(data, dict) else data))


def as_matrix(a) -> np.ndarray:
    if isinstance(a, OperatorMatrix):
        return a.entries
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("operator must be a 2-D matrix")
    return a


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of R^d carried by an orthonormal (in coordinates) basis.

    The constructor re-orthonormalizes the given basis; the carried subspace
    is unchanged. ``condition_estimate`` is the condition number of the basis
    as given.
    """

    basis: np.ndarray
    condition_estimate: float = field(default=1.0)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2:
            raise ValueError("basis must be a d x q matrix")
        d, q = b.shape
        if q > d:
            raise ValueError("more basis vectors than ambient dimension")
        if q == 0:
            cond = 1.0
            qm = np.zeros((d, 0))
        else:
            if not np.all(np.isfinite(b)):
                raise ValueError("basis has non-finite entries")
            s = np.linalg.svd(b, compute_uv=False)
            if s[0] == 0 or s[-1] <= TAU_RANK * s[0]:
                raise ValueError("basis is not of full column rank")
            cond = float(s[0] / s[-1])
            qm, _ = np.linalg.qr(b)
        qm = np.ascontiguousarray(qm)
        qm.flags.writeable = False
        object.__setattr__(self, "basis", qm)
        object.__setattr__(self, "condition_estimate", cond)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def span(cls, *vectors) -> "Subspace":
        return cls(np.column_stack([np.asarray(v, dtype=float) for v in vectors]))

    @classmethod
    def full(cls, d: int) -> "Subspace":
        return cls(np.eye(d))

    @classmethod
    def zero(cls, d: int) -> "Subspace":
        return cls(np.zeros((d, 0)))

    @classmethod
    def kernel_of(cls, functionals) -> "Subspace":
        """Common kernel of the columns of a d x m matrix of functionals."""
        f = np.asarray(functionals, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        if f.shape[1] == 0:
            return cls.full(f.shape[0])
        return cls(sla.null_space(f.T, rcond=TAU_RANK))

    @classmethod
    def random(cls, d: int, q: int, seed=None) -> "Subspace":
        return cls(_rng(seed).standard_normal((d, q)))

    def annihilator(self) -> "Subspace":
        """Annihilator in the dual space (functionals as column vectors)."""
        return Subspace.kernel_of(self.basis)

    def orthogonal_projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def residual(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v - (v @ self.basis) @ self.basis.T

    def to_dict(self) -> dict:
        return {"basis": self.basis.tolist(), "dim": self.dim,
                "condition_estimate": self.condition_estimate}

    @classmethod
    def from_dict(cls, data: dict) -> "Subspace":
        b = np.asarray(data["basis"], dtype=float)
        if b.ndim == 2 and b.shape[1] == 0 and "ambient_dim" in data:
            b = np.zeros((int(data["ambient_dim"]), 0))
        return cls(b)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


@dataclass(frozen=True, eq=False)
class Splitting:
    """An algebraic splitting R^d = E (+) F with its projection onto E along F."""

    E: Subspace
    F: Subspace
    projection_matrix: np.ndarray
    proj_norm: float = math.nan
    certified: bool = True

    def to_dict(self) -> dict:
        return {"E": self.E.to_dict(), "F": self.F.to_dict(),
                "projection_matrix": np.asarray(self.projection_matrix).tolist(),
                "proj_norm": self.proj_norm, "certified": self.certified}


@dataclass(frozen=True)
class AngleResult:
    sin_theta: float
    proj_norm: float


def projection_matrix(E: Subspace, F: Subspace) -> np.ndarray:
    """Matrix of the projection onto E along F, defined on E + F.

    Vectors outside E + F are first mapped orthogonally into E + F.
    """
    if E.dim == 0:
        return np.zeros((E.ambient_dim, E.ambient_dim))
    g = np.hstack([E.basis, F.basis])
    if numerical_rank(g) < g.shape[1]:
        raise ValueError("E and F intersect nontrivially")
    return E.basis @ np.linalg.pinv(g)[: E.dim]


# ---------------------------------------------------------------------------
# Polyhedral vertex enumeration
# ---------------------------------------------------------------------------

def section_extreme_points(norm: NormSpec, basis) -> np.ndarray:
    """Boundary points (coordinates) of {c : |B c| <= 1} containing every vertex.

    Only for polyhedral norms. Returned rows satisfy |B c| = 1, both signs.
    """
    b = np.asarray(basis, dtype=float)
    return _extreme_cache.get_or(_key(norm, b), lambda: _section_extreme_points(norm, b))


def _section_extreme_points(norm, b):
    d, q = b.shape
    if q == 1:
        c = np.array([[1.0], [-1.0]]) / norm(b[:, 0])
        return c
    a = b * norm.weight_vector(d)[:, None]
    cands = []
    if math.isinf(norm.p):
        signs = np.array(list(itertools.product([1.0, -1.0], repeat=q - 1)))
        signs = np.hstack([np.ones((len(signs), 1)), signs])
        for rows in itertools.combinations(range(d), q):
            sub = a[list(rows)]
            if numerical_rank(sub, 1e-12) < q:
                continue
            cands.append(np.linalg.solve(sub, signs.T).T)
    else:
        for rows in itertools.combinations(range(d), q - 1):
            sub = a[list(rows)]
            _, s, vt = np.linalg.svd(sub)
            if s[-1] <= 1e-12 * max(s[0], 1e-300):
                continue
            cands.append(vt[-1][None])
    c = np.concatenate(cands)
    c = c / norm(c @ b.T)[:, None]
    return np.concatenate([c, -c])


# ---------------------------------------------------------------------------
# Distance to a subspace
# ---------------------------------------------------------------------------

class SubspaceDistance:
    """Batched evaluator of x -> d(x, F) = min_c |x - B c|.

    Exact for euclidean and polyhedral norms (enumeration of the optimal
    vertices of the underlying linear program), Newton's method for smooth
    l^p norms and a generic local solver for custom norms.
    """

    def __init__(self, norm: NormSpec, basis):
        self.norm = norm
        self.basis = np.asarray(basis, dtype=float)
        d, k = self.basis.shape
        self.d, self.k = d, k
        self._maps = None
        if k == 0 or k == d or norm.is_custom:
            return
        if norm.is_euclidean:
            self._pinv = np.linalg.pinv(self.basis)
            return
        w = norm.weight_vector(d)
        a = self.basis * w[:, None]
        self._w, self._a = w, a
        if norm.is_polyhedral:
            self._maps = self._build_maps(a, math.isinf(norm.p))

    @staticmethod
    def _build_maps(a, is_inf):
        d, k = a.shape
        cmaps = []
        if not is_inf:
            for rows in itertools.combinations(range(d), k):
                sub = a[list(rows)]
                if numerical_rank(sub, 1e-12) < k:
                    continue
                m = np.zeros((k, d))
                m[:, list(rows)] = np.linalg.inv(sub)
                cmaps.append(m)
        else:
            signs = np.array(list(itertools.product([1.0, -1.0], repeat=k)))
            signs = np.hstack([np.ones((len(signs), 1)), signs])
            for rows in itertools.combinations(range(d), k + 1):
                sub = a[list(rows)]
                for s in signs:
                    sys_ = np.hstack([sub, -s[:, None]])
                    if numerical_rank(sys_, 1e-12) < k + 1:
                        continue
                    inv = np.linalg.inv(sys_)
                    m = np.zeros((k, d))
                    m[:, list(rows)] = inv[:k]
                    cmaps.append(m)
        cmaps = np.array(cmaps)
        resid = np.eye(d)[None] - np.einsum("ik,skj->sij", a, cmaps)
        return cmaps, resid

    def __call__(self, x, return_coords=False):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        if self.k == 0:
            out, coords = self.norm(x), np.zeros((n, 0))
        elif self.k == self.d:
            coords = np.linalg.solve(self.basis, x.T).T
            out = np.zeros(n)
        elif self.norm.is_custom:
            out, coords = self._custom(x)
        elif self.norm.is_euclidean:
            coords = x @ self._pinv.T
            out = np.linalg.norm(x - coords @ self.basis.T, axis=1)
        elif self._maps is not None:
            cmaps, resid = self._maps
            z = x * self._w
            r = np.einsum("sij,nj->nsi", resid, z)
            if math.isinf(self.norm.p):
                vals = np.max(np.abs(r), axis=2)
            else:
                vals = np.sum(np.abs(r), axis=2)
            best = np.argmin(vals, axis=1)
            out = vals[np.arange(n), best]
            coords = np.einsum("nkj,nj->nk", cmaps[best], z) if return_coords else None
        else:
            out, coords = _lp_fit(x * self._w, self._a, self.norm.p)
        return (out, coords) if return_coords else out

    def _custom(self, x):
        b = self.basis
        c0 = x @ np.linalg.pinv(b).T
        vals, coords = [], []
        for xi, ci in zip(x, c0):
            fun = lambda c: float(self.norm(xi - b @ c))
            res = minimize(fun, ci, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            res = minimize(fun, res.x, method="Powell", options={"xtol": 1e-10, "ftol": 1e-13})
            vals.append(min(res.fun, fun(ci)))
            coords.append(res.x)
        return np.array(vals), np.array(coords)


def _newton_convex(fun, grad_hess, x, iters=100, tol=1e-15):
    """Batched damped Newton for smooth convex objectives.

    ``fun(rows, x)`` returns values, ``grad_hess(rows, x)`` gradients (n, k)
    and Hessians (n, k, k) for the selected rows. Only unconverged rows are
    iterated; inside the backtracking search only rows awaiting a decrease
    are re-evaluated.
    """
    n, k = x.shape
    f = fun(np.arange(n), x)
    act = np.arange(n)
    eye = np.eye(k)
    for _ in range(iters):
        if not len(act):
            break
        xa, fa = x[act], f[act]
        g, h = grad_hess(act, xa)
        h = h + (1e-14 * np.trace(h, axis1=1, axis2=2) + 1e-300)[:, None, None] * eye
        step = -np.linalg.solve(h, g[..., None])[..., 0]
        new_x, new_f = xa.copy(), fa.copy()
        accepted = np.zeros(len(act), dtype=bool)
        pending = np.arange(len(act))
        t = 1.0
        for _ls in range(50):
            xn = xa[pending] + t * step[pending]
            fn = fun(act[pending], xn)
            ok = fn <= fa[pending]
            idx = pending[ok]
            new_x[idx], new_f[idx] = xn[ok], fn[ok]
            accepted[idx] = True
            pending = pending[~ok]
            if not len(pending):
                break
            t *= 0.5
        decrement = -np.einsum("nk,nk->n", g, step)
        x[act], f[act] = new_x, new_f
        done = ~accepted | (decrement <= tol * (np.abs(fa) + 1e-300))
        act = act[~done]
    return x, f


def _lp_fit(z, a, p, iters=100):
    """Batched solve of min_c ||z - a c||_p for 1 < p < inf.

    Newton's method needs a C^2 objective, and sum |r_i|^p is only C^2 for
    p >= 2. For p < 2 the dual problem is solved instead: the optimal
    residual is r = sign(u) |u|^(p'-1) for the maximizer u in ker(a^T) of a
    concave function with exponent p' = p / (p - 1) > 2.
    """
    n, d = z.shape
    pinv = np.linalg.pinv(a)
    if p >= 2.0:
        def fun(rows, cc):
            return np.sum(np.abs(z[rows] - cc @ a.T) ** p, axis=1)

        def grad_hess(rows, cc):
            r = z[rows] - cc @ a.T
            ar = np.abs(r)
            g = -p * (np.sign(r) * ar ** (p - 1)) @ a
            h = np.einsum("ni,ij,ik->njk", p * (p - 1) * ar ** (p - 2), a, a)
            return g, h

        c, _ = _newton_convex(fun, grad_hess, z @ pinv.T, iters)
    else:
        nb = sla.null_space(a.T)
        if nb.shape[1] == 0:
            c = z @ pinv.T
        else:
            q = p / (p - 1.0)
            zb = z @ nb  # (n, m)

            def fun(rows, y):
                u = y @ nb.T
                return np.sum(np.abs(u) ** q, axis=1) / q - np.sum(zb[rows] * y, axis=1)

            def grad_hess(rows, y):
                u = y @ nb.T
                au = np.abs(u)
                g = (np.sign(u) * au ** (q - 1)) @ nb - zb[rows]
                h = np.einsum("ni,ij,ik->njk", (q - 1) * au ** (q - 2), nb, nb)
                return g, h

            # start from the functional norming the least-squares residual
            r0 = z - (z @ pinv.T) @ a.T
            y0 = (np.sign(r0) * np.abs(r0) ** (p - 1)) @ nb
            y, _ = _newton_convex(fun, grad_hess, y0, iters)
            u = y @ nb.T
            r = np.sign(u) * np.abs(u) ** (q - 1)
            c = (z - r) @ pinv.T
    dist = np.sum(np.abs(z - c @ a.T) ** p, axis=1) ** (1.0 / p)
    return dist, c


def _distance(norm, basis) -> SubspaceDistance:
    b = np.asarray(basis, dtype=float)
    return _distance_cache.get_or(_key(norm, b), lambda: SubspaceDistance(norm, b))


def dist_to_subspace(space: AmbientSpace, v, F: Subspace) -> float:
    """d(v, F) = inf_{f in F} |v - f|."""
    return float(_distance(space.norm, F.basis)(np.asarray(v, dtype=float)[None])[0])


# ---------------------------------------------------------------------------
# Suprema of convex homogeneous functions over unit spheres
# ---------------------------------------------------------------------------

def sup_over_sphere(norm: NormSpec, basis, g, rng=None, extra=None):
    """sup over unit vectors u in span(basis) of g(u), g convex and 1-homogeneous.

    Returns ``(value, maximizing unit vector)``.
    """
    b = np.asarray(basis, dtype=float)
    if b.shape[1] == 0:
        return 0.0, np.zeros(b.shape[0])
    if norm.is_polyhedral:
        u = section_extreme_points(norm, b) @ b.T
        vals = np.asarray(g(u))
        i = int(np.argmax(vals))
        return float(vals[i]), u[i]
    rng = _rng(rng if rng is not None else 0)

    def f(c):
        x = c @ b.T
        return np.asarray(g(x)) / norm(x)

    # smooth objectives: angle accuracy 1e-5 already pins the value to ~1e-10
    tol = 1e-9 if norm.is_custom else 1e-5
    val, c = sphere_optimize(f, b.shape[1], rng, maximize=True, extra=extra, tol=tol, n_local=4)
    u = b @ c
    return float(val), u / norm(u)


def restricted_operator_norm(norm: NormSpec, a, basis, rng=None) -> float:
    """|A restricted to span(basis)| = sup_{c} |A B c| / |B c|."""
    a = as_matrix(a)
    b = np.asarray(basis, dtype=float)
    if b.shape[1] == 0:
        return 0.0
    if norm.is_euclidean:
        q, _ = np.linalg.qr(b)
        return float(np.linalg.norm(a @ q, 2))
    return sup_over_sphere(norm, b, lambda x: norm(x @ a.T), rng)[0]


def operator_norm(space: AmbientSpace, A, rng=None) -> float:
    """Induced operator norm sup_{|v|=1} |A v|."""
    return restricted_operator_norm(space.norm, A, np.eye(space.dim), rng)


# ---------------------------------------------------------------------------
# Angles and complements
# ---------------------------------------------------------------------------

def min_angle(space: AmbientSpace, E: Subspace, F: Subspace, rng=None) -> AngleResult:
    """Minimal angle from E to F: sin = inf_{|e|=1} d(e, F) = 1/|pi_{E||F}|."""
    if E.dim == 0:
        raise ValueError("empty subspace")
    if F.dim == 0:
        return AngleResult(1.0, 1.0)
    g = np.hstack([E.basis, F.basis])
    if numerical_rank(g) < g.shape[1]:
        return AngleResult(0.0, math.inf)
    p = E.basis @ np.linalg.pinv(g)[: E.dim]
    qg, _ = np.linalg.qr(g)
    pn = restricted_operator_norm(space.norm, p, qg, rng)
    sin = 1.0 / pn
    if sin <= TAU_ANGLE:
        return AngleResult(sin, math.inf)
    return AngleResult(float(min(sin, 1.0)), float(pn))


def _auerbach_basis(norm, b, rng, sweeps=60):
    """Coordinates C (q x q) of a unit basis maximizing |det C| / prod |B c_i|."""
    q = b.shape[1]
    c = np.eye(q) / norm(b.T)[:, None]
    c = c.T
    ext = section_extreme_points(norm, b) if norm.is_polyhedral else None
    for _ in range(sweeps):
        changed = False
        for i in range(q):
            ell = np.linalg.inv(c)[i]
            if ext is not None:
                vals = np.abs(ext @ ell)
                j = int(np.argmax(vals))
                best, cand = vals[j], ext[j]
            else:
                best, cc = sphere_optimize(lambda x: np.abs(x @ ell) / norm(x @ b.T), q, rng,
                                           n_start=16, tol=1e-10)
                cand = cc / norm(b @ cc)
            if best > 1.0 + 1e-12:
                c[:, i] = cand
                changed = True
        if not changed:
            break
    return c


def _min_projection_lp(norm, b, n):
    """Minimize the l^inf / l^1 operator norm of P = B B^T + B Z^T N^T over Z."""
    d, q = b.shape
    m = n.shape[1]
    w = norm.weight_vector(d)
    p0 = b @ b.T
    # coefficient of Z[a, c] in P[i, j] is B[i, c] * N[j, a]
    kz = np.einsum("ic,ja->ijac", b, n).reshape(d * d, m * q)
    nz, nu = m * q, d * d
    nvar = nz + nu + 1
    cost = np.zeros(nvar)
    cost[-1] = 1.0
    eye = np.eye(nu)
    a1 = np.hstack([kz, -eye, np.zeros((nu, 1))])
    a2 = np.hstack([-kz, -eye, np.zeros((nu, 1))])
    rows = []
    ratio = np.outer(w, 1.0 / w)  # w_i / w_j
    if math.isinf(norm.p):
        for i in range(d):
            r = np.zeros(nvar)
            r[nz + i * d: nz + (i + 1) * d] = ratio[i]
            r[-1] = -1.0
            rows.append(r)
    else:
        for j in range(d):
            r = np.zeros(nvar)
            r[nz + j + np.arange(d) * d] = ratio[:, j]
            r[-1] = -1.0
            rows.append(r)
    a_ub = np.vstack([a1, a2, np.array(rows)])
    b_ub = np.concatenate([-p0.ravel(), p0.ravel(), np.zeros(d)])
    bounds = [(None, None)] * nz + [(0, None)] * (nu + 1)
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        return None
    z = res.x[:nz].reshape(m, q)
    return b + n @ z


def auerbach_complement(space: AmbientSpace, E: Subspace, rng=None, refine: bool = True) -> Splitting:
    """A complement F of E with |pi_{E||F}| <= sqrt(dim E) (certified when possible).

    An Auerbach basis of E and norm-preserving extensions of its coordinate
    functionals give a first projection (norm <= dim E); the projection is then
    improved by minimizing its operator norm over all projections onto E
    (an LP for polyhedral norms, a derivative-free search otherwise, skipped
    when ``refine`` is false).
    """
    rng = _rng(rng if rng is not None else 0)
    d, q = space.dim, E.dim
    if q == 0:
        return Splitting(E, Subspace.full(d), np.zeros((d, d)), 0.0, True)
    if q == d:
        return Splitting(E, Subspace.zero(d), np.eye(d), 1.0, True)
    b = E.basis
    nb = sla.null_space(b.T)
    norm = space.norm
    if norm.is_euclidean:
        return Splitting(E, Subspace(nb), b @ b.T, 1.0, True)

    c = _auerbach_basis(norm, b, rng)
    phi = np.linalg.inv(c)  # rows: coordinate functionals of the Auerbach basis
    if norm.is_custom:
        ycoord = b @ phi.T
    else:
        dual = norm.dual()
        start = b @ phi.T  # d x q, columns satisfy B^T y = phi_i
        _, coords = _distance(dual, nb)(start.T, return_coords=True)
        ycoord = start - nb @ coords.T
    # P = (B C) y^T, so the functionals in orthonormal coordinates are y C^T
    candidates = [ycoord @ c.T]
    if norm.is_polyhedral and refine:
        y = _min_projection_lp(norm, b, nb)
        if y is not None:
            candidates.append(y)
    best, best_norm = None, math.inf
    for y in candidates:
        p = b @ y.T
        pn = operator_norm(space, p, rng)
        if pn < best_norm:
            best, best_norm = y, pn
    if refine and not norm.is_polyhedral and best_norm > math.sqrt(q):
        best, best_norm = _refine_projection(space, b, nb, best, best_norm, rng)
    p = b @ best.T
    F = Subspace.kernel_of(best)
    certified = best_norm <= math.sqrt(q) + space.eps_opt
    return Splitting(E, F, p, float(best_norm), bool(certified))


def _refine_projection(space, b, nb, y0, n0, rng):
    z0 = np.linalg.lstsq(nb, y0 - b, rcond=None)[0]
    shape = z0.shape

    norm = space.norm
    d = space.dim

    def obj(z):
        # coarse operator-norm estimate; the final value is recomputed below
        a = b @ (b + nb @ z.reshape(shape)).T
        f = lambda c: norm(c @ a.T) / norm(c)
        return sphere_optimize(f, d, np.random.default_rng(0), n_start=16, n_local=2, tol=1e-5)[0]

    res = minimize(obj, z0.ravel(), method="Nelder-Mead",
                   options={"maxiter": 150 * z0.size, "xatol": 1e-5, "fatol": 1e-7})
    y = b + nb @ res.x.reshape(shape)
    val = operator_norm(space, b @ y.T, rng)
    if val < n0:
        return y, float(val)
    return y0, n0


def preimage_complement(space: AmbientSpace, A, E1: Subspace, F2: Subspace) -> Splitting:
    """Splitting (E1, F1) with F1 = {v : A v in F2} and pi = (A|E1)^-1 pi_{E2||F2} A."""
    a = as_matrix(A)
    w = a @ E1.basis
    s = np.linalg.svd(w, compute_uv=False) if E1.dim else np.array([1.0])
    if E1.dim and (s[0] == 0 or s[-1] <= TAU_RANK * max(s[0], np.linalg.norm(a, 2))):
        raise ValueError("degenerate restriction")
    E2 = Subspace(w) if E1.dim else Subspace.zero(space.dim)
    if F2.dim + E2.dim != space.dim or numerical_rank(np.hstack([E2.basis, F2.basis])) < space.dim:
        raise ValueError("not a splitting")
    p2 = projection_matrix(E2, F2)
    p1 = E1.basis @ np.linalg.pinv(w) @ p2 @ a
    F1 = Subspace.kernel_of(a.T @ F2.annihilator().basis)
    return Splitting(E1, F1, p1, operator_norm(space, p1))


# ---------------------------------------------------------------------------
# Gap and Hausdorff distance
# ---------------------------------------------------------------------------

def _gap(space, U, V, rng=None):
    if U.dim == 0:
        raise ValueError("empty subspace")
    if space.norm.is_custom:
        return _gap_uncached(space, U, V, rng)
    return _gap_cache.get_or(_key(space.norm, U.basis, V.basis),
                             lambda: _gap_uncached(space, U, V, rng))


def _gap_uncached(space, U, V, rng):
    if space.norm.is_euclidean:
        r = U.basis - V.basis @ (V.basis.T @ U.basis)
        _, s, vt = np.linalg.svd(r)
        u = U.basis @ vt[0]
        return float(min(s[0], 1.0)), u
    dist = _distance(space.norm, V.basis)
    return sup_over_sphere(space.norm, U.basis, dist, rng)


def gap(space: AmbientSpace, U: Subspace, V: Subspace, rng=None) -> float:
    """delta(U, V) = sup_{u in U, |u|=1} d(u, V)."""
    return _gap(space, U, V, rng)[0]


def _sphere_points(norm, b, n, rng):
    """Unit vectors of span(b): grid (dim 2) or random directions, plus vertices."""
    q = b.shape[1]
    if q == 1:
        c = np.array([[1.0], [-1.0]])
    elif q == 2:
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        c = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        c = rng.standard_normal((n * (q - 1), q))
    if norm.is_polyhedral and q > 1:
        c = np.concatenate([c, section_extreme_points(norm, b)])
    x = c @ b.T
    return x / norm(x)[:, None], c


def _polygon(norm, b):
    """Vertices (in R^d, angular order) of the unit sphere of a 2-dim polyhedral section."""
    c = section_extreme_points(norm, b)
    c = c[np.argsort(np.arctan2(c[:, 1], c[:, 0]))]
    return c @ b.T


def _dist_to_polygon(norm, xs, verts):
    """Exact min over the closed polygon through ``verts`` of |x - v| (polyhedral norms).

    Along an edge t -> |r - t s| is convex and piecewise linear; its minimum
    sits at a breakpoint or an endpoint, and all breakpoints are enumerated.
    """
    w = norm.weight_vector(xs.shape[1])
    p0 = verts * w
    s = np.roll(p0, -1, axis=0) - p0  # (m, d)
    r = (xs * w)[:, None, :] - p0[None]  # (n, m, d)
    d = xs.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cands = [r / s[None]]
        if math.isinf(norm.p):
            i, j = np.triu_indices(d, 1)
            cands.append((r[..., i] - r[..., j]) / (s[..., i] - s[..., j])[None])
            cands.append((r[..., i] + r[..., j]) / (s[..., i] + s[..., j])[None])
    t = np.concatenate(cands + [np.zeros(r.shape[:2] + (1,)), np.ones(r.shape[:2] + (1,))], axis=2)
    t = np.clip(np.nan_to_num(t, nan=0.0, posinf=0.0, neginf=0.0), 0.0, 1.0)
    best = np.full(len(xs), np.inf)
    for k in range(r.shape[1]):  # one edge at a time keeps memory small
        res = np.abs(r[:, k, None, :] - t[:, k, :, None] * s[k])
        vals = res.max(axis=2) if math.isinf(norm.p) else res.sum(axis=2)
        best = np.minimum(best, vals.min(axis=1))
    return best


class _PolytopeSphere:
    """Exact distances to the unit sphere of a polyhedral section (dim 3).

    The sphere is triangulated into facets. On a facet p0 + S mu the function
    mu -> |x - p0 - S mu| is convex and piecewise linear, so its minimum over
    the simplex sits where k hyperplanes meet, taken from the breakpoint
    hyperplanes of the norm and the simplex facets. The candidate solves do not
    depend on x and are precomputed as affine maps of (w * (x - p0), 1).
    """

    def __init__(self, norm, b):
        from scipy.spatial import ConvexHull

        d, q = b.shape
        self.norm, self.inf = norm, math.isinf(norm.p)
        w = norm.weight_vector(d)
        c = np.unique(np.round(section_extreme_points(norm, b), 13), axis=0)
        hull = ConvexHull(c)
        verts = (c @ b.T) * w  # weighted ambient coordinates
        k = q - 1
        eye_d = np.eye(d)
        # hyperplanes a . mu = g . (r0, 1), one row of A per hyperplane, as functions of S
        p0s, ss, maps, owner = [], [], [], []
        for f_idx, simplex in enumerate(hull.simplices):
            pts = verts[simplex]
            p0, sm = pts[0], (pts[1:] - pts[0]).T  # sm: d x k
            a_rows, g_rows = [], []
            for i in range(d):
                a_rows.append(sm[i])
                g_rows.append(np.append(eye_d[i], 0.0))
            if self.inf:
                for i, j in itertools.combinations(range(d), 2):
                    for sg in (1.0, -1.0):
                        a_rows.append(sm[i] - sg * sm[j])
                        g_rows.append(np.append(eye_d[i] - sg * eye_d[j], 0.0))
            for j in range(k):
                a_rows.append(np.eye(k)[j])
                g_rows.append(np.zeros(d + 1))
            a_rows.append(np.ones(k))
            g_rows.append(np.append(np.zeros(d), 1.0))
            a_all, g_all = np.array(a_rows), np.array(g_rows)
            for sub in itertools.combinations(range(len(a_all)), k):
                m = a_all[list(sub)]
                if abs(np.linalg.det(m)) < 1e-12:
                    continue
                maps.append(np.linalg.solve(m, g_all[list(sub)]))
                owner.append(f_idx)
            p0s.append(p0)
            ss.append(sm)
        self.w = w
        self.p0 = np.array(p0s)
        self.s = np.array(ss)
        self.maps = np.array(maps)  # (C, k, d+1)
        self.owner = np.array(owner)

    def __call__(self, xs, chunk=64):
        out = np.empty(len(xs))
        p0 = self.p0[self.owner]  # (C, d)
        sm = self.s[self.owner]  # (C, d, k)
        for lo in range(0, len(xs), chunk):
            z = xs[lo:lo + chunk] * self.w
            r0 = z[:, None, :] - p0[None]  # (n, C, d)
            ext = np.concatenate([r0, np.ones(r0.shape[:2] + (1,))], axis=2)
            mu = np.einsum("ckj,ncj->nck", self.maps, ext)
            feas = (mu >= -1e-12).all(axis=2) & (mu.sum(axis=2) <= 1 + 1e-12)
            res = np.abs(r0 - np.einsum("cdk,nck->ncd", sm, mu))
            vals = res.max(axis=2) if self.inf else res.sum(axis=2)
            out[lo:lo + chunk] = np.where(feas, vals, np.inf).min(axis=1)
        return out


_polytope_cache = _LRU()


def _polytope_sphere(norm, b):
    return _polytope_cache.get_or(_key(norm, b), lambda: _PolytopeSphere(norm, b))


def _circle_coords(th):
    return np.stack([np.cos(th), np.sin(th)], axis=-1)


def _dist_to_sphere(norm, xs, Vb, rng, n_grid=256):
    """For each row x: inf over unit v in span(Vb) of |x - v| (attained values)."""
    q = Vb.shape[1]
    if q == 1:
        v = Vb[:, 0] / norm(Vb[:, 0])
        return np.minimum(norm(xs - v), norm(xs + v))
    if q == 2 and norm.is_polyhedral:
        return _dist_to_polygon(norm, xs, _polygon(norm, Vb))
    if q == 3 and norm.is_polyhedral and Vb.shape[0] <= 6:
        return _polytope_sphere(norm, Vb)(xs)
    if q == 2:
        def on_sphere(th):
            v = _circle_coords(th) @ Vb.T
            return v / norm(v)[..., None]
        th = np.linspace(0, 2 * np.pi, n_grid, endpoint=False)
        dmat = norm(xs[:, None, :] - on_sphere(th)[None])
        j = np.argmin(dmat, axis=1)
        h = 2 * np.pi / n_grid
        g = lambda t: -norm(xs - on_sphere(t))
        # smooth objective: the value error is quadratic in the angle error
        _, v = zoom_refine(g, th[j], -dmat[np.arange(len(xs)), j], h, 1e-7)
        return -v
    grid_v, grid_c = _sphere_points(norm, Vb, n_grid, rng)
    dmat = norm(xs[:, None, :] - grid_v[None, :, :])
    j = np.argmin(dmat, axis=1)
    c = grid_c[j] / np.linalg.norm(grid_c[j], axis=1, keepdims=True)
    best = dmat[np.arange(len(xs)), j]

    def ev(cc):
        v = cc @ Vb.T
        return norm(xs - v / norm(v)[:, None])

    step = np.full(len(xs), 2 * np.pi / n_grid)
    step_min = 1e-11 if norm.is_polyhedral or norm.is_custom else 1e-7
    eye = np.eye(q)
    for _ in range(200):
        act = step > step_min
        if not act.any():
            break
        improved = np.zeros(len(xs), dtype=bool)
        for k in range(q):
            for sgn in (1.0, -1.0):
                cc = c + sgn * step[:, None] * eye[k]
                cc /= np.linalg.norm(cc, axis=1, keepdims=True)
                val = ev(cc)
                ok = act & (val < best)
                c[ok], best[ok] = cc[ok], val[ok]
                improved |= ok
        step[act & ~improved] *= 0.5
    return best


def _sup_dist_to_sphere(space, U, V, rng, extra=()):
    norm = space.norm
    xs, _ = _sphere_points(norm, U.basis, 256, rng)
    if len(extra):
        ex = np.asarray(extra, dtype=float).reshape(-1, space.dim)
        xs = np.concatenate([xs, ex / norm(ex)[:, None]])
    vals = _dist_to_sphere(norm, xs, V.basis, rng)
    if U.dim == 1:
        return float(np.max(vals))
    order = np.argsort(-vals)[:4]
    best = float(vals[order[0]])
    if U.dim == 2:
        ub = U.basis

        def g(t):
            x = _circle_coords(t.ravel()) @ ub.T
            return _dist_to_sphere(norm, x / norm(x)[:, None], V.basis, rng).reshape(t.shape)

        c = xs[order] @ ub
        th = np.arctan2(c[:, 1], c[:, 0])
        h = 2 * np.pi / 256
        offsets = np.linspace(-1.0, 1.0, 17)
        # zooming local grids, every round one batched evaluation
        # kinks (polyhedral) need a fine angle; smooth maxima are quadratic
        h_min = 1e-10 if norm.is_polyhedral or norm.is_custom else 1e-7
        while h > h_min:
            grid = th[:, None] + h * offsets[None]
            v = g(grid)
            j = np.argmax(v, axis=1)
            th = grid[np.arange(len(th)), j]
            best = max(best, float(v.max()))
            h /= 8.0
        return best
    # batched pattern search of the outer supremum around the best candidates
    ub, q = U.basis, U.dim
    c = xs[order] @ ub
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    cur = vals[order].copy()
    step = np.full(len(c), 0.05)
    step_min = 1e-9 if norm.is_polyhedral or norm.is_custom else 1e-7
    eye = np.eye(q)
    for _ in range(80):
        act = np.flatnonzero(step > step_min)
        if not len(act):
            break
        cand = c[act, None, :] + step[act, None, None] * np.concatenate([eye, -eye])[None]
        cand /= np.linalg.norm(cand, axis=2, keepdims=True)
        x = cand.reshape(-1, q) @ ub.T
        v = _dist_to_sphere(norm, x / norm(x)[:, None], V.basis, rng).reshape(len(act), 2 * q)
        j = np.argmax(v, axis=1)
        vj = v[np.arange(len(act)), j]
        up = vj > cur[act]
        i_up, i_down = act[up], act[~up]
        c[i_up], cur[i_up] = cand[up, j[up]], vj[up]
        step[i_down] *= 0.5
    return max(best, float(cur.max()))


def hausdorff(space: AmbientSpace, U: Subspace, V: Subspace, rng=None) -> float:
    """Hausdorff distance between the unit spheres of U and V."""
    if U.dim == 0 or V.dim == 0:
        raise ValueError("empty subspace")
    if space.norm.is_euclidean:
        def one_side(X, Y):
            if X.dim > Y.dim:
                return math.sqrt(2.0)
            # largest principal angle from the residual (sin), which keeps
            # precision near zero where 2 - 2 cos would cancel
            r = X.basis - Y.basis @ (Y.basis.T @ X.basis)
            s = min(float(np.linalg.svd(r, compute_uv=False)[0]), 1.0)
            return 2.0 * math.sin(math.asin(s) / 2.0)
        return max(one_side(U, V), one_side(V, U))
    rng = _rng(rng if rng is not None else 0)
    _, u_star = _gap(space, U, V, rng)
    _, v_star = _gap(space, V, U, rng)
    return max(_sup_dist_to_sphere(space, U, V, rng, [u_star]),
               _sup_dist_to_sphere(space, V, U, rng, [v_star]))


@dataclass(frozen=True)
class PerturbedSplitting:
    applicable: bool
    is_splitting: Optional[bool]
    graph_norm_bound: float
    measured: float
    d_h: float
    sin_theta: float

    @property
    def holds(self) -> bool:
        return (not self.applicable) or (bool(self.is_splitting) and self.measured <= self.graph_norm_bound + 2e-9)


def perturbed_splitting(space: AmbientSpace, E: Subspace, E_prime: Subspace, F: Subspace,
                        rng=None) -> PerturbedSplitting:
    """Check that a perturbation E' of E still complements F, with the graph-norm bound."""
    d = space.dim
    if E.dim + F.dim != d or numerical_rank(np.hstack([E.basis, F.basis])) < d:
        raise ValueError("(E, F) is not a splitting")
    ang = min_angle(space, E, F, rng)
    if ang.sin_theta <= TAU_ANGLE:
        raise ValueError("(E, F) is not a topological splitting")
    dh = hausdorff(space, E, E_prime, rng)
    if not dh < ang.sin_theta:
        return PerturbedSplitting(False, None, math.inf, math.nan, dh, ang.sin_theta)
    g = np.hstack([E_prime.basis, F.basis])
    ok = E_prime.dim + F.dim == d and numerical_rank(g) == d
    if not ok:
        return PerturbedSplitting(True, False, math.inf, math.inf, dh, ang.sin_theta)
    p_f = projection_matrix(F, E_prime)
    measured = restricted_operator_norm(space.norm, p_f, E.basis, rng)
    bound = 2.0 * dh / (ang.sin_theta - dh)
    return PerturbedSplitting(True, True, float(bound), float(measured), dh, ang.sin_theta)
