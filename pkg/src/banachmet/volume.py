"""Induced volumes on subspaces, John forms and volume-ratio determinants.

The induced volume of a q-dimensional subspace E is the Haar measure giving
the unit ball B_E mass omega_q (the euclidean unit-ball volume). Everything
reduces to the coordinate Lebesgue volume of B_E in the orthonormal carrier
basis, computed by

* closed forms (euclidean, lines, coordinate sections of weighted l^p),
* exact convex hulls of the vertices (l^1 / l^inf sections),
* radial polygons / hulls with Richardson correction (smooth norms, q <= 3),
* rejection sampling inside the John ellipsoid (smooth norms, q >= 4).
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.spatial import ConvexHull
from scipy.stats import norm as _gauss
from scipy.stats import qmc

from . import ambient
from ._optim import sphere_optimize
from .ambient import Subspace, as_matrix, _LRU, _key, section_extreme_points
from .norms import AmbientSpace, NormSpec

Q_MAX = 6
MVEE_EPSILON = 1e-3
MC_TARGET = 5e-3
MC_MAX_SAMPLES = 4_000_000

_raw_john_cache = _LRU()
_volume_cache = _LRU()


def gamma_half(x: float) -> float:
    """Gamma function at positive integers and half-integers."""
    twice = round(2 * x)
    if twice < 1 or abs(2 * x - twice) > 1e-12:
        raise ValueError("gamma_half needs a positive multiple of 1/2")
    if twice % 2 == 0:
        return float(math.factorial(twice // 2 - 1))
    n = (twice - 1) // 2  # x = n + 1/2
    return math.factorial(2 * n) / (4 ** n * math.factorial(n)) * math.sqrt(math.pi)


def omega(q: int) -> float:
    """Volume of the euclidean unit ball of R^q."""
    if q == 0:
        return 1.0
    return math.pi ** (q / 2) / gamma_half(q / 2 + 1)


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    rel_error: float
    method: str

    def to_dict(self) -> dict:
        return {"value": self.value, "rel_error": self.rel_error, "method": self.method}


@dataclass(frozen=True, eq=False)
class JohnForm:
    """Inner product on E (gram in carrier-basis coordinates) close to the norm."""

    subspace: Subspace
    gram: np.ndarray
    mvee_epsilon: float

    def norm(self, coords) -> np.ndarray:
        c = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.sqrt(np.einsum("ni,ij,nj->n", c, self.gram, c))

    def norm_of_vectors(self, vectors) -> np.ndarray:
        """John norm of ambient vectors lying in E."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        return self.norm(v @ self.subspace.basis)

    def to_dict(self) -> dict:
        return {"subspace": self.subspace.to_dict(), "gram": self.gram.tolist(),
                "mvee_epsilon": self.mvee_epsilon}


def _check_budget(q):
    if q > Q_MAX:
        raise ValueError("dimension beyond volume budget")


def _seed_for(norm: NormSpec, basis: np.ndarray) -> int:
    return zlib.crc32(repr(norm).encode() + basis.tobytes())


# ---------------------------------------------------------------------------
# Boundary samples and the minimum-volume enclosing ellipsoid
# ---------------------------------------------------------------------------

def _directions(q, n, seed):
    if q == 2:
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    m = int(math.ceil(math.log2(n)))
    sob = qmc.Sobol(q, scramble=True, seed=seed).random_base2(m)
    u = _gauss.ppf(np.clip(sob, 1e-12, 1 - 1e-12))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def boundary_points(norm: NormSpec, basis) -> np.ndarray:
    """Coordinates of points on the boundary of {c : |B c| <= 1}."""
    b = np.asarray(basis, dtype=float)
    q = b.shape[1]
    if norm.is_polyhedral:
        return section_extreme_points(norm, b)
    dirs = [_directions(q, 512 * q, _seed_for(norm, b))]
    signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * q))).reshape(q, -1).T
    dirs.append(signs / math.sqrt(q))
    u = np.concatenate(dirs)
    return u / norm(u @ b.T)[:, None]


def mvee_centered(points, eps: float = MVEE_EPSILON, max_iter: int = 100_000) -> np.ndarray:
    """Minimum-volume centered ellipsoid {c : c^T Q c <= 1} containing +-points.

    Khachiyan's coordinate ascent with Wolfe away steps. The returned Q is
    inflated so that every point lies inside.
    """
    x = np.asarray(points, dtype=float)
    n, q = x.shape
    u = np.full(n, 1.0 / n)
    for it in range(max_iter):
        if it % 50 == 0:
            xw = (x * u[:, None]).T @ x
        inv = np.linalg.inv(xw)
        m = np.einsum("ni,ij,nj->n", x, inv, x)
        j = int(np.argmax(m))
        if m[j] <= q * (1 + eps):
            break
        support = np.flatnonzero(u > 0)
        k = support[int(np.argmin(m[support]))]
        if m[j] - q >= q - m[k]:
            idx, mm = j, m[j]
            t = (mm - q) / (q * (mm - 1))
        else:
            idx, mm = k, m[k]
            lo = -u[k] / (1 - u[k])
            t = max((mm - q) / (q * (mm - 1)), lo) if mm > 1 else lo
        xi = x[idx]
        u *= (1 - t)
        u[idx] += t
        u[u < 0] = 0.0
        xw = (1 - t) * xw + t * np.outer(xi, xi)
    xw = (x * u[:, None]).T @ x
    inv = np.linalg.inv(xw)
    m = np.einsum("ni,ij,nj->n", x, inv, x)
    qmat = inv / q
    return qmat / max(m.max() / q, 1e-300)


def _raw_john(norm, b):
    return _raw_john_cache.get_or(_key(norm, b), lambda: mvee_centered(boundary_points(norm, b)))


# ---------------------------------------------------------------------------
# Unit-ball volumes
# ---------------------------------------------------------------------------

def _coordinate_rows(b, tol=1e-12):
    rows = np.flatnonzero(np.abs(b).max(axis=1) > tol)
    return rows if len(rows) == b.shape[1] else None


def _radial(norm, b, dirs):
    return dirs / norm(dirs @ b.T)[:, None]


def _polygon_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    theta = np.pi * (1 + 5 ** 0.5) * i
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)


def _monte_carlo_volume(inside, qmat, q, seed, target=MC_TARGET):
    """Volume of {c : inside(c)} by rejection sampling in {c^T Q c <= 1}."""
    rng = np.random.default_rng(seed)
    lower = np.linalg.cholesky(qmat)
    vol_d = omega(q) / math.sqrt(np.linalg.det(qmat))
    hits = total = 0
    batch = 100_000
    while True:
        g = rng.standard_normal((batch, q))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        g *= rng.random(batch)[:, None] ** (1.0 / q)
        c = np.linalg.solve(lower.T, g.T).T
        hits += int(np.count_nonzero(inside(c)))
        total += batch
        p = hits / total
        rel = math.sqrt((1 - p) / (p * total)) if hits else math.inf
        if rel <= target or total >= MC_MAX_SAMPLES:
            return p * vol_d, rel


def _unit_ball_volume(norm: NormSpec, b: np.ndarray, coarse: bool = False) -> VolumeEstimate:
    # ``coarse`` trades accuracy for speed inside optimizer loops
    d, q = b.shape
    if q == 1:
        return VolumeEstimate(2.0 / float(norm(b[:, 0])), 0.0, "exact_closed_form")
    if norm.is_euclidean:
        return VolumeEstimate(omega(q), 0.0, "exact_closed_form")
    if not norm.is_custom:
        rows = _coordinate_rows(b)
        if rows is not None:
            p = norm.p
            w = norm.weight_vector(d)[rows]
            if math.isinf(p):
                unit = 2.0 ** q
            else:
                unit = (2 * math.gamma(1 + 1 / p)) ** q / math.gamma(1 + q / p)
            return VolumeEstimate(unit / float(np.prod(w)), 0.0, "exact_closed_form")
    if norm.is_polyhedral:
        hull = ConvexHull(section_extreme_points(norm, b))
        return VolumeEstimate(float(hull.volume), 1e-12, "hull_triangulation")
    if q == 2:
        n = 256 if coarse else 4096
        fine = _polygon_area(_radial(norm, b, _directions(2, n, 0)))
        rough = _polygon_area(_radial(norm, b, _directions(2, n // 2, 0)))
        corr = (fine - rough) / 3.0
        return VolumeEstimate(float(fine + corr), float(abs(corr) / fine) + 1e-12, "hull_triangulation")
    if q == 3:
        n = 1600 if coarse else 16000
        fine = ConvexHull(_radial(norm, b, _fibonacci_sphere(n))).volume
        rough = ConvexHull(_radial(norm, b, _fibonacci_sphere(n // 4))).volume
        corr = (fine - rough) / 3.0
        return VolumeEstimate(float(fine + corr), float(abs(corr) / fine) + 1e-9, "hull_triangulation")
    qmat = _raw_john(norm, b) / 1.02 ** 2  # slack for boundary points missed by the sample
    inside = lambda c: norm(c @ b.T) <= 1.0
    val, rel = _monte_carlo_volume(inside, qmat, q, _seed_for(norm, b),
                                   target=3e-2 if coarse else MC_TARGET)
    return VolumeEstimate(float(val), float(rel), "monte_carlo")


def unit_ball_volume(space: AmbientSpace, E: Subspace) -> VolumeEstimate:
    """Coordinate Lebesgue volume of the unit ball of E in its carrier basis."""
    _check_budget(E.dim)
    if E.dim == 0:
        return VolumeEstimate(1.0, 0.0, "exact_closed_form")
    b = E.basis
    return _volume_cache.get_or(_key(space.norm, b), lambda: _unit_ball_volume(space.norm, b))


def john_form(space: AmbientSpace, E: Subspace) -> JohnForm:
    """Inner product on E whose unit ball has the same volume as B_E."""
    q = E.dim
    if q == 0:
        raise ValueError("empty subspace")
    _check_budget(q)
    norm, b = space.norm, E.basis
    if norm.is_euclidean:
        return JohnForm(E, np.eye(q), 0.0)
    if q == 1:
        return JohnForm(E, np.array([[float(norm(b[:, 0])) ** 2]]), 0.0)
    qmat = _raw_john(norm, b)
    vol_e = unit_ball_volume(space, E).value
    vol_d = omega(q) / math.sqrt(np.linalg.det(qmat))
    lam = (vol_e / vol_d) ** (1.0 / q)
    return JohnForm(E, qmat / lam ** 2, MVEE_EPSILON)


# ---------------------------------------------------------------------------
# Parallelepipeds and determinants
# ---------------------------------------------------------------------------

def parallelepiped_volume(space: AmbientSpace, E: Subspace, vectors) -> VolumeEstimate:
    """Induced volume of the parallelepiped spanned by the columns of ``vectors``."""
    v = np.asarray(vectors, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[1] != E.dim:
        raise ValueError("need exactly dim E vectors")
    coords = E.basis.T @ v
    resid = v - E.basis @ coords
    scale = np.maximum(np.asarray(space.norm(v.T)), 1.0)
    if np.any(np.asarray(space.norm(resid.T)) > space.tau_sub * scale):
        raise ValueError("vector not in subspace")
    vol = unit_ball_volume(space, E)
    val = abs(float(np.linalg.det(coords))) * omega(E.dim) / vol.value
    return VolumeEstimate(val, vol.rel_error, vol.method)


def _restriction(a, E):
    w = a @ E.basis
    if E.dim == 0:
        return w, None, None
    s = np.linalg.svd(w, compute_uv=False)
    if s[0] == 0 or s[-1] <= ambient.TAU_RANK * max(s[0], np.linalg.norm(a, 2)):
        return w, None, None
    qw, r = np.linalg.qr(w)
    return w, qw, r


def determinant_estimate(space: AmbientSpace, A, E: Subspace, coarse: bool = False) -> VolumeEstimate:
    """det(A|E) = m_{AE}(A S) / m_E(S), with its relative error and method.

    ``coarse`` uses cheaper, uncached volume estimates for smooth norms.
    """
    a = as_matrix(A)
    if E.dim == 0:
        return VolumeEstimate(1.0, 0.0, "exact_closed_form")
    _check_budget(E.dim)
    _, qw, r = _restriction(a, E)
    if qw is None:
        return VolumeEstimate(0.0, 0.0, "exact_closed_form")
    coord = abs(float(np.prod(np.diag(r))))
    if space.norm.is_euclidean:
        return VolumeEstimate(coord, 0.0, "exact_closed_form")
    if coarse and not space.norm.is_polyhedral:
        ve = _unit_ball_volume(space.norm, E.basis, coarse=True)
        vae = _unit_ball_volume(space.norm, qw, coarse=True)
    else:
        ve = unit_ball_volume(space, E)
        vae = unit_ball_volume(space, Subspace(qw))
    method = ve.method if ve.method == "monte_carlo" else vae.method
    return VolumeEstimate(coord * ve.value / vae.value, ve.rel_error + vae.rel_error, method)


def determinant(space: AmbientSpace, A, E: Subspace) -> float:
    """Volume-ratio determinant of A restricted to E (0 if not injective)."""
    return determinant_estimate(space, A, E).value


# ---------------------------------------------------------------------------
# Constants propagated from the John distortion
# ---------------------------------------------------------------------------

def john_distortion(q: int, euclidean: bool = False) -> float:
    """Factor s with |v|/s <= ||v||_E <= s |v| for the John form of a q-dim space."""
    return 1.0 if euclidean else math.sqrt(q)


def _slack(q):
    return (1 + MVEE_EPSILON) ** (2 * q)


def hadamard_constant(q: int, euclidean: bool = False) -> float:
    """C_q with det(A|V) <= C_q prod |A v_i| for almost orthonormal bases."""
    return john_distortion(q, euclidean) ** (2 * q) * _slack(q)


def block_constant(q: int, k: int, euclidean: bool = False) -> float:
    """Constant of the block-determinant sandwich for dim V = q, dim E = k."""
    return john_distortion(q, euclidean) ** (2 * q + 2 * k) * _slack(q)


def gelfand_constant(q: int, euclidean: bool = False) -> float:
    """C'_q with V_q / (c_q V_{q-1}) in [1/C'_q, C'_q]."""
    if euclidean:
        return _slack(q)
    s = john_distortion(q)
    pc = math.sqrt(q - 1)
    return max(s ** (2 * q + 2), s ** (4 * q - 2) * pc ** (q - 1)) * _slack(q)


def load_john_constants() -> dict:
    """Pinned C_q values shipped with the package, keyed by q."""
    text = resources.files("banachmet").joinpath("data/john_constants.json").read_text()
    return {int(k): float(v) for k, v in json.loads(text).items()}


# ---------------------------------------------------------------------------
# Approximate SVD, minimal expansion, block determinants
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SVDBasis:
    vectors: np.ndarray  # d x q, ambient-unit columns
    images: np.ndarray  # d x q, A v_i
    products: float  # prod |A v_i|
    det: float
    invertible: bool
    almost_orthonormal: bool
    constant: float

    @property
    def hadamard_holds(self) -> bool:
        return self.det <= self.constant * self.products * (1 + 1e-9)


def approx_svd_basis(space: AmbientSpace, A, V: Subspace) -> SVDBasis:
    """John-orthogonal unit basis of V diagonalizing A between John forms."""
    a = as_matrix(A)
    q = V.dim
    _check_budget(q)
    norm = space.norm
    gv = john_form(space, V).gram
    lv = np.linalg.cholesky(gv)
    _, qw, r = _restriction(a, V)
    invertible = qw is not None
    if invertible:
        lw = np.linalg.cholesky(john_form(space, Subspace(qw)).gram)
        m = lw.T @ r @ np.linalg.inv(lv.T)
    else:
        m = (a @ V.basis) @ np.linalg.inv(lv.T)
    _, _, vt = np.linalg.svd(m)
    coords = np.linalg.solve(lv.T, vt.T)
    vecs = V.basis @ coords
    vecs = vecs / norm(vecs.T)[None, :]
    images = a @ vecs
    products = float(np.prod(norm(images.T)))
    det = determinant(space, a, V)
    return SVDBasis(vecs, images, products, det, invertible, invertible,
                    hadamard_constant(q, norm.is_euclidean))


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs * (1 - 1e-9)

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def min_expansion_bound(space: AmbientSpace, A, E: Subspace, rng=None) -> BoundCheck:
    """(|Av|/|v|) |A|_E|^(q-1) >= det(A|E)/C_q for the least expanded v in E."""
    a = as_matrix(A)
    q = E.dim
    norm, b = space.norm, E.basis
    rng = np.random.default_rng(0) if rng is None else rng
    det = determinant(space, a, E)
    if det == 0:
        return BoundCheck(0.0, 0.0)
    f = lambda c: norm(c @ (a @ b).T) / norm(c @ b.T)
    vmin, _ = sphere_optimize(f, q, rng, maximize=False)
    top = ambient.restricted_operator_norm(norm, a, b, rng)
    return BoundCheck(float(vmin) * top ** (q - 1), det / hadamard_constant(q, norm.is_euclidean))


@dataclass(frozen=True)
class SandwichCheck:
    ratio: float
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        return self.lower * (1 - 1e-9) <= self.ratio <= self.upper * (1 + 1e-9)

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "lower": self.lower, "upper": self.upper, "holds": self.holds}


def block_det_bounds(space: AmbientSpace, A, E: Subspace, F: Subspace, rng=None) -> SandwichCheck:
    """det(A|E+F) / (det(A|E) det(A|F)) bracketed by projection-norm bounds."""
    a = as_matrix(A)
    V = Subspace(np.hstack([E.basis, F.basis]))
    _check_budget(V.dim)
    det_v = determinant(space, a, V)
    if det_v == 0:
        raise ValueError("A is singular on E + F")
    ratio = det_v / (determinant(space, a, E) * determinant(space, a, F))
    k = E.dim
    c = block_constant(V.dim, k, space.norm.is_euclidean)
    p = ambient.min_angle(space, E, F, rng).proj_norm
    p_img = ambient.min_angle(space, Subspace(a @ E.basis), Subspace(a @ F.basis), rng).proj_norm
    return SandwichCheck(float(ratio), 1.0 / (c * p_img ** k), c * p ** k)


# ---------------------------------------------------------------------------
# Sections of balls
# ---------------------------------------------------------------------------

def _radial_to_level(g, center, dirs, r, t_max):
    """Largest t in [0, t_max] with g(center + t u) <= r, per direction (bisection)."""
    lo = np.zeros(len(dirs))
    hi = np.full(len(dirs), t_max)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = g(center + mid[:, None] * dirs) <= r
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def ball_section_volume(space: AmbientSpace, E: Subspace, x, r: float) -> VolumeEstimate:
    """Induced volume of E intersected with the closed ball B(x, r)."""
    if r <= 0:
        raise ValueError("radius must be positive")
    q = E.dim
    _check_budget(q)
    norm, b = space.norm, E.basis
    x = np.asarray(x, dtype=float)
    dist, coords = ambient._distance(norm, b)(x[None], return_coords=True)
    dist = float(dist[0])
    if dist > r:
        return VolumeEstimate(0.0, 0.0, "exact_closed_form")
    if norm.is_euclidean:
        return VolumeEstimate(omega(q) * (r * r - dist * dist) ** (q / 2), 0.0, "exact_closed_form")
    c0 = coords[0]
    g = lambda c: norm(c @ b.T - x)
    scale = omega(q) / unit_ball_volume(space, E).value
    # the section lies in c0 + 2r B_E, whose coordinate radius is bounded by 2r / min |Bu|
    t_max = 2 * r / float(np.min(norm(np.concatenate([b.T, -b.T]))) ) * math.sqrt(q) + 2 * r
    if q == 1:
        dirs = np.array([[1.0], [-1.0]])
        t = _radial_to_level(g, c0, dirs, r, t_max)
        return VolumeEstimate(float(t.sum()) * scale, 1e-12, "exact_closed_form")
    if q <= 3:
        if q == 2:
            fine_d, coarse_d = _directions(2, 4096, 0), _directions(2, 2048, 0)
            area = lambda dd: _polygon_area(_radial_to_level(g, c0, dd, r, t_max)[:, None] * dd)
        else:
            fine_d, coarse_d = _fibonacci_sphere(16000), _fibonacci_sphere(4000)
            area = lambda dd: ConvexHull(_radial_to_level(g, c0, dd, r, t_max)[:, None] * dd).volume
        fine, coarse = area(fine_d), area(coarse_d)
        if fine == 0:
            return VolumeEstimate(0.0, 0.0, "hull_triangulation")
        corr = (fine - coarse) / 3.0
        return VolumeEstimate(float((fine + corr) * scale), abs(corr) / fine + 1e-9, "hull_triangulation")
    qmat = _raw_john(norm, b) / (2 * r * 1.02) ** 2
    seed = _seed_for(norm, b) ^ zlib.crc32(x.tobytes())
    val, rel = _monte_carlo_volume(lambda c: g(c + c0) <= r, qmat, q, seed)
    return VolumeEstimate(float(val * scale), float(rel), "monte_carlo")
