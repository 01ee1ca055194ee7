"""Multi-start pattern search on spheres and Grassmannians.

Objectives are batched: they receive a stack of points and return one value
per point, so each search iteration costs a single vectorized call.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

N_START = 32
N_LOCAL = 6


def _tangent_basis(c):
    # orthonormal basis of the complement of c (unit vector), shape (q, q-1)
    q = c.shape[0]
    m = np.eye(q) - np.outer(c, c)
    u, s, _ = np.linalg.svd(m)
    return u[:, : q - 1]


def sphere_optimize(f, q, rng, maximize=True, n_start=N_START, extra=None,
                    tol=1e-9, max_iter=400, n_local=N_LOCAL):
    """Optimize ``f`` over the unit sphere of R^q (coordinates).

    Returns ``(value, point)``. For maximization the value is attained, hence a
    certified lower bound of the supremum; symmetrically for minimization.
    """
    sign = 1.0 if maximize else -1.0
    if q == 1:
        pts = np.array([[1.0], [-1.0]])
        vals = sign * np.asarray(f(pts))
        i = int(np.argmax(vals))
        return sign * vals[i], pts[i]

    if q == 2:
        return _circle_optimize(f, sign, extra, n_local, tol)
    starts = [rng.standard_normal((n_start, q))]
    if extra is not None and len(extra):
        starts.append(np.asarray(extra, dtype=float).reshape(-1, q))
    pts = np.concatenate(starts)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    vals = sign * np.asarray(f(pts), dtype=float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)

    order = np.argsort(-vals)[:n_local]
    cur = pts[order].copy()
    cur_val = vals[order].copy()
    step = np.full(len(cur), 0.25)
    for _ in range(max_iter):
        active = step > tol
        if not active.any():
            break
        idx = np.flatnonzero(active)
        cands = []
        for i in idx:
            tb = _tangent_basis(cur[i])
            dirs = np.concatenate([tb.T, -tb.T])
            c = cur[i] + step[i] * dirs
            cands.append(c / np.linalg.norm(c, axis=1, keepdims=True))
        allc = np.concatenate(cands)
        allv = sign * np.asarray(f(allc), dtype=float)
        allv = np.where(np.isfinite(allv), allv, -np.inf)
        k = 2 * (q - 1)
        for j, i in enumerate(idx):
            block = allv[j * k:(j + 1) * k]
            b = int(np.argmax(block))
            if block[b] > cur_val[i]:
                cur_val[i] = block[b]
                cur[i] = allc[j * k + b]
                step[i] = min(step[i] * 1.5, 0.5)
            else:
                step[i] *= 0.5
    b = int(np.argmax(cur_val))
    return sign * cur_val[b], cur[b]


GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def golden_refine(g, lo, hi, iters=64):
    """Batched golden-section maximization of g on the intervals [lo, hi].

    ``g`` maps an array of parameters to values of the same shape. Returns the
    best parameters and their values.
    """
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    a = hi - GOLDEN * (hi - lo)
    b = lo + GOLDEN * (hi - lo)
    fa, fb = g(a), g(b)
    for _ in range(iters):
        left = fa >= fb
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        new_a = np.where(left, hi - GOLDEN * (hi - lo), b)
        new_b = np.where(left, a, lo + GOLDEN * (hi - lo))
        fresh = np.where(left, new_a, new_b)
        fv = g(fresh)
        fa, fb = np.where(left, fv, fb), np.where(left, fa, fv)
        a, b = new_a, new_b
    take_a = fa >= fb
    return np.where(take_a, a, b), np.where(take_a, fa, fb)


def zoom_refine(g, center, value, h, h_min, max_rounds=200, shrink=4.0):
    """Batched maximization of g near each center by parabolic zoom steps.

    Each round evaluates center +- h and the vertex of the fitted parabola
    (clipped to the bracket) and moves to the best point. The step shrinks
    by ``shrink`` when the center or the vertex wins and is kept when an endpoint wins.
    Values never decrease, so the result is an attained value.
    """
    center = np.array(center, dtype=float)
    value = np.array(value, dtype=float)
    h = np.full(center.shape, float(h))
    for _ in range(max_rounds):
        act = h > h_min
        if not act.any():
            break
        left, right = center - h, center + h
        fl, fr = g(left), g(right)
        curv = fl - 2 * value + fr
        with np.errstate(divide="ignore", invalid="ignore"):
            shift = np.where(curv < 0, 0.5 * h * (fl - fr) / curv, 0.0)
        vertex = center + np.clip(np.nan_to_num(shift), -h, h)
        fv = g(vertex)
        stack_t = np.stack([center, vertex, left, right])
        stack_f = np.stack([value, fv, fl, fr])
        stack_f = np.where(np.isfinite(stack_f), stack_f, -np.inf)
        j = np.argmax(stack_f, axis=0)
        cols = np.arange(center.size)
        center = np.where(act, stack_t[j, cols], center)
        value = np.where(act, stack_f[j, cols], value)
        h = np.where(act & (j <= 1), h / shrink, h)
    return center, value


def _circle_optimize(f, sign, extra, n_local, tol, n_grid=256):
    """Grid over the unit circle, then zoom refinement of the best brackets."""
    t = np.linspace(0.0, 2 * np.pi, n_grid, endpoint=False)
    if extra is not None and len(extra):
        ex = np.asarray(extra, dtype=float).reshape(-1, 2)
        t = np.concatenate([t, np.arctan2(ex[:, 1], ex[:, 0])])
    circ = lambda th: np.stack([np.cos(th), np.sin(th)], axis=-1)

    def g(th):
        v = sign * np.asarray(f(circ(th.ravel())), dtype=float)
        return np.where(np.isfinite(v), v, -np.inf).reshape(th.shape)

    vals = g(t)
    order = np.argsort(-vals)[:n_local]
    th, v = zoom_refine(g, t[order], vals[order], 2 * np.pi / n_grid, max(tol, 1e-13))
    b = int(np.argmax(v))
    return sign * v[b], circ(th[b])


def orthonormal_frames(x):
    q, _ = np.linalg.qr(x)
    return q


def _chart_polish(f, frame, value, sign, tol, max_fev):
    """Powell search in the chart X -> span(frame + C X) around ``frame``.

    Pattern search with isotropic directions stalls in narrow valleys (badly
    conditioned objectives); a coordinate-wise line search in the chart does
    not. Returns an improved (value, frame) or the input unchanged.
    """
    d, q = frame.shape
    comp = np.linalg.qr(frame, mode="complete")[0][:, q:]

    def at(x):
        return orthonormal_frames(frame + comp @ x.reshape(d - q, q))

    def loss(x):
        v = sign * float(np.asarray(f(at(x)[None]))[0])
        return -v if np.isfinite(v) else np.inf

    res = minimize(loss, np.zeros((d - q) * q), method="Powell",
                   options={"xtol": tol, "ftol": 1e-15, "maxfev": max_fev})
    if np.isfinite(res.fun) and -res.fun > value:
        return -float(res.fun), at(res.x)
    return value, frame


def grassmann_optimize(f, d, q, rng, maximize=True, n_start=64, n_local=N_LOCAL,
                       extra=None, tol=1e-7, max_iter=300, n_dirs=None, polish=0):
    """Optimize ``f`` over q-dimensional subspaces of R^d.

    ``f`` maps a stack of orthonormal frames ``(n, d, q)`` to ``n`` values.
    Returns ``(value, frame)``.
    """
    sign = 1.0 if maximize else -1.0
    if q == 0 or q == d:
        frame = np.eye(d)[:, :q][None]
        return sign * sign * float(np.asarray(f(frame))[0]), frame[0]
    starts = [rng.standard_normal((n_start, d, q))]
    if extra is not None and len(extra):
        starts.append(np.asarray(extra, dtype=float).reshape(-1, d, q))
    frames = orthonormal_frames(np.concatenate(starts))
    vals = sign * np.asarray(f(frames), dtype=float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    order = np.argsort(-vals)[:n_local]
    cur = frames[order].copy()
    cur_val = vals[order].copy()
    step = np.full(len(cur), 0.3)
    dim = q * (d - q)
    k = n_dirs or min(2 * dim, 12)
    for _ in range(max_iter):
        active = step > tol
        if not active.any():
            break
        idx = np.flatnonzero(active)
        z = rng.standard_normal((len(idx), k, d, q))
        base = cur[idx][:, None]
        # project onto the horizontal space at each frame
        z = z - base @ (np.swapaxes(base, -1, -2) @ z)
        nz = np.linalg.norm(z, axis=(-2, -1), keepdims=True)
        z = z / np.where(nz > 0, nz, 1.0)
        cand = orthonormal_frames(base + step[idx][:, None, None, None] * z)
        cv = sign * np.asarray(f(cand.reshape(-1, d, q)), dtype=float).reshape(len(idx), k)
        cv = np.where(np.isfinite(cv), cv, -np.inf)
        for j, i in enumerate(idx):
            b = int(np.argmax(cv[j]))
            if cv[j, b] > cur_val[i]:
                cur_val[i] = cv[j, b]
                cur[i] = cand[j, b]
                step[i] = min(step[i] * 1.5, 0.6)
            else:
                step[i] *= 0.5
    if polish:
        for i in np.argsort(-cur_val)[:2]:
            cur_val[i], cur[i] = _chart_polish(f, cur[i], cur_val[i], sign, tol, polish)
    b = int(np.argmax(cur_val))
    return sign * cur_val[b], cur[b]
