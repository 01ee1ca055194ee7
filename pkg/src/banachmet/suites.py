"""Randomized invariant suites shared by ``verify`` and the acceptance tests.

Each invariant draws random instances, checks one inequality or oracle
identity and counts passes. Draws are reproducible: every (invariant, norm)
pair gets its own generator derived from the seed and the invariant name, so
results do not depend on which other invariants run.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ambient, met, spectral, volume
from .ambient import Subspace
from .cocycles import CocycleSpec, stream
from .norms import AmbientSpace, NormSpec

SUITES = ("geometry", "volume", "spectral", "met")
NORM_LABELS = ("euclidean", "l1", "linf", "w15")


def make_norm(label: str, d: int, rng: np.random.Generator) -> NormSpec:
    """Norm of the given family; ``w15`` is l^{3/2} with weights in [1/2, 2]."""
    if label == "euclidean":
        return NormSpec.euclidean()
    if label == "l1":
        return NormSpec.lp(1)
    if label == "linf":
        return NormSpec.linf()
    if label == "w15":
        return NormSpec.weighted(1.5, np.exp(rng.uniform(-math.log(2), math.log(2), d)))
    raise ValueError(f"unknown norm label {label!r}")


@dataclass
class Outcome:
    ok: bool
    margin: float = 0.0  # amount of violation; <= 0 means satisfied
    applicable: bool = True
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Invariant:
    name: str
    suite: str
    statement: str
    check: Callable  # (rng, norm_label) -> Outcome
    norms: tuple = NORM_LABELS
    default_draws: int = 20
    deterministic: bool = False  # fixed cases; the draw count is ignored


@dataclass
class InvariantResult:
    name: str
    suite: str
    statement: str
    norm: str
    draws: int
    applicable: int
    passes: int
    worst_margin: float
    failures: list

    @property
    def passed(self) -> bool:
        return self.passes == self.applicable

    def to_dict(self) -> dict:
        return {"name": self.name, "suite": self.suite, "statement": self.statement,
                "norm": self.norm, "draws": self.draws, "applicable": self.applicable,
                "passes": self.passes, "worst_margin": self.worst_margin,
                "passed": self.passed, "failures": self.failures}


def _generator(seed: int, name: str, norm: str) -> np.random.Generator:
    key = zlib.crc32(f"{name}/{norm}".encode())
    return np.random.default_rng([int(seed), key])


def run_invariant(inv: Invariant, draws: Optional[int] = None, seed: int = 0,
                  norms=None) -> list:
    """Run one invariant for each norm; returns a list of InvariantResult."""
    out = []
    for label in (inv.norms if norms is None else norms):
        rng = _generator(seed, inv.name, label)
        n = 1 if inv.deterministic else (inv.default_draws if draws is None else int(draws))
        applicable = passes = 0
        worst = -math.inf
        failures = []
        for i in range(n):
            res = inv.check(rng, label)
            outcomes = res if isinstance(res, list) else [res]
            for o in outcomes:
                if not o.applicable:
                    continue
                applicable += 1
                worst = max(worst, float(o.margin))
                if o.ok:
                    passes += 1
                elif len(failures) < 5:
                    failures.append({"draw": i, "margin": float(o.margin), **o.detail})
        out.append(InvariantResult(inv.name, inv.suite, inv.statement, label, n, applicable,
                                   passes, worst if applicable else 0.0, failures))
    return out


def run_suite(suite: str, draws: Optional[int] = None, seed: int = 0) -> list:
    """All invariants of a suite (or ``all``); list of InvariantResult."""
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    results = []
    for inv in INVARIANTS:
        if suite in ("all", inv.suite):
            results += run_invariant(inv, draws, seed)
    return results


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def _perturbed(U: Subspace, rng, lo=-3.0, hi=0.0) -> Subspace:
    """Random perturbation of U at a log-uniform scale in [10^lo, 10^hi]."""
    s = 10 ** rng.uniform(lo, hi)
    return Subspace(U.basis + s * rng.standard_normal(U.basis.shape))


def _gap_pair(rng, label):
    # the subspaces and their annihilators both have dimension 1 or 2
    d, q = [(2, 1), (3, 1), (3, 2), (4, 2)][int(rng.integers(4))]
    sp = AmbientSpace(d, make_norm(label, d, rng))
    U = Subspace.random(d, q, rng)
    return sp, U, _perturbed(U, rng)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def _norm_axioms(rng, label):
    d = int(rng.integers(1, 7))
    norm = make_norm(label, d, rng)
    u, v = rng.standard_normal((2, 64, d)) * np.exp(rng.normal(0, 2, (2, 64, 1)))
    a = rng.normal(0, 3, 64)
    nu, nv, nuv = norm(u), norm(v), norm(u + v)
    tri = float(np.max(nuv - nu - nv - 1e-12 * (nu + nv)))
    hom = float(np.max(np.abs(norm(a[:, None] * u) - np.abs(a) * nu) - 1e-12 * np.abs(a) * nu))
    pos = bool(np.all(nu > 0)) and float(norm(np.zeros(d))) == 0.0
    margin = max(tri, hom)
    return Outcome(margin <= 0 and pos, margin)


def _gap_sandwich(rng, label):
    sp, U, V = _gap_pair(rng, label)
    g_uv, g_vu = ambient.gap(sp, U, V, rng), ambient.gap(sp, V, U, rng)
    h = ambient.hausdorff(sp, U, V, rng)
    slack = 2 * sp.eps_opt
    g = max(g_uv, g_vu)
    margin = max(g - h - slack, h - 2 * g - slack)
    return Outcome(margin <= 0, margin, detail={"gap_uv": g_uv, "gap_vu": g_vu, "d_h": h})


def _gap_duality(rng, label):
    sp, U, V = _gap_pair(rng, label)
    dual = sp.dual()
    g_uv = ambient.gap(sp, U, V, rng)
    g_dual = ambient.gap(dual, V.annihilator(), U.annihilator(), rng)
    slack = 2 * max(sp.eps_opt, dual.eps_opt)
    margin = abs(g_uv - g_dual) - slack
    return Outcome(margin <= 0, margin, detail={"gap": g_uv, "dual_gap": g_dual})


def _gap_estimate(rng, label):
    sp, U, V = _gap_pair(rng, label)
    q = U.dim
    g_uv = ambient.gap(sp, U, V, rng)
    if not g_uv < 1.0 / q:
        return Outcome(True, applicable=False)
    g_vu = ambient.gap(sp, V, U, rng)
    bound = q * g_uv / (1 - q * g_uv) + sp.eps_opt
    return Outcome(g_vu <= bound, g_vu - bound, detail={"gap_uv": g_uv, "gap_vu": g_vu})


def gap_inequalities(rng, label):
    """Gap sandwich, duality and estimate checked on one shared random pair."""
    sp, U, V = _gap_pair(rng, label)
    dual = sp.dual()
    g_uv, g_vu = ambient.gap(sp, U, V, rng), ambient.gap(sp, V, U, rng)
    h = ambient.hausdorff(sp, U, V, rng)
    slack = 2 * sp.eps_opt
    g = max(g_uv, g_vu)
    sandwich = max(g - h - slack, h - 2 * g - slack)
    g_dual = ambient.gap(dual, V.annihilator(), U.annihilator(), rng)
    duality = abs(g_uv - g_dual) - 2 * max(sp.eps_opt, dual.eps_opt)
    detail = {"d": sp.dim, "q": U.dim, "gap_uv": g_uv, "gap_vu": g_vu, "d_h": h}
    outs = [Outcome(sandwich <= 0, sandwich, detail={"item": "sandwich", **detail}),
            Outcome(duality <= 0, duality, detail={"item": "duality", "dual_gap": g_dual, **detail})]
    q = U.dim
    if g_uv < 1.0 / q:
        est = g_vu - (q * g_uv / (1 - q * g_uv) + sp.eps_opt)
        outs.append(Outcome(est <= 0, est, detail={"item": "estimate", **detail}))
    else:
        outs.append(Outcome(True, applicable=False))
    return outs


def _auerbach_bound(rng, label):
    d = int(rng.integers(2, 6))
    q = int(rng.integers(1, min(d - 1, 4) + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    split = ambient.auerbach_complement(sp, Subspace.random(d, q, rng), rng)
    bound = math.sqrt(q) + sp.eps_opt
    return Outcome(split.proj_norm <= bound, split.proj_norm - bound,
                   detail={"q": q, "proj_norm": split.proj_norm})


def _projection_at_least_one(rng, label):
    d = int(rng.integers(2, 5))
    q = int(rng.integers(1, min(d - 1, 2) + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    ang = ambient.min_angle(sp, Subspace.random(d, q, rng), Subspace.random(d, d - q, rng), rng)
    margin = 1 - sp.eps_opt - ang.proj_norm
    return Outcome(margin <= 0 and 0 <= ang.sin_theta <= 1 + sp.eps_opt, margin,
                   detail={"proj_norm": ang.proj_norm})


def _perturbed_splitting(rng, label):
    d = int(rng.integers(2, 5))
    q = int(rng.integers(1, min(d - 1, 2) + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    E = Subspace.random(d, q, rng)
    F = Subspace.random(d, d - q, rng)
    res = ambient.perturbed_splitting(sp, E, _perturbed(E, rng, -3.0, -0.5), F, rng)
    if not res.applicable:
        return Outcome(True, applicable=False)
    margin = res.measured - res.graph_norm_bound - 2 * sp.eps_opt
    return Outcome(bool(res.is_splitting) and margin <= 0, margin,
                   detail={"d_h": res.d_h, "sin_theta": res.sin_theta,
                           "measured": res.measured, "bound": res.graph_norm_bound})


# ---------------------------------------------------------------------------
# Volume
# ---------------------------------------------------------------------------

def _john_sandwich(rng, label, n_vectors=1000):
    q = int(rng.integers(1, 5))
    d = int(rng.integers(q, 7))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    E = Subspace.random(d, q, rng)
    jf = volume.john_form(sp, E)
    c = rng.standard_normal((n_vectors, q))
    ratio = jf.norm(c) / sp.norm(c @ E.basis.T)
    s = volume.john_distortion(q, sp.norm.is_euclidean) * (1 + 1e-3)
    margin = max(float(np.max(ratio)) / s, 1.0 / (s * float(np.min(ratio)))) - 1.0
    return Outcome(margin <= 0, margin, detail={"q": q, "d": d})


def _determinant_closed_form(rng, label):
    d = int(rng.integers(1, 6))
    q = int(rng.integers(1, d + 1))
    sp = AmbientSpace(d, NormSpec.euclidean())
    A = rng.standard_normal((d, d))
    E = Subspace.random(d, q, rng)
    got = volume.determinant(sp, A, E)
    w = A @ E.basis
    want = math.sqrt(max(np.linalg.det(w.T @ w), 0.0))
    rel = abs(got - want) / want
    return Outcome(rel <= 1e-8, rel - 1e-8, detail={"got": got, "want": want})


def _determinant_monte_carlo(rng, label):
    # A leaves the 4-dim subspace E invariant and acts on it by M, so
    # det(A|E) = |det M| in every norm; E is not a coordinate subspace, so
    # both unit-ball volumes go through the Monte Carlo estimator
    d, q = 5, 4
    sp = AmbientSpace(d, make_norm(label, d, rng))
    E = Subspace.random(d, q, rng)
    M = rng.standard_normal((q, q))
    A = E.basis @ M @ E.basis.T + rng.normal() * (np.eye(d) - E.orthogonal_projector())
    est = volume.determinant_estimate(sp, A, E)
    want = abs(float(np.linalg.det(M)))
    rel = abs(est.value - want) / want
    ok = rel <= 0.02 and est.method == "monte_carlo"
    return Outcome(ok, rel - 0.02, detail={"method": est.method, "rel_error": est.rel_error})


def _determinant_multiplicative(rng, label):
    d = int(rng.integers(2, 5))
    q = int(rng.integers(1, d + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    A, B = rng.standard_normal((2, d, d))
    E = Subspace.random(d, q, rng)
    lhs = volume.determinant_estimate(sp, A @ B, E)
    r1 = volume.determinant_estimate(sp, A, Subspace(B @ E.basis))
    r2 = volume.determinant_estimate(sp, B, E)
    rhs = r1.value * r2.value
    tol = 3 * (lhs.rel_error + r1.rel_error + r2.rel_error) + 1e-9
    rel = abs(lhs.value - rhs) / rhs
    return Outcome(rel <= tol, rel - tol, detail={"lhs": lhs.value, "rhs": rhs})


def _block_det_sandwich(rng, label):
    d = int(rng.integers(2, 5))
    k = int(rng.integers(1, d))
    m = int(rng.integers(1, d - k + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    A = rng.standard_normal((d, d))
    res = volume.block_det_bounds(sp, A, Subspace.random(d, k, rng), Subspace.random(d, m, rng), rng)
    margin = max(res.lower - res.ratio, res.ratio - res.upper) / max(res.ratio, 1e-300)
    return Outcome(res.holds, margin, detail=res.to_dict())


def _ball_section(rng, label):
    d = int(rng.integers(2, 5))
    q = int(rng.integers(1, min(d, 4) + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    E = Subspace.random(d, q, rng)
    x = rng.standard_normal(d)
    r = 10 ** rng.uniform(-1, 0.5)
    est = volume.ball_section_volume(sp, E, x, r)
    bound = (2 * r) ** q * volume.omega(q)
    sigma = est.rel_error * est.value
    margin = (est.value - bound - 3 * sigma) / bound
    return Outcome(margin <= 0, margin, detail={"q": q, "value": est.value, "bound": bound})


def _min_expansion(rng, label):
    d = int(rng.integers(2, 5))
    q = int(rng.integers(1, min(d, 3) + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    res = volume.min_expansion_bound(sp, rng.standard_normal((d, d)), Subspace.random(d, q, rng), rng)
    margin = (res.rhs - res.lhs) / max(res.rhs, 1e-300)
    return Outcome(res.holds, margin, detail=res.to_dict())


# ---------------------------------------------------------------------------
# Spectral
# ---------------------------------------------------------------------------

def _svd_instance(rng):
    d = int(rng.integers(1, 6))
    q = int(rng.integers(1, d + 1))
    return d, q, rng.standard_normal((d, d)) * np.exp(rng.normal(0, 1, d))[:, None]


def _volume_growth_oracle(rng, label):
    d, q, A = _svd_instance(rng)
    sp = AmbientSpace(d)
    got = spectral.max_volume_growth(sp, A, q, rng).value
    want = float(np.prod(np.linalg.svd(A, compute_uv=False)[:q]))
    margin = max(0.95 * want - got, got - want * (1 + 1e-9)) / want
    return Outcome(margin <= 0, margin, detail={"d": d, "q": q, "got": got, "want": want})


def _gelfand_oracle(rng, label):
    d, q, A = _svd_instance(rng)
    sp = AmbientSpace(d)
    got = spectral.gelfand_number(sp, A, q, rng).value
    want = float(np.linalg.svd(A, compute_uv=False)[q - 1])
    rel = abs(got - want) / want
    return Outcome(rel <= 0.05, rel - 0.05, detail={"d": d, "q": q, "got": got, "want": want})


def _gelfand_volume_ratio(rng, label):
    d = int(rng.integers(2, 4))
    q = int(rng.integers(2, d + 1))
    sp = AmbientSpace(d, make_norm(label, d, rng))
    res = spectral.gelfand_volume_check(sp, rng.standard_normal((d, d)), q, rng)
    if res.branch != "regular":
        return Outcome(True, applicable=False)
    margin = max(res.lower - res.ratio, res.ratio - res.upper) / res.ratio
    return Outcome(res.holds, margin, detail=res.to_dict())


# ---------------------------------------------------------------------------
# Cocycles (fixed oracle cases)
# ---------------------------------------------------------------------------

ORACLE_NORMS = ("euclidean", "l1", "linf")
TWO_BY_TWO = {"diagonal": ([[2.0, 0.0], [0.0, 0.5]], [0.0, 1.0]),
              "triangular": ([[2.0, 1.0], [0.0, 0.5]], [2.0, -3.0])}


def constant_trajectory(matrix, label="euclidean", N=2000, seed=1):
    d = len(matrix)
    norm = make_norm(label, d, np.random.default_rng(0))
    return stream(CocycleSpec("constant", d, {"matrix": matrix}, norm, seed), N)


def oracle_exponents(N=2000) -> dict:
    """(matrix name, norm) -> exponents at N for the 2x2 oracle cocycles."""
    out = {}
    for name, (m, _) in TWO_BY_TWO.items():
        for label in ORACLE_NORMS:
            tr = constant_trajectory(m, label, N)
            rep = met.spectrum_from_ledger(met.growth_rates(tr, 2))
            out[name, label] = rep
    return out


def _constant_exponents(rng, label, N=2000, tol=1e-2):
    outs = []
    for name, rep in oracle_exponents(N).items():
        want = [math.log(2), -math.log(2)]
        got = list(rep.lam) if len(rep.lam) == 2 else [rep.K[1], rep.K[2]]
        err = max(abs(a - b) for a, b in zip(got, want))
        outs.append(Outcome(err <= tol, err - tol, detail={"case": "/".join(name), "lambda": got}))
    return outs


def _norm_independence(rng, label, N=2000, tol=2e-2):
    reps = oracle_exponents(N)
    outs = []
    for name in TWO_BY_TWO:
        for a, b in [("euclidean", "l1"), ("euclidean", "linf"), ("l1", "linf")]:
            ka, kb = reps[name, a].K, reps[name, b].K
            err = max(abs(ka[q] - kb[q]) for q in (1, 2))
            outs.append(Outcome(err <= tol, err - tol, detail={"case": f"{name}/{a}-{b}"}))
    return outs


def _slow_eigendirection(rng, label, N=100, tol=1e-6):
    outs = []
    for name, (m, ev) in TWO_BY_TWO.items():
        for nl in ORACLE_NORMS:
            tr = constant_trajectory(m, nl, 2000)
            rep = met.spectrum_from_ledger(met.growth_rates(tr, 2))
            slow = met.slow_subspace(tr, 1, N, report=rep)
            dh = ambient.hausdorff(tr.space, slow.F_hat, Subspace(np.array([ev]).T))
            outs.append(Outcome(dh <= tol, dh - tol, detail={"case": f"{name}/{nl}", "d_h": dh}))
    return outs


def _filtration_codims(rng, label):
    outs = []
    for diag, want in (([4.0, 2.0, 1.0], [1, 2]), ([3.0, 3.0, 1.0], [2])):
        tr = constant_trajectory(np.diag(diag).tolist(), "euclidean", 2000)
        filt, _ = met.filtration(tr)
        got = filt.codims[1:]
        outs.append(Outcome(got == want, 0.0 if got == want else 1.0,
                            detail={"diag": diag, "codims": got}))
    return outs


def _complement_volume(rng, label, N=500, tol=2e-2):
    outs = []
    cases = [
        (np.diag([4.0, 2.0, 1.0]).tolist(), [[1, 0, 0], [0, 1, 0]], [[1, 0, 1], [0, 1, 0.5]]),
        ([[2.0, 1.0], [0.0, 0.5]], [[1, 0]], [[1, 1]]),
    ]
    for m, straight, tilted in cases:
        tr = constant_trajectory(m, "euclidean", 2000)
        filt, rep = met.filtration(tr, N=2000)
        F = filt.subspaces[-1]
        k = len(m) - F.dim
        target = float(sum(rep.K[q] for q in range(1, k + 1)))
        for E in (straight, tilted):
            got = met.complement_volume_growth(tr, Subspace(np.array(E, dtype=float).T), F, N).value
            err = abs(got - target)
            outs.append(Outcome(err <= tol, err - tol, detail={"target": target, "value": got}))
    return outs


def _cauchy_rate(rng, label, delta=0.069, slack=0.05):
    outs = []
    m, _ = TWO_BY_TWO["diagonal"]
    for nl in ORACLE_NORMS:
        tr = constant_trajectory(m, nl, 2000)
        slow = met.slow_subspace(tr, 1, 100, delta=delta)
        bound = slow.slope_bound + slack
        margin = slow.rate_slope - bound
        outs.append(Outcome(margin <= 0, margin if math.isfinite(margin) else -math.inf,
                            detail={"norm": nl, "slope": slow.rate_slope, "bound": bound}))
    return outs


def _rank_deficient(rng, label):
    outs = []
    for sched in ({"kill": [5]}, {"every": 7}):
        params = {"base": {"kind": "constant", "params": {"matrix": np.diag([4.0, 2.0, 1.0]).tolist()}},
                  **sched}
        tr = stream(CocycleSpec("rank_deficient", 3, params, seed=1), 500)
        rep = met.spectrum_from_ledger(met.growth_rates(tr, 3))
        filt, _ = met.filtration(tr)
        ok = (rep.l[3] == -math.inf and all(math.isfinite(rep.l[q]) for q in (1, 2))
              and filt.codims[-1] <= 2)
        outs.append(Outcome(ok, 0.0 if ok else 1.0, detail={"schedule": sched,
                                                            "l": {q: rep.l[q] for q in rep.l}}))
    return outs


def _sublevel(rng, label, level=1e-2, by=60):
    outs = []
    m, ev = TWO_BY_TWO["diagonal"]
    for nl in ORACLE_NORMS:
        tr = constant_trajectory(m, nl, 100)
        seq = met.sublevel_convergence(tr, Subspace(np.array([ev]).T), -math.log(2), 0.069, by)
        first = seq.first_below(level)
        ok = seq.monotone_after_burn_in and first is not None and first <= by
        outs.append(Outcome(ok, 0.0 if ok else 1.0,
                            detail={"norm": nl, "first_below": first,
                                    "monotone": seq.monotone_after_burn_in}))
    return outs


INVARIANTS = (
    Invariant("norm_axioms", "geometry",
              "|u + v| <= |u| + |v|, |a u| = |a| |u| and |u| > 0 for u != 0", _norm_axioms),
    Invariant("gap_hausdorff_sandwich", "geometry",
              "max(gap(U,V), gap(V,U)) <= d_H(U,V) <= 2 max(gap(U,V), gap(V,U)) up to 2 eps_opt",
              _gap_sandwich),
    Invariant("gap_duality", "geometry",
              "gap(U,V) = gap(annihilator V, annihilator U) in the dual norm up to 2 eps_opt",
              _gap_duality),
    Invariant("gap_estimate", "geometry",
              "gap(U,V) < 1/q implies gap(V,U) <= q gap(U,V) / (1 - q gap(U,V)) + eps_opt",
              _gap_estimate),
    Invariant("auerbach_complement_bound", "geometry",
              "the Auerbach complement F of a q-dim E has |pi_{E||F}| <= sqrt(q) + eps_opt",
              _auerbach_bound, default_draws=10),
    Invariant("projection_norm_at_least_one", "geometry",
              "|pi_{E||F}| >= 1 - eps_opt for every splitting", _projection_at_least_one),
    Invariant("perturbed_splitting_bound", "geometry",
              "d_H(E,E') < sin theta(E,F) implies E' + F splits and "
              "|pi_{F||E'} on E| <= 2 d_H / (sin theta - d_H) + 2 eps_opt",
              _perturbed_splitting),
    Invariant("john_sandwich", "volume",
              "|v| / sqrt(q) <= ||v||_E <= sqrt(q) |v| up to a factor 1 + 1e-3",
              _john_sandwich, norms=("l1", "linf", "w15"), default_draws=10),
    Invariant("determinant_closed_form", "volume",
              "euclidean det(A|E) equals sqrt(det Gram(A E)) to 1e-8 relative",
              _determinant_closed_form, norms=("euclidean",)),
    Invariant("determinant_monte_carlo", "volume",
              "det(A|E) = |det M| within 2% on the Monte Carlo path when A acts on an invariant E by M",
              _determinant_monte_carlo, norms=("w15",), default_draws=3),
    Invariant("determinant_multiplicative", "volume",
              "det(AB|E) = det(A|BE) det(B|E) within the volume error budgets",
              _determinant_multiplicative, norms=("euclidean", "l1", "linf"), default_draws=10),
    Invariant("block_determinant_sandwich", "volume",
              "det(A|E+F) / (det(A|E) det(A|F)) lies in "
              "[1 / (C |pi_{AE||AF}|^k), C |pi_{E||F}|^k] with the pinned constant C",
              _block_det_sandwich),
    Invariant("ball_section_bound", "volume",
              "m_E(E cap B(x, r)) <= (2r)^q omega_q within 3 Monte Carlo sigma",
              _ball_section, default_draws=5),
    Invariant("min_expansion_bound", "volume",
              "(|Av|/|v|) |A restricted to E|^(q-1) >= det(A|E) / C_q for the least expanded v",
              _min_expansion, default_draws=10),
    Invariant("volume_growth_svd_oracle", "spectral",
              "euclidean V_q(A) lies in [0.95, 1] x product of the top q singular values",
              _volume_growth_oracle, norms=("euclidean",)),
    Invariant("gelfand_svd_oracle", "spectral",
              "euclidean c_q(A) is within 5% of the q-th singular value",
              _gelfand_oracle, norms=("euclidean",)),
    Invariant("gelfand_volume_ratio", "spectral",
              "V_q / (c_q V_{q-1}) lies in [1/C'_q, C'_q]",
              _gelfand_volume_ratio, norms=("l1", "linf"), default_draws=3),
    Invariant("constant_cocycle_exponents", "met",
              "diag(2,1/2) and [[2,1],[0,1/2]] give lambda within 1e-2 of (log 2, -log 2) at N = 2000",
              _constant_exponents, norms=("all",), deterministic=True),
    Invariant("exponent_norm_independence", "met",
              "exponents agree pairwise within 2e-2 across euclidean, l1 and linf",
              _norm_independence, norms=("all",), deterministic=True),
    Invariant("slow_subspace_eigendirection", "met",
              "the slow subspace at N = 100 is within d_H 1e-6 of the analytic eigendirection",
              _slow_eigendirection, norms=("all",), deterministic=True),
    Invariant("filtration_codimensions", "met",
              "diag(4,2,1) and diag(3,3,1) give level codimensions (1,2) and (2)",
              _filtration_codims, norms=("euclidean",), deterministic=True),
    Invariant("complement_volume_growth", "met",
              "complements of the slow subspace grow at sum m_j lambda_j within 2e-2",
              _complement_volume, norms=("euclidean",), deterministic=True),
    Invariant("slow_subspace_cauchy_rate", "met",
              "slope of log d_H(F_n, F_{n+1}) <= (lambda_2 - lambda_1) + delta + 0.05, delta = 0.069",
              _cauchy_rate, norms=("all",), deterministic=True),
    Invariant("rank_deficient_growth", "met",
              "l_q = -inf above the effective rank and finite below it",
              _rank_deficient, norms=("euclidean",), deterministic=True),
    Invariant("sublevel_convergence", "met",
              "d_H of the sublevel sets decreases after burn-in and falls below 1e-2 by n = 60",
              _sublevel, norms=("all",), deterministic=True),
)

BY_NAME = {inv.name: inv for inv in INVARIANTS}
