"""Lyapunov exponents, slow subspaces and the Oseledets filtration of a cocycle.

Growth rates l_q are read off a ledger of log-determinant increments along
subspaces propagated by QR, exponents are the distinct increments
K_q = l_q - l_{q-1}, and the slow subspaces are limits of preimages of
complements of the fast images T^n E (the forward/backward construction).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from . import ambient, volume
from ._optim import sphere_optimize
from .ambient import Subspace
from .cocycles import Trajectory
from .norms import AmbientSpace

TAU_CLUSTER_FLOOR = 1e-2
ZERO_TOL = ambient.TAU_RANK


class LedgerError(RuntimeError):
    """Raised when a growth ledger or filtration level is inconsistent."""

    def __init__(self, message, *ledgers):
        super().__init__(message)
        self.ledgers = ledgers


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _finite(x: float) -> bool:
    return x is not None and math.isfinite(x)


# ---------------------------------------------------------------------------
# Exponent spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentReport:
    """Growth rates l_q, increments K_q and the distinct exponents.

    ``M`` holds the offsets M_1 = 0, M_{i+1} = m_1 + ... + m_i, so it has one
    more entry than ``lam``.
    """

    l: dict
    K: dict
    lam: list
    mult: list
    M: list
    noise: float = 0.0

    def level_of_rate(self, rate: float, tol: float = 0.0) -> int:
        """Index i (0-based) of the exponent closest to ``rate``."""
        finite = [(abs(rate - v), i) for i, v in enumerate(self.lam) if _finite(v)]
        if not finite:
            return len(self.lam) - 1
        return min(finite)[1]

    def to_dict(self) -> dict:
        enc = lambda v: v if _finite(v) else ("-inf" if v == -math.inf else str(v))
        return {"l": {str(q): enc(v) for q, v in self.l.items()},
                "K": {str(q): enc(v) for q, v in self.K.items()},
                "lambda": [enc(v) for v in self.lam], "mult": list(self.mult),
                "M": list(self.M), "noise": self.noise}


def _increments(l: dict) -> dict:
    K, prev = {}, 0.0
    for q in sorted(l):
        cur = l[q]
        K[q] = -math.inf if (cur == -math.inf or prev == -math.inf) else cur - prev
        prev = cur
    return K


def _cluster(K: dict, tau: float):
    lam, mult, groups = [], [], []
    for q in sorted(K):
        k = K[q]
        if groups and ((k == -math.inf and groups[-1][-1] == -math.inf) or
                       (_finite(k) and _finite(groups[-1][-1]) and groups[-1][-1] - k <= tau)):
            groups[-1].append(k)
        else:
            groups.append([k])
    for g in groups:
        lam.append(float(np.mean(g)) if _finite(g[0]) else -math.inf)
        mult.append(len(g))
    M = [0]
    for m in mult:
        M.append(M[-1] + m)
    return lam, mult, M


def exponent_spectrum(l: dict, noise: float = 0.0, tau: Optional[float] = None) -> ExponentReport:
    """Differentiate growth rates and cluster the increments into exponents.

    Parameters
    ----------
    l : dict
        q -> l_q for q = 1..Q (``-inf`` allowed).
    noise : float
        Estimation noise of the l_q; K may increase by at most twice this.
    tau : float, optional
        Clustering gap; defaults to ``max(5 * noise, 1e-2)``.
    """
    l = {int(q): float(v) for q, v in l.items()}
    if sorted(l) != list(range(1, len(l) + 1)):
        raise ValueError("growth rates must be given for q = 1..Q")
    K = _increments(l)
    qs = sorted(K)
    for a, b in zip(qs, qs[1:]):
        if _finite(K[b]) and (not _finite(K[a]) or K[b] > K[a] + 2 * noise + 1e-12):
            raise LedgerError("inconsistent growth ledger")
    tau = max(5 * noise, TAU_CLUSTER_FLOOR) if tau is None else tau
    lam, mult, M = _cluster(K, tau)
    return ExponentReport(l, K, lam, mult, M, float(noise))


def report_from_exponents(values) -> ExponentReport:
    """Report for exponents listed with multiplicity (exact values)."""
    vals = sorted((float(v) for v in values), reverse=True)
    l, acc = {}, 0.0
    for q, v in enumerate(vals, start=1):
        acc = -math.inf if (v == -math.inf or acc == -math.inf) else acc + v
        l[q] = acc
    K = _increments(l)
    lam, mult, M = _cluster(K, 1e-9)
    return ExponentReport(l, K, lam, mult, M, 0.0)


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------

def _qr_step(a, frames):
    """QR of A Q for a stack of frames; returns (Q', log|diag R|) with -inf for zeros."""
    y = a @ frames
    qn, r = np.linalg.qr(y)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    scale = np.linalg.norm(a) + 1e-300
    with np.errstate(divide="ignore"):
        logs = np.where(diag > ZERO_TOL * scale, np.log(np.maximum(diag, 1e-300)), -np.inf)
    return qn, logs


def _log_volume(space, basis) -> float:
    if space.norm.is_euclidean:
        return 0.0
    return math.log(volume.unit_ball_volume(space, Subspace(basis)).value)


def propagate(ops, frame):
    """Push a frame through the operators with QR re-conditioning.

    Returns the final orthonormal frame and the per-step log |diag R| (n x q).
    """
    q = np.asarray(frame, dtype=float)
    q = np.linalg.qr(q)[0]
    logs = np.zeros((len(ops), q.shape[1]))
    for k, a in enumerate(ops):
        q, logs[k] = _qr_step(a, q)
    return q, logs


def log_det_along(space: AmbientSpace, ops, frame) -> float:
    """log det(T^n | span(frame)) accumulated stepwise (log 0 = -inf)."""
    q0 = np.linalg.qr(np.asarray(frame, dtype=float))[0]
    qn, logs = propagate(ops, q0)
    total = float(np.sum(logs)) if len(ops) else 0.0
    if not math.isfinite(total):
        return -math.inf
    return total + _log_volume(space, q0) - _log_volume(space, qn)


@dataclass(frozen=True, eq=False)
class GrowthLedger:
    """Per-q log-determinant ledger along propagated subspaces.

    Attributes
    ----------
    l : dict
        q -> growth rate estimate (max over starts).
    noise : dict
        q -> estimated error of l_q.
    increments : dict
        q -> per-step log |det R| of the winning start (euclidean part).
    volume_term : dict
        q -> log vol(E_0) - log vol(E_n) for the winning start.
    checkpoints : list
        Steps at which running averages are recorded.
    running : dict
        q -> running averages (1/n) sum of increments at the checkpoints.
    initial_frames : dict
        q -> d x q initial frame of the winning start.
    """

    n: int
    q_max: int
    l: dict
    noise: dict
    increments: dict
    volume_term: dict
    checkpoints: list
    running: dict
    initial_frames: dict

    @property
    def noise_level(self) -> float:
        vals = [v for v in self.noise.values() if math.isfinite(v)]
        return max(vals) if vals else 0.0

    def total(self, q: int) -> float:
        """Reconstructed log det(T^n | E_0) for the winning start."""
        s = float(np.sum(self.increments[q]))
        return s + self.volume_term[q] if math.isfinite(s) else -math.inf

    def csv_rows(self):
        yield ["n", "q", "running_mean"]
        for q in sorted(self.running):
            for n, v in zip(self.checkpoints, self.running[q]):
                yield [n, q, v]

    def to_dict(self) -> dict:
        enc = lambda v: v if math.isfinite(v) else "-inf"
        return {"n": self.n, "q_max": self.q_max,
                "l": {str(q): enc(v) for q, v in self.l.items()},
                "noise": {str(q): v for q, v in self.noise.items()},
                "volume_term": {str(q): enc(v) for q, v in self.volume_term.items()}}


def growth_rates(traj: Trajectory, q_max: int, N: Optional[int] = None, n_starts: int = 8,
                 domain: Optional[Subspace] = None, rng=None, n_checkpoints: int = 50) -> GrowthLedger:
    """Estimate l_q = lim (1/n) log V_q(T^n) for q = 1..q_max.

    Random initial q-frames (nested, inside ``domain`` when given) are
    propagated with QR re-conditioning at every step; the stepwise log-det
    increments telescope to log det(T^N | E_0). The estimate is the best
    (1/N) log det over the starts.
    """
    space = traj.space
    d = space.dim
    N = len(traj) if N is None else int(N)
    if N < 1 or N > len(traj):
        raise ValueError("N must lie in [1, length budget]")
    k = d if domain is None else domain.dim
    if not 1 <= q_max <= min(k, volume.Q_MAX):
        raise ValueError("q_max must lie in [1, min(dim, volume budget)]")
    rng = _rng(rng if rng is not None else traj.seed)
    x = rng.standard_normal((n_starts, k, q_max))
    if domain is not None:
        x = domain.basis @ x
    q0 = np.linalg.qr(x)[0]
    ops = traj.take(N)
    stride = max(1, N // n_checkpoints)
    checkpoints = list(range(stride, N + 1, stride))
    if checkpoints[-1] != N:
        checkpoints.append(N)
    frames = q0
    cum = np.zeros((n_starts, q_max))
    logs = np.zeros((N, n_starts, q_max))
    run = []
    for step, a in enumerate(ops, start=1):
        frames, logs[step - 1] = _qr_step(a, frames)
        if step in checkpoints:
            run.append(logs[:step].sum(axis=0))
    run = np.array(run)  # (checkpoints, starts, q_max)
    nested = np.cumsum(logs, axis=2)  # per q: sum of first q diagonal logs
    l, noise, incs, vterm, running, init = {}, {}, {}, {}, {}, {}
    cps = np.array(checkpoints, dtype=float)
    for q in range(1, q_max + 1):
        tot = nested[:, :, q - 1].sum(axis=0)
        vol = np.zeros(n_starts)
        if not space.norm.is_euclidean:
            for s in range(n_starts):
                if math.isfinite(tot[s]):
                    vol[s] = _log_volume(space, q0[s, :, :q]) - _log_volume(space, frames[s, :, :q])
        val = np.where(np.isfinite(tot), (tot + vol) / N, -np.inf)
        best = int(np.argmax(val))
        l[q] = float(val[best])
        incs[q] = nested[:, best, q - 1]
        vterm[q] = float(vol[best])
        init[q] = q0[best, :, :q]
        r = np.cumsum(run[:, best, :q], axis=1)[:, -1] / cps
        running[q] = r.tolist()
        if math.isfinite(l[q]):
            tail = r[len(r) // 2:]
            tail = tail[np.isfinite(tail)]
            spread = float(np.std(tail)) if len(tail) > 1 else 0.0
            noise[q] = spread + (1.0 + abs(vol[best])) / N
        else:
            noise[q] = 0.0
    return GrowthLedger(N, q_max, l, noise, incs, vterm, checkpoints, running, init)


def spectrum_from_ledger(ledger: GrowthLedger) -> ExponentReport:
    return exponent_spectrum(ledger.l, ledger.noise_level)


# ---------------------------------------------------------------------------
# Fast and slow subspaces
# ---------------------------------------------------------------------------

def _power_frame(ops, x, domain=None, sweeps=3):
    """Forward/backward QR sweeps: top right-singular frame of T^n (on domain)."""
    for _ in range(sweeps):
        q = np.linalg.qr(x)[0]
        for a in ops:
            q = np.linalg.qr(a @ q)[0]
        for a in ops[::-1]:
            q = np.linalg.qr(a.T @ q)[0]
        if domain is not None:
            q = domain.basis @ (domain.basis.T @ q)
        x = q
    return np.linalg.qr(x)[0]


@dataclass(frozen=True, eq=False)
class FastSubspace:
    subspace: Subspace
    log_det: float
    best_known: float
    certified: bool


def fast_subspace(traj: Trajectory, m: int, n: int, domain: Optional[Subspace] = None,
                  rng=None, n_random: int = 8, polish: Optional[bool] = None) -> FastSubspace:
    """Near-maximizer E of det(T^n | E) over m-dimensional subspaces.

    Starts from forward/backward power sweeps and random frames; for non
    euclidean norms the best candidate is polished by Grassmannian ascent.
    The certificate is det(T^n|E) >= 1/2 of the best value found.
    """
    space = traj.space
    d = space.dim
    k = d if domain is None else domain.dim
    if not 1 <= m <= min(k, volume.Q_MAX):
        raise ValueError("m must lie in [1, min(dim, volume budget)]")
    rng = _rng(rng if rng is not None else traj.seed)
    ops = traj.take(n)

    def embed(c):
        return c if domain is None else domain.basis @ c

    cands = [_power_frame(ops, embed(rng.standard_normal((k, m))), domain)]
    cands += [np.linalg.qr(embed(rng.standard_normal((k, m))))[0] for _ in range(n_random)]
    vals = [log_det_along(space, ops, c) for c in cands]
    best = int(np.argmax(vals))
    frame, val = cands[best], vals[best]
    if polish is None:
        polish = not space.norm.is_euclidean
    if polish and math.isfinite(val) and m < k:
        from ._optim import grassmann_optimize

        def f(frames):
            return np.array([log_det_along(space, ops, embed(fr)) for fr in frames])

        start = frame if domain is None else domain.basis.T @ frame
        pv, pf = grassmann_optimize(f, k, m, rng, n_start=2, n_local=1, extra=start[None],
                                    tol=1e-4, max_iter=40, n_dirs=4)
        if pv > val:
            frame, val = embed(pf), float(pv)
    if not math.isfinite(val):
        raise ValueError("cocycle rank below m")
    best_known = max(max(vals), val)
    return FastSubspace(Subspace(frame), float(val), float(best_known),
                        bool(val >= best_known - math.log(2.0)))


@dataclass(frozen=True, eq=False)
class SlowSubspace:
    F_hat: Subspace
    cauchy_log: list  # (n, d_H(F_n, F_{n+1}))
    rate_slope: float
    slope_bound: float
    lam_upper: float
    lam_lower: float
    stop_reason: str
    accuracy: float = math.nan

    @property
    def certified(self) -> bool:
        return not math.isfinite(self.rate_slope) or self.rate_slope <= self.slope_bound

    def to_dict(self) -> dict:
        enc = lambda v: v if math.isfinite(v) else ("-inf" if v < 0 else "inf")
        return {"F_hat": self.F_hat.to_dict(),
                "cauchy_log": [[n, v] for n, v in self.cauchy_log],
                "rate_slope": enc(self.rate_slope), "slope_bound": enc(self.slope_bound),
                "lam_upper": self.lam_upper, "lam_lower": self.lam_lower,
                "stop_reason": self.stop_reason, "accuracy": self.accuracy,
                "certified": self.certified}


def _slow_candidate(space, ops, x0, m, domain, sweeps):
    e1 = _power_frame(ops, x0, domain, sweeps)
    e2 = propagate(ops, e1)[0]
    split = ambient.auerbach_complement(space, Subspace(e2), np.random.default_rng(0), refine=False)
    phi = split.F.annihilator().basis
    for a in ops[::-1]:
        phi = np.linalg.qr(a.T @ phi)[0]
    if domain is None:
        return Subspace.kernel_of(phi)
    return Subspace(domain.basis @ sla.null_space(phi.T @ domain.basis))


def _fit_slope(log):
    pts = [(n, math.log(v)) for n, v in log if v > 1e-14]
    if len(pts) < 3:
        return -math.inf
    n, y = np.array(pts).T
    return float(np.polyfit(n, y, 1)[0])


def slow_subspace(traj: Trajectory, m: int, N: int, delta: Optional[float] = None,
                  report: Optional[ExponentReport] = None, domain: Optional[Subspace] = None,
                  rng=None, n_min: int = 1, sweeps: int = 1) -> SlowSubspace:
    """Codimension-m slow subspace as the limit of F_n = (T^n)^{-1} F_n^2.

    For each n: E_n^1 is a fast m-dim subspace for T^n (one forward/backward
    sweep from a fixed random frame), F_n^2 a bounded complement of its image
    and F_n its preimage. Stops after three consecutive Hausdorff increments
    below the subspace tolerance or when N is reached.
    """
    space = traj.space
    k = space.dim if domain is None else domain.dim
    if not 1 <= m < k:
        raise ValueError("m must lie in [1, dim of the domain)")
    if report is None:
        q_max = min(m + 1, k, volume.Q_MAX)
        report = spectrum_from_ledger(growth_rates(traj, q_max, min(N, len(traj)), domain=domain))
    if m + 1 not in report.K:
        raise ValueError("growth rates do not reach level m + 1")
    lam_upper, lam_lower = report.K[m], report.K[m + 1]
    tau = max(5 * report.noise, TAU_CLUSTER_FLOOR)
    if not (_finite(lam_upper) and (lam_lower == -math.inf or lam_upper - lam_lower > tau)):
        raise ValueError(f"no gap at level {m}")
    gap = lam_upper - lam_lower if _finite(lam_lower) else math.inf
    if delta is None:
        delta = gap / 10 if math.isfinite(gap) else 0.1
    rng = _rng(rng if rng is not None else traj.seed)
    x0 = rng.standard_normal((k, m))
    if domain is not None:
        x0 = domain.basis @ x0
    ops = traj.take(min(N + 1, len(traj)))
    log, prev, quiet = [], None, 0
    stop = "budget"
    tol = space.tau_sub
    n_last = min(N, len(ops) - 1)
    n = n_min
    for n in range(n_min, n_last + 1):
        cur = _slow_candidate(space, ops[:n], x0, m, domain, sweeps)
        if prev is not None:
            dh = ambient.hausdorff(space, prev, cur)
            log.append((n - 1, float(dh)))
            quiet = quiet + 1 if dh < tol else 0
            if quiet >= 3:
                stop = "converged"
                prev = cur
                break
        prev = cur
    accuracy = log[-1][1] if log else math.inf
    if stop == "converged" and 2 * n <= n_last:
        # the increments decay geometrically, so doubling n roughly squares the error
        final = _slow_candidate(space, ops[:2 * n], x0, m, domain, sweeps)
        accuracy = max(float(ambient.hausdorff(space, prev, final)) ** 2, 1e-15)
        prev = final
    elif stop == "converged":
        accuracy = max(max(v for _, v in log[-3:]), 1e-15)
    slope = _fit_slope(log)
    bound = (lam_lower - lam_upper + delta) if math.isfinite(gap) else math.inf
    return SlowSubspace(prev, log, slope, bound, float(lam_upper), float(lam_lower), stop,
                        float(accuracy))


# ---------------------------------------------------------------------------
# Filtration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Filtration:
    subspaces: list  # F_1 = whole space, F_2, ... (nested)
    codims: list
    cauchy_log: list  # per level i >= 2: list of (n, d_H)
    level_checks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"subspaces": [s.to_dict() for s in self.subspaces],
                "codims": list(self.codims),
                "cauchy_log": [[[n, v] for n, v in lg] for lg in self.cauchy_log],
                "level_checks": self.level_checks}


def filtration(traj: Trajectory, N: Optional[int] = None, q_max: Optional[int] = None,
               n_slow: int = 200, rng=None, tol: Optional[float] = None):
    """Oseledets filtration F_1 > F_2 > ... with codimensions M_i.

    Returns ``(Filtration, ExponentReport)``. Each level F_{i+1} is the slow
    subspace of codimension m_i inside F_i; the growth rates restricted to
    F_{i+1} must match l_{q + M_{i+1}} - l_{M_{i+1}}.
    """
    space = traj.space
    d = space.dim
    N = len(traj) if N is None else int(N)
    q_max = min(d, volume.Q_MAX) if q_max is None else q_max
    rng = _rng(rng if rng is not None else traj.seed)
    ledger = growth_rates(traj, q_max, N, rng=rng)
    report = spectrum_from_ledger(ledger)
    levels = [Subspace.full(d)]
    codims, logs, checks = [0], [], []
    for i in range(len(report.lam) - 1):
        nxt = report.lam[i + 1]
        if not _finite(nxt):
            break
        cur = levels[-1]
        m = report.mult[i]
        k_next = report.M[i + 1]
        if k_next >= q_max:
            break
        # restricted spectrum of the current level, seen from the full ledger
        base = _l_at(report, report.M[i])
        sub_l = {q: report.l[q + report.M[i]] - base for q in range(1, q_max - report.M[i] + 1)}
        sub = exponent_spectrum(sub_l, report.noise)
        slow = slow_subspace(traj, m, min(n_slow, N), report=sub,
                             domain=None if i == 0 else cur, rng=rng)
        F = slow.F_hat
        if F.dim != d - k_next:
            raise LedgerError(f"level {i + 2} has codimension {d - F.dim}, expected {k_next}")
        q_chk = min(F.dim, q_max - k_next)
        if q_chk >= 1:
            slowest = [v for v in report.lam if _finite(v)][-1]
            horizon = _stable_horizon(N, report.lam[0] - slowest, slow.accuracy)
            got_l, noise = restricted_rates(traj, F, q_chk, horizon, rng)
            allowed = tol if tol is not None else max(3 * (noise + ledger.noise_level), 2e-2)
            for q in range(1, q_chk + 1):
                expect = report.l[q + k_next] - _l_at(report, k_next)
                got = got_l[q]
                ok = (got == expect == -math.inf) or abs(got - expect) <= allowed
                checks.append({"level": i + 2, "q": q, "restricted": got, "expected": expect,
                               "tol": allowed, "horizon": horizon, "ok": bool(ok)})
                if not ok:
                    raise LedgerError(f"level {i + 2} mismatch at q={q}", report, got_l)
        gap_nest = ambient.gap(space, F, cur)
        if gap_nest > max(space.tau_sub, 1e-6):
            raise LedgerError(f"level {i + 2} is not nested in level {i + 1}")
        levels.append(F)
        codims.append(k_next)
        logs.append(slow.cauchy_log)
    return Filtration(levels, codims, logs, checks), report


def _l_at(report, q):
    return 0.0 if q == 0 else report.l[q]


def _stable_horizon(N, spread, accuracy):
    """Steps over which a frame inside an approximate slow subspace stays inside.

    Errors of size eps in the slow subspace grow like exp(n * spread), where
    spread is the distance from the top exponent to the slowest exponent of
    the level.
    """
    eps = accuracy if math.isfinite(accuracy) else 1e-3
    eps = max(eps, 1e-15)
    if spread <= 0 or not math.isfinite(spread):
        return N
    return int(max(8, min(N, math.log(1e-3 / eps) / spread)))


def restricted_rates(traj: Trajectory, F: Subspace, q_max: int, horizon: int, rng=None,
                     n_starts: int = 4):
    """Growth rates of the cocycle restricted to F over a finite horizon.

    Frames are drawn inside F; the rate is the slope of the log-det ledger
    over the second half of the horizon, which removes the start-up transient.
    The noise estimate is the disagreement between the rates of the third and
    fourth quarters plus the volume correction spread over the window.
    Returns ``(rates, noise)``.
    """
    space = traj.space
    rng = _rng(rng if rng is not None else traj.seed)
    horizon = max(int(horizon), 4)
    ops = traj.take(horizon)
    half = horizon // 2
    width = horizon - half
    split = width // 2
    best = {q: -math.inf for q in range(1, q_max + 1)}
    noise = 0.0
    for _ in range(n_starts):
        x = F.basis @ rng.standard_normal((F.dim, q_max))
        mid, logs_a = propagate(ops[:half], x)
        end, logs_b = propagate(ops[half:], mid)
        for q in range(1, q_max + 1):
            if np.isneginf(logs_a[:, :q]).any():
                # a zero increment sends the channel to -inf permanently
                continue
            inc = np.sum(logs_b[:, :q], axis=1)
            tot = float(np.sum(inc))
            if not math.isfinite(tot):
                continue
            vol = _log_volume(space, mid[:, :q]) - _log_volume(space, end[:, :q])
            best[q] = max(best[q], (tot + vol) / width)
            if split >= 1:
                spread = abs(float(np.mean(inc[:split])) - float(np.mean(inc[split:])))
                noise = max(noise, spread + abs(vol) / width)
    return best, noise


# ---------------------------------------------------------------------------
# Verification clauses
# ---------------------------------------------------------------------------

def _scaled_products(ops, schedule):
    """(P_n, log s_n) with T^n = s_n P_n at the scheduled n."""
    d = ops.shape[1]
    p, logs = np.eye(d), 0.0
    out = {}
    want = set(schedule)
    if 0 in want:
        out[0] = (p.copy(), 0.0)
    for n, a in enumerate(ops, start=1):
        p = a @ p
        s = np.abs(p).max()
        if s == 0:
            out.update({k: (np.zeros((d, d)), 0.0) for k in want if k >= n})
            break
        p /= s
        logs += math.log(s)
        if n in want:
            out[n] = (p.copy(), logs)
    return out


def _default_schedule(N, count=20):
    return sorted(set(np.linspace(1, N, min(count, N)).astype(int).tolist()))


@dataclass(frozen=True)
class ConeGrowth:
    min_rate_sequence: list  # (n, min rate)
    target: Optional[float]

    @property
    def final(self) -> float:
        return self.min_rate_sequence[-1][1]

    def to_dict(self) -> dict:
        return {"min_rate_sequence": [[n, r] for n, r in self.min_rate_sequence],
                "target": self.target}


def cone_growth(traj: Trajectory, F_hat: Subspace, eta: float, N: int, schedule=None,
                target: Optional[float] = None, n_samples: int = 2048, rng=None) -> ConeGrowth:
    """Minimal growth rate (1/n) log(|T^n v|/|v|) over the cone d(v, F) >= eta |v|."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    space = traj.space
    norm, d = space.norm, space.dim
    rng = _rng(rng if rng is not None else traj.seed)
    dist = ambient._distance(norm, F_hat.basis)
    v = rng.standard_normal((n_samples, d))
    v /= norm(v)[:, None]
    v = v[dist(v) >= eta]
    if len(v) == 0:
        raise ValueError("empty cone sample")
    schedule = _default_schedule(N) if schedule is None else sorted(schedule)
    prods = _scaled_products(traj.take(max(schedule)), schedule)
    seq = []
    for n in schedule:
        if n == 0:
            continue
        p, logs = prods[n]
        f = lambda c: np.where(dist(c) >= eta * norm(c),
                               np.log(np.maximum(norm(c @ p.T), 1e-300) / norm(c)), np.inf)
        vals = f(v)
        order = np.argsort(vals)[:8]
        best, _ = sphere_optimize(f, d, rng, maximize=False, n_start=4, extra=v[order], tol=1e-9)
        best = min(best, float(vals[order[0]]))
        seq.append((int(n), float((best + logs) / n)))
    return ConeGrowth(seq, target)


@dataclass(frozen=True)
class VolumeGrowth:
    value: float
    target: Optional[float]

    def to_dict(self) -> dict:
        return {"value": self.value, "target": self.target}


def complement_volume_growth(traj: Trajectory, E: Subspace, F_next: Subspace, N: int,
                             target: Optional[float] = None) -> VolumeGrowth:
    """(1/N) log det(T^N | E) for a complement E of the slow subspace F_next."""
    d = traj.space.dim
    if E.dim + F_next.dim != d or ambient.numerical_rank(np.hstack([E.basis, F_next.basis])) < d:
        raise ValueError("E is not a complement of the slow subspace")
    return VolumeGrowth(log_det_along(traj.space, traj.take(N), E.basis) / N, target)


@dataclass(frozen=True)
class ProjectionDecay:
    slope: float
    norms: list  # (n, |pi|)
    diagnostic: Optional[str]

    def to_dict(self) -> dict:
        return {"slope": self.slope, "norms": [[n, v] for n, v in self.norms],
                "diagnostic": self.diagnostic}


def projection_decay(traj: Trajectory, E: Subspace, F_hat: Subspace, N: int, schedule=None,
                     blowup: float = 1e8, lookahead: int = 100) -> ProjectionDecay:
    """Log-slope of |pi_{T^n E || T^n F}| along the propagated splitting.

    T^n E is pushed forward with QR. The slow subspace repels both under T and
    (through its annihilator) under T^{-T}, so T^n F is instead read off an
    adjoint power sweep over the operators T_n, ..., T_{N+lookahead-1}: the
    annihilator of the slow subspace at time n is the dominant direction of
    the transposed future product. At n = 0 the given ``F_hat`` is used.
    """
    space = traj.space
    ang = ambient.min_angle(space, E, F_hat)
    if not math.isfinite(ang.proj_norm):
        raise ValueError("(E, F) is not a topological splitting")
    schedule = set(_default_schedule(N) if schedule is None else schedule)
    total = N + lookahead
    if traj.spec is None:
        total = min(total, len(traj))
    ops = traj.with_budget(max(total, len(traj))).take(total)
    k = space.dim - F_hat.dim
    psi = np.linalg.qr(_rng(traj.seed).standard_normal((space.dim, k)))[0]
    slow_at = {}
    for n in range(total - 1, 0, -1):
        psi = np.linalg.qr(ops[n].T @ psi)[0]
        if n in schedule and n <= N:
            slow_at[n] = Subspace.kernel_of(psi)
    e = E.basis
    norms = [(0, float(ang.proj_norm))]
    diag = None
    for n in range(1, N + 1):
        e = np.linalg.qr(ops[n - 1] @ e)[0]
        if n in slow_at:
            pn = ambient.min_angle(space, Subspace(e), slow_at[n]).proj_norm
            if not math.isfinite(pn) or pn > blowup:
                diag = f"propagated splitting degenerated at n={n}"
                break
            norms.append((n, float(pn)))
    if len(norms) >= 2:
        n_arr, y = np.array([(n, math.log(v)) for n, v in norms]).T
        slope = float(np.polyfit(n_arr, y, 1)[0])
    else:
        slope = math.nan
    return ProjectionDecay(slope, norms, diag)


# ---------------------------------------------------------------------------
# Sublevel sets
# ---------------------------------------------------------------------------

def _sphere_dirs(d, n, rng):
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if d == 3:
        return volume._fibonacci_sphere(n)
    u = rng.standard_normal((n, d))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def _roundoff_floor(norm, p, dirs):
    """Absolute error of evaluating |P v| for unit-scale v in floating point."""
    return 16 * np.finfo(float).eps * float(np.max(norm(dirs @ p.T) / norm(dirs)))


def _sublevel_boundary(norm, p, level, dirs, slack=0.0):
    """Boundary points of {v : |v| <= 1, |P v| <= level + slack |v|} along dirs.

    ``slack`` widens the level by the evaluation roundoff of P v, so the set
    does not lose directions whose membership is below machine resolution.
    """
    r1 = 1.0 / norm(dirs)
    pv = norm(dirs @ p.T)
    nd = norm(dirs)
    with np.errstate(divide="ignore"):
        r2 = np.where(pv > slack * nd, level / np.maximum(pv - slack * nd, 1e-300), np.inf)
    return np.minimum(r1, r2)[:, None] * dirs


def _sublevel_member(norm, p, level, slack):
    def inside(v):
        nv = norm(v)
        return (nv <= 1 + 1e-12) & (norm(v @ p.T) <= level * (1 + 1e-12) + slack * nv)
    return inside


def _dist_to_segment_ball(norm, x, basis):
    """d(x, F cap B_1) for a line F (batched golden-section search)."""
    f = basis[:, 0]
    t_max = 1.0 / float(norm(f))
    lo = np.full(len(x), -t_max)
    hi = np.full(len(x), t_max)
    g = (math.sqrt(5) - 1) / 2
    for _ in range(120):
        a = hi - g * (hi - lo)
        b = lo + g * (hi - lo)
        fa = norm(x - a[:, None] * f)
        fb = norm(x - b[:, None] * f)
        left = fa <= fb
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
    t = 0.5 * (lo + hi)
    return norm(x - t[:, None] * f)


def _dist_to_section_ball(norm, x, F):
    if F.dim == 1:
        return _dist_to_segment_ball(norm, x, F.basis)
    from scipy.optimize import minimize

    b = F.basis
    out = []
    for xi in x:
        c0 = b.T @ xi
        c0 = c0 / max(1.0, float(norm(b @ c0)))
        cons = {"type": "ineq", "fun": lambda c: 1.0 - float(norm(b @ c))}
        res = minimize(lambda c: float(norm(xi - b @ c)), c0, constraints=[cons], method="SLSQP",
                       options={"ftol": 1e-12, "maxiter": 300})
        out.append(min(res.fun, float(norm(xi - b @ c0))))
    return np.array(out)


def _hausdorff_clouds(norm, cloud_a, inside_b, cloud_b):
    """sup over a in cloud_a of d(a, B), B given by membership and a boundary cloud."""
    out = 0.0
    chunk = 512
    for i in range(0, len(cloud_a), chunk):
        a = cloud_a[i:i + chunk]
        dmin = norm(a[:, None, :] - cloud_b[None, :, :]).min(axis=1)
        dmin = np.where(inside_b(a), 0.0, dmin)
        out = max(out, float(dmin.max()))
    return out


def sublevel_hausdorff(space: AmbientSpace, A, B, c: float, n_dirs: int = 4096, rng=None) -> float:
    """d_H between {v in B_1 : |A v| <= c} and {v in B_1 : |B v| <= c} (boundary clouds)."""
    norm = space.norm
    rng = _rng(rng)
    dirs = _sphere_dirs(space.dim, n_dirs, rng)
    a, b = ambient.as_matrix(A), ambient.as_matrix(B)
    sa, sb = _roundoff_floor(norm, a, dirs), _roundoff_floor(norm, b, dirs)
    ca = _sublevel_boundary(norm, a, c, dirs, sa)
    cb = _sublevel_boundary(norm, b, c, dirs, sb)
    in_a = _sublevel_member(norm, a, c, sa)
    in_b = _sublevel_member(norm, b, c, sb)
    return max(_hausdorff_clouds(norm, ca, in_b, cb), _hausdorff_clouds(norm, cb, in_a, ca))


@dataclass(frozen=True)
class SublevelSequence:
    values: list  # (n, d_H)
    burn_in: int
    resolution: float = 1e-12  # distances of unit-scale points below this are roundoff

    @property
    def monotone_after_burn_in(self) -> bool:
        tail = [v for n, v in self.values if n >= self.burn_in]
        return all(b <= a * (1 + 1e-9) + self.resolution for a, b in zip(tail, tail[1:]))

    def first_below(self, level: float) -> Optional[int]:
        for n, v in self.values:
            if v < level:
                return n
        return None

    def to_dict(self) -> dict:
        return {"values": [[n, v] for n, v in self.values], "burn_in": self.burn_in,
                "resolution": self.resolution,
                "monotone_after_burn_in": self.monotone_after_burn_in}


def sublevel_convergence(traj: Trajectory, F2: Subspace, lambda2: float, delta: float, N: int,
                         schedule=None, burn_in: Optional[int] = None, n_dirs: int = 4096,
                         rng=None) -> SublevelSequence:
    """d_H(S_{c_n}(T^n), F2 cap B_1) with c_n = exp(n (lambda2 + delta))."""
    space = traj.space
    norm, d = space.norm, space.dim
    rng = _rng(rng if rng is not None else traj.seed)
    schedule = list(range(0, N + 1)) if schedule is None else sorted(schedule)
    prods = _scaled_products(traj.take(max(max(schedule), 1)), schedule)
    dirs = _sphere_dirs(d, n_dirs, rng)
    # extreme points of F2 cap B_1
    fb = F2.basis
    if F2.dim == 1:
        ext = np.stack([fb[:, 0], -fb[:, 0]]) / float(norm(fb[:, 0]))
    else:
        cdirs = _sphere_dirs(F2.dim, 512, rng)
        x = cdirs @ fb.T
        ext = x / norm(x)[:, None]
    out = []
    for n in schedule:
        p, logs = prods[n]
        level = math.exp(min(n * (lambda2 + delta) - logs, 700.0))
        slack = _roundoff_floor(norm, p, dirs)
        cloud = _sublevel_boundary(norm, p, level, dirs, slack)
        forward = float(_dist_to_section_ball(norm, cloud, F2).max())
        inside = _sublevel_member(norm, p, level, slack)
        backward = _hausdorff_clouds(norm, ext, inside, cloud)
        out.append((int(n), max(forward, backward)))
    if burn_in is None:
        burn_in = max(1, schedule[len(schedule) // 10])
    return SublevelSequence(out, burn_in)
