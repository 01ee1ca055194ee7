"""scikit-learn style estimator for Lyapunov spectra of operator sequences.

``LyapunovSpectrum`` treats a stack of operators ``X`` with shape (N, d, d) as
one finite cocycle trajectory T_0, ..., T_{N-1}. ``fit`` estimates growth
rates, exponents and (optionally) the slow-subspace filtration; ``transform``
maps vectors to their observed growth rates and ``predict`` assigns each
vector to the filtration level that governs its growth.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import ambient, met, volume
from ._validation import check_operator_stack, check_q, check_vectors
from .cocycles import Trajectory
from .norms import AmbientSpace, NormSpec

_NAMED_NORMS = {
    "euclidean": NormSpec.euclidean,
    "l1": lambda: NormSpec.lp(1),
    "linf": NormSpec.linf,
}


def resolve_norm(norm) -> NormSpec:
    """Accept a NormSpec, a serialized norm dict or one of 'euclidean', 'l1', 'linf'."""
    if isinstance(norm, NormSpec):
        return norm
    if isinstance(norm, dict):
        return NormSpec.from_dict(norm)
    if isinstance(norm, str) and norm in _NAMED_NORMS:
        return _NAMED_NORMS[norm]()
    raise ValueError(f"unsupported norm {norm!r}; use a NormSpec, a dict or one of {sorted(_NAMED_NORMS)}")


class LyapunovSpectrum(TransformerMixin, BaseEstimator):
    """Lyapunov exponents and Oseledets filtration of a finite operator sequence.

    Parameters
    ----------
    norm : NormSpec, dict or str, default="euclidean"
        Ambient norm. Exponents do not depend on it; the geometry of the
        slow subspaces (and their certificates) does.
    q_max : int, optional
        Largest volume dimension tracked; defaults to ``min(d, 6)``.
    n_starts : int, default=8
        Random initial frames for the growth-rate ledger.
    extract_filtration : bool, default=True
        Whether ``fit`` also extracts the nested slow subspaces.
    n_slow : int, default=200
        Step cap for each slow-subspace extraction.
    random_state : int, default=0
        Seed for initial frames and optimizers.

    Attributes
    ----------
    l_ : dict
        q -> growth rate l_q.
    exponents_ : ndarray
        Distinct exponents, descending (``-inf`` allowed).
    multiplicities_ : ndarray
        Multiplicity of each exponent.
    offsets_ : ndarray
        Cumulative multiplicities M_i (one more entry than ``exponents_``).
    filtration_ : Filtration or None
        Nested slow subspaces when ``extract_filtration`` is set.
    ledger_ : GrowthLedger
        Per-q log-determinant ledger.
    report_ : ExponentReport
    n_features_in_ : int
        Ambient dimension d.
    """

    def __init__(self, norm="euclidean", q_max: Optional[int] = None, n_starts: int = 8,
                 extract_filtration: bool = True, n_slow: int = 200, random_state: int = 0):
        self.norm = norm
        self.q_max = q_max
        self.n_starts = n_starts
        self.extract_filtration = extract_filtration
        self.n_slow = n_slow
        self.random_state = random_state

    def fit(self, X, y=None):
        """Estimate the spectrum from operators ``X`` of shape (N, d, d)."""
        ops = check_operator_stack(X)
        d = ops.shape[1]
        space = AmbientSpace(d, resolve_norm(self.norm))
        q_max = min(d, volume.Q_MAX) if self.q_max is None else check_q(self.q_max, d)
        if int(self.n_starts) < 1:
            raise ValueError("n_starts must be >= 1")
        traj = Trajectory.from_operators(space, ops)
        rng = np.random.default_rng(self.random_state)
        ledger = met.growth_rates(traj, q_max, n_starts=int(self.n_starts), rng=rng)
        report = met.spectrum_from_ledger(ledger)
        filt = None
        if self.extract_filtration:
            filt, report = met.filtration(traj, q_max=q_max, n_slow=int(self.n_slow),
                                          rng=np.random.default_rng(self.random_state))
        self.space_ = space
        self.trajectory_ = traj
        self.ledger_ = ledger
        self.report_ = report
        self.l_ = dict(report.l)
        self.exponents_ = np.array(report.lam, dtype=float)
        self.multiplicities_ = np.array(report.mult, dtype=int)
        self.offsets_ = np.array(report.M, dtype=int)
        self.filtration_ = filt
        self.n_features_in_ = d
        return self

    def transform(self, X):
        """Growth rate (1/N) log(|T^N v| / |v|) of each row v; shape (n, 1)."""
        check_is_fitted(self, "ledger_")
        v = check_vectors(X, self.n_features_in_)
        norm = self.space_.norm
        ops = self.trajectory_.take()
        base = norm(v)
        if np.any(base == 0):
            raise ValueError("growth rate of the zero vector is undefined")
        x = v / base[:, None]
        logs = np.zeros(len(x))
        for a in ops:
            x = x @ a.T
            s = norm(x)
            dead = s == 0
            logs = np.where(dead, -np.inf, logs + np.log(np.where(dead, 1.0, s)))
            x = x / np.where(dead, 1.0, s)[:, None]
        return (logs / len(ops))[:, None]

    def predict(self, X):
        """Index i of the exponent lambda_i governing each row's growth.

        With a filtration this is the deepest level F_i containing the vector
        (up to the subspace tolerance); otherwise the exponent nearest to the
        observed growth rate.
        """
        check_is_fitted(self, "ledger_")
        v = check_vectors(X, self.n_features_in_)
        if self.filtration_ is None:
            rates = self.transform(v)[:, 0]
            return np.array([self.report_.level_of_rate(r) for r in rates], dtype=int)
        norm = self.space_.norm
        scale = np.maximum(norm(v), 1e-300)
        level = np.zeros(len(v), dtype=int)
        tol = max(self.space_.tau_sub, 1e-6)
        for i, F in enumerate(self.filtration_.subspaces[1:], start=1):
            dist = ambient._distance(norm, F.basis)(v)
            level = np.where((level == i - 1) & (dist <= tol * scale), i, level)
        return level

    def exponents_with_multiplicity(self) -> list:
        """Exponents repeated according to their multiplicities."""
        check_is_fitted(self, "exponents_")
        out = []
        for lam, m in zip(self.exponents_, self.multiplicities_):
            out += [float(lam)] * int(m)
        return out

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.three_d_array = True
        tags.input_tags.two_d_array = False
        return tags


def lyapunov_exponents(X, norm="euclidean", q_max: Optional[int] = None, random_state: int = 0) -> list:
    """Convenience wrapper: exponents with multiplicity for an operator stack."""
    est = LyapunovSpectrum(norm=norm, q_max=q_max, extract_filtration=False,
                           random_state=random_state).fit(X)
    return est.exponents_with_multiplicity()


__all__ = ["LyapunovSpectrum", "lyapunov_exponents", "resolve_norm"]
