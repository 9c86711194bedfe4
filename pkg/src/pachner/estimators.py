"""Estimates computed from sample streams of the accept-all chain.

Growth ratios ``R(n) = |Omega(n + delta)| / |Omega(n)|`` come from
reweighting: at stationarity every triangulation of size ``n`` is visited
with the same probability, and the ratio of those probabilities between two
sizes is known in closed form, so the ratio of visit counts corrects to the
ratio of class sizes.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .errors import GapInCurve, InsufficientSupport, NoPlateau, WrongDimension

DEFAULT_THRESHOLD = 0.01
DEFAULT_TAIL = (8, 20)


@dataclass(frozen=True)
class RatioEstimate:
    """``R(n)`` with its spread over runs.

    ``support`` maps each contributing gamma to the number of samples at
    ``n``.  ``freq`` holds the relative frequencies at ``n`` and
    ``n + delta`` for single-run estimates (None once combined).
    """

    n: int
    delta: int
    mean: float
    stderr: float
    support: Mapping[float, int]
    runs: int = 1
    run: Optional[int] = None
    freq: Optional[tuple] = None

    @property
    def gammas(self) -> tuple:
        return tuple(sorted(self.support))


@dataclass(frozen=True)
class GrowthConstants:
    C: float
    C_err: float
    c_tilde: float
    c_tilde_err: float
    delta: int
    n_range: tuple


@dataclass
class DegreeStats:
    """Per size: mean and standard deviation of ``N(kappa) / f1`` over samples."""

    mean: dict = field(default_factory=dict)  # n -> {kappa: mean}
    sigma: dict = field(default_factory=dict)  # n -> {kappa: sigma}
    count: dict = field(default_factory=dict)  # n -> number of samples

    def sizes(self):
        return sorted(self.count)

    def distribution(self, n: int) -> dict:
        return dict(sorted(self.mean[n].items()))

    def rows(self):
        for n in self.sizes():
            for k in sorted(self.mean[n]):
                yield n, k, self.mean[n][k], self.sigma[n][k], self.count[n]


def _sizes(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray) and samples.dtype.kind in "iu":
        return samples
    out = [s if isinstance(s, (int, np.integer)) else s.n for s in samples]
    return np.asarray(out, dtype=np.int64)


def reweight(n: int, delta: int, gamma: float, r: float) -> float:
    """Factor turning the count ratio into the class-size ratio."""
    return -math.expm1(-gamma * (n + delta)) / (r * math.exp(-gamma * n))


def ratio_estimate(samples, n: int, gamma: float, r: float, delta: int, threshold: float = 0.0,
                   run: Optional[int] = None) -> RatioEstimate:
    """Estimate ``R(n)`` from one run at one gamma.

    ``samples`` holds sizes or records with an ``n`` attribute.  Entries whose
    relative frequency at ``n`` or ``n + delta`` is below ``threshold`` are
    refused.
    """
    sizes = _sizes(samples)
    total = sizes.shape[0]
    a = int(np.count_nonzero(sizes == n))
    b = int(np.count_nonzero(sizes == n + delta))
    if a == 0 or b == 0:
        raise InsufficientSupport(f"no samples at n={n if a == 0 else n + delta} (gamma={gamma})")
    fa, fb = a / total, b / total
    if fa < threshold or fb < threshold:
        raise InsufficientSupport(
            f"relative frequencies {fa:.4g}, {fb:.4g} at n={n}, {n + delta} below {threshold}"
        )
    q = b / a
    return RatioEstimate(n, delta, q * reweight(n, delta, gamma, r), 0.0, {float(gamma): a},
                         run=run, freq=(fa, fb))


def combine(estimates: Iterable[RatioEstimate], threshold: float = DEFAULT_THRESHOLD) -> RatioEstimate:
    """Average over gamma within each run (weights = support at n), then over runs.

    The standard error is the standard deviation of the per-run values
    divided by the square root of the number of runs.
    """
    by_run = defaultdict(list)
    n = delta = None
    for e in estimates:
        if n is None:
            n, delta = e.n, e.delta
        elif (e.n, e.delta) != (n, delta):
            raise ValueError("estimates for different sizes cannot be combined")
        if e.freq is not None and min(e.freq) < threshold:
            continue
        by_run[e.run].append(e)
    if not by_run:
        raise InsufficientSupport(f"no admissible estimate at n={n}")
    values = []
    support = defaultdict(int)
    for run in sorted(by_run, key=lambda x: (x is None, x)):
        group = by_run[run]
        w = np.array([sum(e.support.values()) for e in group], dtype=float)
        v = np.array([e.mean for e in group])
        values.append(float(np.dot(w, v) / w.sum()))
        for e in group:
            for g, c in e.support.items():
                support[g] += c
    values = np.array(values)
    R = len(values)
    stderr = float(values.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
    return RatioEstimate(n, delta, float(values.mean()), stderr, dict(support), runs=R)


def ratio_curve(records, r: float, delta: int, n_values=None,
                threshold: float = DEFAULT_THRESHOLD) -> dict:
    """``{n: RatioEstimate}`` from records grouped by (run, gamma).

    ``records`` may also be a mapping ``{(run, gamma): sizes}`` already
    grouped.  Sizes without an admissible estimate are left out.
    """
    if isinstance(records, Mapping):
        groups = records
    else:
        groups = defaultdict(list)
        for rec in records:
            groups[(rec.run, rec.gamma)].append(rec.n)
    groups = {k: np.asarray(v, dtype=np.int64) for k, v in groups.items()}
    if n_values is None:
        seen = set()
        for sizes in groups.values():
            seen.update(int(x) for x in np.unique(sizes))
        n_values = sorted(x for x in seen if x + delta in seen)
    curve = {}
    for n in n_values:
        ests = []
        for (run, gamma), sizes in sorted(groups.items()):
            try:
                ests.append(ratio_estimate(sizes, n, gamma, r, delta, threshold=threshold, run=run))
            except InsufficientSupport:
                continue
        if ests:
            curve[n] = combine(ests, threshold)
    return curve


def growth_constants(curve: Mapping[int, RatioEstimate], n_range=None, delta: Optional[int] = None) -> GrowthConstants:
    """Plateau value ``C`` of the ratio curve and the rate ``ln(C) / delta``.

    ``n_range`` is an inclusive ``(lo, hi)``; by default the upper half of
    the available sizes.  Points are weighted by inverse variance when every
    point has a positive standard error, otherwise equally.
    """
    ns = sorted(curve)
    if delta is None:
        if not ns:
            raise NoPlateau("empty curve")
        delta = curve[ns[0]].delta
    if n_range is None:
        if not ns:
            raise NoPlateau("empty curve")
        half = ns[len(ns) // 2:]
        n_range = (half[0], half[-1])
    lo, hi = n_range
    pts = [curve[n] for n in ns if lo <= n <= hi]
    if not pts:
        raise NoPlateau(f"no ratio estimates in [{lo}, {hi}]")
    v = np.array([p.mean for p in pts])
    s = np.array([p.stderr for p in pts])
    if np.all(s > 0):
        w = 1.0 / s**2
        C = float(np.dot(w, v) / w.sum())
        C_err = float(1.0 / math.sqrt(w.sum()))
    else:
        C = float(v.mean())
        C_err = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    c = math.log(C) / delta
    return GrowthConstants(C, C_err, c, C_err / (C * delta), delta, (lo, hi))


def absolute_counts(curve: Mapping[int, RatioEstimate], anchor: tuple, targets=None) -> dict:
    """Telescoped class sizes ``{n: (log count, log stderr)}`` from an anchor ``(n0, count)``.

    The product is accumulated in logs; errors add in quadrature as
    relative errors.
    """
    n0, c0 = anchor
    if c0 <= 0:
        raise ValueError("anchor count must be positive")
    if not curve:
        raise GapInCurve("empty curve")
    delta = next(iter(curve.values())).delta
    if targets is None:
        top = max(curve) + delta
        targets = range(n0, top + 1, delta)
    out = {}
    for target in sorted(targets):
        if target < n0 or (target - n0) % delta:
            raise GapInCurve(f"{target} is not reachable from {n0} in steps of {delta}")
        log_c = math.log(c0)
        var = 0.0
        for n in range(n0, target, delta):
            if n not in curve:
                raise GapInCurve(f"missing ratio estimate at n={n}")
            e = curve[n]
            log_c += math.log(e.mean)
            var += (e.stderr / e.mean) ** 2
        out[target] = (log_c, math.sqrt(var))
    return out


# ---------------------------------------------------------------------------
# edge degrees


def _hist_of(sample):
    deg = sample.degrees if hasattr(sample, "degrees") and not callable(sample.degrees) else None
    if deg is None and hasattr(sample, "edge_degree_histogram"):
        deg = sample.edge_degree_histogram()
    return deg


def degree_identities(n: int, hist: Mapping[int, int], f0: int = 1) -> tuple[bool, bool]:
    """Exact checks: ``sum kappa N = 6n`` and mean degree ``= 6n / (n + f0)``."""
    total = sum(k * c for k, c in hist.items())
    edges = sum(hist.values())
    return total == 6 * n, total * (n + f0) == 6 * n * edges


def degree_stats(samples, check: bool = True) -> DegreeStats:
    """Mean and sigma of ``N(kappa) / f1`` per size.

    With ``check`` each sample must satisfy :func:`degree_identities`
    exactly; a violation raises ``ValueError``.
    """
    per_n = defaultdict(list)
    kappas = defaultdict(set)
    for s in samples:
        hist = _hist_of(s)
        if hist is None:
            raise WrongDimension("degree statistics need 3-dimensional samples with edge histograms")
        n = s.n
        if hasattr(s, "f_vector"):
            f0 = s.f_vector()[0]
        else:
            f0 = 1 if getattr(s, "f0", None) is None else s.f0
        if check:
            ok_sum, ok_mean = degree_identities(n, hist, f0)
            if not (ok_sum and ok_mean):
                raise ValueError(f"degree identities fail on a sample with n={n}")
        f1 = sum(hist.values())
        per_n[n].append({int(k): c / f1 for k, c in hist.items()})
        kappas[n].update(int(k) for k in hist)
    stats = DegreeStats()
    for n, rows in per_n.items():
        ks = sorted(kappas[n])
        mat = np.array([[row.get(k, 0.0) for k in ks] for row in rows])
        mu = mat.mean(axis=0)
        sd = mat.std(axis=0, ddof=1) if len(rows) > 1 else np.zeros(len(ks))
        stats.mean[n] = dict(zip(ks, mu.tolist()))
        stats.sigma[n] = dict(zip(ks, sd.tolist()))
        stats.count[n] = len(rows)
    return stats


def tail_rate(distribution: Mapping[int, float], kappa_range=DEFAULT_TAIL) -> tuple[float, float]:
    """Decay rate of ``P(kappa)`` from a least-squares line through ``log P`` over ``kappa_range``.

    Returns ``(rate, stderr)`` with ``rate = -slope``.
    """
    lo, hi = kappa_range
    ks = np.array([k for k in sorted(distribution) if lo <= k <= hi and distribution[k] > 0], dtype=float)
    if len(ks) < 3:
        raise InsufficientSupport(f"fewer than 3 positive degrees in [{lo}, {hi}]")
    ys = np.log([distribution[int(k)] for k in ks])
    A = np.vstack([ks, np.ones_like(ks)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ coef
    dof = len(ks) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    return float(-coef[0]), float(math.sqrt(cov[0, 0]))


def local_maxima(distribution: Mapping[int, float]) -> list[int]:
    ks = sorted(distribution)
    out = []
    for a, b, c in zip(ks, ks[1:], ks[2:]):
        if distribution[b] > distribution[a] and distribution[b] > distribution[c]:
            out.append(b)
    return out


# ---------------------------------------------------------------------------
# estimator objects


class GrowthRatioEstimator(BaseEstimator):
    """``fit`` takes sample records and stores the ratio curve and plateau constants."""

    def __init__(self, r=2.0, delta=2, threshold=DEFAULT_THRESHOLD, n_range=None):
        self.r = r
        self.delta = delta
        self.threshold = threshold
        self.n_range = n_range

    def fit(self, X, y=None):
        self.curve_ = ratio_curve(X, self.r, self.delta, threshold=self.threshold)
        try:
            self.constants_ = growth_constants(self.curve_, self.n_range, self.delta)
        except NoPlateau:
            self.constants_ = None
        return self

    def predict(self, n):
        """Estimated ``R`` at each size in ``n`` (NaN where unsupported)."""
        return np.array([self.curve_[k].mean if k in self.curve_ else np.nan for k in np.atleast_1d(n)])


class DegreeDistribution(BaseEstimator):
    """``fit`` takes 3-dimensional records and stores :class:`DegreeStats` and the tail rate."""

    def __init__(self, n=None, kappa_range=DEFAULT_TAIL):
        self.n = n
        self.kappa_range = kappa_range

    def fit(self, X, y=None):
        X = [x for x in X if self.n is None or x.n == self.n]
        self.stats_ = degree_stats(X)
        sizes = self.stats_.sizes()
        if not sizes:
            raise InsufficientSupport("no samples")
        target = self.n if self.n is not None else sizes[-1]
        self.distribution_ = self.stats_.distribution(target)
        try:
            self.tail_rate_, self.tail_rate_err_ = tail_rate(self.distribution_, self.kappa_range)
        except InsufficientSupport:
            self.tail_rate_ = self.tail_rate_err_ = None
        return self
