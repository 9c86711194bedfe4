"""Metropolis-Hastings walks on the graph of bi-stellar moves.

Every step picks a direction (up with probability ``alpha = exp(-gamma n)``,
down with ``(1 - alpha) / r``, otherwise stay), a move index within that
direction, and then one neighbour type with probability ``1/m`` each, where
``m`` is a face count of the current or the target triangulation that
bounds the number of neighbour types.  The leftover probability is a
self-loop.  In accept-all mode this proposal is never rejected and the
stationary size distribution follows from it alone; in Metropolis mode the
proposal is corrected towards ``P(T) ~ exp(-beta n^2)``.

Picking a type uniformly is done without listing all neighbours: draw a slot
among ``m``; a slot holding a site whose move gives ``T'`` is accepted with
probability ``1/k`` where ``k`` counts the sites giving a triangulation
isomorphic to ``T'``.  Each type then has probability ``1/m`` exactly.
When there are more sites than ``m`` the types are listed explicitly.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from . import _kernels as K
from .errors import ConfigError, DomainError, PachnerError, SinkFailure
from .isosig import compute
from .moves import DELTA_N, neighbours
from .triangulation import Triangulation, seed_triangulation

# smallest facet counts of closed triangulations
MIN_SIZE = {2: 2, 3: 1}


def default_r(dim: int) -> float:
    return 2.0 if dim % 2 == 0 else 1.0


@dataclass(frozen=True)
class SamplerConfig:
    """Parameters of one chain.

    ``burn_in`` defaults to 2000 sampling intervals.  ``gamma`` may be left
    unset in Metropolis mode, where it defaults to ``2 beta |delta|`` for the
    smallest nonzero size change ``delta`` of the proposed moves.
    """

    dim: int = 2
    gamma: Optional[float] = None
    r: Optional[float] = None
    mode: str = "accept_all"
    beta: Optional[float] = None
    steps: int = 100_000
    sample_interval: int = 100
    burn_in: Optional[int] = None
    seed: int = 0
    simplicial_only: bool = False
    one_vertex_mode: bool = False
    chain_id: int = 0
    max_n: Optional[int] = None
    record_isosig: bool = True
    record_degrees: Optional[bool] = None
    run: int = 0

    def resolved(self) -> "SamplerConfig":
        """Fill defaults and check consistency."""
        if self.dim not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dim}")
        r = default_r(self.dim) if self.r is None else float(self.r)
        if self.dim % 2 == 1 and r != 1.0:
            raise ConfigError("odd dimensions need r = 1")
        if self.dim % 2 == 0 and not r > 1.0:
            raise ConfigError("even dimensions need r > 1")
        if self.mode not in ("accept_all", "metropolis"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        gamma = self.gamma
        beta = self.beta
        if self.mode == "metropolis":
            if beta is None or not beta > 0:
                raise ConfigError("metropolis mode needs beta > 0")
            if gamma is None:
                up, _, _ = self.move_sets()
                gamma = 2.0 * beta * min(abs(DELTA_N[self.dim][i]) for i in up)
        if gamma is None or not gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.steps < 0 or self.sample_interval < 1:
            raise ConfigError("steps must be >= 0 and sample_interval >= 1")
        burn = 2000 * self.sample_interval if self.burn_in is None else int(self.burn_in)
        rec_deg = self.dim == 3 if self.record_degrees is None else bool(self.record_degrees)
        return replace(self, gamma=float(gamma), r=r, beta=beta, burn_in=burn, record_degrees=rec_deg)

    def move_sets(self):
        """Move indices proposed in the up, stay and down directions."""
        if self.dim == 2:
            return (0,), (1,), (2,)
        if self.mode == "accept_all" or self.one_vertex_mode:
            return (1,), (), (2,)
        return (0, 1), (), (2, 3)


@dataclass
class SampleRecord:
    t: int
    n: int
    chain_id: int
    gamma: float
    isosig: Optional[str] = None
    degrees: Optional[dict] = None
    f0: Optional[int] = None
    run: int = 0

    def to_dict(self):
        d = {"t": self.t, "n": self.n, "isosig": self.isosig, "degrees": self.degrees}
        d.update(chain_id=self.chain_id, gamma=self.gamma, f0=self.f0, run=self.run)
        return d

    @classmethod
    def from_dict(cls, d):
        deg = d.get("degrees")
        if deg is not None:
            deg = {int(k): int(v) for k, v in deg.items()}
        return cls(
            t=int(d["t"]),
            n=int(d["n"]),
            chain_id=int(d.get("chain_id", 0)),
            gamma=float(d["gamma"]),
            isosig=d.get("isosig"),
            degrees=deg,
            f0=d.get("f0"),
            run=int(d.get("run", 0)),
        )


@dataclass(frozen=True)
class Proposal:
    direction: str
    i: Optional[int]
    candidate: Optional[Triangulation]  # None means stay at T
    m: int
    l: int


# ---------------------------------------------------------------------------
# size distribution


def p_ratio(n: int, delta: int, gamma: float, r: float, dim: int = 2) -> float:
    """Stationary ratio ``P(n + delta) / P(n)`` of the accept-all chain."""
    if not gamma > 0 or r < 1:
        raise DomainError("need gamma > 0 and r >= 1")
    if n < MIN_SIZE[dim] or n + delta < MIN_SIZE[dim]:
        raise DomainError(f"size {n + delta} is below the minimum {MIN_SIZE[dim]}")
    if delta == 0:
        return 1.0
    if delta < 0:
        return 1.0 / p_ratio(n + delta, -delta, gamma, r, dim)
    return r * math.exp(-gamma * n) / -math.expm1(-gamma * (n + delta))


def acceptance(n: int, delta: int, beta: float, gamma: float, r: float, dim: int = 2) -> float:
    """Metropolis acceptance of a move changing the size from ``n`` to ``n + delta``."""
    if not beta >= 0 or not gamma > 0 or r < 1:
        raise DomainError("need beta >= 0, gamma > 0, r >= 1")
    if n < MIN_SIZE[dim] or n + delta < MIN_SIZE[dim]:
        raise DomainError(f"size {n + delta} is below the minimum {MIN_SIZE[dim]}")
    target = math.exp(-beta * (2 * n * delta + delta * delta))
    if delta > 0:
        a = target / r * -math.expm1(-gamma * (n + delta)) / math.exp(-gamma * n)
    elif delta < 0:
        a = target * r * math.exp(-gamma * (n + delta)) / -math.expm1(-gamma * n)
    else:
        a = 1.0
    return min(1.0, a)


# ---------------------------------------------------------------------------
# reference proposal built from explicit neighbour sets


def _f_entry(dim, n, f0, k):
    return int(K.fvec_entry(dim, n, f0, k))


def direction_of(u: float, n: int, cfg: SamplerConfig):
    """Direction and move index selected by the uniform ``u``."""
    up, stay, down = cfg.move_sets()
    alpha = math.exp(-cfg.gamma * n)
    atil = (1.0 - alpha) / cfg.r
    stay_p = 1.0 - alpha - atil if stay else 0.0
    if u < alpha:
        name, lo, width, moves = "up", 0.0, alpha, up
    elif stay_p > 0 and u <= alpha + stay_p:
        name, lo, width, moves = "stay", alpha, stay_p, stay
    else:
        name, lo, width, moves = "down", alpha + stay_p, 1.0 - alpha - stay_p, down
    if not moves or width <= 0:
        return name, None
    sel = min(len(moves) - 1, max(0, int((u - lo) / width * len(moves))))
    return name, moves[sel]


def proposal_bound(T: Triangulation, direction: str, i: int) -> int:
    """The ``m`` of the proposal: a face count bounding the neighbour types."""
    d = T.dim
    f0 = T.f_vector()[0]
    if direction == "down":
        return _f_entry(d, T.n + DELTA_N[d][i], f0 + int(K.vertex_delta(d, i)), i)
    return _f_entry(d, T.n, f0, d - i)


def propose(T: Triangulation, rng, config: SamplerConfig) -> Proposal:
    """Draw a proposal by listing the neighbour types explicitly."""
    cfg = config.resolved()
    rng = np.random.default_rng(rng)
    u, v = rng.random(2)
    direction, i = direction_of(u, T.n, cfg)
    if i is None:
        return Proposal(direction, None, None, 0, 0)
    if cfg.max_n is not None and T.n + DELTA_N[T.dim][i] > cfg.max_n:
        return Proposal(direction, i, None, 0, 0)
    m = proposal_bound(T, direction, i)
    members = neighbours(T, i, cfg.simplicial_only).members if m > 0 else ()
    l = len(members)
    if l > m:
        raise PachnerError(f"{l} neighbour types exceed the bound {m}")
    k = int(v * m) if m > 0 else 0
    cand = members[k][1] if k < l else None
    return Proposal(direction, i, cand, m, l)


# ---------------------------------------------------------------------------
# sinks


class ListSink:
    def __init__(self):
        self.records = []

    def write(self, record: SampleRecord):
        self.records.append(record)

    def close(self):
        pass


class SizeSink:
    """Keeps only the sizes of the records, grouped by (run, gamma)."""

    def __init__(self, groups=None):
        self.groups = {} if groups is None else groups

    def write(self, record: SampleRecord):
        self.groups.setdefault((record.run, record.gamma), []).append(record.n)

    def close(self):
        pass


class NDJSONSink:
    """One JSON object per line; the file is flushed after every record."""

    def __init__(self, path):
        self.path = path
        try:
            self._fh = open(path, "w")
        except OSError as exc:
            raise SinkFailure(f"cannot open {path}: {exc}") from exc

    def write(self, record: SampleRecord):
        try:
            self._fh.write(json.dumps(record.to_dict(), separators=(",", ":")) + "\n")
        except (OSError, ValueError) as exc:
            raise SinkFailure(f"cannot write to {self.path}: {exc}") from exc

    def close(self):
        try:
            self._fh.close()
        except OSError as exc:
            raise SinkFailure(f"cannot close {self.path}: {exc}") from exc


def read_records(path) -> list[SampleRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(SampleRecord.from_dict(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# chains


def chain_rng(seed: int, chain_id: int) -> np.random.Generator:
    """PCG64 stream for one chain: the chain id is mixed in as a spawn key."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(chain_id),))))


def _check_seed(T: Triangulation, cfg: SamplerConfig):
    if T.dim != cfg.dim:
        raise ConfigError(f"seed has dimension {T.dim}, config says {cfg.dim}")
    if cfg.one_vertex_mode and T.f_vector()[0] != 1:
        raise ConfigError("one-vertex mode needs a one-vertex seed")
    if cfg.simplicial_only and not T.is_simplicial():
        raise ConfigError("simplicial mode needs a simplicial seed")
    if cfg.max_n is not None and T.n > cfg.max_n:
        raise ConfigError("seed is larger than max_n")


class _Chain:
    """Mutable chain state driving the compiled step kernel."""

    def __init__(self, T: Triangulation, cfg: SamplerConfig):
        self.cfg = cfg
        self.dim = T.dim
        self.tb = T.tables
        self.n = T.n
        self.f0 = T.f_vector()[0]
        cap = max(64, 2 * T.n)
        self._alloc(cap)
        self.gt[: T.n] = T.gt
        self.gp[: T.n] = T.gp
        up, stay, down = cfg.move_sets()
        self.up = np.array(up, dtype=np.int64)
        self.stay = np.array(stay, dtype=np.int64)
        self.down = np.array(down, dtype=np.int64)
        self.counts = np.zeros(7, dtype=np.int64)
        self.n_min = T.n
        self.n_max = T.n

    def _alloc(self, cap, keep=0):
        D1 = self.dim + 1
        new = [np.zeros((cap, D1), dtype=np.int64) for _ in range(6)]
        if keep:
            new[0][:keep] = self.gt[:keep]
            new[1][:keep] = self.gp[:keep]
        self.gt, self.gp, self.ot, self.op, self.ot2, self.op2 = new

    def advance(self, uniforms):
        cfg = self.cfg
        done = 0
        total = uniforms.shape[0]
        while done < total:
            steps, n, f0, status = K.run_steps(
                self.gt, self.gp, self.n, self.f0, self.tb, uniforms[done:],
                cfg.gamma, cfg.r, cfg.mode == "metropolis", cfg.beta or 0.0,
                self.up, self.stay, self.down, cfg.simplicial_only, cfg.max_n or 0,
                self.ot, self.op, self.ot2, self.op2, self.counts,
            )
            done += steps
            self.n = int(n)
            self.f0 = int(f0)
            if status == K.NEED_CAPACITY:
                self._alloc(2 * self.gt.shape[0], keep=self.n)
            elif status == K.BOUND_EXCEEDED:
                raise PachnerError(f"neighbour types exceed the proposal bound at n={self.n}")
        self.n_min = min(self.n_min, self.n)
        self.n_max = max(self.n_max, self.n)

    def triangulation(self) -> Triangulation:
        return Triangulation(self.dim, self.gt[: self.n], self.gp[: self.n], validate=False)


def run_chain(seed_T: Triangulation, config: SamplerConfig, sink=None) -> dict:
    """Run one chain, writing a :class:`SampleRecord` every ``sample_interval`` steps after burn-in.

    The state sequence depends on ``seed_T``, ``config.seed`` and
    ``config.chain_id`` only.
    """
    cfg = config.resolved()
    _check_seed(seed_T, cfg)
    rng = chain_rng(cfg.seed, cfg.chain_id)
    chain = _Chain(seed_T, cfg)
    sink = ListSink() if sink is None else sink
    started = time.perf_counter()
    t = 0
    records = 0
    block = cfg.sample_interval
    n_sum_sampled = 0
    try:
        while t < cfg.steps:
            todo = min(block - t % block, cfg.steps - t)
            chain.advance(rng.random((todo, 4)))
            t += todo
            if t % block == 0 and t > cfg.burn_in:
                T = chain.triangulation()
                rec = SampleRecord(t=t, n=T.n, chain_id=cfg.chain_id, gamma=cfg.gamma, run=cfg.run)
                if cfg.record_isosig:
                    rec.isosig = compute(T)
                if cfg.record_degrees:
                    deg = T.degrees()
                    vals, cnt = np.unique(deg, return_counts=True)
                    rec.degrees = {int(a): int(b) for a, b in zip(vals, cnt)}
                rec.f0 = int(chain.f0)
                sink.write(rec)
                records += 1
                n_sum_sampled += T.n
    finally:
        sink.close()
    c = chain.counts
    steps = int(c[:4].sum())
    final = chain.triangulation()
    return {
        "steps": steps,
        "moved": int(c[K.MOVED]),
        "self_loops": int(c[K.SELF_LOOP]),
        "rejected": int(c[K.REJECTED]),
        "capped": int(c[K.CAPPED]),
        "acceptance_fraction": c[K.MOVED] / steps if steps else 0.0,
        "self_loop_fraction": (c[K.SELF_LOOP] + c[K.CAPPED]) / steps if steps else 0.0,
        "mean_n": c[6] / steps if steps else float(seed_T.n),
        "min_n": chain.n_min,
        "max_n": chain.n_max,
        "records": records,
        "mean_n_sampled": n_sum_sampled / records if records else None,
        "final_n": final.n,
        "final_isosig": compute(final),
        "seconds": time.perf_counter() - started,
        "config": asdict(cfg),
    }


def _seed_from(X, dim):
    if isinstance(X, Triangulation):
        return X
    if isinstance(X, str):
        if X.startswith("a") and len(X) > 3 and X[1] in "23":
            from .isosig import decode

            return decode(X)
        return seed_triangulation(X)
    raise ConfigError(f"cannot use {X!r} as a seed triangulation")


class PachnerSampler(BaseEstimator):
    """Estimator-style front end: ``fit`` runs one chain from a seed."""

    def __init__(
        self,
        dim=2,
        gamma=None,
        r=None,
        mode="accept_all",
        beta=None,
        steps=100_000,
        sample_interval=100,
        burn_in=None,
        seed=0,
        simplicial_only=False,
        one_vertex_mode=False,
        chain_id=0,
        max_n=None,
    ):
        self.dim = dim
        self.gamma = gamma
        self.r = r
        self.mode = mode
        self.beta = beta
        self.steps = steps
        self.sample_interval = sample_interval
        self.burn_in = burn_in
        self.seed = seed
        self.simplicial_only = simplicial_only
        self.one_vertex_mode = one_vertex_mode
        self.chain_id = chain_id
        self.max_n = max_n

    def config(self) -> SamplerConfig:
        return SamplerConfig(**self.get_params())

    def fit(self, X, y=None):
        seed_T = _seed_from(X, self.dim)
        sink = ListSink()
        self.summary_ = run_chain(seed_T, self.config(), sink)
        self.records_ = sink.records
        return self

    def sizes(self) -> np.ndarray:
        return np.array([r.n for r in self.records_], dtype=np.int64)
