import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pachner import seed_triangulation
from pachner.errors import ConfigError, DomainError, SinkFailure
from pachner.sampler import (
    ListSink,
    NDJSONSink,
    PachnerSampler,
    SamplerConfig,
    acceptance,
    direction_of,
    p_ratio,
    propose,
    proposal_bound,
    read_records,
    run_chain,
)


def test_p_ratio_value():
    assert p_ratio(20, 2, 0.1, 2.0) == pytest.approx(2 * math.exp(-2) / (1 - math.exp(-2.2)), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 200), st.sampled_from([1, 2, 3]), st.floats(0.01, 2.0), st.floats(1.0, 4.0))
def test_p_ratio_reciprocal(n, delta, gamma, r):
    assert p_ratio(n, delta, gamma, r) * p_ratio(n + delta, -delta, gamma, r) == pytest.approx(1.0, rel=1e-12)


def test_p_ratio_large_gamma_suppresses_growth():
    assert p_ratio(10, 2, 50.0, 2.0) < 1e-200
    with pytest.raises(DomainError):
        p_ratio(2, -2, 0.1, 2.0)
    with pytest.raises(DomainError):
        p_ratio(4, 2, -1.0, 2.0)


def _g(n, delta, gamma, r):
    # proposal probability of the size change, per neighbour type
    alpha = math.exp(-gamma * n)
    return alpha if delta > 0 else (1 - alpha) / r


@pytest.mark.parametrize("n", [2, 5, 12, 40])
@pytest.mark.parametrize("delta", [2, 1, 3])
@pytest.mark.parametrize("beta", [0.0, 0.005, 0.05])
@pytest.mark.parametrize("gamma", [0.05, 0.3])
def test_metropolis_detailed_balance(n, delta, beta, gamma):
    r = 2.0
    P = lambda m: math.exp(-beta * m * m)  # noqa: E731
    lhs = P(n) * _g(n, delta, gamma, r) * acceptance(n, delta, beta, gamma, r)
    rhs = P(n + delta) * _g(n + delta, -delta, gamma, r) * acceptance(n + delta, -delta, beta, gamma, r)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_matched_gamma_cancels_size_dependence():
    beta, delta = 0.01, 2
    gamma = 2 * beta * delta
    vals = [acceptance(n, delta, beta, gamma, 2.0) / -math.expm1(-gamma * (n + delta)) for n in (10, 50, 200)]
    assert vals == pytest.approx([math.exp(-beta * delta**2) / 2.0] * 3, rel=1e-12)


def test_zero_beta_is_accept_all_clamped():
    for n in (4, 10, 30):
        assert acceptance(n, 2, 0.0, 0.2, 2.0) == pytest.approx(min(1.0, 1 / p_ratio(n, 2, 0.2, 2.0)))


def test_direction_thresholds():
    cfg = SamplerConfig(dim=2, gamma=0.1).resolved()
    alpha = math.exp(-0.1 * 10)
    assert direction_of(alpha * 0.99, 10, cfg) == ("up", 0)
    assert direction_of(alpha * 1.01, 10, cfg) == ("stay", 1)
    assert direction_of(0.999, 10, cfg) == ("down", 2)
    T = seed_triangulation("genus(1)")
    assert proposal_bound(T, "up", 0) == T.n
    assert proposal_bound(T, "stay", 1) == 3 * T.n // 2
    cfg3 = SamplerConfig(dim=3, gamma=0.1, one_vertex_mode=True).resolved()
    assert direction_of(0.99, 10, cfg3) == ("down", 2)
    S = seed_triangulation("sphere3_seed")
    assert proposal_bound(S, "up", 1) == 2 * S.n
    assert proposal_bound(S, "down", 2) == 2 * S.n - 2


def test_smallest_sphere_down_is_self_loop():
    cfg = SamplerConfig(dim=2, gamma=0.01)
    rng = np.random.default_rng(0)
    T = seed_triangulation("sphere2")
    for _ in range(200):
        p = propose(T, rng, cfg)
        if p.direction == "down":
            assert p.candidate is None and p.l == 0


def test_config_checks():
    with pytest.raises(ConfigError):
        SamplerConfig(dim=3, gamma=0.1, r=2.0).resolved()
    with pytest.raises(ConfigError):
        SamplerConfig(dim=2, gamma=0.1, r=1.0).resolved()
    with pytest.raises(ConfigError):
        SamplerConfig(dim=2).resolved()
    assert SamplerConfig(dim=2, mode="metropolis", beta=0.01).resolved().gamma == pytest.approx(0.04)
    with pytest.raises(ConfigError):
        run_chain(seed_triangulation("sphere2"), SamplerConfig(dim=2, gamma=0.1, simplicial_only=True))


def test_determinism():
    cfg = SamplerConfig(dim=2, gamma=0.1, steps=20_000, sample_interval=50, burn_in=1000, seed=4)
    a, b = ListSink(), ListSink()
    run_chain(seed_triangulation("sphere2"), cfg, a)
    run_chain(seed_triangulation("sphere2"), cfg, b)
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]
    c = ListSink()
    run_chain(seed_triangulation("sphere2"), SamplerConfig(**{**cfg.__dict__, "seed": 5}), c)
    assert [r.isosig for r in a.records] != [r.isosig for r in c.records]


def test_smaller_gamma_gives_larger_sizes():
    means = []
    for gamma in (1 / 10, 1 / 20):
        s = run_chain(seed_triangulation("sphere2"), SamplerConfig(dim=2, gamma=gamma, steps=100_000,
                                                                    sample_interval=10, burn_in=5000, seed=1))
        means.append(s["mean_n"])
    assert means[1] > means[0]


def test_summary_and_sizes():
    est = PachnerSampler(dim=3, gamma=0.1, one_vertex_mode=True, steps=5000, sample_interval=10, burn_in=0)
    est.fit("sphere3_seed")
    sizes = est.sizes()
    assert len(sizes) == 500
    s = est.summary_
    assert s["steps"] == 5000
    assert s["min_n"] <= s["mean_n"] <= s["max_n"]
    for rec in est.records_:
        assert rec.f0 == 1
        assert sum(k * c for k, c in rec.degrees.items()) == 6 * rec.n


def test_simplicial_chain_stays_simplicial():
    from pachner.isosig import decode

    sink = ListSink()
    run_chain(seed_triangulation("tetrahedron"),
              SamplerConfig(dim=2, gamma=0.1, steps=20_000, sample_interval=100, burn_in=0, simplicial_only=True),
              sink)
    assert all(decode(r.isosig).is_simplicial() for r in sink.records)


def test_ndjson_round_trip(tmp_path):
    path = tmp_path / "log.ndjson"
    cfg = SamplerConfig(dim=2, gamma=0.2, steps=2000, sample_interval=100, burn_in=0)
    sink = ListSink()
    run_chain(seed_triangulation("sphere2"), cfg, sink)
    run_chain(seed_triangulation("sphere2"), cfg, NDJSONSink(path))
    assert [r.to_dict() for r in read_records(path)] == [r.to_dict() for r in sink.records]


class _Broken:
    closed = False

    def write(self, record):
        raise SinkFailure("disk full")

    def close(self):
        self.closed = True


def test_sink_failure_propagates():
    sink = _Broken()
    with pytest.raises(SinkFailure):
        run_chain(seed_triangulation("sphere2"), SamplerConfig(dim=2, gamma=0.2, steps=500, sample_interval=10,
                                                               burn_in=0), sink)
    assert sink.closed


# ---------------------------------------------------------------------------
# exact kernel rows: integrate the step kernel over a grid of its uniforms


def _kernel_row(sig, gamma, r, max_n, moves, L=840):
    from collections import defaultdict

    from pachner import _kernels as K
    from pachner.isosig import compute, decode
    from pachner.triangulation import Triangulation

    T = decode(sig)
    n, D1 = T.n, T.dim + 1
    gt = np.zeros((n + 8, D1), np.int64)
    gp = gt.copy()
    gt[:n], gp[:n] = T.gt, T.gp
    ot, op, ot2, op2 = (np.zeros_like(gt) for _ in range(4))
    info = np.zeros(4, np.int64)
    up, stay, down = (np.array(m, dtype=np.int64) for m in moves)
    alpha = math.exp(-gamma * n)
    atil = (1 - alpha) / r
    st_p = 1 - alpha - atil if len(stay) else 0.0
    bands = [(alpha / 2, alpha), (alpha + st_p + atil / 2, 1 - alpha - st_p)]
    if st_p:
        bands.append((alpha + st_p / 2, st_p))
    row = defaultdict(float)
    f0 = T.f_vector()[0]
    for u, pd in bands:
        args = (gamma, r, False, 0.0, up, stay, down, False, max_n, ot, op, ot2, op2, info)
        K.chain_step(gt, gp, n, f0, T.tables, u, 0.0, 0.0, 0.0, *args)
        m = int(info[2])
        for j in range(max(m, 0)):
            for wi in range(L):
                res = K.chain_step(gt, gp, n, f0, T.tables, u, (j + 0.5) / m, (wi + 0.5) / L, 0.0, *args)
                if res[0] == K.MOVED:
                    row[compute(Triangulation(T.dim, ot[: res[1]].copy(), op[: res[1]].copy()))] += pd / m / L
    return row


def test_kernel_matches_exact_matrix_on_small_spheres():
    from oracles import exact_transition_matrix
    from pachner.census import bfs_census

    gamma, r, max_n = 0.3, 2.0, 6
    cen = {n: bfs_census(seed_triangulation("sphere2"), n).members for n in (2, 4, 6)}
    states, M = exact_transition_matrix(cen, gamma, r, max_n)
    idx = {s: k for k, s in enumerate(states)}
    for k, s in enumerate(states):
        vec = np.zeros(len(states))
        for t, p in _kernel_row(s, gamma, r, max_n, ((0,), (1,), (2,))).items():
            vec[idx[t]] += p
        vec[k] += 1 - vec.sum()
        assert np.abs(vec - M[k]).max() < 1e-12, s


def test_one_vertex_kernel_detailed_balance():
    from pachner.isosig import decode

    gamma, r, max_n = 0.5, 1.0, 4
    rows, todo = {}, [seed_triangulation("sphere3_seed").isosig()]
    while todo:
        s = todo.pop()
        if s not in rows:
            rows[s] = _kernel_row(s, gamma, r, max_n, ((1,), (), (2,)))
            todo.extend(rows[s])
    assert len(rows) > 20
    for s, row in rows.items():
        n = decode(s).n
        for t, p in row.items():
            back = rows[t].get(s, 0.0) * p_ratio(n, decode(t).n - n, gamma, r, dim=3)
            assert p == pytest.approx(back, rel=1e-10)
