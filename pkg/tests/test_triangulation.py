import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pachner import Triangulation, build, seed_triangulation
from pachner.errors import FormatError, NonInvolutive, NotManifold, Unglued, UnsupportedKind, WrongDimension
from pachner.moves import apply, enumerate_sites
from pachner.triangulation import parse_gluing_list


def sphere2():
    return seed_triangulation("sphere2")


def test_two_triangle_sphere():
    T = build(2, 2, [(0, f, 1, (0, 1, 2)) for f in range(3)])
    assert tuple(T.f_vector()) == (3, 3, 2)
    assert T.euler_characteristic() == 2
    assert T.is_orientable()
    assert T.genus() == 0


def test_unglued_face_is_reported():
    with pytest.raises(Unglued) as exc:
        build(2, 2, [(0, 0, 1, (0, 1, 2)), (0, 1, 1, (0, 1, 2))])
    assert "face 2" in str(exc.value)


def test_inconsistent_pair_rejected():
    with pytest.raises(NonInvolutive):
        build(2, 2, [(0, f, 1, (0, 1, 2)) for f in range(3)] + [(1, 0, 0, (0, 2, 1))])


def test_self_identified_edge_is_not_a_manifold():
    # one triangle with two edges glued in a way that folds an edge onto itself
    with pytest.raises((NotManifold, NonInvolutive)):
        build(2, 2, [(0, 0, 0, (1, 0, 2)), (0, 2, 1, (0, 1, 2)), (1, 0, 1, (1, 0, 2)), (1, 1, 1, (0, 1, 2))])


def test_wrong_dimension():
    with pytest.raises(WrongDimension):
        Triangulation(4, np.zeros((1, 5)), np.zeros((1, 5)))


def test_seed_kinds():
    assert tuple(seed_triangulation("tetrahedron").f_vector()) == (4, 6, 4)
    torus = seed_triangulation("genus(1)")
    assert torus.n == 2 and torus.euler_characteristic() == 0 and torus.f_vector()[0] == 1
    g2 = seed_triangulation("genus(2)")
    assert g2.n == 6 and g2.euler_characteristic() == -2 and g2.f_vector()[0] == 1
    s3 = seed_triangulation("sphere3_min")
    assert s3.n == 1 and tuple(s3.f_vector()) == (1, 2, 2, 1)
    s3b = seed_triangulation("sphere3_seed")
    assert s3b.n == 2 and tuple(s3b.f_vector()) == (1, 3, 4, 2)
    with pytest.raises(UnsupportedKind):
        seed_triangulation("klein bottle")


def test_vertex_orbits_of_small_sphere():
    orbits = sphere2().face_orbits(0)
    assert len(orbits) == 3
    assert all(o.degree == 2 for o in orbits)


def test_one_vertex_three_sphere_orbits():
    T = seed_triangulation("sphere3_seed")
    orbits = T.face_orbits(0)
    assert len(orbits) == 1 and orbits[0].degree == 4 * T.n


def test_edge_histogram_of_two_tetrahedron_sphere():
    T = seed_triangulation("sphere3_seed")
    # counted by hand from the edge orbits
    orbits = T.face_orbits(1)
    hist = {}
    for o in orbits:
        hist[o.degree] = hist.get(o.degree, 0) + 1
    assert T.edge_degree_histogram() == hist
    assert sum(k * c for k, c in hist.items()) == 6 * T.n


def _grow3(T, steps, rng):
    for _ in range(steps):
        sites = enumerate_sites(T, 1)
        T = apply(T, sites[rng.integers(len(sites))])
    return T


def test_one_vertex_f_vector_and_mean_degree():
    rng = np.random.default_rng(1)
    T = _grow3(seed_triangulation("sphere3_seed"), 8, rng)
    assert T.n == 10
    assert tuple(T.f_vector()) == (1, 11, 20, 10)
    hist = T.edge_degree_histogram()
    total = sum(k * c for k, c in hist.items())
    assert total * 11 == 60 * sum(hist.values())


def test_simplicial_flags():
    assert seed_triangulation("tetrahedron").is_simplicial()
    assert not sphere2().is_simplicial()
    assert not seed_triangulation("sphere3_seed").is_simplicial()


def test_text_round_trip():
    T = seed_triangulation("genus(2)")
    assert parse_gluing_list(T.to_text()) == T
    with pytest.raises(FormatError):
        parse_gluing_list("dim 2\nfacets 2\n0 0 1 : 0 1 2\n")
    with pytest.raises(FormatError):
        parse_gluing_list("0 0 -> 1 : 0 1 2\n")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relabel_keeps_invariants(seed):
    rng = np.random.default_rng(seed)
    T = seed_triangulation("genus(1)")
    for _ in range(3):
        T = apply(T, enumerate_sites(T, 0)[rng.integers(T.n)])
    fp = [int(x) for x in rng.permutation(T.n)]
    vps = [[int(x) for x in rng.permutation(3)] for _ in range(T.n)]
    R = T.relabel(fp, vps)
    assert tuple(R.f_vector()) == tuple(T.f_vector())
    assert R.isosig() == T.isosig()
    assert sorted(R.degrees(0)) == sorted(T.degrees(0))
