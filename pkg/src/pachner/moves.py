"""Bi-stellar moves.

An ``i``-move removes the ``i + 1`` facets around a ``(d - i)``-face and puts
back the ``d + 1 - i`` facets around a new ``i``-face.  Together the old and
new facets make up the boundary of a ``(d + 1)``-simplex; label its vertices
``0..d+1`` so that the move's face has the labels of its vertices in the first
facet and the extra label ``d + 1`` sits opposite that facet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import InvalidSite, TriangulationError
from .triangulation import Triangulation

# facet count change per move index
DELTA_N = {2: (2, 0, -2), 3: (3, 1, -1, -3)}


@dataclass(frozen=True)
class MoveSite:
    """An ``i``-move centred on the face spanned by ``vertices`` of ``facet``."""

    i: int
    facet: int
    vertices: tuple[int, ...]
    facets: tuple[int, ...] = ()

    @property
    def mask(self) -> int:
        return sum(1 << v for v in self.vertices)

    @property
    def face(self):
        """``(face dimension, facet, local vertices)`` of the centre face."""
        return (len(self.vertices) - 1, self.facet, self.vertices)


@dataclass(frozen=True)
class NeighbourSet:
    i: int
    members: tuple  # (isosig, Triangulation) pairs sorted by signature

    def __len__(self):
        return len(self.members)

    @property
    def signatures(self):
        return [s for s, _ in self.members]


def _star(T: Triangulation, facet: int, mask: int):
    D1 = T.dim + 1
    fac = np.empty(D1 + 1, dtype=np.int64)
    phi = np.empty((D1 + 1, D1 + 1), dtype=np.int64)
    ok = K.check_site(T.gt, T.gp, T.tables, facet, mask, fac, phi)
    return ok, fac, phi


def _raw_sites(T: Triangulation, i: int):
    if not 0 <= i <= T.dim:
        raise ValueError(f"move index must be in [0, {T.dim}]")
    size = T.n * (T.dim + 1)
    st = np.empty(size, dtype=np.int64)
    sm = np.empty(size, dtype=np.int64)
    c = K.list_sites(T.gt, T.gp, T.n, T.tables, i, st, sm)
    return st[:c], sm[:c]


def enumerate_sites(T: Triangulation, i: int) -> list[MoveSite]:
    """All places where an ``i``-move can be performed, one per face."""
    out = []
    D1 = T.dim + 1
    st, sm = _raw_sites(T, i)
    for t, m in zip(st, sm):
        ok, fac, phi = _star(T, int(t), int(m))
        if not ok:
            continue
        verts = tuple(v for v in range(D1) if (m >> v) & 1)
        star = [int(fac[b]) for b in range(D1 + 1) if b == D1 or not (m >> b) & 1]
        out.append(MoveSite(i, int(t), verts, tuple(star)))
    return out


def apply_with_inverse(T: Triangulation, site: MoveSite):
    """Perform the move; also return the site of the inverse move in the result."""
    D1 = T.dim + 1
    if not 0 <= site.facet < T.n or len(site.vertices) != D1 - site.i:
        raise InvalidSite(f"{site} does not fit this triangulation")
    mask = site.mask
    ok, fac, phi = _star(T, site.facet, mask)
    if not ok:
        raise InvalidSite(f"{site} is not a valid {site.i}-move site")
    nA = D1 - site.i
    n_new = T.n + nA - (D1 + 1 - nA)
    ot = np.empty((max(n_new, T.n), D1), dtype=np.int64)
    op = np.empty_like(ot)
    n1 = K.apply_site(T.gt, T.gp, T.n, T.tables, mask, fac, phi, ot, op)
    try:
        R = Triangulation(T.dim, ot[:n1], op[:n1])
    except TriangulationError as exc:
        raise InvalidSite(f"move at {site} does not give a valid triangulation: {exc}") from exc
    A = [x for x in range(D1) if (mask >> x) & 1]
    B = [x for x in range(D1 + 1) if x not in A]
    first = min(int(fac[b]) for b in B)
    a = A[0]
    inv_verts = tuple(sorted(b if b < a else b - 1 for b in B))
    return R, MoveSite(T.dim - site.i, first, inv_verts)


def apply(T: Triangulation, site: MoveSite) -> Triangulation:
    return apply_with_inverse(T, site)[0]


def neighbours(T: Triangulation, i: int, simplicial_only: bool = False) -> NeighbourSet:
    """Isomorphism types reachable by one ``i``-move, excluding ``T`` itself."""
    own = T.isosig()
    found = {}
    for site in enumerate_sites(T, i):
        R = apply(T, site)
        if simplicial_only and not R.is_simplicial():
            continue
        sig = R.isosig()
        if sig != own and sig not in found:
            found[sig] = R
    return NeighbourSet(i, tuple(sorted(found.items())))


def is_simplicial(T: Triangulation) -> bool:
    return T.is_simplicial()
