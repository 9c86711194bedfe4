"""Closed triangulations stored as facet gluing tables.

Facets and face indices are 0-based.  Face ``f`` of a facet is the face
opposite its local vertex ``f``; a gluing ``(t', p)`` on that face sends local
vertex ``v`` to local vertex ``p[v]`` of ``t'`` and therefore face ``f`` onto
face ``p[f]`` of ``t'``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from ._tables import perm_images, perm_index, tables
from .errors import (
    FormatError,
    NonInvolutive,
    NotManifold,
    TriangulationError,
    Unglued,
    UnsupportedKind,
    WrongDimension,
)


@dataclass(frozen=True)
class Gluing:
    target: int
    images: tuple[int, ...]


@dataclass(frozen=True)
class FaceOrbit:
    """One equivalence class of ``dim_face``-faces under the gluings."""

    dim_face: int
    members: tuple[tuple[int, tuple[int, ...]], ...]

    @property
    def degree(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class FVector:
    counts: tuple[int, ...]

    def __getitem__(self, k):
        return self.counts[k]

    def __iter__(self):
        return iter(self.counts)

    def __len__(self):
        return len(self.counts)

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** k * c for k, c in enumerate(self.counts))


def _check_dim(dim):
    if dim not in (2, 3):
        raise WrongDimension(f"dimension must be 2 or 3, got {dim}")


class Triangulation:
    """An immutable, validated closed triangulation.

    ``gt[t, f]`` is the facet glued to face ``f`` of ``t`` and ``gp[t, f]``
    the index of the gluing permutation (lexicographic numbering, see
    :func:`pachner._tables.perm_images`).
    """

    __slots__ = ("dim", "n", "gt", "gp", "_cache")

    def __init__(self, dim: int, gt, gp, validate: bool = True):
        _check_dim(dim)
        gt = np.array(gt, dtype=np.int64, copy=True)
        gp = np.array(gp, dtype=np.int64, copy=True)
        if gt.ndim != 2 or gt.shape != gp.shape or gt.shape[1] != dim + 1 or gt.shape[0] < 1:
            raise TriangulationError(f"gluing arrays must have shape (n, {dim + 1})")
        gt.setflags(write=False)
        gp.setflags(write=False)
        self.dim = dim
        self.n = gt.shape[0]
        self.gt = gt
        self.gp = gp
        self._cache = {}
        if validate:
            self._validate()

    @property
    def tables(self):
        return tables(self.dim)

    def _validate(self):
        code, a, b = K.validate(self.gt, self.gp, self.n, self.tables)
        if code == 0:
            return
        if code == 1:
            raise Unglued(f"face {b} of facet {a} is not glued")
        if code == 2:
            raise NonInvolutive(f"gluing on face {b} of facet {a} is not matched by its inverse")
        if code == 3:
            raise NonInvolutive(f"face {b} of facet {a} is glued to itself")
        if code == 4:
            raise TriangulationError("triangulation is not connected")
        if code == 5:
            verts = tuple(v for v in range(self.dim + 1) if (b >> v) & 1)
            raise NotManifold(
                f"face {verts} of facet {a} is identified with itself under a non-identity map",
                orbit=(len(verts) - 1, int(a), verts),
            )
        raise NotManifold(
            f"link of vertex {b} of facet {a} is not a {self.dim - 1}-sphere", orbit=(0, int(a), (int(b),))
        )

    # construction -----------------------------------------------------

    @classmethod
    def from_gluings(cls, dim: int, n: int, gluings: Iterable) -> "Triangulation":
        """Build from ``(t, f, t2, images)`` entries.

        Each gluing may be listed once or in both directions; listed pairs
        must agree with each other.
        """
        _check_dim(dim)
        if n < 1:
            raise TriangulationError("need at least one facet")
        D1 = dim + 1
        gt = np.full((n, D1), -1, dtype=np.int64)
        gp = np.full((n, D1), -1, dtype=np.int64)
        tb = tables(dim)

        def put(t, f, t2, p):
            if gt[t, f] >= 0 and (gt[t, f] != t2 or gp[t, f] != p):
                raise NonInvolutive(f"face {f} of facet {t} is assigned twice inconsistently")
            gt[t, f] = t2
            gp[t, f] = p

        for entry in gluings:
            t, f, t2, images = entry
            t, f, t2 = int(t), int(f), int(t2)
            if not (0 <= t < n and 0 <= t2 < n and 0 <= f < D1):
                raise TriangulationError(f"gluing {entry!r} refers to a missing facet or face")
            p = perm_index(dim, images)
            put(t, f, t2, p)
            put(t2, int(tb.perms[p, f]), t, int(tb.inv[p]))
        return cls(dim, gt, gp)

    @classmethod
    def from_facets(cls, dim: int, facets: Sequence[Sequence], extra: Iterable = ()) -> "Triangulation":
        """Build from facets given as vertex-label tuples.

        Faces with identical label sets are glued along matching labels.
        ``extra`` lists further identifications ``(t, x, t2, y, corr)`` gluing
        the face of ``t`` opposite local ``x`` to the face of ``t2`` opposite
        local ``y``, with ``corr`` mapping labels of the first to the second.
        """
        D1 = dim + 1
        gl = []
        corr_used = set()
        for t, x, t2, y, corr in extra:
            images = [0] * D1
            images[x] = y
            for v in range(D1):
                if v != x:
                    images[v] = list(facets[t2]).index(corr[facets[t][v]])
            gl.append((t, x, t2, images))
            corr_used.add((t, x))
            corr_used.add((t2, y))
        byface = {}
        for t, fv in enumerate(facets):
            for x in range(D1):
                if (t, x) in corr_used:
                    continue
                key = frozenset(fv[v] for v in range(D1) if v != x)
                byface.setdefault(key, []).append((t, x))
        for key, inc in byface.items():
            if len(inc) != 2:
                raise Unglued(f"face {sorted(key)} appears {len(inc)} times")
            (t, x), (t2, y) = inc
            images = [0] * D1
            images[x] = y
            for v in range(D1):
                if v != x:
                    images[v] = list(facets[t2]).index(facets[t][v])
            gl.append((t, x, t2, images))
        return cls.from_gluings(dim, len(facets), gl)

    # accessors --------------------------------------------------------

    def gluing(self, t: int, f: int) -> Gluing:
        return Gluing(int(self.gt[t, f]), perm_images(self.dim, int(self.gp[t, f])))

    def gluings(self):
        """Each gluing once, as ``(t, f, t2, images)`` with (t, f) < (t2, f2)."""
        tb = self.tables
        out = []
        for t in range(self.n):
            for f in range(self.dim + 1):
                t2 = int(self.gt[t, f])
                p = int(self.gp[t, f])
                f2 = int(tb.perms[p, f])
                if (t, f) < (t2, f2):
                    out.append((t, f, t2, perm_images(self.dim, p)))
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Triangulation)
            and self.dim == other.dim
            and np.array_equal(self.gt, other.gt)
            and np.array_equal(self.gp, other.gp)
        )

    def __hash__(self):
        return hash((self.dim, self.gt.tobytes(), self.gp.tobytes()))

    def __repr__(self):
        return f"Triangulation(dim={self.dim}, n={self.n}, f={tuple(self.f_vector())})"

    # invariants -------------------------------------------------------

    def f_vector(self) -> FVector:
        if "f" not in self._cache:
            fv = K.f_vector(self.gt, self.gp, self.n, self.tables)
            self._cache["f"] = FVector(tuple(int(x) for x in fv))
        return self._cache["f"]

    def euler_characteristic(self) -> int:
        return self.f_vector().euler_characteristic

    def face_orbits(self, i: int) -> list[FaceOrbit]:
        if not 0 <= i < self.dim:
            raise ValueError(f"face dimension must be in [0, {self.dim})")
        tb = self.tables
        s = i + 1
        orb, deg, _, _, _, _ = K.orbit_arrays(self.gt, self.gp, self.n, tb, s, False)
        members = [[] for _ in range(len(deg))]
        for t in range(self.n):
            for k in range(int(tb.nmask[s])):
                m = int(tb.masks[s, k])
                verts = tuple(v for v in range(self.dim + 1) if (m >> v) & 1)
                members[int(orb[t, k])].append((t, verts))
        return [FaceOrbit(i, tuple(mm)) for mm in members]

    def degrees(self, i: int | None = None) -> np.ndarray:
        """Degrees of the faces of dimension ``i`` (default codimension 2)."""
        if i is None:
            i = self.dim - 2
        _, deg, _, _, _, _ = K.orbit_arrays(self.gt, self.gp, self.n, self.tables, i + 1, False)
        return deg

    def edge_degree_histogram(self) -> dict[int, int]:
        if self.dim != 3:
            raise WrongDimension("edge-degree histograms are defined for d=3")
        return dict(sorted(Counter(int(x) for x in self.degrees(1)).items()))

    def is_orientable(self) -> bool:
        return bool(K.is_orientable(self.gt, self.gp, self.n, self.tables))

    def is_simplicial(self) -> bool:
        return bool(K.is_simplicial(self.gt, self.gp, self.n, self.tables))

    def genus(self) -> int:
        if self.dim != 2:
            raise WrongDimension("genus is defined for surfaces")
        chi = self.euler_characteristic()
        return (2 - chi) // 2 if self.is_orientable() else 2 - chi

    def isosig(self) -> str:
        if "sig" not in self._cache:
            from .isosig import compute

            self._cache["sig"] = compute(self)
        return self._cache["sig"]

    def relabel(self, facet_perm: Sequence[int], vertex_perms: Sequence[Sequence[int]]) -> "Triangulation":
        """Rename facet ``t`` to ``facet_perm[t]`` and its local vertex ``v`` to ``vertex_perms[t][v]``."""
        tb = self.tables
        D1 = self.dim + 1
        gt = np.empty_like(self.gt)
        gp = np.empty_like(self.gp)
        sig = [perm_index(self.dim, vp) for vp in vertex_perms]
        for t in range(self.n):
            for f in range(D1):
                t2 = int(self.gt[t, f])
                p = int(self.gp[t, f])
                q = tb.comp[sig[t2], tb.comp[p, tb.inv[sig[t]]]]
                nt = facet_perm[t]
                gt[nt, vertex_perms[t][f]] = facet_perm[t2]
                gp[nt, vertex_perms[t][f]] = q
        return Triangulation(self.dim, gt, gp, validate=False)

    # text format ------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"dim {self.dim}", f"facets {self.n}"]
        for t, f, t2, images in self.gluings():
            lines.append(f"{t} {f} -> {t2} : " + " ".join(str(x) for x in images))
        return "\n".join(lines) + "\n"


build = Triangulation.from_gluings

_LINE = re.compile(r"^(\d+)\s+(\d+)\s*->\s*(\d+)\s*:\s*((?:\d+\s*)+)$")


def parse_gluing_list(text: str) -> Triangulation:
    """Parse the gluing-list format written by :meth:`Triangulation.to_text`."""
    dim = n = None
    gl = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] == "dim" and len(words) == 2:
            dim = int(words[1])
            continue
        if words[0] == "facets" and len(words) == 2:
            n = int(words[1])
            continue
        m = _LINE.match(line)
        if not m:
            raise FormatError(f"line {lineno}: cannot parse {raw!r}")
        images = tuple(int(x) for x in m.group(4).split())
        gl.append((int(m.group(1)), int(m.group(2)), int(m.group(3)), images))
    if dim is None or n is None:
        raise FormatError("missing 'dim' or 'facets' header")
    for entry in gl:
        if len(entry[3]) != dim + 1:
            raise FormatError(f"gluing {entry} needs {dim + 1} images")
    return Triangulation.from_gluings(dim, n, gl)


def read_gluing_list(path) -> Triangulation:
    with open(path) as fh:
        return parse_gluing_list(fh.read())


# seeds ----------------------------------------------------------------

# One-vertex 3-spheres found by exhaustive search over all gluings (n=1, 2);
# the second one has a 2-3 move site, the first has none.
_SPHERE3_MIN = [(0, 0, 0, (1, 0, 2, 3)), (0, 2, 0, (1, 2, 3, 0))]
_SPHERE3_SEED = [
    (0, 0, 1, (0, 1, 2, 3)),
    (0, 1, 0, (0, 2, 1, 3)),
    (0, 3, 1, (1, 0, 3, 2)),
    (1, 1, 1, (0, 3, 2, 1)),
]


def _polygon_surface(g: int) -> Triangulation:
    """Fan triangulation of the 4g-gon with word a1 b1 a1^-1 b1^-1 ..."""
    N = 4 * g
    facets = [(0, k, k + 1) for k in range(1, N - 1)]

    def edge_site(j):
        # boundary edge (j, j+1 mod N) as (triangle, opposite local vertex)
        if j == 0:
            return 0, 2
        if j == N - 1:
            return N - 3, 1
        return j - 1, 0

    extra = []
    for h in range(g):
        base = 4 * h
        # a: edge (base, base+1) ~ edge (base+3, base+2); b: (base+1, base+2) ~ (base+4, base+3)
        for j, j2, corr in (
            (base, base + 2, {base: base + 3, base + 1: base + 2}),
            (base + 1, base + 3, {base + 1: (base + 4) % N, base + 2: base + 3}),
        ):
            t, x = edge_site(j)
            t2, y = edge_site(j2)
            extra.append((t, x, t2, y, corr))
    return Triangulation.from_facets(2, facets, extra)


_GENUS = re.compile(r"^genus\s*[(:]?\s*(\d+)\s*\)?$")


def seed_triangulation(kind: str) -> Triangulation:
    """Standard starting triangulations.

    ``sphere2`` (2 triangles), ``genus(g)`` (one-vertex 4g-2 triangles),
    ``tetrahedron`` (boundary of the 3-simplex, simplicial 2-sphere),
    ``sphere3_min`` (one tetrahedron, one vertex) and ``sphere3_seed``
    (two tetrahedra, one vertex, admits a 2-3 move).
    """
    kind = str(kind).strip().lower()
    if kind in ("sphere2", "genus(0)", "genus0", "genus:0"):
        return Triangulation.from_gluings(2, 2, [(0, f, 1, (0, 1, 2)) for f in range(3)])
    if kind in ("tetrahedron", "simplicial_sphere2"):
        return Triangulation.from_facets(2, [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])
    if kind == "sphere3_min":
        return Triangulation.from_gluings(3, 1, _SPHERE3_MIN)
    if kind == "sphere3_seed":
        return Triangulation.from_gluings(3, 2, _SPHERE3_SEED)
    m = _GENUS.match(kind)
    if m:
        g = int(m.group(1))
        return _polygon_surface(g) if g > 0 else seed_triangulation("sphere2")
    raise UnsupportedKind(f"unknown seed kind {kind!r}")
