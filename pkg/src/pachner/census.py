"""Exact small censuses of triangulations.

Two independent routes: closing a seed under 1-moves at fixed size (surfaces
only), and enumerating gluing tables directly.  The latter either runs
through every pairing of faces with every gluing map (``exhaustive``) or
generates tables already in breadth-first normal form (``orderly``).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _enum_kernels as EK
from ._tables import tables
from .errors import FormatError, TooLarge, WrongDimension
from .isosig import decode, encode_code
from .moves import apply, enumerate_sites, neighbours
from .triangulation import Triangulation


@dataclass(frozen=True)
class Census:
    dim: int
    descriptor: str
    n: int
    members: tuple[str, ...]
    complete: bool
    flags: tuple[str, ...] = field(default=())

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, sig):
        return sig in self.members


# ---------------------------------------------------------------------------
# homology


def _oriented_orbits(T: Triangulation, s: int):
    """Orbits of ``s``-vertex faces with a sign per incidence.

    Returns ``{(facet, sorted local vertices): (orbit, sign)}`` where the sign
    compares the increasing vertex order of the incidence with the order
    transported from the orbit's first incidence.
    """
    tb = T.tables
    D1 = T.dim + 1
    result = {}
    count = 0
    from itertools import combinations

    for t in range(T.n):
        for verts in combinations(range(D1), s):
            if (t, verts) in result:
                continue
            stack = [(t, verts)]
            result[(t, verts)] = (count, 1)
            while stack:
                u, ordered = stack.pop()
                for f in range(D1):
                    if f in ordered:
                        continue
                    t2 = int(T.gt[u, f])
                    p = int(T.gp[u, f])
                    img = tuple(int(tb.perms[p, x]) for x in ordered)
                    key = (t2, tuple(sorted(img)))
                    if key in result:
                        continue
                    result[key] = (count, _perm_sign(img))
                    stack.append((t2, img))
            count += 1
    return result, count


def _perm_sign(seq):
    sign = 1
    seq = list(seq)
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign = -sign
    return sign


def _boundary_matrix(T: Triangulation, s: int):
    """Cellular boundary from ``s``-vertex faces to ``(s-1)``-vertex faces."""
    hi, nh = _oriented_orbits(T, s)
    lo, nl = _oriented_orbits(T, s - 1)
    M = np.zeros((nl, nh), dtype=np.int64)
    done = set()
    for (t, verts), (o, sg) in hi.items():
        if o in done:
            continue
        done.add(o)
        # boundary of the incidence in its own increasing order, times the sign
        for k in range(s):
            sub = verts[:k] + verts[k + 1 :]
            lo_o, lo_sg = lo[(t, sub)]
            M[lo_o, o] += sg * lo_sg * (-1) ** k
    return M


def first_homology(T: Triangulation) -> tuple[int, tuple[int, ...]]:
    """``H_1`` as ``(free rank, torsion coefficients)``."""
    from sympy import Matrix
    from sympy.matrices.normalforms import invariant_factors

    d1 = _boundary_matrix(T, 2)
    d2 = _boundary_matrix(T, 3)
    r1 = Matrix(d1).rank() if d1.size else 0
    if d2.size and np.any(d2):
        factors = [abs(int(x)) for x in invariant_factors(Matrix(d2)) if int(x) != 0]
    else:
        factors = []
    free = d1.shape[1] - r1 - len(factors)
    return free, tuple(sorted(x for x in factors if x > 1))


def is_homology_sphere_candidate(T: Triangulation) -> bool:
    return T.dim == 3 and first_homology(T) == (0, ())


# ---------------------------------------------------------------------------
# predicates


def _surface_predicate(chi: int, orientable: bool | None, simplicial: bool = False):
    def pred(T):
        if T.dim != 2 or T.euler_characteristic() != chi:
            return False
        if orientable is not None and T.is_orientable() != orientable:
            return False
        return not simplicial or T.is_simplicial()

    return pred


def resolve_predicate(name: str | None):
    """Map a predicate name to ``(callable, kernel filters, flags)``.

    Kernel filters are ``(orient, chi, f0)`` used to cut the search early;
    the callable is always re-applied to the survivors.
    """
    import re

    if name is None or name == "all":
        return (lambda T: True), (-1, EK.NO_CHI, -1), ()
    key = name.strip().lower()
    if key in ("sphere2", "genus(0)"):
        return _surface_predicate(2, True), (1, 2, -1), ()
    if key == "simplicial_sphere2":
        return _surface_predicate(2, True, True), (1, 2, -1), ()
    m = re.match(r"^genus\s*\(?(\d+)\)?$", key)
    if m:
        chi = 2 - 2 * int(m.group(1))
        return _surface_predicate(chi, True), (1, chi, -1), ()
    if key in ("sphere3_candidate", "one_vertex_sphere3"):
        return (lambda T: T.f_vector()[0] == 1 and is_homology_sphere_candidate(T)), (1, 0, 1), ("candidate",)
    if key == "homology_sphere3":
        return is_homology_sphere_candidate, (1, 0, -1), ("candidate",)
    raise ValueError(f"unknown predicate {name!r}")


# ---------------------------------------------------------------------------
# censuses


def brute_force_census(
    dim: int,
    n: int,
    predicate: str | Callable | None = None,
    method: str = "orderly",
    max_slots: int = 16,
    max_tables: float = 1e9,
) -> Census:
    """Enumerate gluing tables of ``n`` facets and keep valid ones passing ``predicate``.

    ``predicate`` is a name understood by :func:`resolve_predicate` or a
    callable on triangulations.
    """
    if dim not in (2, 3):
        raise WrongDimension(f"dimension must be 2 or 3, got {dim}")
    if (dim + 1) * n > max_slots:
        raise TooLarge(f"{(dim + 1) * n} face slots exceed the limit of {max_slots}")
    if (dim + 1) * n % 2:
        return Census(dim, _descriptor(predicate), n, (), True)
    if callable(predicate):
        pred, filt, flags = predicate, (-1, EK.NO_CHI, -1), ()
    else:
        pred, filt, flags = resolve_predicate(predicate)
    tb = tables(dim)
    if method == "exhaustive":
        slots = (dim + 1) * n
        pairings = 1
        for k in range(slots - 1, 0, -2):
            pairings *= k
        raw = pairings * float(math.factorial(dim)) ** (slots // 2)
        if raw > max_tables:
            raise TooLarge(f"{raw:.3g} raw gluing tables exceed the limit of {max_tables:.3g}")
        codes, _ = EK.exhaustive(n, tb, *filt)
    elif method == "orderly":
        codes, _ = EK.orderly(n, tb, *filt, filt[0] == 1)
    else:
        raise ValueError(f"unknown method {method!r}")
    sigs = sorted({encode_code(dim, n, c) for c in codes})
    members = tuple(s for s in sigs if pred(decode(s)))
    return Census(dim, _descriptor(predicate), n, members, True, flags)


def _descriptor(predicate):
    if predicate is None:
        return "all"
    if callable(predicate):
        return getattr(predicate, "__name__", "custom")
    return str(predicate)


def grow_to(T: Triangulation, n: int) -> Triangulation:
    """Apply 0-moves (at the first facet) until ``T`` has ``n`` facets."""
    step = {2: 2, 3: 3}[T.dim]
    if T.n > n or (n - T.n) % step:
        raise ValueError(f"cannot reach {n} facets from {T.n} by 0-moves")
    while T.n < n:
        T = apply(T, enumerate_sites(T, 0)[0])
    return T


def bfs_census(seed_T: Triangulation, n: int | None = None, descriptor: str | None = None) -> Census:
    """Close a surface triangulation under 1-moves (flips)."""
    if seed_T.dim != 2:
        raise WrongDimension("flip-graph censuses are implemented for surfaces only")
    T = seed_T if n is None else grow_to(seed_T, n)
    seen = {T.isosig()}
    frontier = [T.isosig()]
    while frontier:
        nxt = []
        for sig in frontier:
            for s, _ in neighbours(decode(sig), 1).members:
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
    if descriptor is None:
        chi = T.euler_characteristic()
        descriptor = f"genus({(2 - chi) // 2})" if T.is_orientable() else f"chi({chi})"
    return Census(2, descriptor, T.n, tuple(sorted(seen)), True)


# ---------------------------------------------------------------------------
# files


def write_census(census: Census, path) -> None:
    flags = ",".join(census.flags) or "-"
    header = (
        f"# census dim={census.dim} descriptor={census.descriptor} n={census.n} "
        f"complete={str(census.complete).lower()} count={len(census)} flags={flags}"
    )
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(header + "\n")
        for s in census.members:
            fh.write(s + "\n")
    os.replace(tmp, path)


def read_census(path) -> Census:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# census"):
        raise FormatError(f"{path}: missing census header")
    fields = dict(w.split("=", 1) for w in lines[0].split()[2:])
    try:
        dim, n, count = int(fields["dim"]), int(fields["n"]), int(fields["count"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad census header") from exc
    members = tuple(lines[1:])
    if len(members) != count:
        raise FormatError(f"{path}: header says {count} members, found {len(members)}")
    flags = () if fields.get("flags", "-") == "-" else tuple(fields["flags"].split(","))
    return Census(dim, fields.get("descriptor", "all"), n, members, fields.get("complete") == "true", flags)
