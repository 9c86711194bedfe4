"""Independent reference computations used by the tests.

These work on plain gluing dictionaries and never touch the compiled move,
canonical-form or chain code.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def table_of(T):
    """``{(t, f): (t2, images)}`` from a triangulation object."""
    from pachner._tables import perm_images

    return {
        (t, f): (int(T.gt[t, f]), perm_images(T.dim, int(T.gp[t, f])))
        for t in range(T.n)
        for f in range(T.dim + 1)
    }


def from_table(dim, n, tab):
    from pachner.triangulation import Triangulation

    return Triangulation.from_gluings(dim, n, [(t, f, t2, p) for (t, f), (t2, p) in tab.items()])


def find_isomorphism(X, Y):
    """Facet bijection plus vertex relabellings carrying X onto Y, or None.

    Once facet 0 of X is placed, connectivity forces every other facet, so
    trying all placements of facet 0 is exhaustive.
    """
    if X.dim != Y.dim or X.n != Y.n:
        return None
    D1 = X.dim + 1
    tx, ty = table_of(X), table_of(Y)
    for target in range(Y.n):
        for sigma in itertools.permutations(range(D1)):
            fmap = {0: (target, sigma)}
            used = {target}
            stack = [0]
            ok = True
            while stack and ok:
                t = stack.pop()
                yt, s = fmap[t]
                for f in range(D1):
                    t2, p = tx[(t, f)]
                    yt2, q = ty[(yt, s[f])]
                    s2 = [None] * D1
                    for v in range(D1):
                        s2[p[v]] = q[s[v]]
                    s2 = tuple(s2)
                    if t2 in fmap:
                        if fmap[t2] != (yt2, s2):
                            ok = False
                            break
                    elif yt2 in used:
                        ok = False
                        break
                    else:
                        fmap[t2] = (yt2, s2)
                        used.add(yt2)
                        stack.append(t2)
            if ok and len(fmap) == X.n:
                return fmap
    return None


def brute_canonical(T):
    """Least flattened table over every facet order and vertex relabelling.

    Only feasible for a handful of facets; used to cross-check canonicity.
    """
    D1 = T.dim + 1
    tab = table_of(T)
    best = None
    for order in itertools.permutations(range(T.n)):
        pos = {t: k for k, t in enumerate(order)}
        for sigmas in itertools.product(itertools.permutations(range(D1)), repeat=T.n):
            flat = []
            for k, t in enumerate(order):
                s = sigmas[k]
                sinv = [0] * D1
                for v in range(D1):
                    sinv[s[v]] = v
                for fn in range(D1):
                    t2, p = tab[(t, sinv[fn])]
                    s2 = sigmas[pos[t2]]
                    flat.append(pos[t2])
                    flat.extend(s2[p[sinv[v]]] for v in range(D1))
            flat = tuple(flat)
            if best is None or flat < best:
                best = flat
    return best


def _rewire(tab, n, outer, dim):
    """Replace facets using ``outer``: new (facet, face) -> (old facet, old face, lam).

    ``lam`` maps the new facet's local labels to the old facet's labels.
    Entries of ``tab`` touching replaced faces are redirected.
    """
    by_old = {(o, of): (nf, nface, lam) for (nf, nface), (o, of, lam) in outer.items()}
    new = {k: v for k, v in tab.items() if k not in by_old}
    for (nf, nface), (o, of, lam) in outer.items():
        t3, q = tab[(o, of)]
        f3 = q[of]
        if (t3, f3) in by_old:
            nf2, nface2, lam2 = by_old[(t3, f3)]
            inv2 = {lam2[v]: v for v in range(dim + 1)}
            images = tuple(inv2[q[lam[v]]] for v in range(dim + 1))
            new[(nf, nface)] = (nf2, images)
        else:
            images = tuple(q[lam[v]] for v in range(dim + 1))
            new[(nf, nface)] = (t3, images)
            inv = [0] * (dim + 1)
            for v in range(dim + 1):
                inv[images[v]] = v
            new[(t3, f3)] = (nf, tuple(inv))
    return new


def flip_results(T):
    """Results of every edge flip of a surface (edges between distinct triangles)."""
    tab = table_of(T)
    out = []
    for (t, f), (t2, p) in sorted(tab.items()):
        f2 = p[f]
        if t == t2 or (t, f) > (t2, f2):
            continue
        a, b = [v for v in range(3) if v != f]
        c, e = f, f2
        # X = (c, e, a) in slot t, Y = (c, e, b) in slot t2
        outer = {
            (t, 1): (t, b, (c, b, a)),
            (t, 0): (t2, p[b], (p[b], e, p[a])),
            (t2, 1): (t, a, (c, a, b)),
            (t2, 0): (t2, p[a], (p[a], e, p[b])),
        }
        new = _rewire(tab, T.n, outer, 2)
        new[(t, 2)] = (t2, (0, 1, 2))
        new[(t2, 2)] = (t, (0, 1, 2))
        out.append(from_table(2, T.n, new))
    return out


def subdivide_results(T):
    """Results of the 1-3 subdivision of every triangle."""
    tab = table_of(T)
    out = []
    n = T.n
    for t in range(n):
        # new facets: slot t gets vertex 0 replaced by the centre, n and n+1 replace 1 and 2
        slots = {0: t, 1: n, 2: n + 1}
        outer = {}
        for k in range(3):
            # facet N_k = triangle with old vertex k replaced by the new centre;
            # its face opposite the centre (local k) is the old face k of t
            outer[(slots[k], k)] = (t, k, (0, 1, 2))
        new = _rewire(tab, n + 2, outer, 2)
        for k in range(3):
            for j in range(3):
                if j != k:
                    # faces of N_k opposite old vertex j: shared with N_j, identity labels
                    new[(slots[k], j)] = (slots[j], _swap(k, j))
        out.append(from_table(2, n + 2, new))
    return out


def _swap(k, j):
    s = [0, 1, 2]
    s[k], s[j] = j, k
    return tuple(s)


def _key(T):
    return T.isosig()


def exact_transition_matrix(census_by_n, gamma, r, max_n):
    """Transition matrix of the accept-all surface chain over a complete census.

    Neighbour types come from :func:`flip_results` and
    :func:`subdivide_results`; vertex removals are the reverse of
    subdivisions, read off from the census because it is complete.
    """
    from pachner.isosig import decode

    states = [s for n in sorted(census_by_n) for s in census_by_n[n]]
    index = {s: k for k, s in enumerate(states)}
    N = len(states)
    M = np.zeros((N, N))
    up = {}
    flips = {}
    for s in states:
        T = decode(s)
        up[s] = sorted({_key(R) for R in subdivide_results(T)}) if T.n + 2 <= max_n else None
        flips[s] = sorted({_key(R) for R in flip_results(T)} - {s})
    down = {s: [] for s in states}
    for s in states:
        for s2 in up[s] or ():
            down[s2].append(s)
    for s in states:
        T = decode(s)
        n = T.n
        chi = 2
        alpha = math.exp(-gamma * n)
        atil = (1 - alpha) / r
        stay = 1 - alpha - atil
        k = index[s]
        if up[s] is not None:
            m = n
            for s2 in up[s]:
                M[k, index[s2]] += alpha / m
        m = 3 * n // 2
        for s2 in flips[s]:
            M[k, index[s2]] += stay / m
        m = n - 2
        for s2 in sorted(set(down[s])):
            M[k, index[s2]] += atil / m
        assert M[k].sum() <= 1 + 1e-12
        M[k, k] += 1 - M[k].sum()
    return states, M


def stationary(M):
    w, v = np.linalg.eig(M.T)
    k = int(np.argmin(np.abs(w - 1)))
    pi = np.real(v[:, k])
    return pi / pi.sum()
