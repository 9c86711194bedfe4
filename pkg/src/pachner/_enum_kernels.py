"""Compiled enumeration of gluing tables for small censuses."""

import numpy as np
from numba import njit

from ._kernels import canonical, f_vector, is_orientable, start_code, validate

NO_CHI = -(10**6)


@njit(cache=True)
def _accept(gt, gp, n, tb, orient, chi, f0):
    if validate(gt, gp, n, tb)[0] != 0:
        return False
    if orient >= 0 and is_orientable(gt, gp, n, tb) != (orient == 1):
        return False
    if chi != NO_CHI or f0 >= 0:
        fv = f_vector(gt, gp, n, tb)
        if f0 >= 0 and fv[0] != f0:
            return False
        if chi != NO_CHI:
            e = 0
            for k in range(fv.shape[0]):
                e += fv[k] if k % 2 == 0 else -fv[k]
            if e != chi:
                return False
    return True


@njit(cache=True)
def _emit(gt, gp, n, tb, out, count):
    """Store the canonical code if this table is already in canonical BFS form."""
    best, aut, ops = canonical(gt, gp, n, tb)
    mine, r = start_code(gt, gp, n, tb, 0, 0)
    for k in range(best.shape[0]):
        if best[k] != mine[k]:
            return out, count
    if count == out.shape[0]:
        bigger = np.empty((2 * out.shape[0] + 16, out.shape[1]), dtype=np.int64)
        bigger[:count] = out[:count]
        out = bigger
    out[count] = best
    return out, count + 1


@njit(cache=True)
def orderly(n, tb, orient, chi, f0, prune_orient):
    """Generate every table in breadth-first normal form and keep canonical ones.

    Returns ``(codes, leaves)``: one code per isomorphism class passing the
    filters, and the number of complete tables examined.
    """
    D1 = tb.D1
    P = tb.P
    S = n * D1
    gt = np.full((n, D1), -1, dtype=np.int64)
    gp = np.full((n, D1), -1, dtype=np.int64)
    o = np.zeros(n, dtype=np.int64)
    lk = np.empty(S, dtype=np.int64)
    lj = np.empty(S, dtype=np.int64)
    lc = np.empty(S, dtype=np.int64)
    lt = np.empty(S, dtype=np.int64)
    lf = np.empty(S, dtype=np.int64)
    out = np.empty((16, S // 2), dtype=np.int64)
    count = 0
    leaves = 0
    nl = 1
    o[0] = 1
    L = 1
    lk[0] = 0
    lj[0] = 0
    lc[0] = -1
    lt[0] = -1
    while L > 0:
        top = L - 1
        k = lk[top]
        j = lj[top]
        if lt[top] >= 0:
            t2 = lt[top]
            j2 = lf[top]
            gt[k, j] = -1
            gt[t2, j2] = -1
            if lc[top] == 0:
                nl -= 1
                o[t2] = 0
            lt[top] = -1
        c = lc[top] + 1
        chosen = False
        limit = 1 + (nl - k) * P
        while c < limit:
            if c == 0:
                if nl < n:
                    chosen = True
                    break
            else:
                v = c - 1
                t2 = k + v // P
                q = v % P
                j2 = tb.perms[q, j]
                if (t2 > k or j2 > j) and gt[t2, j2] < 0:
                    if not prune_orient or o[t2] == -tb.sign[q] * o[k]:
                        chosen = True
                        break
            c += 1
        lc[top] = c
        if not chosen:
            L -= 1
            continue
        if c == 0:
            t2 = nl
            j2 = j
            q = 0
            nl += 1
            o[t2] = -o[k]
        else:
            v = c - 1
            t2 = k + v // P
            q = v % P
            j2 = tb.perms[q, j]
        gt[k, j] = t2
        gp[k, j] = q
        gt[t2, j2] = k
        gp[t2, j2] = tb.inv[q]
        lt[top] = t2
        lf[top] = j2
        kk = k
        jj = j
        while kk < nl and gt[kk, jj] >= 0:
            jj += 1
            if jj == D1:
                jj = 0
                kk += 1
        if kk == nl:
            if nl == n:
                leaves += 1
                if _accept(gt, gp, n, tb, orient, chi, f0):
                    out, count = _emit(gt, gp, n, tb, out, count)
            continue
        lk[L] = kk
        lj[L] = jj
        lc[L] = -1
        lt[L] = -1
        L += 1
    return out[:count], leaves


@njit(cache=True)
def exhaustive(n, tb, orient, chi, f0):
    """Run through every pairing of faces and every map of each pair.

    Returns ``(codes, tables)`` like :func:`orderly`; codes may repeat.
    """
    D1 = tb.D1
    S = n * D1
    half = S // 2
    mate = np.full(S, -1, dtype=np.int64)
    first = np.empty(half, dtype=np.int64)
    choice = np.empty(half, dtype=np.int64)
    gt = np.empty((n, D1), dtype=np.int64)
    gp = np.empty((n, D1), dtype=np.int64)
    out = np.empty((16, half), dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    maps = np.empty(half, dtype=np.int64)
    # the permutations sending face index a to face index b
    per = tb.P // D1
    opts = np.empty((D1, D1, per), dtype=np.int64)
    fill = np.zeros((D1, D1), dtype=np.int64)
    for q in range(tb.P):
        for a in range(D1):
            b = tb.perms[q, a]
            opts[a, b, fill[a, b]] = q
            fill[a, b] += 1
    count = 0
    total = 0
    level = 0
    choice[0] = -1
    while level >= 0:
        if level == half:
            # connectivity depends on the pairing only
            for t in range(n):
                parent[t] = t
            comps = n
            for s in range(half):
                a = first[s] // D1
                b = mate[first[s]] // D1
                while parent[a] != a:
                    a = parent[a]
                while parent[b] != b:
                    b = parent[b]
                if a != b:
                    parent[a] = b
                    comps -= 1
            if comps == 1:
                for s in range(half):
                    maps[s] = 0
                while True:
                    for s in range(half):
                        x = first[s]
                        y = mate[x]
                        fa = x % D1
                        fb = y % D1
                        q = opts[fa, fb, maps[s]]
                        gt[x // D1, fa] = y // D1
                        gp[x // D1, fa] = q
                        gt[y // D1, fb] = x // D1
                        gp[y // D1, fb] = tb.inv[q]
                    total += 1
                    if _accept(gt, gp, n, tb, orient, chi, f0):
                        out, count = _emit(gt, gp, n, tb, out, count)
                    s = 0
                    while s < half:
                        maps[s] += 1
                        if maps[s] < per:
                            break
                        maps[s] = 0
                        s += 1
                    if s == half:
                        break
            level -= 1
            continue
        if choice[level] >= 0:
            x = first[level]
            mate[mate[x]] = -1
            mate[x] = -1
        else:
            x = 0
            while mate[x] >= 0:
                x += 1
            first[level] = x
        x = first[level]
        y = choice[level] + 1 if choice[level] >= 0 else x + 1
        while y < S and mate[y] >= 0:
            y += 1
        if y >= S:
            choice[level] = -1
            level -= 1
            continue
        choice[level] = y
        mate[x] = y
        mate[y] = x
        level += 1
        if level < half:
            choice[level] = -1
    return out[:count], total
