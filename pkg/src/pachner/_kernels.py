"""Compiled kernels operating on raw gluing tables.

A triangulation with ``n`` facets is a pair of int64 arrays ``gt`` / ``gp`` of
shape ``(>= n, d + 1)``: face ``f`` of facet ``t`` (the face opposite local
vertex ``f``) is glued to facet ``gt[t, f]`` and local vertex ``v`` of ``t``
is sent to local vertex ``perms[gp[t, f], v]`` of that facet.

A move site is a pair ``(t0, amask)``: facet ``t0`` and the bitmask of the
local vertices of ``t0`` spanning the face the move is centred on.  The star
of a site is described in the labels 0..d+1 of a (d+1)-simplex: ``fac[b]``
is the facet opposite simplex label ``b`` and ``phi[b, x]`` the local label
of simplex vertex ``x`` inside it.
"""

import numpy as np
from numba import njit

# chain step outcomes
SELF_LOOP = 0
MOVED = 1
REJECTED = 2
CAPPED = 3
BOUND_EXCEEDED = 4
NEED_CAPACITY = 5


@njit(cache=True, inline="always")
def popcount(m):
    c = 0
    while m:
        m &= m - 1
        c += 1
    return c


@njit(cache=True, inline="always")
def pidx_of(tb, img):
    code = 0
    mul = 1
    for j in range(tb.D1):
        code += img[j] * mul
        mul *= tb.D1
    return tb.pidx[code]


@njit(cache=True, inline="always")
def mask_image(tb, p, mask):
    out = 0
    for x in range(tb.D1):
        if (mask >> x) & 1:
            out |= 1 << tb.perms[p, x]
    return out


# ---------------------------------------------------------------------------
# face orbits and validity


@njit(cache=True)
def face_orbits(gt, gp, n, tb, s, orb, deg, rep_t, rep_m, check):
    """Label orbits of faces with ``s`` vertices.

    Fills ``orb[t, k]`` (k indexes masks of size s), ``deg`` and the
    representative arrays.  Returns ``(count, bad_t, bad_mask)``; ``bad_t`` is
    -1 unless ``check`` is set and some face is identified with itself under a
    non-identity map.
    """
    D1 = tb.D1
    nm = tb.nmask[s]
    for t in range(n):
        for k in range(nm):
            orb[t, k] = -1
    sig = np.empty((n, nm), dtype=np.int64)
    stack_t = np.empty(n * nm, dtype=np.int64)
    stack_k = np.empty(n * nm, dtype=np.int64)
    count = 0
    bad_t = -1
    bad_m = 0
    for t in range(n):
        for k in range(nm):
            if orb[t, k] != -1:
                continue
            m0 = tb.masks[s, k]
            orb[t, k] = count
            sig[t, k] = 0
            rep_t[count] = t
            rep_m[count] = m0
            top = 0
            stack_t[0] = t
            stack_k[0] = k
            top = 1
            dcount = 0
            while top > 0:
                top -= 1
                u = stack_t[top]
                kk = stack_k[top]
                mask = tb.masks[s, kk]
                dcount += 1
                for f in range(D1):
                    if (mask >> f) & 1:
                        continue
                    t2 = gt[u, f]
                    p = gp[u, f]
                    k2 = tb.maskidx[mask_image(tb, p, mask)]
                    s2 = tb.comp[p, sig[u, kk]]
                    if orb[t2, k2] == -1:
                        orb[t2, k2] = count
                        sig[t2, k2] = s2
                        stack_t[top] = t2
                        stack_k[top] = k2
                        top += 1
                    elif check and bad_t < 0:
                        s1 = sig[t2, k2]
                        for x in range(D1):
                            if (m0 >> x) & 1:
                                if tb.perms[s1, x] != tb.perms[s2, x]:
                                    bad_t = t2
                                    bad_m = tb.masks[s, k2]
                                    break
            deg[count] = dcount
            count += 1
    return count, bad_t, bad_m


@njit(cache=True)
def orbit_arrays(gt, gp, n, tb, s, check):
    nm = tb.nmask[s]
    orb = np.empty((n, nm), dtype=np.int64)
    deg = np.empty(n * nm, dtype=np.int64)
    rep_t = np.empty(n * nm, dtype=np.int64)
    rep_m = np.empty(n * nm, dtype=np.int64)
    count, bad_t, bad_m = face_orbits(gt, gp, n, tb, s, orb, deg, rep_t, rep_m, check)
    return orb, deg[:count], rep_t[:count], rep_m[:count], bad_t, bad_m


@njit(cache=True)
def validate(gt, gp, n, tb):
    """Return ``(code, a, b)``; code 0 means valid.

    1 unglued (t, f); 2 non-involutive (t, f); 3 face glued to itself (t, f);
    4 disconnected; 5 face self-identified by a non-identity map (t, mask);
    6 vertex link not a sphere (t, v).
    """
    D1 = tb.D1
    for t in range(n):
        for f in range(D1):
            t2 = gt[t, f]
            if t2 < 0 or t2 >= n:
                return 1, t, f
            p = gp[t, f]
            if p < 0 or p >= tb.P:
                return 2, t, f
            f2 = tb.perms[p, f]
            if t2 == t and f2 == f:
                return 3, t, f
            if gt[t2, f2] != t or gp[t2, f2] != tb.inv[p]:
                return 2, t, f
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    seen[0] = True
    stack[0] = 0
    top = 1
    reached = 1
    while top > 0:
        top -= 1
        t = stack[top]
        for f in range(D1):
            t2 = gt[t, f]
            if not seen[t2]:
                seen[t2] = True
                stack[top] = t2
                top += 1
                reached += 1
    if reached != n:
        return 4, 0, 0
    for s in range(2, D1 - 1):
        orb, deg, rt, rm, bad_t, bad_m = orbit_arrays(gt, gp, n, tb, s, True)
        if bad_t >= 0:
            return 5, bad_t, bad_m
    vorb, vdeg, vrt, vrm, _, _ = orbit_arrays(gt, gp, n, tb, 1, False)
    eorb, edeg, ert, erm, _, _ = orbit_arrays(gt, gp, n, tb, 2, False)
    ends = np.zeros(vdeg.shape[0], dtype=np.int64)
    for e in range(edeg.shape[0]):
        t = ert[e]
        m = erm[e]
        for x in range(D1):
            if (m >> x) & 1:
                ends[vorb[t, tb.maskidx[1 << x]]] += 1
    for o in range(vdeg.shape[0]):
        corners = vdeg[o]
        if tb.d == 2:
            ok = ends[o] == corners
        else:
            ok = 2 * ends[o] - corners == 4
        if not ok:
            v = 0
            m = vrm[o]
            while not (m >> v) & 1:
                v += 1
            return 6, vrt[o], v
    return 0, 0, 0


@njit(cache=True)
def is_orientable(gt, gp, n, tb):
    o = np.zeros(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    o[0] = 1
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        t = stack[top]
        for f in range(tb.D1):
            t2 = gt[t, f]
            want = -tb.sign[gp[t, f]] * o[t]
            if o[t2] == 0:
                o[t2] = want
                stack[top] = t2
                top += 1
            elif o[t2] != want:
                return False
    return True


@njit(cache=True)
def f_vector(gt, gp, n, tb):
    out = np.empty(tb.D1, dtype=np.int64)
    for s in range(1, tb.D1):
        orb, deg, rt, rm, _, _ = orbit_arrays(gt, gp, n, tb, s, False)
        out[s - 1] = deg.shape[0]
    out[tb.d] = n
    return out


@njit(cache=True)
def is_simplicial(gt, gp, n, tb):
    D1 = tb.D1
    vorb, vdeg, vrt, vrm, _, _ = orbit_arrays(gt, gp, n, tb, 1, False)
    base = vdeg.shape[0] + 1
    ids = np.empty(D1, dtype=np.int64)
    for t in range(n):
        for a in range(D1):
            ids[a] = vorb[t, a]
        for a in range(D1):
            for b in range(a + 1, D1):
                if ids[a] == ids[b]:
                    return False
    for s in range(2, D1 + 1):
        if s == D1:
            count = n
            rt = np.arange(n)
            rm = np.full(n, (1 << D1) - 1, dtype=np.int64)
        else:
            orb, deg, rt, rm, _, _ = orbit_arrays(gt, gp, n, tb, s, False)
            count = deg.shape[0]
        keys = np.empty(count, dtype=np.int64)
        for o in range(count):
            t = rt[o]
            m = rm[o]
            c = 0
            for x in range(D1):
                if (m >> x) & 1:
                    ids[c] = vorb[t, x]
                    c += 1
            ids[:c].sort()
            key = 0
            for j in range(c):
                key = key * base + ids[j]
            keys[o] = key
        keys.sort()
        for o in range(1, count):
            if keys[o] == keys[o - 1]:
                return False
    return True


# ---------------------------------------------------------------------------
# bi-stellar moves


@njit(cache=True)
def list_sites(gt, gp, n, tb, i, out_t, out_m):
    """Write one representative per candidate face for an ``i``-move."""
    D1 = tb.D1
    full = (1 << D1) - 1
    c = 0
    if i == 0:
        for t in range(n):
            out_t[c] = t
            out_m[c] = full
            c += 1
    elif i == 1:
        for t in range(n):
            for f in range(D1):
                t2 = gt[t, f]
                f2 = tb.perms[gp[t, f], f]
                if t < t2 or (t == t2 and f < f2):
                    out_t[c] = t
                    out_m[c] = full ^ (1 << f)
                    c += 1
    else:
        s = D1 - i
        orb, deg, rt, rm, _, _ = orbit_arrays(gt, gp, n, tb, s, False)
        for o in range(deg.shape[0]):
            if deg[o] == i + 1:
                out_t[c] = rt[o]
                out_m[c] = rm[o]
                c += 1
    return c


@njit(cache=True, inline="always")
def check_site(gt, gp, tb, t0, amask, fac, phi):
    """Build the star labelling of a site; False if it is not a valid move."""
    D1 = tb.D1
    last = D1
    fac[last] = t0
    for x in range(D1):
        phi[last, x] = x
    phi[last, last] = -1
    for b in range(D1):
        if (amask >> b) & 1:
            continue
        t = gt[t0, b]
        p = gp[t0, b]
        fac[b] = t
        for x in range(D1):
            if x != b:
                phi[b, x] = tb.perms[p, x]
        phi[b, last] = tb.perms[p, b]
        phi[b, b] = -1
    for b in range(D1 + 1):
        if b < D1 and (amask >> b) & 1:
            continue
        for b2 in range(b + 1, D1 + 1):
            if b2 < D1 and (amask >> b2) & 1:
                continue
            if fac[b] == fac[b2]:
                return False
    for b in range(D1):
        if (amask >> b) & 1:
            continue
        for b2 in range(D1):
            if b2 == b or (amask >> b2) & 1:
                continue
            lf = phi[b, b2]
            if gt[fac[b], lf] != fac[b2]:
                return False
            q = gp[fac[b], lf]
            for x in range(D1 + 1):
                if x == b or x == b2:
                    continue
                if tb.perms[q, phi[b, x]] != phi[b2, x]:
                    return False
    return True


@njit(cache=True, inline="always")
def _psi(a, y):
    return y if y < a else y - 1


@njit(cache=True)
def _mu(tb, a, b, phi, img):
    """Local labels of new facet ``a`` -> local labels of old facet ``b``."""
    for x in range(tb.D1 + 1):
        if x == a:
            continue
        if x == b:
            img[_psi(a, b)] = phi[b, a]
        else:
            img[_psi(a, x)] = phi[b, x]
    return pidx_of(tb, img)


@njit(cache=True)
def apply_site(gt, gp, n, tb, amask, fac, phi, ot, op):
    """Apply the move described by a checked star; returns the new size."""
    D1 = tb.D1
    last = D1
    nA = popcount(amask)
    nB = D1 + 1 - nA
    A = np.empty(nA, dtype=np.int64)
    B = np.empty(nB, dtype=np.int64)
    ca = 0
    cb = 0
    for x in range(D1 + 1):
        if x < D1 and (amask >> x) & 1:
            A[ca] = x
            ca += 1
        else:
            B[cb] = x
            cb += 1
    n_new = n - nB + nA
    rl = np.empty(n, dtype=np.int64)
    for t in range(n):
        rl[t] = t
    holes = np.empty(nB, dtype=np.int64)
    for k in range(nB):
        holes[k] = fac[B[k]]
        rl[fac[B[k]]] = -1
    holes.sort()
    newidx = np.full(D1 + 1, -1, dtype=np.int64)
    for k in range(nA):
        if k < nB:
            newidx[A[k]] = holes[k]
        else:
            newidx[A[k]] = n + (k - nB)
    if nA < nB:
        tail = n - 1
        for k in range(nA, nB):
            h = holes[k]
            if h >= n_new:
                continue
            while tail >= n_new and rl[tail] < 0:
                tail -= 1
            rl[tail] = h
            tail -= 1
    for t in range(n):
        r = rl[t]
        if r < 0:
            continue
        for f in range(D1):
            t2 = gt[t, f]
            ot[r, f] = rl[t2]
            op[r, f] = gp[t, f]
    img = np.empty(D1, dtype=np.int64)
    img2 = np.empty(D1, dtype=np.int64)
    for ka in range(nA):
        a = A[ka]
        ga = newidx[a]
        for y in range(D1 + 1):
            if y == a:
                continue
            j = _psi(a, y)
            isA = y < D1 and (amask >> y) & 1
            if isA:
                for x in range(D1 + 1):
                    if x == a:
                        continue
                    if x == y:
                        img[j] = _psi(y, a)
                    else:
                        img[_psi(a, x)] = _psi(y, x)
                ot[ga, j] = newidx[y]
                op[ga, j] = pidx_of(tb, img)
                continue
            b = y
            lf = phi[b, a]
            t2 = gt[fac[b], lf]
            p2 = gp[fac[b], lf]
            mu = _mu(tb, a, b, phi, img)
            pm = tb.comp[p2, mu]
            b2 = -1
            for kb in range(nB):
                if fac[B[kb]] == t2:
                    b2 = B[kb]
            if b2 < 0:
                r2 = rl[t2]
                ot[ga, j] = r2
                op[ga, j] = pm
                f2 = tb.perms[p2, lf]
                ot[r2, f2] = ga
                op[r2, f2] = tb.inv[pm]
            else:
                target = tb.perms[p2, lf]
                a2 = -1
                for x in range(D1 + 1):
                    if x != b2 and phi[b2, x] == target:
                        a2 = x
                mu2 = _mu(tb, a2, b2, phi, img2)
                ot[ga, j] = newidx[a2]
                op[ga, j] = tb.comp[tb.inv[mu2], pm]
    return n_new


@njit(cache=True)
def creates_existing_face(gt, gp, n, tb, vorb, amask, fac, phi):
    """For a checked site on a simplicial table: True if the face the move
    inserts is degenerate or already present, i.e. the result is not simplicial.
    """
    D1 = tb.D1
    last = D1
    ids = np.empty(D1 + 1, dtype=np.int64)
    c = 0
    other = -1
    for b in range(D1):
        if not (amask >> b) & 1:
            ids[c] = vorb[fac[last], tb.maskidx[1 << b]]
            c += 1
            other = b
    if other < 0:
        return False
    ids[c] = vorb[fac[other], tb.maskidx[1 << phi[other, last]]]
    c += 1
    for a in range(c):
        for b in range(a + 1, c):
            if ids[a] == ids[b]:
                return True
    for t in range(n):
        hit = 0
        for a in range(c):
            for x in range(D1):
                if vorb[t, tb.maskidx[1 << x]] == ids[a]:
                    hit += 1
                    break
        if hit == c:
            return True
    return False


@njit(cache=True)
def inverse_site(tb, amask, newfacet_of_first_a):
    """Local mask of the inserted face inside the first new facet."""
    a = 0
    while not (amask >> a) & 1:
        a += 1
    m = 0
    for y in range(tb.D1 + 1):
        if y < tb.D1 and (amask >> y) & 1:
            continue
        m |= 1 << _psi(a, y)
    return m


# ---------------------------------------------------------------------------
# canonical codes


@njit(cache=True)
def _code(gt, gp, n, tb, st, sp, best, cur, mode, label, lstamp, stamp, order, pi):
    """Breadth-first relabelling code from start ``(st, sp)``.

    mode 0 writes ``cur``; mode 1 compares with ``best`` while writing
    ``cur`` and returns -1 (smaller), 0 (equal) or 1 (larger, aborted);
    mode 2 returns 0 only if the code equals ``best``.  Second return value
    counts gluing-table probes.  Returns 2 if the table is disconnected.
    """
    D1 = tb.D1
    P = tb.P
    lstamp[st] = stamp
    label[st] = 0
    order[0] = st
    pi[0] = sp
    nl = 1
    pos = 0
    cmp = 0
    ops = 0
    for k in range(n):
        if k >= nl:
            return 2, ops
        old = order[k]
        pk = pi[k]
        for j in range(D1):
            oj = tb.perms[pk, j]
            t2 = gt[old, oj]
            p = gp[old, oj]
            ops += 1
            if lstamp[t2] != stamp:
                lstamp[t2] = stamp
                label[t2] = nl
                order[nl] = t2
                pi[nl] = tb.comp[p, pk]
                nl += 1
                tok = 0
            else:
                k2 = label[t2]
                q = tb.comp[tb.inv[pi[k2]], tb.comp[p, pk]]
                j2 = tb.perms[q, j]
                if k2 < k or (k2 == k and j2 < j):
                    continue
                tok = 1 + k2 * P + q
            if mode == 0:
                cur[pos] = tok
            elif mode == 1:
                if cmp == 0:
                    bv = best[pos]
                    if tok > bv:
                        return 1, ops
                    if tok < bv:
                        cmp = -1
                cur[pos] = tok
            else:
                if tok != best[pos]:
                    return 1, ops
            pos += 1
    return cmp, ops


@njit(cache=True)
def canonical(gt, gp, n, tb):
    """Lexicographically least start code; returns (code, #automorphisms, probes)."""
    L = n * tb.D1 // 2
    best = np.empty(L, dtype=np.int64)
    cur = np.empty(L, dtype=np.int64)
    label = np.empty(n, dtype=np.int64)
    lstamp = np.zeros(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    pi = np.empty(n, dtype=np.int64)
    stamp = 0
    aut = 0
    ops = 0
    for st in range(n):
        for sp in range(tb.P):
            stamp += 1
            if stamp == 1:
                r, c = _code(gt, gp, n, tb, st, sp, best, best, 0, label, lstamp, stamp, order, pi)
                aut = 1
            else:
                r, c = _code(gt, gp, n, tb, st, sp, best, cur, 1, label, lstamp, stamp, order, pi)
                if r == -1:
                    best[:] = cur
                    aut = 1
                elif r == 0:
                    aut += 1
            ops += c
    return best, aut, ops


@njit(cache=True)
def start_code(gt, gp, n, tb, st, sp):
    L = n * tb.D1 // 2
    cur = np.empty(L, dtype=np.int64)
    label = np.empty(n, dtype=np.int64)
    lstamp = np.zeros(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    pi = np.empty(n, dtype=np.int64)
    r, c = _code(gt, gp, n, tb, st, sp, cur, cur, 0, label, lstamp, 1, order, pi)
    return cur, r


@njit(cache=True)
def matches_code(gt, gp, n, tb, ref):
    """True if some start of (gt, gp) reproduces ``ref`` exactly."""
    label = np.empty(n, dtype=np.int64)
    lstamp = np.zeros(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    pi = np.empty(n, dtype=np.int64)
    stamp = 0
    for st in range(n):
        for sp in range(tb.P):
            stamp += 1
            r, c = _code(gt, gp, n, tb, st, sp, ref, ref, 2, label, lstamp, stamp, order, pi)
            if r == 0:
                return True
    return False


@njit(cache=True, inline="always")
def facet_key(orb, deg, tb, s, t, p, key):
    """Degrees of the ``s``-vertex faces of facet ``t`` read through ``p``."""
    for k in range(tb.nmask[s]):
        key[k] = deg[orb[t, tb.maskidx[mask_image(tb, p, tb.masks[s, k])]]]


@njit(cache=True)
def matches_keyed(gt, gp, n, tb, ref, refkey, orb, deg, s):
    """:func:`matches_code` restricted to starts whose face degrees agree with ``refkey``."""
    label = np.empty(n, dtype=np.int64)
    lstamp = np.zeros(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    pi = np.empty(n, dtype=np.int64)
    nm = tb.nmask[s]
    stamp = 0
    for st in range(n):
        for sp in range(tb.P):
            ok = True
            for k in range(nm):
                if deg[orb[st, tb.maskidx[mask_image(tb, sp, tb.masks[s, k])]]] != refkey[k]:
                    ok = False
                    break
            if not ok:
                continue
            stamp += 1
            r, c = _code(gt, gp, n, tb, st, sp, ref, ref, 2, label, lstamp, stamp, order, pi)
            if r == 0:
                return True
    return False


@njit(cache=True)
def _same_as(ot2, op2, n1, tb, ref, refkey, s):
    orb, deg, _, _, _, _ = orbit_arrays(ot2, op2, n1, tb, s, False)
    return matches_keyed(ot2, op2, n1, tb, ref, refkey, orb, deg, s)


@njit(cache=True)
def code_to_table(code, n, tb, gt, gp):
    """Inverse of the start code; returns False on inconsistent input."""
    D1 = tb.D1
    P = tb.P
    for t in range(n):
        for f in range(D1):
            gt[t, f] = -1
    pos = 0
    nl = 1
    for k in range(n):
        if k >= nl:
            return False
        for j in range(D1):
            if gt[k, j] >= 0:
                continue
            if pos >= code.shape[0]:
                return False
            tok = code[pos]
            pos += 1
            if tok == 0:
                if nl >= n:
                    return False
                gt[k, j] = nl
                gp[k, j] = 0
                gt[nl, j] = k
                gp[nl, j] = 0
                nl += 1
            else:
                v = tok - 1
                k2 = v // P
                q = v % P
                if k2 >= nl or q >= P:
                    return False
                j2 = tb.perms[q, j]
                if k2 < k or (k2 == k and j2 <= j) or gt[k2, j2] >= 0:
                    return False
                gt[k, j] = k2
                gp[k, j] = q
                gt[k2, j2] = k
                gp[k2, j2] = tb.inv[q]
    return pos == code.shape[0] and nl == n


# ---------------------------------------------------------------------------
# degree-multiset hashing used to filter isomorphism tests


@njit(cache=True)
def table_hash(deg, tb):
    h = np.uint64(0)
    size = tb.hashes.shape[0]
    for o in range(deg.shape[0]):
        h += tb.hashes[deg[o] % size]
    return h


@njit(cache=True, inline="always")
def site_hash(tb, amask, fac, phi, orb2, deg2, base, tmp_o, tmp_d):
    """Hash of the codim-2 degree multiset after the move at a checked star."""
    D1 = tb.D1
    size = tb.hashes.shape[0]
    allmask = (1 << (D1 + 1)) - 1
    bmask = allmask ^ amask
    cnt = 0
    newfaces = 0
    for qi in range(tb.triples.shape[0]):
        Q = tb.triples[qi]
        qa = popcount(Q & amask)
        qb = 3 - qa
        if qb == 0:
            newfaces += 1
            continue
        qbm = Q & bmask
        b = 0
        while not (qbm >> b) & 1:
            b += 1
        K = allmask ^ Q
        lm = 0
        for x in range(D1 + 1):
            if (K >> x) & 1:
                lm |= 1 << phi[b, x]
        o = orb2[fac[b], tb.maskidx[lm]]
        found = False
        for c in range(cnt):
            if tmp_o[c] == o:
                tmp_d[c] += qa - qb
                found = True
                break
        if not found:
            tmp_o[cnt] = o
            tmp_d[cnt] = qa - qb
            cnt += 1
    h = base
    for c in range(cnt):
        old = deg2[tmp_o[c]]
        new = old + tmp_d[c]
        h -= tb.hashes[old % size]
        if new > 0:
            h += tb.hashes[new % size]
    for c in range(newfaces):
        h += tb.hashes[3]
    return h


# ---------------------------------------------------------------------------
# Markov chain


@njit(cache=True)
def move_delta(d, i):
    return d - 2 * i if d == 2 else (3, 1, -1, -3)[i]


@njit(cache=True)
def fvec_entry(d, n, f0, k):
    if k == d:
        return n
    if k == 0:
        return f0
    if d == 2:
        return 3 * n // 2
    if k == 1:
        return n + f0
    return 2 * n


@njit(cache=True)
def vertex_delta(d, i):
    if i == 0:
        return 1
    if i == d:
        return -1
    return 0


@njit(cache=True)
def _distinct_types(gt, gp, n, tb, i, simplicial_only, exclude_self, st_, sm_, ns,
                    orb2, deg2, vorb, base, reps, ot, op, ot2, op2):
    """Group valid sites into isomorphism types; returns how many."""
    D1 = tb.D1
    fac = np.empty(D1 + 1, dtype=np.int64)
    phi = np.empty((D1 + 1, D1 + 1), dtype=np.int64)
    tmp_o = np.empty(16, dtype=np.int64)
    tmp_d = np.empty(16, dtype=np.int64)
    hashes = np.empty(ns, dtype=np.uint64)
    d = tb.d
    refkey = np.empty(tb.nmask[d - 1], dtype=np.int64)
    l = 0
    for s in range(ns):
        if not check_site(gt, gp, tb, st_[s], sm_[s], fac, phi):
            continue
        h = site_hash(tb, sm_[s], fac, phi, orb2, deg2, base, tmp_o, tmp_d)
        if simplicial_only and creates_existing_face(gt, gp, n, tb, vorb, sm_[s], fac, phi):
            continue
        n1 = apply_site(gt, gp, n, tb, sm_[s], fac, phi, ot, op)
        ref, _ = start_code(ot, op, n1, tb, 0, 0)
        orb1, deg1, _, _, _, _ = orbit_arrays(ot, op, n1, tb, d - 1, False)
        facet_key(orb1, deg1, tb, d - 1, 0, 0, refkey)
        if exclude_self and n1 == n and h == base and matches_keyed(gt, gp, n, tb, ref, refkey, orb2, deg2, d - 1):
            continue
        dup = False
        for r in range(l):
            if hashes[r] != h:
                continue
            check_site(gt, gp, tb, st_[reps[r]], sm_[reps[r]], fac, phi)
            apply_site(gt, gp, n, tb, sm_[reps[r]], fac, phi, ot2, op2)
            if _same_as(ot2, op2, n1, tb, ref, refkey, d - 1):
                dup = True
                break
        if not dup:
            reps[l] = s
            hashes[l] = h
            l += 1
    return l


@njit(cache=True)
def chain_step(gt, gp, n, f0, tb, u, v, w, x, gamma, r, metropolis, beta,
               up_moves, stay_moves, down_moves, simplicial_only, max_n, ot, op, ot2, op2, info):
    """One Metropolis-Hastings step; returns (outcome, n', f0', swapped).

    ``info`` receives (direction, i, m, l-or-k) for diagnostics.  When the
    outcome is MOVED the new table lives in ``ot``/``op``.
    """
    d = tb.d
    D1 = tb.D1
    alpha = np.exp(-gamma * n)
    atil = (1.0 - alpha) / r
    stay_p = 1.0 - alpha - atil
    if stay_moves.shape[0] == 0:
        stay_p = 0.0
    if u < alpha:
        direction = 0
        lo = 0.0
        width = alpha
        moves = up_moves
    elif stay_p > 0.0 and u <= alpha + stay_p:
        direction = 1
        lo = alpha
        width = stay_p
        moves = stay_moves
    else:
        direction = 2
        lo = alpha + stay_p
        width = 1.0 - lo
        moves = down_moves
    info[0] = direction
    info[1] = -1
    info[2] = 0
    info[3] = 0
    nm = moves.shape[0]
    if nm == 0 or width <= 0.0:
        return SELF_LOOP, n, f0
    sel = int((u - lo) / width * nm)
    if sel >= nm:
        sel = nm - 1
    if sel < 0:
        sel = 0
    i = moves[sel]
    info[1] = i
    delta = move_delta(d, i)
    if max_n > 0 and n + delta > max_n:
        return CAPPED, n, f0
    if n + D1 > ot.shape[0]:
        return NEED_CAPACITY, n, f0
    if direction == 2:
        m = fvec_entry(d, n + delta, f0 + vertex_delta(d, i), i)
    else:
        m = fvec_entry(d, n, f0, d - i)
    info[2] = m
    if m <= 0:
        return SELF_LOOP, n, f0
    st_ = np.empty(n * D1, dtype=np.int64)
    sm_ = np.empty(n * D1, dtype=np.int64)
    ns = list_sites(gt, gp, n, tb, i, st_, sm_)
    orb2, deg2, _, _, _, _ = orbit_arrays(gt, gp, n, tb, d - 1, False)
    base = table_hash(deg2, tb)
    fac = np.empty(D1 + 1, dtype=np.int64)
    phi = np.empty((D1 + 1, D1 + 1), dtype=np.int64)
    tmp_o = np.empty(16, dtype=np.int64)
    tmp_d = np.empty(16, dtype=np.int64)
    if simplicial_only and d != 2:
        vorb, _, _, _, _, _ = orbit_arrays(gt, gp, n, tb, 1, False)
    else:
        vorb = orb2
    idx = int(v * m)
    if ns <= m:
        if idx >= ns:
            return SELF_LOOP, n, f0
        if not check_site(gt, gp, tb, st_[idx], sm_[idx], fac, phi):
            return SELF_LOOP, n, f0
        h = site_hash(tb, sm_[idx], fac, phi, orb2, deg2, base, tmp_o, tmp_d)
        if simplicial_only and creates_existing_face(gt, gp, n, tb, vorb, sm_[idx], fac, phi):
            return SELF_LOOP, n, f0
        n1 = apply_site(gt, gp, n, tb, sm_[idx], fac, phi, ot, op)
        ref, _ = start_code(ot, op, n1, tb, 0, 0)
        orb1, deg1, _, _, _, _ = orbit_arrays(ot, op, n1, tb, d - 1, False)
        refkey = np.empty(tb.nmask[d - 1], dtype=np.int64)
        facet_key(orb1, deg1, tb, d - 1, 0, 0, refkey)
        if n1 == n and h == base and matches_keyed(gt, gp, n, tb, ref, refkey, orb2, deg2, d - 1):
            return SELF_LOOP, n, f0
        k = 1
        for s in range(ns):
            if s == idx:
                continue
            if not check_site(gt, gp, tb, st_[s], sm_[s], fac, phi):
                continue
            if site_hash(tb, sm_[s], fac, phi, orb2, deg2, base, tmp_o, tmp_d) != h:
                continue
            apply_site(gt, gp, n, tb, sm_[s], fac, phi, ot2, op2)
            if _same_as(ot2, op2, n1, tb, ref, refkey, d - 1):
                k += 1
        info[3] = k
        if k > 1 and w * k >= 1.0:
            return SELF_LOOP, n, f0
    else:
        reps = np.empty(ns, dtype=np.int64)
        l = _distinct_types(gt, gp, n, tb, i, simplicial_only, direction == 1, st_, sm_, ns,
                            orb2, deg2, vorb, base, reps, ot, op, ot2, op2)
        info[3] = l
        if l > m:
            return BOUND_EXCEEDED, n, f0
        if idx >= l:
            return SELF_LOOP, n, f0
        s = reps[idx]
        check_site(gt, gp, tb, st_[s], sm_[s], fac, phi)
        n1 = apply_site(gt, gp, n, tb, sm_[s], fac, phi, ot, op)
    if metropolis:
        if delta > 0:
            pr = np.exp(-beta * (2 * n * delta + delta * delta)) / r * (1.0 - np.exp(-gamma * (n + delta))) / np.exp(-gamma * n)
        elif delta < 0:
            pr = np.exp(-beta * (2 * n * delta + delta * delta)) * r * np.exp(-gamma * (n + delta)) / (1.0 - np.exp(-gamma * n))
        else:
            pr = 1.0
        if x >= pr:
            return REJECTED, n, f0
    return MOVED, n1, f0 + vertex_delta(d, i)


@njit(cache=True)
def run_steps(gt, gp, n, f0, tb, uniforms, gamma, r, metropolis, beta,
              up_moves, stay_moves, down_moves, simplicial_only, max_n, ot, op, ot2, op2, counts):
    """Run ``len(uniforms)`` steps in place.

    Returns ``(steps_done, n, f0, status)``; status is 0, BOUND_EXCEEDED or
    NEED_CAPACITY (the step that needs it is not consumed).  ``counts`` is
    indexed by outcome and also accumulates the sum of n in slot 6. The
    current table always ends in ``gt``/``gp``.
    """
    info = np.empty(4, dtype=np.int64)
    steps = uniforms.shape[0]
    for s in range(steps):
        out, n1, f1 = chain_step(gt, gp, n, f0, tb, uniforms[s, 0], uniforms[s, 1], uniforms[s, 2],
                                 uniforms[s, 3], gamma, r, metropolis, beta, up_moves, stay_moves,
                                 down_moves, simplicial_only, max_n, ot, op, ot2, op2, info)
        if out == NEED_CAPACITY or out == BOUND_EXCEEDED:
            return s, n, f0, out
        counts[out] += 1
        if out == MOVED:
            gt[:n1] = ot[:n1]
            gp[:n1] = op[:n1]
            n = n1
            f0 = f1
        counts[6] += n
    return steps, n, f0, 0
