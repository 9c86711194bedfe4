"""Permutation and face-mask lookup tables for dimensions 2 and 3.

Permutations of ``{0..d}`` are numbered in lexicographic order of their image
tuples, so index 0 is always the identity.
"""

from __future__ import annotations

import functools
import itertools
from typing import NamedTuple

import numpy as np


class Tables(NamedTuple):
    d: int
    D1: int
    P: int
    perms: np.ndarray  # (P, D1) images
    inv: np.ndarray  # (P,)
    comp: np.ndarray  # (P, P): comp[a, b] = a after b
    pidx: np.ndarray  # (D1**D1,) image code -> index
    sign: np.ndarray  # (P,) +1 / -1
    masks: np.ndarray  # (D1 + 1, maxcount) masks with a given popcount
    nmask: np.ndarray  # (D1 + 1,)
    maskidx: np.ndarray  # (1 << D1,) position of a mask within its size class
    triples: np.ndarray  # 3-subsets of {0..d+1} as bitmasks
    hashes: np.ndarray  # uint64 table for degree-multiset hashing


def _parity(p):
    sign = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _splitmix(count, seed=0x9E3779B97F4A7C15):
    out = np.empty(count, dtype=np.uint64)
    x = seed
    mask = (1 << 64) - 1
    for i in range(count):
        x = (x + 0x9E3779B97F4A7C15) & mask
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out[i] = z ^ (z >> 31)
    return out


HASH_TABLE_SIZE = 1 << 14


@functools.lru_cache(maxsize=None)
def tables(d: int) -> Tables:
    if d not in (2, 3):
        raise ValueError(f"unsupported dimension {d}")
    D1 = d + 1
    plist = list(itertools.permutations(range(D1)))
    P = len(plist)
    index = {p: i for i, p in enumerate(plist)}
    perms = np.array(plist, dtype=np.int64)
    pidx = np.full(D1**D1, -1, dtype=np.int64)
    for i, p in enumerate(plist):
        pidx[sum(p[j] * D1**j for j in range(D1))] = i
    inv = np.empty(P, dtype=np.int64)
    comp = np.empty((P, P), dtype=np.int64)
    sign = np.empty(P, dtype=np.int64)
    for i, p in enumerate(plist):
        q = [0] * D1
        for j in range(D1):
            q[p[j]] = j
        inv[i] = index[tuple(q)]
        sign[i] = _parity(p)
        for k, r in enumerate(plist):
            comp[i, k] = index[tuple(p[r[x]] for x in range(D1))]
    by_size = [[m for m in range(1 << D1) if bin(m).count("1") == s] for s in range(D1 + 1)]
    width = max(len(b) for b in by_size)
    masks = np.full((D1 + 1, width), -1, dtype=np.int64)
    nmask = np.zeros(D1 + 1, dtype=np.int64)
    maskidx = np.full(1 << D1, -1, dtype=np.int64)
    for s, group in enumerate(by_size):
        nmask[s] = len(group)
        for k, m in enumerate(group):
            masks[s, k] = m
            maskidx[m] = k
    triples = np.array(
        [sum(1 << x for x in c) for c in itertools.combinations(range(d + 2), 3)], dtype=np.int64
    )
    hashes = _splitmix(HASH_TABLE_SIZE)
    for arr in (perms, pidx, inv, comp, sign, masks, nmask, maskidx, triples, hashes):
        arr.setflags(write=False)
    return Tables(d, D1, P, perms, inv, comp, pidx, sign, masks, nmask, maskidx, triples, hashes)


def perm_index(d: int, images) -> int:
    tb = tables(d)
    code = sum(int(images[j]) * tb.D1**j for j in range(tb.D1))
    if len(images) != tb.D1 or sorted(int(x) for x in images) != list(range(tb.D1)):
        raise ValueError(f"{tuple(images)} is not a permutation of 0..{d}")
    return int(tb.pidx[code])


def perm_images(d: int, index: int) -> tuple[int, ...]:
    return tuple(int(x) for x in tables(d).perms[index])
