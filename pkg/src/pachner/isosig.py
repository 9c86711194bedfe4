"""Canonical text signatures of triangulations.

For every start (facet, labelling of its vertices) the triangulation is
relabelled breadth-first: facets get new numbers in order of discovery and a
newly found facet inherits vertex labels that make its discovering gluing the
identity.  Walking faces in (facet, face) order produces one token per
gluing: 0 for "new facet" and ``1 + k*P + q`` for a gluing to the already
numbered facet ``k`` by permutation ``q``.  The smallest token sequence over
all starts is canonical.

Text layout (version ``a``)::

    a <dim> <len(N)> <N> <W> <tokens, W characters each>

where numbers use base 64 over ``A-Za-z0-9+-`` most significant digit first
and ``len(N)`` and ``W`` are single digits.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from ._tables import tables
from .errors import MalformedSignature, TriangulationError
from .triangulation import Triangulation

ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+-"
_VALUE = {c: i for i, c in enumerate(ALPHABET)}
VERSION = "a"


def _digits(x: int) -> str:
    if x == 0:
        return ALPHABET[0]
    out = []
    while x:
        out.append(ALPHABET[x & 63])
        x >>= 6
    return "".join(reversed(out))


def _number(s: str) -> int:
    x = 0
    for c in s:
        x = (x << 6) | _VALUE[c]
    return x


def encode_code(dim: int, n: int, code) -> str:
    top = max(int(c) for c in code) if len(code) else 0
    width = len(_digits(top))
    ns = _digits(n)
    body = "".join(_digits(int(c)).rjust(width, ALPHABET[0]) for c in code)
    return VERSION + str(dim) + ALPHABET[len(ns)] + ns + ALPHABET[width] + body


def parse_sig(sig: str):
    """Split a signature into ``(dim, n, code)`` without canonicity checks."""
    if not isinstance(sig, str) or len(sig) < 4 or sig[0] != VERSION:
        raise MalformedSignature(f"not a signature: {sig!r}")
    if any(c not in _VALUE for c in sig[2:]):
        raise MalformedSignature(f"bad character in {sig!r}")
    if sig[1] not in "23":
        raise MalformedSignature(f"bad dimension in {sig!r}")
    dim = int(sig[1])
    ln = _VALUE[sig[2]]
    if ln == 0 or len(sig) < 4 + ln:
        raise MalformedSignature(f"truncated signature {sig!r}")
    n = _number(sig[3 : 3 + ln])
    pos = 3 + ln
    width = _VALUE[sig[pos]]
    body = sig[pos + 1 :]
    count = n * (dim + 1) // 2
    if n < 1 or (n * (dim + 1)) % 2 or width == 0 or len(body) != count * width:
        raise MalformedSignature(f"inconsistent length in {sig!r}")
    code = np.array([_number(body[k * width : (k + 1) * width]) for k in range(count)], dtype=np.int64)
    return dim, n, code


def canonical_code(T: Triangulation):
    """Return ``(code, automorphism_count, probes)``."""
    code, aut, ops = K.canonical(T.gt, T.gp, T.n, T.tables)
    return code, int(aut), int(ops)


def compute(T: Triangulation) -> str:
    code, _, _ = canonical_code(T)
    return encode_code(T.dim, T.n, code)


def automorphisms(T: Triangulation) -> int:
    """Number of combinatorial automorphisms of ``T``."""
    return canonical_code(T)[1]


def decode(sig: str) -> Triangulation:
    dim, n, code = parse_sig(sig)
    tb = tables(dim)
    gt = np.empty((n, dim + 1), dtype=np.int64)
    gp = np.empty((n, dim + 1), dtype=np.int64)
    if not K.code_to_table(code, n, tb, gt, gp):
        raise MalformedSignature(f"token stream of {sig!r} is not a gluing table")
    try:
        T = Triangulation(dim, gt, gp)
    except TriangulationError as exc:
        raise MalformedSignature(f"{sig!r} does not describe a valid triangulation: {exc}") from exc
    if compute(T) != sig:
        raise MalformedSignature(f"{sig!r} is not in canonical form")
    return T


def isomorphic(X: Triangulation, Y: Triangulation) -> bool:
    """Direct isomorphism test without building either canonical form."""
    if X.dim != Y.dim or X.n != Y.n:
        return False
    ref, _ = K.start_code(Y.gt, Y.gp, Y.n, Y.tables, 0, 0)
    return bool(K.matches_code(X.gt, X.gp, X.n, X.tables, ref))


def random_relabel(T: Triangulation, rng=None) -> Triangulation:
    """Uniformly random renumbering of facets and of each facet's vertices."""
    rng = np.random.default_rng(rng)
    D1 = T.dim + 1
    facet_perm = [int(x) for x in rng.permutation(T.n)]
    vertex_perms = [[int(x) for x in rng.permutation(D1)] for _ in range(T.n)]
    return T.relabel(facet_perm, vertex_perms)
