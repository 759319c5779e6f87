"""Brute-force reference implementations.

Everything here works on plain Python lists/dicts and the raw distance
matrix, so it shares no code path with the package beyond the space
object's point list and matrix.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

INF = math.inf
TOL = 1e-9


def raw(space):
    """(points, dist) as plain Python lists."""
    return list(space.points), [[float(v) for v in row] for row in space.dist]


def floyd_warshall(n, edges):
    D = [[0.0 if i == j else INF for j in range(n)] for i in range(n)]
    for u, v, w in edges:
        D[u][v] = D[v][u] = min(D[u][v], float(w))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if D[i][k] + D[k][j] < D[i][j]:
                    D[i][j] = D[i][k] + D[k][j]
    return D


def chain_index_sets(space, x, V, R, max_len=None):
    """Least k such that some chain x = x0, ..., xk with hops <= R ends outside V.

    Walks chain lengths 0, 1, 2, ... tracking the set of chain endpoints of
    each length, i.e. all chains of that length at once.
    """
    pts, D = raw(space)
    V = {str(v) for v in V}
    i0 = pts.index(str(x))
    max_len = len(pts) if max_len is None else max_len
    ends = {i0}
    for k in range(max_len + 1):
        if any(pts[i] not in V for i in ends):
            return k
        ends = {j for i in ends for j in range(len(pts)) if D[i][j] <= R + TOL}
    return INF


def chain_index_dfs(space, x, V, R, max_len=None):
    """Same quantity by enumerating simple chains explicitly (small V only)."""
    pts, D = raw(space)
    V = {str(v) for v in V}
    n = len(pts)
    i0 = pts.index(str(x))
    max_len = n if max_len is None else max_len
    if pts[i0] not in V:
        return 0
    for k in range(1, max_len + 1):
        stack = [(i0, (i0,))]
        while stack:
            i, chain = stack.pop()
            if len(chain) == k + 1:
                if pts[i] not in V:
                    return k
                continue
            if pts[i] not in V:
                continue  # a shorter chain already escaped
            for j in range(n):
                if j not in chain and D[i][j] <= R + TOL:
                    stack.append((j, chain + (j,)))
    return INF


def natural_weights(cover, R):
    """Exact index weights ``{point: {label: Fraction}}``."""
    out = {}
    for x in cover.domain:
        idx = {s: chain_index_sets(_sub(cover), x, E, R) for s, E in cover.elements.items()}
        infinite = [s for s, v in idx.items() if v == INF]
        if infinite:
            out[x] = {s: Fraction(1, len(infinite)) if s in infinite else Fraction(0) for s in idx}
        else:
            tot = sum(idx.values())
            out[x] = {s: Fraction(v, tot) for s, v in idx.items()}
    return out


def _sub(cover):
    # chains must stay inside the cover's domain
    return cover.space.subspace(cover.domain) if cover.domain != cover.space.all else cover.space


def l1(u, v):
    keys = set(u) | set(v)
    return sum(abs(u.get(k, 0) - v.get(k, 0)) for k in keys)


def modulus(pu, R):
    """(max l1 gap over pairs at distance <= R, lexicographically first pair)."""
    pts, D = raw(pu.space)
    pos = {p: i for i, p in enumerate(pts)}
    dom = list(pu.domain)
    vec = {p: {s: float(w) for s, w in pu.vector(p).items()} for p in dom}
    best, wit = 0.0, None
    for a, b in itertools.combinations(dom, 2):
        if D[pos[a]][pos[b]] <= R + TOL:
            g = l1(vec[a], vec[b])
            if g > best + 1e-15:
                best, wit = g, (a, b)
    return best, wit


def multiplicity(cover):
    return max(sum(1 for E in cover.elements.values() if x in E) for x in cover.domain)


def ball(space, A, r):
    pts, D = raw(space)
    pos = {p: i for i, p in enumerate(pts)}
    if r == INF:
        return set(pts)
    return {q for q in pts for a in A if D[pos[a]][pos[q]] <= r + TOL}


def lebesgue(cover):
    """Largest candidate L in {0, realized distances, inf} with every closed
    L-ball (within the domain) inside one element."""
    pts, D = raw(cover.space)
    pos = {p: i for i, p in enumerate(pts)}
    dom = set(cover.domain)
    cands = sorted({0.0} | {D[pos[a]][pos[b]] for a in dom for b in dom} | {INF})
    best = -INF
    for L in cands:
        ok = True
        for x in dom:
            B = {y for y in dom if L == INF or D[pos[x]][pos[y]] <= L + TOL}
            if not any(B <= E for E in cover.elements.values()):
                ok = False
                break
        if ok:
            best = L
    return best


def greedy(space, R, order=None):
    pts, D = raw(space)
    pos = {p: i for i, p in enumerate(pts)}
    rest = list(order) if order is not None else list(pts)
    classes = []
    while rest:
        chosen, left = [], []
        for p in rest:
            if all(D[pos[p]][pos[q]] > R + TOL for q in chosen):
                chosen.append(p)
            else:
                left.append(p)
        classes.append(set(chosen))
        rest = left
    return classes


def triangle_ok(space):
    _, D = raw(space)
    n = len(D)
    for i in range(n):
        for j in range(n):
            if D[i][j] != D[j][i] or D[i][j] < 0:
                return False
            for k in range(n):
                if D[i][k] < INF and D[k][j] < INF and D[i][j] > D[i][k] + D[k][j] + TOL:
                    return False
    return all(D[i][i] == 0 for i in range(n))
