"""Finite extended pseudo-metric spaces.

Distances live in a dense float64 matrix with ``math.inf`` standing in for an
infinite distance.  Integer inputs stay exact (float64 represents every
integer below 2**53), so the tolerance below only matters for genuinely
fractional data.

Point ids are strings.  A space keeps them in a canonical order (natural
sort, so ``"2"`` precedes ``"10"``) and every matrix is indexed by that order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

__all__ = [
    "INF",
    "TOL",
    "FiniteSpace",
    "MetricAxiomError",
    "natural_key",
    "validate_space",
    "ball",
    "diameter",
    "wedge",
    "wedge_id",
    "WEDGE_BASEPOINT",
    "is_r_disjoint",
    "r_disjoint_witness",
    "generate",
    "interval",
    "grid",
    "graph_space",
]

INF = math.inf
TOL = 1e-9

WEDGE_BASEPOINT = "*"

_DIGITS = re.compile(r"(\d+)")


def natural_key(s: str) -> tuple:
    """Sort key that orders embedded integers numerically."""
    parts = _DIGITS.split(str(s))
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts if p)


class MetricAxiomError(ValueError):
    """A candidate distance matrix breaks one of the pseudo-metric axioms.

    ``witness`` holds the offending point ids: ``(x,)`` for a nonzero
    diagonal, ``(x, y)`` for asymmetry, negativity or a bad value, and
    ``(x, y, z)`` for a triangle violation ``d(x, y) > d(x, z) + d(z, y)``.
    """

    def __init__(self, axiom: str, witness: tuple, message: str):
        super().__init__(message)
        self.axiom = axiom
        self.witness = witness


def _to_ext(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "+inf"):
            return INF
        raise ValueError(f"not a distance: {v!r}")
    if v is None or isinstance(v, bool):
        raise ValueError(f"not a distance: {v!r}")
    return float(v)


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """A finite set of point ids with a symmetric extended-real distance matrix.

    Build instances through :func:`validate_space` or :func:`generate`; the
    raw constructor assumes ``points`` are already canonically ordered.
    """

    points: tuple[str, ...]
    dist: np.ndarray
    _pos: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.points)
        if self.dist.shape != (n, n):
            raise ValueError(f"distance matrix shape {self.dist.shape} != ({n}, {n})")
        if len(set(self.points)) != n:
            raise ValueError("duplicate point ids")
        self.dist.setflags(write=False)
        object.__setattr__(self, "_pos", {p: i for i, p in enumerate(self.points)})

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"FiniteSpace(<{len(self)} points>)"

    def __contains__(self, p) -> bool:
        return str(p) in self._pos

    @property
    def all(self) -> frozenset[str]:
        return frozenset(self.points)

    def pos(self, p) -> int:
        try:
            return self._pos[str(p)]
        except KeyError:
            raise KeyError(f"point {p!r} is not in the space") from None

    def positions(self, ids: Iterable) -> np.ndarray:
        """Sorted matrix positions of ``ids``."""
        return np.array(sorted(self.pos(p) for p in ids), dtype=np.intp)

    def subset(self, ids: Iterable) -> frozenset[str]:
        """Normalize ``ids`` (ints are fine) into a checked frozenset of ids."""
        out = frozenset(str(p) for p in ids)
        missing = [p for p in out if p not in self._pos]
        if missing:
            raise KeyError(f"points not in the space: {sorted(missing, key=natural_key)}")
        return out

    def ordered(self, ids: Iterable) -> tuple[str, ...]:
        return tuple(self.points[i] for i in self.positions(ids))

    def mask(self, ids: Iterable) -> np.ndarray:
        m = np.zeros(len(self), dtype=bool)
        m[[self.pos(p) for p in ids]] = True
        return m

    def from_mask(self, mask: np.ndarray) -> frozenset[str]:
        return frozenset(self.points[i] for i in np.flatnonzero(mask))

    def d(self, x, y) -> float:
        return float(self.dist[self.pos(x), self.pos(y)])

    def subspace(self, ids: Iterable) -> FiniteSpace:
        idx = self.positions(ids)
        return FiniteSpace(tuple(self.points[i] for i in idx), self.dist[np.ix_(idx, idx)].copy())

    @property
    def is_integral(self) -> bool:
        finite = self.dist[np.isfinite(self.dist)]
        return bool(np.all(finite == np.round(finite)))


def _canonical(points: Sequence, matrix: np.ndarray) -> tuple[tuple[str, ...], np.ndarray]:
    ids = [str(p) for p in points]
    order = sorted(range(len(ids)), key=lambda i: natural_key(ids[i]))
    return tuple(ids[i] for i in order), matrix[np.ix_(order, order)]


def validate_space(matrix, points: Sequence | None = None) -> FiniteSpace:
    """Check the three pseudo-metric axioms and return the space.

    ``matrix`` may contain the string ``"inf"``.  Raises
    :class:`MetricAxiomError` naming the first violated axiom; among triangle
    violations the lexicographically first ``(x, y, z)`` in canonical order is
    reported.
    """
    rows = [list(r) for r in matrix]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("distance matrix is not square")
    if points is None:
        points = [str(i) for i in range(n)]
    if len(points) != n:
        raise ValueError(f"{len(points)} point ids for a {n}x{n} matrix")
    ids = [str(p) for p in points]

    m = np.empty((n, n), dtype=float)
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            try:
                m[i, j] = _to_ext(v)
            except (TypeError, ValueError):
                raise MetricAxiomError("value", (ids[i], ids[j]), f"d({ids[i]}, {ids[j]}) = {v!r} is not a distance") from None
            if math.isnan(m[i, j]) or m[i, j] == -INF:
                raise MetricAxiomError("value", (ids[i], ids[j]), f"d({ids[i]}, {ids[j]}) = {v!r} is not a distance")

    pts, D = _canonical(ids, m)

    diag = np.flatnonzero(np.diag(D) != 0)
    if diag.size:
        x = pts[diag[0]]
        raise MetricAxiomError("zero-diagonal", (x,), f"d({x}, {x}) = {D[diag[0], diag[0]]} != 0")
    neg = np.argwhere(D < 0)
    if neg.size:
        i, j = neg[0]
        raise MetricAxiomError("nonnegativity", (pts[i], pts[j]), f"d({pts[i]}, {pts[j]}) = {D[i, j]} < 0")
    with np.errstate(invalid="ignore"):
        asym = np.argwhere(~((D == D.T) | (np.abs(D - D.T) <= TOL)))
    if asym.size:
        i, j = asym[0]
        raise MetricAxiomError(
            "symmetry", (pts[i], pts[j]), f"d({pts[i]}, {pts[j]}) = {D[i, j]} but d({pts[j]}, {pts[i]}) = {D[j, i]}"
        )

    witness = _triangle_witness(D)
    if witness is not None:
        i, j, k = witness
        raise MetricAxiomError(
            "triangle",
            (pts[i], pts[j], pts[k]),
            f"d({pts[i]}, {pts[j]}) = {D[i, j]} > d({pts[i]}, {pts[k]}) + d({pts[k]}, {pts[j]}) = {D[i, k] + D[k, j]}",
        )
    return FiniteSpace(pts, D)


def _triangle_witness(D: np.ndarray):
    # inf legs give an inf bound, so they never register as violations
    n = D.shape[0]
    best = None
    for k in range(n):
        with np.errstate(invalid="ignore"):
            bad = D > D[:, k, None] + D[None, k, :] + TOL
        hits = np.argwhere(bad)
        if hits.size:
            i, j = hits[0]
            if best is None or (i, j) < best[:2]:
                best = (int(i), int(j), k)
    return best


def ball(space: FiniteSpace, A: Iterable, r: float, within: Iterable | None = None) -> frozenset[str]:
    """Closed ball ``{y : d(a, y) <= r for some a in A}``.

    ``r = inf`` returns every point (infinite distances included) as long as
    ``A`` is nonempty.  ``within`` restricts the result to a subset.
    """
    A = space.subset(A)
    if not A:
        return frozenset()
    if r == INF:
        out = space.all
    else:
        rows = space.dist[space.positions(A)]
        out = space.from_mask((rows <= r + TOL).any(axis=0))
    if within is not None:
        out &= space.subset(within)
    return out


def diameter(space: FiniteSpace, A: Iterable) -> float:
    idx = space.positions(space.subset(A))
    if idx.size < 2:
        return 0.0
    return float(space.dist[np.ix_(idx, idx)].max())


def wedge_id(factor: int, point: str, basepoint: str) -> str:
    """Id in the wedge of ``point`` from factor ``factor``."""
    return WEDGE_BASEPOINT if str(point) == str(basepoint) else f"{factor}:{point}"


def wedge(spaces: Sequence[FiniteSpace], basepoints: Sequence) -> FiniteSpace:
    """Disjoint union with all basepoints glued into one point ``"*"``.

    A non-base point ``p`` of factor ``i`` is renamed ``"i:p"``.  Distances
    across factors run through the basepoint:
    ``d(a, b) = d_s(a, x_s) + d_t(x_t, b)``.
    """
    if len(spaces) != len(basepoints):
        raise ValueError("need exactly one basepoint per space")
    if not spaces:
        raise ValueError("wedge of no spaces")
    base = [str(b) for b in basepoints]
    for i, (sp, b) in enumerate(zip(spaces, base)):
        if b not in sp:
            raise KeyError(f"basepoint {b!r} is not in factor {i}")

    ids = [WEDGE_BASEPOINT]
    owner = [(-1, -1)]
    for i, (sp, b) in enumerate(zip(spaces, base)):
        for p in sp.points:
            if p != b:
                ids.append(wedge_id(i, p, b))
                owner.append((i, sp.pos(p)))
    n = len(ids)
    # distance from each wedge point to the basepoint, through its own factor
    to_base = np.zeros(n)
    for a, (i, pa) in enumerate(owner):
        if i >= 0:
            to_base[a] = spaces[i].dist[pa, spaces[i].pos(base[i])]
    D = to_base[:, None] + to_base[None, :]
    fac = np.array([o[0] for o in owner])
    for i, sp in enumerate(spaces):
        sel = np.flatnonzero(fac == i)
        src = np.array([owner[a][1] for a in sel], dtype=np.intp)
        D[np.ix_(sel, sel)] = sp.dist[np.ix_(src, src)]
    np.fill_diagonal(D, 0.0)
    pts, D = _canonical(ids, D)
    return FiniteSpace(pts, D)


def r_disjoint_witness(space: FiniteSpace, family: Sequence[Iterable], R: float):
    """First pair of points from distinct members at distance ``<= R``, or None."""
    members = [space.positions(space.subset(F)) for F in family]
    label = np.full(len(space), -1)
    for k, idx in enumerate(members):
        clash = idx[label[idx] >= 0]
        if clash.size:
            p = space.points[clash[0]]
            return (p, p)
        label[idx] = k
    used = np.flatnonzero(label >= 0)
    if used.size < 2:
        return None
    sub = space.dist[np.ix_(used, used)]
    lab = label[used]
    close = (sub <= R + TOL) if R != INF else np.ones_like(sub, dtype=bool)
    hits = np.argwhere(close & (lab[:, None] != lab[None, :]))
    if not hits.size:
        return None
    i, j = hits[0]
    return (space.points[used[i]], space.points[used[j]])


def is_r_disjoint(space: FiniteSpace, family: Sequence[Iterable], R: float) -> bool:
    """True iff points from distinct members are always at distance ``> R``."""
    return r_disjoint_witness(space, family, R) is None


def interval(length: int) -> FiniteSpace:
    if int(length) != length or length < 1:
        raise ValueError(f"interval length must be a positive integer, got {length!r}")
    x = np.arange(int(length), dtype=float)
    return FiniteSpace(tuple(str(i) for i in range(int(length))), np.abs(x[:, None] - x[None, :]))


def grid(*sides: int) -> FiniteSpace:
    """Integer grid with the l1 metric; point ids look like ``"2,0"``."""
    if len(sides) == 1 and isinstance(sides[0], (list, tuple)):
        sides = tuple(sides[0])
    if not sides or any(int(s) != s or s < 1 for s in sides):
        raise ValueError(f"grid sides must be positive integers, got {sides!r}")
    coords = np.array(np.meshgrid(*[np.arange(int(s)) for s in sides], indexing="ij")).reshape(len(sides), -1).T
    ids = [",".join(str(c) for c in row) for row in coords]
    D = np.zeros((len(ids), len(ids)))
    for k in range(coords.shape[1]):
        c = coords[:, k].astype(float)
        D += np.abs(c[:, None] - c[None, :])
    pts, D = _canonical(ids, D)
    return FiniteSpace(pts, D)


def graph_space(points: Sequence, edges: Iterable[Sequence]) -> FiniteSpace:
    """Shortest-path metric of a weighted undirected graph.

    ``edges`` are ``(u, v)`` or ``(u, v, w)`` with ``w >= 0`` (default 1);
    disconnected pairs get an infinite distance.
    """
    ids = [str(p) for p in points]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate point ids")
    pos = {p: i for i, p in enumerate(ids)}
    n = len(ids)
    W = np.full((n, n), INF)
    np.fill_diagonal(W, 0.0)
    for e in edges:
        if len(e) not in (2, 3):
            raise ValueError(f"malformed edge {e!r}")
        u, v = str(e[0]), str(e[1])
        w = _to_ext(e[2]) if len(e) == 3 else 1.0
        if u not in pos or v not in pos:
            raise ValueError(f"edge {e!r} mentions an unknown point")
        if not w >= 0 or w == INF:
            raise ValueError(f"edge weight must be finite and >= 0, got {e!r}")
        i, j = pos[u], pos[v]
        if i != j:
            W[i, j] = W[j, i] = min(W[i, j], w)
    rows, cols = np.nonzero(np.isfinite(W) & ~np.eye(n, dtype=bool))
    # explicit zeros in a csr matrix count as (zero-length) edges
    g = csr_matrix((W[rows, cols], (rows, cols)), shape=(n, n))
    D = shortest_path(g, method="D", directed=False)
    np.fill_diagonal(D, 0.0)
    pts, D = _canonical(ids, D)
    return FiniteSpace(pts, D)


def generate(kind: str, **params) -> FiniteSpace:
    """Build a space: ``interval(length)``, ``grid(sides)``, ``graph(points, edges)``
    or ``matrix(matrix, points=None)``."""
    try:
        if kind == "interval":
            return interval(params["length"])
        if kind == "grid":
            return grid(*params["sides"])
        if kind == "graph":
            return graph_space(params["points"], params["edges"])
        if kind == "matrix":
            return validate_space(params["matrix"], params.get("points"))
    except KeyError as e:
        raise ValueError(f"{kind}: missing parameter {e}") from None
    raise ValueError(f"unknown space kind {kind!r}")
