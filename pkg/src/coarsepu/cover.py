"""Covers, partitions of unity and their continuity moduli.

A :class:`PartitionOfUnity` stores a dense weight matrix (domain points x
labels).  Float weights are the default; the constructions that only divide
integers (:func:`natural_pu`, :func:`characteristic_pu`) accept
``exact=True`` and then produce :class:`fractions.Fraction` weights in an
object array, which every other operation here handles as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .metric import INF, TOL, FiniteSpace, ball, natural_key

__all__ = [
    "Cover",
    "CoverError",
    "PartitionError",
    "PartitionOfUnity",
    "ContinuityReport",
    "TRIVIAL_LABEL",
    "trivial_pu",
    "multiplicity",
    "lebesgue_number",
    "index",
    "index_vector",
    "natural_pu",
    "continuity_modulus",
    "l1_normalize",
    "mix",
    "characteristic_pu",
    "blend",
    "trim",
]

TRIVIAL_LABEL = "*"


class CoverError(ValueError):
    """A family fails to cover the set it is supposed to cover."""


class PartitionError(ValueError):
    """Partitions of unity that cannot be combined (domains or labels clash)."""


def _labelled(family) -> dict[str, Iterable]:
    if isinstance(family, Mapping):
        return {str(k): v for k, v in family.items()}
    return {str(i): v for i, v in enumerate(family)}


@dataclass(frozen=True, eq=False)
class Cover:
    """Labelled family of subsets covering ``domain`` (default: the whole space)."""

    space: FiniteSpace
    elements: Mapping[str, frozenset[str]]
    domain: frozenset[str] = None

    def __post_init__(self):
        sp = self.space
        dom = sp.all if self.domain is None else sp.subset(self.domain)
        elems = {label: sp.subset(members) for label, members in _labelled(self.elements).items()}
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "elements", elems)
        for label, members in elems.items():
            if not members <= dom:
                extra = sorted(members - dom, key=natural_key)
                raise CoverError(f"element {label!r} leaves the domain at {extra[:5]}")
        covered = frozenset().union(*elems.values()) if elems else frozenset()
        if covered != dom:
            missing = sorted(dom - covered, key=natural_key)
            raise CoverError(f"family does not cover {len(missing)} point(s), e.g. {missing[:5]}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.elements)

    def membership(self) -> tuple[tuple[str, ...], np.ndarray]:
        """Domain in canonical order and the boolean (point x element) incidence."""
        dom = self.space.ordered(self.domain)
        pos = {p: i for i, p in enumerate(dom)}
        M = np.zeros((len(dom), len(self.elements)), dtype=bool)
        for j, members in enumerate(self.elements.values()):
            M[[pos[p] for p in members], j] = True
        return dom, M


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Weights ``weights[i, j] = phi_{labels[j]}(domain[i])``.

    The domain may be a proper subset of the space (a partial partition of
    unity).  Construction only checks shapes; :meth:`problems` reports
    negative weights and rows that do not sum to one.
    """

    space: FiniteSpace
    domain: tuple[str, ...]
    labels: tuple[str, ...]
    weights: np.ndarray
    _row: dict = field(init=False, repr=False)

    def __post_init__(self):
        given = [str(p) for p in self.domain]
        dom = self.space.ordered(self.space.subset(given))
        if len(dom) != len(given):
            raise PartitionError("duplicate points in the domain")
        labels = tuple(str(s) for s in self.labels)
        if len(set(labels)) != len(labels):
            raise PartitionError("duplicate labels")
        W = np.asarray(self.weights)
        if W.shape != (len(dom), len(labels)):
            raise PartitionError(f"weights shape {W.shape} != ({len(dom)}, {len(labels)})")
        if tuple(given) != dom:
            at = {p: i for i, p in enumerate(given)}
            W = W[[at[p] for p in dom]]
        W = W.copy()
        W.setflags(write=False)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "_row", {p: i for i, p in enumerate(dom)})

    @classmethod
    def from_dicts(cls, space: FiniteSpace, weights: Mapping[str, Mapping[str, float]], labels: Sequence[str] | None = None):
        """Build from ``{point: {label: weight}}``; missing entries are zero."""
        if labels is None:
            seen = {}
            for vec in weights.values():
                for s in vec:
                    seen.setdefault(str(s), None)
            labels = list(seen)
        labels = [str(s) for s in labels]
        col = {s: j for j, s in enumerate(labels)}
        dom = list(weights)
        exact = any(isinstance(w, Fraction) for vec in weights.values() for w in vec.values())
        W = np.zeros((len(dom), len(labels)), dtype=object if exact else float)
        if exact:
            W[:] = Fraction(0)
        for i, p in enumerate(dom):
            for s, w in weights[p].items():
                W[i, col[str(s)]] = w
        return cls(space, tuple(str(p) for p in dom), tuple(labels), W)

    @property
    def exact(self) -> bool:
        return self.weights.dtype == object

    @property
    def domain_set(self) -> frozenset[str]:
        return frozenset(self.domain)

    @property
    def is_trivial(self) -> bool:
        return len(self.labels) == 1

    def col(self, label) -> int:
        return self.labels.index(str(label))

    def weight(self, x, label):
        return self.weights[self._row[str(x)], self.col(label)]

    def vector(self, x) -> dict[str, float]:
        """Sparse weight vector at ``x`` (zero weights omitted)."""
        row = self.weights[self._row[str(x)]]
        return {s: w for s, w in zip(self.labels, row) if w != 0}

    def as_dicts(self) -> dict[str, dict[str, float]]:
        return {p: self.vector(p) for p in self.domain}

    def stratum(self, label) -> frozenset[str]:
        """Points with strictly positive weight on ``label``."""
        c = self.weights[:, self.col(label)]
        return frozenset(p for p, w in zip(self.domain, c) if w > 0)

    def strata(self) -> dict[str, frozenset[str]]:
        return {s: self.stratum(s) for s in self.labels}

    def positions(self) -> np.ndarray:
        return np.array([self.space.pos(p) for p in self.domain], dtype=np.intp)

    def relabel(self, mapping) -> PartitionOfUnity:
        f = mapping if callable(mapping) else (lambda s: mapping[s])
        return PartitionOfUnity(self.space, self.domain, tuple(f(s) for s in self.labels), self.weights)

    def restrict_labels(self, labels: Iterable[str]) -> PartitionOfUnity:
        """Drop every other label; the dropped columns must be zero."""
        keep = [self.col(s) for s in labels]
        drop = sorted(set(range(len(self.labels))) - set(keep))
        if drop and np.any(self.weights[:, drop] != 0):
            raise PartitionError("cannot drop labels that carry weight")
        return PartitionOfUnity(self.space, self.domain, tuple(self.labels[j] for j in keep), self.weights[:, keep])

    def nonempty_labels(self) -> tuple[str, ...]:
        return tuple(s for j, s in enumerate(self.labels) if np.any(self.weights[:, j] > 0))

    def problems(self, tol: float = TOL) -> list[str]:
        out = []
        W = self.weights
        if W.size and np.any(W < 0):
            i, j = np.argwhere(W < 0)[0]
            out.append(f"negative weight {W[i, j]} at point {self.domain[i]!r}, label {self.labels[j]!r}")
        if W.size and np.any(W > 1 + tol):
            i, j = np.argwhere(W > 1 + tol)[0]
            out.append(f"weight {W[i, j]} > 1 at point {self.domain[i]!r}, label {self.labels[j]!r}")
        sums = W.sum(axis=1) if len(self.labels) else np.zeros(len(self.domain))
        bad = np.flatnonzero(np.abs(np.asarray(sums, dtype=float) - 1) > tol)
        if bad.size:
            i = bad[0]
            out.append(f"weights at point {self.domain[i]!r} sum to {float(sums[i])!r}")
        return out


def trivial_pu(space: FiniteSpace, domain: Iterable, label: str = TRIVIAL_LABEL, exact: bool = False) -> PartitionOfUnity:
    dom = space.ordered(space.subset(domain))
    W = np.full((len(dom), 1), Fraction(1) if exact else 1.0, dtype=object if exact else float)
    return PartitionOfUnity(space, dom, (str(label),), W)


@dataclass(frozen=True)
class ContinuityReport:
    """Largest l1 gap over pairs at distance ``<= R`` and the first pair reaching it."""

    R: float
    modulus: float
    witness: tuple[str, str] | None

    def is_continuous(self, eps: float, tol: float = TOL) -> bool:
        return self.modulus <= eps + tol


def multiplicity(cover: Cover) -> int:
    _, M = cover.membership()
    return int(M.sum(axis=1).max()) if M.size else 0


def lebesgue_number(cover: Cover) -> float:
    """Largest candidate radius ``L`` such that every closed ``L``-ball (inside
    the domain) lies in a single element.

    Candidates are 0, the distances realized between domain points, and
    ``inf``.  Returns ``-inf`` in the degenerate case where some point has a
    zero-distance twin in no common element.
    """
    sp = cover.space
    dom, M = cover.membership()
    if not dom:
        return INF
    idx = sp.positions(dom)
    D = sp.dist[np.ix_(idx, idx)]
    # reach[x]: B(x, L) fits in some element iff L < reach[x]; 2 * inf marks "even L = inf"
    reach = np.full(len(dom), -INF)
    whole = False
    for j in range(M.shape[1]):
        inside = M[:, j]
        rows = np.flatnonzero(inside)
        if not rows.size:
            continue
        if inside.all():
            whole = True
            continue
        gap = D[np.ix_(rows, np.flatnonzero(~inside))].min(axis=1)
        reach[rows] = np.maximum(reach[rows], gap)
    if whole:
        return INF
    g = float(reach.min())
    cands = np.unique(np.concatenate([[0.0], D[np.isfinite(D)].ravel()]))
    ok = cands[cands + TOL < g]
    return float(ok.max()) if ok.size else -INF


def _hop_graph(space: FiniteSpace, dom_idx: np.ndarray, R: float) -> csr_matrix:
    D = space.dist[np.ix_(dom_idx, dom_idx)]
    adj = np.ones_like(D, dtype=bool) if R == INF else (D <= R + TOL)
    np.fill_diagonal(adj, False)
    return csr_matrix(adj.astype(float))


def _escape_hops(graph: csr_matrix, inside: np.ndarray) -> np.ndarray:
    """Hop distance from every vertex to the nearest vertex outside ``inside``."""
    sources = np.flatnonzero(~inside)
    if not sources.size:
        return np.full(inside.shape[0], INF)
    return dijkstra(graph, directed=False, indices=sources, unweighted=True, min_only=True)


def index_vector(space: FiniteSpace, V: Iterable, R: float, domain: Iterable | None = None) -> dict[str, float]:
    """Escape index of every domain point from ``V`` (see :func:`index`)."""
    dom = space.ordered(space.all if domain is None else space.subset(domain))
    V = space.subset(V)
    inside = np.array([p in V for p in dom])
    hops = _escape_hops(_hop_graph(space, space.positions(dom), R), inside)
    return {p: (INF if np.isinf(h) else int(h)) for p, h in zip(dom, hops)}


def index(space: FiniteSpace, x, V: Iterable, R: float, domain: Iterable | None = None):
    """Fewest ``R``-hops needed to leave ``V`` starting from ``x``.

    Zero when ``x`` is outside ``V``; ``inf`` when no chain of points at
    mutual distance ``<= R`` escapes ``V``.  Chains run inside ``domain``
    (default: the whole space).
    """
    if R < 0:
        raise ValueError("R must be >= 0")
    x = str(x)
    V = space.subset(V)
    if x not in V:
        return 0
    return index_vector(space, V, R, domain)[x]


def natural_pu(cover: Cover, R: float, exact: bool = False) -> PartitionOfUnity:
    """Partition of unity proportional to escape indices.

    At a point where some element has infinite index the weight is spread
    evenly over those elements.
    """
    sp = cover.space
    dom, M = cover.membership()
    graph = _hop_graph(sp, sp.positions(dom), R)
    I = np.column_stack([_escape_hops(graph, M[:, j]) for j in range(M.shape[1])]) if M.shape[1] else np.zeros((len(dom), 0))
    infinite = np.isinf(I)
    any_inf = infinite.any(axis=1)
    totals = np.where(infinite, 0, I).sum(axis=1)
    if np.any(~any_inf & (totals == 0)):
        bad = dom[int(np.flatnonzero(~any_inf & (totals == 0))[0])]
        raise CoverError(f"every index vanishes at {bad!r}; the family does not cover it")
    if exact:
        W = np.empty(I.shape, dtype=object)
        for i in range(I.shape[0]):
            if any_inf[i]:
                k = int(infinite[i].sum())
                W[i] = [Fraction(1, k) if f else Fraction(0) for f in infinite[i]]
            else:
                t = int(totals[i])
                W[i] = [Fraction(int(v), t) for v in I[i]]
    else:
        W = np.where(any_inf[:, None], infinite / np.maximum(infinite.sum(axis=1), 1)[:, None], 0.0)
        fin = ~any_inf
        W[fin] = I[fin] / totals[fin, None]
    return PartitionOfUnity(sp, dom, cover.labels, W)


def _pairs(pu: PartitionOfUnity, R: float) -> tuple[np.ndarray, np.ndarray]:
    idx = pu.positions()
    D = pu.space.dist[np.ix_(idx, idx)]
    close = np.ones_like(D, dtype=bool) if R == INF else (D <= R + TOL)
    return np.nonzero(np.triu(close, 1))


def continuity_modulus(pu: PartitionOfUnity, R: float, chunk: int = 200_000) -> ContinuityReport:
    """Exhaustive max of ``|phi(x) - phi(y)|_1`` over domain pairs with ``d <= R``.

    Ties go to the lexicographically first pair in canonical point order.
    """
    I, J = _pairs(pu, R)
    if not I.size:
        return ContinuityReport(R, 0.0 if not pu.exact else Fraction(0), None)
    if pu.exact:
        W = pu.weights
        gaps = [sum(abs(a - b) for a, b in zip(W[i], W[j])) for i, j in zip(I, J)]
        k = max(range(len(gaps)), key=lambda t: (gaps[t], -t))
        return ContinuityReport(R, gaps[k], (pu.domain[I[k]], pu.domain[J[k]]))
    W = csr_matrix(np.asarray(pu.weights, dtype=float))
    best, arg = -1.0, 0
    for lo in range(0, I.size, chunk):
        i, j = I[lo : lo + chunk], J[lo : lo + chunk]
        gaps = np.asarray(abs(W[i] - W[j]).sum(axis=1)).ravel()
        k = int(np.argmax(gaps))
        if gaps[k] > best:
            best, arg = float(gaps[k]), lo + k
    return ContinuityReport(R, best, (pu.domain[I[arg]], pu.domain[J[arg]]))


def l1_normalize(x):
    """``x / |x|_1`` for a nonnegative vector given as a mapping or a sequence."""
    if isinstance(x, Mapping):
        vals = list(x.values())
        if any(v < 0 for v in vals):
            raise ValueError("negative coordinate")
        total = sum(vals)
        if total == 0:
            raise ValueError("cannot normalize the zero vector")
        return {k: v / total for k, v in x.items()}
    arr = np.asarray(x)
    if np.any(arr < 0):
        raise ValueError("negative coordinate")
    total = arr.sum()
    if total == 0:
        raise ValueError("cannot normalize the zero vector")
    return arr / total


def _embed(pu: PartitionOfUnity, dom: tuple[str, ...]) -> np.ndarray:
    """``pu`` weights laid out over ``dom`` rows, zero outside its domain."""
    W = np.zeros((len(dom), len(pu.labels)), dtype=pu.weights.dtype)
    if pu.exact:
        W[:] = Fraction(0)
    rows = {p: i for i, p in enumerate(dom)}
    W[[rows[p] for p in pu.domain]] = pu.weights
    return W


def mix(phi: PartitionOfUnity, parts: Mapping[str, PartitionOfUnity]) -> PartitionOfUnity:
    """Refine each stratum of ``phi`` by its own partition of unity.

    The weight of a label ``c`` of ``parts[s]`` at ``x`` is
    ``phi_s(x) * parts[s]_c(x)``.  ``parts`` may omit labels whose stratum
    is empty.
    """
    seen: dict[str, str] = {}
    blocks = []
    for j, s in enumerate(phi.labels):
        stratum = phi.stratum(s)
        part = parts.get(s)
        if part is None:
            if stratum:
                raise PartitionError(f"no partition of unity for the stratum of {s!r}")
            continue
        if part.space is not phi.space:
            raise PartitionError(f"part {s!r} lives on another space")
        if part.domain_set != stratum:
            raise PartitionError(f"part {s!r} has a domain different from the stratum of {s!r}")
        for c in part.labels:
            if c in seen:
                raise PartitionError(f"label {c!r} used by both {seen[c]!r} and {s!r}")
            seen[c] = s
        blocks.append(phi.weights[:, j, None] * _embed(part, phi.domain))
    extra = set(parts) - set(phi.labels)
    if extra:
        raise PartitionError(f"parts for unknown labels {sorted(extra)}")
    W = np.hstack(blocks) if blocks else np.zeros((len(phi.domain), 0))
    return PartitionOfUnity(phi.space, phi.domain, tuple(seen), W)


def characteristic_pu(
    space: FiniteSpace, family, R: float, domain: Iterable | None = None, exact: bool = False
) -> PartitionOfUnity:
    """Normalized sum of indicator functions of the ``R``-enlarged members."""
    dom = space.ordered(space.all if domain is None else space.subset(domain))
    members = _labelled(family)
    M = np.zeros((len(dom), len(members)), dtype=int)
    rows = {p: i for i, p in enumerate(dom)}
    for j, X in enumerate(members.values()):
        for p in ball(space, X, R, within=dom):
            M[rows[p], j] = 1
    counts = M.sum(axis=1)
    if np.any(counts == 0):
        raise CoverError(f"enlarged family misses {dom[int(np.flatnonzero(counts == 0)[0])]!r}")
    if exact:
        W = np.array([[Fraction(int(v), int(c)) for v in row] for row, c in zip(M, counts)], dtype=object)
        W = W.reshape(M.shape)
    else:
        W = M / counts[:, None]
    return PartitionOfUnity(space, dom, tuple(members), W)


def blend(phi: PartitionOfUnity, psi: PartitionOfUnity, eps) -> PartitionOfUnity:
    """``(1 - eps/4) phi + (eps/4) psi`` over the disjoint union of label sets.

    ``eps`` must lie in ``[0, 4)``; ``eps = 0`` returns ``phi`` with zero
    columns for the labels of ``psi``.
    """
    if not 0 <= eps < 4:
        raise ValueError(f"eps must lie in [0, 4), got {eps}")
    if phi.space is not psi.space or phi.domain != psi.domain:
        raise PartitionError("blend needs two partitions on the same domain")
    clash = set(phi.labels) & set(psi.labels)
    if clash:
        raise PartitionError(f"label collision {sorted(clash)}")
    a = eps / 4
    W = np.hstack([(1 - a) * phi.weights, a * psi.weights])
    return PartitionOfUnity(phi.space, phi.domain, phi.labels + psi.labels, W)


def trim(phi: PartitionOfUnity, eps) -> PartitionOfUnity:
    """Shrink each support to the fewest labels carrying mass ``> 1 - eps/8``.

    Labels are taken largest weight first (ties by label order); the dropped
    mass goes to the largest retained label, so each point moves by at most
    ``eps/4`` in l1.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    threshold = 1 - eps / 8
    W = phi.weights.copy()
    rank = sorted(range(len(phi.labels)), key=lambda j: natural_key(phi.labels[j]))
    for i in range(W.shape[0]):
        order = sorted(rank, key=lambda j: -W[i, j])
        kept, mass = 0, 0
        for j in order:
            if W[i, j] <= 0:
                break
            mass += W[i, j]
            kept += 1
            if mass > threshold:
                break
        dropped = order[kept:]
        if not dropped:
            continue
        spill = sum(W[i, j] for j in dropped)
        for j in dropped:
            W[i, j] = 0
        W[i, order[0]] += spill
    return PartitionOfUnity(phi.space, phi.domain, phi.labels, W)
