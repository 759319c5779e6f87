"""Seeded generators for test corpora: random graph metrics, block covers,
stripe decomposition trees and random trees of partitions of unity."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .cover import Cover, PartitionOfUnity, natural_pu, trivial_pu
from .decomp import DecompTree
from .metric import FiniteSpace, graph_space, natural_key
from .putree import PUTree

__all__ = [
    "random_graph_space",
    "bounded_geometry_graph",
    "axis_key",
    "block_cover",
    "random_cover",
    "stripe_tree",
    "random_pu",
    "random_pu_tree",
]


def random_graph_space(n: int, rng: np.random.Generator, p: float = 0.3, max_weight: int = 3) -> FiniteSpace:
    """Erdos-Renyi graph with integer weights; may be disconnected."""
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, int(rng.integers(1, max_weight + 1))))
    return graph_space(range(n), edges)


def bounded_geometry_graph(n: int, rng: np.random.Generator, degree: int = 3) -> FiniteSpace:
    """Random geometric-ish graph: a path plus a few short chords per vertex."""
    edges = [(i, i + 1, 1) for i in range(n - 1)]
    for i in range(n):
        for _ in range(int(rng.integers(0, degree))):
            j = i + int(rng.integers(2, 6))
            if j < n:
                edges.append((i, j, int(rng.integers(1, 4))))
    return graph_space(range(n), edges)


def axis_key(axis: int = 0) -> Callable[[str], int]:
    """Integer coordinate of an interval id (``"7"``) or grid id (``"7,2"``)."""
    return lambda p: int(str(p).split(",")[axis])


def _blocks(members: Sequence[str], key, width: int) -> dict[int, list[str]]:
    lo = min(key(p) for p in members)
    out: dict[int, list[str]] = {}
    for p in members:
        out.setdefault((key(p) - lo) // width, []).append(p)
    return out


def block_cover(space: FiniteSpace, widths: Sequence[int], enlarge: int, axes: Sequence[int] = (0,)) -> Cover:
    """Product blocks along ``axes`` (cut every ``widths[a]`` units), each
    enlarged by ``enlarge`` in the ambient metric."""
    cells: dict[tuple, set[str]] = {}
    keys = [axis_key(a) for a in axes]
    for p in space.points:
        cells.setdefault(tuple(k(p) // w for k, w in zip(keys, widths)), set()).add(p)
    D = space.dist
    elements = {}
    for c, members in sorted(cells.items()):
        rows = D[space.positions(members)]
        elements[".".join(map(str, c))] = space.from_mask((rows <= enlarge).any(axis=0))
    return Cover(space, elements)


def random_cover(space: FiniteSpace, rng: np.random.Generator, k: int, domain=None) -> Cover:
    """Each domain point joins a random element; every element is then grown by
    one random ball so that elements overlap."""
    dom = space.ordered(space.all if domain is None else domain)
    k = max(1, min(k, len(dom)))
    assign = {p: int(rng.integers(0, k)) for p in dom}
    members = [set() for _ in range(k)]
    for p, j in assign.items():
        members[j].add(p)
    idx = space.positions(dom)
    for j in range(k):
        if not members[j]:
            members[j].add(dom[int(rng.integers(0, len(dom)))])
        centre = space.pos(sorted(members[j], key=natural_key)[0])
        radius = float(rng.integers(0, 4))
        near = idx[space.dist[centre, idx] <= radius]
        members[j].update(space.points[i] for i in near)
    return Cover(space, {f"c{j}": m for j, m in enumerate(members)}, frozenset(dom))


def stripe_tree(members: Sequence[str], key, plan: Sequence[tuple[int, int]]) -> DecompTree:
    """Decomposition tree cutting along ``key`` into blocks.

    ``plan[k] = (width, n)``: at level ``k`` each node is cut into blocks of
    ``width`` and the blocks are dealt into ``n`` layers by block index mod
    ``n``.  Same-layer blocks are ``(n - 1) * width`` apart (plus the unit gap).
    """
    members = list(members)
    if not plan:
        return DecompTree(frozenset(members))
    width, n = plan[0]
    blocks = _blocks(members, key, width)
    layers: dict[int, list[DecompTree]] = {}
    for b, pts in sorted(blocks.items()):
        layers.setdefault(b % n, []).append(stripe_tree(pts, key, plan[1:]))
    kids = tuple(DecompTree(frozenset().union(*(t.members for t in ts)), tuple(ts)) for _, ts in sorted(layers.items()))
    return DecompTree(frozenset(members), kids)


def random_pu(space: FiniteSpace, domain, rng: np.random.Generator, label_prefix: str) -> PartitionOfUnity:
    """Either an index partition of a random cover or random sparse weights."""
    dom = space.ordered(domain)
    k = int(rng.integers(1, 5))
    if rng.random() < 0.6:
        cover = random_cover(space, rng, k, frozenset(dom))
        pu = natural_pu(cover, float(rng.choice([1, 2, 3])))
    else:
        W = rng.random((len(dom), k)) * (rng.random((len(dom), k)) < 0.7)
        W[np.arange(len(dom)), rng.integers(0, k, len(dom))] += 0.1
        pu = PartitionOfUnity(space, dom, tuple(f"c{j}" for j in range(k)), W / W.sum(axis=1, keepdims=True))
    pu = pu.restrict_labels(pu.nonempty_labels())
    return pu.relabel(lambda s: f"{label_prefix}{s}")


def random_pu_tree(space: FiniteSpace, rng: np.random.Generator, height: int, domain=None, prefix: str = "") -> PUTree:
    """Valid tree of partitions of unity of height at most ``height``."""
    dom = space.all if domain is None else frozenset(domain)
    if height == 0 or (prefix and rng.random() < 0.25):
        return PUTree(trivial_pu(space, dom))
    pu = random_pu(space, dom, rng, "")
    if len(pu.labels) == 1 and height == 1:
        return PUTree(pu, {pu.labels[0]: PUTree(trivial_pu(space, dom))})
    return PUTree(pu, {s: random_pu_tree(space, rng, height - 1, pu.stratum(s), prefix + s + "/") for s in pu.labels})


def stripe_widths(separations: Sequence[float], ns: Sequence[int], margin: int = 1) -> list[int]:
    """Smallest block widths whose same-layer gaps beat each separation."""
    return [int(math.floor(S / max(n - 1, 1))) + margin for S, n in zip(separations, ns)]
