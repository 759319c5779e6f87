"""Decomposition trees and disjoint decompositions, and their conversion into
trees of partitions of unity.

Depth convention: the root sits at depth 0.  Level ``k`` of a schedule
(1-based) governs the pair of depths ``2k - 2`` (a union node with at most
``n_k`` children) and ``2k - 1`` (a node whose children are an
``R_k``-disjoint cover of it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .cover import Cover, continuity_modulus, natural_pu, trivial_pu
from .metric import INF, TOL, FiniteSpace, ball, diameter, natural_key, r_disjoint_witness
from .putree import PUTree
from .validation import ValidationReport

__all__ = [
    "DecompTree",
    "Decomposition",
    "Level",
    "Schedule",
    "UniformlyBounded",
    "ConversionError",
    "EnlargementError",
    "validate_decomp_tree",
    "check_decomposition",
    "cover_from_decomposition",
    "enlarge_tree",
    "conversion_radii",
    "disjointness_schedule",
    "decomp_to_pu_tree",
    "target_of_path",
    "greedy_nets",
    "max_ball_size",
    "annuli",
    "annuli_tree",
]


class ConversionError(ValueError):
    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report


class EnlargementError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DecompTree:
    members: frozenset[str]
    children: tuple["DecompTree", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(str(p) for p in self.members))
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def height(self) -> int:
        return 0 if self.is_leaf else 1 + max(c.height for c in self.children)

    def walk(self, depth: int = 0) -> Iterator[tuple[int, "DecompTree"]]:
        yield depth, self
        for c in self.children:
            yield from c.walk(depth + 1)

    def leaves(self) -> list["DecompTree"]:
        return [t for _, t in self.walk() if t.is_leaf]

    def same_shape(self, other: "DecompTree") -> bool:
        return len(self.children) == len(other.children) and all(
            a.same_shape(b) for a, b in zip(self.children, other.children)
        )


@dataclass(frozen=True)
class Level:
    """One schedule entry.  ``n`` may be left out when it is read off a tree."""

    R: float
    n: int | None = None
    eps: float | None = None

    def __post_init__(self):
        if not self.R >= 0:
            raise ValueError(f"R must be >= 0, got {self.R}")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        if self.eps is not None and not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class Schedule:
    levels: tuple[Level, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence]) -> "Schedule":
        """From ``(R, n)`` pairs."""
        return cls(tuple(Level(float(R), int(n)) for R, n in pairs))

    @classmethod
    def from_eps_r(cls, pairs: Iterable[Sequence], n: Sequence[int] | None = None) -> "Schedule":
        """From ``(eps, R)`` pairs, optionally with fan-out bounds ``n``."""
        pairs = list(pairs)
        ns = list(n) if n is not None else [None] * len(pairs)
        if len(ns) != len(pairs):
            raise ValueError("one fan-out bound per level")
        return cls(tuple(Level(float(R), k, float(e)) for (e, R), k in zip(pairs, ns)))

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, k):
        return self.levels[k]


@dataclass(frozen=True)
class UniformlyBounded:
    """Every member has diameter ``<= S``."""

    S: float

    @property
    def name(self) -> str:
        return f"UniformlyBounded({self.S})"

    def __call__(self, space: FiniteSpace, family: Iterable[Iterable]) -> bool:
        return all(diameter(space, F) <= self.S + TOL for F in family)


Predicate = Callable[[FiniteSpace, list], bool]


@dataclass(frozen=True)
class Decomposition:
    """``layers[i]`` is a family of subsets; all members together cover the space."""

    layers: tuple[tuple[frozenset[str], ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "layers", tuple(tuple(frozenset(str(p) for p in F) for F in layer) for layer in self.layers)
        )

    def members(self) -> list[frozenset[str]]:
        return [F for layer in self.layers for F in layer]


def _fanout_levels(tree: DecompTree) -> list[int]:
    out: list[int] = []
    for depth, node in tree.walk():
        if depth % 2 == 0 and not node.is_leaf:
            k = depth // 2
            out.extend([0] * (k + 1 - len(out)))
            out[k] = max(out[k], len(node.children))
    return out


def validate_decomp_tree(space: FiniteSpace, tree: DecompTree, schedule: Schedule) -> ValidationReport:
    """Check the four decomposition-tree conditions against ``schedule``.

    Condition names: ``root``, ``nested``, ``union`` (fan-out and union at
    even depths), ``disjoint`` (cover and ``R``-disjointness at odd depths),
    ``schedule`` (too few levels), ``points`` (unknown ids).
    """
    report = ValidationReport()
    if tree.members != space.all:
        report.add("root", f"root holds {len(tree.members)} of {len(space)} points")
    for depth, node in tree.walk():
        unknown = [p for p in node.members if p not in space]
        if unknown:
            report.add("points", f"node at depth {depth} mentions unknown points {sorted(unknown)[:3]}", depth)
            continue
        for c in node.children:
            if not c.members <= node.members:
                extra = sorted(c.members - node.members, key=natural_key)[:3]
                report.add("nested", f"child at depth {depth + 1} leaves its parent at {extra}", depth + 1, *extra)
        if node.is_leaf:
            continue
        k = depth // 2
        if k >= len(schedule):
            report.add("schedule", f"depth {depth} needs schedule level {k + 1}, only {len(schedule)} given", depth)
            continue
        level = schedule[k]
        union = frozenset().union(*(c.members for c in node.children))
        if depth % 2 == 0:
            if level.n is not None and len(node.children) > level.n:
                report.add("union", f"node at depth {depth} has {len(node.children)} > {level.n} children", depth)
            if union != node.members:
                missing = sorted(node.members - union, key=natural_key)[:3]
                report.add("union", f"children at depth {depth + 1} miss {missing}", depth, *missing)
        else:
            if union != node.members:
                missing = sorted(node.members - union, key=natural_key)[:3]
                report.add("disjoint", f"children at depth {depth + 1} miss {missing}", depth, *missing)
            w = r_disjoint_witness(space, [c.members for c in node.children], level.R)
            if w is not None:
                report.add(
                    "disjoint",
                    f"children of a depth-{depth} node are not {level.R}-disjoint: d{w} = {space.d(*w)}",
                    depth,
                    *w,
                )
    return report


def check_decomposition(space: FiniteSpace, decomp: Decomposition, m: int, Rs: Sequence[float], P: Predicate) -> bool:
    """Layers cover the space, layer ``i`` is ``Rs[i]``-disjoint, and ``P`` holds
    on the family of all members."""
    if len(decomp.layers) != m:
        raise ValueError(f"expected {m} layers, got {len(decomp.layers)}")
    if len(Rs) < m:
        raise ValueError(f"need {m} disjointness parameters, got {len(Rs)}")
    members = decomp.members()
    if frozenset().union(*members) != space.all:
        return False
    if any(r_disjoint_witness(space, layer, R) is not None for layer, R in zip(decomp.layers, Rs)):
        return False
    return bool(P(space, members))


def cover_from_decomposition(space: FiniteSpace, decomp: Decomposition, r: float) -> Cover:
    """Cover by the closed ``r``-neighbourhoods of all members.

    Enlarged members of one layer must stay pairwise disjoint, so the
    multiplicity is at most the number of layers; the Lebesgue number is at
    least ``r`` by construction.  Labels are ``"i.j"`` (layer, member).
    """
    elements = {}
    for i, layer in enumerate(decomp.layers):
        owner: dict[str, str] = {}
        for j, F in enumerate(layer):
            if not F:
                continue
            label = f"{i}.{j}"
            big = ball(space, F, r)
            for p in big:
                if p in owner:
                    raise EnlargementError(f"enlarged members {owner[p]} and {label} of layer {i} share point {p!r}")
                owner[p] = label
            elements[label] = big
    return Cover(space, elements)


def enlarge_tree(space: FiniteSpace, tree: DecompTree, radii: Sequence[float]) -> DecompTree:
    """Step ``j`` (1-based) replaces every node at depth ``>= 2j - 1`` by its
    ``radii[j-1]``-ball taken inside its depth-``2j - 2`` ancestor, as that
    ancestor stands after step ``j - 1``.

    Union and cover relations survive; separations at odd levels shrink by
    at most twice the radii applied so far.  Raises :class:`EnlargementError`
    if two children of an odd-depth node come to share a point.
    """
    radii = list(radii)

    def step(node: DecompTree, depth: int, j: int, r: float, within: frozenset[str] | None) -> DecompTree:
        members = node.members
        if within is not None:
            members = ball(space, members, r, within=within)
        if depth == 2 * j - 2:
            within = members
        kids = tuple(step(c, depth + 1, j, r, within) for c in node.children)
        return DecompTree(members, kids)

    out = tree
    for j, r in enumerate(radii, start=1):
        if r == 0:
            continue
        out = step(out, 0, j, r, None)
    for depth, node in out.walk():
        if depth % 2 == 1 and len(node.children) > 1:
            seen: dict[str, int] = {}
            for k, c in enumerate(node.children):
                for p in c.members:
                    if p in seen:
                        raise EnlargementError(
                            f"children {seen[p]} and {k} of a depth-{depth} node overlap at {p!r} after enlargement"
                        )
                    seen[p] = k
    return out


def _resolve_fanout(tree: DecompTree, schedule: Schedule) -> list[int]:
    observed = _fanout_levels(tree)
    ns = []
    for k, level in enumerate(schedule.levels):
        if level.n is not None:
            ns.append(int(level.n))
        else:
            ns.append(max(1, observed[k] if k < len(observed) else 1))
    return ns


def conversion_radii(schedule: Schedule, ns: Sequence[int]) -> list[float]:
    """Enlargement radius ``4 n_k R_k / eps_k`` per level."""
    return [4 * n * lv.R / lv.eps for lv, n in zip(schedule.levels, ns)]


def disjointness_schedule(schedule: Schedule, ns: Sequence[int]) -> Schedule:
    """Separations ``S_k = sum_{i <= k} 8 n_i R_i / eps_i`` required before enlarging."""
    S, acc = [], 0.0
    for r, n in zip(conversion_radii(schedule, ns), ns):
        acc += 2 * r
        S.append(Level(acc, n))
    return Schedule(tuple(S))


def decomp_to_pu_tree(space: FiniteSpace, tree: DecompTree, schedule: Schedule, verify: bool = True) -> PUTree:
    """Turn a decomposition tree into a tree of partitions of unity.

    ``schedule`` supplies ``(eps_k, R_k)`` per level (``n_k`` defaults to
    the observed fan-out).  The tree must be a decomposition tree for the
    separations of :func:`disjointness_schedule`.  After enlarging by
    :func:`conversion_radii`, every union node gets the index partition of
    unity of the cover formed by its grandchildren (or by a child that is a
    leaf), at scale ``R_k``.  Node ``k - 1`` levels down is then
    ``(eps_k, R_k)``-continuous; ``verify`` re-measures this.
    """
    if any(lv.eps is None for lv in schedule.levels):
        raise ValueError("every schedule level needs eps")
    ns = _resolve_fanout(tree, schedule)
    need = disjointness_schedule(schedule, ns)
    report = validate_decomp_tree(space, tree, need)
    if not report.ok:
        S = ", ".join(f"S_{k + 1}={lv.R:g}" for k, lv in enumerate(need.levels))
        raise ConversionError(f"tree is not a decomposition tree for {S}: {report.violations[0].message}", report)
    enlarged = enlarge_tree(space, tree, conversion_radii(schedule, ns))

    def build(node: DecompTree, domain: frozenset[str], k: int) -> PUTree:
        if node.is_leaf:
            return PUTree(trivial_pu(space, domain))
        elements, targets = {}, {}
        for j, child in enumerate(node.children):
            pieces = [(f"{j}", child)] if child.is_leaf else [(f"{j}.{l}", g) for l, g in enumerate(child.children)]
            for label, target in pieces:
                E = target.members & domain
                if E:
                    elements[label] = E
                    targets[label] = target
        pu = natural_pu(Cover(space, elements, domain), schedule[k].R)
        pu = pu.restrict_labels(pu.nonempty_labels())
        # a target that is a leaf (a leaf child, or a leaf grandchild) yields a trivial leaf
        return PUTree(pu, {s: build(targets[s], pu.stratum(s), k + 1) for s in pu.labels})

    out = build(enlarged, space.all, 0)
    if verify:
        for path, node in out.walk():
            k = len(path)
            if node.is_leaf:
                continue
            rep = continuity_modulus(node.pu, schedule[k].R)
            if rep.modulus > schedule[k].eps + TOL:
                raise ConversionError(
                    f"node {'/'.join(path) or '<root>'} has modulus {rep.modulus} > eps_{k + 1} = {schedule[k].eps}"
                )
    return out


def target_of_path(tree: DecompTree, path: Sequence[str]) -> DecompTree:
    """Node of ``tree`` that a path of :func:`decomp_to_pu_tree` labels points to.

    Each label is ``"j"`` (leaf child ``j``) or ``"j.l"`` (grandchild ``l``
    of child ``j``).
    """
    node = tree
    for label in path:
        for part in str(label).split("."):
            node = node.children[int(part)]
    return node


def greedy_nets(space: FiniteSpace, R: float, order: Sequence | None = None) -> list[frozenset[str]]:
    """Peel off greedy maximal ``R``-separated subsets until nothing is left.

    Each class is scanned in ``order`` (default: canonical order) and keeps a
    point iff it lies at distance ``> R`` from all points already kept.
    """
    if not R >= 0:
        raise ValueError("R must be >= 0")
    seq = list(space.points) if order is None else [str(p) for p in order]
    if sorted(seq, key=natural_key) != list(space.points):
        raise ValueError("order must list every point exactly once")
    idx = [space.pos(p) for p in seq]
    D = space.dist
    classes = []
    residual = idx
    while residual:
        blocked = np.zeros(len(space), dtype=bool)
        chosen, rest = [], []
        for i in residual:
            if blocked[i]:
                rest.append(i)
                continue
            chosen.append(i)
            blocked |= D[i] <= R + TOL if R != INF else True
        classes.append(frozenset(space.points[i] for i in chosen))
        residual = rest
    return classes


def max_ball_size(space: FiniteSpace, r: float) -> int:
    """``max_x |B(x, r)|``."""
    if r == INF:
        return len(space)
    return int((space.dist <= r + TOL).sum(axis=1).max())


def annuli(space: FiniteSpace, x0, R1: float) -> dict[int, frozenset[str]]:
    """Nonempty annuli ``A_n = {(n-1) R1 <= d(x, x0) <= n R1}``.

    A point on a shared boundary goes to the lower-numbered annulus.  Points
    at infinite distance from ``x0`` are collected under key ``0``.
    """
    if not R1 > 0 or R1 == INF:
        raise ValueError("R1 must be positive and finite")
    row = space.dist[space.pos(x0)]
    out: dict[int, set[str]] = {}
    for p, d in zip(space.points, row):
        if d == INF:
            n = 0
        else:
            n = max(1, math.ceil(d / R1 - TOL))
        out.setdefault(n, set()).add(p)
    return {n: frozenset(v) for n, v in sorted(out.items())}


def annuli_tree(
    space: FiniteSpace,
    x0,
    R1: float,
    leaf_builder: Callable[[FiniteSpace, frozenset[str]], DecompTree] | None = None,
) -> DecompTree:
    """Root -> {odd annuli, even annuli} -> individual annuli -> supplied subtrees.

    ``leaf_builder(space, annulus)`` must return a tree rooted at the annulus;
    by default each annulus is a leaf.  Points at infinite distance from
    ``x0`` form one extra member of the odd class.
    """
    rings = annuli(space, x0, R1)
    subtree = {}
    for n, A in rings.items():
        t = leaf_builder(space, A) if leaf_builder else DecompTree(A)
        if t.members != A:
            raise ValueError(f"leaf_builder returned a tree not rooted at annulus {n}")
        subtree[n] = t
    kids = []
    for parity in (1, 0):
        group = [subtree[n] for n in rings if (n % 2 == 1) == (parity == 1) and n != 0]
        if parity == 1 and 0 in rings:
            group.append(subtree[0])
        if not group:
            continue
        w = r_disjoint_witness(space, [t.members for t in group], R1)
        if w is not None:
            raise ValueError(f"annuli of one parity are not {R1}-disjoint: d{w} = {space.d(*w)}")
        kids.append(DecompTree(frozenset().union(*(t.members for t in group)), tuple(group)))
    return DecompTree(space.all, tuple(kids))
