"""Trees of partial partitions of unity.

Each node carries a partition of unity; its children are keyed by that
partition's labels, and the child keyed ``s`` lives on the stratum of ``s``.
Multiplying edge values along root-to-leaf paths gives the induced partition
of unity on the whole space, indexed by leaves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .cover import TRIVIAL_LABEL, PartitionOfUnity, continuity_modulus, trivial_pu
from .metric import TOL, natural_key
from .validation import ValidationReport

__all__ = [
    "PUTree",
    "InvalidTreeError",
    "ModulusProfile",
    "validate_pu_tree",
    "induced_pu",
    "leaf_label",
    "modulus_profile",
    "truncate_at_depth",
]

PATH_SEP = "/"


class InvalidTreeError(ValueError):
    def __init__(self, report: ValidationReport):
        first = report.violations[0]
        super().__init__(f"invalid tree ({len(report.violations)} violation(s)); first: [{first.condition}] {first.message}")
        self.report = report


@dataclass(frozen=True, eq=False)
class PUTree:
    pu: PartitionOfUnity
    children: Mapping[str, "PUTree"] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "children", {str(k): v for k, v in self.children.items()})

    @property
    def space(self):
        return self.pu.space

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def height(self) -> int:
        return 0 if self.is_leaf else 1 + max(c.height for c in self.children.values())

    def walk(self, path: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], "PUTree"]]:
        """Pre-order ``(path, node)`` pairs; ``len(path)`` is the depth."""
        yield path, self
        for s in sorted(self.children, key=natural_key):
            yield from self.children[s].walk(path + (s,))

    def by_depth(self) -> list[list["PUTree"]]:
        levels: list[list[PUTree]] = []
        for path, node in self.walk():
            if len(path) == len(levels):
                levels.append([])
            levels[len(path)].append(node)
        return levels

    def __len__(self) -> int:
        return sum(1 for _ in self.walk())


def leaf_label(path: Sequence[str], leaf: PUTree) -> str:
    """Label of a leaf in the induced partition: its edge path, or the root's own label."""
    return PATH_SEP.join(path) if path else leaf.pu.labels[0]


def _column(node: PUTree, label: str, n: int) -> np.ndarray:
    """Edge values ``node.pu_label(x)`` over the whole space, zero off the domain."""
    out = np.zeros(n)
    out[node.pu.positions()] = np.asarray(node.pu.weights[:, node.pu.col(label)], dtype=float)
    return out


def _leaf_masses(tree: PUTree):
    """``(path, leaf, mass)`` with ``mass[i]`` the path product at point ``i``.

    Mass only flows into a child at points of the child's domain.
    """
    n = len(tree.space)
    start = np.zeros(n)
    start[tree.pu.positions()] = 1.0
    stack = [((), tree, start)]
    while stack:
        path, node, mass = stack.pop()
        if node.is_leaf:
            yield path, node, mass
            continue
        for s, child in node.children.items():
            if s not in node.pu.labels:
                continue
            inside = np.zeros(n, dtype=bool)
            inside[child.pu.positions()] = True
            stack.append((path + (s,), child, mass * _column(node, s, n) * inside))


def validate_pu_tree(tree: PUTree, tol: float = TOL) -> ValidationReport:
    """Check the five tree conditions plus each node's own partition axioms.

    Condition names: ``structure``, ``pu``, ``root-domain`` (1),
    ``child-domain`` (2), ``indexing`` (3), ``leaf-trivial`` (4) and
    ``probability`` (5, checked point by point on the nodes containing it).
    """
    report = ValidationReport()
    space = tree.space
    seen: set[int] = set()
    for path, node in tree.walk():
        where = PATH_SEP.join(path) or "<root>"
        if id(node) in seen:
            report.add("structure", f"subtree at {where} is shared", where)
        seen.add(id(node))
        if node.space is not space:
            report.add("structure", f"node {where} lives on another space", where)
            continue
        for msg in node.pu.problems(tol):
            report.add("pu", f"node {where}: {msg}", where)
        if node.is_leaf:
            if not node.pu.is_trivial:
                report.add("leaf-trivial", f"leaf {where} has {len(node.pu.labels)} labels", where)
            continue
        labels, keys = set(node.pu.labels), set(node.children)
        if labels != keys:
            report.add(
                "indexing",
                f"node {where} is indexed by {sorted(labels - keys)[:5]} without children "
                f"and has children {sorted(keys - labels)[:5]} outside its index set",
                where,
            )
        for s, child in node.children.items():
            if s not in labels:
                continue
            stratum = node.pu.stratum(s)
            dom = child.pu.domain_set
            if dom != stratum:
                missing = sorted(stratum - dom, key=natural_key)[:3]
                extra = sorted(dom - stratum, key=natural_key)[:3]
                report.add(
                    "child-domain",
                    f"child {s!r} of {where}: domain differs from the stratum (missing {missing}, extra {extra})",
                    where,
                    s,
                )
        # edge values at x over the children that contain x must sum to one
        n = len(space)
        total = np.zeros(n)
        for s, child in node.children.items():
            if s in labels:
                inside = np.zeros(n, dtype=bool)
                inside[child.pu.positions()] = True
                total += _column(node, s, n) * inside
        pos = node.pu.positions()
        off = pos[np.abs(total[pos] - 1) > tol]
        if off.size:
            x = space.points[off[0]]
            report.add("probability", f"edge values below {where} sum to {total[off[0]]!r} at {x!r}", where, x)

    if tree.pu.domain_set != space.all:
        report.add("root-domain", f"root domain has {len(tree.pu.domain)} of {len(space)} points")

    total = np.zeros(len(space))
    for _, _, mass in _leaf_masses(tree):
        total += mass
    off = np.flatnonzero(np.abs(total - 1) > tol)
    if off.size:
        x = space.points[off[0]]
        report.add("probability", f"leaf probabilities at {x!r} sum to {total[off[0]]!r}", "<leaves>", x)
    return report


def induced_pu(tree: PUTree) -> PartitionOfUnity:
    """Partition of unity on the whole space indexed by leaves (path products)."""
    report = validate_pu_tree(tree)
    if not report.ok:
        raise InvalidTreeError(report)
    leaves = sorted(_leaf_masses(tree), key=lambda t: [natural_key(s) for s in t[0]])
    labels = tuple(leaf_label(path, leaf) for path, leaf, _ in leaves)
    W = np.column_stack([mass for _, _, mass in leaves])
    return PartitionOfUnity(tree.space, tree.space.points, labels, W)


@dataclass(frozen=True)
class ModulusProfile:
    """Per-depth maxima of node moduli; ``R[d]`` is the scale used at depth ``d``."""

    R: tuple[float, ...]
    values: tuple[float, ...]
    witnesses: tuple

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, d):
        return self.values[d]

    @property
    def total(self) -> float:
        return float(sum(self.values))


def modulus_profile(tree: PUTree, R) -> ModulusProfile:
    """Max node modulus at each depth.

    ``R`` is one scale for every depth or a sequence giving one per depth.
    """
    levels = tree.by_depth()
    scales = tuple(R) if isinstance(R, Sequence) else (R,) * len(levels)
    if len(scales) < len(levels):
        raise ValueError(f"{len(scales)} scales for a tree with {len(levels)} levels")
    values, witnesses = [], []
    for d, nodes in enumerate(levels):
        reports = [continuity_modulus(node.pu, scales[d]) for node in nodes]
        best = max(reports, key=lambda r: r.modulus)
        values.append(float(best.modulus))
        witnesses.append(best.witness)
    return ModulusProfile(scales[: len(levels)], tuple(values), tuple(witnesses))


def truncate_at_depth(tree: PUTree, n: int) -> PUTree:
    """Make every non-leaf at depth ``n`` trivial and drop what lies below it."""
    if n < 0:
        raise ValueError("depth must be >= 0")
    if tree.is_leaf:
        return tree
    if n == 0:
        return PUTree(trivial_pu(tree.space, tree.pu.domain, TRIVIAL_LABEL, exact=tree.pu.exact))
    return PUTree(tree.pu, {s: truncate_at_depth(c, n - 1) for s, c in tree.children.items()})
