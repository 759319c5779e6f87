"""JSON formats for spaces, covers, partitions, trees, schedules and
decompositions.  Infinite distances travel as the string ``"inf"``; exact
weights travel as ``"p/q"`` strings."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .cover import Cover, PartitionOfUnity
from .decomp import DecompTree, Decomposition, Level, Schedule
from .metric import INF, FiniteSpace, generate, natural_key
from .putree import PUTree

__all__ = [
    "FormatError",
    "load_json",
    "dump_json",
    "space_from_json",
    "space_to_json",
    "cover_from_json",
    "cover_to_json",
    "pu_from_json",
    "pu_to_json",
    "putree_from_json",
    "putree_to_json",
    "decomptree_from_json",
    "decomptree_to_json",
    "schedule_from_json",
    "schedule_to_json",
    "decomposition_from_json",
    "decomposition_to_json",
]


class FormatError(ValueError):
    """Input that does not follow one of the JSON formats."""


def load_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON ({e})") from None


def _encode(o):
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    if isinstance(o, Fraction):
        return str(o) if o.denominator != 1 else o.numerator
    if isinstance(o, dict):
        return {k: _encode(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_encode(v) for v in o]
    if isinstance(o, np.generic):
        return _encode(o.item())
    return o


def dump_json(obj, path=None) -> str:
    text = json.dumps(_encode(obj), indent=1)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def _ext(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return INF
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"expected a number or 'inf', got {v!r}")
    return float(v)


def _weight(v):
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            raise FormatError(f"bad weight {v!r}") from None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"bad weight {v!r}")
    return float(v)


def _need(d, key, where):
    if not isinstance(d, Mapping):
        raise FormatError(f"{where}: expected an object, got {type(d).__name__}")
    if key not in d:
        raise FormatError(f"{where}: missing key {key!r}")
    return d[key]


# spaces


def space_from_json(obj, base: Path | None = None) -> FiniteSpace:
    """Accepts an inline space object or a path (relative to ``base``)."""
    if isinstance(obj, str):
        p = Path(obj)
        if base is not None and not p.is_absolute():
            p = base / p
        return space_from_json(load_json(p), p.parent)
    metric = _need(obj, "metric", "space")
    kind = _need(metric, "kind", "space.metric")
    params = {k: v for k, v in metric.items() if k != "kind"}
    if kind == "matrix":
        params.setdefault("points", obj.get("points"))
        M = _need(params, "matrix", "space.metric")
        if not isinstance(M, list) or not all(isinstance(r, list) for r in M):
            raise FormatError("space.metric.matrix must be a list of rows")
        params["matrix"] = [[_ext(v) if isinstance(v, str) else v for v in row] for row in M]
    elif kind == "graph":
        params.setdefault("points", obj.get("points"))
        if params["points"] is None:
            raise FormatError("graph space needs points")
        params["edges"] = [list(e[:2]) + [_ext(e[2])] if len(e) == 3 else e for e in params.get("edges", [])]
    elif kind == "grid" and "sides" not in params and "shape" in params:
        params["sides"] = params.pop("shape")
    try:
        space = generate(kind, **params)
    except TypeError as e:
        raise FormatError(f"space: bad parameters for {kind!r}: {e}") from None
    pts = obj.get("points")
    if pts is not None and kind in ("interval", "grid") and sorted(map(str, pts), key=natural_key) != list(space.points):
        raise FormatError(f"space: listed points do not match the {kind} generator")
    return space


def space_to_json(space: FiniteSpace) -> dict:
    return {
        "points": list(space.points),
        "metric": {"kind": "matrix", "matrix": [[_int_or_float(v) for v in row] for row in space.dist]},
    }


def _int_or_float(v: float):
    if math.isinf(v):
        return "inf"
    return int(v) if float(v).is_integer() else float(v)


# covers and partitions


def cover_from_json(obj, space: FiniteSpace | None = None, base: Path | None = None) -> Cover:
    if space is None:
        space = space_from_json(_need(obj, "space", "cover"), base)
    elements = _need(obj, "elements", "cover")
    if not isinstance(elements, Mapping):
        raise FormatError("cover.elements must map labels to point lists")
    return Cover(space, {str(k): [str(p) for p in v] for k, v in elements.items()})


def cover_to_json(cover: Cover, space_ref=None) -> dict:
    out = {"elements": {s: list(cover.space.ordered(E)) for s, E in cover.elements.items()}}
    if space_ref is not None:
        out = {"space": space_ref, **out}
    return out


def pu_from_json(obj, space: FiniteSpace | None = None, base: Path | None = None) -> PartitionOfUnity:
    if space is None:
        space = space_from_json(_need(obj, "space", "partition"), base)
    domain = [str(p) for p in _need(obj, "domain", "partition")]
    weights = _need(obj, "weights", "partition")
    if not isinstance(weights, Mapping):
        raise FormatError("partition.weights must map points to {label: weight}")
    extra = set(map(str, weights)) - set(domain)
    if extra:
        raise FormatError(f"partition: weights given off the domain at {sorted(extra, key=natural_key)[:5]}")
    labels = obj.get("labels")
    if labels is None:
        labels = list(dict.fromkeys(str(s) for vec in weights.values() for s in vec))
    vecs = {p: {str(s): _weight(w) for s, w in weights.get(p, {}).items()} for p in domain}
    unknown = {s for vec in vecs.values() for s in vec} - set(map(str, labels))
    if unknown:
        raise FormatError(f"partition: labels {sorted(unknown)[:5]} missing from 'labels'")
    if any(isinstance(w, Fraction) for vec in vecs.values() for w in vec.values()):
        vecs = {p: {s: Fraction(w) for s, w in vec.items()} for p, vec in vecs.items()}
    if not domain:
        return PartitionOfUnity(space, (), tuple(map(str, labels)), np.zeros((0, len(labels))))
    return PartitionOfUnity.from_dicts(space, vecs, [str(s) for s in labels])


def pu_to_json(pu: PartitionOfUnity, space_ref=None) -> dict:
    out = {"domain": list(pu.domain), "labels": list(pu.labels), "weights": pu.as_dicts()}
    if space_ref is not None:
        out = {"space": space_ref, **out}
    return out


# trees


def putree_from_json(obj, space: FiniteSpace | None = None, base: Path | None = None) -> PUTree:
    if space is None:
        space = space_from_json(_need(obj, "space", "putree"), base)
    root = obj.get("tree", obj) if isinstance(obj, Mapping) else obj

    def build(node, where):
        pu = pu_from_json(_need(node, "pu", where), space)
        kids = node.get("children", {})
        if not isinstance(kids, Mapping):
            raise FormatError(f"{where}.children must be an object keyed by label")
        return PUTree(pu, {str(s): build(c, f"{where}/{s}") for s, c in kids.items()})

    return build(root, "putree")


def putree_to_json(tree: PUTree, space_ref=None) -> dict:
    def enc(node: PUTree) -> dict:
        return {"pu": pu_to_json(node.pu), "children": {s: enc(c) for s, c in node.children.items()}}

    out = enc(tree)
    if space_ref is not None:
        out = {"space": space_ref, "tree": out}
    return out


def decomptree_from_json(obj) -> DecompTree:
    root = obj.get("tree", obj) if isinstance(obj, Mapping) else obj

    def build(node, where):
        members = _need(node, "set", where)
        kids = node.get("children", [])
        if not isinstance(kids, list):
            raise FormatError(f"{where}.children must be a list")
        return DecompTree(frozenset(map(str, members)), tuple(build(c, f"{where}.{i}") for i, c in enumerate(kids)))

    return build(root, "tree")


def decomptree_to_json(tree: DecompTree, space_ref=None) -> dict:
    def enc(node: DecompTree) -> dict:
        return {"set": sorted(node.members, key=natural_key), "children": [enc(c) for c in node.children]}

    out = enc(tree)
    if space_ref is not None:
        out = {"space": space_ref, "tree": out}
    return out


def schedule_from_json(obj) -> Schedule:
    """``{"pairs": [[R, n], ...], "eps": [...]}``; ``n`` may be ``null``.

    ``{"eps_R": [[eps, R], ...]}`` is accepted as a shorthand without fan-outs.
    """
    if isinstance(obj, Mapping) and "eps_R" in obj and "pairs" not in obj:
        return Schedule.from_eps_r([(float(e), _ext(R)) for e, R in obj["eps_R"]])
    pairs = _need(obj, "pairs", "schedule")
    eps = obj.get("eps")
    if eps is not None and len(eps) != len(pairs):
        raise FormatError("schedule: 'eps' must have one entry per pair")
    levels = []
    for k, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            raise FormatError(f"schedule.pairs[{k}] must be [R, n]")
        R, n = pair
        levels.append(Level(_ext(R), None if n is None else int(n), None if eps is None else float(eps[k])))
    return Schedule(tuple(levels))


def schedule_to_json(schedule: Schedule) -> dict:
    out: dict = {"pairs": [[lv.R, lv.n] for lv in schedule.levels]}
    if all(lv.eps is not None for lv in schedule.levels):
        out["eps"] = [lv.eps for lv in schedule.levels]
    return out


def decomposition_from_json(obj) -> Decomposition:
    layers = _need(obj, "layers", "decomposition")
    if not isinstance(layers, list) or not all(isinstance(L, list) for L in layers):
        raise FormatError("decomposition.layers must be a list of lists of point lists")
    return Decomposition(tuple(tuple(frozenset(map(str, F)) for F in L) for L in layers))


def decomposition_to_json(decomp: Decomposition) -> dict:
    layers = [sorted((sorted(F, key=natural_key) for F in L), key=lambda F: [natural_key(p) for p in F]) for L in decomp.layers]
    return {"layers": layers}
