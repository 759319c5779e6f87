"""Command-line front end.

Every command prints one JSON report on stdout and exits with 0 when all
checks pass, 1 when a mathematical check fails and 2 on malformed input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
from fractions import Fraction
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .cover import (
    CoverError,
    PartitionError,
    continuity_modulus,
    lebesgue_number,
    multiplicity,
    natural_pu,
)
from .corpus import random_graph_space
from .decomp import (
    ConversionError,
    Decomposition,
    EnlargementError,
    _resolve_fanout,
    conversion_radii,
    decomp_to_pu_tree,
    disjointness_schedule,
    greedy_nets,
    max_ball_size,
    target_of_path,
    validate_decomp_tree,
)
from .metric import INF, TOL, MetricAxiomError, diameter, is_r_disjoint
from .putree import InvalidTreeError, induced_pu, leaf_label, modulus_profile, validate_pu_tree

log = logging.getLogger("coarsepu")


class Malformed(Exception):
    pass


class Report:
    def __init__(self, command: str):
        self.command = command
        self.inputs: dict[str, str] = {}
        self.checks: list[dict] = []
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def digest(self, name: str, path) -> None:
        self.inputs[name] = "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()

    def check(self, name, passed, measured=None, bound=None, witness=None, info=False) -> bool:
        entry = {"name": name, "pass": bool(passed), "measured": measured, "bound": bound, "witness": witness}
        if info:
            entry["informational"] = True
        self.checks.append(entry)
        return bool(passed)

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.checks if not c.get("informational"))

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "ok": self.ok,
            "checks": self.checks,
            **self.extra,
            "wall_time_s": round(time.perf_counter() - self.t0, 6),
        }


def _num(v):
    if v is None or isinstance(v, Fraction):
        return v
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _load(path, rep: Report, name: str):
    if path is None:
        raise Malformed(f"--{name} is required")
    p = Path(path)
    if not p.is_file():
        raise Malformed(f"{name}: cannot read {path}")
    rep.digest(name, p)
    return io.load_json(p), p


def _space(args, rep: Report, obj=None, base=None):
    """The --space file, else the 'space' reference embedded in ``obj``."""
    if args.space is not None:
        data, p = _load(args.space, rep, "space")
        return io.space_from_json(data, p.parent), str(p.resolve())
    if isinstance(obj, dict) and "space" in obj:
        ref = obj["space"]
        if isinstance(ref, str):
            ref = str((base / ref).resolve()) if base is not None and not Path(ref).is_absolute() else ref
        return io.space_from_json(ref, base), ref
    raise Malformed("no space given: pass --space or embed a 'space' reference")


def _emit(args, rep: Report, artifact) -> None:
    if args.out:
        io.dump_json(artifact, args.out)
        rep.extra["artifact"] = str(Path(args.out).resolve())
    else:
        rep.extra["artifact"] = io._encode(artifact)


# commands


def cmd_validate(args, rep: Report) -> None:
    data, p = _load(args.path, rep, "input")
    kind = args.kind
    if kind == "space":
        try:
            space = io.space_from_json(data, p.parent)
        except MetricAxiomError as e:
            rep.check(f"axiom:{e.axiom}", False, witness=list(e.witness))
            rep.extra["error"] = str(e)
            return
        rep.check("pseudo-metric axioms", True, measured={"points": len(space)})
        return
    obj = data
    space, ref = _space(args, rep, obj, p.parent)
    if kind == "cover":
        try:
            cover = io.cover_from_json(data, space)
        except CoverError as e:
            rep.check("covers space", False, witness=str(e))
            return
        rep.check("covers space", True)
        rep.extra["multiplicity"] = multiplicity(cover)
        rep.extra["lebesgue_number"] = _num(lebesgue_number(cover))
    elif kind == "pu":
        pu = io.pu_from_json(data, space)
        probs = pu.problems(TOL)
        rep.check("partition of unity", not probs, witness=probs[:5] or None, bound=TOL)
    elif kind == "putree":
        tree = io.putree_from_json(data, space)
        report = validate_pu_tree(tree)
        for cond in ("structure", "pu", "root-domain", "child-domain", "indexing", "leaf-trivial", "probability"):
            bad = [v.to_json() for v in report.violations if v.condition == cond]
            rep.check(cond, not bad, measured=len(bad), witness=bad[:3] or None)
    elif kind == "decomptree":
        tree = io.decomptree_from_json(data)
        if args.schedule is None:
            raise Malformed("validating a decomposition tree needs --schedule")
        sched_data, _ = _load(args.schedule, rep, "schedule")
        schedule = io.schedule_from_json(sched_data)
        report = validate_decomp_tree(space, tree, schedule)
        for cond in ("root", "points", "nested", "union", "disjoint", "schedule"):
            bad = [v.to_json() for v in report.violations if v.condition == cond]
            rep.check(cond, not bad, measured=len(bad), witness=bad[:3] or None)
    else:  # pragma: no cover - argparse restricts choices
        raise Malformed(f"unknown kind {kind}")


def cmd_build_pu(args, rep: Report) -> None:
    data, p = _load(args.cover, rep, "cover")
    space, ref = _space(args, rep, data, p.parent)
    if args.r is None:
        raise Malformed("--r is required")
    R = args.r
    cover = io.cover_from_json(data, space)
    pu = natural_pu(cover, R, exact=args.exact)
    rep.check("partition of unity", not pu.problems(), bound=TOL)
    m = multiplicity(cover)
    L = lebesgue_number(cover)
    mod = continuity_modulus(pu, R)
    rep.extra.update(multiplicity=m, lebesgue_number=_num(L), modulus=_num(mod.modulus), R=_num(R))
    if args.eps is not None:
        need = 4 * m * R / args.eps
        pre = L >= need - TOL
        rep.check("lebesgue >= 4mR/eps", pre, measured=_num(L), bound=_num(need), info=True)
        # the bound is only guaranteed when the precondition holds
        rep.check(
            "modulus <= eps",
            mod.modulus <= args.eps + TOL or not pre,
            measured=_num(mod.modulus),
            bound=args.eps,
            witness=list(mod.witness) if mod.witness else None,
            info=not pre,
        )
    _emit(args, rep, io.pu_to_json(pu, ref))


def cmd_convert(args, rep: Report) -> None:
    data, p = _load(args.tree, rep, "tree")
    space, ref = _space(args, rep, data, p.parent)
    sched_data, _ = _load(args.schedule, rep, "schedule")
    schedule = io.schedule_from_json(sched_data)
    if any(lv.eps is None for lv in schedule.levels):
        raise Malformed("convert needs eps for every schedule level")
    tree = io.decomptree_from_json(data)
    ns = _resolve_fanout(tree, schedule)
    need = disjointness_schedule(schedule, ns)
    report = validate_decomp_tree(space, tree, need)
    S = [lv.R for lv in need.levels]
    rep.extra["required_separation"] = S
    if not report.ok:
        v = report.violations[0]
        rep.check("decomposition tree for S_k", False, bound=S, witness=[x.to_json() for x in report.violations[:3]])
        rep.extra["error"] = v.message
        return
    rep.check("decomposition tree for S_k", True, bound=S)
    out = decomp_to_pu_tree(space, tree, schedule, verify=False)
    tree_report = validate_pu_tree(out)
    rep.check("valid tree of partitions of unity", tree_report.ok, witness=[v.to_json() for v in tree_report.violations[:3]] or None)
    levels = out.height + 1
    scales = [schedule[min(d, len(schedule) - 1)].R for d in range(levels)]
    prof = modulus_profile(out, scales)
    for d in range(levels - 1):
        rep.check(
            f"depth {d} modulus <= eps_{d + 1}",
            prof.values[d] <= schedule[d].eps + TOL,
            measured=prof.values[d],
            bound=schedule[d].eps,
            witness=list(prof.witnesses[d]) if prof.witnesses[d] else None,
        )
    rmin = min(lv.R for lv in schedule.levels[: max(levels - 1, 1)])
    total = sum(lv.eps for lv in schedule.levels[: max(levels - 1, 0)])
    ind = induced_pu(out)
    mod = continuity_modulus(ind, rmin)
    rep.check(
        "induced modulus <= sum eps",
        mod.modulus <= total + TOL,
        measured=mod.modulus,
        bound=total,
        witness=list(mod.witness) if mod.witness else None,
    )
    radii = conversion_radii(schedule, ns)
    worst, bad = -INF, None
    for path, leaf in out.walk():
        if not leaf.is_leaf:
            continue
        label = leaf_label(path, leaf)
        stratum = ind.stratum(label)
        target = target_of_path(tree, path)
        slack = diameter(space, target.members) + 2 * sum(radii) - diameter(space, stratum)
        if bad is None or slack < worst:
            worst, bad = slack, label
    rep.check("leaf strata diameter <= leaf diameter + 2 sum r", worst >= -TOL, measured=_num(worst), bound=0.0, witness=bad)
    rep.extra.update(radii=radii, fanout=ns, profile=list(prof.values), induced_modulus=mod.modulus)
    _emit(args, rep, io.putree_to_json(out, ref))


def cmd_nets(args, rep: Report) -> None:
    if args.space is None:
        raise Malformed("--space is required")
    space, _ = _space(args, rep)
    if args.r is None:
        raise Malformed("--r is required")
    order = None
    if args.order:
        order_data, _ = _load(args.order, rep, "order")
        if not isinstance(order_data, list):
            raise Malformed("order file must be a JSON list of point ids")
        order = order_data
    classes = greedy_nets(space, args.r, order)
    union_ok = sum(len(c) for c in classes) == len(space) and frozenset().union(*classes) == space.all
    rep.check("classes partition the space", union_ok)
    sep = all(is_r_disjoint(space, [[p] for p in c], args.r) for c in classes)
    rep.check("classes are R-separated", sep)
    bound = max_ball_size(space, 2 * args.r)
    rep.check("class count <= max |B(x,2R)|", len(classes) <= bound, measured=len(classes), bound=bound)
    _emit(args, rep, io.decomposition_to_json(Decomposition(tuple(tuple(frozenset([p]) for p in c) for c in classes))))


def cmd_gen(args, rep: Report) -> None:
    kind = args.kind
    if kind == "interval":
        if args.length is None:
            raise Malformed("gen interval needs --length")
        obj = {"metric": {"kind": "interval", "length": args.length}}
    elif kind == "grid":
        if not args.sides:
            raise Malformed("gen grid needs --sides")
        obj = {"metric": {"kind": "grid", "sides": args.sides}}
    elif kind == "graph":
        rng = np.random.default_rng(args.seed)
        sp = random_graph_space(args.points, rng, args.p)
        obj = io.space_to_json(sp)
    else:  # pragma: no cover
        raise Malformed(f"unknown kind {kind}")
    space = io.space_from_json(obj)
    rep.check("pseudo-metric axioms", True, measured={"points": len(space)})
    rep.extra["seed"] = args.seed
    _emit(args, rep, obj)


def cmd_modulus(args, rep: Report) -> None:
    data, p = _load(args.pu, rep, "pu")
    space, _ = _space(args, rep, data, p.parent)
    if args.r is None:
        raise Malformed("--r is required")
    pu = io.pu_from_json(data, space)
    probs = pu.problems()
    rep.check("partition of unity", not probs, witness=probs[:5] or None)
    mod = continuity_modulus(pu, args.r)
    rep.extra.update(modulus=_num(mod.modulus), R=_num(args.r))
    if args.eps is not None:
        rep.check("modulus <= eps", mod.modulus <= args.eps + TOL, measured=_num(mod.modulus), bound=args.eps,
                  witness=list(mod.witness) if mod.witness else None)


def _ext_arg(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coarsepu", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *flags):
        p.add_argument("--space", help="space JSON (overrides an embedded reference)")
        if "out" in flags:
            p.add_argument("--out", help="write the emitted artifact here instead of inlining it")
        if "r" in flags:
            p.add_argument("--r", type=_ext_arg, help="scale R ('inf' allowed)")
        if "eps" in flags:
            p.add_argument("--eps", type=float, help="target continuity bound")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="check a JSON artifact")
    p.add_argument("kind", choices=["space", "cover", "pu", "putree", "decomptree"])
    p.add_argument("path")
    p.add_argument("--schedule", help="schedule JSON (decomptree only)")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build-pu", help="index partition of unity of a cover")
    p.add_argument("--cover", required=True)
    p.add_argument("--exact", action="store_true", help="rational weights")
    common(p, "out", "r", "eps")
    p.set_defaults(func=cmd_build_pu)

    p = sub.add_parser("convert", help="decomposition tree -> tree of partitions of unity")
    p.add_argument("--tree", required=True)
    p.add_argument("--schedule", required=True)
    common(p, "out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("nets", help="greedy R-separated classes")
    p.add_argument("--order", help="JSON list giving the scan order")
    common(p, "out", "r")
    p.set_defaults(func=cmd_nets)

    p = sub.add_parser("gen", help="generate a space")
    p.add_argument("kind", choices=["interval", "grid", "graph"])
    p.add_argument("--length", type=int)
    p.add_argument("--sides", type=int, nargs="+")
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--p", type=float, default=0.3, help="edge probability (graph)")
    common(p, "out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("modulus", help="continuity modulus of a partition of unity")
    p.add_argument("--pu", required=True)
    common(p, "r", "eps")
    p.set_defaults(func=cmd_modulus)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    rep = Report(args.command)
    try:
        args.func(args, rep)
    except (Malformed, io.FormatError, json.JSONDecodeError, KeyError, TypeError, PartitionError) as e:
        log.error("malformed input: %s", e)
        rep.extra["error"] = f"malformed input: {e}"
        print(json.dumps(rep.to_json(), indent=1))
        return 2
    except (MetricAxiomError, CoverError, ConversionError, EnlargementError, InvalidTreeError) as e:
        log.error("%s", e)
        rep.check(type(e).__name__, False, witness=list(getattr(e, "witness", ())) or None)
        rep.extra["error"] = str(e)
    except ValueError as e:
        log.error("malformed input: %s", e)
        rep.extra["error"] = f"malformed input: {e}"
        print(json.dumps(rep.to_json(), indent=1))
        return 2
    print(json.dumps(io._encode(rep.to_json()), indent=1))
    if not rep.ok:
        for c in rep.checks:
            if not c["pass"] and not c.get("informational"):
                log.error("check failed: %s (measured %s, bound %s)", c["name"], c["measured"], c["bound"])
    return 0 if rep.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
