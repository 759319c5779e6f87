"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

import oracles
from coarsepu import (
    INF,
    Cover,
    PartitionOfUnity,
    Schedule,
    blend,
    continuity_modulus,
    decomp_to_pu_tree,
    diameter,
    graph_space,
    greedy_nets,
    grid,
    index_vector,
    induced_pu,
    interval,
    is_r_disjoint,
    l1_normalize,
    lebesgue_number,
    mix,
    modulus_profile,
    multiplicity,
    natural_pu,
    target_of_path,
    trim,
    validate_pu_tree,
    validate_space,
    wedge,
    wedge_id,
)
from coarsepu.corpus import (
    axis_key,
    bounded_geometry_graph,
    random_cover,
    random_graph_space,
    random_pu,
    random_pu_tree,
    stripe_tree,
    stripe_widths,
)
from coarsepu.decomp import conversion_radii, disjointness_schedule, max_ball_size
from coarsepu.putree import leaf_label

TOL = 1e-9


@pytest.fixture
def verdict(capsys):
    def say(n, name, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail

    return say


def _interval_cover(rng, N):
    """Random cut points along the line, each piece grown by its own margin."""
    X = interval(N)
    k = int(rng.integers(2, 9))
    cuts = np.sort(rng.choice(np.arange(1, N), size=min(k - 1, N - 1), replace=False))
    bounds = [0, *cuts.tolist(), N]
    grow = int(rng.integers(0, max(2, N // k)))
    elements = {}
    for j, (a, b) in enumerate(zip(bounds, bounds[1:])):
        g = grow + int(rng.integers(0, 3))
        elements[f"e{j}"] = range(max(0, a - g), min(N, b + g))
    return Cover(X, elements)


def _grid_cover(rng, a, b):
    """Product blocks cut at random widths, grown by a margin in the grid metric."""
    X = grid(a, b)
    wx, wy = int(rng.integers(3, a + 1)), int(rng.integers(3, b + 1))
    grow = int(rng.integers(0, max(2, min(wx, wy))))
    elements = {}
    for i in range(0, a, wx):
        for j in range(0, b, wy):
            elements[f"b{i},{j}"] = [
                f"{x},{y}"
                for x in range(max(0, i - grow), min(a, i + wx + grow))
                for y in range(max(0, j - grow), min(b, j + wy + grow))
                if abs(min(max(x, i), i + wx - 1) - x) + abs(min(max(y, j), j + wy - 1) - y) <= grow
            ]
    return Cover(X, elements)


def test_index_partition_bound(verdict):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    covers = certified = 0
    worst = None  # (slack, description)
    for trial in range(240):
        if trial % 3 == 2:
            a, b = (int(v) for v in rng.integers(4, 41, size=2))
            C = _grid_cover(rng, a, b)
            where = f"grid {a}x{b}"
        else:
            N = int(rng.integers(20, 501))
            C = _interval_cover(rng, N)
            where = f"interval {N}"
        covers += 1
        mult, L = multiplicity(C), lebesgue_number(C)
        for m in (2, 3, 4):
            for R in (1, 2, 5):
                for eps in (0.25, 0.5, 1.0):
                    if mult > m or L < 4 * m * R / eps:
                        continue
                    mod = continuity_modulus(natural_pu(C, R), R).modulus
                    certified += 1
                    slack = eps + TOL - mod
                    if worst is None or slack < worst[0]:
                        worst = (slack, f"{where} m={m} R={R} eps={eps} modulus={mod:.4g}")
    elapsed = time.perf_counter() - t0
    ok = covers >= 200 and certified > 0 and worst[0] >= 0 and elapsed < 60
    verdict(1, "index partition bound", ok, f"{covers} covers, {certified} certified cases, tightest {worst[1]}, {elapsed:.1f}s")


def test_projection_bound(verdict):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = -INF
    for trial in range(10_000):
        m = int(rng.integers(1, 9))
        L = float(rng.choice([5, 10, 50]))
        size = int(rng.integers(1, 2 * m + 1))
        x = rng.random(size) * (rng.random(size) < 0.8)
        if x.sum() == 0:
            x[0] = 1.0
        x *= L * (1 + (trial % 4 != 0) * rng.random() * 3) / x.sum()  # a quarter sit exactly at |x| = L
        if trial % 2:
            y = x + rng.uniform(-1, 1, size)
        else:
            y = x + rng.choice([-1.0, 1.0], size)  # extreme gaps
        y = np.maximum(y, 0)
        if y.sum() == 0:
            y[int(rng.integers(0, size))] = min(1.0, x.max() + 1)
        gap = np.abs(l1_normalize(x) - l1_normalize(y)).sum()
        worst = max(worst, gap - 4 * m / L)
    elapsed = time.perf_counter() - t0
    ok = worst <= TOL and elapsed < 5
    verdict(2, "projection bound", ok, f"10000 trials, max(gap - 4m/L) = {worst:.3g}, {elapsed:.2f}s")


def test_mixing_bound(verdict):
    rng = np.random.default_rng(11)
    worst, count = -INF, 0
    while count < 100:
        X = interval(int(rng.integers(5, 120)))
        R = float(rng.choice([1, 2, 3, 5]))
        phi = random_pu(X, X.all, rng, "")
        parts = {s: random_pu(X, phi.stratum(s), rng, f"{s}/") for s in phi.labels}
        e0 = continuity_modulus(phi, R).modulus
        e1 = max(continuity_modulus(p, R).modulus for p in parts.values())
        got = continuity_modulus(mix(phi, parts), R).modulus
        worst = max(worst, got - e0 - e1)
        count += 1
    verdict(3, "mixing bound", worst <= TOL, f"{count} instances, max(modulus - eps0 - eps1) = {worst:.3g}")


def test_tree_bound(verdict):
    rng = np.random.default_rng(5)
    worst_gap, worst_sum, heights = -INF, 0.0, set()
    for trial in range(50):
        kind = trial % 3
        if kind == 0:
            X = interval(int(rng.integers(2, 201)))
        elif kind == 1:
            X = grid(int(rng.integers(2, 15)), int(rng.integers(2, 14)))
        else:
            X = random_graph_space(int(rng.integers(2, 60)), rng, p=0.1)
        tree = random_pu_tree(X, rng, int(rng.integers(1, 5)))
        assert validate_pu_tree(tree).ok
        heights.add(tree.height)
        R = float(rng.choice([1, 2, 3]))
        ind = induced_pu(tree)
        worst_sum = max(worst_sum, float(np.abs(ind.weights.sum(axis=1) - 1).max()))
        worst_gap = max(worst_gap, continuity_modulus(ind, R).modulus - modulus_profile(tree, R).total)
    ok = worst_gap <= TOL and worst_sum <= TOL
    verdict(
        4, "tree bound", ok,
        f"50 trees of heights {sorted(heights)}, max(modulus - profile sum) = {worst_gap:.3g}, max |sum - 1| = {worst_sum:.3g}",
    )


def test_index_oracle(verdict):
    rng = np.random.default_rng(3)
    checked = mismatches = infinite = dfs_checked = 0
    first = None
    for _ in range(500):
        n = int(rng.integers(1, 13))
        X = random_graph_space(n, rng, p=float(rng.uniform(0.05, 0.5)), max_weight=3)
        C = random_cover(X, rng, int(rng.integers(1, 4)))
        for R in (1, 2):
            for label, V in C.elements.items():
                fast = index_vector(X, V, R)
                for x in X.points:
                    want = oracles.chain_index_sets(X, x, V, R, max_len=12)
                    if len(V) <= 7:
                        dfs = oracles.chain_index_dfs(X, x, V, R, max_len=12)
                        dfs_checked += 1
                        if dfs != want:
                            want = ("oracles disagree", want, dfs)
                    checked += 1
                    infinite += want == INF
                    if fast[x] != want:
                        mismatches += 1
                        first = first or (X.points, label, x, R, fast[x], want)
    ok = mismatches == 0 and infinite > 0
    verdict(
        5, "index oracle", ok,
        f"{checked} (x, V, R) triples ({dfs_checked} also by chain DFS, {infinite} infinite), {mismatches} mismatches"
        + (f", first {first}" if first else ""),
    )


def _conversion_corpus():
    """Twenty fixed (space, key, plan, schedule) stripe instances."""
    out = []
    levels = [[(0.5, 1)], [(0.25, 1)], [(0.5, 2)], [(0.25, 2)], [(0.5, 1), (0.5, 1)], [(0.5, 1), (0.25, 2)],
              [(0.25, 1), (0.5, 2)], [(0.5, 2), (0.5, 1)], [(0.25, 2), (0.25, 1)], [(0.5, 2), (0.25, 2)]]
    for j, eps_r in enumerate(levels):
        for on_grid in (False, True):
            n = 2 + (j + on_grid) % 2
            ns = [n] * len(eps_r)
            sched = Schedule.from_eps_r(eps_r, n=ns)
            S = [lv.R for lv in disjointness_schedule(sched, ns).levels]
            widths = stripe_widths(S, ns)
            # outer blocks must hold a full round of inner layers
            for k in range(len(widths) - 2, -1, -1):
                widths[k] = max(widths[k], n * widths[k + 1] + 1)
            length = 2 * n * widths[0] + widths[0] // 2
            plan = list(zip(widths, ns))
            space = grid(length, 3) if on_grid else interval(length)
            out.append((space, plan, sched, ns))
    return out


def test_conversion_pipeline(verdict):
    t0 = time.perf_counter()
    problems, heights, worst = [], set(), {"depth": -INF, "induced": -INF, "leaf": -INF}
    for t, (X, plan, sched, ns) in enumerate(_conversion_corpus()):
        tree = stripe_tree(X.points, axis_key(0), plan)
        heights.add(tree.height)
        out = decomp_to_pu_tree(X, tree, sched)  # raises if any depth exceeds its eps
        if not validate_pu_tree(out).ok:
            problems.append(f"tree {t} invalid")
        prof = modulus_profile(out, [lv.R for lv in sched.levels] + [sched.levels[-1].R] * (out.height + 1 - len(sched)))
        for d in range(out.height):
            worst["depth"] = max(worst["depth"], prof[d] - sched[d].eps)
        rmin = min(lv.R for lv in sched.levels)
        ind = induced_pu(out)
        worst["induced"] = max(worst["induced"], continuity_modulus(ind, rmin).modulus - sum(lv.eps for lv in sched.levels))
        grow = 2 * sum(conversion_radii(sched, ns))
        for path, leaf in out.walk():
            if leaf.is_leaf:
                target = target_of_path(tree, path)
                excess = diameter(X, ind.stratum(leaf_label(path, leaf))) - diameter(X, target.members) - grow
                worst["leaf"] = max(worst["leaf"], excess)
    elapsed = time.perf_counter() - t0
    ok = not problems and all(v <= TOL for v in worst.values()) and elapsed < 120
    detail = ", ".join(f"max excess {k} {v:.3g}" for k, v in worst.items())
    verdict(6, "conversion pipeline", ok, f"20 trees of heights {sorted(heights)}, {detail}, {elapsed:.1f}s {problems or ''}")


def test_greedy_nets(verdict):
    line = greedy_nets(interval(7), 2)
    exact = line == [frozenset({"0", "3", "6"}), frozenset({"1", "4"}), frozenset({"2", "5"})]
    rng = np.random.default_rng(9)
    bad = []
    for t in range(200):
        X = bounded_geometry_graph(int(rng.integers(2, 301)), rng)
        R = float(rng.choice([1, 2, 3]))
        order = list(rng.permutation(X.points)) if t % 2 else None
        classes = greedy_nets(X, R, order)
        bound = max_ball_size(X, 2 * R)
        partition = sorted(p for c in classes for p in c) == sorted(X.points)
        if len(classes) > bound or not partition or not all(is_r_disjoint(X, [{p} for p in c], R) for c in classes):
            bad.append((t, len(classes), bound))
        # the contradiction argument: one class per point of a ball
        if len(classes) >= bound + 1:
            bad.append((t, "strict", len(classes), bound))
        if len(X) <= 60 and classes != oracles.greedy(X, R, order):
            bad.append((t, "oracle"))
    verdict(7, "greedy nets", exact and not bad, f"line exact={exact}, 200 graphs, violations {bad[:3]}")


def _random_factor(rng):
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return interval(int(rng.integers(1, 12)))
    if kind == 1:
        return grid(int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    n = int(rng.integers(1, 10))
    return graph_space(range(n), [(i, j, int(rng.integers(0, 4))) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3])


def test_wedge(verdict):
    rng = np.random.default_rng(13)
    bad = 0
    for _ in range(100):
        spaces = [_random_factor(rng) for _ in range(int(rng.integers(2, 6)))]
        bases = [s.points[int(rng.integers(0, len(s)))] for s in spaces]
        W = wedge(spaces, bases)
        validate_space(W.dist, W.points)
        for i, (A, a) in enumerate(zip(spaces, bases)):
            for j, (B, b) in enumerate(zip(spaces, bases)):
                for p in A.points:
                    for q in B.points:
                        want = A.d(p, q) if i == j else A.d(p, a) + B.d(b, q)
                        if W.d(wedge_id(i, p, a), wedge_id(j, q, b)) != want:
                            bad += 1
    verdict(8, "wedge", bad == 0, f"100 wedges validated, {bad} distance mismatches")


def test_blend_and_trim(verdict):
    rng = np.random.default_rng(17)
    blend_worst = trim_worst = -INF
    for _ in range(100):
        X = interval(int(rng.integers(3, 80))) if rng.random() < 0.5 else grid(int(rng.integers(2, 9)), int(rng.integers(2, 9)))
        R = float(rng.choice([1, 2, 3]))
        phi = random_pu(X, X.all, rng, "p")
        psi = random_pu(X, X.all, rng, "q")
        eps = float(rng.uniform(0, 4))
        bound = (1 - eps / 4) * continuity_modulus(phi, R).modulus + eps / 4 * continuity_modulus(psi, R).modulus
        blend_worst = max(blend_worst, continuity_modulus(blend(phi, psi, eps), R).modulus - bound)
    for _ in range(100):
        X = interval(int(rng.integers(1, 60)))
        k = int(rng.integers(1, 12))
        W = rng.random((len(X), k)) ** int(rng.integers(1, 6))
        phi = PartitionOfUnity(X, X.points, tuple(f"c{j}" for j in range(k)), W / W.sum(axis=1, keepdims=True))
        eps = float(rng.choice([rng.uniform(0.01, 8), 0.8, 4.0]))
        out = trim(phi, eps)
        assert not out.problems()
        trim_worst = max(trim_worst, float(np.abs(out.weights - phi.weights).sum(axis=1).max()) - eps / 4)
    ok = blend_worst <= TOL and trim_worst <= TOL
    verdict(9, "blend and trim", ok, f"max blend excess {blend_worst:.3g}, max trim excess over eps/4 {trim_worst:.3g}")
