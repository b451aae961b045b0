"""Shared builders and brute-force oracles for the test suite."""

from collections import deque

import numpy as np

from zealot.trees import Tree


def random_small_tree(rng: np.random.Generator, max_vertices: int = 12, degrees=(3, 4)) -> Tree:
    """Random tree whose leaves are boundary vertices; interior vertices get full degree."""
    while True:
        parents, degs, bnd = [-1], [int(rng.choice(degrees))], [False]
        queue = deque([0])
        ok = True
        while queue:
            v = queue.popleft()
            n_children = degs[v] - (1 if v else 0)
            for _ in range(n_children):
                c = len(parents)
                parents.append(v)
                expand = rng.random() < 0.35
                degs.append(int(rng.choice(degrees)))
                bnd.append(not expand)
                if expand:
                    queue.append(c)
            if len(parents) > max_vertices:
                ok = False
                break
        if ok:
            return Tree.from_parents(parents, degs, bnd)


def subtree(tree: Tree, x: int) -> set[int]:
    out, stack = set(), [x]
    while stack:
        v = stack.pop()
        out.add(v)
        stack.extend(int(c) for c in tree.children(v))
    return out


def brute_frontier(tree: Tree, A) -> tuple[set[int], set[int]]:
    A = set(A)
    F, H = set(), set()
    for x in A:
        for c in tree.children(x):
            if not subtree(tree, int(c)) & A:
                F.add(x)
                H.add(int(c))
    return F, H


def figure_tree() -> tuple[Tree, dict[str, int]]:
    """Hand-drawn frontier example: root x0 with children x1..x4; x1 has children a, b, c."""
    names = ["x0", "x1", "x2", "x3", "x4", "a", "b", "c", "e", "a2", "f", "b2", "b3",
             "c1", "c2", "c3", "c4", "e1", "e2", "e3", "f1", "f2"]
    parent_names = [None, "x0", "x0", "x0", "x0", "x1", "x1", "x1", "a", "a", "b", "b", "b",
                    "c", "c", "c", "c", "e", "e", "e", "f", "f"]
    idx = {n: i for i, n in enumerate(names)}
    degree = {"x0": 4, "x1": 4, "a": 3, "b": 4, "c": 5, "e": 4, "f": 3}
    parents = [-1 if p is None else idx[p] for p in parent_names]
    degs = [degree.get(n, 3) for n in names]
    bnd = [n not in degree for n in names]
    return Tree.from_parents(parents, degs, bnd), idx


def random_subset(rng: np.random.Generator, pool, max_size: int) -> set[int]:
    pool = list(pool)
    size = int(rng.integers(1, min(max_size, len(pool)) + 1))
    return set(int(v) for v in rng.choice(pool, size=size, replace=False))
