"""Rooted bounded-degree trees, truncated at a finite depth.

Vertices are dense integers in breadth-first order; vertex 0 is the root.
Each vertex stores its *intended* degree.  Vertices whose children were cut
off by truncation are marked as boundary; they keep their intended degree
but have no materialized children.

Neighbor lists are ordered parent first, then children in construction
order.  Sampling "k neighbors without replacement" always draws from that
list.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .rng import CounterRNG, derive_key

MAX_DEGREE = 16
_DIST_TOL = 1e-12


class TruncationError(ValueError):
    """Raised when an operation needs parts of the tree that were truncated."""


@dataclass(frozen=True)
class DegreeDist:
    """Degree distribution {j: q_j} of a Galton-Watson tree, support in 3..M."""

    atoms: Mapping[int, float]

    def __post_init__(self):
        atoms = {int(j): float(q) for j, q in dict(self.atoms).items() if q != 0.0}
        if not atoms:
            raise ValueError("degree distribution has no mass")
        for j, q in atoms.items():
            if q < 0:
                raise ValueError(f"negative probability q_{j} = {q}")
            if j < 3:
                raise ValueError(f"degree {j} below 3 is not allowed")
        total = sum(atoms.values())
        if abs(total - 1.0) > _DIST_TOL:
            raise ValueError(f"degree probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "atoms", dict(sorted(atoms.items())))

    @classmethod
    def two_point(cls, q3: float) -> DegreeDist:
        """Degrees 3 and 4 with P(3) = q3."""
        return cls({3: q3, 4: 1.0 - q3})

    @property
    def support(self) -> list[int]:
        return list(self.atoms)

    @property
    def min_degree(self) -> int:
        return min(self.atoms)

    @property
    def max_degree(self) -> int:
        return max(self.atoms)

    def sample(self, rng: CounterRNG) -> int:
        u = rng.random()
        acc = 0.0
        for j, q in self.atoms.items():
            acc += q
            if u < acc:
                return j
        return self.max_degree


@dataclass(frozen=True, eq=False)
class Tree:
    parent: np.ndarray
    degree: np.ndarray
    boundary: np.ndarray
    depth_limit: int
    level: np.ndarray = field(repr=False)
    child_ptr: np.ndarray = field(repr=False)
    children_flat: np.ndarray = field(repr=False)
    nbr_ptr: np.ndarray = field(repr=False)
    nbr_flat: np.ndarray = field(repr=False)

    root = 0

    @classmethod
    def from_parents(
        cls,
        parents: Iterable[int],
        degrees: Iterable[int],
        boundary: Iterable[bool],
        *,
        max_degree: int = MAX_DEGREE,
    ) -> Tree:
        """Build a tree from BFS-ordered parent ids (-1 for the root)."""
        parent = np.asarray(list(parents), dtype=np.int64)
        degree = np.asarray(list(degrees), dtype=np.int64)
        bnd = np.asarray(list(boundary), dtype=bool)
        n = len(parent)
        if n == 0 or not (len(degree) == len(bnd) == n):
            raise ValueError("parents, degrees and boundary must be non-empty and equal length")
        if parent[0] != -1:
            raise ValueError("vertex 0 must be the root")
        if np.any(parent[1:] < 0) or np.any(parent[1:] >= np.arange(1, n)):
            raise ValueError("non-root parents must precede their children")
        if degree.min() < 3 or degree.max() > max_degree:
            raise ValueError(f"degrees must lie in [3, {max_degree}]")

        counts = np.bincount(parent[1:], minlength=n)
        child_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=child_ptr[1:])
        children_flat = np.arange(1, n, dtype=np.int64)[np.argsort(parent[1:], kind="stable")]

        level = np.zeros(n, dtype=np.int64)
        for v in range(1, n):
            level[v] = level[parent[v]] + 1

        expected = counts + (parent >= 0)
        for v in range(n):
            if bnd[v]:
                if counts[v]:
                    raise ValueError(f"boundary vertex {v} has materialized children")
            elif expected[v] != degree[v]:
                raise ValueError(
                    f"vertex {v}: intended degree {degree[v]} but {expected[v]} neighbors present"
                )

        nbr_counts = counts + (parent >= 0)
        nbr_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(nbr_counts, out=nbr_ptr[1:])
        nbr_flat = np.empty(nbr_ptr[-1], dtype=np.int64)
        for v in range(n):
            out = nbr_ptr[v]
            if parent[v] >= 0:
                nbr_flat[out] = parent[v]
                out += 1
            cs = children_flat[child_ptr[v]:child_ptr[v + 1]]
            nbr_flat[out:out + len(cs)] = cs

        for arr in (parent, degree, bnd, level, child_ptr, children_flat, nbr_ptr, nbr_flat):
            arr.setflags(write=False)
        return cls(parent, degree, bnd, int(level.max()), level, child_ptr,
                   children_flat, nbr_ptr, nbr_flat)

    @property
    def n(self) -> int:
        return len(self.parent)

    def __len__(self) -> int:
        return len(self.parent)

    @property
    def d_min(self) -> int:
        return int(self.degree.min())

    @property
    def max_degree(self) -> int:
        return int(self.degree.max())

    def children(self, x: int) -> np.ndarray:
        return self.children_flat[self.child_ptr[x]:self.child_ptr[x + 1]]

    def neighbors(self, x: int) -> np.ndarray:
        return self.nbr_flat[self.nbr_ptr[x]:self.nbr_ptr[x + 1]]

    def is_boundary(self, x: int) -> bool:
        return bool(self.boundary[x])

    def boundary_set(self) -> set[int]:
        return set(np.flatnonzero(self.boundary).tolist())

    def touches_boundary(self) -> np.ndarray:
        """Mask of vertices with at least one boundary neighbor."""
        mask = np.zeros(self.n, dtype=bool)
        b = np.flatnonzero(self.boundary)
        b = b[self.parent[b] >= 0]
        mask[self.parent[b]] = True
        return mask

    def at_depth(self, max_level: int) -> np.ndarray:
        return np.flatnonzero(self.level <= max_level)

    def to_text(self) -> str:
        lines = [
            f"{v} {int(self.parent[v])} {int(self.degree[v])} {int(self.boundary[v])}"
            for v in range(self.n)
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, *, max_degree: int = MAX_DEGREE) -> Tree:
        rows = [line.split() for line in text.splitlines() if line.strip()]
        for i, row in enumerate(rows):
            if len(row) != 4 or int(row[0]) != i:
                raise ValueError(f"malformed tree line {i}: {' '.join(row)!r}")
        return cls.from_parents(
            (int(r[1]) for r in rows),
            (int(r[2]) for r in rows),
            (r[3] == "1" for r in rows),
            max_degree=max_degree,
        )

    def same_shape(self, other: Tree) -> bool:
        return (
            np.array_equal(self.parent, other.parent)
            and np.array_equal(self.degree, other.degree)
            and np.array_equal(self.boundary, other.boundary)
        )


def _grow(root_degree, child_degree, depth: int, max_degree: int) -> Tree:
    parents, degrees, bnd = [-1], [root_degree()], [depth == 0]
    queue = deque([(0, 0)])
    while queue:
        v, lvl = queue.popleft()
        if lvl == depth:
            continue
        n_children = degrees[v] - (1 if v else 0)
        for _ in range(n_children):
            c = len(parents)
            parents.append(v)
            degrees.append(child_degree())
            bnd.append(lvl + 1 == depth)
            queue.append((c, lvl + 1))
    return Tree.from_parents(parents, degrees, bnd, max_degree=max_degree)


def build_regular_tree(d: int, depth: int, *, max_degree: int = MAX_DEGREE) -> Tree:
    """The d-regular tree truncated at ``depth``."""
    if d < 3 or d > max_degree:
        raise ValueError(f"degree d={d} outside [3, {max_degree}]")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return _grow(lambda: d, lambda: d, depth, max_degree)


def sample_gw_tree(dist: DegreeDist, depth: int, seed: int, *, max_degree: int = MAX_DEGREE) -> Tree:
    """Galton-Watson tree where every vertex (root included) draws its degree from ``dist``.

    The root gets j children, any other vertex j - 1.  Degrees are drawn in
    breadth-first order from a single stream keyed by ``seed``.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if dist.max_degree > max_degree:
        raise ValueError(f"distribution support exceeds max degree {max_degree}")
    rng = CounterRNG(derive_key(seed, 0x6757))
    draw = lambda: dist.sample(rng)  # noqa: E731
    return _grow(draw, draw, depth, max_degree)


def level(tree: Tree, x: int) -> int:
    if not 0 <= x < tree.n:
        raise KeyError(f"unknown vertex {x}")
    return int(tree.level[x])


def _contains_member(tree: Tree, members: set[int]) -> np.ndarray:
    """has[v] is True iff the subtree below v (v included) meets ``members``."""
    has = np.zeros(tree.n, dtype=bool)
    has[list(members)] = True
    for v in range(tree.n - 1, 0, -1):
        if has[v]:
            has[tree.parent[v]] = True
    return has


def frontier_sets(tree: Tree, A: Iterable[int]) -> tuple[set[int], set[int]]:
    """Frontier F(A) and exterior boundary H(A).

    x is in F(A) when x is in A and some child c of x has a subtree free of
    A; H(A) collects all such children.
    """
    members = set(int(a) for a in A)
    if not members:
        raise ValueError("A must be non-empty")
    for a in members:
        if not 0 <= a < tree.n:
            raise KeyError(f"unknown vertex {a}")
        if tree.boundary[a]:
            raise TruncationError(f"vertex {a} is on the boundary; its subtrees are incomplete")
    has = _contains_member(tree, members)
    F, H = set(), set()
    for x in members:
        for c in tree.children(x):
            if not has[c]:
                F.add(x)
                H.add(int(c))
    return F, H


@dataclass(frozen=True)
class TreeSpec:
    """Recipe for the tree of a replica: regular ``d`` or Galton-Watson ``dist``.

    Regular trees are built once; Galton-Watson replicas each draw a fresh
    tree from their own seed.
    """

    depth: int
    d: int | None = None
    dist: DegreeDist | None = None

    def __post_init__(self):
        if (self.d is None) == (self.dist is None):
            raise ValueError("give exactly one of d or dist")

    @property
    def random(self) -> bool:
        return self.dist is not None

    @property
    def d_min(self) -> int:
        return self.d if self.d is not None else self.dist.min_degree

    def build(self, seed: int = 0) -> Tree:
        if self.d is not None:
            return _regular_cached(self.d, self.depth)
        return sample_gw_tree(self.dist, self.depth, seed)

    def to_dict(self) -> dict:
        if self.d is not None:
            return {"type": "regular", "d": self.d, "depth": self.depth}
        return {"type": "gw", "dist": {str(j): q for j, q in self.dist.atoms.items()}, "depth": self.depth}


_REGULAR_CACHE: dict[tuple[int, int], Tree] = {}


def _regular_cached(d: int, depth: int) -> Tree:
    key = (d, depth)
    if key not in _REGULAR_CACHE:
        _REGULAR_CACHE[key] = build_regular_tree(d, depth)
    return _REGULAR_CACHE[key]
