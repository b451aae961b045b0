"""Flat inputs for the event kernels, cached per tree."""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import ModelParams
from .trees import Tree

_NO_BRANCHING = 1 << 30
_CACHE: "weakref.WeakKeyDictionary[Tree, dict]" = weakref.WeakKeyDictionary()


@dataclass(frozen=True)
class TreeArrays:
    nbr_ptr: object
    nbr: object
    deg: object
    boundary: object
    adj_boundary: object
    n: int


@dataclass(frozen=True)
class Rates:
    p0: float
    cum: np.ndarray
    kmin: int
    rmax: float


def tree_arrays(tree: Tree, backend=None) -> TreeArrays:
    backend = backend or kernels.backend
    per_tree = _CACHE.setdefault(tree, {})
    key = backend.__name__
    if key not in per_tree:
        arrs = (
            np.ascontiguousarray(tree.nbr_ptr, dtype=np.int64),
            np.ascontiguousarray(tree.nbr_flat, dtype=np.int64),
            np.ascontiguousarray(tree.degree, dtype=np.int64),
            tree.boundary.astype(np.uint8),
            tree.touches_boundary().astype(np.uint8),
        )
        if backend is kernels.python_backend:
            arrs = tuple(a.tolist() for a in arrs)
        per_tree[key] = TreeArrays(*arrs, n=tree.n)
    return per_tree[key]


def rates(params: ModelParams, tree: Tree) -> Rates:
    p0 = params.p0
    branch = np.array(params.p[1:], dtype=np.float64)
    if p0 < 1.0 and branch.size:
        cum = np.cumsum(branch / (1.0 - p0))
        cum[-1] = 1.0
    else:
        cum = np.ones(1, dtype=np.float64)
    positive = np.flatnonzero(branch > 0)
    kmin = int(positive[0]) + 1 if positive.size else _NO_BRANCHING
    interior = tree.degree[~tree.boundary]
    dmax = int(interior.max()) if interior.size else int(tree.degree.max())
    return Rates(p0, np.ascontiguousarray(cum), kmin, p0 + dmax * (1.0 - p0))


def state_buffer(n: int, members, backend=None):
    backend = backend or kernels.backend
    buf = np.zeros(n, dtype=np.uint8)
    buf[list(members)] = 1
    if backend is kernels.python_backend:
        return bytearray(buf.tobytes())
    return buf
