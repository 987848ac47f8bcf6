"""Rooted ordered trees in flat-array form.

Vertices are integers 0..n-1 with root 0 (after canonical relabeling in
depth-first order).  The parent array uses -1 as the root sentinel and
children are stored in CSR layout so that large trees (n up to 1e7) stay
cache friendly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ROOT_SENTINEL = -1


class TreeStructureError(ValueError):
    """Raised when an input does not encode a single connected rooted tree."""


@dataclass(frozen=True)
class Tree:
    """Rooted ordered tree: parent/depth arrays plus CSR children lists.

    Immutable after construction; all operations on it are pure.
    """

    n: int
    parent: np.ndarray        # parent[v], root has ROOT_SENTINEL
    depth: np.ndarray         # edge distance from root
    child_ptr: np.ndarray     # CSR offsets, len n+1
    child_idx: np.ndarray     # concatenated ordered child lists

    def children(self, v: int) -> np.ndarray:
        return self.child_idx[self.child_ptr[v]:self.child_ptr[v + 1]]

    @property
    def root(self) -> int:
        return 0

    def max_depth(self) -> int:
        return int(self.depth.max())


@dataclass(frozen=True)
class Profile:
    """Vertex counts per depth level: counts[i] = #vertices at depth i."""

    counts: np.ndarray
    n: int


@dataclass(frozen=True)
class DfsWalk:
    """Depth-first (contour) walk of a tree.

    values[t] is the depth of the vertex under the walk at integer time t,
    for t in 0..2(n-1); visit_order[t] is that vertex.  A single-vertex
    tree degenerates to the constant walk [0].
    """

    values: np.ndarray
    visit_order: np.ndarray


def _children_from_parents(n: int, parent: np.ndarray) -> list[list[int]]:
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        p = parent[v]
        if p != ROOT_SENTINEL:
            children[p].append(v)
    return children


def _csr(n: int, children: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        ptr[v + 1] = ptr[v] + len(children[v])
    idx = np.empty(ptr[-1], dtype=np.int64)
    for v in range(n):
        idx[ptr[v]:ptr[v + 1]] = children[v]
    return ptr, idx


def _depths_by_doubling(parent: np.ndarray) -> np.ndarray:
    """Vectorized depths for a parent array with parent[v] < v, root 0."""
    n = parent.shape[0]
    count = np.ones(n, dtype=np.int64)
    count[0] = 0
    jump = parent.copy()
    jump[0] = 0
    while (jump != 0).any():
        count = count + count[jump]
        jump = jump[jump]
    return count


def from_canonical_parents(parents: Iterable[int]) -> Tree:
    """Build a Tree from a parent array with parent[v] < v and root 0.

    Fast path for the generators, which all produce vertices in an order
    where parents precede children.  Child order is order of appearance.
    """
    parent = np.asarray(parents, dtype=np.int64)
    n = parent.shape[0]
    if n == 0 or parent[0] != ROOT_SENTINEL:
        raise TreeStructureError("vertex 0 must be the root")
    if n > 1:
        rest = parent[1:]
        if (rest < 0).any() or (rest >= np.arange(1, n)).any():
            raise TreeStructureError("parents must precede children")
    depth = _depths_by_doubling(parent)
    order = np.argsort(parent[1:], kind="stable") + 1 if n > 1 else np.array([], dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    if n > 1:
        counts = np.bincount(parent[1:], minlength=n)
        np.cumsum(counts, out=ptr[1:])
    return Tree(n=n, parent=parent, depth=depth, child_ptr=ptr, child_idx=order)


def build_tree(parents: Sequence[int],
               child_order: Sequence[Sequence[int]] | None = None) -> Tree:
    """Validate a parent encoding and return the canonically relabeled Tree.

    `parents[v]` is the parent of vertex v; the root carries the sentinel -1.
    `child_order` optionally fixes the ordered child list of every vertex
    (default: order of appearance in `parents`).  Vertices are relabeled to
    depth-first preorder, so the result always has root 0 and parent < child.
    """
    parent = np.asarray(list(parents), dtype=np.int64)
    n = parent.shape[0]
    if n == 0:
        raise TreeStructureError("empty tree")
    roots = np.flatnonzero(parent == ROOT_SENTINEL)
    if len(roots) == 0:
        raise TreeStructureError("no root (sentinel -1) found")
    if len(roots) > 1:
        raise TreeStructureError(f"multiple roots: {roots.tolist()}")
    if ((parent < ROOT_SENTINEL) | (parent >= n)).any():
        raise TreeStructureError("parent index out of range")
    root = int(roots[0])

    if child_order is None:
        children = _children_from_parents(n, parent)
    else:
        if len(child_order) != n:
            raise TreeStructureError("child_order must list every vertex")
        children = [list(c) for c in child_order]
        seen = np.zeros(n, dtype=bool)
        for v in range(n):
            for c in children[v]:
                if c < 0 or c >= n or seen[c] or parent[c] != v:
                    raise TreeStructureError("child_order inconsistent with parents")
                seen[c] = True
        if int(seen.sum()) != n - 1:
            raise TreeStructureError("child_order does not cover all non-root vertices")

    # Preorder DFS; also detects cycles / disconnected vertices.
    new_label = np.full(n, -1, dtype=np.int64)
    new_parent = np.empty(n, dtype=np.int64)
    new_children: list[list[int]] = [[] for _ in range(n)]
    stack = [(root, ROOT_SENTINEL)]
    count = 0
    while stack:
        v, plabel = stack.pop()
        if new_label[v] != -1:
            raise TreeStructureError("cycle detected")
        lbl = count
        count += 1
        new_label[v] = lbl
        new_parent[lbl] = plabel
        if plabel != ROOT_SENTINEL:
            new_children[plabel].append(lbl)
        for c in reversed(children[v]):
            stack.append((c, lbl))
    if count != n:
        orphans = np.flatnonzero(new_label == -1)
        raise TreeStructureError(f"disconnected vertices: {orphans.tolist()}")

    depth = np.zeros(n, dtype=np.int64)
    for v in range(1, n):
        depth[v] = depth[new_parent[v]] + 1
    ptr, idx = _csr(n, new_children)
    return Tree(n=n, parent=new_parent, depth=depth, child_ptr=ptr, child_idx=idx)


def profile(t: Tree) -> Profile:
    """Depth profile: counts[i] = number of vertices at depth i."""
    counts = np.bincount(t.depth)
    return Profile(counts=counts, n=t.n)


def dfs_walk(t: Tree) -> DfsWalk:
    """Contour walk of the tree (length 2(n-1)+1 at integer times)."""
    n = t.n
    if n == 1:
        z = np.zeros(1, dtype=np.int64)
        return DfsWalk(values=z, visit_order=z.copy())
    m = 2 * (n - 1) + 1
    values = np.empty(m, dtype=np.int64)
    visit = np.empty(m, dtype=np.int64)
    ptr, idx, parent, depth = t.child_ptr, t.child_idx, t.parent, t.depth
    next_child = t.child_ptr[:-1].copy()
    v = 0
    for time in range(m):
        values[time] = depth[v]
        visit[time] = v
        if next_child[v] < ptr[v + 1]:
            c = idx[next_child[v]]
            next_child[v] += 1
            v = c
        elif v != 0:
            v = parent[v]
    return DfsWalk(values=values, visit_order=visit)


def spanned_edges(t: Tree, vs: Sequence[int]) -> int:
    """Number of edges in the subtree spanned by the root and the given vertices."""
    if len(vs) == 0:
        raise ValueError("need at least one vertex")
    marked: set[int] = set()
    parent = t.parent
    edges = 0
    for v in vs:
        u = int(v)
        if u < 0 or u >= t.n:
            raise ValueError(f"vertex {u} out of range")
        while u != 0 and u not in marked:
            marked.add(u)
            edges += 1
            u = int(parent[u])
    return edges


def incremental_spans(t: Tree, vs: Sequence[int]) -> list[int]:
    """Increments of spanned_edges along the given vertex sequence.

    Entry i is spanned_edges(vs[: i + 1]) - spanned_edges(vs[: i]).
    """
    if len(vs) == 0:
        raise ValueError("need at least one vertex")
    marked: set[int] = set()
    parent = t.parent
    out: list[int] = []
    for v in vs:
        u = int(v)
        if u < 0 or u >= t.n:
            raise ValueError(f"vertex {u} out of range")
        new = 0
        while u != 0 and u not in marked:
            marked.add(u)
            new += 1
            u = int(parent[u])
        out.append(new)
    return out


def write_tree(t: Tree, path: str) -> None:
    """Serialize as newline-delimited parents, root line '-'."""
    with open(path, "w") as fh:
        for v in range(t.n):
            p = t.parent[v]
            fh.write("-\n" if p == ROOT_SENTINEL else f"{p}\n")


def read_tree(path: str) -> Tree:
    """Read the newline-delimited parent format written by write_tree."""
    parents: list[int] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parents.append(ROOT_SENTINEL if line == "-" else int(line))
    return build_tree(parents)
