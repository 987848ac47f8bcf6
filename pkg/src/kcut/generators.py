"""Tree families: deterministic shapes and random models.

All generators are pure functions of (parameters, rng state) and return a
Tree whose vertices are numbered so that parents precede children.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from kcut.tree import Tree, from_canonical_parents


class InfeasibleSizeError(ValueError):
    """Requested size is impossible for the offspring distribution."""


class RetryBudgetError(RuntimeError):
    """Conditioned-sum rejection sampling exceeded its attempt budget."""


@dataclass(frozen=True)
class OffspringDist:
    """Critical offspring law (mean 1, finite positive variance).

    kind is one of "poisson1", "geometric_half", "custom_pmf"; pmf is only
    set for the custom kind.  span is the period of the support of xi - 1,
    which controls which conditioned sizes are feasible.
    """

    kind: str
    pmf: np.ndarray | None = None
    mean: float = 1.0
    variance: float = 0.0
    span: int = 1

    @staticmethod
    def poisson1() -> "OffspringDist":
        return OffspringDist(kind="poisson1", variance=1.0)

    @staticmethod
    def geometric_half() -> "OffspringDist":
        # P(xi = j) = 2^-(j+1): mean 1, variance 2.
        return OffspringDist(kind="geometric_half", variance=2.0)

    @staticmethod
    def custom(pmf: Sequence[float]) -> "OffspringDist":
        p = np.asarray(pmf, dtype=float)
        if p.ndim != 1 or (p < 0).any():
            raise ValueError("pmf must be a nonnegative vector")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("pmf must sum to 1")
        j = np.arange(len(p))
        mean = float(p @ j)
        if abs(mean - 1.0) > 1e-12:
            raise ValueError(f"offspring mean must be 1, got {mean}")
        var = float(p @ (j - mean) ** 2)
        if var <= 0:
            raise ValueError("offspring variance must be positive")
        support = j[p > 0]
        span = 0
        for s in support - support[0]:
            span = math.gcd(span, int(s))
        return OffspringDist(kind="custom_pmf", pmf=p, variance=var,
                             span=max(span, 1))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "poisson1":
            return rng.poisson(1.0, size)
        if self.kind == "geometric_half":
            return rng.geometric(0.5, size) - 1
        return rng.choice(len(self.pmf), size=size, p=self.pmf)


def gen_path(n: int, rng=None) -> Tree:
    """Path with n vertices, root at one end."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return from_canonical_parents(np.arange(-1, n - 1))


def gen_complete_binary(n: int, rng=None) -> Tree:
    """Complete binary tree: full levels, last level filled leftmost."""
    if n < 1:
        raise ValueError("n must be >= 1")
    parents = (np.arange(n) - 1) // 2
    parents[0] = -1
    return from_canonical_parents(parents)


def gen_complete_regular(d: int, height: int) -> Tree:
    """Complete d-regular tree: d^j vertices at depth j = 0..height."""
    if d < 2 or height < 0:
        raise ValueError("need d >= 2 and height >= 0")
    sizes = [d ** j for j in range(height + 1)]
    n = sum(sizes)
    parents = np.empty(n, dtype=np.int64)
    parents[0] = -1
    start_prev, pos = 0, 1
    for j in range(1, height + 1):
        cnt = sizes[j]
        parents[pos:pos + cnt] = start_prev + np.arange(cnt) // d
        start_prev = pos
        pos += cnt
    return from_canonical_parents(parents)


def gen_mixture(components: Sequence[tuple[int, int]]) -> Tree:
    """Complete regular trees of given (degree, height) merged at one root.

    Component i contributes d_i^j vertices at depth j = 1..height_i, so the
    root degree is the sum of the d_i and the total size is
    1 + sum_i d_i (d_i^{h_i} - 1) / (d_i - 1).
    """
    if not components:
        raise ValueError("need at least one component")
    n = 1
    for d, h in components:
        if d < 2 or h < 1:
            raise ValueError("need d >= 2 and height >= 1 per component")
        n += d * (d ** h - 1) // (d - 1)
    if n > 10 ** 9:
        raise ValueError(f"mixture size {n} too large")
    parents = np.empty(n, dtype=np.int64)
    parents[0] = -1
    pos = 1
    for d, h in components:
        start_prev, cnt_prev = 0, 1          # the shared root
        for j in range(1, h + 1):
            cnt = d ** j
            if j == 1:
                parents[pos:pos + cnt] = 0
            else:
                parents[pos:pos + cnt] = start_prev + np.arange(cnt) // d
            start_prev = pos
            pos += cnt
    return from_canonical_parents(parents)


def _conditioned_offspring(n: int, dist: OffspringDist,
                           rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. offspring draws conditioned on summing to n - 1."""
    if dist.kind == "poisson1":
        # i.i.d. Poisson conditioned on the total is exactly multinomial.
        return rng.multinomial(n - 1, np.full(n, 1.0 / n))
    if dist.kind == "geometric_half":
        # Conditioned geometric(1/2) vectors are uniform over the
        # compositions of n-1 into n parts: stars and bars.
        slots = 2 * n - 2
        bars = np.sort(rng.choice(slots, size=n - 1, replace=False))
        edges = np.concatenate(([-1], bars, [slots]))
        return np.diff(edges) - 1
    if (n - 1) % dist.span != 0 and dist.pmf is not None:
        support = np.flatnonzero(dist.pmf)
        lo, hi = int(support[0]) * n, int(support[-1]) * n
        if not (lo <= n - 1 <= hi) or (n - 1 - lo) % dist.span != 0:
            raise InfeasibleSizeError(
                f"no offspring vector of length {n} sums to {n - 1}")
    budget = int(10_000 * math.sqrt(n))
    for _ in range(budget):
        xi = dist.sample(rng, n)
        if xi.sum() == n - 1:
            return xi
    raise RetryBudgetError(
        f"conditioned-sum rejection failed after {budget} attempts (n={n})")


def _tree_from_preorder_degrees(deg: np.ndarray) -> Tree:
    n = len(deg)
    parents = np.full(n, -1, dtype=np.int64)
    stack = [0]
    remaining = [int(deg[0])]
    for v in range(1, n):
        while remaining[-1] == 0:
            stack.pop()
            remaining.pop()
        parents[v] = stack[-1]
        remaining[-1] -= 1
        stack.append(v)
        remaining.append(int(deg[v]))
    return from_canonical_parents(parents)


def gen_cgw(n: int, dist: OffspringDist, rng: np.random.Generator) -> Tree:
    """Galton-Watson tree with the given critical offspring law,
    conditioned on having exactly n vertices.

    Samples the offspring vector conditioned on its sum, then rotates the
    corresponding Lukasiewicz path by the cycle lemma to obtain the unique
    valid preorder degree sequence.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return from_canonical_parents([-1])
    xi = np.asarray(_conditioned_offspring(n, dist, rng), dtype=np.int64)
    steps = xi - 1
    walk = np.cumsum(steps)
    pivot = int(np.argmin(walk))          # first minimum
    deg = np.concatenate((xi[pivot + 1:], xi[:pivot + 1]))
    return _tree_from_preorder_degrees(deg)


def gen_recursive(n: int, rng: np.random.Generator) -> Tree:
    """Uniform random recursive tree: vertex i attaches uniformly in 0..i-1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    parents = np.full(n, -1, dtype=np.int64)
    if n > 1:
        parents[1:] = (rng.random(n - 1) * np.arange(1, n)).astype(np.int64)
    return from_canonical_parents(parents)


def gen_preferential(n: int, alpha: float, rng: np.random.Generator) -> Tree:
    """Scale-free tree: attach to vertex i with probability
    (deg(i) + alpha) / (2m + alpha(m+1)) when the tree has m edges.

    Uses the decomposition deg + alpha = (deg - 1) + (1 + alpha): with
    probability proportional to m-1 pick an entry of the deg-1 multiset
    (each vertex listed deg-1 times), otherwise a uniform vertex.  Exact
    for every alpha > -1, O(1) per attachment.
    """
    if alpha <= -1:
        raise ValueError("alpha must be > -1")
    if n < 2:
        raise ValueError("scale-free trees start from a single edge (n >= 2)")
    parents = np.full(n, -1, dtype=np.int64)
    parents[1] = 0
    if n == 2:
        return from_canonical_parents(parents)
    # excess[0..top) lists each vertex deg-1 times
    excess = np.empty(n - 2, dtype=np.int64)
    top = 0
    u = rng.random(n - 2)
    pick = rng.random(n - 2)
    for v in range(2, n):
        m = v - 1                     # current edge count
        w_excess = m - 1.0
        w_total = w_excess + (1.0 + alpha) * (m + 1)
        if u[v - 2] * w_total < w_excess:
            target = excess[int(pick[v - 2] * top)]
        else:
            target = int(pick[v - 2] * (m + 1))
        parents[v] = target
        excess[top] = target
        top += 1
    return from_canonical_parents(parents)


def gen_bst(n: int, rng: np.random.Generator) -> Tree:
    """Shape of the binary search tree built from a uniform random
    permutation of 1..n.

    Uses the equivalent recursive description (the root's rank is uniform,
    the two subtrees are independent random BSTs of the resulting sizes),
    processed level by level so large trees vectorize.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    parents = np.full(n, -1, dtype=np.int64)
    ids = np.array([0], dtype=np.int64)
    sizes = np.array([n], dtype=np.int64)
    next_id = 1
    while len(ids):
        splits = (rng.random(len(ids)) * sizes).astype(np.int64)
        left, right = splits, sizes - 1 - splits
        child_sizes = np.concatenate((left, right))
        child_parents = np.concatenate((ids, ids))
        keep = child_sizes > 0
        child_sizes = child_sizes[keep]
        child_parents = child_parents[keep]
        cnt = len(child_sizes)
        new_ids = np.arange(next_id, next_id + cnt, dtype=np.int64)
        parents[new_ids] = child_parents
        next_id += cnt
        ids, sizes = new_ids, child_sizes
    return from_canonical_parents(parents)


@dataclass(frozen=True)
class FamilySpec:
    """Which tree family to generate, with its parameters."""

    family: str                       # path | complete_binary | mixture |
                                      # cgw | recursive | preferential | bst
    n: int = 0
    alpha: float = 0.0
    offspring: OffspringDist | None = None
    components: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def generate(self, rng: np.random.Generator) -> Tree:
        if self.family == "path":
            return gen_path(self.n)
        if self.family == "complete_binary":
            return gen_complete_binary(self.n)
        if self.family == "mixture":
            return gen_mixture(self.components)
        if self.family == "cgw":
            dist = self.offspring or OffspringDist.poisson1()
            return gen_cgw(self.n, dist, rng)
        if self.family == "recursive":
            return gen_recursive(self.n, rng)
        if self.family == "preferential":
            return gen_preferential(self.n, self.alpha, rng)
        if self.family == "bst":
            return gen_bst(self.n, rng)
        raise ValueError(f"unknown family {self.family!r}")

    @property
    def deterministic(self) -> bool:
        return self.family in ("path", "complete_binary", "mixture")
