"""The k-cut number two ways, plus exact conditional expectations.

simulate_cut_process runs the literal cutting procedure (uniform vertex
from the root component, removal at the k-th cut).  simulate_records runs
the equivalent Gamma-clock record model.  exact_mean_records and
exact_second_moment_k1 compute conditional expectations by quadrature and
serve as analytic oracles for both simulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from kcut.tree import Tree, Profile


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class CutOutcome:
    """One replicate of the direct cutting process."""

    total_cuts: int
    per_vertex_cuts: np.ndarray | None = None


@dataclass(frozen=True)
class RecordOutcome:
    """One replicate of the record model: entry r-1 counts the r-records."""

    records_per_rank: np.ndarray

    @property
    def total(self) -> int:
        return int(self.records_per_rank.sum())


@dataclass(frozen=True)
class GammaTail:
    """Upper tail g(x) = P(Gamma(k) > x) of the integer Gamma(k, 1) law."""

    k: int

    def __call__(self, x):
        return special.gammaincc(self.k, x)

    def log(self, x):
        """log g(x) via the finite sum e^-x sum_{j<k} x^j / j!."""
        return _log_gamma_tail(self.k, np.asarray(x, dtype=float))


def _log_gamma_tail(k: int, x: np.ndarray) -> np.ndarray:
    # log Q(k, x) = -x + log(1 + x + x^2/2! + ... + x^{k-1}/(k-1)!)
    s = np.zeros_like(x)
    for j in range(k - 1, 0, -1):
        s = (s + 1.0 / math.factorial(j)) * x
    return -x + np.log1p(s)


def simulate_cut_process(t: Tree, k: int, rng: np.random.Generator,
                         keep_cuts: bool = False) -> CutOutcome:
    """Run the cutting procedure once and count the cuts.

    Repeatedly picks a uniform vertex of the component containing the
    root; a vertex hit for the k-th time is removed together with its
    (still attached) subtree; stops when the root is removed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    total = _cut_process_total(t, k, rng, cuts_out := np.zeros(t.n, dtype=np.int64) if keep_cuts else None)
    return CutOutcome(total_cuts=total, per_vertex_cuts=cuts_out)


def _cut_process_total(t: Tree, k: int, rng: np.random.Generator,
                       cuts_out: np.ndarray | None = None) -> int:
    n = t.n
    ptr = t.child_ptr
    idx = t.child_idx
    cuts = [0] * n
    alive = list(range(n))
    pos = list(range(n))
    m = n
    total = 0
    buf = rng.random(max(256, 4 * k))
    ib = 0
    nb = len(buf)
    while True:
        if ib == nb:
            buf = rng.random(nb)
            ib = 0
        v = alive[int(buf[ib] * m)]
        ib += 1
        total += 1
        c = cuts[v] + 1
        cuts[v] = c
        if c == k:
            if v == 0:
                break
            # remove v; its subtree leaves the root component
            stack = [v]
            while stack:
                w = stack.pop()
                p = pos[w]
                if p >= 0:
                    m -= 1
                    last = alive[m]
                    alive[p] = last
                    pos[last] = p
                    pos[w] = -1
                    alive.pop()
                    for ci in range(ptr[w], ptr[w + 1]):
                        stack.append(idx[ci])
    if cuts_out is not None:
        cuts_out[:] = cuts
    return total


def simulate_cut_process_many(t: Tree, k: int, reps: int,
                              rng: np.random.Generator) -> np.ndarray:
    """Total cuts for `reps` independent runs of the direct process."""
    out = np.empty(reps, dtype=np.int64)
    for i in range(reps):
        out[i] = _cut_process_total(t, k, rng)
    return out


def _level_order(t: Tree) -> tuple[np.ndarray, np.ndarray]:
    """Vertices sorted by depth plus the level boundary offsets."""
    order = np.argsort(t.depth, kind="stable")
    counts = np.bincount(t.depth)
    bounds = np.concatenate(([0], np.cumsum(counts)))
    return order, bounds


def simulate_records(t: Tree, k: int, rng: np.random.Generator) -> RecordOutcome:
    """Draw the Gamma clocks once and count r-records for r = 1..k.

    Vertex v is an r-record when its r-th arrival G_{r,v} beats every
    strict ancestor's k-th arrival; the root is a record for every rank.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = t.n
    g = rng.standard_exponential((n, k)).cumsum(axis=1)
    ancestor_min = np.full(n, np.inf)
    order, bounds = _level_order(t)
    gk = g[:, k - 1]
    parent = t.parent
    for lev in range(1, len(bounds) - 1):
        vs = order[bounds[lev]:bounds[lev + 1]]
        ps = parent[vs]
        ancestor_min[vs] = np.minimum(ancestor_min[ps], gk[ps])
    counts = (g < ancestor_min[:, None]).sum(axis=0)
    return RecordOutcome(records_per_rank=counts.astype(np.int64))


def simulate_records_many(t: Tree, k: int, reps: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Per-rank record counts for many replicates, shape (reps, k)."""
    out = np.empty((reps, k), dtype=np.int64)
    for i in range(reps):
        out[i] = simulate_records(t, k, rng).records_per_rank
    return out


# ---------------------------------------------------------------------------
# exact expectations

_QUAD_DEPTH_LIMIT = 512      # above this, switch to the vectorized panel rule

# Fixed composite Gauss-Legendre rule used for very many distinct depths;
# validated against adaptive quadrature in the test suite.
_PANELS = 12
_NODES = 16


def _depth_term_quad(k: int, r: int, depth: int) -> float:
    """E[I_{r,v}] for a vertex at the given depth, adaptive quadrature."""
    if depth == 0:
        return 1.0
    lg = math.lgamma(r)

    def f(x: float) -> float:
        if x == 0.0:
            return 0.0 if r > 1 else 1.0
        s = 0.0
        for j in range(k - 1, 0, -1):
            s = (s + 1.0 / math.factorial(j)) * x
        logg = -x + math.log1p(s)
        return math.exp((r - 1) * math.log(x) - x - lg + depth * logg)

    hi = float(_exponent_cap(k, np.array([float(depth)]))[0])
    val, err = integrate.quad(f, 0.0, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
    if err > 1e-10:
        raise QuadratureError(
            f"depth term (k={k}, r={r}, depth={depth}) error estimate {err:.2e}")
    return val


def _exponent_cap(k: int, d: np.ndarray) -> np.ndarray:
    """Where x - d log g(x) first reaches ~60, by vectorized bisection."""
    lo = np.zeros(len(d))
    hi = np.full(len(d), 70.0 + 10.0 * k)
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        below = mid - d * _log_gamma_tail(k, mid) < 60.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return hi


def _depth_terms_panel(k: int, r: int, depths: np.ndarray) -> np.ndarray:
    """Vectorized E[I_{r,v}] for many depths at once.

    Each depth integrates x^{r-1} e^{-x} g(x)^d / Gamma(r) on [0, U_d]
    where U_d caps the exponent x + d x^k / k! at ~60, using a fixed
    composite Gauss-Legendre rule on the scaled interval.
    """
    nodes, weights = np.polynomial.legendre.leggauss(_NODES)
    edges = np.linspace(0.0, 1.0, _PANELS + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    grid = (mids[:, None] + half * nodes[None, :]).ravel()
    wts = np.tile(half * weights, _PANELS)

    d = depths.astype(float)
    u_cap = _exponent_cap(k, d)
    out = np.empty(len(depths))
    lg = math.lgamma(r)
    chunk = 4096
    for lo in range(0, len(depths), chunk):
        hi = min(lo + chunk, len(depths))
        u = u_cap[lo:hi, None]
        x = u * grid[None, :]
        logg = _log_gamma_tail(k, x)
        with np.errstate(divide="ignore"):
            logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
        expo = (r - 1) * logx - x - lg + d[lo:hi, None] * logg
        if r == 1:
            expo = -x - lg + d[lo:hi, None] * logg
        vals = np.exp(expo)
        out[lo:hi] = (vals * wts[None, :]).sum(axis=1) * u[:, 0]
    out[depths == 0] = 1.0
    return out


def exact_mean_records(p: Profile, k: int, r: int) -> float:
    """E[number of r-records | tree] from the depth profile.

    Sums, over depths i, w_i times the integral of the Gamma(r) density
    against g(x)^i; the root level contributes w_0 exactly.
    """
    if not (1 <= r <= k):
        raise ValueError("need 1 <= r <= k")
    counts = np.asarray(p.counts)
    depths = np.flatnonzero(counts)
    if len(depths) <= _QUAD_DEPTH_LIMIT:
        terms = np.array([_depth_term_quad(k, r, int(d)) for d in depths])
    else:
        terms = _depth_terms_panel(k, r, depths)
    return float(counts[depths] @ terms)


def exact_mean_total(p: Profile, k: int) -> float:
    """E[total k-cut number | tree] = sum over ranks of exact_mean_records."""
    return sum(exact_mean_records(p, k, r) for r in range(1, k + 1))


def _pair_probability(k: int, d1: int, d2: int) -> float:
    """P(E_{1,v2} < E_{1,v1}, v1 and v2 both 1-records) for the spanning
    increments d1 = D(v1), d2 = D(v1, v2)."""

    def g_pow(x: np.ndarray, d: int) -> np.ndarray:
        if d == 0:
            return np.ones_like(x)
        return np.exp(d * _log_gamma_tail(k, x))

    def inner(x1: float) -> float:
        val, _ = integrate.quad(
            lambda x2: float(g_pow(np.asarray(x2), d2)) * math.exp(-x2),
            0.0, x1, epsabs=1e-10, epsrel=1e-10, limit=100)
        return val

    def outer(x1: float) -> float:
        return float(g_pow(np.asarray(x1), d1)) * math.exp(-x1) * inner(x1)

    hi = 50.0 + 10.0 * k
    val, err = integrate.quad(outer, 0.0, hi, epsabs=1e-9, epsrel=1e-9, limit=200)
    if err > 1e-8:
        raise QuadratureError(f"pair integral error estimate {err:.2e}")
    return val


def _pair_probability_chain(k: int, d1: int) -> float:
    """P(E_{1,v2} < E_{1,v1}, both 1-records) when v2 is a strict non-root
    ancestor of v1 with |ancestors(v1)| = d1.

    Conditional on E_{1,v2} = x2, the clock of v2 itself is x2 + Gamma(k-1),
    so its survival past x1 contributes Q(k-1, x1 - x2) rather than a fresh
    Gamma(k) tail; the other d1 - 1 ancestors of v1 contribute g(x1) each.
    """

    def inner(x1: float) -> float:
        val, _ = integrate.quad(
            lambda x2: float(special.gammaincc(k - 1, x1 - x2))
            * math.exp(-x2),
            0.0, x1, epsabs=1e-10, epsrel=1e-10, limit=100)
        return val

    def outer(x1: float) -> float:
        g1 = math.exp((d1 - 1) * float(_log_gamma_tail(k, np.asarray(x1)))) \
            if d1 > 1 else 1.0
        return g1 * math.exp(-x1) * inner(x1)

    hi = 50.0 + 10.0 * k
    val, err = integrate.quad(outer, 0.0, hi, epsabs=1e-9, epsrel=1e-9, limit=200)
    if err > 1e-8:
        raise QuadratureError(f"chain pair integral error estimate {err:.2e}")
    return val


def exact_second_moment_k1(t: Tree, k: int) -> float:
    """E[(number of 1-records)^2 | tree] by 2-D quadrature over vertex pairs.

    Valid for k >= 2 (the ordered-pair decomposition fails for k = 1 when
    one vertex is an ancestor of the other).  Guarded to small trees: the
    pair sum is quadratic in n.
    """
    if k < 2:
        raise ValueError("the pair identity requires k >= 2")
    if t.n > 200:
        raise ValueError(f"tree too large for the exact pair sum (n={t.n})")
    from kcut.tree import profile

    # strict-ancestor set of each vertex (root path excluding the vertex)
    ancestors: list[frozenset[int]] = []
    for v in range(t.n):
        p = int(t.parent[v])
        ancestors.append(frozenset() if p < 0
                         else ancestors[p] | frozenset((p,)))

    # Group ordered pairs (v1, v2) by kernel.  Conditional on
    # E_{1,v2} = x2 < E_{1,v1} = x1, a shared ancestor of the pair is
    # already constrained past x1, so only ancestors of v2 that are not
    # ancestors of v1 contribute a g(x2) factor.  When the pair is
    # comparable the conditioning reaches the ancestor's own clock:
    #   - v1 a non-root ancestor of v2: v1's clock sits at x1 + Gamma(k-1),
    #     already past x2, so its g(x2) factor drops out;
    #   - v2 a non-root ancestor of v1: v2's clock is x2 + Gamma(k-1) and
    #     must pass x1, a Q(k-1, x1-x2) factor instead of one g(x1).
    # The root carries no record constraint and its first arrival is
    # independent of everything that matters, so root pairs use the plain
    # kernel.
    pair_counts: dict[tuple[int, int], int] = {}
    chain_counts: dict[int, int] = {}
    depth = t.depth
    for v1 in range(t.n):
        d1 = int(depth[v1])
        anc1 = ancestors[v1]
        for v2 in range(t.n):
            if v1 == v2:
                continue
            d2 = len(ancestors[v2] - anc1)
            if v1 != 0 and v1 in ancestors[v2]:
                key = (d1, d2 - 1)
            elif v2 != 0 and v2 in anc1:
                chain_counts[d1] = chain_counts.get(d1, 0) + 1
                continue
            else:
                key = (d1, d2)
            pair_counts[key] = pair_counts.get(key, 0) + 1
    pair_sum = sum(cnt * _pair_probability(k, d1, d2)
                   for (d1, d2), cnt in pair_counts.items())
    pair_sum += sum(cnt * _pair_probability_chain(k, d1)
                    for d1, cnt in chain_counts.items())
    return 2.0 * pair_sum + exact_mean_records(profile(t), k, 1)


def gamma_tail_power_approx_error(k: int, d: int, a: float,
                                  grid: int = 4001) -> float:
    """Worst relative error of exp(-d x^k / k!) against g(x)^d on the
    window [0, a^((1/k + 1/(k+1))/2)] used by the tail approximation."""
    if d == 0:
        return 0.0
    alpha = 0.5 * (1.0 / k + 1.0 / (k + 1))
    x0 = a ** alpha
    x = np.linspace(0.0, x0, grid)
    delta = d * (_log_gamma_tail(k, x) + x ** k / math.factorial(k))
    return float(np.abs(np.expm1(delta)).max())
