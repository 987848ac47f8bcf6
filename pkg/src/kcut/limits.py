"""Limit-law numerics: walk functionals, moment integrals, closed constants.

Everything here revolves around one object: the ordered-region integral

    F_q(z) = int_{x_1 > ... > x_q > 0} exp(-sum_i z_i x_i^k / k!) dx,

with nonnegative coefficients z.  The walk moments m_q(f), the excursion
constants eta_{k,q} and the mixture moments E[Z_zeta^q] are all averages
of q! F_q over different coefficient laws.  Substituting
u_i = z_i x_i^k / k! turns each factor into a Gamma(1/k) tail, so

    F_q(z) = prod_i (k!/z_i)^{1/k} Gamma(1+1/k)
             * P(G_1/z_1 >= G_2/z_2 >= ... >= G_q/z_q),

with G_i i.i.d. Gamma(1/k, 1).  The chain probability is exact for
q <= 2 (Beta tail), Gauss-Laguerre quadrature for q = 3, and Monte Carlo
for q = 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special


class IntegrabilityError(ValueError):
    """The requested moment integral diverges."""


@dataclass(frozen=True)
class LimitEstimate:
    """A numeric limit value with its error estimate and provenance."""

    value: float
    error: float
    method: str


# ---------------------------------------------------------------------------
# piecewise-linear walks

@dataclass(frozen=True)
class PiecewiseLinearWalk:
    """Continuous piecewise-linear function on [0,1] with values >= 0."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if b.ndim != 1 or len(b) < 2 or len(b) != len(v):
            raise ValueError("breakpoints and values must be equal-length vectors")
        if b[0] != 0.0 or b[-1] != 1.0 or (np.diff(b) <= 0).any():
            raise ValueError("breakpoints must increase from 0 to 1")
        if (v < 0).any():
            raise ValueError("walk values must be nonnegative")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if (t < 0).any() or (t > 1).any():
            raise ValueError("walk evaluated outside [0,1]")
        return np.interp(t, self.breakpoints, self.values)

    def inf_between(self, a: float, b: float) -> float:
        """Exact infimum over [a, b] (a <= b)."""
        if a > b:
            a, b = b, a
        lo = float(min(self(a), self(b)))
        inside = (self.breakpoints > a) & (self.breakpoints < b)
        if inside.any():
            lo = min(lo, float(self.values[inside].min()))
        return lo

    @classmethod
    def tent(cls) -> "PiecewiseLinearWalk":
        """The triangular path-limit shape: 2t up, 2-2t down."""
        return cls(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 0.0]))

    @classmethod
    def constant(cls, c: float) -> "PiecewiseLinearWalk":
        return cls(np.array([0.0, 1.0]), np.array([float(c), float(c)]))

    @classmethod
    def from_contour(cls, values, scale: float = 1.0) -> "PiecewiseLinearWalk":
        """Normalize a contour walk (values at integer times) to [0,1]."""
        v = np.asarray(values, dtype=float) * scale
        if len(v) == 1:
            v = np.repeat(v, 2)
        return cls(np.linspace(0.0, 1.0, len(v)), v)


def walk_L(f: PiecewiseLinearWalk, ts) -> float:
    """Spanned length of the points ts in the tree coded by f.

    Sum of f over the sorted points minus the infima between consecutive
    ones; symmetric in ts and exact for piecewise-linear f.
    """
    ts = np.sort(np.asarray(ts, dtype=float))
    if len(ts) == 0:
        raise ValueError("need at least one point")
    total = float(f(ts).sum())
    for a, b in zip(ts[:-1], ts[1:]):
        total -= f.inf_between(float(a), float(b))
    return total


def walk_D(f: PiecewiseLinearWalk, ts) -> np.ndarray:
    """Increments of walk_L along ts in the given order (all >= 0)."""
    ts = list(np.asarray(ts, dtype=float))
    if len(ts) == 0:
        raise ValueError("need at least one point")
    out = np.empty(len(ts))
    prev = 0.0
    for i in range(len(ts)):
        cur = walk_L(f, ts[:i + 1])
        out[i] = max(cur - prev, 0.0)
        prev = cur
    return out


# ---------------------------------------------------------------------------
# the ordered-region integral F_q

def _middle_variable_rule(k: int):
    """Composite Gauss-Legendre rule for int_0^inf k e^{-u^k} h(u^k) du.

    After the substitution y = u^k the Gamma(1/k) weight becomes analytic
    (k integer), and geometric panels resolve transitions of h at any
    scale; cached per k.
    """
    if k not in _MIDDLE_RULES:
        nodes, weights = np.polynomial.legendre.leggauss(12)
        top = 70.0 ** (1.0 / k)
        edges = np.concatenate(([0.0], top * 2.0 ** np.arange(-40.0, 1.0)))
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        u = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        w = (half[:, None] * weights[None, :]).ravel()
        w = w * k * np.exp(-u ** k) / math.gamma(1.0 / k)
        _MIDDLE_RULES[k] = (u ** k, w)
    return _MIDDLE_RULES[k]


_MIDDLE_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _chain_probability(z: np.ndarray, k: int,
                       mc_samples: int = 0,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """P(G_1/z_1 >= ... >= G_q/z_q) for i.i.d. G_i ~ Gamma(1/k, 1).

    z has shape (m, q) with strictly positive entries.  Exact for q <= 2,
    quadrature over the middle variable for q = 3, plain MC for q >= 4.
    """
    a = 1.0 / k
    q = z.shape[1]
    if q == 1:
        return np.ones(len(z))
    if q == 2:
        # G1/z1 >= G2/z2  <=>  G1/(G1+G2) >= z1/(z1+z2), a Beta(a,a) tail
        return 1.0 - special.betainc(a, a, z[:, 0] / (z[:, 0] + z[:, 1]))
    if q == 3:
        y, w = _middle_variable_rule(k)
        out = np.empty(len(z))
        chunk = max(1, 200_000 // len(y))
        for lo in range(0, len(z), chunk):
            hi = min(lo + chunk, len(z))
            upper = special.gammaincc(a, y[None, :] * (z[lo:hi, 0] / z[lo:hi, 1])[:, None])
            lower = special.gammainc(a, y[None, :] * (z[lo:hi, 2] / z[lo:hi, 1])[:, None])
            out[lo:hi] = (upper * lower) @ w
        return out
    if rng is None:
        rng = np.random.default_rng(0)
    m = mc_samples or 200_000
    out = np.empty(len(z))
    for i in range(len(z)):
        g = rng.gamma(a, 1.0, (m, q)) / z[i]
        out[i] = float(np.all(np.diff(g, axis=1) <= 0, axis=1).mean())
    return out


def ordered_exp_integral(z, k: int,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """F_q(z): the exp(-sum z_i x_i^k / k!) integral over x_1 > ... > x_q > 0.

    Vectorized over rows of z.  Zero coefficients are only supported for
    q <= 2 (a zero z_2 integrates the free inner variable exactly).
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    q = z.shape[1]
    kf = math.factorial(k)
    if (z[:, 0] <= 0).any():
        raise IntegrabilityError("leading coefficient must be positive")
    if q == 1:
        return (kf / z[:, 0]) ** (1.0 / k) * math.gamma(1.0 + 1.0 / k)
    if q == 2:
        out = np.empty(len(z))
        zero2 = z[:, 1] == 0.0
        if zero2.any():
            out[zero2] = (kf / z[zero2, 0]) ** (2.0 / k) * math.gamma(2.0 / k) / k
        pos = ~zero2
        if pos.any():
            zp = z[pos]
            norms = ((kf / zp) ** (1.0 / k)).prod(axis=1) * math.gamma(1.0 + 1.0 / k) ** 2
            out[pos] = norms * _chain_probability(zp, k)
        return out
    if (z <= 0).any():
        raise IntegrabilityError("coefficients must be positive for q >= 3")
    norms = ((kf / z) ** (1.0 / k)).prod(axis=1) * math.gamma(1.0 + 1.0 / k) ** q
    return norms * _chain_probability(z, k, rng=rng)


def _ordered_exp_integral_quad(z: np.ndarray, k: int) -> float:
    """F_q by nested adaptive quadrature in gap coordinates (slow oracle).

    Substituting x_i = w_i + ... + w_q turns the ordered region into the
    positive orthant; used to cross-validate the closed/Laguerre routes.
    """
    z = np.asarray(z, dtype=float)
    q = len(z)
    kf = math.factorial(k)

    def level(i: int, tail: float) -> float:
        # integrate over w_i >= 0 with x_i = w_i + tail
        if i == 0:
            # innermost in x-order: closed Gamma-tail integral
            s = z[0] / kf
            return ((1.0 / s) ** (1.0 / k) / k * math.gamma(1.0 / k)
                    * special.gammaincc(1.0 / k, s * tail ** k))

        def f(w: float) -> float:
            x = w + tail
            return math.exp(-z[i] * x ** k / kf) * level(i - 1, x)

        val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-11, epsrel=1e-10,
                                limit=200)
        return val

    return level(q - 1, 0.0)


# ---------------------------------------------------------------------------
# closed-form constants

def eta_k1_closed(k: int) -> float:
    """First moment of the conditioned-tree limit law, closed form."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return (2.0 ** (-1.0 / (2 * k)) * math.factorial(k) ** (1.0 / k) / k
            * math.gamma(1.0 / k) * math.gamma(1.0 - 1.0 / (2 * k)))


def rayleigh_moment(q: int) -> float:
    """q-th moment of the Rayleigh law x e^{-x^2/2} (the k=1 limit)."""
    if q < 0:
        raise ValueError("q must be >= 0")
    return 2.0 ** (q / 2.0) * math.gamma(1.0 + q / 2.0)


def loght_limit(k: int) -> float:
    """Degenerate limit constant for log-height families."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.factorial(k) ** (1.0 / k) * math.gamma(1.0 + 1.0 / k)


def logheight_kr_limit(k: int, r: int) -> float:
    """Scaled E[number of r-records] limit for log-height families."""
    if not 1 <= r <= k:
        raise ValueError("need 1 <= r <= k")
    return (math.factorial(k) ** (r / k) * math.gamma(r / k)
            / (k * math.gamma(r)))


def kr_limit_cgw(k: int, r: int, sigma: float) -> float:
    """Scaled E[number of r-records] limit for conditioned Galton-Watson
    trees with offspring standard deviation sigma."""
    if not 1 <= r <= k:
        raise ValueError("need 1 <= r <= k")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (math.factorial(k) ** (r / k) / k
            * math.gamma(r / k) * math.gamma(1.0 - r / (2 * k))
            / math.gamma(r) * (sigma / math.sqrt(2.0)) ** (r / k))


def excursion_inverse_moment(k: int, r: int) -> float:
    """E[int_0^1 e(t)^{-r/k} dt] for the normalized Brownian excursion."""
    if r >= 2 * k:
        raise IntegrabilityError("diverges for r >= 2k")
    return 2.0 ** (-r / (2.0 * k)) * math.gamma(1.0 - r / (2.0 * k))


# ---------------------------------------------------------------------------
# Monte Carlo estimators

def _mean_stderr(vals: np.ndarray) -> tuple[float, float]:
    m = float(vals.mean())
    s = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return m, s


def eta(k: int, q: int, samples: int, rng: np.random.Generator) -> LimitEstimate:
    """Monte Carlo estimate of the conditioned-tree limit moment eta_{k,q}.

    Samples the first q points Y_i = sqrt(2(E_1+...+E_i)) of the Poisson
    process with intensity x dx and averages q! F_q over the gap vectors.
    """
    if k < 1 or q < 1:
        raise ValueError("need k >= 1 and q >= 1")
    if q > 3:
        raise ValueError("q <= 3 at supported budgets")
    # The integrand blows up like Y_1^{-1/k} near 0, which for k = 1 makes
    # the naive estimator's variance (log-)divergent; importance-sample the
    # first arrival from Gamma(1/2, 1) to cancel the singularity.
    e = rng.standard_exponential((samples, q))
    e[:, 0] = rng.gamma(0.5, 1.0, samples)
    weight = math.gamma(0.5) * np.sqrt(e[:, 0])
    y = np.sqrt(2.0 * e.cumsum(axis=1))
    if k == 1:
        # F_q has the exact product form prod_i 1/Y_i when k = 1
        vals = weight * math.factorial(q) / y.prod(axis=1)
        m, s = _mean_stderr(vals)
        return LimitEstimate(m, s, "mc-exact-inner")
    gaps = np.diff(y, axis=1, prepend=0.0)
    vals = weight * math.factorial(q) * ordered_exp_integral(gaps, k)
    m, s = _mean_stderr(vals)
    return LimitEstimate(m, s, "mc-closed-inner" if q <= 2 else "mc-quad-inner")


def ordered_gamma_probability(q: int, k: int, samples: int,
                              rng: np.random.Generator) -> LimitEstimate:
    """MC estimate of P(G_1 >= ... >= G_q) for i.i.d. Gamma(1/k, 1);
    equals 1/q! for every k by exchangeability."""
    if q < 1 or k < 1:
        raise ValueError("need q >= 1 and k >= 1")
    g = rng.gamma(1.0 / k, 1.0, (samples, q))
    hits = np.all(np.diff(g, axis=1) <= 0.0, axis=1)
    p = float(hits.mean())
    stderr = math.sqrt(max(p * (1.0 - p), 1e-300) / samples)
    return LimitEstimate(p, stderr, "mc")


# ---------------------------------------------------------------------------
# walk moments m_q(f)

def _check_integrable(f: PiecewiseLinearWalk) -> None:
    v = f.values
    flat_zero = (v[:-1] == 0.0) & (v[1:] == 0.0)
    if flat_zero.any():
        raise IntegrabilityError("f vanishes on an interval; int f^{-1/k} diverges")


def _integral_inv_power(f: PiecewiseLinearWalk, p: float) -> float:
    """Exact int_0^1 f(t)^{-p} dt for 0 < p < 1 (linear zeros allowed)."""
    _check_integrable(f)
    total = 0.0
    b, v = f.breakpoints, f.values
    for i in range(len(b) - 1):
        h = b[i + 1] - b[i]
        v0, v1 = v[i], v[i + 1]
        if v0 == v1:
            total += h * v0 ** (-p)
        else:
            total += h / (v1 - v0) * (v1 ** (1 - p) - v0 ** (1 - p)) / (1 - p)
    return total


def _inf_kinks(f: PiecewiseLinearWalk, t1: float) -> list[float]:
    """Points where t2 -> inf of f over [t1, t2] changes analytic form.

    Walking outward from t1, the running infimum kinks where a segment
    first dips below the minimum seen so far; these crossings make the
    inner m_2 integrand non-smooth and must be quadrature split points.
    """
    b, v = f.breakpoints, f.values
    out: list[float] = []
    for direction in (1, -1):
        cur = float(f(t1))
        if direction == 1:
            seg = np.searchsorted(b, t1, side="right") - 1
            rng_iter = range(max(seg, 0), len(b) - 1)
        else:
            seg = np.searchsorted(b, t1, side="left")
            rng_iter = range(min(seg, len(b) - 1), 0, -1)
        for i in rng_iter:
            if direction == 1:
                lo_t, hi_t = max(b[i], t1), b[i + 1]
                va, vb = float(f(lo_t)), v[i + 1]
            else:
                lo_t, hi_t = b[i - 1], min(b[i], t1)
                va, vb = float(f(hi_t)), v[i - 1]
            if vb < cur <= va and va != vb:
                # crossing of the running minimum inside this segment
                if direction == 1:
                    out.append(lo_t + (hi_t - lo_t) * (va - cur) / (va - vb))
                else:
                    out.append(hi_t - (hi_t - lo_t) * (va - cur) / (va - vb))
            cur = min(cur, vb)
    return [t for t in out if 0.0 < t < 1.0]


def h_fq(f: PiecewiseLinearWalk, k: int, ts) -> float:
    """The inner ordered-x integral H_{f,q} at the points ts."""
    d = walk_D(f, ts)
    return float(ordered_exp_integral(d, k)[0])


def m_q(f: PiecewiseLinearWalk, k: int, q: int, method: str = "auto",
        samples: int = 20_000, rng: np.random.Generator | None = None,
        tol: float = 1e-7) -> LimitEstimate:
    """Moments m_q(f) of the walk limit law: q! times the average of the
    inner ordered-x integral over the t-cube."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if q < 0 or q > 4:
        raise ValueError("q <= 4")
    if q == 0:
        return LimitEstimate(1.0, 0.0, "definition")
    _check_integrable(f)
    if method == "auto":
        method = "quadrature" if q <= 2 else "mc"

    if q == 1 and method == "quadrature":
        kf = math.factorial(k)
        val = kf ** (1.0 / k) * math.gamma(1.0 + 1.0 / k) * _integral_inv_power(f, 1.0 / k)
        return LimitEstimate(val, 1e-14 * abs(val), "closed-segment")

    if q == 2 and method == "quadrature":
        pts = [float(t) for t in f.breakpoints]

        def outer(t1: float) -> float:
            d1 = float(f(t1))
            if d1 == 0.0:
                return 0.0

            def inner(t2: float) -> float:
                d2 = float(f(t2)) - f.inf_between(t1, t2)
                return float(ordered_exp_integral([d1, max(d2, 0.0)], k)[0])

            kinks = sorted(set(pts + [t1] + _inf_kinks(f, t1)))
            val, _ = integrate.quad(inner, 0.0, 1.0, epsabs=tol / 10,
                                    epsrel=tol / 10, limit=200, points=kinks)
            return val

        val, err = integrate.quad(outer, 0.0, 1.0, epsabs=tol, epsrel=tol,
                                  limit=200, points=pts)
        return LimitEstimate(2.0 * val, 2.0 * err, "nested-quadrature")

    # Monte Carlo over the t-cube with exact/quadrature inner integral
    if rng is None:
        raise ValueError("Monte Carlo m_q needs an rng")
    ts = rng.random((samples, q))
    vals = np.empty(samples)
    for i in range(samples):
        d = walk_D(f, ts[i])
        if (d[1:] == 0.0).any() and q >= 3:
            vals[i] = math.factorial(q) * _ordered_exp_integral_quad(
                np.maximum(d, 1e-300), k)
        else:
            vals[i] = math.factorial(q) * float(
                ordered_exp_integral(d, k, rng=rng)[0])
    m, s = _mean_stderr(vals)
    return LimitEstimate(m, s, "mc-t")


# ---------------------------------------------------------------------------
# mixture limit moments

def z_zeta_moments(atoms, probs, k: int, q: int, budget: int = 10_000,
                   rng: np.random.Generator | None = None) -> LimitEstimate:
    """Moments E[Z_zeta^q] for a discrete positive law zeta.

    Averages q! F_q over i.i.d. zeta-tuples: exact enumeration when the
    support is small, Monte Carlo over tuples otherwise.
    """
    atoms = np.asarray(atoms, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if (atoms <= 0).any():
        raise ValueError("zeta atoms must be positive")
    if abs(probs.sum() - 1.0) > 1e-9 or (probs < 0).any():
        raise ValueError("probs must be a probability vector")
    if q < 1 or q > 3:
        raise ValueError("q <= 3")
    m = len(atoms)
    if m ** q <= 10_000:
        idx = np.indices((m,) * q).reshape(q, -1).T
        tuples = atoms[idx]
        weights = probs[idx].prod(axis=1)
        vals = math.factorial(q) * ordered_exp_integral(tuples, k)
        return LimitEstimate(float(weights @ vals), 1e-9, "enumeration")
    if rng is None:
        raise ValueError("large-support z_zeta_moments needs an rng")
    picks = rng.choice(m, size=(budget, q), p=probs)
    vals = math.factorial(q) * ordered_exp_integral(atoms[picks], k)
    mean, s = _mean_stderr(vals)
    return LimitEstimate(mean, s, "mc-tuples")


# ---------------------------------------------------------------------------
# family scalings

@dataclass(frozen=True)
class LimitSpec:
    """How to scale a family's statistics and what they converge to.

    mu is the split-tree depth constant (BST: 1/2); beta the scale-free
    depth constant (1+alpha)/(2+alpha); sigma the offspring standard
    deviation; degrees the mixture component degrees.
    """

    family: str
    k: int
    sigma: float = 1.0
    mu: float = 0.5
    beta: float = 0.5
    degrees: tuple[int, ...] = field(default_factory=tuple)

    def _log_factor(self, n: int) -> float:
        if self.family == "complete_binary":
            return math.log2(n)
        if self.family == "bst":
            return math.log(n) / self.mu
        if self.family == "preferential":
            return self.beta * math.log(n)
        return math.log(n)          # recursive, mixture

    def scaling_factor(self, n: int, stat: str) -> float:
        """Multiplier turning the raw statistic into the scaled one."""
        k = self.k
        r = 1 if stat == "K" else int(stat.split("_")[1])
        if self.family == "path":
            return n ** (-1.0 + r / k) if stat != "K" else n ** (-1.0 + 1.0 / k)
        if self.family == "cgw":
            if stat == "K":
                return self.sigma ** (-1.0 / k) * n ** (-1.0 + 1.0 / (2 * k))
            return n ** (-1.0 + r / (2.0 * k))
        ln = self._log_factor(n)
        return ln ** (r / k) / n

    def limit_value(self, stat: str) -> float | None:
        k = self.k
        r = 1 if stat == "K" else int(stat.split("_")[1])
        if self.family == "path":
            if stat == "K" or r == 1:
                kf = math.factorial(k)
                return (kf ** (1.0 / k) * math.gamma(1.0 + 1.0 / k)
                        * k / (k - 1.0)) if k > 1 else None
            if r == k:
                return None          # logarithmic scaling, no constant
            return logheight_kr_limit(k, r) * k / (k - r)
        if self.family == "cgw":
            if stat == "K":
                return eta_k1_closed(k)
            return kr_limit_cgw(k, r, self.sigma)
        if self.family == "mixture":
            if not self.degrees:
                return None
            atoms = np.array([1.0 / math.log(d) for d in self.degrees])
            probs = np.full(len(atoms), 1.0 / len(atoms))
            if stat == "K" or r == 1:
                return z_zeta_moments(atoms, probs, k, 1).value
            return None
        # log-height families
        if stat == "K" or r == 1:
            return loght_limit(k)
        return logheight_kr_limit(k, r)
