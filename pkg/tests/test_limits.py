"""Walk functionals, ordered-region integrals, and limit constants."""

import math

import numpy as np
import pytest
from scipy import integrate

from kcut.limits import (
    IntegrabilityError,
    LimitSpec,
    PiecewiseLinearWalk,
    _ordered_exp_integral_quad,
    eta,
    eta_k1_closed,
    excursion_inverse_moment,
    h_fq,
    kr_limit_cgw,
    loght_limit,
    logheight_kr_limit,
    m_q,
    ordered_exp_integral,
    ordered_gamma_probability,
    rayleigh_moment,
    walk_D,
    walk_L,
    z_zeta_moments,
)
from kcut.tree import build_tree, dfs_walk, spanned_edges
from kcut.generators import gen_cgw, OffspringDist


def close_mc(est, target, slack=1e-9):
    return abs(est.value - target) <= 3 * est.error + slack


# ---------------------------------------------------------------------------
# walks

def test_walk_validation():
    with pytest.raises(ValueError):
        PiecewiseLinearWalk(np.array([0.0, 0.5]), np.array([0.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        PiecewiseLinearWalk(np.array([0.1, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        PiecewiseLinearWalk(np.array([0.0, 1.0]), np.array([0.0, -1.0]))
    f = PiecewiseLinearWalk.tent()
    with pytest.raises(ValueError):
        f(1.5)
    assert f(0.5) == 1.0 and f(0.25) == 0.5


def test_walk_L_examples():
    f = PiecewiseLinearWalk.tent()
    assert walk_L(f, [0.25]) == f(0.25)
    assert abs(walk_L(f, [0.25, 0.75]) - 0.5) < 1e-15
    assert walk_L(f, [0.3, 0.3]) == f(0.3)


def test_walk_D_examples():
    f = PiecewiseLinearWalk.tent()
    assert np.allclose(walk_D(f, [0.25]), [0.5])
    assert np.allclose(walk_D(f, [0.25, 0.75]), [0.5, 0.0])
    assert np.allclose(walk_D(f, [0.5, 0.25]), [1.0, 0.0])


def test_walk_L_symmetry_and_bounds():
    rng = np.random.default_rng(0)
    f = PiecewiseLinearWalk(np.array([0.0, 0.2, 0.55, 0.8, 1.0]),
                            np.array([0.3, 1.4, 0.1, 2.0, 0.6]))
    for _ in range(40):
        ts = rng.random(rng.integers(1, 5))
        L = walk_L(f, ts)
        assert abs(walk_L(f, ts[::-1]) - L) < 1e-12
        assert L >= float(f(ts).max()) - 1e-12
        assert L <= float(f(ts).sum()) + 1e-12
        assert (walk_D(f, ts) >= 0).all()


def test_walk_tree_duality():
    # spanned edge counts of a tree equal walk_L of its contour walk
    rng = np.random.default_rng(1)
    trees = [build_tree([-1, 0, 1, 0]), build_tree([-1, 0, 0, 1, 1, 2]),
             gen_cgw(12, OffspringDist.geometric_half(), np.random.default_rng(7))]
    for t in trees:
        w = dfs_walk(t)
        f = PiecewiseLinearWalk.from_contour(w.values)
        m = len(w.values) - 1
        for _ in range(20):
            times = rng.integers(0, m + 1, size=rng.integers(1, 4))
            vs = [int(w.visit_order[i]) for i in times]
            got = walk_L(f, times / m)
            assert abs(got - spanned_edges(t, vs)) < 1e-9


# ---------------------------------------------------------------------------
# ordered-region integral F_q

def test_f1_closed():
    out = ordered_exp_integral([[2.0]], 2)
    want = (2.0 / 2.0) ** 0.5 * math.gamma(1.5)
    assert abs(out[0] - want) < 1e-14


def test_f2_k1_closed_form():
    # k=1: F_2(z1, z2) = 1 / (z1 (z1 + z2)) by direct integration
    rng = np.random.default_rng(2)
    z = rng.uniform(0.1, 5.0, (20, 2))
    got = ordered_exp_integral(z, 1)
    want = 1.0 / (z[:, 0] * (z[:, 0] + z[:, 1]))
    assert np.allclose(got, want, rtol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("q", [1, 2, 3])
def test_fq_matches_nested_quadrature(k, q):
    rng = np.random.default_rng(10 * k + q)
    for _ in range(3):
        z = rng.uniform(0.05, 8.0, q)
        got = float(ordered_exp_integral(z, k)[0])
        ref = _ordered_exp_integral_quad(z, k)
        assert abs(got - ref) < 5e-8 * max(ref, 1.0)


def test_f2_zero_second_coefficient():
    # z2 = 0 frees the inner variable: int x e^{-z x^k / k!} dx
    for k in (1, 2, 3):
        got = float(ordered_exp_integral([[1.5, 0.0]], k)[0])
        ref, _ = integrate.quad(
            lambda x: x * math.exp(-1.5 * x ** k / math.factorial(k)), 0, 100)
        assert abs(got - ref) < 1e-10


def test_fq_equal_coefficients_are_uniform_order():
    # equal z: the chain probability is exactly 1/q!
    for k in (2, 3):
        for q in (2, 3):
            z = np.full((1, q), 1.7)
            got = float(ordered_exp_integral(z, k)[0])
            kf = math.factorial(k)
            norm = (kf / 1.7) ** (q / k) * math.gamma(1 + 1.0 / k) ** q
            assert abs(got - norm / math.factorial(q)) < 1e-8 * norm


def test_fq_validation():
    with pytest.raises(IntegrabilityError):
        ordered_exp_integral([[0.0, 1.0]], 2)
    with pytest.raises(IntegrabilityError):
        ordered_exp_integral([[1.0, 0.0, 1.0]], 2)


# ---------------------------------------------------------------------------
# closed constants

def test_eta_k1_closed_values():
    assert abs(eta_k1_closed(1) - math.sqrt(math.pi / 2)) < 1e-12
    # independent check: integrate the defining first-point average
    for k in (2, 3):
        want, _ = integrate.quad(
            lambda y, k=k: y * math.exp(-y * y / 2)
            * (math.factorial(k) / y) ** (1.0 / k) * math.gamma(1 + 1.0 / k),
            0, 40, epsabs=1e-13)
        assert abs(eta_k1_closed(k) - want) < 1e-10
    assert 1.0 < eta_k1_closed(3) < 2.0
    with pytest.raises(ValueError):
        eta_k1_closed(0)


def test_rayleigh_moments():
    assert rayleigh_moment(0) == 1.0
    assert abs(rayleigh_moment(1) - math.sqrt(math.pi / 2)) < 1e-14
    assert abs(rayleigh_moment(2) - 2.0) < 1e-14


def test_loght_limit_values():
    assert abs(loght_limit(1) - 1.0) < 1e-14
    assert abs(loght_limit(2) - math.sqrt(math.pi / 2)) < 1e-12
    assert abs(loght_limit(3) - 6 ** (1 / 3) * math.gamma(4 / 3)) < 1e-12
    assert abs(logheight_kr_limit(2, 1) - loght_limit(2)) < 1e-14


def test_kr_limit_identities():
    for k in (1, 2, 3):
        for sigma in (0.5, 1.0, 2.0):
            assert abs(kr_limit_cgw(k, 1, sigma)
                       - sigma ** (1.0 / k) * eta_k1_closed(k)) < 1e-12
    assert abs(kr_limit_cgw(2, 2, 1.0) - math.sqrt(math.pi / 2)) < 1e-12
    assert abs(kr_limit_cgw(1, 1, 1.0) - math.sqrt(math.pi / 2)) < 1e-12
    with pytest.raises(ValueError):
        kr_limit_cgw(2, 3, 1.0)
    with pytest.raises(ValueError):
        kr_limit_cgw(2, 1, 0.0)


def test_excursion_inverse_moment():
    assert abs(excursion_inverse_moment(2, 2) - math.sqrt(math.pi / 2)) < 1e-12
    assert abs(excursion_inverse_moment(2, 1)
               - 2 ** -0.25 * math.gamma(0.75)) < 1e-12
    with pytest.raises(IntegrabilityError):
        excursion_inverse_moment(2, 4)


# ---------------------------------------------------------------------------
# Monte Carlo estimators

def test_eta_k1_cases():
    rng = np.random.default_rng(3)
    assert close_mc(eta(1, 1, 100_000, rng), math.sqrt(math.pi / 2))
    assert close_mc(eta(1, 2, 200_000, rng), rayleigh_moment(2))
    assert close_mc(eta(1, 3, 200_000, rng), rayleigh_moment(3))
    assert close_mc(eta(2, 1, 200_000, rng), eta_k1_closed(2))
    with pytest.raises(ValueError):
        eta(2, 4, 100, rng)


def test_eta_seed_consistency():
    # no closed form for q >= 2, k >= 2: two independent runs must agree
    a = eta(2, 2, 150_000, np.random.default_rng(4))
    b = eta(2, 2, 150_000, np.random.default_rng(5))
    se = math.hypot(a.error, b.error)
    assert abs(a.value - b.value) < 3 * se + 1e-9


def test_ordered_gamma_probability():
    rng = np.random.default_rng(6)
    for k in (2, 5):
        assert ordered_gamma_probability(1, k, 1000, rng).value == 1.0
        assert close_mc(ordered_gamma_probability(2, k, 200_000, rng), 0.5)
        assert close_mc(ordered_gamma_probability(3, k, 200_000, rng), 1 / 6)


# ---------------------------------------------------------------------------
# walk moments m_q

def test_m0_is_one():
    assert m_q(PiecewiseLinearWalk.tent(), 2, 0).value == 1.0


def test_m1_tent_closed():
    est = m_q(PiecewiseLinearWalk.tent(), 2, 1)
    assert abs(est.value - math.sqrt(2 * math.pi)) < 1e-10


def test_mq_constant_closed():
    # f == c: all increments beyond the first vanish and
    # m_q = (k!/c)^{q/k} Gamma(1 + q/k)
    for k, c, q in ((2, 1.0, 1), (2, 1.0, 2), (3, 0.7, 2)):
        f = PiecewiseLinearWalk.constant(c)
        want = (math.factorial(k) / c) ** (q / k) * math.gamma(1 + q / k)
        est = m_q(f, k, q)
        assert abs(est.value - want) < 1e-6 * want


def test_mq_constant_mc_routes():
    rng = np.random.default_rng(7)
    f = PiecewiseLinearWalk.constant(1.0)
    want3 = 2.0 ** 1.5 * math.gamma(2.5)
    est3 = m_q(f, 2, 3, samples=40, rng=rng)
    assert abs(est3.value - want3) < 3 * est3.error + 1e-5 * want3
    want4 = 4.0 * math.gamma(3.0)
    est4 = m_q(f, 2, 4, samples=6, rng=rng)
    assert abs(est4.value - want4) < 3 * est4.error + 1e-4 * want4


def test_m2_tent_quadrature_vs_mc():
    est = m_q(PiecewiseLinearWalk.tent(), 2, 2)
    rng = np.random.default_rng(8)
    mc = m_q(PiecewiseLinearWalk.tent(), 2, 2, method="mc",
             samples=20_000, rng=rng)
    assert abs(est.value - mc.value) < 3 * mc.error + est.error
    assert est.error < 1e-5


def test_mq_integrability_guard():
    flat0 = PiecewiseLinearWalk(np.array([0.0, 0.5, 1.0]),
                                np.array([0.0, 0.0, 1.0]))
    with pytest.raises(IntegrabilityError):
        m_q(flat0, 2, 1)


def test_h_bound():
    # H_{f,q}(t) <= Gamma(1+1/k)^q Gamma(1+k)^{q/k} prod f(t_i)^{-1/k}
    rng = np.random.default_rng(9)
    f = PiecewiseLinearWalk.tent()
    for k in (2, 3):
        for q in (1, 2, 3):
            for _ in range(10):
                ts = rng.uniform(0.05, 0.95, q)
                if (walk_D(f, ts) == 0.0).any():
                    continue                  # collinear points: H undefined
                bound = (math.gamma(1 + 1.0 / k) ** q
                         * math.gamma(1.0 + k) ** (q / k)
                         * float(np.prod(f(ts) ** (-1.0 / k))))
                assert h_fq(f, k, ts) <= bound * (1 + 1e-9)


# ---------------------------------------------------------------------------
# mixture moments

def test_zzeta_single_atom():
    for k in (2, 3):
        for q in (1, 2):
            est = z_zeta_moments([1.0], [1.0], k, q)
            assert abs(est.value - loght_limit(k) ** q) < 1e-7


def test_zzeta_scaled_atom():
    c, k, q = 0.8, 2, 2
    est = z_zeta_moments([c], [1.0], k, q)
    want = (math.factorial(k) / c) ** (q / k) * math.gamma(1 + 1.0 / k) ** q
    assert abs(est.value - want) < 1e-7
    # unit atom, k = 2, q = 2 evaluates to pi/2 exactly
    est1 = z_zeta_moments([1.0], [1.0], 2, 2)
    assert abs(est1.value - math.pi / 2) < 1e-7


def test_zzeta_duplicate_atoms_match():
    a = z_zeta_moments([1.0], [1.0], 2, 2)
    b = z_zeta_moments([1.0, 1.0], [0.5, 0.5], 2, 2)
    assert abs(a.value - b.value) < 1e-9


def test_zzeta_mc_route_matches_enumeration():
    atoms = [1.0] * 25                       # 25^3 tuples forces MC
    probs = [1.0 / 25] * 25
    rng = np.random.default_rng(10)
    mc = z_zeta_moments(atoms, probs, 2, 3, budget=4000, rng=rng)
    exact = z_zeta_moments([1.0], [1.0], 2, 3)
    assert mc.method == "mc-tuples"
    assert abs(mc.value - exact.value) < 3 * mc.error + 1e-6


def test_zzeta_validation():
    with pytest.raises(ValueError):
        z_zeta_moments([0.0], [1.0], 2, 1)
    with pytest.raises(ValueError):
        z_zeta_moments([1.0], [0.7], 2, 1)
    with pytest.raises(ValueError):
        z_zeta_moments([1.0], [1.0], 2, 4)


# ---------------------------------------------------------------------------
# family scalings

def test_limit_spec_scalings():
    path = LimitSpec(family="path", k=2)
    assert abs(path.scaling_factor(100, "K") - 100 ** -0.5) < 1e-15
    assert abs(path.limit_value("K") - math.sqrt(2 * math.pi)) < 1e-12
    cgw = LimitSpec(family="cgw", k=2, sigma=1.0)
    assert abs(cgw.scaling_factor(10 ** 4, "K") - 10 ** -3.0) < 1e-15
    assert abs(cgw.limit_value("K") - eta_k1_closed(2)) < 1e-12
    assert abs(cgw.limit_value("K_2") - kr_limit_cgw(2, 2, 1.0)) < 1e-12
    rec = LimitSpec(family="recursive", k=2)
    n = 10 ** 4
    assert abs(rec.scaling_factor(n, "K") - math.log(n) ** 0.5 / n) < 1e-18
    assert abs(rec.limit_value("K") - loght_limit(2)) < 1e-12
    bst = LimitSpec(family="bst", k=2, mu=0.5)
    assert abs(bst.scaling_factor(n, "K")
               - (math.log(n) / 0.5) ** 0.5 / n) < 1e-18
    binary = LimitSpec(family="complete_binary", k=2)
    assert abs(binary.scaling_factor(n, "K")
               - math.log2(n) ** 0.5 / n) < 1e-18
    mix = LimitSpec(family="mixture", k=2, degrees=(2, 3))
    atoms = [1 / math.log(2), 1 / math.log(3)]
    want = z_zeta_moments(atoms, [0.5, 0.5], 2, 1).value
    assert abs(mix.limit_value("K") - want) < 1e-9
