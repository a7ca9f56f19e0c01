import math

import numpy as np
import pytest
from scipy import integrate

from graphon_ldp import entropy as E
from graphon_ldp import graphon as G
from graphon_ldp.errors import DomainError


def test_bernoulli_kl_basics():
    assert E.bernoulli_kl(0.3, 0.3) == 0.0
    assert E.bernoulli_kl(0.5, 1.0) == pytest.approx(math.log(2), abs=1e-15)
    assert E.bernoulli_kl(0.2, 0.0) == pytest.approx(math.log(1 / 0.8), abs=1e-15)
    with pytest.raises(DomainError):
        E.bernoulli_kl(0.0, 0.5)
    with pytest.raises(DomainError):
        E.bernoulli_kl(1.0, 0.5)


def test_bernoulli_kl_quadrature():
    # h_p(u) = int_p^u int_p^s (1/w + 1/(1-w)) dw ds
    p, u = 0.3, 0.7
    val, _ = integrate.dblquad(lambda w, s: 1 / w + 1 / (1 - w), p, u, lambda s: p, lambda s: s, epsabs=1e-13)
    assert E.bernoulli_kl(p, u) == pytest.approx(val, abs=1e-10)


def test_bernoulli_kl_nonnegative_convex():
    u = np.linspace(0, 1, 2001)
    for p in (0.01, 0.2, 0.5, 0.93):
        h = E.bernoulli_kl(p, u)
        assert np.all(h >= 0)
        assert np.all(np.diff(h, 2)[1:-1] > 0)


def test_psi_minimum_at_p_power_d():
    for d in (1, 2, 3):
        v, d1, _ = E.psi_eval(0.2, d, 0.2**d)
        assert abs(v) < 1e-15 and abs(d1) < 1e-12


@pytest.mark.parametrize("p,d,x", [(0.05, 2, 0.5), (0.3, 3, 0.2), (0.01, 4, 0.7), (0.2, 1, 0.6)])
def test_psi_derivatives_finite_differences(p, d, x):
    h = 1e-6
    v, d1, d2 = E.psi_eval(p, d, x)
    vp, vm = E.psi_eval(p, d, x + h)[0], E.psi_eval(p, d, x - h)[0]
    assert d1 == pytest.approx((vp - vm) / (2 * h), rel=1e-5)
    d1p, d1m = E.psi_eval(p, d, x + h)[1], E.psi_eval(p, d, x - h)[1]
    assert d2 == pytest.approx((d1p - d1m) / (2 * h), rel=1e-5)


def test_psi_endpoints():
    v, d1, d2 = E.psi_eval(0.1, 2, 0.0)
    assert v == pytest.approx(math.log(1 / 0.9)) and d1 == -math.inf and d2 == math.inf
    v, d1, d2 = E.psi_eval(0.1, 2, 1.0)
    assert v == pytest.approx(math.log(10)) and d1 == math.inf


def test_psi_monotone_pieces():
    for p, d in [(0.05, 2), (0.3, 3)]:
        x = np.linspace(0, 1, 10001)
        v = E.psi_eval(p, d, x)[0]
        split = np.searchsorted(x, p**d)
        assert np.all(np.diff(v[:split]) <= 1e-15)
        assert np.all(np.diff(v[split:]) >= -1e-15)


def test_p_zero_d2():
    assert E.p_zero(2) == pytest.approx(1 / (1 + math.e**2), abs=1e-15)
    assert E.p_zero(2) == pytest.approx(0.1192029, abs=1e-7)
    assert E.p_zero(1) == 0.0


def _has_negative_curvature(p, d, n=10**5):
    x = np.linspace(0, 1, n + 1)[1:-1]
    return bool(np.any(E.psi_eval(p, d, x)[2] < 0))


def test_p_zero_sign_scan():
    for d in range(2, 11):
        p0 = E.p_zero(d)
        assert _has_negative_curvature(p0 - 1e-3, d)
        assert not _has_negative_curvature(p0 + 1e-3, d)
    p0s = [E.p_zero(d) for d in range(2, 11)]
    assert all(a < b for a, b in zip(p0s, p0s[1:]))


def test_classification():
    assert E.analyze_psi(0.05, 1).convexity is E.Convexity.STRICTLY_CONVEX
    assert E.analyze_psi(0.3, 2).convexity is E.Convexity.STRICTLY_CONVEX
    assert E.analyze_psi(E.p_zero(2), 2).convexity is E.Convexity.MARGINALLY_CONVEX
    prof = E.analyze_psi(0.05, 2)
    assert prof.convexity is E.Convexity.NON_CONVEX
    a, b = prof.window
    x1, x2 = prof.inflection
    assert 0 < a < x1 < x2 < b < 1


@pytest.mark.parametrize("p,d", [(0.05, 2), (0.01, 2), (1e-4, 2), (0.05, 3), (0.2, 4), (0.01, 8), (0.1190, 2)])
def test_profile_invariants(p, d):
    prof = E.analyze_psi(p, d)
    a, b = prof.window
    x1, x2 = prof.inflection
    assert a <= x1 <= x2 <= b
    x = np.linspace(0, 1, 10**4 + 1)
    psi = E.psi_eval(p, d, x)[0]
    line = prof.slope * x + prof.intercept
    assert np.all(line <= psi + 1e-9)
    assert abs(prof.slope * a + prof.intercept - E.psi_eval(p, d, a)[0]) <= 1e-9
    assert abs(prof.slope * b + prof.intercept - E.psi_eval(p, d, b)[0]) <= 1e-9
    # curvature signs around the inflection points
    inner = np.linspace(x1, x2, 203)[1:-1]
    assert np.all(E.psi_eval(p, d, inner)[2] < 0)
    left = np.linspace(0, x1, 203)[1:-1]
    right = np.linspace(x2, 1, 203)[1:-1]
    assert np.all(E.psi_eval(p, d, left)[2] > 0)
    assert np.all(E.psi_eval(p, d, right)[2] > 0)


def test_newton_and_bisection_agree():
    p, d = 0.05, 2
    x1, x2 = E.analyze_psi(p, d).inflection
    a1, b1 = E._tangent_newton(p, d, x1, x2)
    a2, b2 = E._tangent_bisection(p, d, x1, x2)
    assert a1 == pytest.approx(a2, abs=1e-9) and b1 == pytest.approx(b2, abs=1e-9)


def test_minorant_properties():
    for p, d in [(0.05, 2), (0.3, 2), (0.02, 3)]:
        x = np.linspace(0, 1, 10**4 + 1)
        mv = E.minorant_value(p, d, x)
        assert np.all(mv <= E.psi_eval(p, d, x)[0] + 1e-10)
        # midpoint convexity on an even grid
        assert np.all(mv[1:-1] <= 0.5 * (mv[:-2] + mv[2:]) + 1e-10)
    prof = E.analyze_psi(0.05, 2)
    a, b = prof.window
    assert E.minorant_value(0.05, 2, a) == pytest.approx(E.psi_eval(0.05, 2, a)[0], abs=1e-9)
    mid = 0.5 * (a + b)
    assert E.psi_eval(0.05, 2, mid)[0] - E.minorant_value(0.05, 2, mid) > 1e-3


def test_on_minorant():
    p, d = 0.05, 2
    assert E.on_minorant(p, d, p)
    assert E.on_minorant(p, d, 1.0)
    a, b = E.analyze_psi(p, d).window
    assert not E.on_minorant(p, d, math.sqrt(0.5 * (a + b)))
    for r in np.linspace(0.3, 1, 50):
        assert E.on_minorant(0.3, 2, r)
    with pytest.raises(DomainError):
        E.on_minorant(p, d, 0.01)


def test_jensen_lower_bound_on_entropy(rng):
    p, g, d = 0.05, 0.4, 2
    W0 = G.bipartite(g, p)
    fine = G.uniform_blocks(np.zeros((5, 5)))
    for _ in range(50):
        # random values on the cross block only
        vals = np.zeros((5, 5))
        cross = rng.uniform(p, 1, size=(2, 3))
        vals[:2, 2:] = cross
        vals[2:, :2] = cross.T
        f = G.StepGraphon(fine.widths, vals)
        w, ff = G.common_refinement(W0, f)
        area = w.area()
        z = float(np.sum(area[:2, 2:] * ff.values[:2, 2:] ** d) / (g * (1 - g)))
        assert G.relative_entropy(W0, f) >= g * (1 - g) * E.minorant_value(p, d, z) - 1e-12


def test_limit_entropy_ratio():
    g = 0.5
    # no One blocks beyond W0's and f = 0 on the free part
    W1 = G.two_block(g, 1.0, 0.2, 0.2)
    assert E.limit_entropy_ratio(W1, G.two_block(g, 1.0, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        E.limit_entropy_ratio(G.two_block(g, 0.1, 0.2, 0.3), W1)
    with pytest.raises(DomainError):
        E.limit_entropy_ratio(W1, G.constant(0.5))
    # clique witness against f_{1,p,p}: (t^{2/v} - gamma^2) / 2
    t, v = 0.2, 4
    side = t ** (1 / v)
    chi = G.StepGraphon([side, 1 - side], [[1.0, 0.0], [0.0, 0.0]])
    W = G.two_block(g, 1.0, 1e-3, 1e-3)
    assert E.limit_entropy_ratio(W, chi) == pytest.approx(0.5 * (t ** (2 / v) - g**2), abs=1e-12)


def test_limit_ratio_is_the_small_p_limit():
    g = 0.5
    W = lambda p: G.two_block(g, 0.0, p, p)  # noqa: E731
    # f = W0: the entropy vanishes and the limit is p |Omega_p| / 2
    assert E.limit_entropy_ratio(W(1e-6), W(1e-6)) == pytest.approx(0.5 * 1e-6 * 0.75)
    assert G.relative_entropy(W(1e-6), W(1e-6)) == 0.0
    # a nontrivial f: the relative gap shrinks like 1/log(1/p)
    f = G.two_block(g, 0.0, 0.0, 0.4)
    gaps = []
    for p in (1e-3, 1e-6, 1e-12, 1e-100):
        ratio = G.relative_entropy(W(p), f) / math.log(1 / p)
        lim = E.limit_entropy_ratio(W(p), f)
        gaps.append(abs(ratio - lim) / lim)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01
