import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphon_ldp import graphs
from graphon_ldp import graphon as G
from graphon_ldp.errors import DomainError, InvalidLabelingError, StructuralError

from conftest import brute_hom_density, random_graphon


# --- construction and refinement ----------------------------------------------

def test_widths_must_sum_to_one_exactly():
    with pytest.raises(DomainError):
        G.StepGraphon(["1/3", "1/3", "1/3000"], np.zeros((3, 3)))
    with pytest.raises(DomainError):
        G.StepGraphon([Fraction(1, 2)] * 2, [[0, 0.1], [0.2, 0]])
    with pytest.raises(DomainError):
        G.StepGraphon([1], [[1.5]])


def test_refine_constant():
    f = G.constant(0.3)
    g = G.uniform_blocks([[0.1, 0.2], [0.2, 0.3]])
    f2, g2 = G.common_refinement(f, g)
    assert f2.widths == (Fraction(1, 2), Fraction(1, 2))
    assert np.all(f2.values == 0.3)
    assert g2 == g


def test_refine_identity():
    f = G.StepGraphon(["1/3", "2/3"], [[0.1, 0.2], [0.2, 0.3]])
    assert G.common_refinement(f, f) == (f, f)


def test_refine_pointwise_oracle(rng):
    f = G.StepGraphon(["1/2", "1/2"], [[0.1, 0.7], [0.7, 0.4]])
    g = G.StepGraphon(["1/3", "2/3"], [[0.9, 0.2], [0.2, 0.5]])
    f2, g2 = G.common_refinement(f, g)
    assert f2.widths == (Fraction(1, 3), Fraction(1, 6), Fraction(1, 2))
    x, y = rng.random(10**4), rng.random(10**4)
    assert np.array_equal(f.evaluate(x, y), f2.evaluate(x, y))
    assert np.array_equal(g.evaluate(x, y), g2.evaluate(x, y))


def test_d_average_rejects_non_coarsening():
    f = G.StepGraphon(["1/2", "1/2"], [[0.1, 0.7], [0.7, 0.4]])
    with pytest.raises(StructuralError):
        G.d_average(f, ["1/3", "2/3"], 2)


# --- homomorphism densities -----------------------------------------------------

def test_hom_density_edge_constant():
    assert G.hom_density(graphs.edge(), G.constant(0.37)) == pytest.approx(0.37, abs=1e-15)


def test_hom_density_c4_bipartite_closed_form():
    # 2^c gamma^m (1-gamma)^m r^{dm} with c=1, m=2, d=2
    assert G.hom_density(graphs.cycle(4), G.bipartite(Fraction(1, 2), 1.0)) == pytest.approx(0.125, abs=1e-15)


@pytest.mark.parametrize("H", [graphs.triangle(), graphs.cycle(4), graphs.path(2), graphs.cube()])
def test_hom_density_matches_labeling_sum(rng, H):
    m = 3 if H.v <= 4 else 2
    f = random_graphon(rng, m)
    assert G.hom_density(H, f) == pytest.approx(brute_hom_density(H, f), abs=1e-13)


def test_hom_density_monte_carlo_triangle(rng):
    f = random_graphon(rng, 3)
    n = 10**6
    x = rng.random((3, n))
    vals = f.evaluate(x[0], x[1]) * f.evaluate(x[1], x[2]) * f.evaluate(x[0], x[2])
    est, se = vals.mean(), vals.std() / math.sqrt(n)
    assert abs(G.hom_density(graphs.triangle(), f) - est) <= 3 * se


def test_labeled_density():
    f = G.StepGraphon(["1/4", "3/4"], [[0.1, 0.6], [0.6, 0.3]])
    assert G.labeled_density(graphs.edge(), f, (0, 1)) == pytest.approx(0.25 * 0.75 * 0.6)
    W = G.uniform_blocks([[0, 0.3, 0], [0.3, 0, 0.3], [0, 0.3, 0.3]])
    assert G.labeled_density(graphs.triangle(), W, (0, 1, 2)) == 0.0
    with pytest.raises(InvalidLabelingError):
        G.labeled_density(graphs.edge(), f, (0, 2))
    with pytest.raises(InvalidLabelingError):
        G.labeled_density(graphs.edge(), f, (0,))


def test_partition_identity(rng):
    H = graphs.triangle()
    f = random_graphon(rng, 3)
    total = sum(G.labeled_density(H, f, Y) for Y in itertools.product(range(3), repeat=3))
    assert total == pytest.approx(G.hom_density(H, f), abs=1e-12)


def test_hom_gradient_finite_differences(rng):
    f = random_graphon(rng, 3)
    H = graphs.cube()
    poly = G.HomPolynomial(H, f.gamma)
    S = poly.sym_grad(f.values)
    h = 1e-6
    for a, b in [(0, 0), (0, 1), (1, 2)]:
        P1, P2 = f.values.copy(), f.values.copy()
        P1[a, b] += h
        P2[a, b] -= h
        if a != b:
            P1[b, a] += h
            P2[b, a] -= h
        fd = (poly.value(P1) - poly.value(P2)) / (2 * h)
        assert S[a, b] == pytest.approx(fd, rel=1e-6, abs=1e-12)


# --- relevance and f_max ----------------------------------------------------------

def brute_relevant(H, W0):
    out = set()
    for Y in itertools.product(range(W0.m), repeat=H.v):
        if all(W0.values[Y[a], Y[b]] > 0 for a, b in H.edges):
            for a, b in H.edges:
                out |= {(Y[a], Y[b]), (Y[b], Y[a])}
    return out


def test_relevant_blocks_figure_example():
    W = G.uniform_blocks([[0, 0.3, 0], [0.3, 0, 0.3], [0, 0.3, 0.3]])
    R = G.relevant_blocks(graphs.triangle(), W)
    assert R.pairs == {(1, 2), (2, 1), (2, 2)}
    assert (0, 1) not in R


def test_relevant_blocks_trivial_cases():
    W = G.uniform_blocks([[0.2, 0.3], [0.3, 0.9]])
    assert len(G.relevant_blocks(graphs.cycle(4), W)) == 4
    assert len(G.relevant_blocks(graphs.triangle(), G.constant(0.0))) == 0


@pytest.mark.parametrize("H", [graphs.triangle(), graphs.cycle(4), graphs.path(2)])
def test_relevant_blocks_match_enumeration(rng, H):
    for _ in range(20):
        f = random_graphon(rng, 4)
        mask = rng.random((4, 4)) < 0.5
        mask = np.triu(mask) | np.triu(mask, 1).T
        W = f.with_values(np.where(mask, 0.0, f.values))
        assert G.relevant_blocks(H, W).pairs == brute_relevant(H, W)


def test_f_max():
    p = 0.3
    W = G.uniform_blocks([[0, p, 0], [p, 0, p], [0, p, p]])
    fmax, tmax = G.f_max_graphon(graphs.triangle(), W)
    assert np.array_equal(fmax.values, [[0, p, 0], [p, 0, 1], [0, 1, 1]])
    assert tmax == pytest.approx(G.hom_density(graphs.triangle(), fmax))
    fmax, tmax = G.f_max_graphon(graphs.triangle(), G.constant(0.2))
    assert np.all(fmax.values == 1.0) and tmax == 1.0
    fmax, tmax = G.f_max_graphon(graphs.cycle(4), G.bipartite(0.3, 0.05))
    assert fmax == G.bipartite(0.3, 1.0)


# --- entropy and Omega ----------------------------------------------------------------

def test_relative_entropy_examples():
    W = G.bipartite(Fraction(1, 2), 0.5)
    assert G.relative_entropy(W, W) == 0.0
    assert G.relative_entropy(W, G.bipartite(Fraction(1, 2), 1.0)) == pytest.approx(0.25 * math.log(2), abs=1e-12)
    assert G.relative_entropy(W, G.constant(0.5)) == math.inf


def test_in_omega():
    assert G.in_omega(G.constant(0.4), G.uniform_blocks([[0.0, 1.0], [1.0, 0.2]]))
    assert G.in_omega(G.bipartite(0.3, 0.1), G.bipartite(0.3, 0.8))
    assert not G.in_omega(G.bipartite(0.3, 0.1), G.constant(0.8))
    near = G.StepGraphon(["3/10", "7/10"], [[1e-13, 0.8], [0.8, 0.0]])
    assert not G.in_omega(G.bipartite(0.3, 0.1), near)
    assert G.in_omega(G.bipartite(0.3, 0.1), near, tol=1e-12)


# --- averaging --------------------------------------------------------------------------

def test_d_average_trivial_cases(rng):
    f = G.StepGraphon(["1/2", "1/2"], [[0.1, 0.7], [0.7, 0.4]])
    fine = f.refine([Fraction(k, 6) for k in range(1, 7)])
    assert np.allclose(G.d_average(fine, f.widths, 3).values, f.values, atol=1e-14)
    g = random_graphon(rng, 4, denom=8)
    coarse = G.d_average(g.refine([Fraction(k, 8) for k in range(1, 9)]), ["1/2", "1/2"], 1)
    area = g.refine([Fraction(k, 8) for k in range(1, 9)])
    vals = area.values
    block = lambda i, j: vals[4 * i:4 * i + 4, 4 * j:4 * j + 4].mean()  # noqa: E731
    expect = [[block(0, 0), block(0, 1)], [block(1, 0), block(1, 1)]]
    assert np.allclose(coarse.values, expect, atol=1e-14)


# --- property tests -------------------------------------------------------------------

graphon_strategy = st.builds(
    lambda seed, m: random_graphon(np.random.default_rng(seed), m),
    st.integers(0, 2**32 - 1),
    st.integers(1, 4),
)


@settings(max_examples=60, deadline=None)
@given(graphon_strategy, graphon_strategy)
def test_refinement_invariance(f, g):
    from graphon_ldp.linalg import operator_norm
    from graphon_ldp.cutnorm import cut_norm_distance

    f2, g2 = G.common_refinement(f, g)
    for H in (graphs.triangle(), graphs.cycle(4)):
        assert abs(G.hom_density(H, f) - G.hom_density(H, f2)) <= 1e-12
    assert abs(operator_norm(f) - operator_norm(f2)) <= 1e-12
    W = f.with_values(np.clip(f.values, 0.05, 0.95))
    W2, g3 = G.common_refinement(W, g)
    assert abs(G.relative_entropy(W, g) - G.relative_entropy(W2, g3)) <= 1e-12
    h = g.refine(sorted(set(g.breakpoints) | {Fraction(1, 7)}))
    assert abs(cut_norm_distance(f, g) - cut_norm_distance(f2, h)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(graphon_strategy)
def test_partition_identity_property(f):
    H = graphs.cycle(4)
    total = sum(G.labeled_density(H, f, Y) for Y in itertools.product(range(f.m), repeat=H.v))
    assert abs(total - G.hom_density(H, f)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(graphon_strategy, graphon_strategy)
def test_entropy_infinite_iff_outside_omega(W, f):
    W0 = W.with_values(np.where(W.values < 0.3, 0.0, np.where(W.values > 0.7, 1.0, W.values)))
    assert (G.relative_entropy(W0, f) == math.inf) == (not G.in_omega(W0, f))
