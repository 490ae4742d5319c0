from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flowtree.measure import (WeightedVector, flow_measure, inner_product_mu, lp_norm, mu,
                              weak_l1_quasinorm, weak_quasinorm)
from flowtree.tree import UnknownVertex, VertexRef, build_truncation, descendant_ids


def test_mu_examples():
    t2 = build_truncation(2, 0, -3)
    assert mu(t2, t2.root) == 1
    assert mu(t2, VertexRef(-1, (1,))) == Fraction(1, 2)
    t3 = build_truncation(3, 0, -3)
    assert mu(t3, VertexRef(-2, (0, 2))) == Fraction(1, 9)
    with pytest.raises(UnknownVertex):
        mu(t3, VertexRef(-4, (0,) * 4))


@pytest.mark.parametrize("q", [2, 3, 5])
def test_flow_condition_exact(q):
    t = build_truncation(q, 1, -3)
    w = flow_measure(t).exact()
    for d in range(t.height):
        parents = w[t.level_slice(d)]
        kids = w[t.level_slice(d + 1)].reshape(-1, q)
        for p, ks in zip(parents, kids):
            assert p == sum(ks, Fraction(0))
            assert all(p == q * k for k in ks)


def test_preimage_measure():
    # mu(p^-k(E)) = mu(E)
    t = build_truncation(3, 0, -4)
    w = flow_measure(t).weights
    E = [1, 2, 5]
    for k in range(3):
        pre = np.concatenate([descendant_ids(t, t.vertex(i), k) for i in E])
        assert np.isclose(w[pre].sum(), w[E].sum())


def test_lp_examples():
    t = build_truncation(2, 0, -3)
    assert lp_norm(WeightedVector.delta(t, 0), 1) == 1
    assert lp_norm(WeightedVector.indicator(t, [1, 2]), 1) == 1
    assert np.isclose(lp_norm(WeightedVector.delta(t, 1), 2), 0.5 ** 0.5)
    assert lp_norm(WeightedVector.delta(t, 3, -4.0), np.inf) == 4
    with pytest.raises(ValueError):
        lp_norm(WeightedVector.delta(t, 0), 0.5)


def test_weak_examples():
    t = build_truncation(2, 0, -3)
    assert weak_l1_quasinorm(WeightedVector.delta(t, 2, 3.0)) == 1.5
    ids = [3, 4, 5]
    assert np.isclose(weak_l1_quasinorm(WeightedVector(t, np.where(np.isin(np.arange(t.size), ids), 2.0, 0))), 2 * 0.75)
    assert weak_quasinorm([2.0, 1.0], [1.0, 3.0]) == 4.0
    assert weak_quasinorm([0.0, 0.0], [1.0, 1.0]) == 0.0


def test_inner_product_examples():
    t = build_truncation(3, 0, -2)
    d0 = WeightedVector.delta(t, 0)
    assert inner_product_mu(d0, d0) == 1
    assert inner_product_mu(d0, WeightedVector.delta(t, 1)) == 0
    chi = WeightedVector.indicator(t, [1, 2, 3])
    assert np.isclose(inner_product_mu(chi, chi), 1.0)
    with pytest.raises(ValueError):
        inner_product_mu(d0, WeightedVector.delta(build_truncation(3, 0, -1), 0))


def test_complex_inner_product_conjugates():
    t = build_truncation(2, 0, -2)
    f = WeightedVector(t, np.full(t.size, 1j))
    assert np.isclose(inner_product_mu(f, f), lp_norm(f, 2) ** 2)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(-50, 50).filter(lambda x: abs(x) > 1e-3),
       p=st.sampled_from([1.0, 1.5, 2.0, 4.0, np.inf]))
def test_homogeneity_and_chebyshev(seed, c, p):
    rng = np.random.default_rng(seed)
    t = build_truncation(2, 1, -4)
    v = rng.standard_normal(t.size) * (rng.random(t.size) < 0.5)
    f = WeightedVector(t, v)
    assert np.isclose(lp_norm(f * c, p), abs(c) * lp_norm(f, p), rtol=1e-12, atol=1e-300)
    assert np.isclose(weak_l1_quasinorm(f * c), abs(c) * weak_l1_quasinorm(f), rtol=1e-12, atol=1e-300)
    assert weak_l1_quasinorm(f) <= lp_norm(f, 1) * (1 + 1e-12)


def test_weighted_vector_shape_check():
    t = build_truncation(2, 0, -2)
    with pytest.raises(ValueError):
        WeightedVector(t, np.zeros(3))
