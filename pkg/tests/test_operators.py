from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flowtree.measure import WeightedVector, inner_product_mu, lp_norm, weak_l1_quasinorm
from flowtree.operators import (EpsilonField, InvalidEpsilon, apply_sigma, apply_sigma_star,
                                apply_sigma_tilde, combinatorial_laplacian_apply,
                                conjugated_flow_laplacian, epsilon_gradient,
                                epsilon_gradient_adjoint, flow_gradient, flow_gradient_adjoint,
                                flow_laplacian_apply, laplacian_relation_b,
                                make_alternating_epsilon, modulus_gradient_D, sigma_power)
from flowtree.experiments import random_epsilon
from flowtree.oracle import dense_matrix_of
from flowtree.tree import build_truncation


def _interior(t, rng, lo=1, hi=None):
    hi = t.height - 1 if hi is None else hi
    v = rng.standard_normal(t.size)
    v[(t.depth < lo) | (t.depth > hi)] = 0
    return WeightedVector(t, v, None, True)


def _gap(a, b):
    m = a.valid & b.valid
    return np.max(np.abs(a.values[m] - b.values[m])) if m.any() else 0.0


def test_sigma_examples():
    t = build_truncation(2, 0, -3)
    s = apply_sigma(WeightedVector.delta(t, 0))
    assert np.array_equal(s.values, WeightedVector.indicator(t, [1, 2]).values)
    one = apply_sigma(WeightedVector.constant(t, 1.0))
    assert np.all(one.values[one.valid] == 1) and not one.valid[0]
    ss = apply_sigma_star(WeightedVector.delta(t, 4))
    want = np.zeros(t.size)
    want[1] = 0.5
    assert np.allclose(ss.values, want)


def test_sigma_tilde_examples():
    rng = np.random.default_rng(1)
    t = build_truncation(3, 0, -4)
    f = WeightedVector(t, rng.standard_normal(t.size))
    assert np.array_equal(apply_sigma_tilde(0, f).values, f.values)
    x = int(t.offsets[2]) + 5
    g = apply_sigma_tilde(2, f)
    assert g.valid[x] and g.values[x] == f.values[t.parent[t.parent[x]]]
    back = apply_sigma_tilde(-1, apply_sigma_tilde(1, f))
    assert _gap(back, f) < 1e-15


def test_gradient_examples():
    t = build_truncation(2, 0, -3)
    g = flow_gradient(WeightedVector.constant(t, 1.0))
    assert np.all(g.values[g.valid] == 0)
    d = flow_gradient(WeightedVector.delta(t, 0))
    assert d.values[0] == 1 and np.all(d.values[[1, 2]] == -1) and np.all(d.values[3:] == 0)
    a = flow_gradient_adjoint(WeightedVector.constant(t, 1.0))
    assert np.all(a.values[a.valid] == 0)
    # nabla^* delta_x at x is 1, at p(x) is -1/q
    b = flow_gradient_adjoint(WeightedVector.delta(t, 4))
    assert b.values[4] == 1 and b.values[1] == -0.5 and np.count_nonzero(b.values) == 2


def test_gradient_adjointness():
    rng = np.random.default_rng(2)
    t = build_truncation(3, 0, -5)
    f, g = _interior(t, rng), _interior(t, rng)
    assert np.isclose(inner_product_mu(flow_gradient(f), g), inner_product_mu(f, flow_gradient_adjoint(g)))
    assert np.isclose(inner_product_mu(flow_gradient(f), flow_gradient(f)),
                      2 * inner_product_mu(flow_laplacian_apply(f), f))


def test_modulus_gradient():
    t = build_truncation(2, -1, -5)
    c = WeightedVector.constant(t, 1.0)
    assert np.all(modulus_gradient_D(c).values[modulus_gradient_D(c).valid] == 0)
    x = int(t.offsets[2])
    D = modulus_gradient_D(WeightedVector.delta(t, x))
    assert D.values[x] == 3 and D.valid[x]
    assert not modulus_gradient_D(c).valid[0]


def test_laplacian_forms():
    rng = np.random.default_rng(3)
    for q in (2, 3, 5):
        t = build_truncation(q, 0, -4)
        f = WeightedVector(t, rng.standard_normal(t.size))
        assert _gap(flow_laplacian_apply(f), flow_laplacian_apply(f, "sigma")) < 1e-14
        one = flow_laplacian_apply(WeightedVector.constant(t, 1.0))
        assert np.allclose(one.values[one.valid], 0)
        assert _gap(conjugated_flow_laplacian(f), flow_laplacian_apply(f)) < 1e-13
        c = combinatorial_laplacian_apply(WeightedVector.constant(t, 2.0))
        assert np.allclose(c.values[c.valid], 0)
    assert np.isclose(laplacian_relation_b(2), (3 - 2 * np.sqrt(2)) / 3)
    assert abs(laplacian_relation_b(2) - 0.0571910) < 1e-7


def test_laplacian_self_adjoint_and_spectrum():
    rng = np.random.default_rng(4)
    t = build_truncation(2, 0, -7)
    f, g = _interior(t, rng), _interior(t, rng)
    assert np.isclose(inner_product_mu(flow_laplacian_apply(f), g), inner_product_mu(f, flow_laplacian_apply(g)))
    ev = np.linalg.eigvalsh(dense_matrix_of("flow_laplacian", t).matrix)
    assert ev.min() >= 0 and ev.max() <= 2


def test_exact_identities_rational():
    rng = np.random.default_rng(5)
    t = build_truncation(3, 0, -4)
    f = WeightedVector(t, np.array([Fraction(int(a), 3) for a in rng.integers(-9, 9, t.size)], dtype=object))
    g = WeightedVector(t, np.array([Fraction(int(a), 5) for a in rng.integers(-9, 9, t.size)], dtype=object))
    assert _gap(apply_sigma_star(apply_sigma(f)), f) == 0
    assert _gap(apply_sigma_star(f * apply_sigma(g)), g * apply_sigma_star(f)) == 0
    half = flow_gradient_adjoint(flow_gradient(f)) * Fraction(1, 2)
    assert _gap(half, flow_laplacian_apply(f, "sigma")) == 0
    e = random_epsilon(t, rng, rational=True)
    assert _gap(epsilon_gradient(e, f), epsilon_gradient(e, flow_gradient(f))) == 0
    z = epsilon_gradient(e, apply_sigma(f))
    assert all(v == 0 for v in z.values[z.valid])


def test_epsilon_validation():
    t = build_truncation(2, 0, -2)
    with pytest.raises(InvalidEpsilon):
        EpsilonField(t, np.ones(t.size))
    with pytest.raises(ValueError):
        EpsilonField(t, np.ones(3))


def test_alternating_epsilon():
    t2 = build_truncation(2, 0, -3)
    e = make_alternating_epsilon(t2)
    assert list(e.values[1:3]) == [1.0, -1.0] and e.sup_norm == 1
    t3 = build_truncation(3, 0, -2)
    e3 = make_alternating_epsilon(t3)
    assert np.allclose(e3.values[1:4], np.exp(2j * np.pi * np.arange(3) / 3))
    assert abs(e3.values[1:4].sum()) < 1e-15


def test_epsilon_gradient_examples():
    t = build_truncation(3, 0, -4)
    e = make_alternating_epsilon(t)
    one = epsilon_gradient(e, WeightedVector.constant(t, 1.0))
    assert np.allclose(one.values[one.valid], 0)
    y = int(t.offsets[2]) + 4
    g = epsilon_gradient_adjoint(e, WeightedVector.delta(t, int(t.parent[y])))
    assert np.isclose(g.values[y], np.conj(e.values[y]))


def test_orthogonality_relation():
    rng = np.random.default_rng(6)
    t = build_truncation(2, 0, -9)
    e = random_epsilon(t, rng, complex_=True)
    f, g = _interior(t, rng, 0, 4), _interior(t, rng, 0, 4)
    A = [sigma_power(epsilon_gradient_adjoint(e, f), n) for n in range(4)]
    B = [sigma_power(epsilon_gradient_adjoint(e, g), n) for n in range(4)]
    base = inner_product_mu(A[0], B[0])
    for n in range(4):
        for m in range(4):
            assert abs(inner_product_mu(A[n], B[m]) - (base if n == m else 0)) < 1e-13


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), q=st.sampled_from([2, 3]), p=st.sampled_from([1.0, 2.0, 4.0, np.inf]))
def test_norm_facts(seed, q, p):
    rng = np.random.default_rng(seed)
    t = build_truncation(q, 0, -5)
    f = _interior(t, rng)
    e = random_epsilon(t, rng, complex_=True)
    n = lp_norm(f, p)
    assert np.isclose(lp_norm(apply_sigma(f), p), n, rtol=1e-12)
    assert lp_norm(apply_sigma_star(f), p) <= n * (1 + 1e-12)
    assert lp_norm(flow_gradient(f), p) <= lp_norm(modulus_gradient_D(f), p) * (1 + 1e-12)
    assert lp_norm(modulus_gradient_D(f), p) <= (1 + q) * lp_norm(flow_gradient(f), p) * (1 + 1e-12)
    assert lp_norm(epsilon_gradient_adjoint(e, f), p) <= e.sup_norm * n * (1 + 1e-12)
    assert lp_norm(epsilon_gradient(e, f), p) <= e.sup_norm * n * (1 + 1e-12)
    w = weak_l1_quasinorm(f)
    assert np.isclose(weak_l1_quasinorm(apply_sigma(f)), w, rtol=1e-12)
    assert weak_l1_quasinorm(apply_sigma_star(f)) <= q * w * (1 + 1e-12)
    gw, dw = weak_l1_quasinorm(flow_gradient(f)), weak_l1_quasinorm(modulus_gradient_D(f))
    assert gw <= dw * (1 + 1e-12) and dw <= (1 + q) ** 2 * gw * (1 + 1e-12)
