import numpy as np
import pytest

from flowtree.experiments import random_epsilon
from flowtree.kernels_tree import g_profile
from flowtree.kernels_z import skew_riesz_kernel_z
from flowtree.measure import (WeightedVector, inner_product_mu, lp_norm, sequence_weak_norm,
                              weak_l1_quasinorm)
from flowtree.operators import epsilon_gradient, epsilon_gradient_adjoint, make_alternating_epsilon
from flowtree.riesz import (apply_P, apply_horizontal_riesz, apply_horizontal_riesz_adjoint,
                            apply_riesz, apply_riesz_adjoint, apply_skew_riesz, riesz_l2_norm,
                            skew_coefficients, skew_z_coefficients)
from flowtree.tree import OutOfBand, build_truncation


def _interior(t, rng, lo, hi, cplx=False):
    v = rng.standard_normal(t.size)
    if cplx:
        v = v + 1j * rng.standard_normal(t.size)
    v[(t.depth < lo) | (t.depth > hi)] = 0
    return WeightedVector(t, v, None, True)


def test_zero_input():
    t = build_truncation(2, 0, -5)
    assert np.all(apply_riesz(WeightedVector.zeros(t)).values == 0)


def test_riesz_adjointness():
    rng = np.random.default_rng(0)
    for q in (2, 3):
        t = build_truncation(q, 0, -6)
        f, g = _interior(t, rng, 0, 6), _interior(t, rng, 0, 6)
        a = inner_product_mu(apply_riesz(f), g)
        b = inner_product_mu(f, apply_riesz_adjoint(g))
        assert abs(a - b) < 1e-10 * max(1.0, abs(a))


def test_riesz_l2_factor():
    rng = np.random.default_rng(1)
    t = build_truncation(2, 0, -12)
    f = _interior(t, rng, 4, 8)
    r = riesz_l2_norm(f)
    assert abs(r["total"] / lp_norm(f) - np.sqrt(2)) < 1e-3
    assert r["band"] <= r["total"]


def test_skew_coefficients():
    prof = g_profile(3, 20)
    h = skew_coefficients(prof, 10)
    assert h(0) == 0
    assert np.isclose(h(1), 1.2004217, atol=1e-7)
    assert np.isclose(h(3), 0.3086799, atol=1e-7)
    assert all(np.isclose(h(-n), -h(n)) for n in range(11))
    assert np.allclose([h(n) for n in range(1, 11)], skew_riesz_kernel_z(np.arange(1, 11)), atol=1e-12)
    with pytest.raises(ValueError):
        skew_coefficients(prof, 20)


def test_skew_factorization_and_symmetry():
    rng = np.random.default_rng(2)
    t = build_truncation(2, 0, -8)
    f, g = _interior(t, rng, 0, 8), _interior(t, rng, 0, 8)
    S = apply_skew_riesz(f)
    diff = apply_riesz(f).values - apply_riesz_adjoint(f).values
    assert np.max(np.abs(diff - S.values)) < 1e-8
    a = inner_product_mu(apply_skew_riesz(f), g)
    b = inner_product_mu(f, apply_skew_riesz(g))
    assert abs(a + b) < 1e-10
    with pytest.raises(OutOfBand):
        apply_skew_riesz(f, skew_z_coefficients(9))


def test_skew_kills_constants_on_interior():
    t = build_truncation(2, 0, -8)
    c = WeightedVector(t, np.ones(t.size), None, True)
    S = apply_skew_riesz(c, skew_z_coefficients(3)).values
    # vertices three levels away from both band edges see the constant only
    inner = (t.depth >= 3) & (t.depth <= t.height - 3)
    assert np.max(np.abs(S[inner])) < 1e-14


def test_P_examples():
    rng = np.random.default_rng(3)
    t = build_truncation(3, 0, -5)
    e = random_epsilon(t, rng, complex_=True)
    f = _interior(t, rng, 0, 3)
    d = apply_P([1.0], e, f)
    assert np.allclose(d.values, epsilon_gradient_adjoint(e, f).values)
    F = rng.standard_normal(4)
    g = _interior(t, rng, 0, 1)
    Pg = apply_P(F, e, g)
    assert lp_norm(Pg) <= np.linalg.norm(F) * e.sup_norm * lp_norm(g) * (1 + 1e-12)
    assert weak_l1_quasinorm(Pg) <= 3 * sequence_weak_norm(F) * e.sup_norm * lp_norm(g, 1)


def test_horizontal_routes():
    rng = np.random.default_rng(4)
    for q in (2, 3):
        t = build_truncation(q, 0, -7)
        e = make_alternating_epsilon(t)
        f = _interior(t, rng, 0, 7)
        a = apply_horizontal_riesz(e, f)
        b = apply_horizontal_riesz(e, f, route="riesz")
        assert np.max(np.abs(a.values - b.values)) < 1e-10
        assert lp_norm(a) <= e.sup_norm * lp_norm(apply_riesz(f)) * (1 + 1e-12)
        g = _interior(t, rng, 0, 6)
        s = apply_horizontal_riesz_adjoint(e, g)
        k = apply_horizontal_riesz_adjoint(e, g, route="kernel")
        assert np.max(np.abs(s.values - k.values)) < 1e-8
        assert abs(inner_product_mu(a, g) - inner_product_mu(f, s)) < 1e-10


def test_horizontal_kills_constants():
    t = build_truncation(2, 0, -6)
    e = make_alternating_epsilon(t)
    z = epsilon_gradient(e, WeightedVector.constant(t, 1.0))
    assert np.allclose(z.values[z.valid], 0)


def test_requires_supported_input():
    t = build_truncation(2, 0, -4)
    with pytest.raises(ValueError):
        apply_riesz_adjoint(WeightedVector.constant(t, 1.0))
