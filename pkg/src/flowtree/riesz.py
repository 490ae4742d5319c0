"""Riesz transforms of the flow Laplacian.

Kernel route: L^{-1/2} is applied through its almost-radial kernel, which
is exact on the whole band for inputs vanishing outside it.  Series route:
the skew part R - R* and the horizontal adjoint R_eps^* are sums of
Sigma-shifts with coefficients from the skew Riesz kernel on Z.  For inputs
supported in the band only finitely many shifts reach any band vertex, so
cutting the series at the band height drops nothing on the band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels_tree import RadialProfile, TreeKernel, nsqrt_kernel
from .kernels_z import skew_riesz_kernel_z
from .measure import WeightedVector, flow_measure
from .operators import (EpsilonField, apply_sigma, epsilon_gradient,
                        epsilon_gradient_adjoint, flow_gradient, flow_gradient_adjoint,
                        sigma_power, sigma_star_power)
from .tree import OutOfBand, Truncation


def _kernel(t: Truncation, profile) -> TreeKernel:
    if isinstance(profile, TreeKernel):
        return profile
    return nsqrt_kernel(t, profile)


def _require_supported(f: WeightedVector):
    if not (f.zero_outside and f.fully_known):
        raise ValueError("input must be fully known and vanish outside the truncation")


def apply_inverse_sqrt(f: WeightedVector, profile=None) -> WeightedVector:
    return _kernel(f.truncation, profile).apply(f)


def inverse_sqrt_at_root_parent(f: WeightedVector, profile=None):
    """L^{-1/2} f(p(root)) for f vanishing outside the band."""
    _require_supported(f)
    K = _kernel(f.truncation, profile)
    return np.sum(K.at_root_parent() * f.values * flow_measure(f.truncation).weights)


def apply_riesz(f: WeightedVector, profile=None) -> WeightedVector:
    """R f = nabla L^{-1/2} f, exact on the whole band.

    The root reads L^{-1/2} f at p(root), which the kernel gives directly.
    """
    K = _kernel(f.truncation, profile)
    g = K.apply(f)
    out = flow_gradient(g)
    vals = out.values.copy()
    vals[0] = g.values[0] - inverse_sqrt_at_root_parent(f, K)
    return WeightedVector(f.truncation, vals, None, False)


def apply_riesz_adjoint(f: WeightedVector, profile=None) -> WeightedVector:
    """R* f = L^{-1/2} nabla^* f.

    nabla^* f = f - Sigma^* f also lives at p(root), where it equals
    -f(root)/q; that single vertex outside the band is added explicitly.
    """
    _require_supported(f)
    t = f.truncation
    K = _kernel(t, profile)
    g = flow_gradient_adjoint(f)
    inside = WeightedVector(t, g.values, None, True)
    out = K.apply(inside)
    root_val = f.values[0]
    if root_val != 0:
        mu_parent = float(t.q) ** (t.root_level + 1)
        out = out.with_values(out.values + K.at_root_parent() * (-root_val / t.q) * mu_parent)
    return out


@dataclass(frozen=True)
class SkewCoefficients:
    """Odd coefficients h(n) on the window -W..W."""

    values: np.ndarray
    half_width: int

    def __call__(self, n: int) -> float:
        return float(self.values[n + self.half_width]) if abs(n) <= self.half_width else 0.0


def skew_coefficients(profile: RadialProfile, window: int) -> SkewCoefficients:
    """h(n) = sgn(n) q^{(|n|-1)/2} [G(|n|-1) - G(|n|+1)], h(0) = 0."""
    if profile.n_max < window + 1:
        raise ValueError(f"profile of length {profile.n_max + 1} cannot give a window of {window}")
    G, q = profile.values, profile.q
    m = np.arange(1, window + 1)
    pos = np.power(float(q), (m - 1) / 2.0) * (G[m - 1] - G[m + 1])
    vals = np.concatenate([-pos[::-1], [0.0], pos])
    return SkewCoefficients(vals, window)


def skew_z_coefficients(window: int) -> SkewCoefficients:
    n = np.arange(-window, window + 1)
    return SkewCoefficients(np.where(n == 0, 0.0, skew_riesz_kernel_z(n)), window)


def apply_skew_riesz(f: WeightedVector, coeffs: SkewCoefficients | None = None) -> WeightedVector:
    """sum_n h(n) Sigma~_{-n} f = sum_{n>0} h(n) [(Sigma*)^n f - Sigma^n f]."""
    _require_supported(f)
    t = f.truncation
    W = t.height if coeffs is None else coeffs.half_width
    if W > t.height:
        raise OutOfBand(f"window {W} exceeds the band height {t.height}")
    if coeffs is None:
        coeffs = skew_z_coefficients(W)
    acc = np.zeros(t.size, dtype=np.result_type(f.values.dtype, float))
    for n in range(1, W + 1):
        h = coeffs(n)
        acc += h * (sigma_star_power(f, n).values - sigma_power(f, n).values)
    out = WeightedVector(t, acc, None, False)
    out.meta["dropped_terms"] = max(0, t.height - W)
    return out


def apply_P(F, e: EpsilonField, f: WeightedVector) -> WeightedVector:
    """P f = sum_{n>=0} F(n) Sigma^n nabla_eps^* f, F cut at the band height."""
    _require_supported(f)
    t = f.truncation
    F = np.asarray(F)
    if len(F) > t.height + 1:
        F = F[:t.height + 1]
    base = epsilon_gradient_adjoint(e, f)
    acc = np.zeros(t.size, dtype=np.result_type(base.values.dtype, F.dtype, float))
    for n, c in enumerate(F):
        if c != 0:
            acc += c * sigma_power(base, n).values
    return WeightedVector(t, acc, None, False)


def horizontal_series_coefficients(n_terms: int) -> np.ndarray:
    """F(n) = kskew(n + 1), n = 0..n_terms-1."""
    return skew_riesz_kernel_z(np.arange(1, n_terms + 1))


def _fan_constant_below(e: EpsilonField, g: WeightedVector) -> WeightedVector:
    """nabla_eps g when g is constant on every successor fan below the band.

    Then the bottom level reads a constant times a zero-sum fan of eps, so
    it vanishes for any admissible extension of eps.
    """
    out = epsilon_gradient(e, g)
    vals = out.values.copy()
    vals[g.truncation.level_slice(g.truncation.height)] = 0
    return WeightedVector(g.truncation, vals, None, False)


def apply_horizontal_riesz(e: EpsilonField, f: WeightedVector, profile=None,
                           route: str = "kernel") -> WeightedVector:
    """R_eps f = nabla_eps L^{-1/2} f, or nabla_eps R f with ``route="riesz"``.

    Below the band both L^{-1/2} f and R f depend only on the level and the
    bottom ancestor, so the result is exact on the whole band.
    """
    if route == "kernel":
        return _fan_constant_below(e, apply_inverse_sqrt(f, profile))
    if route == "riesz":
        return _fan_constant_below(e, apply_riesz(f, profile))
    raise ValueError(f"unknown route {route!r}")


def apply_horizontal_riesz_adjoint(e: EpsilonField, f: WeightedVector, profile=None,
                                   route: str = "series") -> WeightedVector:
    """R_eps^* f = L^{-1/2} nabla_eps^* f.

    ``route="series"``: sum_{n>=0} kskew(n+1) Sigma^n nabla_eps^* f.
    ``route="kernel"``: kernel sum applied to nabla_eps^* f, which needs f
    to vanish on the bottom level so that nabla_eps^* f stays in the band.
    """
    t = f.truncation
    if route == "series":
        return apply_P(horizontal_series_coefficients(t.height + 1), e, f)
    if route == "kernel":
        _require_supported(f)
        g = epsilon_gradient_adjoint(e, f)
        if not g.zero_outside:
            raise ValueError("kernel route needs f to vanish on the bottom level")
        return apply_inverse_sqrt(g, profile)
    raise ValueError(f"unknown route {route!r}")


def sphere_sums_at_bottom(t: Truncation, u: np.ndarray) -> np.ndarray:
    """S[v, n] = sum of u over band vertices at distance n from bottom vertex v."""
    from .kernels_tree import radial_apply
    H = t.height
    cols = []
    for n in range(2 * H + 1):
        e = np.zeros(2 * H + 1)
        e[n] = 1.0
        cols.append(radial_apply(t, e, u)[t.level_slice(H)])
    return np.stack(cols, axis=1)


def riesz_energy_outside(f: WeightedVector, extra_depth: int = 2000, extra_up: int = 80) -> tuple[float, float]:
    """Energy sum |R f|^2 mu over the vertices the band cannot see.

    Covers the root, every vertex below the
    bottom level and every vertex reached through p(root).  Outside the band
    L^{-1/2} f depends only on where the path to the band enters it and on
    the extra distance, so each region collapses to a lattice sum.

    Returns ``(energy, remainder_estimate)``.
    """
    _require_supported(f)
    t = f.truncation
    q, H, L = t.q, t.height, t.root_level
    need = max(extra_depth, extra_up + extra_depth) + 2 * H + 2
    from .kernels_tree import g_profile_scaled
    # scaled profile q^{m/2} G(m) ~ 1/m keeps every power of q bounded
    Gs = g_profile_scaled(q, need)
    inv_sqrt = np.power(float(q), -t.level.astype(float) / 2)
    u = np.asarray(f.values) * flow_measure(t).weights * inv_sqrt

    # below the bottom: g_k(v) = q^{-(l_bot - k)/2} sum_n G(k + n) S[v, n]
    #                          = q^{-l_bot/2} sum_n Gs(k + n) q^{-n/2} S[v, n]
    n = np.arange(2 * H + 1)
    S = sphere_sums_at_bottom(t, u) * np.power(float(q), -n / 2.0)[None, :]
    ks = np.arange(extra_depth + 1)
    gk = (S @ Gs[ks[:, None] + n[None, :]].T) * float(q) ** (-t.bottom_level / 2)
    below_terms = (np.abs(np.diff(gk, axis=1)) ** 2).sum(axis=0) * float(q) ** t.bottom_level
    below = float(below_terms.sum())

    # above: vertex (a, b) climbs a steps from the root then descends b steps
    # into another branch; its distance to band vertex y is a + b + depth(y),
    # so g = q^{-(L+a-b)/2} sum_d G(a+b+d) U_d = q^{-L/2-a} sum_d Gs(a+b+d) q^{-d/2} U_d
    d = np.arange(H + 1)
    depth_sums = np.array([u[t.level_slice(j)].sum() for j in d]) * np.power(float(q), -d / 2.0)
    r = np.arange(extra_up + extra_depth + 1)
    A = Gs[r[:, None] + d[None, :]] @ depth_sums
    a = np.arange(extra_up + 1)[:, None]
    b = np.arange(extra_depth + 1)[None, :]
    V = np.power(float(q), -L / 2.0 - a) * A[a + b]
    spine = np.abs(V[:-1, 0] - V[1:, 0]) ** 2 * np.power(float(q), L + np.arange(extra_up))
    side = np.abs(V[1:, 1:] - V[1:, :-1]) ** 2 * ((q - 1) * np.power(float(q), L + a[1:] - 1))
    above = float(spine.sum() + side.sum())

    # terms decay like k^-4 in the extra depth: remainder ~ last term * k / 3
    remainder = below_terms[-1] * extra_depth / 3 + float(side[:, -1].sum()) * extra_depth / 3
    return below + above, float(remainder)


def riesz_l2_norm(f: WeightedVector, profile=None) -> dict:
    """||R f||_2 on the band, outside it, and in total."""
    R = apply_riesz(f, profile)
    # the root term is counted with the region above the band
    w = flow_measure(f.truncation).weights
    band = float(np.sum(np.abs(R.values[1:]) ** 2 * w[1:]))
    outside, rem = riesz_energy_outside(f)
    return {"band": np.sqrt(band), "total": np.sqrt(band + outside),
            "outside_energy": outside, "remainder": rem}
