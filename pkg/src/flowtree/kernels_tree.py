"""Almost-radial kernels on T_q.

Both the flow heat kernel and the kernel of L^{-1/2} have the form
``q^{-l(x)/2} P(d(x, y)) q^{-l(y)/2}`` for a radial profile ``P``.  The
profiles are series over ``k >= 0`` with geometric weights ``q^-k``; every
entry carries a certified bound on the dropped tail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .kernels_z import heat_skew_gradient_z, skew_riesz_kernel_z
from .measure import WeightedVector, flow_measure
from .operators import laplacian_relation_b
from .tree import Truncation, VertexRef


class ProfileTooShort(ValueError):
    pass


@dataclass(frozen=True)
class RadialProfile:
    q: int
    values: np.ndarray
    errors: np.ndarray
    provenance: str = "series"
    name: str = "G"

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n):
        return self.values[n]


def _series_terms(q: int, n_max: int, rel_tol: float) -> int:
    # terms fall off at least like q^-k; stop once q^-K < rel_tol / 4
    return int(np.ceil(np.log(4.0 / rel_tol) / np.log(q))) + 2


def g_profile(q: int, n_max: int, tol: float = 1e-15) -> RadialProfile:
    """G(n) = sum_k q^{-(n+2k)/2} kskew(n+2k+1) for n = 0..n_max.

    ``tol`` is a tolerance relative to the leading term ``q^{-n/2} kskew(n+1)``,
    which keeps the Gdiff identity accurate even where G itself is tiny.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    K = _series_terms(q, n_max, tol)
    n = np.arange(n_max + 1)[:, None]
    k = np.arange(K)[None, :]
    m = n + 2 * k + 1
    terms = np.power(float(q), -(n + 2 * k) / 2.0) * skew_riesz_kernel_z(m)
    # sum smallest first
    vals = terms[:, ::-1].sum(axis=1)
    # kskew decreases on m >= 1, so the tail is below a geometric series
    tail = np.power(float(q), -(n[:, 0] + 2 * K) / 2.0) * skew_riesz_kernel_z(n[:, 0] + 2 * K + 1) / (1 - 1 / q)
    return RadialProfile(q, vals, tail, "series", "G")


def g_profile_scaled(q: int, n_max: int, tol: float = 1e-15) -> np.ndarray:
    """q^{n/2} G(n) = sum_k q^-k kskew(n+2k+1); decays like 1/n without underflow."""
    K = _series_terms(q, n_max, tol)
    n = np.arange(n_max + 1)[:, None]
    k = np.arange(K)[None, :]
    terms = np.power(float(q), -k.astype(float)) * skew_riesz_kernel_z(n + 2 * k + 1)
    return terms[:, ::-1].sum(axis=1)


def j_profile(q: int, t: float, n_max: int, tol: float = 1e-15) -> RadialProfile:
    """J_t(n) = sum_k q^{-(n+2k)/2} (tau_1 - tau_-1) h_t(n+2k+1)."""
    if t < 0:
        raise ValueError(f"negative time t={t}")
    K = _series_terms(q, n_max, tol)
    n = np.arange(n_max + 1)[:, None]
    k = np.arange(K)[None, :]
    terms = np.power(float(q), -(n + 2 * k) / 2.0) * heat_skew_gradient_z(t, n + 2 * k + 1)
    vals = terms[:, ::-1].sum(axis=1)
    # (tau_1 - tau_-1) h_t(m) <= h_t(m - 1) <= 1
    m_tail = n[:, 0] + 2 * K
    from .kernels_z import heat_kernel_z
    tail = np.power(float(q), -m_tail / 2.0) * heat_kernel_z(t, m_tail) / (1 - 1 / q)
    return RadialProfile(q, vals, tail, "series", "J")


def heat_kernel_combinatorial(q: int, t: float, d) -> np.ndarray:
    """Heat kernel of the combinatorial Laplacian at distance ``d``."""
    if t < 0:
        raise ValueError(f"negative time t={t}")
    d = np.asarray(d)
    b = laplacian_relation_b(q)
    prof = j_profile(q, t * (1 - b), int(np.max(d)))
    return np.exp(-b * t) * prof.values[d]


def heat_kernel_flow(t: Truncation, time: float, x: VertexRef, y: VertexRef) -> float:
    """H_t(x, y) = q^{-l(x)/2} J_t(d(x, y)) q^{-l(y)/2}."""
    from .tree import distance
    d = distance(x, y)
    J = j_profile(t.q, time, d)
    return float(t.q ** (-x.level / 2) * J.values[d] * t.q ** (-y.level / 2))


def g_profile_quadrature(q: int, n_max: int, tol: float = 1e-9) -> RadialProfile:
    """Subordination oracle: G(n) = pi^-1/2 int_0^inf J_t(n) dt / sqrt(t).

    Slow; used as an independent check of :func:`g_profile`.
    """
    vals, errs = [], []
    for n in range(n_max + 1):
        def g(s, n=n):
            if s == 0.0:
                return 0.0
            return 2.0 * float(j_profile(q, s * s, n).values[n])
        split = max(1.0, float(n))
        a, ea = integrate.quad(g, 0.0, split, epsabs=tol / 4, epsrel=1e-12, limit=400)
        b, eb = integrate.quad(g, split, np.inf, epsabs=tol / 4, epsrel=1e-12, limit=400)
        vals.append((a + b) / np.sqrt(np.pi))
        errs.append((ea + eb) / np.sqrt(np.pi))
    return RadialProfile(q, np.array(vals), np.array(errs), "quadrature-oracle", "G")


# -- radial kernel application -------------------------------------------------

def radial_apply(t: Truncation, profile: np.ndarray, u: np.ndarray) -> np.ndarray:
    """w(x) = sum_y P(d(x, y)) u(y) over the truncation.

    Groups y by their lowest common ancestor with x.  ``U[d][i, k]`` holds
    the sum of u over the descendants of vertex (d, i) exactly k levels
    below it; the contribution of ancestor m = p^j(x) is
    sum_k P(j + k) U[m, k] minus the part already counted through the
    child of m on the path to x.  Cost O(size * height).  Extra trailing
    axes of ``u`` are treated as a batch.
    """
    H, q = t.height, t.q
    profile = np.asarray(profile)
    if len(profile) < 2 * H + 1:
        raise ProfileTooShort(f"profile needs {2 * H + 1} entries, has {len(profile)}")
    batch = u.shape[1:]
    dtype = np.result_type(u.dtype, profile.dtype, float)
    U = [None] * (H + 1)
    U[H] = u[t.level_slice(H)].astype(dtype)[:, None]
    for d in range(H - 1, -1, -1):
        below = U[d + 1].reshape(q ** d, q, H - d, *batch).sum(axis=1)
        U[d] = np.concatenate([u[t.level_slice(d)].astype(dtype)[:, None], below], axis=1)

    def contract(Ud, prof):
        return np.tensordot(Ud, prof, axes=([1], [0])) if not batch else np.einsum("nk...,k->n...", Ud, prof)

    w = np.empty((t.size, *batch), dtype=dtype)
    for dx in range(H + 1):
        idx = np.arange(q ** dx)
        acc = contract(U[dx], profile[:H - dx + 1])
        for j in range(1, dx + 1):
            dm = dx - j
            full = contract(U[dm], profile[j:j + H - dm + 1])
            # the branch through the child of m on the path to x was already counted
            child = contract(U[dm + 1], profile[j + 1:j + 1 + H - dm])
            acc = acc + full[idx // q ** j] - child[idx // q ** (j - 1)]
        w[t.level_slice(dx)] = acc
    return w


class TreeKernel:
    """Kernel K(x, y) = q^{-l(x)/2} P(d(x, y)) q^{-l(y)/2} with respect to mu."""

    def __init__(self, t: Truncation, profile: RadialProfile):
        if profile.q != t.q:
            raise ValueError("profile and truncation have different q")
        if profile.n_max < 2 * t.height + 1:
            raise ProfileTooShort(
                f"profile covers distance {profile.n_max}, truncation needs {2 * t.height + 1}")
        self.truncation = t
        self.profile = profile
        self._inv_sqrt = np.power(float(t.q), -t.level.astype(float) / 2)

    def __call__(self, x, y) -> float:
        t = self.truncation
        x = x if isinstance(x, VertexRef) else t.vertex(x)
        y = y if isinstance(y, VertexRef) else t.vertex(y)
        from .tree import distance
        return float(t.q ** (-x.level / 2) * self.profile.values[distance(x, y)] * t.q ** (-y.level / 2))

    def column(self, vid: int) -> np.ndarray:
        """K(x, y) for all x in the band and fixed y = vid."""
        t = self.truncation
        d = t.distances_from(vid)
        return self._inv_sqrt * self.profile.values[d] * self._inv_sqrt[vid]

    def at_root_parent(self) -> np.ndarray:
        """K(x, p(root)) for all x; p(root) is one step above the band."""
        t = self.truncation
        d = t.depth + 1
        return self._inv_sqrt * self.profile.values[d] * float(t.q) ** (-(t.root_level + 1) / 2)

    def matrix(self) -> np.ndarray:
        t = self.truncation
        if t.size > 4096:
            raise ValueError("dense kernel matrix is only built for small truncations")
        return np.stack([self.column(i) for i in range(t.size)], axis=1)

    def apply(self, f: WeightedVector) -> WeightedVector:
        """sum_y K(x, y) f(y) mu(y), exact when f vanishes outside the band."""
        if f.truncation != self.truncation:
            raise ValueError("vector lives on a different truncation")
        if not (f.zero_outside and f.fully_known):
            raise ValueError("kernel sums need a fully known vector that vanishes outside the band")
        t = self.truncation
        u = np.asarray(f.values, dtype=complex if np.iscomplexobj(f.values) else float)
        u = u * flow_measure(t).weights * self._inv_sqrt
        w = radial_apply(t, self.profile.values, u)
        return WeightedVector(t, self._inv_sqrt * w, None, False)


def nsqrt_kernel(t: Truncation, profile: RadialProfile | None = None) -> TreeKernel:
    """Kernel of L^{-1/2} on the truncation."""
    if profile is None:
        profile = g_profile(t.q, 2 * t.height + 2)
    return TreeKernel(t, profile)


def flow_heat_kernel(t: Truncation, time: float) -> TreeKernel:
    return TreeKernel(t, j_profile(t.q, time, 2 * t.height + 2))
