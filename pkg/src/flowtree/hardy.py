"""Atoms, Hörmander sums, BMO pairings and divergence harnesses.

Divergence is always measured as a fitted slope against log N (or N),
never asserted as an infinite value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .kernels_tree import TreeKernel, nsqrt_kernel
from .kernels_z import skew_riesz_kernel_z
from .measure import WeightedVector, flow_measure, lp_norm, mu, weak_l1_quasinorm
from .operators import EpsilonField, epsilon_gradient_adjoint, sigma_power
from .riesz import apply_riesz
from .tree import (OutOfBand, Trapezoid, Truncation, VertexRef, build_truncation,
                   descendant_ids, trapezoid_enlargement_mask, trapezoid_ids)


class NotSiblings(ValueError):
    pass


class TrivialEpsilon(ValueError):
    pass


class ZeroInput(ValueError):
    pass


# -- atoms ---------------------------------------------------------------------

@dataclass
class Atom:
    """Mean-zero function on a trapezoid, bounded by 1/mu(F).

    ``values`` holds exact Fractions on the support ids.
    """

    truncation: Truncation
    support: Trapezoid
    ids: np.ndarray
    values: list
    meta: dict = field(default_factory=dict)

    def mean(self) -> Fraction:
        w = flow_measure(self.truncation).exact()
        return sum((v * w[i] for i, v in zip(self.ids, self.values)), Fraction(0))

    def support_measure(self) -> Fraction:
        w = flow_measure(self.truncation).exact()
        return sum((w[i] for i in trapezoid_ids(self.truncation, self.support)), Fraction(0))

    def sup_bound_holds(self) -> bool:
        bound = 1 / self.support_measure()
        return all(abs(v) <= bound for v in self.values)

    def vector(self) -> WeightedVector:
        vals = np.zeros(self.truncation.size)
        vals[self.ids] = [float(v) for v in self.values]
        return WeightedVector(self.truncation, vals, None, True)


def make_difference_atom(t: Truncation, x1: VertexRef, x2: VertexRef,
                         normalized: bool = True) -> Atom:
    """a = mu(F)^-1 (delta_x1 - delta_x2) on F = F_1^2(p(x1)) = succ(p(x1)).

    ``normalized=False`` drops the factor mu(F)^-1.
    """
    if x1 == x2:
        raise NotSiblings("x1 and x2 coincide")
    i1, i2 = t.index(x1), t.index(x2)
    if i1 == 0 or i2 == 0 or t.parent[i1] != t.parent[i2]:
        raise NotSiblings(f"{x1} and {x2} do not share a predecessor in the band")
    top = t.vertex(int(t.parent[i1]))
    F = Trapezoid(top, 1, 2)
    c = 1 / mu(t, top) if normalized else Fraction(1)
    return Atom(t, F, np.array([i1, i2]), [c, -c])


def pairing(f: WeightedVector, a: Atom) -> complex:
    """<f, a> = sum_x f(x) a(x) mu(x)."""
    w = flow_measure(a.truncation).weights
    return sum(f.values[i] * float(v) * w[i] for i, v in zip(a.ids, a.values))


def mean_oscillation(f: WeightedVector, F: Trapezoid) -> float:
    """(1/mu(F)) sum_F |f - f_F| mu, the mean-oscillation reading of BMO."""
    t = f.truncation
    ids = trapezoid_ids(t, F)
    w = flow_measure(t).weights[ids]
    v = f.values[ids]
    avg = np.sum(v * w) / w.sum()
    return float(np.sum(np.abs(v - avg) * w) / w.sum())


def bmo_seminorm(f: WeightedVector, family) -> float:
    return max(mean_oscillation(f, F) for F in family)


# -- Hörmander sums ------------------------------------------------------------

class RieszKernel:
    """Kernel of R = nabla L^{-1/2} with respect to mu on the band.

    K_R(x, y) = K(x, y) - K(p(x), y); p(root) lies one step above the band
    and is handled through the kernel's distance rule.
    """

    def __init__(self, t: Truncation, base: TreeKernel | None = None):
        self.truncation = t
        self.base = nsqrt_kernel(t) if base is None else base
        self._parent_row = self.base.at_root_parent()
        self._cols: dict[int, np.ndarray] = {}

    def _k(self, y: int) -> np.ndarray:
        if y not in self._cols:
            self._cols[y] = self.base.column(y)
        return self._cols[y]

    def column(self, y: int) -> np.ndarray:
        """K_R(., y)."""
        t = self.truncation
        c = self._k(y)
        up = np.empty_like(c)
        up[1:] = c[t.parent[1:]]
        up[0] = self._parent_row[y]
        return c - up

    def row(self, y: int) -> np.ndarray:
        """K_R(y, .), the kernel of R* read as a column."""
        t = self.truncation
        p = self._k(int(t.parent[y])) if y > 0 else self._parent_row
        return self._k(y) - p


def _col(K, v: int, dual: bool) -> np.ndarray:
    if dual:
        return K.row(v) if hasattr(K, "row") else K.column(v)
    return K.column(v)


def hormander_sum(K, F: Trapezoid, y: VertexRef | int, z: VertexRef | int,
                  dual: bool = False) -> float:
    """sum over band x outside F* of |K(x, y) - K(x, z)| mu(x).

    ``dual=True`` uses K(y, x) - K(z, x) instead.  Sums run over the band
    only; the caller sweeps depths to watch the trend.
    """
    t = K.truncation
    y = y if isinstance(y, (int, np.integer)) else t.index(y)
    z = z if isinstance(z, (int, np.integer)) else t.index(z)
    ids = trapezoid_ids(t, F)
    if y not in ids or z not in ids:
        raise OutOfBand("y and z must lie in F")
    if y == z:
        return 0.0
    outside = ~trapezoid_enlargement_mask(t, F)
    d = np.abs(_col(K, int(y), dual) - _col(K, int(z), dual))
    return float(np.sum(d[outside] * flow_measure(t).weights[outside]))


def hormander_family(t: Truncation, max_h: int = 4, top_levels: int = 3) -> list[Trapezoid]:
    """F_{h'}^{2h'}(x0) for h' <= max_h and x0 in the top levels.

    Band automorphisms fixing the root act transitively on each level, so
    one x0 per level (the leftmost) represents all of them.
    """
    fam = []
    for d0 in range(min(top_levels, t.height + 1)):
        x0 = t.vertex(int(t.offsets[d0]))
        for h in range(1, max_h + 1):
            if d0 + 2 * h - 1 <= t.height:
                fam.append(Trapezoid(x0, h, 2 * h))
    return fam


def representative_pairs(t: Truncation, F: Trapezoid) -> list[tuple[int, int]]:
    """One (y, z) per orbit of pairs in F under automorphisms fixing x0.

    An orbit is fixed by the depths a, b of y, z below x0 and the depth c
    of their meeting point; y runs down the zero path and z leaves it
    after c steps.
    """
    x0 = F.top
    out = []
    for a in range(F.h_lo, F.h_hi):
        y = t.index(VertexRef(x0.level - a, x0.word + (0,) * a))
        for b in range(F.h_lo, F.h_hi):
            for c in range(0, min(a, b) + 1):
                if c == min(a, b):
                    if a == b:
                        continue  # y = z
                    w = (0,) * b  # one is an ancestor of the other
                else:
                    w = (0,) * c + (1,) + (0,) * (b - c - 1)
                out.append((y, t.index(VertexRef(x0.level - b, x0.word + w))))
    return out


def hormander_sup(K, family, dual: bool = False) -> tuple[float, tuple]:
    best, arg = 0.0, None
    for F in family:
        for y, z in representative_pairs(K.truncation, F):
            s = hormander_sum(K, F, y, z, dual)
            if s > best:
                best, arg = s, (F, y, z)
    return best, arg


@dataclass(frozen=True)
class HormanderContrast:
    depths: tuple
    riesz_sups: tuple
    dual_h1l1: tuple

    @property
    def riesz_bound(self) -> float:
        return max(self.riesz_sups)

    @property
    def ratio(self) -> float:
        return self.dual_h1l1[-1] / self.riesz_bound


def hormander_contrast(depths=range(8, 17, 2), q: int = 2) -> HormanderContrast:
    """R-kernel sups over the family against the dual sum of the h1l1 pair."""
    sups, duals = [], []
    for H in depths:
        t = build_truncation(q, 0, -H)
        K = RieszKernel(t)
        sups.append(hormander_sup(K, hormander_family(t))[0])
        F = Trapezoid(t.root, 1, 2)
        duals.append(hormander_sum(K, F, 1, 2, dual=True))
    return HormanderContrast(tuple(depths), tuple(sups), tuple(duals))


# -- divergence experiments ------------------------------------------------------

def log_slope_fit(N, values) -> tuple[float, float, float]:
    """Least squares values ~ a + s log N; returns (s, a, r^2)."""
    x = np.log(np.asarray(N, dtype=float))
    y = np.asarray(values, dtype=float)
    s, a = np.polyfit(x, y, 1)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - (a + s * x)) ** 2) / ss if ss > 0 else 1.0
    return float(s), float(a), float(r2)


def h1l1_closed_form(q: int, N) -> np.ndarray:
    """S_N = q^-1 sum_{n=0}^N kskew(n+1) for each N."""
    N = np.atleast_1d(np.asarray(N))
    csum = np.cumsum(skew_riesz_kernel_z(np.arange(1, int(N.max()) + 2)))
    return csum[N] / q


def h1l1_pairing(q: int, N: int) -> float:
    """<R f_N, a> with f_N the indicator of {y <= x1, d(y, x1) <= N}.

    Exact: f_N vanishes outside a band of height N + 1 below o, so the
    kernel sums see every y.
    """
    t = build_truncation(q, 0, -(N + 1))
    x1, x2 = t.vertex(1), t.vertex(2)
    ids = np.concatenate([descendant_ids(t, x1, n) for n in range(N + 1)])
    f = WeightedVector.indicator(t, ids)
    f = WeightedVector(t, f.values, None, True)
    a = make_difference_atom(t, x1, x2, normalized=True)
    return float(np.real(pairing(apply_riesz(f), a)))


def bmo_pairing_partial_sums(q: int, N_max: int, kernel_route_max: int | None = None) -> dict:
    """Partial sums S_N of <R f, a> for the h1l1 configuration.

    Route (a) runs the kernel sums on a band for N up to
    ``kernel_route_max``; route (b) is the closed form for every N.
    """
    N = np.arange(N_max + 1)
    b = h1l1_closed_form(q, N)
    if kernel_route_max is None:
        kernel_route_max = min(N_max, {2: 12, 3: 8, 5: 6}.get(q, 5))
    a = np.array([h1l1_pairing(q, int(n)) for n in range(kernel_route_max + 1)])
    return {"N": N, "closed_form": b, "kernel": a,
            "max_gap": float(np.max(np.abs(a - b[:len(a)]))) if len(a) else 0.0}


def counterexample_vertex(e: EpsilonField, room: int = 0) -> int:
    """Shallowest non-root x1 with eps nonzero on succ(x1) and ``room`` levels below."""
    t = e.truncation
    for d in range(1, t.height - room):
        for i in range(t.level_size(d)):
            vid = int(t.offsets[d]) + i
            kids = t.level_slice(d + 1)
            fan = np.asarray(e.values[kids])[i * t.q:(i + 1) * t.q]
            if np.any(fan != 0):
                return vid
    raise TrivialEpsilon("epsilon vanishes on every usable successor fan")


def horizontal_counterexample_norms(t: Truncation, e: EpsilonField, N_max: int) -> dict:
    """Partial L^1 norms of sum_{n<=N} kskew(n+1) Sigma^n nabla_eps^* a.

    a is the normalized difference atom on succ(p(x1)).  The terms have
    disjoint supports succ^{n+2}(p(x1)), so the norm factors as
    ||nabla_eps^* a||_1 times a partial sum of kskew; both are returned.
    """
    x1 = counterexample_vertex(e, room=1)
    xbar = int(t.parent[x1])
    if t.depth[xbar] + N_max + 2 > t.height:
        raise OutOfBand(f"N_max={N_max} needs {t.depth[xbar] + N_max + 2} levels, band has {t.height}")
    sib = [int(v) for v in range(t.size) if t.parent[v] == xbar and v != x1][0]
    a = make_difference_atom(t, t.vertex(x1), t.vertex(sib))
    g = epsilon_gradient_adjoint(e, a.vector())
    base = lp_norm(g, 1)
    k = skew_riesz_kernel_z(np.arange(1, N_max + 2))
    acc = np.zeros(t.size, dtype=complex if np.iscomplexobj(g.values) else float)
    direct, supports_disjoint = [], True
    seen = np.zeros(t.size, dtype=bool)
    for n in range(N_max + 1):
        term = sigma_power(g, n)
        nz = term.values != 0
        supports_disjoint &= not np.any(seen & nz)
        seen |= nz
        acc = acc + k[n] * term.values
        direct.append(lp_norm(WeightedVector(t, acc, None, True), 1))
    factored = base * np.cumsum(k)
    return {"N": np.arange(N_max + 1), "direct": np.array(direct), "factored": factored,
            "grad_norm": base, "disjoint": bool(supports_disjoint), "x1": x1}


def horizontal_closed_form(grad_norm: float, N) -> np.ndarray:
    N = np.atleast_1d(np.asarray(N))
    return grad_norm * np.cumsum(skew_riesz_kernel_z(np.arange(1, int(N.max()) + 2)))[N]


def weak_bound_ratio(op_apply, f: WeightedVector) -> float:
    """||A f||_{1,inf} / ||f||_1 over the band."""
    n1 = lp_norm(f, 1)
    if n1 == 0:
        raise ZeroInput("weak bound ratio needs f != 0")
    return weak_l1_quasinorm(op_apply(f)) / n1
