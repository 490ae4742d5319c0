"""Empirical operator norms of band compressions.

Each operator is the compression P A P to a truncation band, applied to
blocks of column vectors at once.  Norms on L^p(mu) come from the
Higham-Boyd power method for p-norms, started from random probes; p = 1
and p = inf are computed exactly from columns.  Results are estimates
(lower bounds that are usually sharp), not certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels_tree import g_profile, radial_apply
from .kernels_z import skew_riesz_kernel_z
from .measure import flow_measure
from .operators import make_alternating_epsilon
from .tree import Truncation

OPERATORS = ("R", "R*", "R-R*", "R_eps", "R_eps*", "Sigma", "Sigma*")


@dataclass(frozen=True)
class BandOperator:
    name: str
    truncation: Truncation
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    complex_valued: bool = False


def _up(t: Truncation, X: np.ndarray) -> np.ndarray:
    """Sigma on band-supported columns; the root reads p(root), where X is 0."""
    out = np.zeros_like(X)
    out[1:] = X[t.parent[1:]]
    return out


def _down(t: Truncation, X: np.ndarray) -> np.ndarray:
    """Sigma* on band-supported columns; the bottom reads only zeros."""
    out = np.zeros_like(X)
    for d in range(t.height):
        kids = X[t.level_slice(d + 1)]
        out[t.level_slice(d)] = kids.reshape(t.q ** d, t.q, *X.shape[1:]).mean(axis=1)
    return out


class _Kernel:
    """Batched L^{-1/2} on band-supported columns, plus its p(root) row."""

    def __init__(self, t: Truncation):
        self.t = t
        prof = g_profile(t.q, 2 * t.height + 2)
        self.G = prof.values
        self.mu = flow_measure(t).weights
        self.inv_sqrt = np.power(float(t.q), -t.level.astype(float) / 2)
        self.parent_row = (self.inv_sqrt * self.G[t.depth + 1] *
                           float(t.q) ** (-(t.root_level + 1) / 2))
        self.mu_parent = float(t.q) ** (t.root_level + 1)

    def __call__(self, X):
        u = X * (self.mu * self.inv_sqrt)[:, None]
        return self.inv_sqrt[:, None] * radial_apply(self.t, self.G, u)

    def at_parent(self, X):
        return (self.parent_row * self.mu) @ X


def band_operator(name: str, t: Truncation, eps=None) -> BandOperator:
    """Compression of one of :data:`OPERATORS` to the band of ``t``."""
    up = lambda X: _up(t, X)  # noqa: E731
    down = lambda X: _down(t, X)  # noqa: E731
    if name == "Sigma":
        return BandOperator(name, t, up, down)
    if name == "Sigma*":
        return BandOperator(name, t, down, up)

    K = _Kernel(t)

    def riesz(X):
        g = K(X)
        out = g - _up(t, g)
        out[0] = g[0] - K.at_parent(X)
        return out

    def riesz_adj(X):
        out = K(X - down(X))
        # nabla^* X at p(root) is -X(root)/q
        return out + np.outer(K.parent_row, -X[0] / t.q * K.mu_parent)

    if name == "R":
        return BandOperator(name, t, riesz, riesz_adj)
    if name == "R*":
        return BandOperator(name, t, riesz_adj, riesz)
    if name == "R-R*":
        skew = lambda X: riesz(X) - riesz_adj(X)  # noqa: E731
        return BandOperator(name, t, skew, lambda X: -skew(X))

    e = make_alternating_epsilon(t) if eps is None else eps
    ev = np.asarray(e.values)[:, None]
    F = skew_riesz_kernel_z(np.arange(1, t.height + 2))

    def horiz(X):
        # nabla_eps of a function constant on fans below the band is 0 at the bottom
        return down(ev * K(X))

    def horiz_adj(X):
        g = np.conj(ev) * up(X)
        acc = F[0] * g
        for n in range(1, t.height + 1):
            g = up(g)
            acc = acc + F[n] * g
        return acc

    cplx = np.iscomplexobj(ev)
    if name == "R_eps":
        return BandOperator(name, t, horiz, horiz_adj, cplx)
    if name == "R_eps*":
        return BandOperator(name, t, horiz_adj, horiz, cplx)
    raise ValueError(f"unknown operator {name!r}; expected one of {OPERATORS}")


@dataclass(frozen=True)
class NormEstimate:
    operator: str
    p: float
    depth: int
    estimate: float
    probes: int
    iterations: int
    converged: bool
    method: str


def _pnorm(X, w, p):
    return (np.abs(X) ** p * w[:, None]).sum(axis=0) ** (1 / p)


def _dual(X, w, p):
    """Unit vector of L^{p'}(mu) norming X (columnwise)."""
    a = np.abs(X)
    with np.errstate(invalid="ignore", divide="ignore"):
        sgn = np.where(a > 0, X / np.where(a > 0, a, 1), 0)
    nrm = _pnorm(X, w, p)
    nrm = np.where(nrm > 0, nrm, 1.0)
    return sgn * a ** (p - 1) / nrm ** (p - 1)


def _column_norm(apply, t: Truncation, chunk: int = 256) -> float:
    """max_y ||A (delta_y / mu(y))||_1, the exact L^1(mu) norm."""
    w = flow_measure(t).weights
    best = 0.0
    for s in range(0, t.size, chunk):
        ids = np.arange(s, min(s + chunk, t.size))
        E = np.zeros((t.size, len(ids)))
        E[ids, np.arange(len(ids))] = 1.0 / w[ids]
        best = max(best, float(_pnorm(apply(E), w, 1).max()))
    return best


def estimate_norm(op: BandOperator, p: float, probes: int = 64, seed: int = 0,
                  tol: float = 1e-2, max_iter: int = 100) -> NormEstimate:
    """||P A P||_{L^p(mu) -> L^p(mu)}.

    p = 1 and p = inf are exact column maxima.  Otherwise each probe runs
    the p-norm power method x -> dual_{p'}(A^* dual_p(A x)), which never
    decreases ||A x||_p; iteration stops once the best estimate improves by
    less than ``tol / 10`` relatively.
    """
    t = op.truncation
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 1:
        return NormEstimate(op.name, p, t.height, _column_norm(op.apply, t), t.size, 1, True, "columns")
    if np.isinf(p):
        return NormEstimate(op.name, p, t.height, _column_norm(op.adjoint, t), t.size, 1, True, "columns")
    w = flow_measure(t).weights
    pd = p / (p - 1)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((t.size, probes))
    if op.complex_valued:
        X = X + 1j * rng.standard_normal((t.size, probes))
    X = X / _pnorm(X, w, p)
    best, converged, it = 0.0, False, 0
    for it in range(1, max_iter + 1):
        Y = op.apply(X)
        est = float(_pnorm(Y, w, p).max())
        if it > 1 and est <= best * (1 + tol / 10):
            best = max(best, est)
            converged = True
            break
        best = max(best, est)
        Z = op.adjoint(_dual(Y, w, p))
        X = _dual(Z, w, pd)
    return NormEstimate(op.name, p, t.height, best, probes, it, converged, "power")
