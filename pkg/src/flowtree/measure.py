"""Flow measure, weighted vectors and their norms.

A :class:`WeightedVector` stores the values of a function on a truncation
together with two pieces of bookkeeping that make "exact on the interior"
testable:

``mask``
    vertices where the stored value equals the value of the corresponding
    function on the infinite tree;
``zero_outside``
    the function is known to vanish at every vertex of T_q outside the
    truncation, so stencil reads that leave the band return an exact 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .tree import Truncation, UnknownVertex, VertexRef


def mu(t: Truncation, x: VertexRef) -> Fraction:
    if not t.contains(x):
        raise UnknownVertex(f"{x} is not a vertex of {t}")
    return Fraction(t.q) ** x.level


class FlowMeasure:
    """The canonical flow measure mu(x) = q^level(x) on a truncation."""

    def __init__(self, t: Truncation):
        self.truncation = t
        self.weights = np.power(float(t.q), t.level.astype(float))
        self.sqrt_weights = np.power(float(t.q), t.level.astype(float) / 2)

    def exact(self) -> np.ndarray:
        """Weights as an object array of Fractions."""
        q = Fraction(self.truncation.q)
        per_level = [q ** (self.truncation.root_level - d) for d in range(self.truncation.height + 1)]
        return np.array([per_level[d] for d in self.truncation.depth], dtype=object)

    def of(self, ids) -> float:
        return float(self.weights[np.asarray(ids)].sum())


@lru_cache(maxsize=8)
def flow_measure(t: Truncation) -> FlowMeasure:
    return FlowMeasure(t)


@dataclass
class WeightedVector:
    truncation: Truncation
    values: np.ndarray
    mask: np.ndarray | None = None
    zero_outside: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.truncation.size,):
            raise ValueError(f"expected {self.truncation.size} values, got shape {self.values.shape}")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.all():
                self.mask = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, t: Truncation, dtype=float) -> "WeightedVector":
        return cls(t, np.zeros(t.size, dtype=dtype), zero_outside=True)

    @classmethod
    def delta(cls, t: Truncation, x: VertexRef | int, value=1.0) -> "WeightedVector":
        vid = x if isinstance(x, (int, np.integer)) else t.index(x)
        v = np.zeros(t.size, dtype=type(value) if isinstance(value, Fraction) else float)
        if v.dtype == object:
            v[:] = Fraction(0)
        v[vid] = value
        return cls(t, v, zero_outside=True)

    @classmethod
    def indicator(cls, t: Truncation, ids) -> "WeightedVector":
        v = np.zeros(t.size)
        v[np.asarray(ids, dtype=np.int64)] = 1.0
        return cls(t, v, zero_outside=True)

    @classmethod
    def constant(cls, t: Truncation, c=1.0) -> "WeightedVector":
        # known on the whole band, but nonzero beyond it
        return cls(t, np.full(t.size, c), zero_outside=False)

    # -- views ---------------------------------------------------------------

    @property
    def valid(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.truncation.size, dtype=bool)
        return self.mask

    @property
    def fully_known(self) -> bool:
        return self.mask is None

    def on_level(self, depth: int) -> np.ndarray:
        return self.values[self.truncation.level_slice(depth)]

    def __getitem__(self, x):
        if isinstance(x, VertexRef):
            x = self.truncation.index(x)
        return self.values[x]

    def with_values(self, values, mask="same", zero_outside=None) -> "WeightedVector":
        return WeightedVector(
            self.truncation, values,
            self.mask if isinstance(mask, str) else mask,
            self.zero_outside if zero_outside is None else zero_outside,
        )

    # -- linear structure ----------------------------------------------------

    def _combine(self, other, op):
        if isinstance(other, WeightedVector):
            if other.truncation != self.truncation:
                raise ValueError("vectors live on different truncations")
            mask = self.valid & other.valid
            return WeightedVector(self.truncation, op(self.values, other.values), mask,
                                  self.zero_outside and other.zero_outside)
        return WeightedVector(self.truncation, op(self.values, other), self.mask,
                              self.zero_outside and op(0, other) == 0)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        if isinstance(other, WeightedVector):
            out = self._combine(other, np.multiply)
            # a product vanishes outside as soon as one factor does
            out.zero_outside = self.zero_outside or other.zero_outside
            return out
        return WeightedVector(self.truncation, self.values * other, self.mask, self.zero_outside)

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return WeightedVector(self.truncation, -self.values, self.mask, self.zero_outside)

    def conj(self):
        return self.with_values(np.conj(self.values))

    def restrict(self, mask) -> "WeightedVector":
        """Zero the vector off ``mask``; the result is exact everywhere."""
        mask = np.asarray(mask, dtype=bool)
        v = np.where(mask, self.values, 0)
        if self.values.dtype == object:
            v = v.astype(object)
        return WeightedVector(self.truncation, v, None, True)


def _weights(f: WeightedVector) -> np.ndarray:
    return flow_measure(f.truncation).weights


def lp_norm(f: WeightedVector, p: float = 2, where=None) -> float:
    """L^p(mu) norm over the truncation (optionally only over ``where``)."""
    if not (p == np.inf or p >= 1):
        raise ValueError(f"invalid exponent p={p}")
    a = np.abs(np.asarray(f.values, dtype=complex))
    w = _weights(f)
    if where is not None:
        a, w = a[where], w[where]
    if a.size == 0:
        return 0.0
    if p == np.inf:
        return float(a.max())
    if p == 1:
        return float(np.dot(a, w))
    scale = a.max()
    if scale == 0:
        return 0.0
    return float(scale * np.dot((a / scale) ** p, w) ** (1 / p))


def weak_quasinorm(values, weights) -> float:
    """sup over lambda > 0 of lambda * m{|v| > lambda} for a finite measure space.

    For lambda just below a value level v_j the strict superlevel set is
    {|v| >= v_j}, so the supremum is max_j v_j * m{|v| >= v_j}, reached in
    the limit lambda -> v_j from below.
    """
    a = np.abs(np.asarray(values, dtype=complex)).ravel()
    w = np.broadcast_to(np.asarray(weights, dtype=float), a.shape).ravel()
    keep = a > 0
    a, w = a[keep], w[keep]
    if a.size == 0:
        return 0.0
    order = np.argsort(-a, kind="stable")
    a, w = a[order], w[order]
    cum = np.cumsum(w)
    # last index of each run of equal values carries the full mass of {|v| >= v}
    last = np.r_[a[1:] != a[:-1], True]
    return float(np.max(a[last] * cum[last]))


def weak_l1_quasinorm(f: WeightedVector, where=None) -> float:
    a, w = f.values, _weights(f)
    if where is not None:
        a, w = a[where], w[where]
    return weak_quasinorm(a, w)


def sequence_weak_norm(F) -> float:
    """The l^{1,infty}(N) quasinorm sup_lambda lambda #{n : |F(n)| > lambda}."""
    return weak_quasinorm(F, 1.0)


def distribution(f: WeightedVector, lam: float) -> float:
    """mu{|f| > lam} over the truncation."""
    return float(_weights(f)[np.abs(f.values) > lam].sum())


def inner_product_mu(f: WeightedVector, g: WeightedVector, where=None):
    if f.truncation != g.truncation:
        raise ValueError("vectors live on different truncations")
    if f.values.dtype == object or g.values.dtype == object:
        w = flow_measure(f.truncation).exact()
        terms = f.values * g.values * w  # exact mode is real-valued
        if where is not None:
            terms = terms[where]
        return sum(terms, Fraction(0))
    terms = f.values * np.conj(g.values) * _weights(f)
    if where is not None:
        terms = terms[where]
    return complex(terms.sum()) if np.iscomplexobj(terms) else float(terms.sum())
