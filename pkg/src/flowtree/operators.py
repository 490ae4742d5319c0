"""First-order operator algebra on truncations.

Every operator maps a :class:`WeightedVector` to a :class:`WeightedVector`
and propagates exactness: an output entry is masked in only when every
stencil read was either a known value inside the band or a read outside
the band of a vector known to vanish there.  Object arrays of Fractions
pass through unchanged, which gives the rational mode used by the exact
identity tests.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .measure import WeightedVector, flow_measure
from .tree import OutOfBand, Truncation


class InvalidEpsilon(ValueError):
    pass


def _scale(values: np.ndarray, num: int, den: int):
    if values.dtype == object:
        return values * Fraction(num, den)
    return values * (num / den)


def _is_zero(values) -> bool:
    return bool(np.all(values == 0))


def _empty_like(f: WeightedVector) -> np.ndarray:
    out = np.zeros(f.truncation.size, dtype=f.values.dtype)
    if out.dtype == object:
        out[:] = Fraction(0)
    return out


def _pull_up(f: WeightedVector, steps: int):
    """Values and validity of x -> f(p^steps(x))."""
    t = f.truncation
    vals = _empty_like(f)
    valid = np.zeros(t.size, dtype=bool)
    src_valid = f.valid
    for d in range(t.height + 1):
        sl = t.level_slice(d)
        if d >= steps:
            src = t.level_slice(d - steps)
            vals[sl] = np.repeat(f.values[src], t.q ** steps)
            valid[sl] = np.repeat(src_valid[src], t.q ** steps)
        else:
            valid[sl] = f.zero_outside
    return vals, valid


def _sum_down(f: WeightedVector, steps: int):
    """Values and validity of x -> sum of f over succ^steps(x)."""
    t = f.truncation
    vals = _empty_like(f)
    valid = np.zeros(t.size, dtype=bool)
    src_valid = f.valid
    for d in range(t.height + 1):
        sl = t.level_slice(d)
        if d + steps <= t.height:
            src = t.level_slice(d + steps)
            block = f.values[src].reshape(t.q ** d, t.q ** steps)
            vals[sl] = block.sum(axis=1)
            valid[sl] = src_valid[src].reshape(t.q ** d, t.q ** steps).all(axis=1)
        else:
            valid[sl] = f.zero_outside
    return vals, valid


def _known_zero_on_depths(f: WeightedVector, depths) -> bool:
    t = f.truncation
    for d in depths:
        sl = t.level_slice(d)
        if not (f.valid[sl].all() and _is_zero(f.values[sl])):
            return False
    return True


def sigma_power(f: WeightedVector, n: int) -> WeightedVector:
    """Sigma^n f(x) = f(p^n(x))."""
    t = f.truncation
    if n > t.height:
        raise OutOfBand(f"Sigma^{n} exceeds the band height {t.height}")
    vals, valid = _pull_up(f, n)
    zero_out = f.zero_outside and _known_zero_on_depths(f, range(t.height - n + 1, t.height + 1))
    return WeightedVector(t, vals, valid, zero_out)


def sigma_star_power(f: WeightedVector, n: int) -> WeightedVector:
    """(Sigma*)^n f(x) = q^-n * sum of f over succ^n(x)."""
    t = f.truncation
    if n > t.height:
        raise OutOfBand(f"(Sigma*)^{n} exceeds the band height {t.height}")
    vals, valid = _sum_down(f, n)
    zero_out = f.zero_outside and _known_zero_on_depths(f, range(0, n))
    return WeightedVector(t, _scale(vals, 1, t.q ** n), valid, zero_out)


def apply_sigma(f: WeightedVector) -> WeightedVector:
    return sigma_power(f, 1)


def apply_sigma_star(f: WeightedVector) -> WeightedVector:
    return sigma_star_power(f, 1)


def apply_sigma_tilde(n: int, f: WeightedVector) -> WeightedVector:
    """Sigma^n for n >= 0, (Sigma*)^(-n) for n < 0."""
    return sigma_power(f, n) if n >= 0 else sigma_star_power(f, -n)


def flow_gradient(f: WeightedVector) -> WeightedVector:
    return f - apply_sigma(f)


def flow_gradient_adjoint(f: WeightedVector) -> WeightedVector:
    return f - apply_sigma_star(f)


def modulus_gradient_D(f: WeightedVector) -> WeightedVector:
    """Df(x) = sum over neighbours y of |f(x) - f(y)|."""
    t = f.truncation
    up, up_valid = _pull_up(f, 1)
    total = np.abs(f.values - up).astype(float)
    valid = f.valid & up_valid
    for d in range(t.height + 1):
        sl = t.level_slice(d)
        if d < t.height:
            kids = f.values[t.level_slice(d + 1)].reshape(t.q ** d, t.q)
            total[sl] += np.abs(f.values[sl][:, None] - kids).sum(axis=1)
            valid[sl] &= f.valid[t.level_slice(d + 1)].reshape(t.q ** d, t.q).all(axis=1)
        else:
            # successors lie outside the band
            total[sl] += t.q * np.abs(f.values[sl])
            valid[sl] &= f.zero_outside
    zero_out = f.zero_outside and _known_zero_on_depths(f, [0, t.height])
    return WeightedVector(t, total, valid, zero_out)


def flow_laplacian_apply(f: WeightedVector, form: str = "stencil") -> WeightedVector:
    """Flow Laplacian.

    ``form="stencil"`` evaluates the neighbour sum weighted by
    sqrt(mu(y)/mu(x)); ``form="sigma"`` uses id - (Sigma + Sigma*)/2.
    """
    t = f.truncation
    if form == "sigma":
        return f - (apply_sigma(f) + apply_sigma_star(f)) * (Fraction(1, 2) if f.values.dtype == object else 0.5)
    if form != "stencil":
        raise ValueError(f"unknown form {form!r}")
    sw = flow_measure(t).sqrt_weights
    up, up_valid = _pull_up(f, 1)
    down, down_valid = _sum_down(WeightedVector(t, f.values * sw, f.mask, f.zero_outside), 1)
    # sqrt(mu(p(x))/mu(x)) = sqrt(q); children enter through sqrt(mu(y))
    neigh = np.sqrt(t.q) * up + down / sw
    vals = f.values - neigh / (2 * np.sqrt(t.q))
    valid = f.valid & up_valid & down_valid
    zero_out = f.zero_outside and _known_zero_on_depths(f, [0, t.height])
    return WeightedVector(t, vals, valid, zero_out)


def combinatorial_laplacian_apply(f: WeightedVector) -> WeightedVector:
    """Delta f(x) = (q+1)^-1 sum over neighbours of (f(x) - f(y))."""
    t = f.truncation
    up, up_valid = _pull_up(f, 1)
    down, down_valid = _sum_down(f, 1)
    vals = f.values - _scale(up + down, 1, t.q + 1)
    valid = f.valid & up_valid & down_valid
    zero_out = f.zero_outside and _known_zero_on_depths(f, [0, t.height])
    return WeightedVector(t, vals, valid, zero_out)


def laplacian_relation_b(q: int) -> float:
    """Bottom of the L^2(#) spectrum of Delta: (sqrt(q) - 1)^2 / (q + 1)."""
    return (np.sqrt(q) - 1) ** 2 / (q + 1)


def conjugated_flow_laplacian(f: WeightedVector) -> WeightedVector:
    """(1-b)^-1 mu^-1/2 (Delta - b) mu^1/2 f."""
    t = f.truncation
    b = laplacian_relation_b(t.q)
    sw = flow_measure(t).sqrt_weights
    g = WeightedVector(t, f.values * sw, f.mask, f.zero_outside)
    inner = combinatorial_laplacian_apply(g) - g * b
    return WeightedVector(t, inner.values / sw / (1 - b), inner.mask, inner.zero_outside)


# -- horizontal gradients ------------------------------------------------------

class EpsilonField:
    """Bounded field with zero sum over every successor fan inside the band."""

    def __init__(self, t: Truncation, values, tol: float = 1e-14):
        values = np.asarray(values)
        if values.shape != (t.size,):
            raise ValueError("epsilon field has the wrong length")
        self.truncation = t
        self.values = values
        self.sup_norm = float(np.max(np.abs(values.astype(complex)))) if values.size else 0.0
        validate_epsilon(self, tol)

    def as_vector(self) -> WeightedVector:
        # behaviour of epsilon beyond the band is irrelevant once multiplied
        return WeightedVector(self.truncation, self.values, None, False)


def validate_epsilon(e: EpsilonField, tol: float = 1e-14) -> None:
    t = e.truncation
    for d in range(t.height):
        fan = e.values[t.level_slice(d + 1)].reshape(t.q ** d, t.q).sum(axis=1)
        if e.values.dtype == object:
            bad = any(s != 0 for s in fan)
        else:
            bad = np.any(np.abs(fan) > tol * max(1.0, e.sup_norm))
        if bad:
            raise InvalidEpsilon(f"epsilon does not sum to zero over successor fans at depth {d}")


def make_alternating_epsilon(t: Truncation) -> EpsilonField:
    """epsilon(y) = exp(2 pi i j / q) where j is the last digit of y's word.

    For q = 2 this is the real +1/-1 pattern.  The root counts as digit 0.
    """
    digit = np.where(t.depth > 0, t.position % t.q, 0)
    if t.q == 2:
        vals = np.where(digit == 0, 1.0, -1.0)
    else:
        vals = np.exp(2j * np.pi * digit / t.q)
    return EpsilonField(t, vals)


def epsilon_gradient(e: EpsilonField, f: WeightedVector) -> WeightedVector:
    """nabla_eps f = Sigma*(eps f)."""
    _check_same(e, f)
    return apply_sigma_star(e.as_vector() * f)


def epsilon_gradient_adjoint(e: EpsilonField, f: WeightedVector) -> WeightedVector:
    """nabla_eps^* f = conj(eps) Sigma f."""
    _check_same(e, f)
    return e.as_vector().conj() * apply_sigma(f)


def _check_same(e: EpsilonField, f: WeightedVector):
    if e.truncation != f.truncation:
        raise ValueError("epsilon field and vector live on different truncations")
