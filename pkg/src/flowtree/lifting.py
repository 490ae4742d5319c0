"""Lifting to the boundary product Omega x Z.

Omega is discretized by the cylinder cells below the bottom-level vertices
of a truncation, each of measure q^{L_bot}.  A function on the band lifts
to a (cells x levels) array; Sigma-tilde series become convolutions along
the level axis of every row.  The discretization is exact for everything
resolvable at the bottom level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measure import WeightedVector, flow_measure, weak_quasinorm
from .operators import sigma_power, sigma_star_power
from .tree import OutOfBand, Truncation


class RouteMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class BoundaryGrid:
    truncation: Truncation

    @property
    def n_cells(self) -> int:
        t = self.truncation
        return t.level_size(t.height)

    @property
    def cell_measure(self) -> float:
        return float(self.truncation.q) ** self.truncation.bottom_level

    @property
    def levels(self) -> np.ndarray:
        """Level of each column, top to bottom."""
        t = self.truncation
        return t.root_level - np.arange(t.height + 1)

    def cells_below(self, vid: int) -> slice:
        """Cells of Omega_x for band vertex ``vid``."""
        t = self.truncation
        d = int(t.depth[vid])
        w = t.q ** (t.height - d)
        i = int(t.position[vid])
        return slice(i * w, (i + 1) * w)

    def nu(self, vid: int) -> float:
        s = self.cells_below(vid)
        return (s.stop - s.start) * self.cell_measure


@dataclass
class LiftedVector:
    """Values on cells x levels; column ``d`` holds level ``root_level - d``.

    ``level_valid`` marks the columns that are exact; ``zero_outside``
    records that the function vanishes at levels outside the band.
    """

    grid: BoundaryGrid
    values: np.ndarray
    level_valid: np.ndarray | None = None
    zero_outside: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.grid.n_cells, self.grid.truncation.height + 1)
        if self.values.shape != shape:
            raise ValueError(f"lifted values must have shape {shape}")
        if self.level_valid is None:
            self.level_valid = np.ones(shape[1], dtype=bool)

    def measure(self) -> float:
        return self.grid.cell_measure

    def lp_norm(self, p: float = 1) -> float:
        v = np.abs(self.values[:, self.level_valid])
        if np.isinf(p):
            return float(v.max()) if v.size else 0.0
        return float((np.sum(v ** p) * self.grid.cell_measure) ** (1 / p))

    def weak_norm(self) -> float:
        v = np.abs(self.values[:, self.level_valid]).ravel()
        return weak_quasinorm(v, np.full(v.shape, self.grid.cell_measure))


def lift_phi(g: BoundaryGrid, f: WeightedVector) -> LiftedVector:
    """Phi f(omega, n) = f(omega_n): the ancestor of the cell at level n."""
    t = g.truncation
    if f.truncation != t:
        raise ValueError("vector lives on a different truncation")
    out = np.empty((g.n_cells, t.height + 1), dtype=f.values.dtype)
    for d in range(t.height + 1):
        out[:, d] = np.repeat(f.values[t.level_slice(d)], t.q ** (t.height - d))
    valid = np.array([f.valid[t.level_slice(d)].all() for d in range(t.height + 1)])
    return LiftedVector(g, out, valid, f.zero_outside)


def project_phi_star(g: BoundaryGrid, G: LiftedVector) -> WeightedVector:
    """Phi* G(x) = mean of G(., l(x)) over the cells of Omega_x."""
    t = g.truncation
    out = np.empty(t.size, dtype=np.result_type(G.values.dtype, float))
    valid = np.empty(t.size, dtype=bool)
    for d in range(t.height + 1):
        w = t.q ** (t.height - d)
        out[t.level_slice(d)] = G.values[:, d].reshape(t.q ** d, w).mean(axis=1)
        valid[t.level_slice(d)] = G.level_valid[d]
    return WeightedVector(t, out, valid, False)


def shift_sigma_omega(G: LiftedVector, n: int = 1) -> LiftedVector:
    """sigma^n G(omega, m) = G(omega, m + n); n may be negative."""
    H = G.grid.truncation.height
    if abs(n) > H:
        raise OutOfBand(f"shift {n} exceeds the band height {H}")
    out = np.zeros_like(G.values)
    valid = np.zeros(H + 1, dtype=bool)
    # level m + n sits n columns higher, i.e. at column d - n
    for d in range(H + 1):
        src = d - n
        if 0 <= src <= H:
            out[:, d] = G.values[:, src]
            valid[d] = G.level_valid[src]
        else:
            valid[d] = G.zero_outside
    return LiftedVector(G.grid, out, valid, G.zero_outside)


def _kernel_window(k) -> tuple[np.ndarray, int]:
    """Accept a ZKernelTable or a symmetric array centred at zero."""
    if hasattr(k, "half_width"):
        return np.asarray(k.values), int(k.half_width)
    k = np.asarray(k)
    if len(k) % 2 != 1:
        raise ValueError("kernel array must have odd length, centred at n = 0")
    return k, len(k) // 2


def transference_series(k, f: WeightedVector) -> WeightedVector:
    """sum_n k(n) Sigma~_{-n} f by direct shifts."""
    vals, W = _kernel_window(k)
    t = f.truncation
    if W > t.height:
        raise OutOfBand(f"kernel window {W} exceeds the band height {t.height}")
    acc = np.zeros(t.size, dtype=np.result_type(f.values.dtype, vals.dtype, float))
    valid = np.ones(t.size, dtype=bool)
    for n in range(-W, W + 1):
        c = vals[n + W]
        if c == 0:
            continue
        # Sigma~_{-n}: (Sigma*)^n for n > 0, Sigma^{-n} for n < 0
        g = sigma_star_power(f, n) if n > 0 else sigma_power(f, -n)
        acc += c * g.values
        valid &= g.valid
    return WeightedVector(t, acc, valid, False)


def lifted_convolution(k, G: LiftedVector) -> LiftedVector:
    """(id x tau(k)) G(omega, m) = sum_n k(n) G(omega, m - n), per row."""
    vals, W = _kernel_window(k)
    H = G.grid.truncation.height
    out = np.zeros(G.values.shape, dtype=np.result_type(G.values.dtype, vals.dtype, float))
    valid = np.ones(H + 1, dtype=bool)
    for n in range(-W, W + 1):
        c = vals[n + W]
        if c == 0:
            continue
        S = shift_sigma_omega(G, -n)
        out += c * S.values
        valid &= S.level_valid
    return LiftedVector(G.grid, out, valid, False)


def transference_apply(k, f: WeightedVector, check: bool = False, atol: float = 1e-12) -> WeightedVector:
    """K f = sum_n k(n) Sigma~_{-n} f.

    Route (a) is the direct shift series; route (b) lifts, convolves each
    boundary row and projects.  ``check=True`` computes both and records
    their largest disagreement in ``meta["route_gap"]``.
    """
    a = transference_series(k, f)
    if check:
        g = BoundaryGrid(f.truncation)
        b = project_phi_star(g, lifted_convolution(k, lift_phi(g, f)))
        both = a.valid & b.valid
        gap = float(np.max(np.abs(a.values[both] - b.values[both]))) if both.any() else 0.0
        a.meta["route_gap"] = gap
        if gap > atol * max(1.0, float(np.max(np.abs(a.values))) if a.values.size else 1.0):
            raise RouteMismatch(f"transference routes disagree by {gap:.2e}")
    return a


def transference_lifted_route(k, f: WeightedVector) -> WeightedVector:
    g = BoundaryGrid(f.truncation)
    return project_phi_star(g, lifted_convolution(k, lift_phi(g, f)))


# -- Phi Phi* counterexample ---------------------------------------------------

@dataclass(frozen=True)
class PhiReport:
    N: int
    weak_F: float
    weak_PhiPhiStarF: float
    phi_star_at_o: float
    route: str

    @property
    def ratio(self) -> float:
        return self.weak_PhiPhiStarF / self.weak_F


def _shell_values(q: int, N: int):
    """F_o on Omega_o: value q^-n on the shell of Omega_{w_n} minus Omega_{w_(n-1)}."""
    n = np.arange(0, -N - 1, -1)
    vals = np.power(float(q), -n.astype(float))
    meas = np.power(float(q), n.astype(float)) * (1 - 1 / q)
    return vals, meas


def phi_counterexample_shells(q: int, N: int) -> PhiReport:
    """Shell route: F and Phi Phi* F as finitely many (value, measure) pieces.

    Omega_o has measure 1; the innermost cylinder Omega_{w_(-N-1)} carries 0.
    Phi* F lives only at o, where it equals the mean of F_o, and Phi Phi* F
    is that constant on Omega_o x {0}.
    """
    vals, meas = _shell_values(q, N)
    inner = float(q) ** (-N - 1)
    weak_F = weak_quasinorm(np.r_[vals, 0.0], np.r_[meas, inner])
    at_o = float(np.sum(vals * meas))
    weak_P = weak_quasinorm(np.array([at_o]), np.array([1.0]))
    return PhiReport(N, weak_F, weak_P, at_o, "shells")


def phi_counterexample_family(g: BoundaryGrid, N: int) -> tuple[LiftedVector, PhiReport]:
    """Build F = F_o (x) chi_{level 0} on the grid and measure Phi Phi* F.

    The band root must sit at level 0 or above with o on the all-zeros path,
    and the band must reach level -N-1.
    """
    t = g.truncation
    if t.root_level < 0 or t.bottom_level > -N - 1:
        raise OutOfBand(f"band [{t.bottom_level}, {t.root_level}] cannot hold N={N}")
    q = t.q
    d0 = t.root_level  # column of level 0
    # o is the leftmost vertex at level 0; its cells are the first q^{-L_bot} cells
    cells_o = q ** (-t.bottom_level)
    F = np.zeros((g.n_cells, t.height + 1))
    col = np.zeros(cells_o)
    for n in range(0, -N - 1, -1):
        # omega in Omega_{w_n} \\ Omega_{w_(n-1)}: cells with the first zero run ending at n
        inner = q ** (n - t.bottom_level)
        deeper = q ** (n - 1 - t.bottom_level)
        col[deeper:inner] = float(q) ** (-n)
    F[:cells_o, d0] = col
    G = LiftedVector(g, F, None, True)
    star = project_phi_star(g, G)
    P = lift_phi(g, star)
    at_o = float(star.values[t.offsets[d0]])
    rep = PhiReport(N, G.weak_norm(), P.weak_norm(), at_o, "grid")
    return G, rep


def phi_slope(Ns, q: int) -> tuple[np.ndarray, float, float]:
    """Ratios for the shell route and the least-squares slope in N."""
    Ns = np.asarray(Ns)
    r = np.array([phi_counterexample_shells(q, int(N)).ratio for N in Ns])
    slope, icpt = np.polyfit(Ns, r, 1)
    fit = slope * Ns + icpt
    ss = np.sum((r - r.mean()) ** 2)
    r2 = 1.0 - np.sum((r - fit) ** 2) / ss if ss > 0 else 1.0
    return r, float(slope), float(r2)


def disintegration_gap(f: WeightedVector) -> float:
    """|sum_x f mu - integral of Phi f over nu x #|."""
    g = BoundaryGrid(f.truncation)
    lhs = np.sum(f.values * flow_measure(f.truncation).weights)
    rhs = np.sum(lift_phi(g, f).values) * g.cell_measure
    return float(abs(lhs - rhs))
