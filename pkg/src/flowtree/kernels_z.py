"""Convolution kernels on Z: heat kernel, Riesz kernel and its skew part.

Conventions: ``tau_k F(n) = F(n - k)``, the Laplacian is
``id - (tau_1 + tau_-1)/2`` and the step-2 skew gradient is
``tau_1 - tau_-1``, i.e. ``F(n-1) - F(n+1)``.  The heat kernel of that
Laplacian is ``e^-t I_|n|(t)`` (generating function of I_n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

SQRT2_OVER_PI = np.sqrt(2.0) / np.pi


class QuadratureError(RuntimeError):
    pass


def heat_kernel_z(t: float, n):
    """h_t(n) = exp(-t) I_|n|(t); ``t = 0`` gives the delta kernel."""
    if t < 0:
        raise ValueError(f"negative time t={t}")
    n = np.abs(np.asarray(n))
    if t == 0:
        return np.where(n == 0, 1.0, 0.0)
    return special.ive(n, t)


def heat_skew_gradient_z(t: float, m):
    """(tau_1 - tau_-1) h_t (m) = h_t(m-1) - h_t(m+1).

    Uses I_{m-1} - I_{m+1} = (2m/t) I_m to avoid cancellation.
    """
    if t < 0:
        raise ValueError(f"negative time t={t}")
    m = np.asarray(m)
    if t == 0:
        return np.where(m == 1, 1.0, np.where(m == -1, -1.0, 0.0))
    return (2.0 * m / t) * special.ive(np.abs(m), t)


def riesz_kernel_z(n):
    """Convolution kernel of nabla_Z Delta_Z^{-1/2}: sqrt(2)/pi / (n + 1/2)."""
    return SQRT2_OVER_PI / (np.asarray(n, dtype=float) + 0.5)


def skew_riesz_kernel_z(n):
    """Skew part: 2 sqrt(2)/pi * n / (n^2 - 1/4)."""
    n = np.asarray(n, dtype=float)
    return 2 * SQRT2_OVER_PI * n / (n * n - 0.25)


@dataclass(frozen=True)
class ZKernelTable:
    """Kernel values on the window {-N, ..., N}."""

    kind: str
    half_width: int
    values: np.ndarray
    tail_bound: float = 0.0
    t: float | None = None
    provenance: str = "closed-form"

    @property
    def support(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def __call__(self, n):
        n = np.asarray(n)
        inside = np.abs(n) <= self.half_width
        idx = np.clip(n + self.half_width, 0, 2 * self.half_width)
        return np.where(inside, self.values[idx], 0.0)


def riesz_table(N: int) -> ZKernelTable:
    # the tail is not summable (~1/n); its l^2 mass is the meaningful bound
    n = np.arange(N + 1, 10 * N + 10)
    tail = float(np.sqrt(2 * np.sum(riesz_kernel_z(n) ** 2) + 2 * SQRT2_OVER_PI ** 2 / (10 * N + 9)))
    return ZKernelTable("riesz", N, riesz_kernel_z(np.arange(-N, N + 1)), tail)


def skew_riesz_table(N: int) -> ZKernelTable:
    n = np.arange(N + 1, 10 * N + 10)
    tail = float(np.sqrt(2 * np.sum(skew_riesz_kernel_z(n) ** 2) + 8 * SQRT2_OVER_PI ** 2 / (10 * N + 9)))
    return ZKernelTable("skew_riesz", N, skew_riesz_kernel_z(np.arange(-N, N + 1)), tail)


def heat_tail_bound(t: float, N: int) -> float:
    """Certified bound on sum_{|n| > N} h_t(n).

    Term ratios of the power series give I_{n+1}(t) <= I_n(t) t / (2(n+1)),
    so the tail is dominated by a geometric series.
    """
    if t == 0:
        return 0.0
    r = t / (2.0 * (N + 2))
    if r >= 1:
        return 1.0
    return float(min(1.0, 2 * heat_kernel_z(t, N + 1) / (1 - r)))


def heat_table(t: float, N: int) -> ZKernelTable:
    return ZKernelTable("heat", N, heat_kernel_z(t, np.arange(-N, N + 1)),
                        heat_tail_bound(t, N), t=t)


@dataclass(frozen=True)
class CZReport:
    kind: str
    size_constant: float
    size_argmax: int
    gradient_constant: float
    gradient_argmax: int
    C: float

    @property
    def passed(self) -> bool:
        return self.size_constant <= self.C and self.gradient_constant <= self.C


def cz_estimate_check(table: ZKernelTable, C: float) -> CZReport:
    """Smallest constants in |k(n)| <= C(1+|n|)^-1 and |k(n) - k(n+1)| <= C(1+|n|)^-2."""
    if table.kind not in ("riesz", "skew_riesz"):
        raise ValueError(f"CZ estimates apply to Riesz kernels, not {table.kind!r}")
    n = table.support
    size = (1 + np.abs(n)) * np.abs(table.values)
    grad_n = n[:-1]
    grad = (1 + np.abs(grad_n)) ** 2 * np.abs(table.values[:-1] - table.values[1:])
    i, j = int(np.argmax(size)), int(np.argmax(grad))
    return CZReport(table.kind, float(size[i]), int(n[i]), float(grad[j]), int(grad_n[j]), C)


@dataclass(frozen=True)
class ZSignal:
    """Finitely supported sequence: ``values[i]`` sits at ``start + i``."""

    values: np.ndarray
    start: int = 0
    valid: tuple[int, int] | None = None

    @property
    def stop(self) -> int:
        return self.start + len(self.values) - 1

    def at(self, n):
        n = np.asarray(n)
        i = n - self.start
        ok = (i >= 0) & (i < len(self.values))
        return np.where(ok, self.values[np.clip(i, 0, len(self.values) - 1)], 0.0)


def convolve_z(f: ZSignal | np.ndarray, table: ZKernelTable) -> ZSignal:
    """(f * k)(n) = sum_m f(m) k(n - m) with the kernel cut to its window.

    The result is exact on ``valid``, where every needed kernel value lies
    inside the table.
    """
    if not isinstance(f, ZSignal):
        f = ZSignal(np.asarray(f))
    N = table.half_width
    out = np.convolve(f.values, table.values)
    lo, hi = f.stop - N, f.start + N
    return ZSignal(out, f.start - N, (lo, hi) if lo <= hi else None)


def _skew_gradient_heat_integrand(n: int):
    # t = s^2, dt / sqrt(t) = 2 ds
    def g(s):
        if s == 0.0:
            return 0.0
        return 2.0 * float(heat_skew_gradient_z(s * s, n))
    return g


def subordinated_skew_riesz(n: int, tol: float = 1e-11) -> float:
    """pi^-1/2 * int_0^inf (tau_1 - tau_-1) h_t(n) dt / sqrt(t), by quadrature."""
    if n == 0:
        return 0.0
    if n < 0:
        return -subordinated_skew_riesz(-n, tol)
    g = _skew_gradient_heat_integrand(n)
    split = max(1.0, float(n))
    a, ea = integrate.quad(g, 0.0, split, epsabs=tol / 4, epsrel=1e-13, limit=400)
    b, eb = integrate.quad(g, split, np.inf, epsabs=tol / 4, epsrel=1e-13, limit=400)
    err = (ea + eb) / np.sqrt(np.pi)
    if err > tol:
        raise QuadratureError(f"quadrature error {err:.2e} above tolerance {tol:.0e} at n={n}")
    return (a + b) / np.sqrt(np.pi)


def subordination_riesz_z(N: int, tol: float = 1e-11) -> ZKernelTable:
    vals = np.array([subordinated_skew_riesz(int(n), tol) for n in range(-N, N + 1)])
    return ZKernelTable("skew_riesz", N, vals, provenance="subordination-quadrature")
