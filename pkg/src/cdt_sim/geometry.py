"""Refractive-index model, effective 1D double-well potential and the bend drive.

All lengths are in micrometres. Potentials and energies are dimensionless
(index units): V_e(x) = n_s - n_e(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import erf

from .errors import GridTooCoarse

AIR_INDEX = 1.0


@dataclass(frozen=True)
class WaveguideGeometry:
    """Device and probe parameters of the curved two-waveguide coupler."""

    lambda_probe: float = 0.98
    n_s: float = 1.52
    delta_n: float = 0.0124
    a: float = 11.0
    w: float = 2.5
    D_x: float = 4.3
    D_y: float = 3.3
    L: float = 24000.0
    A: float = 0.0
    Lambda: float = 2000.0

    def __post_init__(self):
        for name in ("lambda_probe", "a", "w", "D_x", "D_y", "L", "Lambda"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.A < 0:
            raise ValueError("A must be non-negative")
        if not self.delta_n > 0:
            raise ValueError("delta_n must be positive")
        if not self.n_s > 1:
            raise ValueError("n_s must exceed 1")

    @property
    def lambda_bar(self) -> float:
        return self.lambda_probe / (2 * math.pi)

    @property
    def omega(self) -> float:
        """Spatial drive frequency 2*pi/Lambda (0 for a straight coupler)."""
        return 2 * math.pi / self.Lambda if self.A > 0 else 0.0

    @property
    def force_amplitude(self) -> float:
        return 4 * math.pi**2 * self.A * self.n_s / self.Lambda**2 if self.A > 0 else 0.0

    def with_(self, **changes) -> "WaveguideGeometry":
        return replace(self, **changes)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid x_i = x_min + i*dx, i = 0..n-1 (x_max excluded)."""

    x_min: float = -100.0
    x_max: float = 100.0
    dx: float = 0.05

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        span = (self.x_max - self.x_min) / self.dx
        if abs(span - round(span)) > 1e-6 * span:
            raise ValueError("domain length must be an integer multiple of dx")

    @property
    def n(self) -> int:
        return int(round((self.x_max - self.x_min) / self.dx))

    @property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(self.n) * self.dx

    @property
    def k(self) -> np.ndarray:
        """Angular spatial frequencies in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    @property
    def symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) <= 1e-12 * (self.x_max - self.x_min)

    def mirror_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs (i, j) with x_j = -x_i; only meaningful on a symmetric grid."""
        i = np.arange(1, self.n)
        return i, self.n - i

    def halved(self) -> "Grid":
        return replace(self, dx=self.dx / 2)


@dataclass(frozen=True)
class SlabGrid:
    """Depth grid for the slab solve: air cover of thickness `cover` above y = 0."""

    y_max: float = 20.0
    dy: float = 0.05
    cover: float = 2.0

    def nodes(self, dy: float | None = None) -> np.ndarray:
        # cell-centred nodes keep the air/glass interface on a cell face
        dy = self.dy if dy is None else dy
        n_cover = int(round(self.cover / dy))
        n_sub = int(round(self.y_max / dy))
        return (np.arange(-n_cover, n_sub) + 0.5) * dy


@dataclass(frozen=True)
class EffectivePotential1D:
    grid: Grid
    values: np.ndarray = field(repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def shifted(self, shift: float) -> np.ndarray:
        """Samples of V_e(x - shift) by band-limited (spectral) translation."""
        if shift == 0.0:
            return self.values
        n = self.grid.n
        kr = 2 * np.pi * np.fft.rfftfreq(n, self.grid.dx)
        return np.fft.irfft(np.fft.rfft(self.values) * np.exp(-1j * kr * shift), n)


def lateral_shape(geom: WaveguideGeometry, x) -> np.ndarray:
    """g(x - a/2) + g(x + a/2): lateral factor of the index change (1 at a lone channel centre)."""
    x = np.asarray(x, dtype=float)
    norm = 2 * erf(geom.w / geom.D_x)

    def g(u):
        return (erf((u + geom.w) / geom.D_x) - erf((u - geom.w) / geom.D_x)) / norm

    return g(x - geom.a / 2) + g(x + geom.a / 2)


def index_profile(geom: WaveguideGeometry, x, y) -> np.ndarray:
    """Fitted 2D index n(x, y); y is depth below the surface, y < 0 is air."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    depth = np.exp(-np.clip(y, 0.0, None) / geom.D_y)
    n = geom.n_s + geom.delta_n * lateral_shape(geom, x) * depth
    return np.where(y < 0, AIR_INDEX, n)


def _slab_beta2(n2: np.ndarray, n2_bottom: float, dy: float, k: float) -> float:
    """Largest eigenvalue beta^2 of E'' + k^2 n^2 E on a cell-centred grid.

    Dirichlet above the air cover; at the bottom an exponential-tail closure
    E_ghost = E_last * exp(-kappa*dy) with kappa = sqrt(beta^2 - k^2 n_b^2),
    iterated to self-consistency.
    """
    diag0 = k * k * n2 - 2.0 / dy**2
    off = np.full(n2.size - 1, 1.0 / dy**2)
    last = n2.size - 1
    beta2 = k * k * n2.max()
    for _ in range(30):
        kappa = math.sqrt(max(beta2 - k * k * n2_bottom, 0.0))
        diag = diag0.copy()
        diag[-1] += math.exp(-kappa * dy) / dy**2
        new = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(last, last))[0]
        if abs(new - beta2) <= 1e-15 * abs(new):
            return new
        beta2 = new
    return beta2


def slab_effective_index(geom: WaveguideGeometry, contrast: float, slab: SlabGrid, dy: float | None = None) -> float:
    """Fundamental-mode effective index of the depth profile n_s + delta_n*contrast*f(y).

    Richardson-extrapolated from steps dy and dy/2. Returns n_s when the
    slab guides no mode.
    """
    dy = slab.dy if dy is None else dy
    k = 1.0 / geom.lambda_bar
    n_bottom = geom.n_s + geom.delta_n * contrast * math.exp(-slab.y_max / geom.D_y)
    beta2 = []
    for h in (dy, dy / 2):
        y = slab.nodes(h)
        n = np.where(y < 0, AIR_INDEX, geom.n_s + geom.delta_n * contrast * np.exp(-np.clip(y, 0, None) / geom.D_y))
        beta2.append(_slab_beta2(n * n, n_bottom**2, h, k))
    b2 = (4 * beta2[1] - beta2[0]) / 3
    n_eff = math.sqrt(b2) / k if b2 > 0 else 0.0
    return max(n_eff, geom.n_s)


def check_slab_convergence(geom: WaveguideGeometry, slab: SlabGrid, tol: float = 1e-7) -> float:
    """Halve dy on the strongest-guiding column; raise GridTooCoarse if n_e moves by more than tol."""
    contrast = float(lateral_shape(geom, geom.a / 2))
    coarse = slab_effective_index(geom, contrast, slab)
    fine = slab_effective_index(geom, contrast, slab, slab.dy / 2)
    change = abs(fine - coarse)
    if change > tol:
        raise GridTooCoarse(f"slab effective index changed by {change:.3e} on halving dy={slab.dy}")
    return change


def effective_index(geom: WaveguideGeometry, grid: Grid | None = None, slab: SlabGrid | None = None,
                    check: bool = True) -> EffectivePotential1D:
    """Reduce n(x, y) to V_e(x) = n_s - n_e(x) by a slab solve per column."""
    grid = grid or Grid()
    slab = slab or SlabGrid()
    if slab.y_max < 5 * geom.D_y:
        raise ValueError("slab depth y_max must be at least 5 diffusion lengths D_y")
    if check:
        check_slab_convergence(geom, slab)

    x = grid.x
    if grid.symmetric:
        # solve x >= 0 only and mirror by index, so V is exactly even
        cols = np.arange(grid.n // 2, grid.n)
        extra = np.array([0]) if grid.n % 2 == 0 else np.array([], dtype=int)
        cols = np.concatenate([cols, extra])
    else:
        cols = np.arange(grid.n)
    contrast = lateral_shape(geom, np.abs(x[cols]))
    n_eff = np.full(grid.n, geom.n_s)
    # n_e grows monotonically with contrast: stop at the first unguided column
    for c in np.argsort(-contrast, kind="stable"):
        value = slab_effective_index(geom, float(contrast[c]), slab)
        if value <= geom.n_s:
            break
        n_eff[cols[c]] = value
    if grid.symmetric:
        i, j = grid.mirror_pairs()
        upper = i >= grid.n // 2
        n_eff[j[upper]] = n_eff[i[upper]]
    return EffectivePotential1D(grid=grid, values=geom.n_s - n_eff)


def bending_profile(geom: WaveguideGeometry, z):
    """x0(z) = A cos(2 pi z / Lambda) with its first and second z-derivatives."""
    z = np.asarray(z, dtype=float)
    if geom.A == 0:
        zero = np.zeros_like(z)
        return zero, zero.copy(), zero.copy()
    om = 2 * np.pi / geom.Lambda
    c, s = np.cos(om * z), np.sin(om * z)
    return geom.A * c, -geom.A * om * s, -geom.A * om**2 * c


def ac_force(geom: WaveguideGeometry, z):
    """Inertial force F(z) = -n_s * x0''(z) felt in the co-moving frame."""
    return -geom.n_s * bending_profile(geom, z)[2]


def velocity_square_integral(geom: WaveguideGeometry, z):
    """Closed form of the integral of x0'(s)^2 over s in [0, z]."""
    z = np.asarray(z, dtype=float)
    if geom.A == 0:
        return np.zeros_like(z)
    om = 2 * np.pi / geom.Lambda
    return (geom.A * om) ** 2 * (z / 2 - np.sin(2 * om * z) / (4 * om))
