"""Bound states of the undriven double well H0 = -(lbar^2/2n_s) d^2/dx^2 + V_e(x)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import CalibrationOutOfBracket, DegeneracyWarning, LocalizationFailure, NoBoundState
from .geometry import EffectivePotential1D, Grid, SlabGrid, WaveguideGeometry, check_slab_convergence, effective_index

TAIL_TOL = 1e-6


def inner(f: np.ndarray, g: np.ndarray, dx: float) -> complex | float:
    """Trapezoidal <f|g> on a uniform grid."""
    return trapezoid(np.conj(f) * g, dx=dx)


@dataclass(frozen=True)
class BoundStateSet:
    """Ascending energies E_l < 0 and real normalized eigenfunctions (rows of `states`)."""

    energies: np.ndarray
    states: np.ndarray = field(repr=False)
    grid: Grid = field(repr=False)

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x


@dataclass(frozen=True)
class TwoLevelSystem:
    E1: float
    E2: float
    mu12: float
    lambda_bar: float
    n_s: float

    @property
    def splitting(self) -> float:
        return self.E2 - self.E1


def _fix_sign(v: np.ndarray) -> np.ndarray:
    mag = np.abs(v)
    # leftmost of the (near-)tied largest samples decides, so odd states are reproducible
    idx = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
    return v if v[idx] > 0 else -v


def bound_states(potential: EffectivePotential1D, lambda_bar: float, n_s: float) -> BoundStateSet:
    """All eigenpairs of the finite-difference H0 with E < 0 and decayed tails.

    Three-point stencil with Dirichlet walls. On a symmetric periodic grid the
    unpaired first sample (x = x_min) is pinned to zero so the matrix is
    exactly mirror symmetric.
    """
    grid = potential.grid
    dx = grid.dx
    first = 1 if grid.symmetric else 0
    V = potential.values[first:]
    c = lambda_bar**2 / (2 * n_s)
    diag = 2 * c / dx**2 + V
    off = np.full(V.size - 1, -c / dx**2)
    lo = float(V.min()) - 1e-3
    energies, vecs = eigh_tridiagonal(diag, off, select="v", select_range=(lo, 0.0))
    states = np.zeros((len(energies), grid.n))
    states[:, first:] = vecs.T
    keep = []
    for l in range(len(energies)):
        psi = states[l] / math.sqrt(trapezoid(states[l] ** 2, dx=dx))
        states[l] = _fix_sign(psi)
        if max(abs(psi[first]), abs(psi[-1])) < TAIL_TOL:
            keep.append(l)
    if not keep:
        raise NoBoundState("H0 has no eigenvalue below the continuum threshold")
    energies, states = energies[keep], states[keep]
    gaps = np.diff(energies)
    if np.any(gaps < 1e-12):
        warnings.warn("near-degenerate bound states; refine the grid", DegeneracyWarning, stacklevel=2)
    return BoundStateSet(energies=energies, states=states, grid=grid)


def parities(bs: BoundStateSet) -> list[int]:
    """+1 (even) or -1 (odd) for each state, from its overlap with the mirror image (symmetric grid)."""
    if not bs.grid.symmetric:
        raise ValueError("parity needs a grid symmetric about x = 0")
    i, j = bs.grid.mirror_pairs()
    out = []
    for psi in bs.states:
        overlap = np.sum(psi[i] * psi[j]) / np.sum(psi[i] ** 2)
        out.append(1 if overlap > 0 else -1)
    return out


def tunneling_period(E_i: float, E_j: float, lambda_bar: float) -> float:
    """Beat length 2 pi lbar / (E_j - E_i) of two modes."""
    if not E_j > E_i:
        raise ValueError("E_j must exceed E_i")
    return 2 * math.pi * lambda_bar / (E_j - E_i)


def localized_states(bs: BoundStateSet) -> tuple[np.ndarray, np.ndarray]:
    """Left- and right-well states (xi_1 -+ xi_2)/sqrt(2), sign assigned by where they live."""
    if len(bs) < 2:
        raise LocalizationFailure("need at least two bound states")
    x, dx = bs.x, bs.grid.dx
    plus = (bs.states[0] + bs.states[1]) / math.sqrt(2)
    minus = (bs.states[0] - bs.states[1]) / math.sqrt(2)

    def left_fraction(u):
        return float(np.sum(u[x < 0] ** 2) * dx)

    for u_l, u_r in ((plus, minus), (minus, plus)):
        if left_fraction(u_l) >= 0.9 and 1 - left_fraction(u_r) >= 0.9:
            return u_l, u_r
    raise LocalizationFailure("lowest doublet does not split into well-localized states")


def dipole_element(bs: BoundStateSet, i: int, j: int) -> float:
    """<xi_i|x|xi_j> with 0-based state indices."""
    return float(inner(bs.states[i], bs.x * bs.states[j], bs.grid.dx))


def two_level(bs: BoundStateSet, geom: WaveguideGeometry) -> TwoLevelSystem:
    return TwoLevelSystem(E1=float(bs.energies[0]), E2=float(bs.energies[1]), mu12=dipole_element(bs, 0, 1),
                          lambda_bar=geom.lambda_bar, n_s=geom.n_s)


def solve_spectrum(geom: WaveguideGeometry, grid: Grid | None = None, slab: SlabGrid | None = None,
                   check: bool = True) -> tuple[EffectivePotential1D, BoundStateSet]:
    potential = effective_index(geom, grid, slab, check=check)
    return potential, bound_states(potential, geom.lambda_bar, geom.n_s)


def doublet_period(geom: WaveguideGeometry, grid: Grid | None = None, slab: SlabGrid | None = None) -> float:
    _, bs = solve_spectrum(geom, grid, slab, check=False)
    return tunneling_period(bs.energies[0], bs.energies[1], geom.lambda_bar)


@dataclass(frozen=True)
class Calibration:
    n_s: float
    d12: float
    target_d12: float
    evaluations: int

    @property
    def relative_error(self) -> float:
        return abs(self.d12 - self.target_d12) / self.target_d12


def calibrate_ns(geom: WaveguideGeometry, target_d12: float = 7940.0, tol: float = 1e-3,
                 bracket: tuple[float, float] = (1.45, 1.55), grid: Grid | None = None,
                 slab: SlabGrid | None = None) -> Calibration:
    """Find the substrate index n_s in `bracket` that reproduces the doublet period target_d12.

    Bracketed root search (Brent) on d12(n_s) - target; the bracket is fixed,
    so the result does not depend on the starting geom.n_s.
    """
    if not target_d12 > 0:
        raise ValueError("target_d12 must be positive")
    slab = slab or SlabGrid()
    check_slab_convergence(geom, slab)
    calls = 0

    def mismatch(n_s):
        nonlocal calls
        calls += 1
        return doublet_period(geom.with_(n_s=n_s), grid, slab) - target_d12

    f_lo, f_hi = mismatch(bracket[0]), mismatch(bracket[1])
    if f_lo * f_hi > 0:
        raise CalibrationOutOfBracket(
            f"d12 - target has the same sign at n_s={bracket[0]} ({f_lo:+.1f} um) and {bracket[1]} ({f_hi:+.1f} um)")
    n_s = brentq(mismatch, *bracket, xtol=1e-10, rtol=1e-12)
    d12 = target_d12 + mismatch(n_s)
    if abs(d12 - target_d12) > tol * target_d12:
        raise CalibrationOutOfBracket(f"calibration stalled at d12={d12:.2f} um")
    return Calibration(n_s=float(n_s), d12=float(d12), target_d12=target_d12, evaluations=calls)
