"""Split-step propagation of the effective 1D field in the lab and co-moving frames.

LAB frame: i lbar psi_z = -(lbar^2/2n_s) psi_xx + V_e(x - x0(z)) psi.
KH frame:  i lbar phi_z = -(lbar^2/2n_s) phi_xx + V_e(x') phi - F(z) x' phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import fft

from .errors import StabilityError
from .geometry import EffectivePotential1D, Grid, WaveguideGeometry, ac_force, bending_profile, velocity_square_integral
from .spectrum import BoundStateSet, localized_states

EDGE_TOL = 1e-4
FIBER_MODE_DIAMETER = 8.0


class Frame(str, Enum):
    LAB = "lab"
    KH = "kh"


class Launch(str, Enum):
    GAUSSIAN_LEFT = "gaussian_left"
    GAUSSIAN_RIGHT = "gaussian_right"
    GAUSSIAN_CENTER = "gaussian_center"
    MODE_UL = "mode_ul"
    MODE_UR = "mode_ur"


@dataclass(frozen=True)
class WaveField:
    grid: Grid
    amplitudes: np.ndarray = field(repr=False)
    z: float = 0.0
    frame: Frame = Frame.LAB

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class Absorber:
    """Quadratic absorbing layer of given width at both ends of the lab-frame domain.

    Fixed in lab coordinates so LAB and KH runs model the same physical device.
    `strength` is the absorption rate (per um of z) at the outer edge.
    """

    width: float = 30.0
    strength: float = 0.05

    def rate(self, grid: Grid, x_lab: np.ndarray) -> np.ndarray:
        inner_lo, inner_hi = grid.x_min + self.width, grid.x_max - self.width
        depth = np.maximum(inner_lo - x_lab, 0.0) + np.maximum(x_lab - inner_hi, 0.0)
        return self.strength * np.minimum(depth / self.width, 1.0) ** 2


@dataclass
class PropagationRecord:
    z_samples: np.ndarray
    x: np.ndarray
    intensity: np.ndarray = field(repr=False)  # shape (len(x), len(z_samples))
    P_L: np.ndarray = field(repr=False)
    P_R: np.ndarray = field(repr=False)
    norm: np.ndarray = field(repr=False)
    absorbed: np.ndarray = field(repr=False)
    frame: Frame = Frame.LAB
    final: WaveField | None = field(default=None, repr=False)

    def sample_at(self, z: float) -> int:
        """Index of the sample plane closest to z."""
        return int(np.argmin(np.abs(self.z_samples - z)))


# -- initial conditions ------------------------------------------------------

def _spectral_shift(values: np.ndarray, grid: Grid, shift: float) -> np.ndarray:
    """Samples of f(x - shift) for band-limited f."""
    if shift == 0.0:
        return values
    return fft.ifft(fft.fft(values) * np.exp(-1j * grid.k * shift))


def initial_field(kind: Launch | str, geom: WaveguideGeometry, bs: BoundStateSet | None = None,
                  grid: Grid | None = None, frame: Frame | str = Frame.LAB) -> WaveField:
    """Input field at z = 0: fiber Gaussian (8 um 1/e^2 intensity diameter) or a localized doublet state.

    In the LAB frame the guides start displaced by x0(0) = A, and so does the launch.
    """
    kind, frame = Launch(kind), Frame(frame)
    if grid is None:
        grid = bs.grid if bs is not None else Grid()
    offset = float(bending_profile(geom, 0.0)[0]) if frame is Frame.LAB else 0.0
    x = grid.x
    if kind in (Launch.MODE_UL, Launch.MODE_UR):
        if bs is None:
            raise ValueError("mode launches need the bound-state set")
        u_l, u_r = localized_states(bs)
        psi = (u_l if kind is Launch.MODE_UL else u_r).astype(complex)
        psi = _spectral_shift(psi, grid, offset)
    else:
        centre = {Launch.GAUSSIAN_LEFT: -geom.a / 2, Launch.GAUSSIAN_RIGHT: geom.a / 2,
                  Launch.GAUSSIAN_CENTER: 0.0}[kind] + offset
        w0 = FIBER_MODE_DIAMETER / 2
        psi = np.exp(-(((x - centre) / w0) ** 2)).astype(complex)
    psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return WaveField(grid=grid, amplitudes=psi, z=0.0, frame=frame)


# -- frame change ------------------------------------------------------------

def _kh_phase(geom: WaveguideGeometry, field_: WaveField, x_prime: np.ndarray) -> np.ndarray:
    _, v, _ = bending_profile(geom, field_.z)
    lb = geom.lambda_bar
    return (geom.n_s / lb) * float(v) * x_prime + (geom.n_s / (2 * lb)) * float(velocity_square_integral(geom, field_.z))


def kh_transform(field_: WaveField, geom: WaveguideGeometry) -> WaveField:
    """LAB -> KH: phi(x') = psi(x' + x0) exp[-i (n_s/lbar) x0' x' - i (n_s/2lbar) int x0'^2]."""
    if field_.frame is not Frame.LAB:
        raise ValueError("kh_transform expects a LAB-frame field")
    x0 = float(bending_profile(geom, field_.z)[0])
    shifted = _spectral_shift(field_.amplitudes, field_.grid, -x0)
    phi = shifted * np.exp(-1j * _kh_phase(geom, field_, field_.grid.x))
    return replace(field_, amplitudes=phi, frame=Frame.KH)


def inverse_kh_transform(field_: WaveField, geom: WaveguideGeometry) -> WaveField:
    if field_.frame is not Frame.KH:
        raise ValueError("inverse_kh_transform expects a KH-frame field")
    x0 = float(bending_profile(geom, field_.z)[0])
    tilted = field_.amplitudes * np.exp(1j * _kh_phase(geom, field_, field_.grid.x))
    return replace(field_, amplitudes=_spectral_shift(tilted, field_.grid, x0), frame=Frame.LAB)


# -- kernels -----------------------------------------------------------------

class SplitStepper:
    """Strang split step: half potential phase, spectral kinetic step, half potential phase.

    z-dependent potential terms are evaluated at the step midpoint. The optional
    absorber is applied after each step, located in lab coordinates.
    """

    def __init__(self, geom: WaveguideGeometry, potential: EffectivePotential1D, dz: float,
                 frame: Frame | str = Frame.LAB, absorber: Absorber | None = None):
        self.geom = geom
        self.potential = potential
        self.grid = potential.grid
        self.dz = dz
        self.frame = Frame(frame)
        self.absorber = absorber
        lb = geom.lambda_bar
        self._kinetic = np.exp(-1j * lb * self.grid.k**2 * dz / (2 * geom.n_s))
        self._v_hat = np.fft.rfft(potential.values)
        self._kr = 2 * np.pi * np.fft.rfftfreq(self.grid.n, self.grid.dx)
        self._phase_scale = -1j * dz / (2 * lb)
        self._fixed_rate = None
        if absorber is not None and self.frame is Frame.LAB:
            self._fixed_rate = np.exp(-absorber.rate(self.grid, self.grid.x) * dz)

    def potential_at(self, z: float) -> np.ndarray:
        geom = self.geom
        if geom.A == 0:
            return self.potential.values
        if self.frame is Frame.LAB:
            x0 = float(bending_profile(geom, z)[0])
            return np.fft.irfft(self._v_hat * np.exp(-1j * self._kr * x0), self.grid.n)
        return self.potential.values - float(ac_force(geom, z)) * self.grid.x

    def absorption(self, z: float) -> np.ndarray | None:
        if self.absorber is None:
            return None
        if self._fixed_rate is not None:
            return self._fixed_rate
        x_lab = self.grid.x + float(bending_profile(self.geom, z)[0])
        return np.exp(-self.absorber.rate(self.grid, x_lab) * self.dz)

    def step(self, psi: np.ndarray, z: float) -> tuple[np.ndarray, float]:
        """Advance psi from z to z + dz; returns the new field and the power absorbed."""
        half = np.exp(self._phase_scale * self.potential_at(z + self.dz / 2))
        psi = half * fft.ifft(self._kinetic * fft.fft(half * psi))
        mask = self.absorption(z + self.dz)
        if mask is None:
            return psi, 0.0
        before = np.sum(np.abs(psi) ** 2)
        psi = psi * mask
        return psi, float((before - np.sum(np.abs(psi) ** 2)) * self.grid.dx)


def step_lab(field_: WaveField, geom: WaveguideGeometry, potential: EffectivePotential1D, dz: float,
             absorber: Absorber | None = None) -> WaveField:
    if field_.frame is not Frame.LAB:
        raise ValueError("step_lab expects a LAB-frame field")
    psi, _ = SplitStepper(geom, potential, dz, Frame.LAB, absorber).step(field_.amplitudes, field_.z)
    out = replace(field_, amplitudes=psi, z=field_.z + dz)
    if absorber is None:
        _guard_edges(out.amplitudes)
    return out


def step_kh(field_: WaveField, potential: EffectivePotential1D, geom: WaveguideGeometry, dz: float,
            absorber: Absorber | None = None) -> WaveField:
    if field_.frame is not Frame.KH:
        raise ValueError("step_kh expects a KH-frame field")
    psi, _ = SplitStepper(geom, potential, dz, Frame.KH, absorber).step(field_.amplitudes, field_.z)
    out = replace(field_, amplitudes=psi, z=field_.z + dz)
    if absorber is None:
        _guard_edges(out.amplitudes)
    return out


def _guard_edges(psi: np.ndarray) -> None:
    peak = np.abs(psi).max()
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge > EDGE_TOL * peak:
        raise StabilityError(f"field reached the domain edge (|psi_edge|/max = {edge / peak:.2e})")


def check_domain(geom: WaveguideGeometry, grid: Grid, absorber: Absorber | None, margin: float = 15.0) -> None:
    """The guides' full excursion plus a decay margin must stay clear of the edges and absorber."""
    reach = geom.A + geom.a / 2 + geom.w + margin
    pad = absorber.width if absorber is not None else 0.0
    if reach > min(-grid.x_min, grid.x_max) - pad:
        raise StabilityError(f"domain too narrow: guides reach |x| = {reach:.1f} um")


# -- observables -------------------------------------------------------------

def _divider(field_: WaveField, geom: WaveguideGeometry) -> float:
    return float(bending_profile(geom, field_.z)[0]) if field_.frame is Frame.LAB else 0.0


def split_power(intensity: np.ndarray, grid: Grid, c: float) -> tuple[float, float]:
    """Power left and right of x = c, splitting the straddling cell linearly."""
    dx = grid.dx
    frac_left = np.clip((c - (grid.x - dx / 2)) / dx, 0.0, 1.0)
    left = float(np.sum(intensity * frac_left) * dx)
    right = float(np.sum(intensity * (1 - frac_left)) * dx)
    return left, right


def populations(field_: WaveField, geom: WaveguideGeometry) -> tuple[float, float]:
    """(P_L, P_R): power on either side of the instantaneous midpoint between the wells."""
    return split_power(field_.intensity(), field_.grid, _divider(field_, geom))


def propagate_record(field0: WaveField, geom: WaveguideGeometry, potential: EffectivePotential1D,
                     z_end: float, sample_every: float, dz: float = 0.5, absorber: Absorber | None = Absorber(),
                     window: float = 40.0, allow_beyond_L: bool = False) -> PropagationRecord:
    """March field0 to z_end, sampling populations and the intensity map.

    Intensity is stored for |x'| <= window in the waveguide frame (a LAB field
    is translated by -x0(z) before storage). Populations use the moving divider.
    """
    if z_end > geom.L and not allow_beyond_L:
        raise ValueError("z_end exceeds the sample length L")
    if sample_every < dz:
        raise ValueError("sample_every must be at least dz")
    grid = field0.grid
    check_domain(geom, grid, absorber)
    n_steps = int(round(z_end / dz))
    every = int(round(sample_every / dz))
    stepper = SplitStepper(geom, potential, dz, field0.frame, absorber)
    keep = np.abs(grid.x) <= window

    zs, cols, pl, pr, norms, lost = [], [], [], [], [], []
    absorbed = 0.0

    def sample(psi, z):
        current = WaveField(grid, psi, z, field0.frame)
        left, right = populations(current, geom)
        if field0.frame is Frame.LAB and geom.A > 0:
            shown = _spectral_shift(psi, grid, -float(bending_profile(geom, z)[0]))
        else:
            shown = psi
        zs.append(z)
        cols.append(np.abs(shown[keep]) ** 2)
        pl.append(left)
        pr.append(right)
        norms.append(current.norm())
        lost.append(absorbed)
        if absorber is None:
            _guard_edges(psi)

    psi = field0.amplitudes.astype(complex)
    z = field0.z
    sample(psi, z)
    for j in range(1, n_steps + 1):
        psi, da = stepper.step(psi, z)
        absorbed += da
        z = field0.z + j * dz
        if j % every == 0 or j == n_steps:
            sample(psi, z)
    return PropagationRecord(z_samples=np.array(zs), x=grid.x[keep], intensity=np.array(cols).T,
                             P_L=np.array(pl), P_R=np.array(pr), norm=np.array(norms),
                             absorbed=np.array(lost), frame=field0.frame,
                             final=WaveField(grid, psi, z, field0.frame))


def fluorescence_render(record: PropagationRecord, absorption_length: float = 6000.0,
                        per_frame_rescale: bool = False) -> np.ndarray:
    """Fluorescence proxy I(x, z) = |psi|^2 exp(-z/l_abs), optionally normalized per z column."""
    if record.intensity.size == 0:
        raise ValueError("empty record")
    if not absorption_length > 0:
        raise ValueError("absorption_length must be positive")
    image = record.intensity * np.exp(-record.z_samples / absorption_length)[None, :]
    if per_frame_rescale:
        peak = image.max(axis=0, keepdims=True)
        image = image / np.where(peak > 0, peak, 1.0)
    return image
