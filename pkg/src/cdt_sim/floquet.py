"""Quasienergies of the driven tunnelling doublet and the (Lambda, A) crossing manifold.

The doublet {xi_1, xi_2} is driven by -F(z) x with F(z) = F0 cos(2 pi z/Lambda);
in that basis H2(z) = [[E1, -F mu12], [-F mu12, E2]].
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import j0, jn_zeros

from .errors import NoCrossingInBracket, StepTooLarge
from .geometry import WaveguideGeometry, ac_force
from .spectrum import TwoLevelSystem

BESSEL_J0_FIRST_ZERO = float(jn_zeros(0, 1)[0])
UNITARITY_TOL = 1e-9
CONVERGENCE_TOL = 1e-9
CROSSING_TOL = 1e-4


@dataclass(frozen=True)
class QuasienergyResult:
    epsilon1: float
    epsilon2: float
    delta_epsilon: float
    Lambda: float
    A: float


@dataclass
class ManifoldCurve:
    Lambda: np.ndarray
    A_star: np.ndarray
    delta_ratio: np.ndarray
    omitted: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.Lambda)

    def slope(self, Lambda_max: float | None = None) -> float:
        """Least-squares slope of A* = s * Lambda through the origin."""
        m = np.ones(len(self), bool) if Lambda_max is None else self.Lambda <= Lambda_max
        lam, a = self.Lambda[m], self.A_star[m]
        return float(np.dot(lam, a) / np.dot(lam, lam))


def _step_unitaries(tls: TwoLevelSystem, geom: WaveguideGeometry, z0: float, h: float, n: int) -> np.ndarray:
    """Fourth-order Magnus step propagators for n consecutive steps of length h, shape (n, 2, 2).

    With H2 = mean + hx(z) sx + hz sz, the two-point Magnus exponent is
    K = k0 + kx sx + ky sy + kz sz (commutator term along sy), and
    exp(-iK) is evaluated in closed form, so every step is exactly unitary.
    """
    lb = tls.lambda_bar
    start = z0 + np.arange(n) * h
    offset = h * math.sqrt(3) / 6
    hx1 = -ac_force(geom, start + h / 2 - offset) * tls.mu12
    hx2 = -ac_force(geom, start + h / 2 + offset) * tls.mu12
    mean = 0.5 * (tls.E1 + tls.E2)
    hz = 0.5 * (tls.E1 - tls.E2)
    kx = h * (hx1 + hx2) / (2 * lb)
    ky = math.sqrt(3) / 6 * (h / lb) ** 2 * hz * (hx1 - hx2)
    kz = np.full(n, h * hz / lb)
    r = np.sqrt(kx**2 + ky**2 + kz**2)
    s = np.sin(r) / r
    c = np.cos(r)
    phase = np.exp(-1j * mean * h / lb)
    U = np.empty((n, 2, 2), complex)
    U[:, 0, 0] = phase * (c - 1j * s * kz)
    U[:, 1, 1] = phase * (c + 1j * s * kz)
    U[:, 0, 1] = phase * (-1j * s * kx - s * ky)
    U[:, 1, 0] = phase * (-1j * s * kx + s * ky)
    return U


def _ordered_product(U: np.ndarray) -> np.ndarray:
    """U[n-1] @ ... @ U[1] @ U[0] by pairwise reduction."""
    while len(U) > 1:
        if len(U) % 2:
            U = np.concatenate([U, np.eye(2, dtype=complex)[None]])
        U = np.matmul(U[1::2], U[0::2])
    return U[0]


def _unitarity_error(U: np.ndarray) -> float:
    return float(np.abs(U.conj().T @ U - np.eye(2)).max())


def monodromy(tls: TwoLevelSystem, geom: WaveguideGeometry, n_steps: int | None = None,
              max_steps: int = 2**18) -> np.ndarray:
    """One-period evolution operator U(Lambda) of the driven doublet.

    Product of fourth-order Magnus step exponentials; with n_steps=None the
    step count doubles from 64 until U changes by less than 1e-9 entrywise.
    """
    period = geom.Lambda
    if n_steps is not None:
        U = _ordered_product(_step_unitaries(tls, geom, 0.0, period / n_steps, n_steps))
    else:
        n = 64
        U = _ordered_product(_step_unitaries(tls, geom, 0.0, period / n, n))
        while True:
            n *= 2
            if n > max_steps:
                raise StepTooLarge(f"monodromy not converged with {max_steps} steps")
            finer = _ordered_product(_step_unitaries(tls, geom, 0.0, period / n, n))
            change = np.abs(finer - U).max()
            U = finer
            if change < CONVERGENCE_TOL:
                break
    err = _unitarity_error(U)
    if err > UNITARITY_TOL:
        raise StepTooLarge(f"monodromy unitarity deviation {err:.2e}")
    return U


def converged_steps(tls: TwoLevelSystem, geom: WaveguideGeometry) -> int:
    """Smallest power-of-two step count (>= 64) at which the monodromy has converged."""
    n = 64
    U = monodromy(tls, geom, n)
    while True:
        finer = monodromy(tls, geom, 2 * n)
        if np.abs(finer - U).max() < CONVERGENCE_TOL:
            return 2 * n
        n, U = 2 * n, finer


def zone_width(Lambda: float, lambda_bar: float) -> float:
    """Quasienergy Brillouin-zone width lbar * omega."""
    return 2 * math.pi * lambda_bar / Lambda


def quasienergies(U: np.ndarray, Lambda: float, lambda_bar: float, A: float = float("nan")) -> QuasienergyResult:
    """Quasienergies -(lbar/Lambda) arg(eig U), in [-lbar*omega/2, lbar*omega/2), ascending."""
    width = zone_width(Lambda, lambda_bar)
    eps = -(lambda_bar / Lambda) * np.angle(np.linalg.eigvals(U))
    eps = (eps + width / 2) % width - width / 2
    e1, e2 = sorted(float(e) for e in eps)
    d = (e2 - e1) % width
    return QuasienergyResult(epsilon1=e1, epsilon2=e2, delta_epsilon=min(d, width - d), Lambda=Lambda, A=A)


def delta_epsilon(tls: TwoLevelSystem, geom: WaveguideGeometry, n_steps: int | None = None) -> float:
    return quasienergies(monodromy(tls, geom, n_steps), geom.Lambda, tls.lambda_bar, geom.A).delta_epsilon


def bessel_argument(tls: TwoLevelSystem, A: float, Lambda: float, argument_scale: float = 1.0) -> float:
    return argument_scale * 2 * math.pi * abs(tls.mu12) * tls.n_s * A / (tls.lambda_bar * Lambda)


def bessel_splitting(tls: TwoLevelSystem, A: float, Lambda: float, argument_scale: float = 1.0) -> float:
    """High-frequency estimate (E2 - E1) J0(2 pi mu12 n_s A / (lbar Lambda)), signed.

    argument_scale multiplies the Bessel argument (1 reproduces the formula as
    printed; see `fit_argument_scale`).
    """
    return tls.splitting * float(j0(bessel_argument(tls, A, Lambda, argument_scale)))


def high_frequency_ratio(tls: TwoLevelSystem, Lambda: float) -> float:
    """lbar*omega / (E2 - E1); the Bessel estimate needs this to be large."""
    return zone_width(Lambda, tls.lambda_bar) / tls.splitting


def bessel_zero_amplitude(tls: TwoLevelSystem, Lambda: float, argument_scale: float = 1.0) -> float:
    """Amplitude A at which the Bessel estimate vanishes (first zero of J0); linear in Lambda."""
    return BESSEL_J0_FIRST_ZERO * tls.lambda_bar * Lambda / (argument_scale * 2 * math.pi * abs(tls.mu12) * tls.n_s)


def crossing_amplitude(tls: TwoLevelSystem, geom: WaveguideGeometry, Lambda: float,
                       bracket: tuple[float, float] | None = None, n_coarse: int = 120) -> float:
    """First amplitude A* in the bracket where the doublet quasienergies cross.

    delta_epsilon >= 0 touches zero at a crossing, so the root is located as a
    sub-tolerance minimum: coarse scan, then golden-section refinement of each
    local minimum in increasing A.
    """
    if bracket is None:
        seed = bessel_zero_amplitude(tls, Lambda)
        bracket = (0.2 * seed, 2.0 * seed)
    lo, hi = bracket
    tol = CROSSING_TOL * tls.splitting
    n_steps = converged_steps(tls, geom.with_(A=0.5 * (lo + hi), Lambda=Lambda))

    def f(A):
        return delta_epsilon(tls, geom.with_(A=float(A), Lambda=Lambda), n_steps)

    grid = np.linspace(lo, hi, n_coarse)
    values = np.array([f(A) for A in grid])
    best = math.inf
    for i in range(n_coarse):
        left = values[i - 1] if i > 0 else math.inf
        right = values[i + 1] if i < n_coarse - 1 else math.inf
        if not (values[i] <= left and values[i] <= right):
            continue
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_coarse - 1)]
        res = minimize_scalar(f, bracket=(a, grid[i], b), method="golden", tol=1e-10) if 0 < i < n_coarse - 1 \
            else minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-9})
        best = min(best, float(res.fun))
        if res.fun < tol and lo <= res.x <= hi:
            return float(res.x)
    raise NoCrossingInBracket(
        f"min delta_epsilon/(E2-E1) = {best / tls.splitting:.3g} over A in [{lo:.3g}, {hi:.3g}] at Lambda={Lambda}")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CDT_SIM_THREADS", "1")))
    except ValueError:
        return 1


def manifold_scan(tls: TwoLevelSystem, geom: WaveguideGeometry, Lambda_range: tuple[float, float],
                  n_samples: int, bracket_factors: tuple[float, float] = (0.02, 2.0)) -> ManifoldCurve:
    """Crossing amplitude A*(Lambda) on a uniform Lambda grid; samples with no crossing are omitted.

    The search bracket is bracket_factors times the Bessel first-zero seed; the
    low end is wide so the first branch is followed where it bends back to
    A -> 0 as Lambda approaches the resonance 4 pi lbar / (E2 - E1).
    """
    lo, hi = Lambda_range
    limit = 4 * math.pi * tls.lambda_bar / tls.splitting
    if not (0 < lo <= hi < limit):
        raise ValueError(f"Lambda_range must lie inside (0, {limit:.0f}) um")
    lambdas = np.linspace(lo, hi, n_samples)

    def one(lam):
        try:
            seed = bessel_zero_amplitude(tls, float(lam))
            bracket = (bracket_factors[0] * seed, bracket_factors[1] * seed)
            a = crossing_amplitude(tls, geom, float(lam), bracket)
        except NoCrossingInBracket:
            return None
        return a, delta_epsilon(tls, geom.with_(A=a, Lambda=float(lam))) / tls.splitting

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(one, lambdas))
    keep = [i for i, r in enumerate(results) if r is not None]
    return ManifoldCurve(Lambda=lambdas[keep], A_star=np.array([results[i][0] for i in keep]),
                         delta_ratio=np.array([results[i][1] for i in keep]),
                         omitted=[float(lambdas[i]) for i, r in enumerate(results) if r is None])


def fit_argument_scale(curve: ManifoldCurve, tls: TwoLevelSystem, Lambda_max: float = 1000.0) -> float:
    """Scale of the Bessel argument whose first-zero line best fits the exact crossings at Lambda <= Lambda_max."""
    unit_slope = bessel_zero_amplitude(tls, 1.0)
    return unit_slope / curve.slope(Lambda_max)


def floquet_state_oscillation(tls: TwoLevelSystem, geom: WaveguideGeometry, n_steps: int | None = None) -> float:
    """1 - min over one period of the population left in the initially occupied well state.

    0 means the well-localized state is frozen throughout the period; large
    values mean suppression only at multiples of the period.
    """
    if n_steps is None:
        n_steps = max(converged_steps(tls, geom), 1024)
    steps = _step_unitaries(tls, geom, 0.0, geom.Lambda / n_steps, n_steps)
    # the left-well state has <x> < 0: (xi1 - sign(mu12) xi2)/sqrt(2)
    c0 = np.array([1.0, -math.copysign(1.0, tls.mu12)], complex) / math.sqrt(2)
    c = c0.copy()
    worst = 1.0
    for U in steps:
        c = U @ c
        worst = min(worst, abs(np.vdot(c0, c)) ** 2)
    return 1.0 - worst
