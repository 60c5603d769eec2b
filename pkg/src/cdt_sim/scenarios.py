"""Named experiments: the straight coupler and the five fabricated curved couplers.

Each scenario runs a full propagation and scores it against expectations.
Provenance tags: PAPER (a value stated for the device), DERIVED (a threshold
fixed from reference runs of this model), TRIVIAL (follows by construction).
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSpan
from .floquet import delta_epsilon
from .geometry import EffectivePotential1D, Grid, SlabGrid, WaveguideGeometry
from .propagate import Absorber, Frame, Launch, PropagationRecord, initial_field, kh_transform, propagate_record
from .spectrum import BoundStateSet, solve_spectrum, tunneling_period, two_level

REFERENCE_D12 = 7940.0
REFERENCE_D13 = 545.0
PROVENANCE = ("PAPER", "DERIVED", "TRIVIAL")

_COMPARATORS = {
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


@dataclass(frozen=True)
class Expectation:
    id: str
    comparator: str  # one of < <= > >= or "within" (threshold = (target, rel_tol))
    threshold: float | tuple[float, float]
    provenance: str
    note: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def check(self, actual: float) -> bool:
        if not np.isfinite(actual):
            return False
        if self.comparator == "within":
            target, rel = self.threshold
            return abs(actual - target) <= rel * abs(target)
        return bool(_COMPARATORS[self.comparator](actual, self.threshold))

    def describe(self) -> str:
        if self.comparator == "within":
            target, rel = self.threshold
            return f"{target:g} +/- {100 * rel:g}%"
        return f"{self.comparator} {self.threshold:g}"


@dataclass(frozen=True)
class Scenario:
    name: str
    geom: WaveguideGeometry
    launch: Launch = Launch.GAUSSIAN_LEFT
    z_end: float = 24000.0
    sample_every: float = 50.0
    expectations: tuple[Expectation, ...] = ()
    description: str = ""

    @property
    def curved(self) -> bool:
        return self.geom.A > 0

    @property
    def launch_well(self) -> str:
        return "R" if self.launch in (Launch.GAUSSIAN_RIGHT, Launch.MODE_UR) else "L"


def builtin_scenarios(geom: WaveguideGeometry, launch_right: bool = False) -> list[Scenario]:
    """The seven reference scenarios on the (calibrated) base geometry."""
    base = geom.with_(A=0.0, L=24000.0)
    edge = Launch.GAUSSIAN_RIGHT if launch_right else Launch.GAUSSIAN_LEFT

    def curved(name, Lambda, A, expectations, description):
        return Scenario(name, base.with_(A=A, Lambda=Lambda), edge, 24000.0, 25.0, tuple(expectations), description)

    cdt = [Expectation("min_P_initial", ">=", 0.85, "DERIVED", "no tunnelling into the adjacent guide"),
           Expectation("delta_ratio", "<", 0.05, "PAPER", "point lies on the quasienergy crossing manifold")]
    return [
        Scenario("straight-edge", base, edge, 24000.0, 10.0, (
            Expectation("first_transfer_z", "within", (REFERENCE_D12 / 2, 0.05), "PAPER",
                        "first full transfer at half the doublet period d12 = 7.94 mm"),
            Expectation("max_P_other_near_half_d12", ">", 0.9, "PAPER", "transfer is nearly complete"),
        ), "straight coupler, one guide excited"),
        Scenario("straight-center", base, Launch.GAUSSIAN_CENTER, 24000.0, 10.0, (
            Expectation("center_period", "within", (REFERENCE_D13, 0.10), "PAPER", "xi1-xi3 beat length d13 = 545 um"),
        ), "straight coupler, fiber between the guides"),
        curved("cdt-1", 1500.0, 5.5, cdt, "point 1: CDT"),
        curved("cdt-2", 2000.0, 7.3, cdt, "point 2: CDT"),
        curved("cdt-3", 2400.0, 8.8, cdt, "point 3: CDT"),
        curved("crossing-broken-4", 2500.0, 7.9, [
            Expectation("min_P_initial", "<", 0.7, "DERIVED", "tunnelling not suppressed"),
            Expectation("strobo_aperiodicity", ">", 0.05, "DERIVED", "|P(Lambda) - P(2 Lambda)|: periodicity broken"),
            Expectation("continuous_suppression", "<", 0.7, "DERIVED"),
        ], "point 4: off the crossing manifold"),
        curved("strobo-5", 6000.0, 20.5, [
            Expectation("strobo_suppression", ">=", 0.85, "DERIVED", "P(k Lambda), k = 1..4"),
            Expectation("min_P_initial", "<", 0.75, "DERIVED", "light tunnels forth and back within a period"),
        ], "point 5: stroboscopic suppression only"),
    ]


def scenario_by_name(geom: WaveguideGeometry, name: str, launch_right: bool = False) -> Scenario:
    for s in builtin_scenarios(geom, launch_right):
        if s.name == name:
            return s
    raise KeyError(name)


def initial_population(record: PropagationRecord, well: str = "L") -> np.ndarray:
    return record.P_L if well == "L" else record.P_R


def cdt_quality(record: PropagationRecord, Lambda: float, well: str = "L") -> tuple[float, float]:
    """(stroboscopic, continuous) suppression: min of the launch-well population at z = k*Lambda, and over all z."""
    span = record.z_samples[-1] - record.z_samples[0]
    if span < 2 * Lambda * (1 - 1e-9):
        raise InsufficientSpan(f"record spans {span:g} um, need two periods ({2 * Lambda:g} um)")
    p = initial_population(record, well)
    ks = range(1, int(math.floor(span / Lambda + 1e-9)) + 1)
    strobo = min(p[record.sample_at(record.z_samples[0] + k * Lambda)] for k in ks)
    return float(strobo), float(p.min())


def stroboscopic_values(record: PropagationRecord, Lambda: float, ks, well: str = "L") -> list[float]:
    p = initial_population(record, well)
    return [float(p[record.sample_at(k * Lambda)]) for k in ks]


def first_transfer(record: PropagationRecord, well: str = "L") -> tuple[float, float]:
    """(z, P) of the first maximum of the population in the other guide.

    The first lobe is where the other-guide population first exceeds half its
    overall maximum, up to the next drop below that level.
    """
    other = record.P_R if well == "L" else record.P_L
    level = 0.5 * other.max()
    above = np.flatnonzero(other > level)
    if above.size == 0:
        return float("nan"), float("nan")
    start = above[0]
    after = np.flatnonzero(other[start:] <= level)
    stop = start + (after[0] if after.size else other.size - start)
    i = start + int(np.argmax(other[start:stop]))
    return float(record.z_samples[i]), float(other[i])


def dominant_period(z: np.ndarray, signal: np.ndarray, min_period: float | None = None) -> float:
    """Period of the strongest Fourier component of a uniformly sampled signal (zero-padded, parabolic peak)."""
    dz = z[1] - z[0]
    s = signal - signal.mean()
    s = s * np.hanning(s.size)
    n = 16 * s.size
    spec = np.abs(np.fft.rfft(s, n))
    freqs = np.fft.rfftfreq(n, dz)
    valid = freqs > 0
    if min_period is not None:
        valid &= freqs < 1 / min_period
    i = int(np.flatnonzero(valid)[np.argmax(spec[valid])])
    if 0 < i < spec.size - 1:
        a, b, c = np.log(spec[i - 1:i + 2] + 1e-300)
        i = i + 0.5 * (a - c) / (a - 2 * b + c)
    return float(1 / (i * freqs[1]))


def center_period(record: PropagationRecord, half_width: float = 2.75) -> float:
    """Beat period of the power near the guide midpoint (waveguide frame)."""
    band = np.abs(record.x) <= half_width
    power = record.intensity[band].sum(axis=0)
    return dominant_period(record.z_samples, power)


@dataclass
class ScenarioReport:
    scenario: str
    params: dict
    metrics: dict
    expectations: list[dict]
    record: PropagationRecord | None = field(default=None, repr=False)
    artifacts: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.expectations)

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "params": self.params, "metrics": self.metrics,
                "expectations": self.expectations, "artifacts": list(self.artifacts), "pass": self.passed}


@dataclass
class SpectrumCache:
    """Potential and bound states shared by all scenarios on one base geometry."""

    geom: WaveguideGeometry
    grid: Grid = field(default_factory=Grid)
    slab: SlabGrid = field(default_factory=SlabGrid)
    potential: EffectivePotential1D | None = None
    states: BoundStateSet | None = None

    def get(self) -> tuple[EffectivePotential1D, BoundStateSet]:
        if self.potential is None:
            self.potential, self.states = solve_spectrum(self.geom.with_(A=0.0), self.grid, self.slab)
        return self.potential, self.states


def scenario_metrics(s: Scenario, record: PropagationRecord, bs: BoundStateSet) -> dict:
    geom = s.geom
    well = s.launch_well
    p = initial_population(record, well)
    metrics = {
        "min_P_initial": float(p.min()),
        "final_P_initial": float(p[-1]),
        "final_norm": float(record.norm[-1]),
        "absorbed": float(record.absorbed[-1]),
    }
    d12 = tunneling_period(bs.energies[0], bs.energies[1], geom.lambda_bar)
    metrics["d12_um"] = float(d12)
    if s.curved:
        strobo, cont = cdt_quality(record, geom.Lambda, well)
        metrics["strobo_suppression"] = strobo
        metrics["continuous_suppression"] = cont
        p1, p2 = stroboscopic_values(record, geom.Lambda, (1, 2), well)
        metrics["strobo_aperiodicity"] = abs(p1 - p2)
        tls = two_level(bs, geom)
        metrics["delta_ratio"] = delta_epsilon(tls, geom) / tls.splitting
    elif s.launch is Launch.GAUSSIAN_CENTER:
        metrics["center_period"] = center_period(record)
    else:
        z_first, p_first = first_transfer(record, well)
        metrics["first_transfer_z"] = z_first
        other = record.P_R if well == "L" else record.P_L
        near = np.abs(record.z_samples - REFERENCE_D12 / 2) <= 0.05 * REFERENCE_D12 / 2
        metrics["max_P_other_near_half_d12"] = float(other[near].max())
        half = record.z_samples <= d12 / 2
        metrics["continuous_suppression_half_d12"] = float(p[half].min())
    return metrics


def run_scenario(s: Scenario, cache: SpectrumCache | None = None, dz: float = 0.5,
                 absorber: Absorber | None = Absorber(), frame: Frame | str = Frame.LAB) -> ScenarioReport:
    """Propagate a scenario and score it; failed expectations are reported, not raised."""
    cache = cache or SpectrumCache(s.geom.with_(A=0.0))
    potential, bs = cache.get()
    field0 = initial_field(s.launch, s.geom, bs, potential.grid, Frame.LAB)
    if Frame(frame) is Frame.KH:
        field0 = kh_transform(field0, s.geom)
    record = propagate_record(field0, s.geom, potential, s.z_end, s.sample_every, dz=dz, absorber=absorber)
    metrics = scenario_metrics(s, record, bs)
    results = []
    for e in s.expectations:
        actual = metrics.get(e.id, float("nan"))
        results.append({"id": e.id, "expected": e.describe(), "actual": actual, "pass": e.check(actual),
                        "provenance": e.provenance, "note": e.note})
    params = {"A_um": s.geom.A, "Lambda_um": s.geom.Lambda if s.curved else None, "n_s": s.geom.n_s,
              "launch": s.launch.value, "frame": Frame(frame).value, "z_end_um": s.z_end,
              "sample_every_um": s.sample_every, "dz_um": dz,
              "absorber": None if absorber is None else {"width_um": absorber.width, "strength": absorber.strength}}
    return ScenarioReport(s.name, params, metrics, results, record)
