"""Simulation of coherent destruction of tunneling of light in curved double-waveguide couplers."""

from .geometry import EffectivePotential1D, Grid, SlabGrid, WaveguideGeometry, effective_index, index_profile
from .spectrum import BoundStateSet, TwoLevelSystem, bound_states, calibrate_ns, solve_spectrum, two_level
from .propagate import Absorber, Frame, Launch, WaveField, initial_field, propagate_record
from .floquet import crossing_amplitude, delta_epsilon, manifold_scan, monodromy, quasienergies
from .scenarios import Scenario, builtin_scenarios, run_scenario
from .config import RunConfig, parse_config, serialize_config

__version__ = "0.1.0"
