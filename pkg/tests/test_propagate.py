import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdt_sim.errors import StabilityError
from cdt_sim.geometry import Grid, WaveguideGeometry, effective_index
from cdt_sim.propagate import (Absorber, Frame, Launch, SplitStepper, WaveField, check_domain, fluorescence_render,
                               PropagationRecord, initial_field, inverse_kh_transform, kh_transform, populations, propagate_record,
                               split_power, step_kh, step_lab)
from cdt_sim.spectrum import inner


def test_gaussian_launch_is_normalized_and_centred():
    geom = WaveguideGeometry()
    f = initial_field(Launch.GAUSSIAN_LEFT, geom)
    assert f.norm() == pytest.approx(1.0, abs=1e-12)
    x = f.grid.x
    assert np.sum(x * f.intensity()) * f.grid.dx == pytest.approx(-geom.a / 2, abs=1e-9)
    bent = geom.with_(A=7.3)
    g = initial_field(Launch.GAUSSIAN_LEFT, bent)
    assert np.sum(x * g.intensity()) * g.grid.dx == pytest.approx(-geom.a / 2 + 7.3, abs=1e-9)


def test_mode_launch_needs_states():
    with pytest.raises(ValueError):
        initial_field(Launch.MODE_UL, WaveguideGeometry())


def test_straight_guide_matches_two_mode_evolution(uncalibrated):
    """Oracle: u_L evolves as xi1 e^{-i E1 z/lbar} + xi2 e^{-i E2 z/lbar} (up to the launch coefficients)."""
    geom, cache = uncalibrated
    potential, bs = cache.get()
    f0 = initial_field(Launch.MODE_UL, geom, bs)
    z_end = 3000.0
    rec = propagate_record(f0, geom, potential, z_end, 250.0, dz=0.5, absorber=None)
    dx = bs.grid.dx
    c0 = np.array([inner(bs.states[l], f0.amplitudes, dx) for l in range(2)])
    lb = geom.lambda_bar
    final = rec.final.amplitudes
    for l in range(2):
        got = inner(bs.states[l], final, dx)
        want = c0[l] * np.exp(-1j * bs.energies[l] * z_end / lb)
        assert abs(got - want) < 2e-3
    for z, pl in zip(rec.z_samples, rec.P_L):
        psi = sum(c0[l] * np.exp(-1j * bs.energies[l] * z / lb) * bs.states[l] for l in range(2))
        left, _ = split_power(np.abs(psi) ** 2, bs.grid, 0.0)
        assert pl == pytest.approx(left, abs=2e-3)
    assert rec.norm[-1] == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 25), st.floats(1000, 8000), st.sampled_from([Frame.LAB, Frame.KH]))
def test_split_step_is_unitary_without_absorber(A, Lambda, frame):
    geom = WaveguideGeometry(A=A, Lambda=Lambda)
    grid = Grid(-60, 60, 0.1)
    pot = _cheap_potential(geom, grid)
    stepper = SplitStepper(geom, pot, 1.0, frame)
    psi = initial_field(Launch.GAUSSIAN_LEFT, geom, grid=grid, frame=Frame.LAB).amplitudes
    n0 = np.sum(np.abs(psi) ** 2)
    z = 0.0
    for _ in range(200):
        psi, lost = stepper.step(psi, z)
        z += 1.0
        assert lost == 0.0
    assert np.sum(np.abs(psi) ** 2) == pytest.approx(n0, rel=1e-12)


_POT = {}


def _cheap_potential(geom, grid):
    key = (grid, geom.n_s)
    if key not in _POT:
        _POT[key] = effective_index(geom.with_(A=0.0), grid, check=False)
    return _POT[key]


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 5000), st.floats(0.5, 20))
def test_kh_transform_round_trip(z, A):
    geom = WaveguideGeometry(A=A, Lambda=2000)
    grid = Grid(-60, 60, 0.1)
    f = initial_field(Launch.GAUSSIAN_LEFT, geom, grid=grid)
    f = WaveField(grid, f.amplitudes, z, Frame.LAB)
    back = inverse_kh_transform(kh_transform(f, geom), geom)
    np.testing.assert_allclose(back.amplitudes, f.amplitudes, atol=1e-10)
    assert kh_transform(f, geom).norm() == pytest.approx(f.norm(), rel=1e-12)


def test_frame_mismatch_is_rejected():
    geom = WaveguideGeometry(A=5)
    grid = Grid(-60, 60, 0.1)
    pot = _cheap_potential(geom, grid)
    f = initial_field(Launch.GAUSSIAN_LEFT, geom, grid=grid)
    with pytest.raises(ValueError):
        step_kh(f, pot, geom, 0.5)
    with pytest.raises(ValueError):
        inverse_kh_transform(f, geom)


def test_lab_and_kh_agree_over_short_run(uncalibrated):
    geom, cache = uncalibrated
    potential, bs = cache.get()
    bent = geom.with_(A=7.3, Lambda=2000)
    f0 = initial_field(Launch.GAUSSIAN_LEFT, bent, bs)
    lab = propagate_record(f0, bent, potential, 3000, 50, dz=0.5)
    kh = propagate_record(kh_transform(f0, bent), bent, potential, 3000, 50, dz=0.5)
    np.testing.assert_allclose(lab.P_L, kh.P_L, atol=1e-3)
    np.testing.assert_allclose(lab.P_R, kh.P_R, atol=1e-3)


def test_absorber_bookkeeping(uncalibrated):
    geom, cache = uncalibrated
    potential, bs = cache.get()
    bent = geom.with_(A=5.5, Lambda=1500)
    f0 = initial_field(Launch.GAUSSIAN_LEFT, bent, bs)
    rec = propagate_record(f0, bent, potential, 3000, 100, dz=0.5, absorber=Absorber())
    np.testing.assert_allclose(rec.norm + rec.absorbed, 1.0, atol=1e-10)
    assert np.all(np.diff(rec.norm) <= 1e-15)
    np.testing.assert_allclose(rec.P_L + rec.P_R, rec.norm, atol=1e-12)


def test_step_functions_advance_z_and_guard_edges():
    geom = WaveguideGeometry()
    grid = Grid(-60, 60, 0.1)
    pot = _cheap_potential(geom, grid)
    f = initial_field(Launch.GAUSSIAN_CENTER, geom, grid=grid)
    g = step_lab(f, geom, pot, 0.5)
    assert g.z == 0.5 and g.norm() == pytest.approx(1.0, abs=1e-12)
    wide = WaveField(grid, np.ones(grid.n, complex) / np.sqrt(grid.n * grid.dx))
    with pytest.raises(StabilityError):
        step_lab(wide, geom, pot, 0.5)


def test_domain_check():
    with pytest.raises(StabilityError):
        check_domain(WaveguideGeometry(A=20.5), Grid(-60, 60, 0.1), Absorber())
    check_domain(WaveguideGeometry(A=20.5), Grid(-100, 100, 0.1), Absorber())


@given(st.floats(-30, 30))
def test_split_power_partitions_total(c):
    grid = Grid(-40, 40, 0.1)
    I = np.exp(-((grid.x - 3) / 5) ** 2)
    left, right = split_power(I, grid, c)
    assert left + right == pytest.approx(np.sum(I) * grid.dx, rel=1e-12)
    assert left >= 0 and right >= 0


def test_populations_follow_moving_divider():
    geom = WaveguideGeometry(A=10, Lambda=2000)
    grid = Grid(-60, 60, 0.1)
    f = initial_field(Launch.GAUSSIAN_RIGHT, geom, grid=grid)
    pl, pr = populations(f, geom)
    assert pr > 0.99 and pl < 0.01


def test_sample_planes_and_length_guard(uncalibrated):
    geom, cache = uncalibrated
    potential, bs = cache.get()
    f0 = initial_field(Launch.GAUSSIAN_LEFT, geom, bs)
    rec = propagate_record(f0, geom, potential, 100, 25, dz=0.5)
    np.testing.assert_allclose(rec.z_samples, [0, 25, 50, 75, 100])
    assert rec.intensity.shape == (rec.x.size, 5)
    with pytest.raises(ValueError):
        propagate_record(f0, geom, potential, geom.L + 1, 25)
    with pytest.raises(ValueError):
        propagate_record(f0, geom, potential, 100, 0.1, dz=0.5)


def _synthetic_record():
    z = np.linspace(0, 12000, 121)
    x = np.linspace(-10, 10, 5)
    I = np.ones((5, z.size))
    return PropagationRecord(z, x, I, np.ones_like(z), np.zeros_like(z), np.ones_like(z), np.zeros_like(z))


def test_fluorescence_decays_exponentially():
    rec = _synthetic_record()
    img = fluorescence_render(rec, absorption_length=6000)
    np.testing.assert_allclose(img[0], np.exp(-rec.z_samples / 6000), rtol=1e-14)
    norm = fluorescence_render(rec, 6000, per_frame_rescale=True)
    np.testing.assert_allclose(norm.max(axis=0), 1.0)
    with pytest.raises(ValueError):
        fluorescence_render(rec, absorption_length=0)
