import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lambdamem.analysis import peak_trajectory
from lambdamem.cmb import (BlochEnsembleState, bloch_rhs, check_run_hygiene, clamp_field,
                           midpoint_values, simulate, step_bloch, step_maxwell)
from lambdamem.core import DopplerSpec, MediumConfig, NormingConstantInit, SolverSettings, ground_state
from lambdamem.doppler import BroadeningCoefficients
from lambdamem.errors import GridUnderresolved, StateBlowup
from lambdamem.ist import one_soliton_fields, pulse_area, storage_norming_constant

from conftest import random_density

NO_DOPPLER = DopplerSpec()


def sech_pair(t, theta_c=0.2 * math.pi):
    init = storage_norming_constant(theta_c)
    return one_soliton_fields(_lam(), init, BroadeningCoefficients(1.0, 0.0), 0.0, t)


def _lam():
    from lambdamem.core import SpectralParameter
    return SpectralParameter(0.0, 1.0)


# right-hand side

def test_ground_state_is_stationary():
    assert np.all(bloch_rhs(ground_state(), 0, 0, 0.3, 0.1) == 0)


def test_pure_decay_branches_equally():
    out = bloch_rhs(np.diag([0, 0, 1.0]), 0, 0, 0.0, 0.2)
    assert np.allclose(np.diag(out).real, [0.1, 0.1, -0.2], atol=1e-15)


def test_decay_rates_of_coherences():
    rho = np.full((3, 3), 0.1, dtype=complex)
    np.fill_diagonal(rho, [0.4, 0.3, 0.3])
    out = bloch_rhs(rho, 0, 0, 0.0, 0.2)
    assert out[0, 2] == pytest.approx(-0.1 * 0.1) and out[1, 2] == pytest.approx(-0.1 * 0.1)
    assert out[0, 1] == 0


@given(st.integers(0, 10 ** 6), st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5),
       st.floats(-3, 3), st.floats(0, 1))
def test_rhs_traceless_and_hermitian(seed, om_s, om_c, delta, gamma):
    rho = random_density(np.random.default_rng(seed))
    out = bloch_rhs(rho, om_s, om_c, delta, gamma)
    assert abs(np.trace(out)) < 1e-12
    assert np.allclose(out, out.conj().T, atol=1e-12)


def test_rhs_matches_explicit_commutator():
    rng = np.random.default_rng(7)
    rho = random_density(rng)
    om_s, om_c, d = 0.7 - 0.2j, 0.3j, 0.4
    h = -0.5 * np.array([[0, 0, om_s], [0, 0, om_c], [np.conj(om_s), np.conj(om_c), -2 * d]])
    assert np.allclose(bloch_rhs(rho, om_s, om_c, d, 0.0), -1j * (h @ rho - rho @ h), atol=1e-14)


# Bloch integration

def rabi_run(dt, omega=1.3, periods=1.0):
    n = int(round(periods * 2 * math.pi / omega / dt))
    ens = BlochEnsembleState.uniform(ground_state(), [0.0], [1.0])
    f = (np.complex128(omega), np.complex128(0))
    for _ in range(n):
        ens = step_bloch(ens, f, f, f, dt)
    return n * dt, ens.rho[0]


def test_rabi_oscillation():
    omega = 1.3
    period = 2 * math.pi / omega
    for frac in (0.25, 0.5, 1.0):
        t, rho = rabi_run(period / 2000, omega, frac)
        assert rho[2, 2].real == pytest.approx(math.sin(omega * t / 2) ** 2, abs=1e-6)


def test_zero_fields_leave_ensemble_unchanged():
    rng = np.random.default_rng(3)
    z = (np.complex128(0), np.complex128(0))
    # resonant nodes: nothing moves
    rho = np.stack([random_density(rng) for _ in range(4)])
    ens = BlochEnsembleState(rho, np.zeros(4), np.full(4, 0.25))
    assert np.array_equal(step_bloch(ens, z, z, z, 0.1).rho, rho)
    # detuned nodes only rotate optical coherences, so ground-block states stay put
    rho[:, :2, 2] = rho[:, 2, :2] = 0
    rho /= np.trace(rho, axis1=1, axis2=2).real[:, None, None]
    ens = BlochEnsembleState(rho, np.linspace(-1, 1, 4), np.full(4, 0.25))
    assert np.array_equal(step_bloch(ens, z, z, z, 0.1).rho, rho)


def test_blowup_detected():
    ens = BlochEnsembleState.uniform(ground_state(), [0.0], [1.0])
    f = (np.complex128(500.0), np.complex128(0))
    with pytest.raises(StateBlowup):
        step_bloch(ens, f, f, f, 1.0)


def test_midpoints_exact_for_cubics():
    x = np.linspace(0, 1, 11)
    f = 2 * x ** 3 - x ** 2 + 0.5
    xm = 0.5 * (x[:-1] + x[1:])
    assert np.allclose(midpoint_values(f)[1:-1], (2 * xm ** 3 - xm ** 2 + 0.5)[1:-1], atol=1e-14)


def test_kernel_matches_numpy_stepper():
    settings = SolverSettings(dt=0.05, dz=0.05, t_window=(-10.0, 10.0), clamp_threshold=0.0)
    t = settings.t_axis()
    om_s, om_c = sech_pair(t)
    doppler = DopplerSpec.from_width(0.8, 0.3)
    res = simulate(MediumConfig(gamma=0.1, z_length=0.05), doppler, (om_s, om_c), settings, n_nodes=6)
    from lambdamem.doppler import quadrature_nodes
    d, w = quadrature_nodes(doppler, 6)
    ens = BlochEnsembleState.uniform(ground_state(), d, w)
    ms, mc = midpoint_values(om_s), midpoint_values(om_c)
    for i in range(t.size - 1):
        ens = step_bloch(ens, (om_s[i], om_c[i]), (ms[i], mc[i]), (om_s[i + 1], om_c[i + 1]), 0.05, 0.1)
    assert np.max(np.abs(res.density.rho[0] - ens.rho)) < 1e-12


def final_ground_state(dt, t_window=(-10.0, 10.0)):
    settings = SolverSettings(dt=dt, dz=0.1, t_window=t_window, clamp_threshold=0.0)
    t = settings.t_axis()
    om_s, om_c = sech_pair(t)
    # a detuned single node keeps the final state away from trivial values
    res = simulate(MediumConfig(gamma=0.05, z_length=0.1), DopplerSpec(mean_detuning=0.4), (om_s, om_c), settings)
    return res.density.rho[0, 0]


def richardson_ratio(values):
    a, b, c = values
    return np.max(np.abs(a - b)) / np.max(np.abs(b - c))


@pytest.mark.filterwarnings("ignore::lambdamem.errors.GridUnderresolved")
def test_rk4_fourth_order_in_dt():
    ratio = richardson_ratio([final_ground_state(dt) for dt in (0.2, 0.1, 0.05)])
    assert 16 * 0.8 <= ratio <= 16 * 1.2


def final_field(dz):
    settings = SolverSettings(dt=0.05, dz=dz, t_window=(-10.0, 14.0), clamp_threshold=0.0)
    t = settings.t_axis()
    om_s, om_c = sech_pair(t, 0.5 * math.pi)
    res = simulate(MediumConfig(z_length=1.0), NO_DOPPLER, (om_s, om_c), settings)
    return np.concatenate([res.fields.omega_s[-1], res.fields.omega_c[-1]])


def test_heun_second_order_in_dz():
    ratio = richardson_ratio([final_field(dz) for dz in (0.2, 0.1, 0.05)])
    assert 4 * 0.8 <= ratio <= 4 * 1.2


# Maxwell step

def test_zero_coherence_leaves_fields():
    om = np.linspace(0, 1, 5) + 0j
    zero = np.zeros(5, dtype=complex)
    s, c = step_maxwell(om, 2 * om, zero, zero, 0.1, 2.0, lambda a, b: (zero, zero))
    assert np.array_equal(s, om) and np.array_equal(c, 2 * om)


def test_clamp_zeroes_small_samples():
    out = clamp_field(np.array([1e-6, -2e-5, 3e-6j, 1.0]), 1e-5)
    assert np.array_equal(out, [0, -2e-5, 0, 1.0])
    assert np.array_equal(clamp_field(np.array([1e-9]), 0.0), [1e-9])


def test_2pi_control_decoupled_from_empty_medium():
    settings = SolverSettings(t_window=(-15.0, 15.0))
    t = settings.t_axis()
    om_c = 2 / np.cosh(t) + 0j
    res = simulate(MediumConfig(z_length=10.0), NO_DOPPLER, (np.zeros_like(om_c), om_c), settings)
    assert np.max(np.abs(res.fields.omega_c - om_c[None, :])) < 1e-4
    assert np.max(np.abs(res.fields.omega_s)) == 0


# full runs

@pytest.fixture(scope="module")
def n1_run():
    settings = SolverSettings(t_window=(-10.0, 30.0))
    init = NormingConstantInit(1.0, 0.025)
    t = settings.t_axis()
    om = one_soliton_fields(_lam(), init, BroadeningCoefficients(1.0, 0.0), 0.0, t)
    res = simulate(MediumConfig(z_length=10.0), NO_DOPPLER, om, settings)
    return init, res


def test_n1_run_matches_closed_form(n1_run):
    init, res = n1_run
    f = res.fields
    exact_s, exact_c = one_soliton_fields(_lam(), init, BroadeningCoefficients(1.0, 0.0),
                                          f.z_axis[:, None], f.t_axis[None, :])
    scale = max(np.max(np.abs(exact_s)), np.max(np.abs(exact_c)))
    assert np.max(np.abs(f.omega_s - exact_s)) < 1e-3 * scale
    assert np.max(np.abs(f.omega_c - exact_c)) < 1e-3 * scale


def test_n1_run_conserves_two_pulse_area(n1_run):
    _, res = n1_run
    f = res.fields
    for k in range(0, f.z_axis.size, 50):
        area = math.hypot(pulse_area(f.omega_s[k], f.t_axis, 1e-3), pulse_area(f.omega_c[k], f.t_axis, 1e-3))
        assert area == pytest.approx(2 * math.pi, rel=1e-2)


def test_n1_run_hygiene_and_return_to_ground(n1_run):
    init, res = n1_run
    assert check_run_hygiene(res) == []
    rho = res.density.averaged()
    # no excitation is left behind; the ground block holds only the imprint
    assert np.max(rho[:, 2, 2].real) < 1e-3
    assert np.max(np.abs(rho[:, :2, 2])) < 1e-3
    from lambdamem.ist import one_soliton_final_density
    exact = one_soliton_final_density(_lam(), init, BroadeningCoefficients(1.0, 0.0), res.density.z_axis, 0.0)
    assert np.max(np.abs(rho[:, :2, :2] - exact[:, :2, :2])) < 1e-3


def test_underresolved_pulse_warns():
    settings = SolverSettings(dt=0.05, dz=0.1, t_window=(-5.0, 5.0))
    t = settings.t_axis()
    om_c = 2 / 0.1 / np.cosh(t / 0.1) + 0j
    with pytest.warns(GridUnderresolved):
        simulate(MediumConfig(z_length=0.1), NO_DOPPLER, (np.zeros_like(om_c), om_c), settings)


def test_callable_boundary_and_snapshots():
    settings = SolverSettings(dt=0.05, dz=0.1, t_window=(-10.0, 10.0))
    res = simulate(MediumConfig(z_length=0.5), NO_DOPPLER, sech_pair, settings, snapshot_times=[0.0])
    assert set(res.snapshots) == {0.0}
    fields, density = res
    assert density.rho.shape == (6, 1, 3, 3)
    assert res.diagnostics["max_trace_error"] < 1e-6
    with pytest.raises(ValueError):
        simulate(MediumConfig(z_length=0.5), NO_DOPPLER, sech_pair, settings, snapshot_times=[99.0])


def test_decay_slows_resonant_signal():
    # with strong decay the signal peak lags further behind the lossless one
    settings = SolverSettings(dt=0.05, dz=0.05, t_window=(-10.0, 40.0))
    t = settings.t_axis()
    om = (2 / np.cosh(t) + 0j, np.zeros_like(t, dtype=complex))
    delays = []
    for gamma in (0.0, 0.05):
        res = simulate(MediumConfig(gamma=gamma, z_length=3.0), NO_DOPPLER, om, settings)
        traj = peak_trajectory(res.fields, "signal", stop_when_lost=False)
        delays.append(traj[-1][1])
    assert delays[1] > delays[0]
