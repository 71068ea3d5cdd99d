import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lambdamem.config import dumps, loads, validate_config
from lambdamem.core import (DensityField, DopplerSpec, FieldGrid, MediumConfig, NormingConstantInit,
                            SolverSettings, SpectralParameter, check_density, density_violations,
                            ground_state, is_density_matrix)
from lambdamem.doppler import distribution_value
from lambdamem.errors import ConfigError, InvalidDensityMatrix

from conftest import random_density


def test_spectral_parameter_imaginary_part_is_exact():
    for tau in (0.3, 1.0, 7.0):
        p = SpectralParameter(0.4, tau)
        assert p.lam.imag == -1.0 / tau
        assert SpectralParameter.from_complex(p.lam) == p


@pytest.mark.parametrize("tau", [0.0, -1.0, math.inf, math.nan])
def test_bad_tau_rejected(tau):
    with pytest.raises(ConfigError) as exc:
        SpectralParameter(0.0, tau)
    assert exc.value.codes == ["NonPositiveTau"]


def test_zero_norming_constant_rejected():
    with pytest.raises(ConfigError) as exc:
        NormingConstantInit(0, 0)
    assert exc.value.codes == ["ZeroNormingConstant"]


def test_sigma_finite_for_nonzero_components():
    c = NormingConstantInit(2.0, 0.05j)
    s1, s2 = c.sigma(0.5)
    assert s1 == pytest.approx(0.0)
    assert s2 == pytest.approx(math.log(0.025))
    assert c.sigma12 == pytest.approx(math.log(40.0))
    assert NormingConstantInit(1.0, 0).sigma(1.0)[1] == -math.inf


@pytest.mark.parametrize("width,mean", [(0.5, 0.0), (1.0, 1.3), (2.0, -0.6)])
def test_doppler_distribution_normalized(width, mean):
    spec = DopplerSpec.from_width(width, mean)
    x = np.linspace(mean - 12 / spec.t2star, mean + 12 / spec.t2star, 20001)
    assert np.trapezoid(distribution_value(x, spec), x) == pytest.approx(1.0, abs=1e-12)


def test_medium_config_validation():
    MediumConfig(gamma=0.0)
    with pytest.raises(ConfigError) as exc:
        MediumConfig(gamma=-0.1, z_length=0.0)
    assert exc.value.codes == ["NegativeGamma", "BadGrid"]
    rho = ground_state((0.5, 0.5, 0.0))
    rho[0, 2] = rho[2, 0] = 0.1
    with pytest.raises(ConfigError):
        MediumConfig(initial_state=rho)
    assert MediumConfig().mu == 2.0


def test_density_checker_accepts_and_rejects():
    assert is_density_matrix(ground_state())
    assert not is_density_matrix(np.zeros((3, 3)))
    bad = ground_state().copy()
    bad[0, 1] = 0.1
    assert not is_density_matrix(bad)
    neg = np.diag([1.2, -0.2, 0.0]).astype(complex)
    assert any("semidefinite" in m for m in density_violations(neg))
    with pytest.raises(InvalidDensityMatrix):
        check_density(neg)


def test_density_checker_random_states(rng):
    stack = np.array([random_density(rng) for _ in range(20)])
    assert density_violations(stack) == []


def test_solver_settings_and_axes():
    s = SolverSettings()
    t = s.t_axis()
    assert t[0] == -20.0 and t[-1] == pytest.approx(40.0) and t.size == 3001
    assert s.z_axis(10.0).size == 501
    with pytest.raises(ConfigError) as exc:
        SolverSettings(dt=0.0, dz=-1.0, clamp_threshold=-1.0, order=3)
    assert exc.value.codes == ["BadGrid"] * 4


def test_grids_check_shapes_and_uniformity():
    t = np.linspace(0, 1, 11)
    z = np.linspace(0, 2, 5)
    FieldGrid(t, z, np.zeros((5, 11)), np.zeros((5, 11)))
    with pytest.raises(ConfigError):
        FieldGrid(t, z, np.zeros((5, 10)), np.zeros((5, 11)))
    with pytest.raises(ConfigError):
        FieldGrid(np.array([0.0, 0.1, 0.3]), z, np.zeros((5, 3)), np.zeros((5, 3)))
    d = DensityField(z, [0.0, 1.0], [0.5, 0.5], np.broadcast_to(ground_state(), (5, 2, 3, 3)))
    assert np.allclose(d.averaged(), ground_state())


# validate_config examples and round trip

def test_validate_config_examples():
    cfg = validate_config({"solitons": [{"tau": 1, "c1": 1, "c2": 0.05}], "medium": {"gamma": 0}})
    assert cfg.params[0].tau == 1.0 and cfg.inits[0].c2 == 0.05
    assert cfg.doppler.is_delta
    with pytest.raises(ConfigError) as exc:
        validate_config({"solitons": [{"tau": -1}]})
    assert exc.value.codes == ["NonPositiveTau"]
    with pytest.raises(ConfigError) as exc:
        validate_config({"solitons": [{"tau": 1, "c1": 0, "c2": 0}]})
    assert exc.value.codes == ["ZeroNormingConstant"]


def test_validate_config_collects_every_issue():
    with pytest.raises(ConfigError) as exc:
        validate_config({"solitons": [{"tau": -1, "c1": 0, "c2": 0}], "medium": {"gamma": -1},
                         "grid": {"dt": 0}, "extra": 1})
    assert set(exc.value.codes) == {"UnknownKey", "NonPositiveTau", "ZeroNormingConstant",
                                    "NegativeGamma", "BadGrid"}
    fields = [i.field for i in exc.value.issues]
    assert "solitons[0].tau" in fields and "medium.gamma" in fields and "grid.dt" in fields


finite = st.floats(-5, 5, allow_nan=False)
positive = st.floats(0.05, 5)
cnum = st.tuples(finite, finite).filter(lambda c: c != (0.0, 0.0))


@st.composite
def raw_configs(draw):
    n = draw(st.integers(0, 3))
    taus = draw(st.lists(positive, min_size=n, max_size=n, unique=True))
    cfg = {
        "solitons": [{"xi": draw(finite), "tau": t, "c1": list(draw(cnum)), "c2": list(draw(cnum))}
                     for t in taus],
        "doppler": {"width": draw(st.floats(0, 4)), "mean": draw(finite), "n_nodes": draw(st.integers(1, 256))},
        "medium": {"gamma": draw(st.floats(0, 0.2)), "z_length": draw(positive)},
        "grid": {"dt": draw(st.floats(0.005, 0.1)), "dz": draw(st.floats(0.005, 0.1)),
                 "t_window": [-draw(positive), draw(positive)], "order": draw(st.sampled_from([2, 4]))},
    }
    if draw(st.booleans()):
        cfg["scan"] = {"kind": "displacement", "tau2": draw(st.lists(positive, min_size=1, max_size=4)),
                       "variants": [{"gamma": draw(st.floats(0, 0.1)), "width": draw(st.floats(0, 2)),
                                     "mean": draw(finite)}]}
    if draw(st.booleans()):
        cfg["boundary"] = {"kind": "storage", "theta_c_pi": draw(st.floats(0.01, 1.5)),
                           "controls": [{"tau": draw(positive), "center": draw(finite)}]}
    return cfg


@given(raw_configs())
def test_config_round_trip_is_identity(raw):
    cfg = validate_config(raw)
    again = loads(dumps(cfg))
    assert again == cfg
    assert again.digest() == cfg.digest()
