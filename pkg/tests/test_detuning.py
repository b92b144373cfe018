import numpy as np
import pytest

from ives_sme.atomic_data import make_lambda_system
from ives_sme.detuning import (
    BeamConfig, FieldConfig, critical_velocity, detunings_sme, detunings_sr, laser_frequency,
    lorentz_violating_terms, lv_offset, lv_offset_field, zeeman_shift,
)
from ives_sme.sme_photon import Direction, KappaSet


@pytest.fixture
def east_system():
    return make_lambda_system((-1, -3, -2), Direction.EAST)


@pytest.fixture
def west_system():
    return make_lambda_system((-1, -3, -2), Direction.WEST)


def test_critical_velocity(constants):
    assert critical_velocity(constants) == pytest.approx(1207.0, abs=0.5)
    assert laser_frequency(constants) == pytest.approx(377107393.834e6, abs=1.0)


def test_resonance_at_critical_speed(constants, east_system, west_system):
    vc = critical_velocity(constants)
    field = FieldConfig(laser_frequency(constants), 1.0, 1.0, 0.0)
    for system, v in ((east_system, vc), (west_system, -vc)):
        det = detunings_sr(system, BeamConfig(v), field, constants)
        assert det.Delta == pytest.approx(0.0, abs=1e-3)
        assert det.delta == pytest.approx(0.0, abs=1e-3)


def test_detunings_by_direct_arithmetic(constants, east_system, rng):
    mu, c = constants.mu_B_over_h, constants.c
    nu0 = laser_frequency(constants)
    for _ in range(20):
        v, B = rng.uniform(1000, 1400), rng.uniform(-1e-6, 1e-6)
        det = detunings_sr(east_system, BeamConfig(v), FieldConfig(nu0, 1.0, 1.0, B), constants)
        # m1 = -1 (g = -1/9), m2 = -3 (g = 1/9), m3 = -2 (g = -1/3)
        delta = constants.nu21 + mu * (-3 / 9 - 1 / 9) * B - 2 * nu0 * v / c
        Delta = constants.nu31 - nu0 + mu * (2 / 3 - 1 / 9) * B - nu0 * v / c
        assert det.delta == pytest.approx(delta, abs=1e-3)
        assert det.Delta == pytest.approx(Delta, abs=1e-3)


def test_zeeman_shift_is_linear(data):
    level = data.ground_upper.level(-3)
    assert zeeman_shift(level, 2e-6) == pytest.approx(2 * zeeman_shift(level, 1e-6))
    assert zeeman_shift(level, 1e-6) == pytest.approx(-1 / 3 * data.constants.mu_B_over_h * 1e-6)


def test_lorentz_violating_terms_are_opposite_for_the_beams(constants):
    k = KappaSet.isotropic(8e-8)
    nu0 = laser_frequency(constants)
    vc = critical_velocity(constants)
    field = FieldConfig(nu0, 1.0, 1.0)
    east = lorentz_violating_terms(BeamConfig(vc), field, k)
    west = lorentz_violating_terms(BeamConfig(-vc), field, k)
    beta = vc / constants.c
    assert east[1] == pytest.approx(-2 * 8e-8 * nu0 * beta, rel=1e-12)
    assert west[1] == pytest.approx(-east[1], rel=1e-12)
    assert east[0] == pytest.approx(-8e-8 * nu0 * beta, rel=1e-12)


def test_sme_reduces_to_sr_for_zero_kappa(constants, east_system):
    field = FieldConfig(laser_frequency(constants), 1.0, 1.0, 3e-8)
    beam = BeamConfig(1206.0)
    a = detunings_sr(east_system, beam, field, constants)
    b = detunings_sme(east_system, beam, field, KappaSet.zero(), constants)
    assert (a.Delta, a.delta) == (b.Delta, b.delta)


def test_offset_scale(constants):
    assert lv_offset(1.0, constants) == pytest.approx(3.0e9, rel=0.02)
    assert lv_offset(8.3e-8, constants) == pytest.approx(252.0, rel=1e-3)
    assert lv_offset_field(8.3e-8, -6.22e9, constants) == pytest.approx(4.05e-8, rel=1e-2)


def test_broadcasting(constants, east_system):
    v = np.linspace(1200, 1210, 5)[None, :]
    B = np.linspace(-1e-7, 1e-7, 3)[:, None]
    det = detunings_sme(east_system, BeamConfig(v), FieldConfig(laser_frequency(constants), 1, 1, B),
                        KappaSet.isotropic(1e-8), constants)
    assert np.broadcast(det.Delta, det.delta).shape == (3, 5)


def test_beam_validation(east_system, constants):
    with pytest.raises(ValueError):
        BeamConfig(3e4)
    with pytest.raises(ValueError, match="beam"):
        detunings_sr(east_system, BeamConfig(-1200.0), FieldConfig(1e14, 1, 1), constants)
    with pytest.raises(ValueError):
        BeamConfig(np.array([-1.0, 1.0])).direction
    with pytest.raises(ValueError):
        FieldConfig(-1.0, 1.0, 1.0)
