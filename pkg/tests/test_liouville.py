import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ives_sme.atomic_data import make_lambda_system
from ives_sme.detuning import Detunings
from ives_sme.liouville import (
    DecayRates, DensityMatrix, SingularLiouvillianError, SusceptibilityInputs, initial_state_6,
    lambda_steady_states, liouvillian_3, residual, steady_state, steady_state_3, steady_state_6,
    susceptibility, weak_probe_coherence,
)

PHYS = DecayRates.symmetric(5.746e6)


def test_rates_must_be_nonnegative():
    with pytest.raises(ValueError, match="gamma21"):
        DecayRates(1.0, 1.0, gamma21=-1.0)
    with pytest.raises(ValueError):
        DecayRates(float("nan"), 1.0)


def test_no_fields_leaves_population_in_ground_state():
    rho = steady_state_3(None, (1e6, 3e3), PHYS, 0.0, 0.0)
    np.testing.assert_allclose(rho.entries, np.diag([1.0, 0, 0]), atol=1e-15)


def test_no_fields_six_level():
    rho = steady_state_6(None, (1e5, 1e3), (-1e5, 2e3), PHYS, 0.0, 0.0)
    np.testing.assert_allclose(rho.entries, initial_state_6(), atol=1e-15)


@pytest.mark.parametrize("Delta", [-3e7, 0.0, 1.2e7])
def test_dark_state_is_transparent(Delta):
    rho = steady_state_3(None, Detunings(Delta, 0.0), PHYS, 1e4, 1e6)
    assert abs(rho[2, 0].imag) < 1e-15
    assert rho.is_physical()


def test_weak_probe_closed_form(fig_rates):
    oc, op = 1e7, 1e4
    for Delta, delta in [(0.0, 100.0), (3e9, -400.0), (-5e10, 2e3)]:
        exact = steady_state_3(None, (Delta, delta), fig_rates, op, oc)[2, 0]
        approx = weak_probe_coherence(Delta, delta, op, oc, fig_rates)
        assert exact == pytest.approx(approx, rel=1e-4)


@settings(max_examples=40, deadline=None)
@given(Delta=st.floats(-1e8, 1e8), delta=st.floats(-1e7, 1e7), op=st.floats(1e2, 1e7),
       oc=st.floats(1e2, 1e8), g21=st.floats(0.0, 1e4))
def test_invariants_and_residual(Delta, delta, op, oc, g21):
    rates = DecayRates(2.9e6, 2.9e6, gamma21=g21)
    L = liouvillian_3(Delta, delta, op, oc, rates)
    rho = steady_state(L, np.diag([1.0, 0, 0]))
    assert rho.violations() == []
    assert residual(L, rho) <= 1e-10 * np.abs(L).max()
    assert susceptibility(rho).imag >= -1e-12


def test_probe_linearity():
    oc = 1e6
    base = steady_state_3(None, (2e6, 5e4), PHYS, 1e-4 * oc, oc)[2, 0]
    for factor in (2.0, 5.0, 10.0):
        scaled = steady_state_3(None, (2e6, 5e4), PHYS, factor * 1e-4 * oc, oc)[2, 0]
        assert scaled == pytest.approx(factor * base, rel=1e-2)


def test_dipole_weights_scale_rabi_frequencies():
    system = make_lambda_system((-1, -3, -2))
    weighted = type(system)(system.state1, system.state2, system.state3, 2.0, 0.5)
    a = steady_state_3(weighted, (1e6, 1e4), PHYS, 1e3, 1e6)
    b = steady_state_3(None, (1e6, 1e4), PHYS, 2e3, 5e5)
    np.testing.assert_allclose(a.entries, b.entries, atol=1e-16)


def test_six_level_is_two_half_weight_blocks(fig_rates):
    det_a, det_b = (2e3, 150.0), (-1e3, -600.0)
    rho6 = steady_state_6(None, det_a, det_b, fig_rates, 1e4, 1e7)
    a = steady_state_3(None, det_a, fig_rates, 1e4, 1e7).entries
    b = steady_state_3(None, det_b, fig_rates, 1e4, 1e7).entries
    np.testing.assert_allclose(rho6.entries[:3, :3], 0.5 * a, atol=1e-15)
    np.testing.assert_allclose(rho6.entries[3:, 3:], 0.5 * b, atol=1e-15)
    assert np.abs(rho6.entries[:3, 3:]).max() < 1e-12
    assert rho6.violations() == []


def test_identical_blocks_match_three_level():
    det = (4e5, 2e3)
    rho6 = steady_state_6(None, det, det, PHYS, 1e4, 1e6)
    rho3 = steady_state_3(None, det, PHYS, 1e4, 1e6)
    assert rho6.entries[2, 0] == pytest.approx(0.5 * rho3[2, 0], rel=1e-10)
    assert rho6.entries[5, 3] == pytest.approx(0.5 * rho3[2, 0], rel=1e-10)


def test_cross_block_dephasing_does_not_touch_blocks():
    rates = DecayRates(2.9e6, 2.9e6, gamma21=10.0, gamma41=1e3, gamma52=2e3, gamma63=3e3)
    g = rates.dephasing_6()
    assert g[0, 3] == 1e3 and g[1, 4] == 2e3 and g[2, 5] == 3e3
    assert g[0, 4] == rates.gamma21 and np.allclose(g, g.T)
    rho6 = steady_state_6(None, (1e5, 10.0), (1e5, 10.0), rates, 1e4, 1e6)
    rho3 = steady_state_3(None, (1e5, 10.0), rates, 1e4, 1e6)
    np.testing.assert_allclose(rho6.entries[:3, :3], 0.5 * rho3.entries, atol=1e-15)


def test_susceptibility_additivity_and_linearity(fig_rates):
    inputs = SusceptibilityInputs(n_atoms=1e9, volume=1e-6, field_amplitude=0.5, mu13=2e-29, mu46=2e-29)
    det_a, det_b = (1e3, 80.0), (-2e3, -300.0)
    rho6 = steady_state_6(None, det_a, det_b, fig_rates, 1e4, 1e7)
    half = inputs.with_atoms(inputs.n_atoms / 2)
    chi_a = susceptibility(steady_state_3(None, det_a, fig_rates, 1e4, 1e7), half).chi
    chi_b = susceptibility(steady_state_3(None, det_b, fig_rates, 1e4, 1e7), half).chi
    chi6 = susceptibility(rho6, inputs).chi
    assert chi6 == pytest.approx(chi_a + chi_b, rel=1e-10)
    doubled = susceptibility(rho6, inputs.with_atoms(2 * inputs.n_atoms)).chi
    assert doubled == pytest.approx(2 * chi6, rel=1e-15)


def test_susceptibility_of_incoherent_state_vanishes():
    assert susceptibility(DensityMatrix(np.diag([0.5, 0.5, 0.0]))).chi == 0
    with pytest.raises(ValueError):
        susceptibility(np.eye(4) / 4)
    with pytest.raises(ValueError):
        SusceptibilityInputs(n_atoms=1.0, volume=0.0, field_amplitude=1.0)


def test_degenerate_generator_needs_initial_state():
    L = liouvillian_3(0.0, 0.0, 0.0, 0.0, DecayRates(0.0, 0.0))
    with pytest.raises(SingularLiouvillianError):
        steady_state(L)


def test_non_semisimple_zero_eigenvalue_is_reported():
    L = np.zeros((4, 4), dtype=complex)
    L[0, 1] = 1.0
    with pytest.raises(SingularLiouvillianError, match="semisimple"):
        steady_state(L, np.diag([1.0, 0.0]))


def test_density_matrix_checks():
    bad = DensityMatrix(np.array([[1.2, 0.0, 0.0], [0.0, -0.2, 0.0], [0.0, 0.0, 0.0]]))
    problems = bad.violations()
    assert any("population" in p for p in problems) and any("semidefinite" in p for p in problems)
    with pytest.raises(ValueError):
        DensityMatrix(np.ones((2, 3)))
    assert DensityMatrix(np.diag([1.0, 0, 0])).coherence(1, 1) == 1.0


def test_batch_falls_back_for_singular_points():
    rho = lambda_steady_states([0.0, 1e6], [0.0, 1e3], 0.0, 0.0, PHYS)
    np.testing.assert_allclose(rho[0], np.diag([1.0, 0, 0]), atol=1e-15)
