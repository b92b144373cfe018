import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ives_sme.sme_photon import (
    C_LIGHT, EPS3, Branch, Direction, DispersionError, KappaSet, KFTensor, SymmetryError,
    WaveFourVector, classic_is_observable, contract, decompose_kf, dispersion, kf_from_kappas,
    phase_speed, rho, rho_axis_closed_form, rho_by_direction, riemann_violations, sigma2,
    sigma2_axis_closed_form,
)

ETA = np.diag([1.0, -1.0, -1.0, -1.0])


def brute_k_ab(kf, p_contra):
    """k^{ab} = k_F^{a m b n} p_m p_n with explicit loops."""
    p_low = [ETA[i, i] * p_contra[i] for i in range(4)]
    out = np.zeros((4, 4))
    for a, m, b, n in itertools.product(range(4), repeat=4):
        out[a, b] += kf[a, m, b, n] * p_low[m] * p_low[n]
    return out


def brute_rho_sigma2(k_ab):
    r = -0.5 * sum(ETA[a, a] * k_ab[a, a] for a in range(4))
    s = 0.0
    for a, b in itertools.product(range(4), repeat=2):
        s += ETA[a, a] * ETA[b, b] * k_ab[a, b] * k_ab[a, b]
    return r, 0.5 * s - r * r


def random_riemann(rng):
    """A tensor with every k_F symmetry, built without the kappa matrices."""
    a = rng.normal(size=(4, 4, 4, 4))
    a = a - a.transpose(1, 0, 2, 3)
    a = a - a.transpose(0, 1, 3, 2)
    a = a + a.transpose(2, 3, 0, 1)
    a = a - (a + a.transpose(0, 2, 3, 1) + a.transpose(0, 3, 1, 2)) / 3.0
    # remove the double trace with the metric-built tensor of the same symmetry
    g = ETA
    basis = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    tr = np.einsum("a,b,abab->", np.diag(g), np.diag(g), a)
    tr_basis = np.einsum("a,b,abab->", np.diag(g), np.diag(g), basis)
    return a - tr / tr_basis * basis


def kappas_by_loops(c):
    de = np.zeros((3, 3))
    hb = np.zeros((3, 3))
    db = np.zeros((3, 3))
    for j, k in itertools.product(range(3), repeat=2):
        de[j, k] = -2.0 * c[0, j + 1, 0, k + 1]
        for p, q, r, s in itertools.product(range(3), repeat=4):
            hb[j, k] += 0.5 * EPS3[j, p, q] * EPS3[k, r, s] * c[p + 1, q + 1, r + 1, s + 1]
        for p, q in itertools.product(range(3), repeat=2):
            db[j, k] += EPS3[k, p, q] * c[0, j + 1, p + 1, q + 1]
    return de, hb, db


def test_isotropic_rho_and_sigma():
    k = KappaSet.isotropic(3.7e-8)
    rhos = rho_by_direction(k)
    assert rhos[Direction.EAST] == pytest.approx(-3.7e-8, abs=1e-22)
    assert rhos[Direction.WEST] == pytest.approx(-3.7e-8, abs=1e-22)
    for d in Direction:
        assert dispersion(kf_from_kappas(k), WaveFourVector.along(d)).sigma2 == 0.0


def test_zero_set_gives_light_speed():
    kf = kf_from_kappas(KappaSet.zero())
    for branch in Branch:
        assert phase_speed(kf, "East", branch) == C_LIGHT


def test_riemann_symmetries_of_assembled_tensor(rng):
    for _ in range(20):
        kf = kf_from_kappas(KappaSet.random(rng))
        assert max(riemann_violations(kf.components).values()) < 1e-12


def test_round_trip_through_tensor(rng):
    for _ in range(20):
        k = KappaSet.random(rng)
        assert decompose_kf(kf_from_kappas(k)).allclose(k, atol=1e-12)


def test_independent_tensor_maps_to_same_kappas(rng):
    for _ in range(5):
        c = random_riemann(rng)
        assert max(riemann_violations(c).values()) < 1e-12
        de, hb, db = kappas_by_loops(c)
        k = KappaSet.from_electrodynamic(de, hb, db)
        assert k.violations() == []
        np.testing.assert_allclose(kf_from_kappas(k).components, c, atol=1e-12)


def _constraint_matrix(include_double_trace=True):
    rows = []
    idx = lambda a, b, c, d: ((a * 4 + b) * 4 + c) * 4 + d  # noqa: E731
    for a, b, c, d in itertools.product(range(4), repeat=4):
        for other, sign in (((b, a, c, d), 1), ((a, b, d, c), 1), ((c, d, a, b), -1)):
            r = np.zeros(256)
            r[idx(a, b, c, d)] += 1
            r[idx(*other)] += sign
            rows.append(r)
        r = np.zeros(256)
        r[idx(a, b, c, d)] += 1
        r[idx(a, d, b, c)] += 1
        r[idx(a, c, d, b)] += 1
        rows.append(r)
    if include_double_trace:
        r = np.zeros(256)
        for a, b in itertools.product(range(4), repeat=2):
            r[idx(a, b, a, b)] += ETA[a, a] * ETA[b, b]
        rows.append(r)
    return np.array(rows)


def test_parameter_count_is_nineteen(rng):
    assert 256 - np.linalg.matrix_rank(_constraint_matrix()) == 19
    assert 256 - np.linalg.matrix_rank(_constraint_matrix(False)) == 20
    samples = np.array([kf_from_kappas(KappaSet.random(rng)).components.ravel() for _ in range(40)])
    assert np.linalg.matrix_rank(samples, tol=1e-9) == 19


@pytest.mark.parametrize("direction,axis_sign", [(Direction.EAST, -1), (Direction.WEST, +1)])
def test_axis_closed_forms_match_contraction(rng, direction, axis_sign):
    for _ in range(50):
        k = KappaSet.random(rng)
        d = dispersion(kf_from_kappas(k), WaveFourVector.along(direction))
        assert rho_axis_closed_form(k, axis_sign) == pytest.approx(d.rho, abs=1e-13)
        assert sigma2_axis_closed_form(k, axis_sign) == pytest.approx(d.sigma2, abs=1e-12)


def test_parity_odd_part_flips_between_beams():
    db = np.array([[0.0, 1e-9, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    k = KappaSet.from_electrodynamic(np.zeros((3, 3)), np.zeros((3, 3)), db)
    r = rho_by_direction(k)
    assert r[Direction.EAST] == pytest.approx(-r[Direction.WEST], abs=1e-24)
    assert r[Direction.EAST] != 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-12, 1e-2))
def test_brute_force_contraction_property(seed, scale):
    k = KappaSet.random(np.random.default_rng(seed), scale=scale)
    kf = kf_from_kappas(k)
    direction = [0.0, *np.random.default_rng(seed + 1).normal(size=3)]
    p = WaveFourVector(direction)
    k_ab = contract(kf, p)
    brute = brute_k_ab(kf.components, p.p_hat)
    np.testing.assert_allclose(k_ab, brute, atol=1e-12 * scale)
    r, s2 = brute_rho_sigma2(brute)
    assert rho(k_ab) == pytest.approx(r, abs=1e-12 * scale)
    assert sigma2(k_ab) == pytest.approx(max(s2, 0.0), abs=1e-12 * scale**2 + 1e-30)


def test_sigma_squared_nonnegative_for_random_sets(rng):
    for _ in range(200):
        kf = kf_from_kappas(KappaSet.random(rng, 1e-6))
        for d in Direction:
            assert dispersion(kf, WaveFourVector.along(d)).sigma2 >= 0.0


def test_negative_sigma_squared_is_an_error():
    k_ab = np.zeros((4, 4))
    k_ab[0, 1] = k_ab[1, 0] = 1.0  # eta-weighted square is negative
    with pytest.raises(DispersionError):
        sigma2(k_ab)


def test_birefringent_branches():
    k = KappaSet.from_electrodynamic(np.diag([2e-9, -1e-9, -1e-9]), np.diag([1e-9, -1e-9, 0.0]), np.zeros((3, 3)))
    kf = kf_from_kappas(k)
    d = dispersion(kf, WaveFourVector.east())
    assert d.sigma > 0
    assert phase_speed(kf, "East", "+") == pytest.approx(C_LIGHT * (1 + d.rho + d.sigma), rel=1e-15)
    assert phase_speed(kf, "East", "-") == pytest.approx(C_LIGHT * (1 + d.rho - d.sigma), rel=1e-15)


def test_constraint_violations_are_named():
    z = np.zeros((3, 3))
    db = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    bad = KappaSet(z, z, db, db, 0.0)
    assert "kappa_HE must equal -transpose(kappa_DB)" in bad.violations()
    with pytest.raises(SymmetryError):
        kf_from_kappas(bad)
    asym = KappaSet(np.triu(np.ones((3, 3))), -np.eye(3), z, z, 1.0 / 3)
    assert any("symmetric" in v for v in asym.violations())
    with pytest.raises(SymmetryError):
        KFTensor(np.random.default_rng(0).normal(size=(4, 4, 4, 4))).validate()


def test_experimental_decomposition_inverts(rng):
    k = KappaSet.random(rng)
    back = KappaSet.from_experimental(k.kappa_e_plus, k.kappa_e_minus, k.kappa_o_plus, k.kappa_o_minus, k.kappa_tr)
    assert back.allclose(k, atol=1e-14)
    assert np.trace(k.kappa_e_minus) == pytest.approx(0.0, abs=1e-14)


def test_json_round_trip(tmp_path, rng):
    k = KappaSet.random(rng)
    assert KappaSet.loads(k.dumps()).allclose(k, atol=0)
    k.save(tmp_path / "k.json")
    assert KappaSet.load(tmp_path / "k.json").allclose(k, atol=0)


def test_wave_vector_is_normalized():
    p = WaveFourVector((7.0, 0.0, 3.0, 4.0))
    assert p.p_hat == (1.0, 0.0, 0.6, 0.8)
    np.testing.assert_array_equal(WaveFourVector.east().covariant, [1.0, 0.0, 0.0, -1.0])
    with pytest.raises(ValueError):
        WaveFourVector((1.0, 0.0, 0.0, 0.0))


def test_direction_parsing():
    assert Direction("east") is Direction.EAST
    assert Direction.WEST.opposite is Direction.EAST
    assert Direction.WEST.sign == -1


def test_classic_is_observable_arithmetic():
    assert classic_is_observable(0.0, 0.3, 1e-4) == 1.0
    assert classic_is_observable(1e-8, 0.1, 0.0) == pytest.approx(1 + 2e-10, rel=1e-15)
    with pytest.raises(ValueError):
        classic_is_observable(1e-8, 1.0)
