import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference
from magnon_metrology.critical import (
    CriticalModel,
    adaptive_step,
    bogoliubov,
    critical_fisher,
    fisher_at_special_times,
    gamma_c_closed,
    joint_evolve_critical,
    joint_propagator_critical,
    t_star_critical,
)
from magnon_metrology.errors import InvalidModel, SuperradiantPhase
from magnon_metrology.gaussian import entanglement_entropy, reduce, symplectic_form, to_standard_form
from magnon_metrology.oracles import FockConfig, fock_run


def near_critical(e, wc=2.0, wm=2.0):
    gc = 0.5 * math.sqrt(wc * wm)
    return CriticalModel(wc, wm, gc * (1 - e))


def log_slope(f, e1=1e-5, e2=1e-3):
    return math.log(f(e1) / f(e2)) / math.log(e1 / e2)


def random_model(rng, max_ratio=0.999):
    wc, wm = rng.uniform(0.5, 3, 2)
    return CriticalModel(wc, wm, rng.uniform(0, max_ratio) * 0.5 * math.sqrt(wc * wm))


def test_bogoliubov_decoupled():
    bd = bogoliubov(CriticalModel(1.5, 2.5, 0.0))
    assert (bd.eps_minus, bd.eps_plus) == pytest.approx((1.5, 2.5), rel=1e-15)
    assert bd.delta_angle == 0.0


def test_bogoliubov_soft_branch_when_cavity_is_stiffer():
    bd = bogoliubov(CriticalModel(2.5, 1.5, 0.0))
    assert (bd.eps_minus, bd.eps_plus) == pytest.approx((1.5, 2.5), rel=1e-15)
    assert bd.delta_angle == pytest.approx(math.pi / 2)


def test_resonant_mixing_angle_and_continuity():
    m = CriticalModel(2.0, 2.0, 0.3)
    assert bogoliubov(m).delta_angle == pytest.approx(math.pi / 4, abs=1e-15)
    ref = gamma_c_closed(m, 7.0).gamma
    for sign in (1, -1):
        side = CriticalModel(2.0, 2.0 * (1 + sign * 1e-9), 0.3)
        assert bogoliubov(side).delta_angle == pytest.approx(math.pi / 4, abs=1e-8)
        np.testing.assert_allclose(gamma_c_closed(side, 7.0).gamma, ref, atol=1e-7)


def test_energies_match_characteristic_polynomial():
    rng = np.random.default_rng(1)
    for _ in range(200):
        m = random_model(rng)
        bd = bogoliubov(m)
        assert bd.eps_minus <= bd.eps_plus
        wc, wm, g = m.omega_c, m.omega_m, m.g
        s = math.sqrt((wc**2 - wm**2) ** 2 + 16 * g * g * wc * wm)
        assert bd.eps_plus**2 == pytest.approx(0.5 * (wc**2 + wm**2 + s), rel=1e-12)
        assert bd.eps_minus**2 * bd.eps_plus**2 == pytest.approx(wc * wm * (wc * wm - 4 * g * g), rel=1e-10)


def test_soft_mode_square_root_scaling():
    assert log_slope(lambda e: bogoliubov(near_critical(e)).eps_minus) == pytest.approx(0.5, abs=1e-6)
    # the cancellation-free product form keeps full relative precision at tiny gaps
    mp = reference.mp
    m = near_critical(1e-12)
    wc, wm, g = (mp.mpf(x) for x in (m.omega_c, m.omega_m, m.g))
    exact = mp.sqrt((wc**2 + wm**2 - mp.sqrt((wc**2 - wm**2) ** 2 + 16 * g**2 * wc * wm)) / 2)
    assert bogoliubov(m).eps_minus == pytest.approx(float(exact), rel=1e-9)


def test_superradiant_rejected():
    with pytest.raises(SuperradiantPhase):
        CriticalModel(2.0, 2.0, 1.0)
    with pytest.raises(SuperradiantPhase):
        CriticalModel(2.0, 2.0, 1.2)
    with pytest.raises(InvalidModel):
        CriticalModel(-1.0, 2.0, 0.1)


def test_closed_covariance_trivial_cases():
    m = CriticalModel(2.0, 2.0, 0.4)
    np.testing.assert_allclose(gamma_c_closed(m, 0.0).gamma, np.eye(2), atol=1e-15)
    for t in (1.0, 10.0, 123.0):
        np.testing.assert_allclose(gamma_c_closed(CriticalModel(2.0, 2.0, 0.0), t).gamma, np.eye(2), atol=1e-14)
        np.testing.assert_allclose(gamma_c_closed(CriticalModel(1.0, 3.0, 0.0), t).gamma, np.eye(2), atol=1e-14)


def test_t_star_examples():
    m = near_critical(1e-4)
    assert t_star_critical(m, 2) == pytest.approx(2 * t_star_critical(m, 1), rel=1e-15)
    assert t_star_critical(m) == pytest.approx(math.pi / bogoliubov(m).eps_minus, rel=1e-15)
    assert log_slope(lambda e: t_star_critical(near_critical(e))) == pytest.approx(-0.5, abs=0.02)
    with pytest.raises(InvalidModel):
        t_star_critical(m, 0)


def test_closed_covariance_matches_high_precision_propagation():
    rng = np.random.default_rng(2)
    for _ in range(20):
        m = random_model(rng)
        t = rng.uniform(0, 30)
        full = reference.joint_covariance(m.omega_c, m.omega_m, m.g, t, rwa=False)
        want = reference.to_numpy(full)[:2, :2]
        np.testing.assert_allclose(gamma_c_closed(m, t).gamma, want, rtol=1e-8, atol=1e-8)


def test_near_critical_covariance_matches_high_precision_propagation():
    m = near_critical(1e-4)
    ts = t_star_critical(m)
    for t in (ts, ts / 4):
        want = reference.to_numpy(reference.joint_covariance(m.omega_c, m.omega_m, m.g, t, rwa=False))[:2, :2]
        np.testing.assert_allclose(gamma_c_closed(m, t).gamma, want, rtol=1e-8)


def test_joint_reduction_matches_closed_form():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        m = random_model(rng)
        t = rng.uniform(0, 50)
        diff = np.abs(reduce(joint_evolve_critical(m, t), 0).gamma - gamma_c_closed(m, t).gamma).max()
        worst = max(worst, diff)
    assert worst < 1e-8


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 3), st.floats(0.5, 3), st.floats(0, 0.999), st.floats(0, 100))
def test_joint_propagator_is_symplectic(wc, wm, ratio, t):
    m = CriticalModel(wc, wm, ratio * 0.5 * math.sqrt(wc * wm))
    mat = joint_propagator_critical(m, t)
    omega = symplectic_form(2)
    np.testing.assert_allclose(mat @ omega @ mat.T, omega, atol=1e-9)


def test_joint_time_zero_is_vacuum():
    np.testing.assert_allclose(joint_evolve_critical(CriticalModel(2, 3, 0.5), 0.0).gamma, np.eye(4), atol=1e-13)


def test_joint_matches_fock_oracle_at_moderate_coupling():
    m = CriticalModel(2.0, 2.0, 0.1)
    run = fock_run(FockConfig(m, cutoff=60), 3.0)
    np.testing.assert_allclose(run.state.gamma, joint_evolve_critical(m, 3.0).gamma, atol=1e-5)
    np.testing.assert_allclose(run.state.gamma[:2, :2], gamma_c_closed(m, 3.0).gamma, atol=1e-5)


def test_closed_covariance_finite_at_t_star():
    for e in (1e-2, 1e-4, 1e-6):
        m = near_critical(e)
        assert np.all(np.isfinite(gamma_c_closed(m, t_star_critical(m)).gamma))


def test_quarter_time_divergences():
    def at_quarter(e):
        m = near_critical(e)
        return to_standard_form(gamma_c_closed(m, t_star_critical(m) / 4))

    assert log_slope(lambda e: gamma_c_closed(near_critical(e), t_star_critical(near_critical(e)) / 4).gamma[0, 0]) == pytest.approx(
        -1.0, abs=0.05
    )
    assert log_slope(lambda e: at_quarter(e).n_th) == pytest.approx(-0.5, abs=0.05)
    assert log_slope(lambda e: math.cosh(2 * at_quarter(e).r)) == pytest.approx(-0.5, abs=0.05)


def test_entanglement_near_critical():
    m = near_critical(1e-4)
    ts = t_star_critical(m)
    quarter = to_standard_form(reduce(joint_evolve_critical(m, ts / 4), 0)).n_th
    assert entanglement_entropy(quarter) > 1.0
    # large-n_th asymptote of the thermal entropy
    assert entanglement_entropy(quarter) == pytest.approx(math.log2(quarter) + 1 / math.log(2), abs=0.05)


def test_fisher_vanishes_without_coupling():
    m = CriticalModel(2.0, 2.0, 0.0)
    res = critical_fisher(m, 5.0)
    assert res.fisher.f_q == 0.0 and res.fisher.f_c == 0.0


def test_fisher_at_special_times_uses_frozen_times():
    m = near_critical(1e-3)
    res = fisher_at_special_times(m)
    ts = t_star_critical(m)
    assert res.t_star.t == ts and res.quarter.t == ts / 4
    assert res.t_star.fisher.f_c <= res.t_star.fisher.f_q * (1 + 1e-9)
    assert res.quarter.fisher.f_c > 0


def test_fisher_derivatives_match_high_precision():
    m = near_critical(1e-4)
    t = t_star_critical(m)
    res = critical_fisher(m, t)
    h = reference.mp.mpf("1e-20")

    def ref(dw):
        return reference.standard_form(
            reference.joint_covariance(m.omega_c, reference.mp.mpf(m.omega_m) + dw, m.g, t, rwa=False)
        )

    hi, lo = ref(h), ref(-h)
    exact = [float((a - b) / (2 * h)) for a, b in zip(hi, lo)]
    got = (res.derivatives.d_r, res.derivatives.d_phi, res.derivatives.d_nth)
    for g_, w in zip(got, exact):
        assert g_ == pytest.approx(w, rel=1e-5)


def test_adaptive_step_shrinks_towards_criticality():
    steps = [adaptive_step(near_critical(e), t_star_critical(near_critical(e))) for e in (1e-2, 1e-3, 1e-4)]
    assert steps[0] > steps[1] > steps[2] > 0
