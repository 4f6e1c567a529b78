import numpy as np
import pytest
from scipy.integrate import solve_ivp

import thermal_wigner as tw
from thermal_wigner.double_dynamics import IntegratorOptions, sc_weyl_batch
from thermal_wigner.exceptions import DivergenceError
from thermal_wigner.phase_space import apply_j


def test_ho_closed_form_solution(ho):
    # dH5 dynamics: x(theta') = cosh(theta') X, y = -2 sinh(theta') X
    traj = tw.integrate_double(ho, [1.0, 0.0], 2.0)
    assert np.allclose(traj.state.x, [np.cosh(1.0), 0.0], atol=1e-9)
    assert np.allclose(traj.state.y, [-2.0 * np.sinh(1.0), 0.0], atol=1e-9)
    assert traj.action == pytest.approx(-np.sinh(2.0) / 2.0, abs=1e-9)
    assert traj.action == pytest.approx(-1.8134302, abs=1e-7)
    assert traj.jacobian_det == pytest.approx(np.cosh(1.0) ** 2, rel=1e-9)
    assert traj.jacobian_det == pytest.approx(2.3810978, abs=1e-7)
    assert not traj.caustic_flag


def test_zero_time_is_identity(kerr):
    traj = tw.integrate_double(kerr, [0.7, -0.1], 0.0)
    assert np.allclose(traj.state.x, [0.7, -0.1])
    assert traj.action == 0.0
    assert traj.jacobian_det == 1.0


def test_kerr_action_matches_normal_form(kerr):
    traj = tw.integrate_double(kerr, [1.0, 0.0], 2.0)
    expected = tw.nf_thermal_action(kerr, [1.0, 0.0], 2.0)
    assert traj.action == pytest.approx(expected, abs=1e-8)
    assert traj.action == pytest.approx(-1.3134302, abs=1e-7)


def test_matches_scipy_reference_integration(quartic):
    # independent route: same equations through scipy's RK45
    midpoint = np.array([0.8, -0.5])
    theta = 1.7

    def rhs(_, state):
        x, y = state[:2], state[2:4]
        z = x + 0.5j * apply_j(y)
        g = quartic.gradient_at(z)
        dx = apply_j(g.imag)
        dy = -2.0 * g.real
        return np.concatenate([dx, dy, [y @ dx]])

    ref = solve_ivp(
        rhs,
        (0.0, theta / 2),
        np.concatenate([midpoint, [0.0, 0.0, 0.0]]),
        method="RK45",
        rtol=1e-11,
        atol=1e-11,
    )
    traj = tw.integrate_double(quartic, midpoint, theta)
    assert np.allclose(traj.state.x, ref.y[:2, -1], atol=1e-8)
    assert np.allclose(traj.state.y, ref.y[2:4, -1], atol=1e-8)
    ref_action = ref.y[4, -1] - theta * tw.eval_model(quartic, midpoint)
    assert traj.action == pytest.approx(ref_action, abs=1e-8)


def test_double_hamiltonian_conserved(ho, kerr, quartic, rng):
    opts = IntegratorOptions(rtol=1e-10, atol=1e-10)
    for model in (ho, kerr, quartic):
        for _ in range(5):
            midpoint = rng.uniform(-1.5, 1.5, size=2)
            traj = tw.integrate_double(model, midpoint, 2.0, opts)
            assert traj.energy_drift <= 100 * opts.rtol * max(
                1.0, 2 * abs(tw.eval_model(model, midpoint))
            )


def test_sc_weyl_equals_ho_closed_form(ho, rng):
    params = tw.ThermalParams(beta=2.0)
    for _ in range(10):
        midpoint = rng.uniform(-3, 3, size=2)
        centre, value = tw.sc_weyl_thermal(ho, midpoint, 2.0)
        assert value == pytest.approx(tw.ho_thermal(centre, params, 1.0), abs=1e-9)


def test_sc_weyl_at_origin_is_sech(ho):
    for theta in (0.5, 2.0, 7.0):
        _, value = tw.sc_weyl_thermal(ho, [0.0, 0.0], theta)
        assert value == pytest.approx(1.0 / np.cosh(theta / 2), rel=1e-10)


def test_sc_weyl_exact_on_general_quadratic(rng):
    # metaplectic symbol is exact for any elliptic quadratic model
    m = np.array([[1.3, 0.4], [0.4, 0.9]])
    model = tw.Quadratic(matrix=m)
    params = tw.ThermalParams(beta=1.7)
    for _ in range(10):
        midpoint = rng.uniform(-2, 2, size=2)
        centre, value = tw.sc_weyl_thermal(model, midpoint, params.theta)
        assert value == pytest.approx(
            tw.metaplectic_thermal(centre, params, m), abs=1e-8
        )


def test_tangent_matches_finite_differences(quartic, kerr, rng):
    step = 1e-5
    for model in (quartic, kerr):
        for _ in range(5):
            midpoint = rng.uniform(-1.2, 1.2, size=2)
            theta = rng.uniform(0.3, 2.5)
            traj = tw.integrate_double(model, midpoint, theta)
            fd = np.zeros((2, 2))
            for k in range(2):
                d = np.zeros(2)
                d[k] = step
                plus = tw.integrate_double(model, midpoint + d, theta)
                minus = tw.integrate_double(model, midpoint - d, theta)
                fd[:, k] = (plus.state.x - minus.state.x) / (2 * step)
            assert np.linalg.det(fd) == pytest.approx(traj.jacobian_det, rel=1e-5)


def test_real_time_action_is_odd(ho, kerr, rng):
    opts = IntegratorOptions(mode="real-time")
    for model in (ho, kerr):
        for _ in range(6):
            midpoint = rng.uniform(-1.5, 1.5, size=2)
            t = rng.uniform(0.2, 1.5)
            plus = tw.integrate_double(model, midpoint, t, opts)
            minus = tw.integrate_double(model, midpoint, -t, opts)
            assert plus.action == pytest.approx(-minus.action, abs=1e-9)


def test_real_time_ho_rotation(ho):
    # real-time centre follows cos(omega t / 2) X
    t = 1.3
    traj = tw.integrate_double(ho, [1.0, 0.0], t, IntegratorOptions(mode="real-time"))
    assert np.allclose(traj.state.x, [np.cos(t / 2), 0.0], atol=1e-9)
    assert traj.action == pytest.approx(
        tw.nf_real_action(tw.NormalForm(coeffs=(1.0,)), [1.0, 0.0], t), abs=1e-9
    )


def test_no_thermal_caustics_single_minimum(ho, kerr, quartic, rng):
    for model in (ho, kerr, quartic):
        for theta in (0.5, 5.0, 20.0):
            scale = 2.0 / np.cosh(theta / 2)  # keep the image centres moderate
            for _ in range(4):
                midpoint = scale * rng.uniform(-1, 1, size=2)
                traj = tw.integrate_double(model, midpoint, theta)
                assert not traj.caustic_flag
                assert traj.jacobian_det > 0


def test_divergence_error_far_midpoint(quartic):
    # far outside the manifold-bounded region at large theta
    with pytest.raises(DivergenceError):
        tw.integrate_double(quartic, [0.0, 4.0], 20.0)


def test_batch_voids_divergent_rows(quartic):
    mids = np.array([[0.1, 0.1], [0.0, 4.0], [0.2, -0.1]])
    centres, values, ok, res = sc_weyl_batch(quartic, mids, 20.0)
    assert ok.tolist() == [True, False, True]
    assert values[1] == 0.0
    assert np.all(values[[0, 2]] != 0.0)


def test_batch_matches_single(quartic, rng):
    mids = rng.uniform(-1, 1, size=(7, 2))
    res = tw.integrate_double_batch(quartic, mids, 1.3)
    for i, midpoint in enumerate(mids):
        traj = tw.integrate_double(quartic, midpoint, 1.3)
        assert res.action[i] == traj.action
        assert res.jacobian_det[i] == traj.jacobian_det


def test_batch_identical_across_worker_counts(quartic, rng):
    mids = rng.uniform(-1, 1, size=(600, 2))
    res1 = tw.integrate_double_batch(quartic, mids, 1.0, workers=1)
    res3 = tw.integrate_double_batch(quartic, mids, 1.0, workers=3)
    assert np.array_equal(res1.x, res3.x)
    assert np.array_equal(res1.action, res3.action)
    assert np.array_equal(res1.jacobian_det, res3.jacobian_det)


def test_complex_consistency_examples(ho, kerr, quartic):
    assert tw.complex_consistency_check(ho, [1.0, 0.0], 2.0) < 1e-9
    assert tw.complex_consistency_check(ho, [1.0, 0.0], 0.0) == 0.0
    opts = IntegratorOptions()
    assert tw.complex_consistency_check(kerr, [1.0, 0.0], 1.0, opts) < 10 * opts.rtol
    assert tw.complex_consistency_check(quartic, [0.5, 0.5], 2.0, opts) < 10 * opts.rtol


def test_trajectory_dump_checkpoints(ho):
    traj = tw.integrate_double(ho, [1.0, 0.0], 2.0, record=True)
    assert traj.checkpoints is not None
    assert traj.checkpoints.shape[1] == 7
    assert traj.checkpoints[0, 0] == 0.0
    assert traj.checkpoints[-1, 0] == pytest.approx(1.0, rel=1e-12)
    # columns: theta', p, q, y_p, y_q, s, det_T; spot-check mid-trajectory
    row = traj.checkpoints[len(traj.checkpoints) // 2]
    tp = row[0]
    assert row[1] == pytest.approx(np.cosh(tp), rel=1e-8)
    assert row[3] == pytest.approx(-2 * np.sinh(tp), rel=1e-8)
    assert row[6] == pytest.approx(np.cosh(tp) ** 2, rel=1e-8)


def test_thermal_mode_rejects_negative_theta(ho):
    with pytest.raises(ValueError):
        tw.integrate_double(ho, [1.0, 0.0], -1.0)
