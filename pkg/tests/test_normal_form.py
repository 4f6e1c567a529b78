import numpy as np
import pytest

import thermal_wigner as tw
from thermal_wigner.normal_form import as_normal_form, nf_preimage_radius


def test_as_normal_form_rejects_other_variants(ho):
    with pytest.raises(TypeError):
        as_normal_form(ho)


def test_midpoint_image(ho_nf, kerr):
    img = tw.nf_midpoint_image(ho_nf, [1.0, 0.0], 2.0)
    assert np.allclose(img, [np.cosh(1.0), 0.0], atol=1e-14)
    assert img[0] == pytest.approx(1.5430806, abs=1e-7)

    assert np.allclose(tw.nf_midpoint_image(kerr, [0.7, -0.3], 0.0), [0.7, -0.3])

    # Kerr at u = 1/2 has F' = 1, same image as the oscillator
    img = tw.nf_midpoint_image(kerr, [1.0, 0.0], 2.0)
    assert np.allclose(img, [np.cosh(1.0), 0.0], atol=1e-14)


def test_real_action_reduces_to_tan_form_for_ho(ho_nf):
    t, omega = np.pi / 4, 1.0
    midpoint = np.array([1.0, 0.0])
    action = tw.nf_real_action(ho_nf, midpoint, t)
    centre = np.cos(0.5 * t * omega) * midpoint
    assert action == pytest.approx(-np.tan(0.5 * t * omega) * np.sum(centre**2), abs=1e-14)


def test_real_action_zero_time(kerr):
    assert tw.nf_real_action(kerr, [0.8, 0.1], 0.0) == 0.0


def test_real_action_kerr_value(kerr):
    # u = 1/2, F' = 1, F = 1/4: [1 - sin 1]/2 - 1/4
    val = tw.nf_real_action(kerr, [1.0, 0.0], 1.0)
    assert val == pytest.approx(0.5 * (1.0 - np.sin(1.0)) - 0.25, abs=1e-14)
    assert val == pytest.approx(-0.170735, abs=1e-6)


def test_real_action_is_odd_in_time(kerr, rng):
    for _ in range(20):
        midpoint = rng.uniform(-1.5, 1.5, size=2)
        t = rng.uniform(0.05, 2.0)
        plus = tw.nf_real_action(kerr, midpoint, t)
        minus = tw.nf_real_action(kerr, midpoint, -t)
        assert plus == pytest.approx(-minus, abs=1e-13)


def test_thermal_action_ho(ho_nf):
    action = tw.nf_thermal_action(ho_nf, [1.0, 0.0], 2.0)
    assert action == pytest.approx(-np.sinh(2.0) / 2.0, abs=1e-14)
    assert action == pytest.approx(-1.8134302, abs=1e-7)
    # equals -tanh(omega theta / 2) x^2 at the image centre
    centre = tw.nf_midpoint_image(ho_nf, [1.0, 0.0], 2.0)
    assert action == pytest.approx(-np.tanh(1.0) * np.sum(centre**2), abs=1e-14)


def test_thermal_action_zero_time(kerr):
    assert tw.nf_thermal_action(kerr, [1.2, -0.4], 0.0) == 0.0


def test_thermal_action_kerr_value(kerr):
    val = tw.nf_thermal_action(kerr, [1.0, 0.0], 2.0)
    assert val == pytest.approx(0.5 * (2.0 - np.sinh(2.0)) - 0.5, abs=1e-14)
    assert val == pytest.approx(-1.3134302, abs=1e-7)


def test_jacobian_values(ho_nf, kerr):
    assert tw.nf_jacobian(ho_nf, [1.0, 0.0], 2.0) == pytest.approx(
        np.cosh(1.0) ** 2, abs=1e-13
    )
    assert tw.nf_jacobian(kerr, [0.6, 0.2], 0.0) == 1.0
    # c (c + sinh(1/2)) with c = cosh(1/2)
    val = tw.nf_jacobian(kerr, [1.0, 0.0], 1.0)
    assert val == pytest.approx(np.cosh(0.5) * (np.cosh(0.5) + np.sinh(0.5)), abs=1e-13)
    assert val == pytest.approx(1.859141, abs=1e-6)


def test_jacobian_matches_finite_differences(kerr, rng):
    nf = tw.NormalForm(coeffs=(1.0, 0.1, 0.02))
    step = 1e-5
    for model in (kerr, nf):
        for _ in range(10):
            midpoint = rng.uniform(-1.5, 1.5, size=2)
            theta = rng.uniform(0.1, 3.0)
            fd = np.zeros((2, 2))
            for k in range(2):
                d = np.zeros(2)
                d[k] = step
                plus = tw.nf_midpoint_image(model, midpoint + d, theta)
                minus = tw.nf_midpoint_image(model, midpoint - d, theta)
                fd[:, k] = (plus - minus) / (2 * step)
            det_fd = np.linalg.det(fd)
            assert tw.nf_jacobian(model, midpoint, theta) == pytest.approx(det_fd, rel=1e-6)


def test_thermal_weyl_equals_ho_closed_form(ho_nf, rng):
    for _ in range(30):
        midpoint = rng.uniform(-3, 3, size=2)
        theta = 10.0 ** rng.uniform(-2, 1)
        centre, value = tw.nf_thermal_weyl(ho_nf, midpoint, theta)
        expected = tw.ho_thermal(centre, tw.ThermalParams(beta=theta), 1.0)
        assert value == pytest.approx(expected, rel=1e-12)


def test_thermal_weyl_zero_time(kerr):
    centre, value = tw.nf_thermal_weyl(kerr, [0.9, -0.2], 0.0)
    assert np.allclose(centre, [0.9, -0.2])
    assert value == 1.0


def test_jacobian_positive_no_thermal_caustics(kerr, rng):
    nf = tw.NormalForm(coeffs=(1.0, 0.1))
    for model in (kerr, nf):
        for _ in range(25):
            midpoint = rng.uniform(-3, 3, size=2)
            theta = 10.0 ** rng.uniform(-2, np.log10(20.0))
            assert tw.nf_jacobian(model, midpoint, theta) > 0


def test_long_thermal_time_collapse():
    # fixed centre x: as theta grows the exponent tends to -x^2 (omega = 1)
    model = tw.NormalForm(coeffs=(1.0, 0.1))
    theta = 50.0
    x = np.array([1.0, 0.0])
    t = nf_preimage_radius(model, theta, np.linalg.norm(x))
    midpoint = x * t / np.linalg.norm(x)
    centre = tw.nf_midpoint_image(model, midpoint, theta)
    assert np.allclose(centre, x, rtol=1e-9)
    action = tw.nf_thermal_action(model, midpoint, theta)
    x2 = np.sum(x**2)
    assert abs(action + x2) < 0.01 * x2
