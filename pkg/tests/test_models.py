import json

import numpy as np
import pytest

import thermal_wigner as tw
from thermal_wigner.exceptions import SingularHessianError


def _finite_difference_gradient(model, x, step=1e-5):
    grad = np.zeros(2)
    for k in range(2):
        d = np.zeros(2)
        d[k] = step
        grad[k] = (tw.eval_model(model, x + d) - tw.eval_model(model, x - d)) / (2 * step)
    return grad


def _finite_difference_hessian(model, x, step=1e-5):
    hess = np.zeros((2, 2))
    for k in range(2):
        d = np.zeros(2)
        d[k] = step
        hess[:, k] = (tw.gradient(model, x + d) - tw.gradient(model, x - d)) / (2 * step)
    return 0.5 * (hess + hess.T)


def test_eval_examples(ho, kerr, quartic):
    assert tw.eval_model(ho, [1, 0]) == 0.5
    assert tw.eval_model(kerr, [1, 0]) == pytest.approx(0.25, abs=1e-15)
    assert tw.eval_model(quartic, [0, 1]) == pytest.approx(0.6, abs=1e-15)


def test_eval_complex_examples(ho, kerr):
    assert tw.eval_complex(ho, [1j, 0]) == pytest.approx(-0.5, abs=1e-15)
    assert tw.eval_complex(ho, [1.0, 0.0]) == pytest.approx(0.5, abs=1e-15)
    # p = 1, q = i makes z.z = 0, so the Kerr value vanishes
    assert tw.eval_complex(kerr, [1.0, 1j]) == pytest.approx(0.0, abs=1e-15)


def test_eval_complex_matches_eval_on_real_points(ho, kerr, quartic, rng):
    for model in (ho, kerr, quartic):
        pts = rng.uniform(-2, 2, size=(40, 2))
        real_vals = tw.eval_model(model, pts)
        complex_vals = tw.eval_complex(model, pts + 0j)
        assert np.max(np.abs(complex_vals - real_vals)) < 1e-14


def test_gradient_hessian_examples(kerr):
    ho2 = tw.Quadratic(matrix=2.0 * np.eye(2))
    assert np.allclose(tw.gradient(ho2, np.array([1.0, 3.0])), [2.0, 6.0])
    assert np.allclose(tw.hessian(ho2, np.array([1.0, 3.0])), 2.0 * np.eye(2))

    # chain rule: grad H_K = 2 H_h grad H_h = (1, 0) at (1, 0)
    assert np.allclose(tw.gradient(kerr, np.array([1.0, 0.0])), [1.0, 0.0])

    cubic = tw.PolynomialPQ(terms=((1.0, 0, 3),))
    assert np.allclose(tw.gradient(cubic, np.array([0.0, 2.0])), [0.0, 12.0])
    assert np.allclose(tw.hessian(cubic, np.array([0.0, 2.0])), [[0.0, 0.0], [0.0, 12.0]])


def test_derivatives_match_finite_differences(ho, kerr, quartic, rng):
    mixed = tw.Quadratic(matrix=np.array([[1.2, 0.4], [0.4, 0.8]]))
    nf = tw.NormalForm(coeffs=(0.7, 0.05, 0.01))
    for model in (ho, kerr, quartic, mixed, nf):
        for _ in range(8):
            x = rng.uniform(-2, 2, size=2)
            g = tw.gradient(model, x)
            g_fd = _finite_difference_gradient(model, x)
            scale = max(1.0, np.max(np.abs(g_fd)))
            assert np.max(np.abs(g - g_fd)) < 1e-6 * scale
            h = tw.hessian(model, x)
            h_fd = _finite_difference_hessian(model, x)
            scale = max(1.0, np.max(np.abs(h_fd)))
            assert np.max(np.abs(h - h_fd)) < 1e-6 * scale


def test_local_frequency(ho, kerr):
    freq = tw.local_frequency(ho, np.array([0.3, -1.7]))
    assert not freq.hyperbolic and freq.value == pytest.approx(1.0, abs=1e-14)

    inverted = tw.Quadratic(matrix=np.diag([1.0, -1.0]))
    freq = tw.local_frequency(inverted, np.array([0.5, 0.5]))
    assert freq.hyperbolic and freq.value == pytest.approx(-1.0, abs=1e-14)

    freq = tw.local_frequency(kerr, np.array([1.0, 0.0]))
    assert not freq.hyperbolic and freq.value == pytest.approx(np.sqrt(3.0), rel=1e-12)


def test_centre_of_curvature(ho):
    assert np.allclose(tw.centre_of_curvature(ho, np.array([1.3, -0.2])), [0.0, 0.0])

    cubic = tw.PolynomialPQ(terms=((0.5, 2, 0), (0.5, 0, 2), (1.0 / 3.0, 0, 3)))
    gamma = tw.centre_of_curvature(cubic, np.array([0.0, 1.0]))
    assert np.allclose(gamma, [0.0, 1.0 / 3.0], atol=1e-12)

    free = tw.PolynomialPQ(terms=((0.5, 2, 0),))
    with pytest.raises(SingularHessianError):
        tw.centre_of_curvature(free, np.array([0.4, 1.0]))


def test_double_hamiltonian_examples(ho, kerr):
    assert tw.double_hamiltonian(ho, [1, 0], [0, 0]) == 1.0
    assert tw.double_hamiltonian(ho, [1, 0], [2, 0]) == pytest.approx(0.0, abs=1e-15)
    assert tw.double_hamiltonian(kerr, [1, 0], [2, 0]) == pytest.approx(0.0, abs=1e-15)


def test_double_hamiltonian_reduces_exactly_at_zero_chord(ho, kerr, quartic, rng):
    for model in (ho, kerr, quartic):
        for _ in range(10):
            x = rng.uniform(-2, 2, size=2)
            assert tw.double_hamiltonian(model, x, np.zeros(2)) == 2.0 * tw.eval_model(model, x)


def test_double_hamiltonian_quadratic_identity(rng):
    # for H(x) = x.Mx/2:  IH(x, y) = x.Mx - (Jy).M(Jy)/4
    m = np.array([[1.1, 0.25], [0.25, 0.7]])
    model = tw.Quadratic(matrix=m)
    for _ in range(20):
        x = rng.uniform(-2, 2, size=2)
        y = rng.uniform(-2, 2, size=2)
        jy = tw.apply_j(y)
        expected = x @ m @ x - 0.25 * jy @ m @ jy
        assert tw.double_hamiltonian(model, x, y) == pytest.approx(expected, abs=1e-13)


def test_model_json_roundtrip(tmp_path, ho, kerr, quartic):
    nf = tw.NormalForm(coeffs=(1.0, 0.1))
    for model in (ho, kerr, quartic, nf):
        path = tmp_path / "model.json"
        tw.save_model(model, path)
        data = json.loads(path.read_text())
        assert data["type"] in ("quadratic", "normal_form", "kerr", "polynomial_pq")
        assert data["dof"] == 1
        loaded = tw.load_model(path)
        assert loaded == model


def test_model_json_field_names(tmp_path):
    path = tmp_path / "ho.json"
    path.write_text(json.dumps({"type": "quadratic", "dof": 1, "matrix": [1, 0, 0, 1]}))
    model = tw.load_model(path)
    assert isinstance(model, tw.Quadratic)
    path.write_text(json.dumps({"type": "kerr", "dof": 1, "omega": 2.0}))
    assert tw.load_model(path).omega == 2.0
    path.write_text(json.dumps({"type": "normal_form", "dof": 1, "coeffs": [1.0, 0.1]}))
    assert tw.load_model(path).coeffs == (1.0, 0.1)
    path.write_text(json.dumps({"type": "polynomial_pq", "dof": 1, "terms": [[0.5, 2, 0]]}))
    assert tw.load_model(path).terms == ((0.5, 2, 0),)
    path.write_text(json.dumps({"type": "cosine", "dof": 1}))
    with pytest.raises(ValueError):
        tw.load_model(path)


def test_model_validation():
    with pytest.raises(ValueError):
        tw.Quadratic(matrix=np.array([[1.0, 0.5], [0.0, 1.0]]))  # not symmetric
    with pytest.raises(ValueError):
        tw.NormalForm(coeffs=(-1.0,))  # negative frequency
    with pytest.raises(ValueError):
        tw.NormalForm(coeffs=(0.0, -2.0))  # flat without positive higher term
    tw.NormalForm(coeffs=(0.0, 2.0))  # Kerr-like is fine
    with pytest.raises(ValueError):
        tw.PolynomialPQ(terms=((1.0, -1, 2),))
    with pytest.raises(ValueError):
        tw.Kerr(omega=0.0)


def test_quadratic_n2_and_other_variants_reject_n2():
    m = np.diag([1.0, 2.0, 1.0, 2.0])
    model = tw.Quadratic(matrix=m, dof=2)
    x = np.array([1.0, 0.0, 0.0, 1.0])
    assert tw.eval_model(model, x) == pytest.approx(1.5)
    assert np.allclose(tw.gradient(model, x), m @ x)
    with pytest.raises(ValueError):
        tw.NormalForm(coeffs=(1.0,), dof=2)
    with pytest.raises(ValueError):
        tw.PolynomialPQ(terms=((1.0, 2, 0),), dof=2)
    with pytest.raises(ValueError):
        tw.Kerr(omega=1.0, dof=2)
