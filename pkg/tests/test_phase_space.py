import numpy as np
import pytest

import thermal_wigner as tw
from thermal_wigner.exceptions import CausticError
from thermal_wigner.phase_space import assert_symplectic, symplectic_defect


def test_symplectic_form_canonical_pair():
    assert tw.symplectic_form([1, 0], [0, 1]) == 1.0


def test_symplectic_form_self_is_zero():
    assert tw.symplectic_form([3, -2], [3, -2]) == 0.0


def test_symplectic_form_by_matrix_arithmetic():
    # J(1,1) = (-1, 1); dotted with (2, 0) gives -2
    assert tw.symplectic_form([1, 1], [2, 0]) == -2.0


def test_symplectic_form_antisymmetry(rng):
    for _ in range(50):
        a = rng.normal(size=4)
        b = rng.normal(size=4)
        assert tw.symplectic_form(a, b) == pytest.approx(-tw.symplectic_form(b, a), abs=1e-14)


def test_symplectic_form_dimension_mismatch():
    with pytest.raises(ValueError):
        tw.symplectic_form([1, 0], [1, 0, 0, 0])
    with pytest.raises(ValueError):
        tw.symplectic_form([1, 0, 0], [1, 0, 0])


def test_symplectic_matrix_blocks():
    j = tw.symplectic_matrix(2)
    expected = np.zeros((4, 4))
    expected[:2, 2:] = -np.eye(2)
    expected[2:, :2] = np.eye(2)
    assert np.array_equal(j, expected)
    v = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(tw.apply_j(v), j @ v)


def test_endpoints_examples():
    pair = tw.ChordCentrePair(centre=[0, 0], chord=[2, 0])
    plus, minus = pair.endpoints()
    assert np.allclose(plus, [1, 0]) and np.allclose(minus, [-1, 0])

    pair = tw.ChordCentrePair(centre=[1, 1], chord=[0, 0])
    plus, minus = pair.endpoints()
    assert np.allclose(plus, [1, 1]) and np.allclose(minus, [1, 1])

    pair = tw.ChordCentrePair(centre=[1, 0], chord=[0, 4])
    plus, minus = pair.endpoints()
    assert np.allclose(plus, [1, 2]) and np.allclose(minus, [1, -2])


def test_endpoints_roundtrip_identity(rng):
    for _ in range(30):
        centre = rng.normal(size=2)
        chord = rng.normal(size=2)
        plus, minus = tw.ChordCentrePair(centre=centre, chord=chord).endpoints()
        back = tw.ChordCentrePair.from_endpoints(plus, minus)
        assert np.allclose(back.centre, centre, atol=1e-15)
        assert np.allclose(back.chord, chord, atol=1e-15)


def test_cayley_zero_is_identity():
    assert np.allclose(tw.cayley_monodromy(np.zeros((2, 2))), np.eye(2))


def test_cayley_elliptic_rotation():
    # B = -tan(omega t / 2) I generates a rotation by omega t
    omega_t = 0.73
    b = -np.tan(omega_t / 2) * np.eye(2)
    m = tw.cayley_monodromy(b)
    expected = np.array(
        [
            [np.cos(omega_t), -np.sin(omega_t)],
            [np.sin(omega_t), np.cos(omega_t)],
        ]
    )
    assert np.allclose(m, expected, atol=1e-12)


def test_cayley_unit_diagonal_by_hand():
    # (I + J)^-1 (I - J) worked out by 2x2 inversion
    m = tw.cayley_monodromy(np.eye(2))
    assert np.allclose(m, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-14)
    assert_symplectic(m)


def test_cayley_random_is_symplectic(rng):
    for _ in range(25):
        b = rng.normal(size=(2, 2))
        b = 0.5 * (b + b.T)
        if abs(np.linalg.det(b) + 1.0) < 1e-2:
            continue  # near the caustic manifold det B = -1
        m = tw.cayley_monodromy(b)
        assert symplectic_defect(m) < 1e-10
        assert abs(np.linalg.det(m) - 1.0) < 1e-10


def test_cayley_caustic_raises():
    # det(I + JB) = 1 + det B vanishes for det B = -1
    with pytest.raises(CausticError):
        tw.cayley_monodromy(np.diag([1.0, -1.0]))


def test_cayley_rejects_asymmetric():
    with pytest.raises(ValueError):
        tw.cayley_monodromy(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_phase_point_validation():
    with pytest.raises(ValueError):
        tw.ChordCentrePair(centre=[1, 2, 3], chord=[0, 0, 0])
    with pytest.raises(ValueError):
        tw.ChordCentrePair(centre=[np.nan, 0], chord=[0, 0])
