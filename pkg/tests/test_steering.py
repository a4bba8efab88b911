import numpy as np
import pytest

from eeisac.steering import steering, steering_derivative, steering_pair


def test_broadside_all_ones():
    np.testing.assert_allclose(steering(np.pi / 2, 4), np.ones(4), atol=1e-14)


def test_endfire_alternating():
    np.testing.assert_allclose(steering(0.0, 2), [1.0, -1.0], atol=1e-14)


def test_sixty_degree_values():
    # cos(pi/3) = 1/2 -> entries exp(-j*pi*m/2)
    np.testing.assert_allclose(steering(np.pi / 3, 3), [1.0, -1.0j, -1.0],
                               atol=1e-14)


def test_first_entry_unity_and_unit_modulus():
    for theta in np.linspace(0.1, np.pi - 0.1, 7):
        a = steering(theta, 16)
        assert a[0] == 1.0 + 0.0j
        np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-14)


def test_norm_squared_equals_count():
    for n in (1, 3, 8, 32):
        a = steering(0.7364, n)
        assert abs(np.vdot(a, a).real - n) < 1e-12 * max(n, 1)


def test_derivative_broadside():
    da = steering_derivative(np.pi / 2, 3)
    np.testing.assert_allclose(da, [0.0, 1j * np.pi, 2j * np.pi], atol=1e-13)


def test_derivative_single_antenna_zero():
    np.testing.assert_allclose(steering_derivative(1.234, 1), [0.0])


def test_derivative_quarter_pi_entry():
    da = steering_derivative(np.pi / 4, 2)
    expect = 1j * np.pi * (np.sqrt(2) / 2) * np.exp(-1j * np.pi * np.sqrt(2) / 2)
    np.testing.assert_allclose(da[1], expect, atol=1e-13)


def test_derivative_matches_central_difference():
    h = 1e-6
    for n in (2, 5, 17, 32):
        for theta in np.linspace(0.15, np.pi - 0.15, 9):
            fd = (steering(theta + h, n) - steering(theta - h, n)) / (2 * h)
            da = steering_derivative(theta, n)
            assert np.max(np.abs(da - fd)) <= 1e-5


def test_pair_shapes():
    p = steering_pair(1.0, 4, 6)
    assert p.a_t.shape == (4,) and p.a_r.shape == (6,) and p.da_t.shape == (4,)
    assert p.da_t[0] == 0.0


def test_rejects_empty_array():
    with pytest.raises(ValueError):
        steering(1.0, 0)
