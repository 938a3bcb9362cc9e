import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from pbdrem.magnus import (
    GAUSS_C1,
    GAUSS_C2,
    expm_kernel,
    matrix_linear_update,
    phi1_scalar,
    phi_pair_kernel,
    scalar_linear_update,
)


@given(arrays(float, (4, 4), elements=st.floats(-20, 20)))
@settings(max_examples=100)
def test_expm_matches_scipy(A):
    ref = expm(A)
    np.testing.assert_allclose(expm_kernel(A), ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


def test_phi_pair():
    M = np.array([[-1.0, 2.0], [0.5, -3.0]])
    E, P = phi_pair_kernel(M)
    np.testing.assert_allclose(E, expm(M), rtol=1e-13)
    np.testing.assert_allclose(M @ P, E - np.eye(2), atol=1e-13)


@pytest.mark.parametrize("s", [0.0, 1e-12, 1e-5, 0.3, 5.0, 800.0])
def test_phi1_scalar(s):
    want = 1.0 if s == 0 else -np.expm1(-s) / s
    assert phi1_scalar(s) == pytest.approx(want, rel=1e-12)


def test_scalar_update_exact_for_constant_coefficients():
    x = scalar_linear_update(2.0, 3.0, 1.5, 3.0, 1.5, 0.7)
    assert x == pytest.approx(0.5 + 1.5 * np.exp(-2.1), rel=1e-14)


def test_stiff_scalar_update_relaxes_to_target():
    # h a = 1e10: one step lands on b / a without overflow
    assert scalar_linear_update(5.0, 1e13, 2e13, 1e13, 2e13, 1e-3) == pytest.approx(2.0, rel=1e-15)


def _gauss_nodes(f, t, h):
    return f(t + GAUSS_C1 * h), f(t + GAUSS_C2 * h)


def test_fourth_order_on_time_varying_system():
    def G(t):
        return np.array([[1.0 + np.sin(t), 0.3 * t], [-0.2, 2.0 + np.cos(2 * t)]])

    def g(t):
        return np.array([np.cos(t), t * t])

    ref = solve_ivp(lambda t, x: -G(t) @ x + g(t), (0, 1), [1.0, -1.0], rtol=1e-13, atol=1e-13).y[:, -1]
    errs = []
    for n in (10, 20, 40):
        h = 1.0 / n
        x = np.array([1.0, -1.0])
        for k in range(n):
            (G1, G2), (g1, g2) = _gauss_nodes(G, k * h, h), _gauss_nodes(g, k * h, h)
            x = matrix_linear_update(x, G1, g1, G2, g2, h)
        errs.append(np.abs(x - ref).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 12) & (ratios < 20))


def test_fixed_point_preserved_when_consistent():
    # G theta = g at both nodes keeps theta exactly, even in the stiff branch
    rng = np.random.default_rng(1)
    theta = rng.standard_normal(3)
    for scale in (1.0, 1e9):
        B1, B2 = rng.standard_normal((2, 3, 3))
        G1, G2 = scale * B1 @ B1.T, scale * B2 @ B2.T
        x = matrix_linear_update(theta, G1, G1 @ theta, G2, G2 @ theta, 1e-3)
        np.testing.assert_allclose(x, theta, rtol=1e-6)
