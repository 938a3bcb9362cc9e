"""Gradient parameter update laws.

* vector gradient on ``y = Psi theta``: ``thdot = Gamma Psi^T (y - Psi th)``
* per-channel DREM gradient on ``Ymix_i = Delta theta_i``:
  ``thdot_i = gamma_i Delta (Ymix_i - Delta th_i)``, optionally normalised
  by ``1 + Delta^2``
* normalised gradient on the generated regression ``Y = Phi21 theta_i``:
  ``thdot_i = gamma_i Phi21 / (1 + Phi21^2) (Y - Phi21 th_i)``

All laws are linear in the estimate, ``thdot = -G th + g``. A step with the
regression held constant is taken exactly, ``th <- expm(-G dt) th + ...``,
which stays stable for any gain; ``gamma Delta^2`` routinely exceeds 1e6.
"""
from __future__ import annotations

import numpy as np

from ._jit import kernel
from .magnus import matrix_linear_update, scalar_linear_update


@kernel
def vector_gradient_deriv(Gamma, Psi, y, th, dth):
    n, w = Psi.shape
    err = np.empty(n)
    for k in range(n):
        acc = y[k]
        for j in range(w):
            acc -= Psi[k, j] * th[j]
        err[k] = acc
    g = np.zeros(w)
    for j in range(w):
        for k in range(n):
            g[j] += Psi[k, j] * err[k]
    for i in range(w):
        acc = 0.0
        for j in range(w):
            acc += Gamma[i, j] * g[j]
        dth[i] = acc


@kernel
def scalar_gradient_rate(gamma, reg, out, th, normalized):
    gain = gamma * reg
    if normalized:
        gain /= 1.0 + reg * reg
    return gain * (out - reg * th)


@kernel
def scalar_gradient_coeffs(gamma, reg, out, normalized):
    """``(a, b)`` with ``thdot = -a th + b``."""
    gain = gamma * reg
    if normalized:
        gain /= 1.0 + reg * reg
    return gain * reg, gain * out


@kernel
def vector_gradient_coeffs(Gamma, Psi, y):
    """``(G, g)`` with ``thdot = -G th + g``: ``G = Gamma Psi^T Psi``, ``g = Gamma Psi^T y``."""
    return Gamma @ (Psi.T @ Psi), Gamma @ (Psi.T @ y)


class VectorGradientState:
    def __init__(self, theta0, Gamma):
        self.theta_hat = np.array(theta0, dtype=float)
        w = self.theta_hat.size
        Gamma = np.asarray(Gamma, dtype=float)
        if Gamma.ndim == 0:
            Gamma = float(Gamma) * np.eye(w)
        if Gamma.shape != (w, w):
            raise ValueError(f"Gamma must be {w}x{w}")
        if not np.allclose(Gamma, Gamma.T) or np.linalg.eigvalsh(Gamma)[0] <= 0.0:
            raise ValueError("Gamma must be symmetric positive definite")
        self.Gamma = Gamma

    def step(self, y, Psi, dt: float) -> np.ndarray:
        """Exact step with ``(y, Psi)`` held; a 1-D ``Psi`` is the single row of a scalar regression."""
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        y = np.atleast_1d(np.asarray(y, float))
        Psi = np.atleast_2d(np.asarray(Psi, float))
        if Psi.shape != (y.size, self.theta_hat.size):
            raise ValueError(f"Psi must be {y.size}x{self.theta_hat.size}, got {Psi.shape}")
        G, g = vector_gradient_coeffs(self.Gamma, Psi, y)
        self.theta_hat = matrix_linear_update(self.theta_hat, G, g, G, g, float(dt))
        return self.theta_hat.copy()


class ScalarGradientState:
    def __init__(self, theta0: float = 0.0, gamma: float = 25.0, normalized: bool = False):
        if not gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {gamma!r}")
        self.theta_hat = float(theta0)
        self.gamma = float(gamma)
        self.normalized = bool(normalized)

    def _advance(self, reg, out, dt, normalized):
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        a, b = scalar_gradient_coeffs(self.gamma, float(reg), float(out), normalized)
        self.theta_hat = float(scalar_linear_update(self.theta_hat, a, b, a, b, float(dt)))
        return self.theta_hat


def vector_gradient_step(s: VectorGradientState, y, Psi, dt: float) -> np.ndarray:
    return s.step(y, Psi, dt)


def drem_gradient_step(s: ScalarGradientState, ymix: float, delta: float, dt: float) -> float:
    return s._advance(delta, ymix, dt, s.normalized)


def newlre_gradient_step(s: ScalarGradientState, Y: float, phi21: float, dt: float) -> float:
    return s._advance(phi21, Y, dt, True)
