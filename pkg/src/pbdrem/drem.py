"""Kreisselmeier regressor extension and mixing.

From an ``n x q`` regression ``Y = Omega theta`` the filters::

    Zdot   = -lam Z   + Omega^T Y
    Psidot = -lam Psi + Omega^T Omega

give ``Z = Psi theta``; multiplying by ``adj(Psi)`` decouples it into ``q``
scalar regressions ``Ymix_i = Delta theta_i`` with ``Delta = det(Psi)``.
The adjugate is formed from cofactors so it stays well defined as
``Delta -> 0``.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import trapezoid

from ._jit import kernel


@kernel
def det_kernel(A):
    """Determinant by Gaussian elimination with partial pivoting."""
    n = A.shape[0]
    if n == 0:
        return 1.0
    U = A.copy()
    det = 1.0
    for k in range(n):
        p = k
        best = abs(U[k, k])
        for i in range(k + 1, n):
            if abs(U[i, k]) > best:
                best = abs(U[i, k])
                p = i
        if best == 0.0:
            return 0.0
        if p != k:
            for j in range(n):
                tmp = U[k, j]
                U[k, j] = U[p, j]
                U[p, j] = tmp
            det = -det
        pivot = U[k, k]
        det *= pivot
        for i in range(k + 1, n):
            f = U[i, k] / pivot
            if f != 0.0:
                for j in range(k + 1, n):
                    U[i, j] -= f * U[k, j]
    return det


@kernel
def adjugate_kernel(A):
    """Transpose of the cofactor matrix; ``adj(A) A = det(A) I``."""
    n = A.shape[0]
    adj = np.empty((n, n))
    if n == 1:
        adj[0, 0] = 1.0
        return adj
    minor = np.empty((n - 1, n - 1))
    for i in range(n):
        for j in range(n):
            # minor of A without row i and column j
            r = 0
            for a in range(n):
                if a == i:
                    continue
                c = 0
                for b in range(n):
                    if b == j:
                        continue
                    minor[r, c] = A[a, b]
                    c += 1
                r += 1
            sign = 1.0 if (i + j) % 2 == 0 else -1.0
            adj[j, i] = sign * det_kernel(minor)
    return adj


@kernel
def drem_deriv(Y, Om, s, lam, ds):
    """Extension filters; ``s = (Z[q], Psi[q*q] row-major)``, ``Om`` is ``n x q``."""
    n = Om.shape[0]
    q = Om.shape[1]
    for i in range(q):
        acc = 0.0
        for k in range(n):
            acc += Om[k, i] * Y[k]
        ds[i] = -lam * s[i] + acc
    for i in range(q):
        for j in range(q):
            acc = 0.0
            for k in range(n):
                acc += Om[k, i] * Om[k, j]
            ds[q + i * q + j] = -lam * s[q + i * q + j] + acc


@kernel
def drem_output(s, q):
    """Return ``(Ymix[q], Delta)`` from the extension state."""
    Z = s[:q]
    Psi = s[q : q + q * q].reshape((q, q))
    adj = adjugate_kernel(Psi)
    Ymix = np.zeros(q)
    for i in range(q):
        for j in range(q):
            Ymix[i] += adj[i, j] * Z[j]
    return Ymix, det_kernel(Psi)


def adjugate(A) -> np.ndarray:
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjugate needs a square matrix, got shape {A.shape}")
    return adjugate_kernel(A)


def determinant(A) -> float:
    A = np.ascontiguousarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"determinant needs a square matrix, got shape {A.shape}")
    return float(det_kernel(A))


def excitation_integral(delta, t, t_c: float | None = None) -> float:
    """Trapezoidal ``int_0^{t_c} Delta^2``; ``t_c=None`` integrates the whole record."""
    delta = np.asarray(delta, float)
    t = np.asarray(t, float)
    if t_c is not None:
        keep = t <= t_c + 1e-12
        delta, t = delta[keep], t[keep]
    if t.size < 2:
        return 0.0
    return float(trapezoid(delta**2, t))


class DremState:
    """Single-owner extension state ``(Z, Psi)`` for a ``q``-parameter regression."""

    def __init__(self, q: int, lam: float = 1.0):
        if not lam > 0.0:
            raise ValueError(f"extension pole must be positive, got {lam!r}")
        self.q = int(q)
        self.lam = float(lam)
        self.s = np.zeros(self.q + self.q * self.q)

    @property
    def Z(self) -> np.ndarray:
        return self.s[: self.q].copy()

    @property
    def Psi(self) -> np.ndarray:
        return self.s[self.q :].reshape(self.q, self.q).copy()

    def output(self):
        Ymix, delta = drem_output(self.s, self.q)
        return Ymix, float(delta)

    def step(self, Y, Om, dt: float):
        """One RK4 step with ``(Y, Om)`` held over the step; returns ``(Ymix, Delta)``."""
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        Y = np.atleast_1d(np.asarray(Y, float))
        Om = np.atleast_2d(np.asarray(Om, float))
        if Om.shape != (Y.size, self.q):
            raise ValueError(f"regressor shape {Om.shape} does not match ({Y.size}, {self.q})")

        def f(s):
            ds = np.empty_like(s)
            drem_deriv(Y, Om, s, self.lam, ds)
            return ds

        k1 = f(self.s)
        k2 = f(self.s + 0.5 * dt * k1)
        k3 = f(self.s + 0.5 * dt * k2)
        k4 = f(self.s + dt * k3)
        self.s = self.s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return self.output()


def drem_step(state: DremState, Y, Om, dt: float):
    return state.step(Y, Om, dt)
