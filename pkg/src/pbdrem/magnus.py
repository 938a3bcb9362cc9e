"""Exponential propagators for the stiff linear blocks.

The gradient estimators and the regressor generator are linear in their own
states, with coefficients that can be enormous (``gamma Delta^2`` or
``alpha Delta`` reach 1e8 on the paper's experiments). They are advanced with
the fourth-order Magnus integrator::

    Omega = h/2 (A1 + A2) + sqrt(3) h^2 / 12 [A2, A1]

with ``A1, A2`` the coefficient matrices at the Gauss nodes of the step, and
``x <- expm(Omega) x``. The commutator is only meaningful while
``h |A| < pi``; beyond ``h |A| > STIFF`` it is dropped (exponential midpoint),
otherwise rounding-level inconsistencies between the nodes get amplified by
``h |A|``. Any linear subspace left invariant by every ``A(t)``
stays invariant under ``expm(Omega)``, and ``det expm(Omega) = exp(tr Omega)``.
"""
from __future__ import annotations

import numpy as np

from ._jit import kernel

GAUSS_C1 = 0.5 - np.sqrt(3.0) / 6.0
GAUSS_C2 = 0.5 + np.sqrt(3.0) / 6.0
COMM = np.sqrt(3.0) / 12.0
STIFF = 1.0

# [6/6] Pade coefficients of exp
_PADE6 = np.array([1.0, 1.0 / 2.0, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0])


@kernel
def inf_norm(A):
    best = 0.0
    for i in range(A.shape[0]):
        acc = 0.0
        for j in range(A.shape[1]):
            acc += abs(A[i, j])
        if acc > best:
            best = acc
    return best


@kernel
def expm_kernel(A):
    """Matrix exponential by scaling and squaring with a [6/6] Pade approximant."""
    n = A.shape[0]
    norm = 0.0
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += abs(A[i, j])
        if col > norm:
            norm = col
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    X = A / (2.0**s)
    N = np.eye(n)
    D = np.eye(n)
    P = np.eye(n)
    sign = 1.0
    for k in range(1, 7):
        P = P @ X
        sign = -sign
        N = N + _PADE6[k] * P
        D = D + (sign * _PADE6[k]) * P
    E = np.linalg.solve(D, N)
    for _ in range(s):
        E = E @ E
    return E


@kernel
def phi_pair_kernel(M):
    """Return ``(expm(M), phi1(M))`` with ``phi1(M) = sum_k M^k / (k+1)!``."""
    n = M.shape[0]
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = M
    for i in range(n):
        aug[i, n + i] = 1.0
    E = expm_kernel(aug)
    return E[:n, :n].copy(), E[:n, n:].copy()


@kernel
def phi1_scalar(s):
    """``(1 - exp(-s)) / s`` for ``s >= 0``, accurate near zero."""
    if abs(s) < 1e-8:
        return 1.0 - 0.5 * s
    return -np.expm1(-s) / s


@kernel
def scalar_linear_update(x, a1, b1, a2, b2, h):
    """Magnus-4 step of ``xdot = -a(t) x + b(t)`` from node values at the two Gauss points.

    If ``b = a * c`` at both nodes the step relaxes ``x`` exactly towards ``c``.
    """
    s = 0.5 * h * (a1 + a2)
    r = 0.5 * h * (b1 + b2)
    if h * max(abs(a1), abs(a2)) <= STIFF:
        r += COMM * h * h * (a1 * b2 - a2 * b1)
    return np.exp(-s) * x + r * phi1_scalar(s)


@kernel
def matrix_linear_update(x, G1, g1, G2, g2, h):
    """Magnus-4 step of ``xdot = -G(t) x + g(t)`` for vector ``x``."""
    Om = -0.5 * h * (G1 + G2)
    r = 0.5 * h * (g1 + g2)
    if h * max(inf_norm(G1), inf_norm(G2)) <= STIFF:
        Om += COMM * h * h * (G2 @ G1 - G1 @ G2)
        r += COMM * h * h * (G1 @ g2 - G2 @ g1)
    E, P = phi_pair_kernel(Om)
    return E @ x + P @ r
