"""Filtered linear regressions ``y = Omega^T theta`` for the two-link arm.

Two parameterisations are realised, both driven only by measured ``q``,
``qdot`` and ``tau`` (never by accelerations):

* power balance: ``y = H[qdot^T tau]``, ``Omega = pH[omega(q, qdot)]`` with
  ``omega^T theta`` the total energy, a ``1 x 5`` regression;
* classical: ``y = H[tau]`` and a ``2 x 5`` regressor built from the
  equations of motion.

``H(p) = 1/(p + lam)``. Every ``pH[x]`` is realised in proper form
``zdot = -lam (z + x)``, output ``z + x``.

Filter initialisation ``"matched"`` starts every ``pH`` output at zero
(``z(0) = -x(0)``), so the regression holds exactly from ``t = 0``.
``"zero"`` starts all filter states at zero; the power-balance identity then
carries an ``E(0) exp(-lam t)`` offset from the initial potential energy.
"""
from __future__ import annotations

import numpy as np

from ._jit import kernel
from .el_model import GRAVITY, ELState, inertia_basis_kernel

FILTER_INITS = ("matched", "zero")


@kernel
def omega_kernel(q, qd, g):
    c2 = np.cos(q[1])
    w = np.empty(5)
    w[0] = 0.5 * qd[0] * qd[0]
    w[1] = (qd[0] * qd[0] + qd[0] * qd[1]) * c2
    w[2] = 0.5 * qd[1] * qd[1] + qd[0] * qd[1]
    w[3] = g * (1.0 + np.sin(q[0] + q[1]))
    w[4] = g * (1.0 + np.sin(q[0]))
    return w


@kernel
def momentum_basis_kernel(q, qd):
    """Columns ``m_i(q) qdot`` (2 x 3), the signals differentiated by ``pH``."""
    B = inertia_basis_kernel(q)
    out = np.empty((2, 3))
    for i in range(3):
        for r in range(2):
            out[r, i] = B[i, r, 0] * qd[0] + B[i, r, 1] * qd[1]
    return out


@kernel
def kinetic_gradient_kernel(q, qd):
    """Columns ``1/2 grad_q(qdot^T m_i(q) qdot)`` (2 x 3); only ``m_2`` depends on q."""
    out = np.zeros((2, 3))
    out[1, 1] = -np.sin(q[1]) * (qd[0] * qd[0] + qd[0] * qd[1])
    return out


@kernel
def potential_gradient_kernel(q, g):
    """Columns ``grad U_j(q)`` (2 x 2)."""
    c12 = g * np.cos(q[0] + q[1])
    out = np.empty((2, 2))
    out[0, 0] = c12
    out[1, 0] = c12
    out[0, 1] = g * np.cos(q[0])
    out[1, 1] = 0.0
    return out


# ---------------------------------------------------------------------------
# power balance: state = (y, z[5])


@kernel
def power_balance_deriv(q, qd, tau, s, lam, g, ds):
    w = omega_kernel(q, qd, g)
    ds[0] = -lam * s[0] + qd[0] * tau[0] + qd[1] * tau[1]
    for k in range(5):
        ds[1 + k] = -lam * (s[1 + k] + w[k])


@kernel
def power_balance_output(q, qd, s, g):
    """Return ``(y, Omega)``."""
    w = omega_kernel(q, qd, g)
    Om = np.empty(5)
    for k in range(5):
        Om[k] = s[1 + k] + w[k]
    return s[0], Om


# ---------------------------------------------------------------------------
# classical: state = (y[2], zeta[2x3], eta[2x3], gam[2x2]) flattened row-major


@kernel
def classical_deriv(q, qd, tau, s, lam, g, ds):
    mom = momentum_basis_kernel(q, qd)
    kg = kinetic_gradient_kernel(q, qd)
    pg = potential_gradient_kernel(q, g)
    ds[0] = -lam * s[0] + tau[0]
    ds[1] = -lam * s[1] + tau[1]
    for r in range(2):
        for i in range(3):
            ds[2 + 3 * r + i] = -lam * (s[2 + 3 * r + i] + mom[r, i])
            ds[8 + 3 * r + i] = -lam * s[8 + 3 * r + i] + kg[r, i]
        for j in range(2):
            ds[14 + 2 * r + j] = -lam * s[14 + 2 * r + j] + pg[r, j]


@kernel
def classical_output(q, qd, s):
    """Return ``(y[2], Psi[2x5])``."""
    mom = momentum_basis_kernel(q, qd)
    y = np.empty(2)
    Psi = np.empty((2, 5))
    for r in range(2):
        y[r] = s[r]
        for i in range(3):
            Psi[r, i] = s[2 + 3 * r + i] + mom[r, i] - s[8 + 3 * r + i]
        for j in range(2):
            Psi[r, 3 + j] = s[14 + 2 * r + j]
    return y, Psi


# ---------------------------------------------------------------------------
# friction regressor: state = Omega_R[2] = H[qdot_i^2]


@kernel
def friction_deriv(qd, s, lam, ds):
    for i in range(2):
        ds[i] = -lam * s[i] + qd[i] * qd[i]


POWER_BALANCE_SIZE = 6
CLASSICAL_SIZE = 18
FRICTION_SIZE = 2


def power_balance_init(q0, qd0, g: float = GRAVITY, init: str = "matched") -> np.ndarray:
    s = np.zeros(POWER_BALANCE_SIZE)
    if init == "matched":
        s[1:] = -omega_kernel(np.asarray(q0, float), np.asarray(qd0, float), g)
    elif init != "zero":
        raise ValueError(f"filter init must be one of {FILTER_INITS}, got {init!r}")
    return s


def classical_init(q0, qd0, init: str = "matched") -> np.ndarray:
    s = np.zeros(CLASSICAL_SIZE)
    if init == "matched":
        mom = momentum_basis_kernel(np.asarray(q0, float), np.asarray(qd0, float))
        s[2:8] = -mom.ravel()
    elif init != "zero":
        raise ValueError(f"filter init must be one of {FILTER_INITS}, got {init!r}")
    return s


def omega_raw(state: ELState, g: float = GRAVITY) -> np.ndarray:
    """Energy regressor: ``omega(q, qdot) @ theta`` is the total energy."""
    q, qdot = state
    return omega_kernel(np.asarray(q, float), np.asarray(qdot, float), g)


def _rk4_held(deriv, s, dt):
    k1 = deriv(s)
    k2 = deriv(s + 0.5 * dt * k1)
    k3 = deriv(s + 0.5 * dt * k2)
    k4 = deriv(s + dt * k3)
    return s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _FilterBank:
    """Single-owner filter state advanced with plant signals held over a step.

    Holding ``(q, qdot, tau)`` constant across the step makes a standalone
    step first-order accurate in the plant signals; the coupled simulator in
    :mod:`pbdrem.harness` integrates plant and filters together instead.
    """

    size = 0

    def __init__(self, lam: float = 1.0, g: float = GRAVITY):
        if not lam > 0.0:
            raise ValueError(f"filter pole lam must be positive, got {lam!r}")
        self.lam = float(lam)
        self.g = float(g)
        self.s = np.zeros(self.size)

    def _deriv(self, q, qd, tau):
        raise NotImplementedError

    def step(self, state: ELState, tau, dt: float):
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        q = np.asarray(state[0], float)
        qd = np.asarray(state[1], float)
        tau = np.asarray(tau, float)
        self.s = _rk4_held(self._deriv(q, qd, tau), self.s, dt)
        return self.output(state)

    def output(self, state: ELState):
        raise NotImplementedError


class PowerBalanceLre(_FilterBank):
    """Scalar regression ``y = Omega^T theta`` from the power balance."""

    size = POWER_BALANCE_SIZE

    def __init__(self, lam=1.0, g=GRAVITY, state0: ELState | None = None, init="matched"):
        super().__init__(lam, g)
        if state0 is not None:
            self.s = power_balance_init(state0[0], state0[1], g, init)

    @property
    def y(self) -> float:
        return float(self.s[0])

    @property
    def z(self) -> np.ndarray:
        return self.s[1:].copy()

    def _deriv(self, q, qd, tau):
        def f(s):
            ds = np.empty_like(s)
            power_balance_deriv(q, qd, tau, s, self.lam, self.g, ds)
            return ds

        return f

    def output(self, state: ELState):
        y, Om = power_balance_output(np.asarray(state[0], float), np.asarray(state[1], float), self.s, self.g)
        return float(y), Om


class ClassicalLre(_FilterBank):
    """Vector regression ``y = Psi theta`` (``Psi`` is 2 x 5) from the equations of motion."""

    size = CLASSICAL_SIZE

    def __init__(self, lam=1.0, g=GRAVITY, state0: ELState | None = None, init="matched"):
        super().__init__(lam, g)
        if state0 is not None:
            self.s = classical_init(state0[0], state0[1], init)

    def _deriv(self, q, qd, tau):
        def f(s):
            ds = np.empty_like(s)
            classical_deriv(q, qd, tau, s, self.lam, self.g, ds)
            return ds

        return f

    def output(self, state: ELState):
        return classical_output(np.asarray(state[0], float), np.asarray(state[1], float), self.s)


class FrictionRegressor(_FilterBank):
    """``Omega_R = H[(qdot_1^2, qdot_2^2)]``; appended to ``Omega`` it absorbs viscous friction."""

    size = FRICTION_SIZE

    def _deriv(self, q, qd, tau):
        def f(s):
            ds = np.empty_like(s)
            friction_deriv(qd, s, self.lam, ds)
            return ds

        return f

    def output(self, state: ELState):
        return self.s.copy()


def power_balance_step(lre: PowerBalanceLre, state: ELState, tau, dt: float):
    return lre.step(state, tau, dt)


def classical_step(lre: ClassicalLre, state: ELState, tau, dt: float):
    return lre.step(state, tau, dt)


def friction_regressor_step(reg: FrictionRegressor, state: ELState, dt: float):
    return reg.step(state, (0.0, 0.0), dt)

