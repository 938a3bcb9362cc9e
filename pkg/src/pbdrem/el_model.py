"""Simple Euler-Lagrange plants: inertia, potential, Coriolis and forward dynamics.

The two-link planar arm is parameterised linearly in a lumped vector
``theta`` of five entries::

    theta = (l2^2 m2 + l1^2 (m1 + m2), l1 l2 m2, l2^2 m2, l2 m2, l1 (m1 + m2))

with point masses at the link tips. ``M(q) = sum_i m_i(q) theta_i`` for the
first three entries and ``U(q) = sum_j U_j(q) theta_{3+j}`` for the last two.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._jit import kernel

GRAVITY = 9.81
N_Q = 2
N_INERTIA = 3
N_POTENTIAL = 2
N_THETA = N_INERTIA + N_POTENTIAL
RCOND_MIN = 1e-12


class SingularInertiaError(ValueError):
    """The inertia matrix is not safely invertible (invalid parameters)."""


@dataclass(frozen=True)
class RobotGeometry:
    """Link lengths [m], tip masses [kg] and gravity [m/s^2]."""

    l1: float = 0.7
    l2: float = 0.8
    m1: float = 1.5
    m2: float = 0.5
    g: float = GRAVITY

    def __post_init__(self):
        for name in ("l1", "l2", "m1", "m2", "g"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


class ELState(NamedTuple):
    q: np.ndarray
    qdot: np.ndarray


def theta_from_geometry(geom: RobotGeometry) -> np.ndarray:
    l1, l2, m1, m2 = geom.l1, geom.l2, geom.m1, geom.m2
    return np.array(
        [
            l2**2 * m2 + l1**2 * (m1 + m2),
            l1 * l2 * m2,
            l2**2 * m2,
            l2 * m2,
            l1 * (m1 + m2),
        ]
    )


def validate_theta(theta) -> np.ndarray:
    """Return ``theta`` as a float array; raise if M(q) can fail to be positive definite."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N_THETA,):
        raise ValueError(f"theta must have {N_THETA} entries, got shape {theta.shape}")
    if theta[0] <= 0.0 or theta[2] <= 0.0:
        raise ValueError("theta_1 and theta_3 must be positive")
    # det M = theta1 theta3 - theta3^2 - (theta2 c)^2 and M11 is affine in c = cos(q2): worst case at c = +-1
    for c in (-1.0, 1.0):
        m11 = theta[0] + 2.0 * theta[1] * c
        m12 = theta[2] + theta[1] * c
        if m11 <= 0.0 or m11 * theta[2] - m12**2 <= 0.0:
            raise ValueError(f"theta gives a singular inertia matrix at cos(q2)={c:+.0f}")
    return theta


# ---------------------------------------------------------------------------
# kernels


@kernel
def inertia_kernel(q, theta):
    c2 = np.cos(q[1])
    M = np.empty((2, 2))
    M[0, 0] = theta[0] + 2.0 * theta[1] * c2
    M[0, 1] = theta[2] + theta[1] * c2
    M[1, 0] = M[0, 1]
    M[1, 1] = theta[2]
    return M


@kernel
def inertia_basis_kernel(q):
    """Stack of the three 2x2 basis matrices multiplying theta_1..theta_3."""
    c2 = np.cos(q[1])
    B = np.zeros((3, 2, 2))
    B[0, 0, 0] = 1.0
    B[1, 0, 0] = 2.0 * c2
    B[1, 0, 1] = c2
    B[1, 1, 0] = c2
    B[2, 0, 1] = 1.0
    B[2, 1, 0] = 1.0
    B[2, 1, 1] = 1.0
    return B


@kernel
def potential_basis_kernel(q, g):
    out = np.empty(2)
    out[0] = g * (1.0 + np.sin(q[0] + q[1]))
    out[1] = g * (1.0 + np.sin(q[0]))
    return out


@kernel
def potential_kernel(q, theta, g):
    return theta[3] * g * (1.0 + np.sin(q[0] + q[1])) + theta[4] * g * (1.0 + np.sin(q[0]))


@kernel
def gravity_kernel(q, theta, g):
    c12 = np.cos(q[0] + q[1])
    out = np.empty(2)
    out[0] = g * (theta[3] * c12 + theta[4] * np.cos(q[0]))
    out[1] = g * theta[3] * c12
    return out


@kernel
def coriolis_kernel(q, qd, theta):
    h = theta[1] * np.sin(q[1])
    C = np.empty((2, 2))
    C[0, 0] = -h * qd[1]
    C[0, 1] = -h * (qd[0] + qd[1])
    C[1, 0] = h * qd[0]
    C[1, 1] = 0.0
    return C


@kernel
def energy_kernel(q, qd, theta, g):
    M = inertia_kernel(q, theta)
    kin = 0.5 * (M[0, 0] * qd[0] * qd[0] + 2.0 * M[0, 1] * qd[0] * qd[1] + M[1, 1] * qd[1] * qd[1])
    return kin + potential_kernel(q, theta, g)


@kernel
def solve_inertia_kernel(M, rhs):
    """Solve M x = rhs for a symmetric 2x2 M, refusing ill-conditioned matrices."""
    a = M[0, 0]
    b = M[0, 1]
    d = M[1, 1]
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * b)
    lmax = half_tr + disc
    lmin = half_tr - disc
    if not (lmin > RCOND_MIN * abs(lmax)):
        raise SingularInertiaError("inertia matrix is singular or not positive definite")
    det = a * d - b * b
    x = np.empty(2)
    x[0] = (d * rhs[0] - b * rhs[1]) / det
    x[1] = (a * rhs[1] - b * rhs[0]) / det
    return x


@kernel
def accel_kernel(q, qd, tau, theta, g, friction):
    """Joint accelerations of M qdd + C qd + grad U + R qd = tau, R = diag(friction)."""
    M = inertia_kernel(q, theta)
    C = coriolis_kernel(q, qd, theta)
    gv = gravity_kernel(q, theta, g)
    rhs = np.empty(2)
    for i in range(2):
        rhs[i] = tau[i] - C[i, 0] * qd[0] - C[i, 1] * qd[1] - gv[i] - friction[i] * qd[i]
    return solve_inertia_kernel(M, rhs)


# ---------------------------------------------------------------------------
# Python-level interface


class ELSystem:
    """Interface of a simple EL plant with linearly parameterised M and U.

    Subclasses supply the basis matrices ``m_i(q)`` and basis potentials
    ``U_j(q)`` plus their closed forms; the generic methods here build energy,
    the regressor ``omega`` and forward dynamics on top of them.
    """

    n_q: int
    n_inertia: int
    n_potential: int

    @property
    def n_theta(self) -> int:
        return self.n_inertia + self.n_potential

    def inertia_basis(self, q) -> np.ndarray:
        raise NotImplementedError

    def potential_basis(self, q) -> np.ndarray:
        raise NotImplementedError

    def inertia(self, q, theta) -> np.ndarray:
        B = self.inertia_basis(q)
        return np.tensordot(np.asarray(theta)[: self.n_inertia], B, axes=1)

    def potential(self, q, theta) -> float:
        return float(self.potential_basis(q) @ np.asarray(theta)[self.n_inertia :])

    def gravity(self, q, theta) -> np.ndarray:
        raise NotImplementedError

    def coriolis(self, q, qdot, theta) -> np.ndarray:
        raise NotImplementedError

    def energy_regressor(self, q, qdot) -> np.ndarray:
        """Vector ``omega`` with ``energy(q, qdot, theta) == omega @ theta``."""
        qdot = np.asarray(qdot, dtype=float)
        B = self.inertia_basis(q)
        kinetic = 0.5 * np.einsum("i,kij,j->k", qdot, B, qdot)
        return np.concatenate([kinetic, self.potential_basis(q)])

    def energy(self, q, qdot, theta) -> float:
        qdot = np.asarray(qdot, dtype=float)
        return float(0.5 * qdot @ self.inertia(q, theta) @ qdot + self.potential(q, theta))

    def forward_dynamics(self, q, qdot, tau, theta, friction=None) -> np.ndarray:
        M = self.inertia(q, theta)
        rhs = np.asarray(tau, float) - self.coriolis(q, qdot, theta) @ qdot - self.gravity(q, theta)
        if friction is not None:
            rhs = rhs - np.asarray(friction, float) * qdot
        eig = np.linalg.eigvalsh(M)
        if not eig[0] > RCOND_MIN * abs(eig[-1]):
            raise SingularInertiaError("inertia matrix is singular or not positive definite")
        return np.linalg.solve(M, rhs)


class TwoLinkArm(ELSystem):
    """Planar two-link arm with tip masses; ``G = I_2``."""

    n_q = N_Q
    n_inertia = N_INERTIA
    n_potential = N_POTENTIAL

    def __init__(self, geometry: RobotGeometry | None = None):
        self.geometry = geometry or RobotGeometry()
        self.g = self.geometry.g
        self.theta = theta_from_geometry(self.geometry)

    def inertia_basis(self, q):
        return inertia_basis_kernel(np.asarray(q, dtype=float))

    def potential_basis(self, q):
        return potential_basis_kernel(np.asarray(q, dtype=float), self.g)

    def inertia(self, q, theta):
        return inertia_kernel(np.asarray(q, dtype=float), np.asarray(theta, dtype=float))

    def potential(self, q, theta):
        return float(potential_kernel(np.asarray(q, dtype=float), np.asarray(theta, dtype=float), self.g))

    def gravity(self, q, theta):
        return gravity_kernel(np.asarray(q, dtype=float), np.asarray(theta, dtype=float), self.g)

    def coriolis(self, q, qdot, theta):
        return coriolis_kernel(
            np.asarray(q, dtype=float), np.asarray(qdot, dtype=float), np.asarray(theta, dtype=float)
        )


# module-level conveniences on the default arm (g = 9.81)

def inertia_matrix(q, theta) -> np.ndarray:
    return inertia_kernel(np.asarray(q, dtype=float), np.asarray(theta, dtype=float))


def potential(q, theta, g: float = GRAVITY) -> float:
    return float(potential_kernel(np.asarray(q, dtype=float), np.asarray(theta, dtype=float), g))


def gravity_vector(q, theta, g: float = GRAVITY) -> np.ndarray:
    return gravity_kernel(np.asarray(q, dtype=float), np.asarray(theta, dtype=float), g)


def coriolis_matrix(q, qdot, theta) -> np.ndarray:
    return coriolis_kernel(
        np.asarray(q, dtype=float), np.asarray(qdot, dtype=float), np.asarray(theta, dtype=float)
    )


def energy(state: ELState, theta, g: float = GRAVITY) -> float:
    q, qdot = state
    return float(
        energy_kernel(np.asarray(q, dtype=float), np.asarray(qdot, dtype=float), np.asarray(theta, dtype=float), g)
    )


def forward_dynamics(state: ELState, tau, theta, g: float = GRAVITY, friction=(0.0, 0.0)) -> np.ndarray:
    """Accelerations ``M^-1 (tau - C qdot - grad U - R qdot)``.

    Raises :class:`SingularInertiaError` when the reciprocal condition
    number of ``M(q)`` drops below ``RCOND_MIN``.
    """
    q, qdot = state
    return accel_kernel(
        np.asarray(q, dtype=float),
        np.asarray(qdot, dtype=float),
        np.asarray(tau, dtype=float),
        np.asarray(theta, dtype=float),
        g,
        np.asarray(friction, dtype=float),
    )
