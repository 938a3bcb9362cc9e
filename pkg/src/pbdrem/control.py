"""Slotine-Li tracking controller and its certainty-equivalent use.

With ``qtilde = q - q*``, ``qdot_r = qdot* - K2 qtilde``, ``s = qdot - qdot_r``
the torque::

    tau = M(q) qddot_r + C(q, qdot) qdot_r + grad U(q) - K1 s

gives the closed loop ``M sdot + (C + K1) s = 0``. The first three terms are
linear in ``theta`` and are evaluated through the regressor ``Y_r`` so an
estimate that makes ``M`` singular (e.g. ``theta_hat = 0``) never needs an
inverse.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._jit import kernel
from .el_model import GRAVITY

REGULATION = 0
TRACKING = 1
REFERENCE_KINDS = {"regulation": REGULATION, "tracking": TRACKING}
REGULATION_TARGET = (0.2 * np.pi, 0.3 * np.pi)


@dataclass(frozen=True)
class ControllerGains:
    K1: tuple = (7.0, 7.0)
    K2: tuple = (4.0, 4.0)

    def __post_init__(self):
        for name in ("K1", "K2"):
            v = np.asarray(getattr(self, name), float)
            if v.shape != (2,) or not np.all(v > 0.0):
                raise ValueError(f"{name} must hold two strictly positive diagonal entries")


class TrackingErrors(NamedTuple):
    qtilde: np.ndarray
    qdot_r: np.ndarray
    s: np.ndarray
    qddot_r: np.ndarray


@kernel
def reference_kernel(kind, t, target):
    qs = np.empty(2)
    qds = np.zeros(2)
    qdds = np.zeros(2)
    if kind == REGULATION:
        qs[0] = target[0]
        qs[1] = target[1]
        return qs, qds, qdds
    pi = np.pi
    qs[0] = 0.4 * pi * np.sin(0.4 * t) + 0.3 * pi * np.sin(0.3 * t) + 0.2 * pi
    qs[1] = 0.3 * pi * np.cos(0.3 * t) - 0.1 * pi * np.cos(0.5 * t) + 0.3 * pi
    qds[0] = 0.16 * pi * np.cos(0.4 * t) + 0.09 * pi * np.cos(0.3 * t)
    qds[1] = -0.09 * pi * np.sin(0.3 * t) + 0.05 * pi * np.sin(0.5 * t)
    qdds[0] = -0.064 * pi * np.sin(0.4 * t) - 0.027 * pi * np.sin(0.3 * t)
    qdds[1] = -0.027 * pi * np.cos(0.3 * t) + 0.025 * pi * np.cos(0.5 * t)
    return qs, qds, qdds


@kernel
def tracking_errors_kernel(q, qd, qs, qds, qdds, k2):
    qt = q - qs
    qdt = qd - qds
    qd_r = qds - k2 * qt
    s = qdt + k2 * qt
    qdd_r = qdds - k2 * qdt
    return qt, qd_r, s, qdd_r


@kernel
def slotine_li_regressor(q, qd, v, a, g):
    """``Y_r`` (2 x 5) with ``Y_r theta = M(q) a + C(q, qdot) v + grad U(q)``."""
    c2 = np.cos(q[1])
    s2 = np.sin(q[1])
    Y = np.zeros((2, 5))
    Y[0, 0] = a[0]
    Y[0, 1] = c2 * (2.0 * a[0] + a[1]) - s2 * (qd[1] * v[0] + (qd[0] + qd[1]) * v[1])
    Y[1, 1] = c2 * a[0] + s2 * qd[0] * v[0]
    Y[0, 2] = a[1]
    Y[1, 2] = a[0] + a[1]
    c12 = g * np.cos(q[0] + q[1])
    Y[0, 3] = c12
    Y[1, 3] = c12
    Y[0, 4] = g * np.cos(q[0])
    return Y


@kernel
def slotine_li_kernel(q, qd, theta, qs, qds, qdds, k1, k2, g):
    qt, qd_r, s, qdd_r = tracking_errors_kernel(q, qd, qs, qds, qdds, k2)
    Y = slotine_li_regressor(q, qd, qd_r, qdd_r, g)
    tau = np.empty(2)
    for r in range(2):
        acc = -k1[r] * s[r]
        for j in range(5):
            acc += Y[r, j] * theta[j]
        tau[r] = acc
    return tau


@dataclass(frozen=True)
class DesiredTrajectory:
    """``kind`` is ``"regulation"`` (constant ``target``) or ``"tracking"``."""

    kind: str = "regulation"
    target: tuple = field(default=REGULATION_TARGET)

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}; expected one of {sorted(REFERENCE_KINDS)}")

    @property
    def code(self) -> int:
        return REFERENCE_KINDS[self.kind]

    def __call__(self, t: float):
        return reference_kernel(self.code, float(t), np.asarray(self.target, float))


def reference_signals(kind: str, t: float, target=REGULATION_TARGET):
    """Return ``(q*, qdot*, qddot*)`` at time ``t``."""
    return DesiredTrajectory(kind, tuple(target))(t)


def tracking_errors(q, qdot, t, gains: ControllerGains, traj: DesiredTrajectory) -> TrackingErrors:
    qs, qds, qdds = traj(t)
    out = tracking_errors_kernel(
        np.asarray(q, float), np.asarray(qdot, float), qs, qds, qdds, np.asarray(gains.K2, float)
    )
    return TrackingErrors(*out)


def slotine_li(q, qdot, theta, t, gains: ControllerGains, traj: DesiredTrajectory, g: float = GRAVITY) -> np.ndarray:
    qs, qds, qdds = traj(t)
    return slotine_li_kernel(
        np.asarray(q, float),
        np.asarray(qdot, float),
        np.asarray(theta, float),
        qs,
        qds,
        qdds,
        np.asarray(gains.K1, float),
        np.asarray(gains.K2, float),
        g,
    )
