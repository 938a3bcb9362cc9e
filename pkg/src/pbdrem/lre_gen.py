"""Exciting-regressor generator for a scalar regression ``Ymix = Delta theta``.

A 2x2 transition matrix ``Phi`` driven by ``A(t) = [[0, u1], [u2 Delta, u3]]``
together with the auxiliary states ``z`` and ``xi`` yields a new scalar
regression ``Y = Phi_21 theta`` with ``Y = z - xi_2``.

The steering signals pump or damp the "energy" of the first column of
``Phi`` towards the shell ``(Phi_11^2 + Phi_21^2) / 2 = beta``::

    u1 = -alpha(t) Delta,  u2 = alpha(t),  u3 = -((Phi_11^2 + Phi_21^2)/2 - beta)

so that ``Phi_21`` can stay away from zero after ``Delta`` has died out.

The generator is linear. With ``p = z - xi_2`` (which is ``Y``) the pair
``(p, xi_1)`` obeys a closed 2x2 system ``d/dt (p, xi1) = K (p, xi1) + (u2 Ymix, 0)``
with ``K = [[u3, -u2 Delta], [-u1, 0]]``, and ``(Phi21, -Phi11)``,
``(Phi22, -Phi12)`` obey the same ``K`` without forcing. ``z`` decouples:
``zdot = u3 z + u2 Ymix``. Steps are exponential in these coordinates (see
:mod:`pbdrem.magnus`), so ``Y - Phi_21 theta`` never suffers the cancellation
of ``z - xi_2`` when ``z`` is huge, and ``det Phi`` follows ``exp(int u3)``
to rounding. Under the pump-damp law ``K`` is a rotation at rate ``alpha Delta``
plus damping; when that rotation is far too fast to resolve, the step is the
Strang splitting damping/rotation/damping with the rotation in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._jit import kernel
from .magnus import COMM, STIFF, inf_norm, phi_pair_kernel, scalar_linear_update

GEN_SIZE = 7  # z, xi1, xi2, Phi11, Phi12, Phi21, Phi22


@dataclass(frozen=True)
class PumpDampConfig:
    """Steering parameters; ``alpha(t) = alpha_amp * sin(alpha_freq * t + alpha_phase)``."""

    beta: float = 0.25
    alpha_amp: float = 1.0
    alpha_freq: float = 0.2
    alpha_phase: float = 0.0
    eps: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.beta < 0.5:
            raise ValueError(f"beta must lie in (0, 1/2), got {self.beta!r}")
        for name in ("alpha_amp", "alpha_freq", "alpha_phase"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")

    def alpha(self, t):
        return alpha_kernel(t, self.alpha_amp, self.alpha_freq, self.alpha_phase)


class NewLre(NamedTuple):
    Y: float
    phi21: float


@kernel
def alpha_kernel(t, amp, freq, phase):
    return amp * np.sin(freq * t + phase)


@kernel
def pump_damp_kernel(phi11, phi21, delta, alpha, beta):
    v_tilde = 0.5 * (phi11 * phi11 + phi21 * phi21) - beta
    return -alpha * delta, alpha, -v_tilde


@kernel
def generator_deriv(s, ymix, delta, u1, u2, u3, ds):
    z = s[0]
    xi1 = s[1]
    xi2 = s[2]
    a21 = u2 * delta
    ds[0] = u2 * ymix + u3 * z
    ds[1] = u1 * xi2 - u1 * z
    ds[2] = a21 * xi1 + u3 * xi2
    # Phi rows: (s[3], s[4]) and (s[5], s[6])
    ds[3] = u1 * s[5]
    ds[4] = u1 * s[6]
    ds[5] = a21 * s[3] + u3 * s[5]
    ds[6] = a21 * s[4] + u3 * s[6]


@kernel
def generator_matrix(delta, u1, u2, u3):
    """``K`` acting on ``(p, xi1)`` and on the columns of ``W = [[Phi21, Phi22], [-Phi11, -Phi12]]``."""
    K = np.empty((2, 2))
    K[0, 0] = u3
    K[0, 1] = -u2 * delta
    K[1, 0] = -u1
    K[1, 1] = 0.0
    return K


@kernel
def phi_to_w(Phi):
    W = np.empty((2, 2))
    W[0, 0] = Phi[1, 0]
    W[0, 1] = Phi[1, 1]
    W[1, 0] = -Phi[0, 0]
    W[1, 1] = -Phi[0, 1]
    return W


@kernel
def w_to_phi(W):
    Phi = np.empty((2, 2))
    Phi[0, 0] = -W[1, 0]
    Phi[0, 1] = -W[1, 1]
    Phi[1, 0] = W[0, 0]
    Phi[1, 1] = W[0, 1]
    return Phi


@kernel
def generator_magnus_kernel(z, P, W, K1, f1, K2, f2, h):
    """Advance every channel over ``h`` from ``K`` and forcings at the two Gauss nodes.

    ``z`` (length ``w``) and ``P`` (``2 x w``, rows ``p`` and ``xi1``) are per
    channel, ``W`` is the shared transition matrix in ``(Phi21, -Phi11)`` form.
    Returns ``(z, P, W)``.
    """
    w = P.shape[1]
    zn = np.empty(w)
    for i in range(w):
        zn[i] = scalar_linear_update(z[i], -K1[0, 0], f1[i], -K2[0, 0], f2[i], h)
    skew = abs(K1[0, 1] + K1[1, 0]) <= 1e-12 * abs(K1[1, 0]) and abs(K2[0, 1] + K2[1, 0]) <= 1e-12 * abs(K2[1, 0])
    if h * max(inf_norm(K1), inf_norm(K2)) > STIFF and skew:
        # damping half step, exact rotation, damping half step
        u3 = 0.5 * (K1[0, 0] + K2[0, 0])
        om = 0.5 * (K1[1, 0] + K2[1, 0])
        damp = np.exp(0.5 * h * u3)
        ang = om * h
        c = np.cos(ang)
        s = np.sin(ang)
        if abs(om) > 0.0:
            fs = s / om
            fc = (1.0 - c) / om
        else:
            fs = h
            fc = 0.0
        Pn = np.empty((2, w))
        for i in range(w):
            f = 0.5 * (f1[i] + f2[i])
            p0 = P[0, i] * damp
            x0 = P[1, i]
            Pn[0, i] = (c * p0 - s * x0 + f * fs) * damp
            Pn[1, i] = s * p0 + c * x0 + f * fc
        Wn = np.empty((2, 2))
        for j in range(2):
            p0 = W[0, j] * damp
            x0 = W[1, j]
            Wn[0, j] = (c * p0 - s * x0) * damp
            Wn[1, j] = s * p0 + c * x0
        return zn, Pn, Wn
    Om = 0.5 * h * (K1 + K2)
    smooth = h * max(inf_norm(K1), inf_norm(K2)) <= STIFF
    if smooth:
        Om += COMM * h * h * (K2 @ K1 - K1 @ K2)
    E, Q = phi_pair_kernel(Om)
    R = np.zeros((2, w))
    for i in range(w):
        R[0, i] = 0.5 * h * (f1[i] + f2[i])
        if smooth:
            for r in range(2):
                R[r, i] += COMM * h * h * (K2[r, 0] * f1[i] - K1[r, 0] * f2[i])
    return zn, E @ P + Q @ R, E @ W


def initial_state() -> np.ndarray:
    s = np.zeros(GEN_SIZE)
    s[3] = 1.0
    s[6] = 1.0
    return s


def pump_damp_signals(Phi, delta: float, t: float, cfg: PumpDampConfig):
    """Return ``(u1, u2, u3)`` for the current ``Phi`` (2x2), ``Delta`` and time."""
    Phi = np.asarray(Phi, float)
    a = cfg.alpha(t)
    u1, u2, u3 = pump_damp_kernel(Phi[0, 0], Phi[1, 0], float(delta), a, cfg.beta)
    return float(u1), float(u2), float(u3)


class GeneratorState:
    """Single-channel generator ``(z, xi, Phi)`` with ``z(0)=0, xi(0)=0, Phi(0)=I``.

    Stored as ``(z, xi1, p = z - xi2, Phi)``; ``xi`` is reconstructed on read.
    """

    def __init__(self):
        self._z = 0.0
        self._xi1 = 0.0
        self._p = 0.0
        self._Phi = np.eye(2)

    @property
    def z(self) -> float:
        return self._z

    @property
    def xi(self) -> np.ndarray:
        return np.array([self._xi1, self._z - self._p])

    @property
    def Phi(self) -> np.ndarray:
        return self._Phi.copy()

    @property
    def s(self) -> np.ndarray:
        """The 7 states ``(z, xi1, xi2, Phi11, Phi12, Phi21, Phi22)``."""
        return np.concatenate([[self._z], self.xi, self._Phi.ravel()])

    def step(self, ymix: float, delta: float, u, dt: float) -> "GeneratorState":
        """Exact step with ``(ymix, delta, u1, u2, u3)`` held over ``dt``."""
        if not dt > 0.0:
            raise ValueError("dt must be positive")
        u1, u2, u3 = (float(v) for v in u)
        K = generator_matrix(float(delta), u1, u2, u3)
        f = np.array([u2 * float(ymix)])
        z = np.array([self._z])
        P = np.array([[self._p], [self._xi1]])
        z, P, W = generator_magnus_kernel(z, P, phi_to_w(self._Phi), K, f, K, f, float(dt))
        self._z = float(z[0])
        self._p = float(P[0, 0])
        self._xi1 = float(P[1, 0])
        self._Phi = w_to_phi(W)
        return self

    def output(self) -> NewLre:
        return new_lre_output(self)


def generator_step(state: GeneratorState, ymix, delta, u, dt) -> GeneratorState:
    return state.step(ymix, delta, u, dt)


def new_lre_output(state: GeneratorState) -> NewLre:
    # Y is carried directly; z - xi2 would cancel catastrophically once z is large
    return NewLre(Y=state._p, phi21=float(state._Phi[1, 0]))


@dataclass(frozen=True)
class ExcitationReport:
    min_energy: float  # min_t Phi11^2 + Phi21^2
    floor: float  # 2 beta + eps
    floor_held: bool  # min over the post-transient window >= 2 beta
    phi21_sq_slope: float  # d/dt int Phi21^2 over the final window
    phi21_not_l2: bool
    phi11_final: float
    degenerate: bool  # lim Phi11 ~ sqrt(2 beta)


def check_excitation_floor(
    t,
    phi11,
    phi21,
    cfg: PumpDampConfig = PumpDampConfig(),
    window: float = 0.2,
    transient: float = 0.0,
    slope_tol: float = 1e-6,
    degenerate_tol: float = 1e-3,
) -> ExcitationReport:
    """Summarise the excitation produced by a generator run.

    ``window`` is the trailing fraction of the record used for the
    ``int Phi21^2`` slope (a positive slope means ``Phi21`` is not square
    integrable over the run); ``transient`` seconds are skipped for the
    floor test.
    """
    t = np.asarray(t, float)
    phi11 = np.asarray(phi11, float)
    phi21 = np.asarray(phi21, float)
    energy = phi11**2 + phi21**2
    min_energy = float(energy.min())
    after = t >= t[0] + transient
    floor_held = bool(energy[after].min() >= 2.0 * cfg.beta) if after.any() else False

    cum = cumulative_trapezoid(phi21**2, t, initial=0.0)
    tail = t >= t[-1] - window * (t[-1] - t[0])
    if tail.sum() >= 2:
        slope = float(np.polyfit(t[tail], cum[tail], 1)[0])
    else:
        slope = 0.0
    phi11_final = float(phi11[-1])
    return ExcitationReport(
        min_energy=min_energy,
        floor=2.0 * cfg.beta + cfg.eps,
        floor_held=floor_held,
        phi21_sq_slope=slope,
        phi21_not_l2=slope > slope_tol,
        phi11_final=phi11_final,
        degenerate=abs(abs(phi11_final) - np.sqrt(2.0 * cfg.beta)) < degenerate_tol,
    )
