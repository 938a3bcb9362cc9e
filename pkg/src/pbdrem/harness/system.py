"""The coupled plant + filters + DREM + generators + estimators + controller system.

Everything a scenario needs is packed into one flat state vector. A step
advances two parts on the same grid:

* the core (plant, LRE filters, friction regressor, work integral, DREM
  extension filters) with classical RK4;
* the stiff linear blocks (the three estimator chains and the generators)
  with fourth-order Magnus exponentials. Their coefficients are sampled at the
  two Gauss nodes of the step from the cubic Hermite dense output of the core
  step, so ``Delta``, ``Ymix``, ``y`` and ``Omega`` enter at fourth order.

The generator damping ``u3 = beta - E`` with ``E = (Phi11^2 + Phi21^2)/2``
depends on the generator state itself. ``E`` is slow even while ``Phi``
rotates fast, so its node values come from a quadratic through ``E`` at the
previous, current and (iterated) next grid point.

In closed loop the controller uses the estimate from the start of the step.
All three estimator chains run side by side on the same data;
``control_source`` picks which estimate, if any, feeds the controller.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._jit import kernel
from ..control import reference_kernel, slotine_li_kernel
from ..drem import drem_deriv, drem_output
from ..el_model import accel_kernel, energy_kernel
from ..estimators import scalar_gradient_coeffs, vector_gradient_coeffs
from ..lre import (
    CLASSICAL_SIZE,
    FRICTION_SIZE,
    POWER_BALANCE_SIZE,
    classical_deriv,
    classical_output,
    friction_deriv,
    power_balance_deriv,
    power_balance_output,
)
from ..lre_gen import alpha_kernel, generator_magnus_kernel, generator_matrix, phi_to_w, pump_damp_kernel, w_to_phi
from ..magnus import GAUSS_C1, GAUSS_C2, matrix_linear_update, phi1_scalar, scalar_linear_update

# input selector codes
TAU_A, TAU_B, TAU_C, CLOSED_LOOP, ZERO_INPUT = 0, 1, 2, 3, 4
TAU_B_SWITCH = 2.0

# parameterisation codes
POWER_BALANCE, CLASSICAL = 0, 1

# controller parameter source
SRC_TRUE, SRC_GRADIENT, SRC_DREM, SRC_NEWLRE = 0, 1, 2, 3

# iparams slots
I_INPUT, I_PARAM, I_FRICTION_AUG, I_SOURCE, I_DREM_NORM, I_REF, I_W = range(7)
N_IPARAMS = 7

# fparams slots
(
    F_LAM,
    F_LAM_E,
    F_G,
    F_BETA,
    F_ALPHA_AMP,
    F_ALPHA_FREQ,
    F_ALPHA_PHASE,
    F_K1A,
    F_K1B,
    F_K2A,
    F_K2B,
    F_FRIC1,
    F_FRIC2,
    F_TARGET1,
    F_TARGET2,
) = range(15)
N_FPARAMS = 15

OFF_PLANT = 0
OFF_PB = 4
OFF_CL = OFF_PB + POWER_BALANCE_SIZE
OFF_FR = OFF_CL + CLASSICAL_SIZE
OFF_WORK = OFF_FR + FRICTION_SIZE
OFF_DREM = OFF_WORK + 1
FIXED_ITERATIONS = 3


@kernel
def layout_kernel(w):
    """Offsets ``(core_end, phi, gen, th_grad, th_drem, th_new, diag, total)`` for ``w`` parameters.

    The core ends after the DREM filters ``Z[w], Psi[w x w]`` at ``OFF_DREM``.
    ``phi`` holds the shared ``Phi`` (row-major), ``gen`` one ``(z, xi1, p)``
    triple per channel with ``p = z - xi2 = Y``, ``diag`` the integrals of ``Delta^2``, ``|alpha Delta|``
    and ``Phi21^2``.
    """
    core = OFF_DREM + w + w * w
    phi = core
    gen = phi + 4
    thg = gen + 3 * w
    thd = thg + w
    thn = thd + w
    diag = thn + w
    total = diag + 3
    return core, phi, gen, thg, thd, thn, diag, total


@dataclass(frozen=True)
class Layout:
    w: int
    core: int
    phi: int
    gen: int
    th_grad: int
    th_drem: int
    th_new: int
    diag: int
    size: int

    @property
    def drem(self) -> int:
        return OFF_DREM

    @classmethod
    def for_params(cls, w: int) -> "Layout":
        return cls(w, *(int(v) for v in layout_kernel(w)))


@kernel
def input_kernel(code, t, t_side):
    """Open-loop torques; ``t_side`` decides which piece of a piecewise input applies."""
    tau = np.zeros(2)
    if code == TAU_A:
        tau[0] = np.exp(-0.4 * t)
        tau[1] = np.exp(-0.5 * t)
    elif code == TAU_B:
        if t_side <= TAU_B_SWITCH:
            tau[0] = 1.0
            tau[1] = 3.0
    elif code == TAU_C:
        c = np.cos(4.0 * t) / (2.0 + t)
        tau[0] = c
        tau[1] = 3.0 * c
    return tau


@kernel
def regression_kernel(x, ip, fp):
    """Regression fed to the estimators: ``(Y[n], Om[n x w])``."""
    q = x[0:2]
    qd = x[2:4]
    w = ip[I_W]
    if ip[I_PARAM] == POWER_BALANCE:
        y, Om5 = power_balance_output(q, qd, x[OFF_PB : OFF_PB + POWER_BALANCE_SIZE], fp[F_G])
        Y = np.empty(1)
        Y[0] = y
        Om = np.zeros((1, w))
        for k in range(5):
            Om[0, k] = Om5[k]
        if ip[I_FRICTION_AUG] == 1:
            Om[0, 5] = x[OFF_FR]
            Om[0, 6] = x[OFF_FR + 1]
        return Y, Om
    y2, Psi = classical_output(q, qd, x[OFF_CL : OFF_CL + CLASSICAL_SIZE])
    return y2, Psi


@kernel
def control_theta_kernel(x, ip, theta_true):
    src = ip[I_SOURCE]
    if src == SRC_TRUE:
        return theta_true.copy()
    core, phi, gen, thg, thd, thn, diag, total = layout_kernel(ip[I_W])
    if src == SRC_GRADIENT:
        off = thg
    elif src == SRC_DREM:
        off = thd
    else:
        off = thn
    return x[off : off + 5].copy()


@kernel
def torque_kernel(t, t_side, x, ip, fp, theta_ctrl):
    """Return ``(tau, q*)``; ``q*`` is NaN in open loop."""
    qs = np.full(2, np.nan)
    if ip[I_INPUT] != CLOSED_LOOP:
        return input_kernel(ip[I_INPUT], t, t_side), qs
    target = np.empty(2)
    target[0] = fp[F_TARGET1]
    target[1] = fp[F_TARGET2]
    qs, qds, qdds = reference_kernel(ip[I_REF], t, target)
    k1 = np.empty(2)
    k1[0] = fp[F_K1A]
    k1[1] = fp[F_K1B]
    k2 = np.empty(2)
    k2[0] = fp[F_K2A]
    k2[1] = fp[F_K2B]
    tau = slotine_li_kernel(x[0:2], x[2:4], theta_ctrl, qs, qds, qdds, k1, k2, fp[F_G])
    return tau, qs


@kernel
def core_rhs_kernel(t, t_side, x, ip, fp, theta_true, theta_ctrl, dx):
    """Derivative of the core states ``x[:core]`` (only those entries are written)."""
    w = ip[I_W]
    q = x[0:2]
    qd = x[2:4]
    lam = fp[F_LAM]
    g = fp[F_G]
    friction = np.empty(2)
    friction[0] = fp[F_FRIC1]
    friction[1] = fp[F_FRIC2]

    tau, qs = torque_kernel(t, t_side, x, ip, fp, theta_ctrl)

    qdd = accel_kernel(q, qd, tau, theta_true, g, friction)
    dx[0] = qd[0]
    dx[1] = qd[1]
    dx[2] = qdd[0]
    dx[3] = qdd[1]

    power_balance_deriv(q, qd, tau, x[OFF_PB : OFF_PB + POWER_BALANCE_SIZE], lam, g, dx[OFF_PB : OFF_PB + POWER_BALANCE_SIZE])
    classical_deriv(q, qd, tau, x[OFF_CL : OFF_CL + CLASSICAL_SIZE], lam, g, dx[OFF_CL : OFF_CL + CLASSICAL_SIZE])
    friction_deriv(qd, x[OFF_FR : OFF_FR + FRICTION_SIZE], lam, dx[OFF_FR : OFF_FR + FRICTION_SIZE])
    dx[OFF_WORK] = qd[0] * tau[0] + qd[1] * tau[1] - friction[0] * qd[0] ** 2 - friction[1] * qd[1] ** 2

    Y, Om = regression_kernel(x, ip, fp)
    nd = w + w * w
    drem_deriv(Y, Om, x[OFF_DREM : OFF_DREM + nd], fp[F_LAM_E], dx[OFF_DREM : OFF_DREM + nd])


@kernel
def hermite_kernel(x0, f0, x1, f1, h, c, core):
    c2 = c * c
    c3 = c2 * c
    h00 = 2.0 * c3 - 3.0 * c2 + 1.0
    h10 = c3 - 2.0 * c2 + c
    h01 = -2.0 * c3 + 3.0 * c2
    h11 = c3 - c2
    xc = x0.copy()
    for j in range(core):
        xc[j] = h00 * x0[j] + h10 * h * f0[j] + h01 * x1[j] + h11 * h * f1[j]
    return xc


@kernel
def _quad_interp(tp, Ep, E0, h, E1, s, have_prev):
    """Value at ``s`` (relative to ``t_n``) of the polynomial through ``(-tp, Ep), (0, E0), (h, E1)``."""
    if not have_prev:
        return E0 + (E1 - E0) * s / h
    l_p = s * (s - h) / (tp * (tp + h))
    l_0 = (s + tp) * (s - h) / (-tp * h)
    l_1 = (s + tp) * s / ((h + tp) * h)
    return Ep * l_p + E0 * l_0 + E1 * l_1


@kernel
def step_kernel(t, h, x, ip, fp, theta_true, Gamma, gam_drem, gam_new, E_prev, h_prev, have_prev):
    """One step from ``t`` to ``t + h``; returns the new state."""
    w = ip[I_W]
    core, phi, gen, thg, thd, thn, diag, total = layout_kernel(w)
    n = x.size
    tm = t + 0.5 * h
    th_ctrl = control_theta_kernel(x, ip, theta_true)

    # core: RK4
    k1 = np.zeros(n)
    k2 = np.zeros(n)
    k3 = np.zeros(n)
    k4 = np.zeros(n)
    core_rhs_kernel(t, tm, x, ip, fp, theta_true, th_ctrl, k1)
    core_rhs_kernel(tm, tm, x + 0.5 * h * k1, ip, fp, theta_true, th_ctrl, k2)
    core_rhs_kernel(tm, tm, x + 0.5 * h * k2, ip, fp, theta_true, th_ctrl, k3)
    core_rhs_kernel(t + h, tm, x + h * k3, ip, fp, theta_true, th_ctrl, k4)
    xn = x.copy()
    for j in range(core):
        xn[j] = x[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    f1 = np.zeros(n)
    core_rhs_kernel(t + h, tm, xn, ip, fp, theta_true, th_ctrl, f1)

    # regression, mixing and steering at the Gauss nodes
    nd = w + w * w
    xa = hermite_kernel(x, k1, xn, f1, h, GAUSS_C1, core)
    xb = hermite_kernel(x, k1, xn, f1, h, GAUSS_C2, core)
    Ya, Oma = regression_kernel(xa, ip, fp)
    Yb, Omb = regression_kernel(xb, ip, fp)
    ymix_a, da = drem_output(xa[OFF_DREM : OFF_DREM + nd], w)
    ymix_b, db = drem_output(xb[OFF_DREM : OFF_DREM + nd], w)
    al_a = alpha_kernel(t + GAUSS_C1 * h, fp[F_ALPHA_AMP], fp[F_ALPHA_FREQ], fp[F_ALPHA_PHASE])
    al_b = alpha_kernel(t + GAUSS_C2 * h, fp[F_ALPHA_AMP], fp[F_ALPHA_FREQ], fp[F_ALPHA_PHASE])

    # vector gradient
    Ga, ga = vector_gradient_coeffs(Gamma, Oma, Ya)
    Gb, gb = vector_gradient_coeffs(Gamma, Omb, Yb)
    xn[thg : thg + w] = matrix_linear_update(x[thg : thg + w], Ga, ga, Gb, gb, h)

    # DREM gradient
    normalized = ip[I_DREM_NORM] == 1
    for i in range(w):
        a1, b1 = scalar_gradient_coeffs(gam_drem[i], da, ymix_a[i], normalized)
        a2, b2 = scalar_gradient_coeffs(gam_drem[i], db, ymix_b[i], normalized)
        xn[thd + i] = scalar_linear_update(x[thd + i], a1, b1, a2, b2, h)

    # generators: fixed point on the damping through the slow energy
    beta = fp[F_BETA]
    Phi = x[phi : phi + 4].copy().reshape((2, 2))
    W = phi_to_w(Phi)
    E0 = 0.5 * (Phi[0, 0] ** 2 + Phi[1, 0] ** 2)
    E1 = E0
    if have_prev:
        E1 = E0 + (E0 - E_prev) * h / h_prev
    sa = GAUSS_C1 * h
    sb = GAUSS_C2 * h
    z = np.empty(w)
    P = np.empty((2, w))
    fa = np.empty(w)
    fb = np.empty(w)
    for i in range(w):
        z[i] = x[gen + 3 * i]
        P[1, i] = x[gen + 3 * i + 1]
        P[0, i] = x[gen + 3 * i + 2]
        fa[i] = al_a * ymix_a[i]
        fb[i] = al_b * ymix_b[i]
    none = np.empty(0)
    none2 = np.empty((2, 0))
    Ka = np.zeros((2, 2))
    Kb = np.zeros((2, 2))
    for it in range(FIXED_ITERATIONS):
        u3a = beta - _quad_interp(h_prev, E_prev, E0, h, E1, sa, have_prev)
        u3b = beta - _quad_interp(h_prev, E_prev, E0, h, E1, sb, have_prev)
        Ka = generator_matrix(da, -al_a * da, al_a, u3a)
        Kb = generator_matrix(db, -al_b * db, al_b, u3b)
        if it < FIXED_ITERATIONS - 1:
            _, _, Wt = generator_magnus_kernel(none, none2, W, Ka, none, Kb, none, h)
            E1 = 0.5 * (Wt[0, 0] ** 2 + Wt[1, 0] ** 2)
    z, P, W = generator_magnus_kernel(z, P, W, Ka, fa, Kb, fb, h)
    Phi_n = w_to_phi(W)
    for i in range(w):
        xn[gen + 3 * i] = z[i]
        xn[gen + 3 * i + 1] = P[1, i]
        xn[gen + 3 * i + 2] = P[0, i]
    for r in range(2):
        for c in range(2):
            xn[phi + 2 * r + c] = Phi_n[r, c]

    # generated-regression gradient, trapezoidal exponential between grid points
    p0 = Phi[1, 0]
    p1 = Phi_n[1, 0]
    for i in range(w):
        a1, b1 = scalar_gradient_coeffs(gam_new[i], p0, x[gen + 3 * i + 2], True)
        a2, b2 = scalar_gradient_coeffs(gam_new[i], p1, xn[gen + 3 * i + 2], True)
        s_ = 0.5 * h * (a1 + a2)
        xn[thn + i] = np.exp(-s_) * x[thn + i] + 0.5 * h * (b1 + b2) * phi1_scalar(s_)

    # diagnostics
    xn[diag] = x[diag] + 0.5 * h * (da * da + db * db)
    xn[diag + 1] = x[diag + 1] + 0.5 * h * (abs(al_a * da) + abs(al_b * db))
    xn[diag + 2] = x[diag + 2] + 0.5 * h * (p0 * p0 + p1 * p1)
    return xn, E0


@kernel
def run_kernel(x0, grid, ip, fp, theta_true, Gamma, gam_drem, gam_new, record_every):
    """Integrate over ``grid``; return ``(states at recorded steps, record indices, failed step)``.

    ``failed`` is -1 on success, otherwise the index of the first step that
    produced a non-finite state (integration stops there).
    """
    n_steps = grid.size - 1
    n_rec = n_steps // record_every + 1
    if n_steps % record_every != 0:
        n_rec += 1
    n = x0.size
    out = np.empty((n_rec, n))
    idx = np.empty(n_rec, dtype=np.int64)
    x = x0.copy()
    out[0] = x
    idx[0] = 0
    r = 1
    E_prev = 0.0
    h_prev = 1.0
    have_prev = False
    for k in range(n_steps):
        t = grid[k]
        h = grid[k + 1] - t
        x, E_prev = step_kernel(t, h, x, ip, fp, theta_true, Gamma, gam_drem, gam_new, E_prev, h_prev, have_prev)
        h_prev = h
        have_prev = True
        finite = True
        for j in range(n):
            if not np.isfinite(x[j]):
                finite = False
                break
        if not finite:
            out[r] = x
            idx[r] = k + 1
            return out[: r + 1], idx[: r + 1], k + 1
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            out[r] = x
            idx[r] = k + 1
            r += 1
    return out[:r], idx[:r], -1


@kernel
def signals_kernel(t, x, ip, fp, theta_true):
    """Algebraic signals at a recorded state (see :data:`SIGNAL_NAMES`)."""
    w = ip[I_W]
    core, phi, gen, thg, thd, thn, diag, total = layout_kernel(w)
    drem = OFF_DREM
    q = x[0:2]
    qd = x[2:4]
    g = fp[F_G]
    tau, qs = torque_kernel(t, t, x, ip, fp, control_theta_kernel(x, ip, theta_true))
    y_pb, Om5 = power_balance_output(q, qd, x[OFF_PB : OFF_PB + POWER_BALANCE_SIZE], g)
    y_cl, Psi = classical_output(q, qd, x[OFF_CL : OFF_CL + CLASSICAL_SIZE])
    ymix, delta = drem_output(x[drem : drem + w + w * w], w)
    alpha = alpha_kernel(t, fp[F_ALPHA_AMP], fp[F_ALPHA_FREQ], fp[F_ALPHA_PHASE])

    res_pb = y_pb
    for k in range(5):
        res_pb -= Om5[k] * theta_true[k]
    if w == 7:
        res_pb -= x[OFF_FR] * fp[F_FRIC1] + x[OFF_FR + 1] * fp[F_FRIC2]
    res_cl = 0.0
    for r in range(2):
        acc = y_cl[r]
        for k in range(5):
            acc -= Psi[r, k] * theta_true[k]
        res_cl += acc * acc
    res_cl = np.sqrt(res_cl)

    # fixed part: 19 scalars, then 5 per-channel blocks of w
    n_fixed = 19
    sig = np.empty(n_fixed + 11 * w)
    sig[0] = q[0]
    sig[1] = q[1]
    sig[2] = qd[0]
    sig[3] = qd[1]
    sig[4] = tau[0]
    sig[5] = tau[1]
    sig[6] = q[0] - qs[0]
    sig[7] = q[1] - qs[1]
    sig[8] = y_pb
    sig[9] = y_cl[0]
    sig[10] = y_cl[1]
    sig[11] = res_pb
    sig[12] = res_cl
    sig[13] = energy_kernel(q, qd, theta_true, g)
    sig[14] = x[OFF_WORK]
    sig[15] = delta
    sig[16] = alpha
    sig[17] = x[diag]
    sig[18] = x[diag + 1]
    p11 = x[phi]
    p21 = x[phi + 2]
    u1, u2, u3 = pump_damp_kernel(p11, p21, delta, alpha, fp[F_BETA])
    det_phi = x[phi] * x[phi + 3] - x[phi + 1] * x[phi + 2]
    for i in range(w):
        o = gen + 3 * i
        sig[n_fixed + i] = ymix[i]
        sig[n_fixed + w + i] = p11
        sig[n_fixed + 2 * w + i] = p21
        sig[n_fixed + 3 * w + i] = x[o + 2]
        sig[n_fixed + 4 * w + i] = u3
        sig[n_fixed + 5 * w + i] = det_phi
        sig[n_fixed + 6 * w + i] = x[diag + 2]
        sig[n_fixed + 7 * w + i] = x[thg + i]
        sig[n_fixed + 8 * w + i] = x[thd + i]
        sig[n_fixed + 9 * w + i] = x[thn + i]
        sig[n_fixed + 10 * w + i] = theta_true[i] if i < 5 else (fp[F_FRIC1] if i == 5 else fp[F_FRIC2])
    return sig


@kernel
def signals_table_kernel(ts, X, ip, fp, theta_true):
    w = ip[I_W]
    m = X.shape[0]
    out = np.empty((m, 19 + 11 * w))
    for r in range(m):
        out[r] = signals_kernel(ts[r], X[r], ip, fp, theta_true)
    return out


FIXED_SIGNALS = (
    "q1", "q2", "qd1", "qd2", "tau1", "tau2", "qtilde1", "qtilde2",
    "y_pb", "y_cl1", "y_cl2", "lre_res_pb", "lre_res_cl",
    "energy", "work", "delta", "alpha", "int_delta_sq", "int_abs_alpha_delta",
)
CHANNEL_BLOCKS = (
    "ymix", "phi11", "phi21", "y_new", "u3", "det_phi", "int_phi21_sq",
    "th_grad", "th_drem", "th_new", "theta",
)


def signal_names(w: int) -> list[str]:
    names = list(FIXED_SIGNALS)
    for block in CHANNEL_BLOCKS:
        names.extend(f"{block}_{i + 1}" for i in range(w))
    return names
