"""Scenario configuration, simulation and the built-in experiment catalog."""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from ..control import REGULATION, REGULATION_TARGET, TRACKING
from ..el_model import RobotGeometry, SingularInertiaError, theta_from_geometry
from ..lre import FILTER_INITS, classical_init, power_balance_init
from ..lre_gen import PumpDampConfig, initial_state
from . import system as sysm
from .integrate import time_grid

INPUTS = {
    "tau_a": sysm.TAU_A,
    "tau_b": sysm.TAU_B,
    "tau_c": sysm.TAU_C,
    "closed_loop_regulation": sysm.CLOSED_LOOP,
    "closed_loop_tracking": sysm.CLOSED_LOOP,
    "free": sysm.ZERO_INPUT,
}
PARAMETERIZATIONS = {"power_balance": sysm.POWER_BALANCE, "classical": sysm.CLASSICAL}
ESTIMATORS = {
    "known": sysm.SRC_TRUE,
    "gradient": sysm.SRC_GRADIENT,
    "drem": sysm.SRC_DREM,
    "drem_newlre": sysm.SRC_NEWLRE,
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``errors`` maps field name to message."""

    def __init__(self, errors: dict[str, str]):
        self.errors = dict(errors)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.errors.items()))


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one experiment.

    In open loop all three estimator chains run side by side; ``estimator``
    selects the one summarised (and, in closed loop, the one feeding the
    controller; ``"known"`` uses the true parameters).
    """

    name: str = "custom"
    geometry: RobotGeometry = field(default_factory=RobotGeometry)
    input: str = "tau_b"
    parameterization: str = "classical"
    estimator: str = "drem_newlre"
    lam: float = 1.0
    lam_e: float = 1.0
    filter_init: str = "matched"
    beta: float = 0.25
    alpha_amp: float = 1.0
    alpha_freq: float = 0.2
    alpha_phase: float = 0.0
    eps: float = 1e-3
    gamma_vector: float = 25.0
    gamma_drem: float = 25.0
    gamma_newlre: float = 25.0
    drem_normalized: bool = False
    K1: tuple = (7.0, 7.0)
    K2: tuple = (4.0, 4.0)
    target: tuple = REGULATION_TARGET
    friction: tuple = (0.0, 0.0)
    friction_aug: bool = False
    q0: tuple = (0.6 * np.pi, 0.7 * np.pi)
    qd0: tuple = (0.0, 0.0)
    theta_hat0: tuple | None = None
    dt: float = 1e-3
    horizon: float = 40.0
    record_every: int = 10
    out: str | None = None

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ConfigError(errors)

    def validate(self) -> dict[str, str]:
        e = {}
        if self.input not in INPUTS:
            e["input"] = f"unknown input {self.input!r}; choose from {sorted(INPUTS)}"
        if self.parameterization not in PARAMETERIZATIONS:
            e["parameterization"] = f"unknown parameterization {self.parameterization!r}"
        if self.estimator not in ESTIMATORS:
            e["estimator"] = f"unknown estimator {self.estimator!r}; choose from {sorted(ESTIMATORS)}"
        if self.filter_init not in FILTER_INITS:
            e["filter_init"] = f"must be one of {FILTER_INITS}"
        for name in ("lam", "lam_e", "dt", "horizon", "gamma_vector", "gamma_drem", "gamma_newlre"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0.0):
                e[name] = f"must be positive, got {v!r}"
        if not 0.0 < self.beta < 0.5:
            e["beta"] = f"must lie in (0, 1/2), got {self.beta!r}"
        if not self.eps > 0.0:
            e["eps"] = "must be positive"
        for name in ("K1", "K2"):
            v = np.asarray(getattr(self, name), float)
            if v.shape != (2,) or not np.all(v > 0.0):
                e[name] = "must be two strictly positive diagonal entries"
        for name in ("q0", "qd0", "target"):
            v = np.asarray(getattr(self, name), float)
            if v.shape != (2,) or not np.all(np.isfinite(v)):
                e[name] = "must be two finite numbers"
        fr = np.asarray(self.friction, float)
        if fr.shape != (2,) or not np.all(fr >= 0.0):
            e["friction"] = "must be two non-negative coefficients"
        if self.friction_aug and self.parameterization != "power_balance":
            e["friction_aug"] = "friction columns are only defined for the power_balance regression"
        if self.theta_hat0 is not None and len(self.theta_hat0) != self.n_params:
            e["theta_hat0"] = f"must have {self.n_params} entries"
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            e["record_every"] = "must be a positive integer"
        if self.estimator == "known" and not self.closed_loop:
            e["estimator"] = "'known' only applies to closed-loop inputs"
        return e

    @property
    def closed_loop(self) -> bool:
        return self.input.startswith("closed_loop")

    @property
    def n_params(self) -> int:
        return 7 if self.friction_aug else 5

    @property
    def pump_damp(self) -> PumpDampConfig:
        return PumpDampConfig(self.beta, self.alpha_amp, self.alpha_freq, self.alpha_phase, self.eps)

    @property
    def theta(self) -> np.ndarray:
        return theta_from_geometry(self.geometry)

    @property
    def theta_full(self) -> np.ndarray:
        """True parameters of the regression actually estimated (friction appended if used)."""
        if self.friction_aug:
            return np.concatenate([self.theta, np.asarray(self.friction, float)])
        return self.theta

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SimulationResult:
    config: ScenarioConfig
    t: np.ndarray
    states: np.ndarray
    signals: np.ndarray
    names: list[str]
    wall_time: float
    layout: sysm.Layout

    def __post_init__(self):
        self._index = {n: i for i, n in enumerate(self.names)}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.signals[:, self._index[name]]

    def channels(self, block: str) -> np.ndarray:
        """``(n_samples, w)`` array of a per-channel block, e.g. ``"phi21"``."""
        w = self.layout.w
        return np.stack([self[f"{block}_{i + 1}"] for i in range(w)], axis=1)

    def theta_hat(self, chain: str | None = None) -> np.ndarray:
        chain = chain or self.config.estimator
        block = {"gradient": "th_grad", "drem": "th_drem", "drem_newlre": "th_new"}.get(chain)
        if block is None:
            return np.tile(self.config.theta_full, (self.t.size, 1))
        return self.channels(block)

    def theta_tilde(self, chain: str | None = None) -> np.ndarray:
        return self.theta_hat(chain) - self.config.theta_full

    def relative_error(self, chain: str | None = None) -> np.ndarray:
        """``|theta_tilde_i| / |theta_i|`` per sample and channel."""
        return np.abs(self.theta_tilde(chain)) / np.abs(self.config.theta_full)


def pack(cfg: ScenarioConfig):
    """Kernel argument arrays for ``cfg``."""
    w = cfg.n_params
    ip = np.zeros(sysm.N_IPARAMS, dtype=np.int64)
    ip[sysm.I_INPUT] = INPUTS[cfg.input]
    ip[sysm.I_PARAM] = PARAMETERIZATIONS[cfg.parameterization]
    ip[sysm.I_FRICTION_AUG] = int(cfg.friction_aug)
    ip[sysm.I_SOURCE] = ESTIMATORS[cfg.estimator] if cfg.closed_loop else sysm.SRC_TRUE
    ip[sysm.I_DREM_NORM] = int(cfg.drem_normalized)
    ip[sysm.I_REF] = TRACKING if cfg.input == "closed_loop_tracking" else REGULATION
    ip[sysm.I_W] = w
    fp = np.zeros(sysm.N_FPARAMS)
    fp[sysm.F_LAM] = cfg.lam
    fp[sysm.F_LAM_E] = cfg.lam_e
    fp[sysm.F_G] = cfg.geometry.g
    fp[sysm.F_BETA] = cfg.beta
    fp[sysm.F_ALPHA_AMP] = cfg.alpha_amp
    fp[sysm.F_ALPHA_FREQ] = cfg.alpha_freq
    fp[sysm.F_ALPHA_PHASE] = cfg.alpha_phase
    fp[sysm.F_K1A], fp[sysm.F_K1B] = cfg.K1
    fp[sysm.F_K2A], fp[sysm.F_K2B] = cfg.K2
    fp[sysm.F_FRIC1], fp[sysm.F_FRIC2] = cfg.friction
    fp[sysm.F_TARGET1], fp[sysm.F_TARGET2] = cfg.target
    Gamma = cfg.gamma_vector * np.eye(w)
    gam_drem = np.full(w, cfg.gamma_drem)
    gam_new = np.full(w, cfg.gamma_newlre)
    return ip, fp, cfg.theta.copy(), Gamma, gam_drem, gam_new


def initial_state_vector(cfg: ScenarioConfig) -> np.ndarray:
    lay = sysm.Layout.for_params(cfg.n_params)
    x = np.zeros(lay.size)
    q0 = np.asarray(cfg.q0, float)
    qd0 = np.asarray(cfg.qd0, float)
    x[0:2] = q0
    x[2:4] = qd0
    x[sysm.OFF_PB : sysm.OFF_CL] = power_balance_init(q0, qd0, cfg.geometry.g, cfg.filter_init)
    x[sysm.OFF_CL : sysm.OFF_FR] = classical_init(q0, qd0, cfg.filter_init)
    x[lay.phi : lay.phi + 4] = initial_state()[3:7]
    if cfg.theta_hat0 is not None:
        th0 = np.asarray(cfg.theta_hat0, float)
        for off in (lay.th_grad, lay.th_drem, lay.th_new):
            x[off : off + lay.w] = th0
    return x


class IntegrationError(RuntimeError):
    pass


def input_signal(selector: str, t: float) -> np.ndarray:
    """Open-loop torque ``tau(t)`` for ``tau_a``, ``tau_b``, ``tau_c`` (or ``free``)."""
    if selector not in INPUTS or selector.startswith("closed_loop"):
        raise ConfigError({"input": f"no open-loop signal named {selector!r}"})
    return sysm.input_kernel(INPUTS[selector], float(t), float(t))


def breakpoints(cfg: ScenarioConfig) -> tuple:
    return (sysm.TAU_B_SWITCH,) if cfg.input == "tau_b" else ()


def simulate(cfg: ScenarioConfig) -> SimulationResult:
    ip, fp, theta, Gamma, gam_drem, gam_new = pack(cfg)
    grid = time_grid(cfg.dt, cfg.horizon, breakpoints(cfg))
    x0 = initial_state_vector(cfg)
    start = time.perf_counter()
    try:
        X, idx, failed = sysm.run_kernel(x0, grid, ip, fp, theta, Gamma, gam_drem, gam_new, cfg.record_every)
    except SingularInertiaError as exc:
        # valid geometry never gives a singular M, so the plant state has blown up
        raise IntegrationError(f"plant state left the finite range in scenario {cfg.name!r}: {exc}") from exc
    if failed >= 0:
        raise IntegrationError(f"non-finite state at t={grid[failed]:.6g} s in scenario {cfg.name!r}")
    t = grid[idx]
    sig = sysm.signals_table_kernel(t, X, ip, fp, theta)
    wall = time.perf_counter() - start
    return SimulationResult(cfg, t, X, sig, sysm.signal_names(cfg.n_params), wall, sysm.Layout.for_params(cfg.n_params))


# ---------------------------------------------------------------------------
# catalog

_OPEN_LOOP_GAINS = {"classical": 25.0, "power_balance": 100.0}


def _catalog() -> dict[str, ScenarioConfig]:
    cat = {}
    for sel in ("a", "b", "c"):
        for par, short in (("classical", "classical"), ("power_balance", "power")):
            gain = _OPEN_LOOP_GAINS[par]
            name = f"open-{sel}-{short}"
            cat[name] = ScenarioConfig(
                name=name,
                input=f"tau_{sel}",
                parameterization=par,
                estimator="drem_newlre",
                gamma_vector=gain,
                gamma_drem=gain,
                gamma_newlre=gain,
                horizon=40.0,
            )
    for kind, gamma in (("regulation", 10.0), ("tracking", 25.0)):
        short = "reg" if kind == "regulation" else "track"
        for par, pshort in (("classical", "classical"), ("power_balance", "power")):
            name = f"{short}-{pshort}"
            cat[name] = ScenarioConfig(
                name=name,
                input=f"closed_loop_{kind}",
                parameterization=par,
                estimator="drem_newlre",
                gamma_vector=25.0,
                gamma_drem=gamma,
                gamma_newlre=gamma,
                horizon=60.0,
            )
        name = f"{short}-known"
        cat[name] = ScenarioConfig(
            name=name,
            input=f"closed_loop_{kind}",
            parameterization="power_balance",
            estimator="known",
            gamma_vector=25.0,
            gamma_drem=gamma,
            gamma_newlre=gamma,
            horizon=60.0,
        )
    return cat


CATALOG = _catalog()


def get_scenario(name: str) -> ScenarioConfig:
    try:
        return CATALOG[name]
    except KeyError:
        raise ConfigError({"scenario": f"unknown scenario {name!r}; see `pbdrem list`"}) from None
