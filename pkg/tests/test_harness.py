import numpy as np
import pytest

from pbdrem.harness import system as sysm
from pbdrem.harness.checks import step_halving_ratio
from pbdrem.harness.integrate import rk4, time_grid
from pbdrem.harness.scenarios import (
    CATALOG,
    ConfigError,
    IntegrationError,
    ScenarioConfig,
    get_scenario,
    input_signal,
    simulate,
)


def test_time_grid_uniform():
    g = time_grid(0.1, 1.0)
    assert g.size == 11 and g[-1] == 1.0
    np.testing.assert_allclose(np.diff(g), 0.1)


def test_time_grid_partial_last_step_and_breakpoint():
    g = time_grid(0.3, 1.0, breakpoints=(0.5,))
    assert g[-1] == 1.0
    assert 0.5 in g
    assert np.all(np.diff(g) > 0)


def test_time_grid_breakpoint_exactly_on_grid():
    g = time_grid(1e-3, 40.0, breakpoints=(2.0,))
    assert g.size == 40001
    assert g[2000] == 2.0


@pytest.mark.parametrize("dt,T", [(0.0, 1.0), (0.1, -1.0), (-0.1, 1.0)])
def test_time_grid_rejects(dt, T):
    with pytest.raises(ValueError):
        time_grid(dt, T)


def test_generic_rk4_order():
    errs = []
    for n in (40, 80, 160):
        X = rk4(lambda t, x: np.array([-x[0] + np.sin(t)]), [1.0], np.linspace(0, 2, n + 1))
        exact = 1.5 * np.exp(-2.0) + 0.5 * (np.sin(2.0) - np.cos(2.0))
        errs.append(abs(X[-1, 0] - exact))
    assert 12 < errs[0] / errs[1] < 20 and 12 < errs[1] / errs[2] < 20


def test_input_signals():
    np.testing.assert_array_equal(input_signal("tau_a", 0.0), [1.0, 1.0])
    np.testing.assert_allclose(input_signal("tau_a", 2.0), [np.exp(-0.8), np.exp(-1.0)])
    np.testing.assert_array_equal(input_signal("tau_b", 1.0), [1.0, 3.0])
    np.testing.assert_array_equal(input_signal("tau_b", 3.0), [0.0, 0.0])
    np.testing.assert_allclose(input_signal("tau_c", 0.0), [0.5, 1.5])
    with pytest.raises(ConfigError):
        input_signal("tau_z", 0.0)
    with pytest.raises(ConfigError):
        input_signal("closed_loop_tracking", 0.0)


def test_equilibrium_stays_fixed():
    r = simulate(ScenarioConfig(input="free", q0=(-np.pi / 2, 0.0), horizon=10.0, dt=1e-3))
    assert r.t.size == 1001
    # cos(-pi/2) is 6e-17 in floating point, so gravity leaves a rounding-level residual force
    np.testing.assert_allclose(r.states[:, :4], [[-np.pi / 2, 0, 0, 0]] * r.t.size, atol=1e-12)


def test_step_halving_ratio():
    assert 12.0 <= step_halving_ratio() <= 20.0


def test_tau_b_matches_fine_reference():
    cfg = ScenarioConfig(input="tau_b", horizon=10.0, record_every=10**9)
    coarse = simulate(cfg).states[-1, :2]
    fine = simulate(cfg.replace(dt=1e-4)).states[-1, :2]
    np.testing.assert_allclose(coarse, fine, atol=1e-5)


def test_deterministic():
    cfg = get_scenario("open-c-power").replace(horizon=3.0)
    a, b = simulate(cfg), simulate(cfg)
    np.testing.assert_array_equal(a.signals, b.signals)
    np.testing.assert_array_equal(a.states, b.states)


def test_record_every_subsamples():
    cfg = ScenarioConfig(horizon=1.0)
    full = simulate(cfg.replace(record_every=1))
    sub = simulate(cfg.replace(record_every=10))
    assert sub.t.size == 101 and full.t.size == 1001
    np.testing.assert_array_equal(full.states[::10], sub.states)


def test_last_sample_always_recorded():
    r = simulate(ScenarioConfig(horizon=1.0, record_every=10**9))
    np.testing.assert_array_equal(r.t, [0.0, 1.0])


def test_catalog_structure():
    assert len(CATALOG) == 12
    opens = [c for c in CATALOG.values() if not c.closed_loop]
    assert len(opens) == 6
    assert {c.input for c in opens} == {"tau_a", "tau_b", "tau_c"}
    for c in opens:
        g = 25.0 if c.parameterization == "classical" else 100.0
        assert c.gamma_vector == c.gamma_drem == c.gamma_newlre == g
        assert c.horizon == 40.0
    for name in ("reg-known", "track-known"):
        assert CATALOG[name].estimator == "known"
    assert CATALOG["reg-classical"].gamma_drem == 10.0
    assert CATALOG["track-classical"].gamma_drem == 25.0
    for c in CATALOG.values():
        assert c.K1 == (7.0, 7.0) and c.K2 == (4.0, 4.0)
        assert c.beta == 0.25 and c.lam == 1.0 and c.dt == 1e-3


def test_unknown_scenario():
    with pytest.raises(ConfigError, match="unknown scenario"):
        get_scenario("open-z")


@pytest.mark.parametrize(
    "changes,field",
    [
        ({"input": "tau_z"}, "input"),
        ({"parameterization": "lagrange"}, "parameterization"),
        ({"estimator": "magic"}, "estimator"),
        ({"dt": 0.0}, "dt"),
        ({"horizon": -1.0}, "horizon"),
        ({"beta": 0.5}, "beta"),
        ({"K1": (7.0, -1.0)}, "K1"),
        ({"friction": (-0.1, 0.0)}, "friction"),
        ({"friction_aug": True}, "friction_aug"),
        ({"theta_hat0": (1.0, 2.0)}, "theta_hat0"),
        ({"record_every": 0}, "record_every"),
        ({"estimator": "known"}, "estimator"),
        ({"filter_init": "warm"}, "filter_init"),
    ],
)
def test_config_field_errors(changes, field):
    with pytest.raises(ConfigError) as exc:
        ScenarioConfig(**changes)
    assert field in exc.value.errors


def test_config_reports_every_bad_field():
    with pytest.raises(ConfigError) as exc:
        ScenarioConfig(dt=-1.0, horizon=0.0, input="x")
    assert {"dt", "horizon", "input"} <= set(exc.value.errors)


def test_blow_up_raises_integration_error():
    with pytest.raises(IntegrationError):
        simulate(ScenarioConfig(input="free", qd0=(1e160, 1e160), horizon=0.1))


def test_layout():
    lay = sysm.Layout.for_params(5)
    assert lay.core == sysm.OFF_DREM + 5 + 25
    assert lay.size == lay.diag + 3
    assert len(sysm.signal_names(5)) == len(sysm.FIXED_SIGNALS) + 5 * len(sysm.CHANNEL_BLOCKS)


def test_result_accessors():
    r = simulate(ScenarioConfig(horizon=0.5))
    assert r.channels("phi21").shape == (r.t.size, 5)
    np.testing.assert_array_equal(r.theta_hat("known"), np.tile(r.config.theta, (r.t.size, 1)))
    np.testing.assert_allclose(r.theta_tilde("gradient")[0], -r.config.theta)
    np.testing.assert_allclose(r.relative_error("drem")[0], 1.0)


def test_signals_pinned():
    assert sysm.FIXED_SIGNALS[:8] == ("q1", "q2", "qd1", "qd2", "tau1", "tau2", "qtilde1", "qtilde2")
    assert sysm.CHANNEL_BLOCKS[-1] == "theta"
