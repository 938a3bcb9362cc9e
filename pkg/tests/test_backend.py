import json
import os
import subprocess
import sys

import numpy as np
import pytest

from pbdrem import _jit
from pbdrem.harness.scenarios import ScenarioConfig, simulate

PROBE = (
    "import json; from pbdrem import _jit; from pbdrem.harness.scenarios import ScenarioConfig, simulate;"
    "r = simulate(ScenarioConfig(input='tau_b', parameterization='power_balance', horizon=0.3, record_every=10**9));"
    "print(json.dumps({'backend': _jit.BACKEND, 'x': r.states[-1].tolist()}))"
)


def _probe(backend):
    env = dict(os.environ, PBDREM_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_numpy_backend_matches():
    res = _probe("numpy")
    assert res["backend"] == "numpy"
    here = simulate(ScenarioConfig(input="tau_b", parameterization="power_balance", horizon=0.3, record_every=10**9))
    np.testing.assert_allclose(res["x"], here.states[-1], rtol=1e-12, atol=1e-12)


def test_bad_backend_rejected():
    env = dict(os.environ, PBDREM_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import pbdrem._jit"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "PBDREM_BACKEND" in out.stderr


@pytest.mark.skipif(_jit.BACKEND != "numba", reason="numba backend not active")
def test_kernels_are_compiled():
    from pbdrem.harness.system import step_kernel

    assert hasattr(step_kernel, "signatures")
