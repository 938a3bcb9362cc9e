"""Compare the numba and pure-numpy kernel backends.

Each backend runs in its own interpreter (the backend is fixed at import
time through PBDREM_BACKEND). Reported: per-call time of a few hot kernels,
per-step time of the coupled simulation, and the largest difference between
the two backends' final states.

    python3 benchmarks/bench_kernels.py [--horizon 0.5] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from pbdrem import _jit
from pbdrem.el_model import accel_kernel
from pbdrem.magnus import expm_kernel
from pbdrem.drem import adjugate_kernel
from pbdrem.harness.scenarios import get_scenario, simulate

horizon, repeat = float(sys.argv[1]), int(sys.argv[2])
theta = np.array([1.30, 0.28, 0.32, 0.40, 1.40])
q, qd, tau = np.array([0.3, -0.2]), np.array([0.5, 1.0]), np.array([1.0, 3.0])
A = np.random.default_rng(0).standard_normal((5, 5))


def per_call(f, n):
    f()  # compile / warm up
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(n):
            f()
        best = min(best, (time.perf_counter() - t0) / n)
    return best


out = {"backend": _jit.BACKEND, "kernels": {
    "accel": per_call(lambda: accel_kernel(q, qd, tau, theta, 9.81, np.zeros(2)), 2000),
    "expm_5x5": per_call(lambda: expm_kernel(A), 500),
    "adjugate_5x5": per_call(lambda: adjugate_kernel(A), 500),
}}
cfg = get_scenario("open-b-power").replace(horizon=horizon, record_every=10**9)
t0 = time.perf_counter()
simulate(cfg)
out["first_run"] = time.perf_counter() - t0
best = np.inf
for _ in range(repeat):
    r = simulate(cfg)
    best = min(best, r.wall_time)
out["step_time"] = best / round(horizon / cfg.dt)
out["final_state"] = r.states[-1].tolist()
print(json.dumps(out))
"""


def run_backend(backend, horizon, repeat):
    env = dict(os.environ, PBDREM_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(horizon), str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=0.5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    res = {}
    for backend in ("numba", "numpy"):
        t0 = time.perf_counter()
        res[backend] = run_backend(backend, args.horizon, args.repeat)
        print(f"{backend}: done in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        if res[backend]["backend"] != backend:
            print(f"warning: requested {backend}, ran {res[backend]['backend']}", file=sys.stderr)

    nb, npy = res["numba"], res["numpy"]
    print(f"{'kernel':<16}{'numba':>14}{'numpy':>14}{'speedup':>10}")
    for name in nb["kernels"]:
        a, b = nb["kernels"][name], npy["kernels"][name]
        print(f"{name:<16}{a * 1e6:>12.2f}us{b * 1e6:>12.2f}us{b / a:>9.0f}x")
    a, b = nb["step_time"], npy["step_time"]
    print(f"{'sim step':<16}{a * 1e6:>12.2f}us{b * 1e6:>12.2f}us{b / a:>9.0f}x")
    print(f"first run (incl. compile): numba {nb['first_run']:.2f}s, numpy {npy['first_run']:.2f}s")
    x1, x2 = nb["final_state"], npy["final_state"]
    diff = max(abs(u - v) / max(1.0, abs(u)) for u, v in zip(x1, x2))
    print(f"max relative final-state difference between backends: {diff:.2e}")


if __name__ == "__main__":
    main()
