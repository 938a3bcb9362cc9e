"""Fixed-step RK4 driver for the coupled system."""
from __future__ import annotations

import math

import numpy as np


def time_grid(dt: float, horizon: float, breakpoints=()) -> np.ndarray:
    """Uniform grid ``k * dt`` up to ``horizon`` with every breakpoint on a step boundary.

    Grid points closer than ``1e-9 * dt`` to a breakpoint are replaced by it,
    so a step never straddles a discontinuity of the input.
    """
    if not dt > 0.0 or not horizon > 0.0:
        raise ValueError("dt and horizon must be positive")
    n = int(math.floor(horizon / dt + 1e-9))
    grid = np.arange(n + 1, dtype=float) * dt
    extra = [horizon] if horizon - grid[-1] > 1e-9 * dt else []
    extra += [b for b in breakpoints if 0.0 < b < horizon]
    if extra:
        grid = np.concatenate([grid, extra])
        grid.sort()
        keep = np.concatenate([[True], np.diff(grid) > 1e-9 * dt])
        grid = grid[keep]
    for b in breakpoints:
        if 0.0 < b < horizon:
            grid[np.argmin(np.abs(grid - b))] = b
    if grid[-1] != horizon and abs(grid[-1] - horizon) <= 1e-9 * dt:
        grid[-1] = horizon
    return grid


def rk4(f, x0, grid):
    """Classical fourth-order Runge-Kutta for a generic ``f(t, x)`` on ``grid``.

    Returns the array of states at every grid point. Used for small reference
    problems and tests; the scenario runner uses the compiled coupled kernel.
    """
    x = np.array(x0, dtype=float)
    out = np.empty((len(grid), x.size))
    out[0] = x
    for k in range(len(grid) - 1):
        t = grid[k]
        h = grid[k + 1] - t
        k1 = f(t, x)
        k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = x
    return out
