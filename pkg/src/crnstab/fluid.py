"""Deterministic mass-action kinetics: the fluid limit of the jump process.

The concentration vector follows dx/dt = sum_r rate_r(x) * v_r with the
monomial rates.  Integration uses an adaptive embedded Runge-Kutta pair
(Dormand-Prince via scipy) with PI step control; components that graze zero
numerically are clipped, anything decisively negative aborts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .network import Network, mass_action_rate

__all__ = ["OdePath", "StepSizeUnderflow", "ode_rhs", "integrate", "vector_field_grid"]


class StepSizeUnderflow(RuntimeError):
    """Integration failed; carries the last time that was still valid."""

    def __init__(self, message: str, last_valid_time: float):
        super().__init__(f"{message} (last valid time {last_valid_time:.6g})")
        self.last_valid_time = last_valid_time


@dataclass(frozen=True)
class OdePath:
    """Solution samples (strictly increasing times, nonnegative states)."""

    times: np.ndarray
    states: np.ndarray

    def value_at(self, t: float) -> np.ndarray:
        """Piecewise-linear interpolant of the stored samples."""
        out = np.empty(self.states.shape[1])
        for i in range(self.states.shape[1]):
            out[i] = np.interp(t, self.times, self.states[:, i])
        return out

    def to_csv(self, fh) -> None:
        d = self.states.shape[1]
        fh.write("t," + ",".join(f"x{i + 1}" for i in range(d)) + "\n")
        for t, x in zip(self.times, self.states):
            fh.write(f"{t:.12g}," + ",".join(f"{v:.12g}" for v in x) + "\n")


def ode_rhs(net: Network, x: Sequence[float]) -> np.ndarray:
    """Mass-action vector field sum_r rate_r(x) (c_out - c_in)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for r, reaction in enumerate(net.reactions):
        out += mass_action_rate(net, r, x) * np.asarray(reaction.vector)
    return out


def integrate(
    net: Network, x0: Sequence[float], t_end: float, tol: float = 1e-8
) -> OdePath:
    """Adaptive Runge-Kutta solution on [0, t_end] at local tolerance tol."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    if np.any(x0 < 0):
        raise ValueError("initial concentration must be nonnegative")

    sol = solve_ivp(
        lambda _t, x: ode_rhs(net, x),
        (0.0, float(t_end)),
        x0,
        method="RK45",
        rtol=tol,
        atol=tol * 1e-2,
        dense_output=False,
    )
    if not sol.success:
        last = sol.t[-1] if len(sol.t) else 0.0
        raise StepSizeUnderflow(sol.message, last_valid_time=float(last))
    states = sol.y.T.copy()
    low = states.min(initial=0.0)
    if low <= -tol:
        bad = np.argmax(np.any(states <= -tol, axis=1))
        raise StepSizeUnderflow(
            "state left the nonnegative orthant", last_valid_time=float(sol.t[max(bad - 1, 0)])
        )
    np.clip(states, 0.0, None, out=states)
    times, keep = np.unique(sol.t, return_index=True)
    return OdePath(times=times, states=states[keep])


def vector_field_grid(
    net: Network,
    bounds: tuple[float, float, float, float],
    n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample the vector field on a uniform n x n grid over (x1min, x1max, x2min, x2max).

    Returns (points, values), each of shape (n*n, 2), row-major over the
    grid with x2 varying fastest.  Degenerate bounds collapse to repeated
    points, which keeps single-point probes legal.
    """
    if n < 2:
        raise ValueError("grid resolution must be >= 2")
    x1min, x1max, x2min, x2max = bounds
    if x1max < x1min or x2max < x2min:
        raise ValueError("empty bounds")
    g1 = np.linspace(x1min, x1max, n)
    g2 = np.linspace(x2min, x2max, n)
    points = np.array([(a, b) for a in g1 for b in g2])
    values = np.array([ode_rhs(net, p) for p in points])
    return points, values


def grid_to_csv(points: np.ndarray, values: np.ndarray, fh) -> None:
    fh.write("x1,x2,f1,f2\n")
    for p, v in zip(points, values):
        fh.write(f"{p[0]:.12g},{p[1]:.12g},{v[0]:.12g},{v[1]:.12g}\n")
