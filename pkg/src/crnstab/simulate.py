"""Exact stochastic simulation of the molecular-count jump process.

Direct method: one exponential clock at the total rate plus a categorical
draw over reactions.  Every trajectory owns an independent random substream
derived from ``(seed, trajectory_index)`` so batches are reproducible
regardless of scheduling; :func:`trajectory_rng` builds the substream.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .network import Network, propensities, reaction_vector

__all__ = [
    "StopCondition",
    "Trajectory",
    "HitResult",
    "trajectory_rng",
    "step",
    "simulate",
    "hitting_time",
    "embedded_tube_chain",
    "tube_jump_probability",
]


def trajectory_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent counter-based stream for trajectory ``index`` of ``seed``."""
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, index]))


@dataclass(frozen=True)
class StopCondition:
    """Trajectory budget: at least one bound must be set.

    ``absorb`` is an optional state predicate; the run also stops when the
    total jump rate vanishes (the process is stuck), which is an outcome,
    not an error.
    """

    max_time: float | None = None
    max_jumps: int | None = None
    absorb: Callable[[np.ndarray], bool] | None = None

    def __post_init__(self) -> None:
        if self.max_time is None and self.max_jumps is None and self.absorb is None:
            raise ValueError("at least one stop bound must be set")


@dataclass(frozen=True)
class Trajectory:
    """Jump path: times[0] = 0 holds the initial state."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("times/states length mismatch")

    @property
    def n_jumps(self) -> int:
        return len(self.times) - 1

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, fh) -> None:
        d = self.states.shape[1]
        fh.write("t," + ",".join(f"x{i + 1}" for i in range(d)) + "\n")
        for t, x in zip(self.times, self.states):
            fh.write(f"{t:.12g}," + ",".join(str(int(v)) for v in x) + "\n")

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


@dataclass(frozen=True)
class HitResult:
    """Outcome of a first-passage run; ``hit`` False means censored."""

    hit: bool
    time: float
    state: np.ndarray | None
    jumps_taken: int


def step(
    net: Network, x: Sequence[int], rng: np.random.Generator
) -> tuple[float, np.ndarray] | None:
    """One jump from ``x``: (waiting time, next state), or None if stuck.

    The waiting time is exponential at the total rate and the reaction is
    chosen proportionally to its propensity.
    """
    x = np.asarray(x, dtype=np.int64)
    props = propensities(net, x)
    total = props.sum()
    if total <= 0.0:
        return None
    dt = rng.exponential(1.0 / total)
    r = int(np.searchsorted(np.cumsum(props), rng.uniform(0.0, total), side="left"))
    r = min(r, net.n_reactions - 1)
    return dt, x + reaction_vector(net, r)


def simulate(
    net: Network, x0: Sequence[int], stop: StopCondition, rng: np.random.Generator
) -> Trajectory:
    """Run the jump process from ``x0`` until the first triggered bound."""
    x = np.asarray(x0, dtype=np.int64)
    times = [0.0]
    states = [x.copy()]
    t = 0.0
    jumps = 0
    while True:
        if stop.max_jumps is not None and jumps >= stop.max_jumps:
            break
        if stop.absorb is not None and stop.absorb(x):
            break
        nxt = step(net, x, rng)
        if nxt is None:
            break
        dt, y = nxt
        if stop.max_time is not None and t + dt > stop.max_time:
            break
        t += dt
        x = y
        jumps += 1
        times.append(t)
        states.append(x.copy())
    return Trajectory(times=np.array(times), states=np.array(states, dtype=np.int64))


def hitting_time(
    net: Network,
    x0: Sequence[int],
    target: Callable[[np.ndarray], bool],
    budget: StopCondition,
    rng: np.random.Generator,
) -> HitResult:
    """First time t > 0 with X_t in the target set, or a censored outcome.

    Membership of the initial state does not count at t = 0: at least one
    jump must occur, matching the return-time convention used throughout.
    """
    x = np.asarray(x0, dtype=np.int64)
    t = 0.0
    jumps = 0
    while True:
        if budget.max_jumps is not None and jumps >= budget.max_jumps:
            return HitResult(hit=False, time=t, state=None, jumps_taken=jumps)
        nxt = step(net, x, rng)
        if nxt is None:
            return HitResult(hit=False, time=t, state=None, jumps_taken=jumps)
        dt, y = nxt
        t += dt
        if budget.max_time is not None and t > budget.max_time:
            return HitResult(hit=False, time=budget.max_time, state=None, jumps_taken=jumps)
        x = y
        jumps += 1
        if target(x):
            return HitResult(hit=True, time=t, state=x.copy(), jumps_taken=jumps)


def tube_jump_probability(variant: str, x1: int) -> float:
    """Up-probability of the strip chain at (x1, 1) for the given variant."""
    if x1 < 1:
        raise ValueError("x1 must be >= 1")
    if variant == "crn0":
        return 0.5
    if variant == "crn1":
        return 1.0 / (x1 + 1.0)
    if variant == "crn2":
        return 1.0 / (x1 * x1 + 1.0)
    raise ValueError(f"unknown variant {variant!r}")


def embedded_tube_chain(
    variant: str, x0: Sequence[int], n: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Discrete chain of the process watched inside the strip {x2 < 2}.

    From (x1, 0) the chain moves to (x1+1, 1) with probability one; from
    (x1, 1) it moves up to (x1+1, 2) with the variant's up-probability and
    down to (x1, 0) otherwise; it is absorbed on reaching x2 = 2.  At most
    ``n`` steps are taken.
    """
    x1, x2 = int(x0[0]), int(x0[1])
    if x2 >= 2:
        raise ValueError("start state must have x2 < 2")
    chain = [(x1, x2)]
    for _ in range(n):
        if x2 == 0:
            x1, x2 = x1 + 1, 1
        elif x2 == 1:
            if rng.random() < tube_jump_probability(variant, x1):
                x1, x2 = x1 + 1, 2
            else:
                x2 = 0
        else:
            break
        chain.append((x1, x2))
        if x2 >= 2:
            break
    return chain
