"""Scaling transformations, toric coordinates, and the dominance partition.

The positive quadrant is split radially into regions T0..T4 separated by the
interfaces T01, T12, T23, T34 (plus the lattice rows T00 and the axis column
T4star).  In each region one reaction term dominates the generator at large
scale; the partition is what lets the stability analysis treat one monomial
at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .network import Network

__all__ = [
    "RegionParams",
    "ToricCoordinates",
    "REGION_TAGS",
    "unit_direction",
    "scale",
    "toric_coordinates",
    "classify_region",
    "classify_region_grid",
    "exposed_reactions",
    "homogeneity_check",
    "region_map_csv",
]

# Open regions first, then interfaces.
REGION_TAGS = (
    "T0",
    "T00",
    "T0prime",
    "T01",
    "T1",
    "T12",
    "T2",
    "T23",
    "T3",
    "T34",
    "T4",
    "T4star",
)
_TAG_CODE = {t: i for i, t in enumerate(REGION_TAGS)}


@dataclass(frozen=True)
class RegionParams:
    """Partition geometry: strip height b0, cone slope b1, priming width b2,
    and the excluded-ball radius rho."""

    b0: float = 20.0
    b1: float = 10.0
    b2: float = 50.0
    rho: float = 200.0

    def __post_init__(self) -> None:
        if not self.b0 > 2:
            raise ValueError("b0 must exceed 2")
        if not self.b1 > 1:
            raise ValueError("b1 must exceed 1")
        if not self.b2 > 5:
            raise ValueError("b2 must exceed 5")
        if not self.rho > max(self.b0, self.b2):
            raise ValueError("rho must exceed max(b0, b2)")


def unit_direction(w: Sequence[float]) -> np.ndarray:
    """Validate and return a nonnegative direction of unit Euclidean norm."""
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("direction components must be nonnegative")
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError("direction must have unit norm (within 1e-12)")
    return w


def scale(w: Sequence[float], l: float, x: Sequence[float]) -> np.ndarray:
    """Anisotropic dilation (l^w1 x1, l^w2 x2, ...)."""
    if l < 1:
        raise ValueError("scale parameter must be >= 1")
    w = unit_direction(w)
    x = np.asarray(x, dtype=np.float64)
    return (l ** w) * x


@dataclass(frozen=True)
class ToricCoordinates:
    """Radial-exponential coordinates (theta, w) of a strictly positive point.

    They satisfy z_i = 2 c_star * theta^{w_i}; at z = (2 c_star, ..) the
    direction is undefined and the point is flagged degenerate.
    """

    theta: float
    w: np.ndarray
    c_star: int
    degenerate: bool = False

    def reconstruct(self) -> np.ndarray:
        if self.degenerate:
            return np.full_like(self.w, 2.0 * self.c_star)
        return 2.0 * self.c_star * self.theta ** self.w


def toric_coordinates(z: Sequence[float], c_star: int) -> ToricCoordinates:
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise ValueError("toric coordinates require strictly positive components")
    logs = np.log(z / (2.0 * c_star))
    r = float(np.linalg.norm(logs))
    if r == 0.0:
        return ToricCoordinates(theta=1.0, w=np.zeros_like(logs), c_star=c_star, degenerate=True)
    return ToricCoordinates(theta=math.exp(r), w=logs / r, c_star=c_star)


def classify_region(p: RegionParams, x: Sequence[float]) -> str:
    """Region tag of a lattice point.

    Interfaces win over open regions with the half-open lattice convention:
    a point belongs to an interface tag when the boundary function is within
    one lattice unit of zero (measured transversally).
    """
    x1, x2 = float(x[0]), float(x[1])
    if x2 <= 1:
        return "T0"
    if x2 == 2:
        return "T00"
    if abs(x2 - p.b0) < 1:
        return "T01"
    if x2 < p.b0:
        return "T0prime"
    # above the diffusive strip
    if abs(x2 * p.b1 - x1) < p.b1:
        return "T12"
    if x2 < x1 / p.b1:
        return "T1"
    if abs(x2 - p.b1 * x1) < p.b1:
        return "T23"
    if x2 > p.b1 * x1:
        if abs(x1 - p.b2) < 1:
            return "T34"
        if x1 > p.b2:
            return "T3"
        if x1 == 0:
            return "T4star"
        return "T4"
    return "T2"


def classify_region_grid(p: RegionParams, states: np.ndarray) -> np.ndarray:
    """Vectorized :func:`classify_region`; returns int codes into REGION_TAGS."""
    x1 = np.asarray(states, dtype=np.float64)[:, 0]
    x2 = np.asarray(states, dtype=np.float64)[:, 1]
    code = np.empty(len(x1), dtype=np.int64)
    code.fill(-1)

    strip0 = x2 <= 1
    strip00 = (x2 == 2) & ~strip0
    t01 = (np.abs(x2 - p.b0) < 1) & ~(strip0 | strip00)
    t0p = (x2 < p.b0) & ~(strip0 | strip00 | t01)
    decided = strip0 | strip00 | t01 | t0p
    upper = ~decided

    t12 = upper & (np.abs(x2 * p.b1 - x1) < p.b1)
    t1 = upper & ~t12 & (x2 < x1 / p.b1)
    t23 = upper & ~t12 & ~t1 & (np.abs(x2 - p.b1 * x1) < p.b1)
    rest = upper & ~(t12 | t1 | t23)
    above = rest & (x2 > p.b1 * x1)
    t34 = above & (np.abs(x1 - p.b2) < 1)
    t3 = above & ~t34 & (x1 > p.b2)
    t4star = above & ~t34 & ~t3 & (x1 == 0)
    t4 = above & ~t34 & ~t3 & ~t4star
    t2 = rest & ~above

    for mask, tag in (
        (strip0, "T0"),
        (strip00, "T00"),
        (t01, "T01"),
        (t0p, "T0prime"),
        (t12, "T12"),
        (t1, "T1"),
        (t23, "T23"),
        (t34, "T34"),
        (t3, "T3"),
        (t4star, "T4star"),
        (t4, "T4"),
        (t2, "T2"),
    ):
        code[mask] = _TAG_CODE[tag]
    assert np.all(code >= 0)
    return code


def exposed_reactions(
    net: Network, w: Sequence[float]
) -> tuple[set[tuple[int, int]], set[int]]:
    """Dominant terms of the generator under the dilation of direction ``w``.

    Returns ``(lifted, plain)``: the lifted pairs (reaction, coordinate)
    maximizing <w, c_in - e_i> over pairs with a nonzero net change in
    coordinate i, and the plain reactions maximizing <w, c_in> (useful as a
    dominance diagnostic).
    """
    w = unit_direction(w)
    c_in = net.c_in_matrix().astype(np.float64)
    vec = net.vectors_matrix()
    pairs = [
        (r, i)
        for r in range(net.n_reactions)
        for i in range(net.d)
        if vec[r, i] != 0
    ]
    scores = {
        (r, i): float(np.dot(w, c_in[r]) - w[i]) for (r, i) in pairs
    }
    best = max(scores.values())
    lifted = {p for p, s in scores.items() if s >= best - 1e-12}
    plain_scores = c_in @ w
    pbest = float(plain_scores.max())
    plain = {r for r in range(net.n_reactions) if plain_scores[r] >= pbest - 1e-12}
    return lifted, plain


def homogeneity_check(
    f: Callable[[np.ndarray], float],
    w: Sequence[float],
    delta: float,
    samples: Iterable[Sequence[float]],
    l_values: Iterable[float],
) -> float:
    """Worst relative deviation of f from scaling as l^delta under the dilation.

    Zero for exact monomials; small for functions homogeneous only to
    leading order.
    """
    w = unit_direction(w)
    worst = 0.0
    for x in samples:
        x = np.asarray(x, dtype=np.float64)
        if np.any(x <= 0):
            raise ValueError("samples must be strictly positive")
        fx = float(f(x))
        if fx == 0.0:
            raise ValueError("f vanishes at a sample; relative deviation undefined")
        for l in l_values:
            if l < 1:
                raise ValueError("l values must be >= 1")
            expected = (l ** delta) * fx
            got = float(f(scale(w, l, x)))
            worst = max(worst, abs(got - expected) / abs(expected))
    return worst


def region_map_csv(p: RegionParams, x1_max: int, x2_max: int, fh, stride: int = 1) -> None:
    """Region tag for every lattice point of the window, as CSV rows."""
    fh.write("x1,x2,region\n")
    for x1 in range(0, x1_max + 1, stride):
        for x2 in range(0, x2_max + 1, stride):
            fh.write(f"{x1},{x2},{classify_region(p, (x1, x2))}\n")
