"""Piecewise Lyapunov construction for the two recurrent network variants.

Each partition region carries a closed-form piece solving the region's
asymptotic Poisson problem (decay rate = a monomial), glued continuously
along the characteristics of the dominant transport:

* T3 (steep cone, x1 > b2): monomial anchored on the priming trace.
* T4 / T4star (priming slab, x1 < b2): x2^delta4 times a slowly increasing
  column profile g4, plus a subleading x1 * x2^(delta4-1) correction shared
  by every upper piece.  The correction pays for the production component
  of the braking reaction at finite counts; being smooth and global it
  cancels out of every interface-curvature comparison.
* T2 (diagonal cone): upper boundary trace integrated along the straight
  characteristics, the cone dissected into n2 equal-angle sectors whose
  rates grow geometrically toward T12 (curvature repair).
* T1 (shallow cone): vertical characteristics dropping from the T12 trace.
* T0prime and the lattice rows 0..2 (diffusive strip): semi-continuous
  climb out of the strip plus the explicit two-row construction.

The tuned constants live in :class:`LyapunovParams`; :func:`select_parameters`
fixes them in dependency order and records the numeric margin of every
interface inequality.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .network import builtin_network, propensity_grid
from .regions import REGION_TAGS, RegionParams, classify_region, classify_region_grid

__all__ = [
    "ExponentTable",
    "LyapunovParams",
    "TuningTargets",
    "MarginReport",
    "InfeasibleParameters",
    "PiecewiseLyapunov",
    "derive_exponents",
    "gamma_star",
    "select_parameters",
    "assemble",
    "piece_value",
    "rate_h",
    "phi",
    "alt_piece_value",
    "params_to_text",
    "params_from_text",
]

_TAG_CODE = {t: i for i, t in enumerate(REGION_TAGS)}


# ---------------------------------------------------------------------------
# exponent table


@dataclass(frozen=True)
class ExponentTable:
    """All decay/value exponents, derived from the two free choices."""

    delta0: float
    eps: float
    variant: str
    c_star: int
    delta0p: float
    delta0pp: float
    delta1p: float
    delta1pp: float
    delta2p: float
    delta3p: float
    delta3pp: float
    delta4: float
    delta4pp: float
    delta4p: float
    delta4star: float


def derive_exponents(delta0: float, eps: float, variant: str, c_star: int) -> ExponentTable:
    """Fill the exponent table from (delta0, eps).

    Requires 0 < delta0 < 1 and 0 < eps < delta0 / 2.  The variant moves
    only the strip decay exponent: delta0' equals delta0 for crn0 and
    delta0 - 1 (negative) for crn1, whose extra drain slows the escape from
    the strip by one power.
    """
    if not 0 < delta0 < 1:
        raise ValueError("delta0 must lie in (0, 1)")
    if not 0 < eps < delta0 / 2:
        raise ValueError("eps must lie in (0, delta0/2)")
    if variant not in ("crn0", "crn1"):
        raise ValueError("exponent table exists for crn0 and crn1 only")
    delta3p = 4 + eps
    delta4p_bound = max(5.0, c_star * (delta3p - 4) + 4)
    return ExponentTable(
        delta0=delta0,
        eps=eps,
        variant=variant,
        c_star=c_star,
        delta0p=delta0 if variant == "crn0" else delta0 - 1.0,
        delta0pp=5 + delta0,
        delta1p=5 + delta0,
        delta1pp=1 - eps,
        delta2p=6 + delta0 - eps,
        delta3p=delta3p,
        delta3pp=2 + delta0 - 2 * eps,
        delta4=delta0 - 2 * eps,
        delta4pp=delta0 - 2 * eps + 2,
        delta4p=delta4p_bound + 0.5,
        delta4star=delta0 - 2 * eps,
    )


def gamma_star(exps: ExponentTable) -> float:
    """Global drift exponent: min over regions of (rate exponent) over
    (value exponent) along each region's canonical scaling ray, capped at 1."""
    d = exps
    w3 = np.array([1.0, 2.0]) / math.sqrt(5.0)
    w1 = np.array([2.0, 1.0]) / math.sqrt(5.0)
    ratios = [
        d.delta4pp / d.delta4,
        float(np.dot(w3, (d.delta3p, d.delta3pp)) / np.dot(w3, (d.delta3p - 4, d.delta3pp - 2))),
        d.delta2p / (d.delta2p - 6),
        float(np.dot(w1, (d.delta1p, d.delta1pp)) / np.dot(w1, (d.delta1p - 5, d.delta1pp - 1))),
        d.delta0pp / (d.delta0pp - 5),
        d.delta0p / d.delta0,
    ]
    return min(min(ratios), 1.0)


# ---------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class TuningTargets:
    """Knobs of the numeric feasibility checks."""

    safety: float = 2.0
    gamma4: float = 0.05
    u4_slope: float = 0.2
    eta2star: float = 1.25
    x2_max: float = 2200.0
    kr_level1: float | None = None  # default 2 / (1 - delta0)


@dataclass(frozen=True)
class LyapunovParams:
    exps: ExponentTable
    region: RegionParams
    h0: float
    h0p: float
    h1: float
    h2: float
    h3: float
    h4: float
    m0_levels: tuple[float, ...]
    m1: float
    m2: float
    m3: float
    m4: float
    m4star: float
    eta2star: float
    n2: int
    Ch: float
    gamma4: float
    u4_slope: float
    kr_level1: float

    def __post_init__(self) -> None:
        for name in ("h0", "h0p", "h1", "h2", "h3", "h4", "m1", "m2", "m3", "m4", "m4star"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 1 < self.eta2star < 2:
            raise ValueError("eta2star must lie in (1, 2)")
        if self.n2 < 1:
            raise ValueError("n2 must be >= 1")
        if not 0 < self.Ch < 1:
            raise ValueError("Ch must lie in (0, 1)")
        levels = self.m0_levels
        if any(a <= b for a, b in zip(levels, levels[1:])):
            raise ValueError("m0 levels must be strictly decreasing")
        if any(v <= 0 for v in levels):
            raise ValueError("m0 levels must be positive")


@dataclass
class MarginReport:
    """Named inequality margins recorded during parameter selection.

    Margins are relative slacks; all must be positive for the construction
    to stand.
    """

    entries: list[tuple[str, float]] = field(default_factory=list)

    def add(self, name: str, value: float) -> None:
        self.entries.append((name, float(value)))

    def worst(self) -> tuple[str, float]:
        return min(self.entries, key=lambda e: e[1])

    def feasible(self) -> bool:
        return all(v > 0 for _, v in self.entries)

    def to_csv(self, fh) -> None:
        fh.write("check,margin\n")
        for name, value in self.entries:
            fh.write(f"{name},{value:.6g}\n")


class InfeasibleParameters(RuntimeError):
    """No positive margin at some interface for the requested geometry."""

    def __init__(self, interface: str, report: MarginReport):
        self.interface = interface
        self.report = report
        super().__init__(f"parameter selection infeasible at {interface}")


# ---------------------------------------------------------------------------
# the travel-time polynomial of the diagonal cone

_P_COEFFS = (3000.0, 7500.0, 12500.0, 9375.0)


def _travel_poly(r):
    """Antiderivative (times 12) of (1+5r)^5 / r^2: travel cost of the
    diagonal transport along a characteristic, as a function of the ray
    slope r = x2/x1."""
    r = np.asarray(r, dtype=np.float64)
    out = -12.0 / r + 300.0 * np.log(r)
    p = r.copy()
    for c in _P_COEFFS:
        out = out + c * p
        p = p * r
    return out


# ---------------------------------------------------------------------------
# evaluator


class PiecewiseLyapunov:
    """Assembled global evaluator: value, piece tag, and decay-rate report.

    Vectorized over (n, 2) state arrays.  Interface bands take the pointwise
    minimum of the two adjacent continuations (concave glue), which agrees
    with both sides wherever the traces match exactly.
    """

    def __init__(self, params: LyapunovParams):
        self.params = params
        e, g = params.exps, params.region
        self.p3 = e.delta3p - 4.0
        self.q3 = e.delta3pp - 2.0
        self.delta2 = e.delta2p - 6.0
        self.A3 = params.m4 * g.b2 ** (-self.p3)
        self.s_cone = 1.0 + 5.0 * g.b1
        self.s_star = g.b2 * self.s_cone
        self.s_min = self.s_cone * max(2.0, g.b0 / g.b1)
        self.u_cap = 2.0 * g.b2
        # T4 column profile: cumulative quartic increments
        kmax = int(math.ceil(g.b2)) + 2 * e.c_star + 6
        inc = (np.arange(1, kmax + 1, dtype=np.float64) / g.b2) ** 4
        self._g4_inc = inc
        self._g4_cum = np.concatenate([[0.0], np.cumsum(inc)])
        # T2 sector rays (equal angle) and accumulated travel constants
        th_hi = math.atan(g.b1)
        th_lo = math.atan(1.0 / g.b1)
        self._th_hi = th_hi
        self._dth = (th_hi - th_lo) / (params.n2 + 1)
        j = np.arange(params.n2 + 2, dtype=np.float64)
        rho = np.tan(th_hi - j * self._dth)
        rho[0] = g.b1
        rho[-1] = 1.0 / g.b1
        self._rho = rho
        self._eta_pow = params.eta2star ** np.arange(params.n2 + 1, dtype=np.float64)
        P = _travel_poly(rho)
        self._P_rho = P
        A = np.zeros(params.n2 + 2)
        A[1:] = np.cumsum(self._eta_pow * (P[:-1] - P[1:]))
        self._A = A
        self._A_full = float(A[-1])
        self._gamma_star = gamma_star(e)

    # -- building blocks ----------------------------------------------------

    def g4(self, x1):
        """T4 column profile m4star (1 + gamma4 * sum_k (k/b2)^4)."""
        x1 = np.asarray(x1, dtype=np.float64)
        i = np.clip(np.floor(x1), 0.0, len(self._g4_inc) - 1.0)
        ii = i.astype(np.int64)
        frac = np.clip(x1 - i, 0.0, 1.0)
        cum = self._g4_cum[ii] + frac * self._g4_inc[np.minimum(ii, len(self._g4_inc) - 1)]
        cum = np.where(x1 <= 0, 0.0, cum)
        return self.params.m4star * (1.0 + self.params.gamma4 * cum)

    def g4_slope(self, x1):
        x1 = np.asarray(x1, dtype=np.float64)
        i = np.clip(np.floor(x1), 0.0, len(self._g4_inc) - 1.0).astype(np.int64)
        return self.params.m4star * self.params.gamma4 * self._g4_inc[i]

    def ucorr(self, x1, x2):
        """Shared subleading correction su * m4star * min(x1, 2 b2) * x2^(d4-1)."""
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        d4 = self.params.exps.delta4
        return (
            self.params.u4_slope
            * self.params.m4star
            * np.minimum(x1, self.u_cap)
            * np.maximum(x2, 1.0) ** (d4 - 1.0)
        )

    def ucorr_grad(self, x1, x2) -> np.ndarray:
        d4 = self.params.exps.delta4
        su = self.params.u4_slope * self.params.m4star
        g1 = su * x2 ** (d4 - 1.0) if x1 < self.u_cap else 0.0
        g2 = (d4 - 1.0) * float(self.ucorr(x1, x2)) / x2
        return np.array([g1, g2])

    # -- pieces --------------------------------------------------------------

    def v4(self, x1, x2):
        x2 = np.asarray(x2, dtype=np.float64)
        return self.g4(x1) * x2 ** self.params.exps.delta4 + self.ucorr(x1, x2)

    def v3(self, x1, x2):
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        return self.A3 * x1 ** self.p3 * x2 ** self.q3 + self.ucorr(x1, x2)

    def upper_trace(self, s):
        """Upper boundary value on the characteristic of invariant
        s = x1 + 5 x2, before the shared correction: the steep-cone monomial
        beyond the corner characteristic, the priming profile below it."""
        s = np.asarray(s, dtype=np.float64)
        sc = np.maximum(s, self.s_min)
        x1a = sc / self.s_cone
        low = self.g4(x1a) * (self.params.region.b1 * x1a) ** self.params.exps.delta4
        high = self.params.m3 * sc ** self.delta2
        return np.where(sc >= self.s_star, high, low)

    def sector_index(self, x1, x2):
        theta = np.arctan2(np.asarray(x2, dtype=np.float64), np.asarray(x1, dtype=np.float64))
        j = np.floor((self._th_hi - theta) / self._dth)
        return np.clip(j, 0, self.params.n2).astype(np.int64)

    def v2(self, x1, x2, j=None):
        """Diagonal-cone piece; extends smoothly outside the cone."""
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        s = x1 + 5.0 * x2
        if j is None:
            j = self.sector_index(x1, x2)
        else:
            j = np.broadcast_to(np.asarray(j, dtype=np.int64), np.broadcast(x1, x2).shape).copy()
        rho = x2 / np.maximum(x1, 1e-300)
        trav = self._A[j] + self._eta_pow[j] * (self._P_rho[j] - _travel_poly(rho))
        return self.upper_trace(s) + (self.params.h2 / 12.0) * s ** self.delta2 * trav + self.ucorr(x1, x2)

    def t12_coef(self, x1):
        """Cone trace on the shallow interface (correction excluded)."""
        s12 = np.asarray(x1, dtype=np.float64) * (1.0 + 5.0 / self.params.region.b1)
        return self.upper_trace(s12) + (self.params.h2 / 12.0) * s12 ** self.delta2 * self._A_full

    def v1(self, x1, x2):
        e, g = self.params.exps, self.params.region
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        # the x1 = 0 column (deep inside the excluded ball) clamps to 1 to
        # keep the anchored strip formulas finite and positive
        xe = np.maximum(x1, 1.0)
        B = self.params.h1 / (1.0 - e.delta1pp)
        bterm = B * xe ** (e.delta1p - 5.0) * (
            x2 ** (e.delta1pp - 1.0) - (xe / g.b1) ** (e.delta1pp - 1.0)
        )
        return self.t12_coef(x1) + bterm + self.ucorr(x1, x2)

    def v0p(self, x1, x2):
        """Diffusive-strip piece for levels >= 2.

        The level profile has a pole at level 1, so continuations below
        level 2 clamp there (the rows have their own formulas; the clamp
        only standardizes cross-row Tanaka bookkeeping).
        """
        e, g = self.params.exps, self.params.region
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.maximum(np.asarray(x2, dtype=np.float64), 2.0)
        climb = 1.0 / (x2 - 1.0) - 1.0 / (g.b0 - 1.0)
        return self.v1(x1, g.b0) + self.params.h0p * np.maximum(x1, 1.0) ** e.delta0 * climb + (
            self.ucorr(x1, x2) - self.ucorr(x1, g.b0)
        )

    def row1(self, x1):
        return self.params.kr_level1 * self.v0p(x1, 2.0)

    def row0(self, x1):
        e = self.params.exps
        x1 = np.asarray(x1, dtype=np.float64)
        hterm = self.params.h0 * np.maximum(x1, 1.0) ** e.delta0p
        return self.row1(x1 + 1.0) + hterm

    # -- assembled evaluation -------------------------------------------------

    def evaluate(self, states) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(V, region codes, decay-rate report) for an (n, 2) state array."""
        states = np.asarray(states, dtype=np.float64)
        x1 = states[:, 0]
        x2 = states[:, 1]
        codes = classify_region_grid(self.params.region, states)
        V = np.empty(len(x1))
        H = np.empty(len(x1))
        e, g, p = self.params.exps, self.params.region, self.params

        def put(mask, values, rates):
            if np.any(mask):
                V[mask] = values
                H[mask] = rates

        m = codes == _TAG_CODE["T0"]
        if np.any(m):
            lvl0 = m & (x2 <= 0)
            lvl1 = m & (x2 > 0)
            put(lvl0, self.row0(x1[lvl0]), p.h0 * np.maximum(x1[lvl0], 1.0) ** e.delta0p)
            put(lvl1, self.row1(x1[lvl1]), p.h0 * np.maximum(x1[lvl1], 1.0) ** e.delta0p)
        for tag in ("T00", "T0prime", "T01"):
            m = codes == _TAG_CODE[tag]
            put(m, self.v0p(x1[m], x2[m]), p.h0p * np.maximum(x1[m], 1.0) ** e.delta0pp)

        m = codes == _TAG_CODE["T1"]
        put(m, self.v1(x1[m], x2[m]), p.h1 * x1[m] ** e.delta1p * x2[m] ** e.delta1pp)

        m = codes == _TAG_CODE["T12"]
        if np.any(m):
            vals = np.minimum(self.v1(x1[m], x2[m]), self.v2(x1[m], x2[m]))
            put(m, vals, p.h1 * x1[m] ** e.delta1p * x2[m] ** e.delta1pp)

        m = codes == _TAG_CODE["T2"]
        if np.any(m):
            j = self.sector_index(x1[m], x2[m])
            s = x1[m] + 5.0 * x2[m]
            put(m, self.v2(x1[m], x2[m], j), self._eta_pow[j] * p.h2 * s ** e.delta2p)

        m = codes == _TAG_CODE["T23"]
        if np.any(m):
            upper = np.where(x1[m] >= g.b2, self.v3(x1[m], x2[m]), self.v4(x1[m], x2[m]))
            vals = np.minimum(self.v2(x1[m], x2[m]), upper)
            put(m, vals, p.h2 * (x1[m] + 5.0 * x2[m]) ** e.delta2p)

        m = codes == _TAG_CODE["T3"]
        put(m, self.v3(x1[m], x2[m]), p.h3 * x1[m] ** e.delta3p * x2[m] ** e.delta3pp)

        m = codes == _TAG_CODE["T34"]
        if np.any(m):
            vals = np.minimum(self.v3(x1[m], x2[m]), self.v4(x1[m], x2[m]))
            put(m, vals, p.h4 * x1[m] ** e.delta4p * x2[m] ** e.delta4pp)

        for tag in ("T4", "T4star"):
            m = codes == _TAG_CODE[tag]
            put(m, self.v4(x1[m], x2[m]),
                p.h4 * np.maximum(x1[m], 1.0) ** e.delta4p * x2[m] ** e.delta4pp)
        return V, codes, H

    def value(self, x) -> float:
        v, _, _ = self.evaluate(np.asarray(x, dtype=np.float64)[None, :])
        return float(v[0])

    def values(self, states) -> np.ndarray:
        return self.evaluate(states)[0]

    def piece(self, x) -> str:
        return classify_region(self.params.region, x)

    def rate(self, x) -> float:
        _, _, h = self.evaluate(np.asarray(x, dtype=np.float64)[None, :])
        return float(h[0])

    def phi(self, v):
        """Drift comparison function Ch * v^gamma_star."""
        v = np.asarray(v, dtype=np.float64)
        return self.params.Ch * v ** self._gamma_star

    @property
    def gamma(self) -> float:
        return self._gamma_star

    # -- analytic continuations and gradients ----------------------------------

    def piece_formula(self, tag: str, x1, x2, j=None):
        """Closed form of the named piece, as an analytic continuation."""
        if tag == "T3":
            return self.v3(x1, x2)
        if tag in ("T4", "T4star"):
            return self.v4(x1, x2)
        if tag in ("T2", "T12", "T23"):
            return self.v2(x1, x2, j)
        if tag == "T1":
            return self.v1(x1, x2)
        if tag in ("T0prime", "T00", "T01"):
            return self.v0p(x1, x2)
        if tag == "T0":
            x2a = np.asarray(x2, dtype=np.float64)
            return np.where(x2a <= 0, self.row0(x1), self.row1(x1))
        raise ValueError(f"unknown piece {tag!r}")

    def piece_gradient(self, tag: str, x, j=None) -> np.ndarray:
        """Gradient of a smooth piece (closed form where cheap, symmetric
        differences otherwise; the steps are tiny relative to the point)."""
        e = self.params.exps
        x1, x2 = float(x[0]), float(x[1])
        if tag == "T3":
            base = self.A3 * x1 ** self.p3 * x2 ** self.q3
            return np.array([self.p3 * base / x1, self.q3 * base / x2]) + self.ucorr_grad(x1, x2)
        if tag in ("T4", "T4star"):
            d4 = e.delta4
            base = float(self.g4(x1)) * x2 ** d4
            return np.array([
                float(self.g4_slope(x1)) * x2 ** d4,
                d4 * base / x2,
            ]) + self.ucorr_grad(x1, x2)
        if tag in ("T2", "T23", "T12", "T1"):
            if tag == "T1":
                def f(a, b):
                    return float(self.v1(np.array([a]), np.array([b]))[0])
            else:
                jj = int(self.sector_index(np.array([x1]), np.array([x2]))[0]) if j is None else int(j)

                def f(a, b):
                    return float(self.v2(np.array([a]), np.array([b]), np.array([jj]))[0])
            eps_fd = 1e-6 * max(1.0, abs(x1), abs(x2))
            return np.array([
                (f(x1 + eps_fd, x2) - f(x1 - eps_fd, x2)) / (2 * eps_fd),
                (f(x1, x2 + eps_fd) - f(x1, x2 - eps_fd)) / (2 * eps_fd),
            ])
        raise ValueError(f"no smooth gradient for piece {tag!r}")

    def v2_unsubdivided(self, x1, x2):
        """Reference cone value with a single sector (no rate growth)."""
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        s = x1 + 5.0 * x2
        rho = x2 / np.maximum(x1, 1e-300)
        trav = self._P_rho[0] - _travel_poly(rho)
        return self.upper_trace(s) + (self.params.h2 / 12.0) * s ** self.delta2 * trav + self.ucorr(x1, x2)


def assemble(params: LyapunovParams) -> PiecewiseLyapunov:
    """Build the global evaluator and check its coarse shape: the value must
    escape to infinity along the probe rays (precompact sublevel sets)."""
    V = PiecewiseLyapunov(params)
    b1 = params.region.b1
    rays = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 1.0 / (2 * b1)), (2 * b1, 1.0)]
    for direction in rays:
        t = np.array([1e2, 1e4, 1e6])
        pts = np.round(np.outer(t, direction))
        vals = V.values(pts)
        if not (vals[-1] > 10 * vals[0] > 0):
            raise ValueError(f"sublevel sets not precompact along ray {direction}")
    return V


# ---------------------------------------------------------------------------
# spec-level operations


def _membership_ok(tag: str, x, region: RegionParams) -> bool:
    """Lenient closure check: each defining inequality relaxed by factor 2."""
    x1, x2 = float(x[0]), float(x[1])
    b0, b1, b2 = region.b0, region.b1, region.b2
    if tag == "T0":
        return x2 <= 4
    if tag in ("T00", "T0prime", "T01"):
        return 1 < x2 <= 2 * b0
    if tag in ("T1", "T12"):
        return b0 / 2 < x2 and x2 <= 2 * x1 / b1
    if tag in ("T2", "T23"):
        return x1 / (2 * b1) <= x2 <= 2 * b1 * x1
    if tag == "T3":
        return x2 >= b1 * x1 / 2 and x1 >= b2 / 2
    if tag in ("T34", "T4", "T4star"):
        return x1 <= 2 * b2 and x2 > b0 / 2
    return False


def piece_value(region_tag: str, x, params: LyapunovParams, j: int | None = None) -> float:
    """Closed-form value of one region piece at x (x must be near the piece).

    These are the construction's local solutions: exact monomials in the
    transport regions, the level profile in the strip, the column profile in
    the priming slab, the trace-plus-travel form in the diagonal cone.  The
    assembled evaluator adds the shared subleading correction on top (and
    anchors the trace column-wise below the corner characteristic), so it
    coincides with these forms up to that correction in the scaling zone.
    """
    if not _membership_ok(region_tag, x, params.region):
        raise ValueError(f"point {tuple(x)} is not within reach of piece {region_tag}")
    e, g = params.exps, params.region
    x1, x2 = float(x[0]), float(x[1])
    V = PiecewiseLyapunov(params)
    if region_tag == "T3":
        return float(params.m4 * g.b2 ** -(e.delta3p - 4.0)
                     * x1 ** (e.delta3p - 4.0) * x2 ** (e.delta3pp - 2.0))
    if region_tag in ("T4", "T4star"):
        return float(V.g4(x1)) * x2 ** e.delta4
    if region_tag in ("T2", "T12", "T23"):
        return float(np.asarray(V.v2(x1, x2, j))) - float(V.ucorr(x1, x2))
    if region_tag == "T1":
        B = params.h1 / (1.0 - e.delta1pp)
        return B * x1 ** (e.delta1p - 5.0) * x2 ** (e.delta1pp - 1.0)
    if region_tag in ("T0prime", "T00", "T01"):
        climb = 1.0 / (x2 - 1.0) - 1.0 / (g.b0 - 1.0)
        return (params.m1 + params.h0p * climb) * x1 ** e.delta0
    if region_tag == "T0":
        m01 = params.m0_levels[1]
        if x2 <= 0:
            return m01 * (x1 + 1.0) ** e.delta0 + params.h0 * max(x1, 1.0) ** e.delta0p
        return m01 * x1 ** e.delta0
    raise ValueError(f"unknown piece {region_tag!r}")


def rate_h(region_tag: str, x, params: LyapunovParams, j: int | None = None) -> float:
    """The decay-rate monomial reported for the named region at x."""
    if not _membership_ok(region_tag, x, params.region):
        raise ValueError(f"point {tuple(x)} is not within reach of piece {region_tag}")
    e = params.exps
    x1, x2 = float(x[0]), float(x[1])
    if region_tag == "T0":
        return params.h0 * max(x1, 1.0) ** e.delta0p
    if region_tag in ("T00", "T0prime", "T01"):
        return params.h0p * max(x1, 1.0) ** e.delta0pp
    if region_tag in ("T1", "T12"):
        return params.h1 * x1 ** e.delta1p * x2 ** e.delta1pp
    if region_tag in ("T2", "T23"):
        if j is None:
            V = PiecewiseLyapunov(params)
            j = int(V.sector_index(np.array([x1]), np.array([x2]))[0])
        return float(params.eta2star ** int(j)) * params.h2 * (x1 + 5 * x2) ** e.delta2p
    if region_tag == "T3":
        return params.h3 * x1 ** e.delta3p * x2 ** e.delta3pp
    if region_tag in ("T34", "T4", "T4star"):
        return params.h4 * max(x1, 1.0) ** e.delta4p * x2 ** e.delta4pp
    raise ValueError(f"unknown region {region_tag!r}")


def phi(v: float, params: LyapunovParams) -> float:
    """Drift comparison function Ch * v^gamma_star."""
    if not v > 0:
        raise ValueError("phi is defined for positive arguments")
    return params.Ch * v ** gamma_star(params.exps)


def alt_piece_value(region_tag: str, x, chi: float, params: LyapunovParams) -> float:
    """Alternative transport pieces built under the lifted diagonal scaling.

    All three cone pieces collapse onto the single exponent delta4 and scale
    exactly with degree delta4 + 1 under (x1, x2, chi) -> (l x1, l x2, l chi).
    """
    if not chi > 0:
        raise ValueError("chi must be positive")
    e, g = params.exps, params.region
    x1, x2 = float(x[0]), float(x[1])
    d4 = e.delta4
    if region_tag == "T3":
        return x2 ** d4 * (chi * params.m4 + params.h3 * (x1 - chi * g.b2))
    if region_tag == "T2":
        s = x1 + 5.0 * x2
        anchor = s ** d4 * (chi * params.m4 + params.h3 * (s / (1 + 5 * g.b1) - chi * g.b2))
        length = (
            x1
            * math.sqrt(1.0 + g.b1 ** -2)
            * math.sin(math.atan(1.0 / g.b1) - math.atan(0.2))
            / math.sin(math.atan2(x2, x1) + math.atan(1.0 / g.b1))
        )
        return anchor + params.h2 * s ** d4 * length
    if region_tag == "T1":
        return x1 ** d4 * (params.m2 * x1 - params.h1 * (x2 - x1 / g.b1))
    raise ValueError("alternative pieces exist for T1, T2, T3 only")


# ---------------------------------------------------------------------------
# parameter selection


def select_parameters(
    delta0: float,
    eps: float,
    variant: str,
    region: RegionParams | None = None,
    targets: TuningTargets | None = None,
    c_star: int = 7,
) -> tuple[LyapunovParams, MarginReport]:
    """Fix every constant in dependency order, recording numeric margins.

    Order: exponents; the priming profile and its correction slope (the T34
    bend, the slab climb tax, the slab production gain); the steep-cone
    rate; the cone rate below its T23 curvature cap; the sector count from
    the T12 slope deficit; the shallow-cone and strip rates below their T01
    curvature caps; the level constants; the drift prefactor.  Raises
    :class:`InfeasibleParameters` naming the first failing interface.
    """
    region = region or RegionParams()
    t = targets or TuningTargets()
    report = MarginReport()
    exps = derive_exponents(delta0, eps, variant, c_star)
    e = exps
    p3 = e.delta3p - 4.0
    q3 = e.delta3pp - 2.0
    d4 = e.delta4
    delta2 = e.delta2p - 6.0
    b0, b1, b2 = region.b0, region.b1, region.b2

    def fail(name: str) -> None:
        raise InfeasibleParameters(name, report)

    # ---- priming profile ---------------------------------------------------
    m4star = 1.0
    gamma4 = t.gamma4
    su = t.u4_slope
    kmax = int(math.ceil(b2)) + 2 * c_star + 6
    inc = (np.arange(1, kmax + 1, dtype=np.float64) / b2) ** 4
    cum = np.concatenate([[0.0], np.cumsum(inc)])

    def g4(k: float) -> float:
        if k <= 0:
            return m4star
        i = int(min(max(math.floor(k), 0), kmax - 1))
        return m4star * (1.0 + gamma4 * (cum[i] + (k - i) * inc[min(i, kmax - 1)]))

    m4 = g4(b2)

    # T34 bend: the profile must outgrow the steep-cone monomial on both sides
    worst = math.inf
    for alpha in range(1, c_star + 1):
        plus = (g4(b2 + alpha) - m4 * (1 + alpha / b2) ** p3) / m4
        minus = (m4 * (1 - alpha / b2) ** p3 - g4(b2 - alpha)) / m4
        worst = min(worst, plus, minus)
    report.add("T34 curvature (profile bend)", worst)
    if worst <= 0:
        fail("T34")

    # slab climb tax: the two-step rise of profile + correction against the
    # descent payout, with the braking term where it exists
    worst = math.inf
    for x2 in (b0 + 1.0, 100.0, 300.0, 1000.0, t.x2_max):
        for k in range(0, int(b2) + 1):
            up = (g4(k + 2) - g4(k)) * x2 ** d4 + 2.0 * su * m4star * x2 ** (d4 - 1.0)
            payout = g4(k) * (x2 ** d4 - max(x2 - 3.0, 1.0) ** d4)
            b5 = math.comb(k, 5) * 120 if k >= 5 else 0
            brake = (b5 / max(x2, 1.0)) * (
                (g4(k) - g4(max(k - 5, 0))) * x2 ** d4
                + 5.0 * su * m4star * x2 ** (d4 - 1.0)
            )
            margin = (payout + brake - up) / max(payout + brake, up)
            worst = min(worst, margin)
    report.add("T4 interior climb tax", worst)
    if worst <= 0:
        fail("T4")

    # slab production gain: the braking reaction's +1 production must be paid
    # by the correction drop, at the smallest slab height of each column
    worst = math.inf
    for k in range(5, int(b2) + 1):
        x2r = max(b1 * k, math.sqrt(max(region.rho ** 2 - k * k, 1.0)))
        gain = d4 * g4(k) * x2r ** (d4 - 1.0)
        brake = (g4(k) - g4(k - 5)) * x2r ** d4 + 5.0 * su * m4star * x2r ** (d4 - 1.0)
        worst = min(worst, (brake - gain) / gain)
    report.add("T4 production gain vs correction drop", worst)
    if worst <= 0:
        fail("T4")

    # ---- steep cone ----------------------------------------------------------
    h3 = p3 * m4 * b2 ** (-p3)
    A3 = m4 * b2 ** (-p3)
    m3 = A3 * b1 ** q3 / (1 + 5 * b1) ** delta2

    # T23 curvature cap on the cone rate (gradient comparison on the ray)
    cap_grad = A3 * b1 ** (q3 + 1.0) * (5 * p3 * b1 - q3) / (1 + 5 * b1) ** e.delta2p
    report.add("T23 curvature cap positivity (needs 5 p b1 > q)", cap_grad)
    if cap_grad <= 0:
        fail("T23")
    # priming side of the ray: the profile slope must beat the level payout
    worst = math.inf
    k_lo = max(5, int(math.floor(region.rho / math.sqrt(1.0 + b1 * b1))))
    for k in range(k_lo, int(b2) + 1):
        lhs = 5.0 * m4star * gamma4 * (k / b2) ** 4 * (b1 * k)
        rhs = d4 * g4(k)
        worst = min(worst, (lhs - rhs) / rhs)
    report.add("T23 curvature, priming side of the ray", worst)
    if worst <= 0:
        fail("T23")
    h2 = cap_grad / t.safety
    report.add("T23 curvature margin (rate below cap)", (cap_grad - h2) / cap_grad)

    # one cross jump must not straddle the whole cone at the checking radius,
    # otherwise the discrete interface conditions cannot hold
    cone_angle = math.atan(b1) - math.atan(1.0 / b1)
    jump_angle = 6.0 / region.rho
    report.add("T23 discrete width (cone angle vs jump reach)", cone_angle - 2 * jump_angle)
    if cone_angle <= 2 * jump_angle:
        fail("T23")

    # ---- sector count from the T12 slope deficit ------------------------------
    s1_coef = 5 * e.delta0 + eps * b1
    s2_unit = h2 * (1 + 5 / b1) ** e.delta2p * b1 ** 2
    eta = t.eta2star
    n2 = 1
    A_full = 0.0
    m2 = m3 * (1 + 5 / b1) ** delta2
    for _ in range(80):
        M_needed = t.safety * s1_coef * m2 / s2_unit
        n2_new = max(1, int(math.ceil(math.log(max(M_needed, 1.0 + 1e-9)) / math.log(eta))))
        th_hi, th_lo = math.atan(b1), math.atan(1 / b1)
        jj = np.arange(n2_new + 2, dtype=np.float64)
        rho = np.tan(th_hi - jj * (th_hi - th_lo) / (n2_new + 1))
        rho[0], rho[-1] = b1, 1 / b1
        P = _travel_poly(rho)
        eta_pow = eta ** np.arange(n2_new + 1)
        A_full_new = float(np.sum(eta_pow * (P[:-1] - P[1:])))
        m2_new = (m3 + h2 / 12.0 * A_full_new) * (1 + 5 / b1) ** delta2
        if n2_new == n2 and abs(m2_new - m2) <= 1e-12 * m2:
            n2, A_full, m2 = n2_new, A_full_new, m2_new
            break
        n2, A_full, m2 = n2_new, A_full_new, m2_new
    else:
        fail("T12")
    M = eta ** n2
    report.add("T12 curvature (cone slope over shallow slope)",
               (M * s2_unit) / (s1_coef * m2) - 1.0)
    if (M * s2_unit) / (s1_coef * m2) <= 1.0:
        fail("T12")
    if n2 > 2000:
        report.add("T12 sector count sanity", float(2000 - n2))
        fail("T12")

    # ---- shallow cone and strip -----------------------------------------------
    h1 = m2 * (1 - e.delta1pp) * b1 ** (e.delta1pp - 1.0)
    m1 = m2 * (b0 * b1) ** (e.delta1pp - 1.0)

    caps = []
    for alpha in range(1, c_star + 1):
        r_up = ((b0 + alpha) / b0) ** (e.delta1pp - 1.0)
        c_up = 1.0 / (b0 - 1.0) - 1.0 / (b0 + alpha - 1.0)
        caps.append(m1 * (1.0 - r_up) / c_up)
        if b0 - alpha > 1:
            r_dn = ((b0 - alpha) / b0) ** (e.delta1pp - 1.0)
            c_dn = 1.0 / (b0 - alpha - 1.0) - 1.0 / (b0 - 1.0)
            caps.append(m1 * (r_dn - 1.0) / c_dn)
    cap01 = min(caps)
    report.add("T01 curvature cap positivity", cap01)
    if cap01 <= 0:
        fail("T01")
    h0p = cap01 / t.safety
    report.add("T01 curvature margin (rate below cap)", (cap01 - h0p) / cap01)

    # ---- strip levels -----------------------------------------------------------
    m0_2 = m1 + h0p * (1.0 - 1.0 / (b0 - 1.0))
    kr = t.kr_level1 if t.kr_level1 is not None else 2.0 / (1.0 - delta0)
    m0_1 = kr * m0_2
    lvl_margin = m0_1 * (1.0 - delta0) - m0_2
    report.add("level-1 coefficient margin (before h0)", lvl_margin / m0_2)
    if lvl_margin <= 0:
        fail("T00")
    h0 = lvl_margin / 2.0
    report.add("level-1 margin after h0", (lvl_margin - h0) / m0_2)
    m0_levels = [m0_1 + h0, m0_1]
    for lvl in range(2, int(math.ceil(b0)) + 1):
        m0_levels.append(m1 + h0p * (1.0 / (lvl - 1.0) - 1.0 / (b0 - 1.0)))
    report.add("m0 level table decreasing",
               min(a - b for a, b in zip(m0_levels, m0_levels[1:])) / m0_2)

    Ch = 0.5 * h0 / (m0_1 * 1.01 + h0)
    report.add("drift prefactor headroom", 1.0 - Ch)

    params = LyapunovParams(
        exps=exps,
        region=region,
        h0=h0,
        h0p=h0p,
        h1=h1,
        h2=h2,
        h3=h3,
        h4=1.0,
        m0_levels=tuple(m0_levels),
        m1=m1,
        m2=m2,
        m3=m3,
        m4=m4,
        m4star=m4star,
        eta2star=eta,
        n2=n2,
        Ch=Ch,
        gamma4=gamma4,
        u4_slope=su,
        kr_level1=kr,
    )

    # final guard: a coarse drift probe over delicate spots of the annulus
    worst_lv = _drift_probe(params)
    report.add("drift probe (worst -LV - phi(V) over probe points, scaled)", worst_lv)
    if worst_lv <= 0:
        fail("T23" if region.b1 < 2 else "drift")
    if not report.feasible():
        fail(report.worst()[0].split()[0])
    return params, report


def _drift_probe(params: LyapunovParams) -> float:
    """Worst relative drift margin over a strategic probe set."""
    from . import stability  # local import; stability builds on this module

    net = builtin_network(params.exps.variant)
    g = params.region
    V = PiecewiseLyapunov(params)
    pts: list[tuple[int, int]] = []
    r0 = g.rho
    for x2 in range(0, int(g.b0) + 8):
        for x1 in (int(r0), int(r0) + 7, int(2 * r0), int(5 * r0)):
            pts.append((x1, x2))
    for x1 in range(0, int(g.b2) + 3):
        for x2 in (int(max(g.b1 * x1, math.sqrt(max(r0 ** 2 - x1 ** 2, 0.0)) + 1)),
                   int(2 * r0), int(5 * r0)):
            pts.append((x1, max(x2, int(g.b0) + 1)))
    for x1 in (int(r0), int(2 * r0), int(5 * r0)):
        for x2 in (int(x1 / g.b1) + off for off in (-8, -3, 0, 3, 8)):
            if x2 > g.b0:
                pts.append((x1, x2))
    for x1 in range(int(g.b2 / 2), int(g.b2) + 10):
        for x2 in (g.b1 * x1 + off for off in (-15, -5, 0, 5, 15)):
            if x2 > g.b0 and x1 * x1 + x2 * x2 >= r0 * r0:
                pts.append((x1, int(x2)))
    states = np.array(sorted(set(pts)), dtype=np.int64)
    keep = (states ** 2).sum(axis=1) >= r0 * r0
    states = states[keep]
    lv = stability.generator_on_function(net, V, states)
    vals = V.values(states)
    margin = -lv - V.phi(vals)
    scale = np.maximum(np.abs(lv), V.phi(vals))
    return float(np.min(margin / np.maximum(scale, 1e-300)))


def assemble_default(variant: str) -> PiecewiseLyapunov:
    """Paper-desk preset evaluator for one of the recurrent variants."""
    params, _ = select_parameters(0.5, 0.1, variant)
    return assemble(params)


# ---------------------------------------------------------------------------
# parameter set text round trip


def params_to_text(params: LyapunovParams) -> str:
    buf = io.StringIO()
    e, g = params.exps, params.region
    buf.write("# lyapunov parameter set\n")
    buf.write(f"variant = {e.variant}\n")
    buf.write(f"delta0 = {float(e.delta0)!r}\n")
    buf.write(f"eps = {float(e.eps)!r}\n")
    buf.write(f"c_star = {int(e.c_star)}\n")
    for name, value in (("b0", g.b0), ("b1", g.b1), ("b2", g.b2), ("rho", g.rho)):
        buf.write(f"{name} = {float(value)!r}\n")
    for name in ("h0", "h0p", "h1", "h2", "h3", "h4", "m1", "m2", "m3", "m4",
                 "m4star", "eta2star", "Ch", "gamma4", "u4_slope", "kr_level1"):
        buf.write(f"{name} = {float(getattr(params, name))!r}\n")
    buf.write(f"n2 = {int(params.n2)}\n")
    buf.write("m0_levels = " + ",".join(repr(float(v)) for v in params.m0_levels) + "\n")
    return buf.getvalue()


def params_from_text(text: str) -> LyapunovParams:
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'name = value'")
        key, _, val = line.partition("=")
        fields[key.strip()] = val.strip()
    try:
        exps = derive_exponents(
            float(fields["delta0"]), float(fields["eps"]), fields["variant"],
            int(fields["c_star"]),
        )
        region = RegionParams(
            b0=float(fields["b0"]), b1=float(fields["b1"]),
            b2=float(fields["b2"]), rho=float(fields["rho"]),
        )
        return LyapunovParams(
            exps=exps,
            region=region,
            h0=float(fields["h0"]),
            h0p=float(fields["h0p"]),
            h1=float(fields["h1"]),
            h2=float(fields["h2"]),
            h3=float(fields["h3"]),
            h4=float(fields["h4"]),
            m0_levels=tuple(float(v) for v in fields["m0_levels"].split(",")),
            m1=float(fields["m1"]),
            m2=float(fields["m2"]),
            m3=float(fields["m3"]),
            m4=float(fields["m4"]),
            m4star=float(fields["m4star"]),
            eta2star=float(fields["eta2star"]),
            n2=int(fields["n2"]),
            Ch=float(fields["Ch"]),
            gamma4=float(fields["gamma4"]),
            u4_slope=float(fields["u4_slope"]),
            kr_level1=float(fields["kr_level1"]),
        )
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]!r}") from exc
