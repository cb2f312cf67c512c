"""Drift verification, interface checks, invariant-measure estimation and
the recurrence/transience classifier.

The drift condition is checked with the exact generator applied to the
assembled evaluator: jumps that cross an interface pick up the destination
piece automatically, so the cross-interface corrections are realized
implicitly and the bookkeeping identity (generator on the assembly equals
the in-piece generator plus rate-weighted crossing terms) holds to machine
precision.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .lyapunov import PiecewiseLyapunov
from .network import Network, propensity_grid
from .regions import classify_region

__all__ = [
    "DriftPoint",
    "DriftReport",
    "CurvatureReport",
    "FluxTerm",
    "OccupationMeasure",
    "ReturnTimeSamples",
    "TailFit",
    "PowerLawPhi",
    "H_phi",
    "H_phi_inverse",
    "ClassifyConfig",
    "StabilityVerdict",
    "generator_on_function",
    "drift_at",
    "verify_drift",
    "interface_points",
    "interface_curvature",
    "curvature_report",
    "flux_terms",
    "occupation_measure",
    "phi_moment",
    "return_time_stats",
    "tv_coupling_estimate",
    "classify_stability",
    "generator_consistency_mc",
]


# ---------------------------------------------------------------------------
# exact generator on the assembled function


def generator_on_function(net: Network, V: PiecewiseLyapunov, states: np.ndarray) -> np.ndarray:
    """Vectorized L V over an (n, 2) array of lattice states."""
    states = np.asarray(states, dtype=np.int64)
    v0 = V.values(states)
    out = np.zeros(len(states))
    for r, reaction in enumerate(net.reactions):
        rates = propensity_grid(net, r, states)
        live = rates > 0
        if not np.any(live):
            continue
        dest = states[live] + np.asarray(reaction.vector, dtype=np.int64)
        out[live] += rates[live] * (V.values(dest) - v0[live])
    return out


@dataclass(frozen=True)
class DriftPoint:
    x: tuple[int, int]
    LV: float
    phiV: float

    @property
    def margin(self) -> float:
        return -self.LV - self.phiV


def drift_at(net: Network, V: PiecewiseLyapunov, x: Sequence[int]) -> DriftPoint:
    """Exact generator and comparison rate at one state."""
    state = np.asarray(x, dtype=np.int64)[None, :]
    lv = float(generator_on_function(net, V, state)[0])
    phiv = float(V.phi(V.values(state))[0])
    return DriftPoint(x=(int(x[0]), int(x[1])), LV=lv, phiV=phiv)


@dataclass
class DriftReport:
    r_min: float
    r_max: float
    stride: int
    n_points: int
    worst_margin: float
    worst_point: tuple[int, int]
    violations: list[tuple[tuple[int, int], float, float]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_csv(self, fh) -> None:
        fh.write("x1,x2,LV,phiV,margin\n")
        for (x1, x2), lv, phiv in self.violations:
            fh.write(f"{x1},{x2},{lv:.9g},{phiv:.9g},{-lv - phiv:.9g}\n")


def _sweep_states(V: PiecewiseLyapunov, r_min: float, r_max: float, stride: int) -> np.ndarray:
    """Lattice sweep set: stride-1 bands within c_star of every interface,
    the given stride elsewhere, clipped to the annulus."""
    g = V.params.region
    cs = V.params.exps.c_star
    r_int = int(math.ceil(r_max))
    pts = []

    # coarse grid
    xs = np.arange(0, r_int + 1, stride, dtype=np.int64)
    g1, g2 = np.meshgrid(xs, xs, indexing="ij")
    pts.append(np.column_stack([g1.ravel(), g2.ravel()]))

    # diffusive strip rows and the T01 band
    rows = list(range(0, 3 + cs)) + [
        r for r in range(int(g.b0) - cs, int(g.b0) + cs + 1) if r >= 0
    ]
    for x2 in sorted(set(rows)):
        x1 = np.arange(0, r_int + 1, dtype=np.int64)
        pts.append(np.column_stack([x1, np.full_like(x1, x2)]))

    # priming column band
    for x1 in range(max(int(g.b2) - cs, 0), int(g.b2) + cs + 1):
        x2 = np.arange(0, r_int + 1, dtype=np.int64)
        pts.append(np.column_stack([np.full_like(x2, x1), x2]))

    # shallow-ray band |x1 - b1 x2| <= c_star sqrt(1 + b1^2)
    halfw = int(math.ceil(cs * math.sqrt(1.0 + g.b1 ** 2)))
    x2 = np.arange(int(g.b0), int(r_int / math.sqrt(1 + 1 / g.b1 ** 2)) + 2, dtype=np.int64)
    for off in range(-halfw, halfw + 1):
        x1 = np.round(g.b1 * x2).astype(np.int64) + off
        keep = x1 >= 0
        pts.append(np.column_stack([x1[keep], x2[keep]]))

    # steep-ray band |x2 - b1 x1| <= c_star sqrt(1 + b1^2)
    x1 = np.arange(0, int(r_int / math.sqrt(1 + g.b1 ** 2)) + 2, dtype=np.int64)
    for off in range(-halfw, halfw + 1):
        x2b = np.round(g.b1 * x1).astype(np.int64) + off
        keep = x2b >= 0
        pts.append(np.column_stack([x1[keep], x2b[keep]]))

    states = np.concatenate(pts, axis=0)
    r2 = (states.astype(np.float64) ** 2).sum(axis=1)
    keep = (r2 >= r_min ** 2) & (r2 <= r_max ** 2)
    states = states[keep]
    return np.unique(states, axis=0)


def verify_drift(
    net: Network,
    V: PiecewiseLyapunov,
    r_min: float,
    r_max: float,
    stride: int = 7,
    threads: int = 1,
) -> DriftReport:
    """Sweep the annulus and report every state with -LV < phi(V)."""
    if r_min < V.params.region.rho:
        raise ValueError("sweep must start at or outside the excluded ball")
    states = _sweep_states(V, r_min, r_max, stride)

    def work(chunk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lv = generator_on_function(net, V, chunk)
        phiv = V.phi(V.values(chunk))
        return lv, phiv

    if threads > 1 and len(states) > 10000:
        chunks = np.array_split(states, threads * 4)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
        lv = np.concatenate([p[0] for p in parts])
        phiv = np.concatenate([p[1] for p in parts])
    else:
        lv, phiv = work(states)

    margin = -lv - phiv
    worst = int(np.argmin(margin))
    bad = np.nonzero(margin < 0)[0]
    violations = [
        ((int(states[i, 0]), int(states[i, 1])), float(lv[i]), float(phiv[i]))
        for i in bad
    ]
    return DriftReport(
        r_min=r_min,
        r_max=r_max,
        stride=stride,
        n_points=len(states),
        worst_margin=float(margin[worst]),
        worst_point=(int(states[worst, 0]), int(states[worst, 1])),
        violations=violations,
    )


# ---------------------------------------------------------------------------
# interface curvature and flux terms

_INTERFACES = {
    # tag: (inner piece, outer piece chooser, normal direction builder)
    "T12": ("T1", "T2"),
    "T23": ("T2", "T3"),
    "T34": ("T4", "T3"),
    "T01": ("T0prime", "T1"),
    "T00": ("T0", "T0prime"),
}


def interface_normal(tag: str, params) -> np.ndarray:
    b1 = params.region.b1
    if tag == "T12":
        n = np.array([-1.0 / b1, 1.0])
    elif tag == "T23":
        n = np.array([-b1, 1.0])
    elif tag == "T34":
        n = np.array([1.0, 0.0])
    elif tag in ("T01", "T00"):
        n = np.array([0.0, 1.0])
    else:
        raise ValueError(f"{tag!r} is not an interface")
    return n / np.linalg.norm(n)


def interface_points(V: PiecewiseLyapunov, tag: str, r_lo: float, r_hi: float, n: int = 40) -> list[tuple[int, int]]:
    """Lattice sample points on an interface whose two neighbours are the
    canonical adjacent regions (corner cells where a third region intrudes
    are skipped)."""
    g = V.params.region
    out: list[tuple[int, int]] = []
    radii = np.geomspace(max(r_lo, 1.0), r_hi, n)
    for r in radii:
        if tag == "T12":
            x1 = r / math.sqrt(1 + 1 / g.b1 ** 2)
            pt = (int(round(x1)), int(round(x1 / g.b1)))
        elif tag == "T23":
            x1 = r / math.sqrt(1 + g.b1 ** 2)
            pt = (max(int(round(x1)), 1), int(round(g.b1 * max(round(x1), 1))))
        elif tag == "T34":
            pt = (int(round(g.b2)), int(round(r)))
        elif tag == "T01":
            pt = (int(round(r)), int(round(g.b0)))
        elif tag == "T00":
            pt = (int(round(r)), 2)
        else:
            raise ValueError(f"{tag!r} is not an interface")
        if pt[0] * pt[0] + pt[1] * pt[1] < r_lo ** 2:
            continue
        if classify_region(g, pt) != tag:
            continue
        # keep only canonical-neighbour points
        nvec = interface_normal(tag, V.params)
        lo = np.round(np.asarray(pt) - 1.5 * nvec).astype(int)
        hi = np.round(np.asarray(pt) + 1.5 * nvec).astype(int)
        lo_tag = classify_region(g, lo)
        hi_tag = classify_region(g, hi)
        inner, outer = _INTERFACES[tag]
        if lo_tag in (inner, tag) and hi_tag in (outer, tag):
            out.append(pt)
    return sorted(set(out))


def interface_curvature(V: PiecewiseLyapunov, tag: str, x: Sequence[int], alpha: int | None = None) -> float:
    """Curvature of the assembly across the named interface at x.

    Scale-invariant interfaces (T12, T23) use the normal jump of the
    closed-form gradients; axis-parallel ones (T34, T01, T00) use the
    discrete comparison at x + alpha * normal: the native piece there minus
    the continuation of the piece from the other side.  Negative values make
    every crossing flux term nonpositive.
    """
    if tag in ("T12", "T23"):
        inner, outer = _INTERFACES[tag]
        if tag == "T23" and x[0] < V.params.region.b2:
            outer = "T4"
        n = interface_normal(tag, V.params)
        g_in = V.piece_gradient(inner, x)
        g_out = V.piece_gradient(outer, x)
        return float(np.dot(n, g_out - g_in))
    if tag in ("T34", "T01", "T00"):
        if alpha is None or alpha == 0:
            raise ValueError("axis-parallel interfaces need a nonzero integer alpha")
        inner, outer = _INTERFACES[tag]
        n = interface_normal(tag, V.params)
        y = np.asarray(x, dtype=np.float64) + alpha * n
        native = outer if alpha > 0 else inner
        other = inner if alpha > 0 else outer
        if tag == "T00" and alpha < 0:
            raise ValueError("the strip family has no continuation below level 2")
        v_native = float(np.asarray(V.piece_formula(native, y[0], y[1])))
        v_other = float(np.asarray(V.piece_formula(other, y[0], y[1])))
        return v_native - v_other
    raise ValueError(f"{tag!r} is not an interface")


@dataclass
class CurvatureReport:
    tag: str
    normal: tuple[float, float]
    samples: list[tuple[tuple[int, int], float]]

    @property
    def worst(self) -> float:
        return max(v for _, v in self.samples)

    def to_csv(self, fh) -> None:
        fh.write("x1,x2,curvature\n")
        for (x1, x2), v in self.samples:
            fh.write(f"{x1},{x2},{v:.9g}\n")


def curvature_report(V: PiecewiseLyapunov, tag: str, r_lo: float, r_hi: float, n: int = 40) -> CurvatureReport:
    """Worst-alpha curvature per sampled interface point."""
    cs = V.params.exps.c_star
    pts = interface_points(V, tag, r_lo, r_hi, n)
    samples = []
    for pt in pts:
        if tag in ("T12", "T23"):
            samples.append((pt, interface_curvature(V, tag, pt)))
        else:
            alphas = range(1, cs + 1) if tag == "T00" else [a for a in range(-cs, cs + 1) if a != 0]
            vals = []
            for a in alphas:
                if tag == "T34" and pt[0] + a < 1:
                    continue
                if tag == "T01" and pt[1] + a <= 2:
                    continue
                vals.append(interface_curvature(V, tag, pt, alpha=a))
            if vals:
                samples.append((pt, max(vals)))
    nvec = interface_normal(tag, V.params)
    return CurvatureReport(tag=tag, normal=(float(nvec[0]), float(nvec[1])), samples=samples)


@dataclass(frozen=True)
class FluxTerm:
    reaction: int
    x: tuple[int, int]
    dest: tuple[int, int]
    src_piece: str
    dest_piece: str
    value: float
    beta: float
    verdict: str  # "negative" | "dominated" | "violation"


def _piece_key(V: PiecewiseLyapunov, x) -> tuple[str, int]:
    tag = classify_region(V.params.region, x)
    sub = 0
    if tag == "T2":
        sub = int(V.sector_index(np.array([float(x[0])]), np.array([float(x[1])]))[0])
    elif tag == "T0":
        sub = int(x[1])
    return tag, sub


def _band_branch(V: PiecewiseLyapunov, tag: str, x) -> str:
    """Which continuation the min-glue picked on an interface band."""
    x1, x2 = float(x[0]), float(x[1])
    if tag == "T12":
        return "T1" if float(V.v1(x1, x2)) <= float(V.v2(x1, x2)) else "T2"
    if tag == "T23":
        upper = "T3" if x1 >= V.params.region.b2 else "T4"
        vu = float(np.asarray(V.piece_formula(upper, x1, x2)))
        return "T2" if float(V.v2(x1, x2)) <= vu else upper
    if tag == "T34":
        return "T3" if float(V.v3(x1, x2)) <= float(V.v4(x1, x2)) else "T4"
    return tag


def flux_terms(net: Network, V: PiecewiseLyapunov, x: Sequence[int]) -> list[FluxTerm]:
    """Cross-interface correction of each reaction jumping out of x's piece.

    The value is the destination-piece continuation minus the source-piece
    continuation at the destination, which is exactly what the generator on
    the assembly adds on top of the in-piece generator.  beta is the
    fraction of the jump at which the piece first changes.
    """
    x = np.asarray(x, dtype=np.float64)
    src_tag, src_sub = _piece_key(V, x)
    src_formula = _band_branch(V, src_tag, x) if src_tag in ("T12", "T23", "T34") else src_tag
    out: list[FluxTerm] = []
    hx = V.rate(x)
    for r, reaction in enumerate(net.reactions):
        rate = propensity_grid(net, r, x[None, :])[0]
        if rate <= 0:
            continue
        dest = x + np.asarray(reaction.vector, dtype=np.float64)
        dst_tag, dst_sub = _piece_key(V, dest)
        if (dst_tag, dst_sub) == (src_tag, src_sub):
            continue
        dst_formula = _band_branch(V, dst_tag, dest) if dst_tag in ("T12", "T23", "T34") else dst_tag
        j_src = src_sub if src_tag == "T2" else None
        j_dst = dst_sub if dst_tag == "T2" else None
        v_dst = float(np.asarray(V.piece_formula(dst_formula, dest[0], dest[1], j=j_dst)))
        v_src = float(np.asarray(V.piece_formula(src_formula, dest[0], dest[1], j=j_src)))
        F = v_dst - v_src
        # crossing fraction via bisection on the piece key
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if _piece_key(V, x + mid * np.asarray(reaction.vector)) == (src_tag, src_sub):
                lo = mid
            else:
                hi = mid
        if F <= 0:
            verdict = "negative"
        elif abs(F) <= 0.5 * hx / rate:
            verdict = "dominated"
        else:
            verdict = "violation"
        out.append(
            FluxTerm(
                reaction=r,
                x=(int(x[0]), int(x[1])),
                dest=(int(dest[0]), int(dest[1])),
                src_piece=f"{src_tag}:{src_sub}",
                dest_piece=f"{dst_tag}:{dst_sub}",
                value=F,
                beta=hi,
                verdict=verdict,
            )
        )
    return out


# ---------------------------------------------------------------------------
# occupation measure and moments


@dataclass
class OccupationMeasure:
    """Holding-time-weighted visit measure of one trajectory."""

    weights: dict[tuple[int, int], float]
    total_time: float
    outside_time: float = 0.0
    n_jumps: int = 0

    def normalized(self) -> dict[tuple[int, int], float]:
        return {k: v / self.total_time for k, v in self.weights.items()}

    def to_csv(self, fh) -> None:
        fh.write("x1,x2,time\n")
        for (x1, x2), w in sorted(self.weights.items()):
            fh.write(f"{x1},{x2},{w:.12g}\n")


def occupation_measure(
    net: Network,
    x0: Sequence[int],
    n_jumps: int,
    seed: int,
    stream: int = 0,
) -> OccupationMeasure:
    """Empirical occupation measure over one long run (compiled core)."""
    if n_jumps < 1:
        raise ValueError("n_jumps must be >= 1")
    keys, times, total = _kernels.run_occupation(
        net.c_in_matrix(), net.vectors_matrix(), net.kappas(),
        np.asarray(x0, dtype=np.int64), n_jumps, seed, stream,
    )
    weights = {
        (int(k >> 32), int(k & 0xFFFFFFFF)): float(t)
        for k, t in zip(keys, times)
        if t > 0.0
    }
    return OccupationMeasure(
        weights=weights, total_time=float(total), outside_time=0.0,
        n_jumps=n_jumps,
    )


def phi_moment(
    mu: OccupationMeasure, V: PiecewiseLyapunov, phi: Callable[[np.ndarray], np.ndarray] | None = None
) -> tuple[np.ndarray, float]:
    """Cumulative sum of phi(V) d-mu over states ordered by V, at deciles of
    the distinct-state support.  Returns (10 partial sums, total)."""
    states = np.array(sorted(mu.weights), dtype=np.int64)
    if len(states) == 0:
        raise ValueError("empty measure")
    w = np.array([mu.weights[tuple(s)] for s in states])
    vals = V.values(states)
    contrib = (V.phi(vals) if phi is None else phi(vals)) * w
    order = np.argsort(vals, kind="stable")
    contrib = contrib[order]
    cum = np.cumsum(contrib)
    idx = np.linspace(0, len(cum) - 1, 11)[1:].astype(int)
    return cum[idx], float(cum[-1])


def occupation_tv(a: OccupationMeasure, b: OccupationMeasure) -> float:
    """Total-variation distance between two normalized occupation measures."""
    keys = set(a.weights) | set(b.weights)
    na, nb = a.total_time, b.total_time
    return 0.5 * sum(
        abs(a.weights.get(k, 0.0) / na - b.weights.get(k, 0.0) / nb) for k in keys
    )


# ---------------------------------------------------------------------------
# return times and tails


@dataclass
class TailFit:
    slope: float
    ci_lo: float
    ci_hi: float
    n_fit: int


@dataclass
class ReturnTimeSamples:
    target_radius: float
    x0: tuple[int, int]
    budget_jumps: int
    taus: np.ndarray
    jumps: np.ndarray
    hits: np.ndarray

    @property
    def censored_fraction(self) -> float:
        return float(1.0 - self.hits.mean())

    def truncated_mean(self) -> float:
        """Mean of the return time truncated at each sample's budget end."""
        return float(self.taus.mean())

    def tail_fit(self, rng: np.random.Generator, n_boot: int = 200) -> TailFit:
        """Log-log slope of the empirical survival function with a bootstrap
        percentile interval, fitted between the 75% and 99% quantiles (the
        asymptotic stretch of the tail)."""
        taus = self.taus[self.hits == 1]
        if len(taus) < 20:
            raise ValueError("too few uncensored samples for a tail fit")

        def one(ts: np.ndarray) -> float:
            q = np.quantile(ts, [0.75, 0.99])
            grid = np.geomspace(max(q[0], 1e-9), q[1], 12)
            surv = np.array([(ts > t).mean() for t in grid])
            keep = surv > 0
            lx, ly = np.log(grid[keep]), np.log(surv[keep])
            return float(np.polyfit(lx, ly, 1)[0])

        slope = one(taus)
        boots = np.array([
            one(rng.choice(taus, size=len(taus), replace=True)) for _ in range(n_boot)
        ])
        lo, hi = np.quantile(boots, [0.025, 0.975])
        return TailFit(slope=slope, ci_lo=float(lo), ci_hi=float(hi), n_fit=len(taus))

    def to_csv(self, fh) -> None:
        fh.write("tau,jumps,hit\n")
        for t, j, h in zip(self.taus, self.jumps, self.hits):
            fh.write(f"{t:.9g},{j},{h}\n")


def return_time_stats(
    net: Network,
    target_radius: float,
    x0: Sequence[int],
    n_samples: int,
    budget_jumps: int,
    seed: int,
) -> ReturnTimeSamples:
    """Return-time samples to the ball of the given radius (compiled core)."""
    x0 = np.asarray(x0, dtype=np.int64)
    if float((x0 ** 2).sum()) <= target_radius ** 2:
        raise ValueError("start state must lie outside the target ball")
    taus, jumps, hits = _kernels.run_return_times(
        net.c_in_matrix(), net.vectors_matrix(), net.kappas(),
        x0, float(target_radius) ** 2, n_samples, budget_jumps, seed,
    )
    return ReturnTimeSamples(
        target_radius=float(target_radius),
        x0=(int(x0[0]), int(x0[1])),
        budget_jumps=budget_jumps,
        taus=taus,
        jumps=jumps,
        hits=hits,
    )


# ---------------------------------------------------------------------------
# comparison-flow travel times


@dataclass(frozen=True)
class PowerLawPhi:
    """phi(s) = C s^gamma on [1, inf); closed-form travel integrals."""

    C: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValueError("phi must be positive on [1, inf)")

    def __call__(self, s):
        return self.C * np.asarray(s, dtype=np.float64) ** self.gamma

    def H(self, u):
        """Travel time int_1^u ds / phi(s)."""
        u = np.asarray(u, dtype=np.float64)
        if np.any(u < 1):
            raise ValueError("H is defined for u >= 1")
        if self.gamma == 1.0:
            return np.log(u) / self.C
        a = 1.0 - self.gamma
        return (u ** a - 1.0) / (self.C * a)

    def H_inv(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0):
            raise ValueError("H_inv is defined for t >= 0")
        if self.gamma == 1.0:
            return np.exp(self.C * t)
        a = 1.0 - self.gamma
        return (1.0 + self.C * a * t) ** (1.0 / a)


def H_phi(u: float, phi: PowerLawPhi) -> float:
    """Travel time int_1^u ds / phi(s) of the comparison flow."""
    return float(phi.H(u))


def H_phi_inverse(t: float, phi: PowerLawPhi) -> float:
    """Exact inverse of the travel time; H(H_inv(t)) = t."""
    return float(phi.H_inv(t))


# ---------------------------------------------------------------------------
# coupling


def tv_coupling_estimate(
    net: Network,
    x: Sequence[int],
    y: Sequence[int],
    t: float,
    n: int,
    seed: int,
    max_jumps: int = 50_000_000,
) -> tuple[float, float]:
    """Upper estimate of TV(P_t(x, .), P_t(y, .)) by independent coupling.

    Two independent copies run side by side; the attempt couples at the
    first jump epoch where they occupy the same state.  Returns (estimate,
    standard error) of the not-coupled-by-t fraction.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if np.array_equal(x, y):
        return 0.0, 0.0
    failed = _kernels.run_coupling(
        net.c_in_matrix(), net.vectors_matrix(), net.kappas(),
        x, y, float(t), n, max_jumps, seed,
    )
    est = float(failed.mean())
    return est, math.sqrt(max(est * (1 - est), 0.0) / n)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ClassifyConfig:
    target_radius: float = 50.0
    x0_near: tuple[int, int] = (100, 0)
    x0_far: tuple[int, int] = (200, 0)
    n_transience: int = 400
    budget_transience: int = 200_000
    n_tail: int = 800
    budget_tail: int = 1_000_000
    n_mean: int = 1000
    budgets_mean: tuple[int, int] = (1000, 2000)
    censored_threshold: float = 0.05
    slope_floor: float = -1.5
    growth_threshold: float = 0.20
    seed: int = 0


@dataclass
class StabilityVerdict:
    decision: str
    evidence: dict[str, float]
    tail: TailFit | None = None

    def report_text(self) -> str:
        lines = [f"decision: {self.decision}"]
        for k, v in sorted(self.evidence.items()):
            lines.append(f"{k}: {v:.6g}")
        if self.tail is not None:
            lines.append(
                f"tail slope: {self.tail.slope:.4g} "
                f"[{self.tail.ci_lo:.4g}, {self.tail.ci_hi:.4g}]"
            )
        return "\n".join(lines) + "\n"


def classify_stability(net: Network, config: ClassifyConfig | None = None) -> StabilityVerdict:
    """Recurrence/transience decision from return-time Monte Carlo.

    Rule: a censored fraction significantly above the threshold that does
    not shrink with distance means transient; certain returns with a heavy
    survival tail (slope above the floor) and a truncated mean still growing
    under budget doubling mean null recurrent; a stable finite mean means
    positive recurrent; anything else is inconclusive.
    """
    cfg = config or ClassifyConfig()
    ev: dict[str, float] = {}

    # transience probe at two distances
    cens = []
    for i, x0 in enumerate((cfg.x0_near, cfg.x0_far)):
        rs = return_time_stats(
            net, cfg.target_radius, x0, cfg.n_transience, cfg.budget_transience,
            seed=cfg.seed + 17 * i + 1,
        )
        cens.append(rs.censored_fraction)
    ev["censored_near"], ev["censored_far"] = cens
    sig = 4.0 * math.sqrt(0.25 / cfg.n_transience)
    if min(cens) > cfg.censored_threshold + sig and cens[1] >= cens[0] - sig:
        return StabilityVerdict(decision="transient", evidence=ev)

    # truncated-mean growth under budget doubling
    means = []
    for i, budget in enumerate(cfg.budgets_mean):
        rs = return_time_stats(
            net, cfg.target_radius, cfg.x0_near, cfg.n_mean, budget,
            seed=cfg.seed + 101 + i,
        )
        means.append(rs.truncated_mean())
    growth = (means[1] - means[0]) / means[0]
    ev["truncated_mean_small"], ev["truncated_mean_large"] = means
    ev["truncated_mean_growth"] = growth

    # survival-tail slope
    rs = return_time_stats(
        net, cfg.target_radius, cfg.x0_near, cfg.n_tail, cfg.budget_tail,
        seed=cfg.seed + 1009,
    )
    ev["censored_tail_run"] = rs.censored_fraction
    tail = rs.tail_fit(np.random.default_rng(cfg.seed + 7))
    ev["tail_slope"] = tail.slope

    if rs.censored_fraction <= cfg.censored_threshold:
        if tail.ci_lo > cfg.slope_floor and growth > cfg.growth_threshold:
            return StabilityVerdict(decision="null_recurrent", evidence=ev, tail=tail)
        if growth <= cfg.growth_threshold:
            return StabilityVerdict(decision="positive_recurrent", evidence=ev, tail=tail)
    return StabilityVerdict(decision="inconclusive", evidence=ev, tail=tail)


# ---------------------------------------------------------------------------
# generator consistency (Monte-Carlo oracle)


def generator_consistency_mc(
    net: Network,
    f_values: Callable[[np.ndarray], np.ndarray],
    x: Sequence[int],
    dt: float,
    n: int,
    seed: int,
) -> tuple[float, float]:
    """Estimate E[f(X_dt) - f(x)] / dt by n short runs; returns (mean, sem)."""
    x = np.asarray(x, dtype=np.int64)
    ends = np.empty((n, net.d), dtype=np.int64)
    grid = np.array([dt])
    for i in range(n):
        ends[i] = _kernels.run_to_time_grid(
            net.c_in_matrix(), net.vectors_matrix(), net.kappas(), x, grid, seed, i,
        )[0]
    f0 = float(np.asarray(f_values(x[None, :]))[0])
    incs = (np.asarray(f_values(ends)) - f0) / dt
    return float(incs.mean()), float(incs.std(ddof=1) / math.sqrt(n))
