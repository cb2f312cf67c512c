"""Analytic laws of the boundary strip {x2 < 2} and Monte-Carlo cross-checks.

In the strip only the source reaction and the variant reaction can fire, so
the watched chain is one-dimensional: it marches right along level one,
dropping to level zero and bouncing back, until an up-jump to level two ends
the excursion.  The closed forms below give the strip-exit law for the two
recurrent variants, the never-exit bound for the transient one, and the
divergence certificate for the marginal one's mean return time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .simulate import tube_jump_probability

__all__ = [
    "ExitLaw",
    "DivergenceCertificate",
    "tube_jump_probs",
    "exit_distribution",
    "transience_lower_bound",
    "mean_return_time_diverges",
    "exit_distribution_mc",
]


def tube_jump_probs(variant: str, x1: int) -> tuple[float, float]:
    """(up, down) probabilities of the strip chain at (x1, 1); they sum to 1."""
    up = tube_jump_probability(variant, x1)
    return up, 1.0 - up


def exit_distribution(variant: str, k0: int, b: int) -> float:
    """Probability that the strip excursion entered at (k0, 1) exits at (b+1, 2).

    crn0 follows the geometric law (1-a) a^(b-k0) with a = 1/2; crn1 follows
    k0 / (b (b+1)), which telescopes to total mass one.  crn2 has no
    normalized exit law (the walk escapes along the axis with positive
    probability), so asking for it is an error.
    """
    if variant == "crn2":
        raise ValueError(
            "crn2 has no normalized exit law; use transience_lower_bound instead"
        )
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    if b < k0:
        raise ValueError("b must be >= k0")
    if variant == "crn0":
        a = 0.5
        return (1.0 - a) * a ** (b - k0)
    if variant == "crn1":
        return k0 / (b * (b + 1.0))
    raise ValueError(f"unknown variant {variant!r}")


def transience_lower_bound(k0: int, tail_tol: float = 1e-12) -> float:
    """Lower bound on never leaving the strip: 1 - sum_{k>k0} 1/(k^2+1).

    The series is summed directly up to a cutoff and the remainder is
    replaced by its integral-comparison value with an Euler-Maclaurin
    correction, so the reported value is accurate to well below 1e-10.
    """
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    cutoff = max(k0 + 1, 20000)
    k = np.arange(k0 + 1, cutoff + 1, dtype=np.float64)
    head = float(np.sum(1.0 / (k * k + 1.0)))
    # sum_{k>cutoff} f(k) = int_{cutoff+1}^inf f + f(cutoff+1)/2 - f'(cutoff+1)/12 + O(f''')
    a = cutoff + 1.0
    tail = (math.pi / 2.0 - math.atan(a)) + 0.5 / (a * a + 1.0) + (2.0 * a) / (
        12.0 * (a * a + 1.0) ** 2
    )
    assert 1.0 / cutoff**3 < tail_tol or cutoff >= 20000
    return 1.0 - (head + tail)


@dataclass(frozen=True)
class DivergenceCertificate:
    """Verdict on the mean return time, with the evidence used to reach it."""

    variant: str
    k0: int
    finite: bool
    reason: str
    partial_values: tuple[float, ...] = field(default=())
    truncation_points: tuple[float, ...] = field(default=())


def mean_return_time_diverges(variant: str, k0: int) -> DivergenceCertificate:
    """Whether the expected strip-escape (hence return) time is infinite.

    For crn1 the exit law k0/(b(b+1)) weighted by the order-b travel time
    gives the integral  k0 * int_{k0+1}^inf (k - k0)/(k (k+1)) dk, which
    grows like log and diverges.  For crn0 the geometric exit law has all
    moments, so the mean is finite.  crn2 is rejected: its return itself
    fails with positive probability.
    """
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    if variant == "crn2":
        raise ValueError("crn2 is transient; the transience bound applies instead")
    points = tuple(float(b) for b in (1e2, 1e4, 1e6, 1e8))
    if variant == "crn1":
        def partial(upper: float) -> float:
            # antiderivative of (k - k0)/(k (k+1)) is (1+k0) ln(k+1) - k0 ln k
            lo = k0 + 1.0
            val = (1.0 + k0) * (math.log(upper + 1.0) - math.log(lo + 1.0))
            val -= k0 * (math.log(upper) - math.log(lo))
            return k0 * val

        values = tuple(partial(b) for b in points)
        return DivergenceCertificate(
            variant=variant,
            k0=k0,
            finite=False,
            reason="integral k0 * int (k-k0)/(k(k+1)) dk grows like log(k)",
            partial_values=values,
            truncation_points=points,
        )
    if variant == "crn0":
        def partial(upper: float) -> float:
            b = np.arange(k0, int(min(upper, 1e6)) + 1, dtype=np.float64)
            mass = 0.5 ** (b - k0 + 1)
            return float(np.sum(mass * (b - k0 + 1.0)))

        values = tuple(partial(b) for b in points)
        return DivergenceCertificate(
            variant=variant,
            k0=k0,
            finite=True,
            reason="geometric exit law, all moments finite",
            partial_values=values,
            truncation_points=points,
        )
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class ExitLaw:
    """Empirical strip-exit frequencies: mass at b = absorption at (b+1, 2)."""

    variant: str
    k0: int
    n_samples: int
    masses: dict[int, float]
    censored: float = 0.0

    def analytic(self, b: int) -> float:
        return exit_distribution(self.variant, self.k0, b)

    def stderr(self, b: int) -> float:
        p = self.masses.get(b, 0.0)
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.n_samples)

    def to_csv(self, fh, b_max: int | None = None) -> None:
        fh.write("b,analytic,empirical,stderr\n")
        upper = b_max if b_max is not None else (max(self.masses) if self.masses else self.k0)
        for b in range(self.k0, upper + 1):
            try:
                ana = self.analytic(b)
            except ValueError:
                ana = float("nan")
            fh.write(f"{b},{ana:.12g},{self.masses.get(b, 0.0):.12g},{self.stderr(b):.12g}\n")


def exit_distribution_mc(
    variant: str,
    k0: int,
    n: int,
    rng: np.random.Generator,
    max_positions: int = 2_000_000,
) -> ExitLaw:
    """Empirical strip-exit law of the embedded chain entered at (k0, 1).

    All walkers that have not exited sit at the same first coordinate after
    the same number of chain steps (between exits the chain is a
    deterministic right-march), so the ensemble is advanced exactly by one
    binomial thinning per position.  Walkers still inside after
    ``max_positions`` positions are reported as censored mass.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    alive = n
    masses: dict[int, float] = {}
    b = k0
    last = k0 + max_positions
    while alive > 0 and b <= last:
        p_up = tube_jump_probability(variant, b)
        exits = int(rng.binomial(alive, p_up))
        if exits:
            masses[b] = exits / n
            alive -= exits
        b += 1
    return ExitLaw(
        variant=variant, k0=k0, n_samples=n, masses=masses, censored=alive / n
    )
