"""Reaction network data model and exact stochastic mass-action kinetics.

A network is a list of reactions over ``d`` species.  Each reaction carries an
input complex, an output complex (both stoichiometric count vectors) and a
positive rate constant.  Two rate notions live here:

* :func:`propensity` -- the jump rate of the molecular-count Markov process,
  an exact falling-factorial product (binomial form, zero whenever a species
  count is below its input multiplicity), and
* :func:`mass_action_rate` -- the deterministic monomial rate used by the
  fluid-limit ODE.

The generator of the jump process applied to a scalar function is
:func:`apply_generator`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Reaction",
    "Network",
    "NetworkSyntaxError",
    "BUILTIN_NAMES",
    "builtin_network",
    "parse_network",
    "parse_network_file",
    "propensity",
    "mass_action_rate",
    "reaction_vector",
    "apply_generator",
]

BUILTIN_NAMES = ("crn0", "crn1", "crn2")


@dataclass(frozen=True)
class Reaction:
    """One reaction: input complex, output complex, rate constant."""

    c_in: tuple[int, ...]
    c_out: tuple[int, ...]
    kappa: float = 1.0

    def __post_init__(self) -> None:
        if len(self.c_in) != len(self.c_out):
            raise ValueError("input and output complexes must have equal length")
        if any(c < 0 for c in self.c_in) or any(c < 0 for c in self.c_out):
            raise ValueError("negative stoichiometry")
        if not self.kappa > 0:
            raise ValueError("nonpositive rate constant")
        if self.c_in == self.c_out:
            raise ValueError("zero reaction vector")

    @property
    def vector(self) -> tuple[int, ...]:
        """Net state change c_out - c_in."""
        return tuple(o - i for i, o in zip(self.c_in, self.c_out))


@dataclass(frozen=True)
class Network:
    """A mass-action reaction network over ``d`` species.

    Immutable after construction; all operations on it are pure functions, so
    a single instance may be shared freely across threads.
    """

    d: int
    reactions: tuple[Reaction, ...]
    species: tuple[str, ...] = field(default=())
    name: str = ""

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("species count must be >= 1")
        if not self.reactions:
            raise ValueError("network must have at least one reaction")
        for r in self.reactions:
            if len(r.c_in) != self.d:
                raise ValueError("reaction arity does not match species count")
        if not self.species:
            object.__setattr__(
                self, "species", tuple(f"S{i}" for i in range(self.d))
            )
        if len(self.species) != self.d:
            raise ValueError("species name list does not match species count")

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    def c_in_matrix(self) -> np.ndarray:
        """(m, d) int64 matrix of input complexes."""
        return np.array([r.c_in for r in self.reactions], dtype=np.int64)

    def c_out_matrix(self) -> np.ndarray:
        return np.array([r.c_out for r in self.reactions], dtype=np.int64)

    def vectors_matrix(self) -> np.ndarray:
        """(m, d) int64 matrix of reaction vectors c_out - c_in."""
        return self.c_out_matrix() - self.c_in_matrix()

    def kappas(self) -> np.ndarray:
        return np.array([r.kappa for r in self.reactions], dtype=np.float64)

    def complex_norm_max(self) -> int:
        """Largest 1-norm over all input and output complexes."""
        return max(
            max(sum(r.c_in), sum(r.c_out)) for r in self.reactions
        )


def builtin_network(name: str) -> Network:
    """Return one of the three built-in two-species networks.

    All rate constants are 1.  The four reactions, in order:

    * r1: 0 -> A + B
    * r2: the variant reaction (B -> 0 | A + B -> A | 2A + B -> 2A)
    * r3: 5A + 2B -> 3B
    * r4: 3B -> 2A
    """
    variants = {
        "crn0": Reaction(c_in=(0, 1), c_out=(0, 0)),
        "crn1": Reaction(c_in=(1, 1), c_out=(1, 0)),
        "crn2": Reaction(c_in=(2, 1), c_out=(2, 0)),
    }
    key = name.lower()
    if key not in variants:
        raise ValueError(f"unknown builtin network {name!r}; expected one of {BUILTIN_NAMES}")
    reactions = (
        Reaction(c_in=(0, 0), c_out=(1, 1)),
        variants[key],
        Reaction(c_in=(5, 2), c_out=(0, 3)),
        Reaction(c_in=(0, 3), c_out=(2, 0)),
    )
    return Network(d=2, reactions=reactions, species=("A", "B"), name=key)


class NetworkSyntaxError(ValueError):
    """Malformed network document; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def parse_network(text: str) -> Network:
    """Parse the JSON network document format.

    The document is an object with a ``species`` list of names and a
    ``reactions`` list of records ``{"input": {name: count}, "output":
    {name: count}, "kappa": number}``.  Missing species in a complex mean
    count zero; ``kappa`` defaults to 1.  See the README for the grammar.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkSyntaxError(exc.msg, line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise NetworkSyntaxError("top level must be an object")
    species = doc.get("species")
    if not isinstance(species, list) or not all(isinstance(s, str) for s in species):
        raise NetworkSyntaxError("'species' must be a list of names")
    if len(set(species)) != len(species):
        raise NetworkSyntaxError("duplicate species name")
    raw_reactions = doc.get("reactions")
    if not isinstance(raw_reactions, list) or not raw_reactions:
        raise NetworkSyntaxError("'reactions' must be a non-empty list")
    index = {s: i for i, s in enumerate(species)}
    d = len(species)

    def complex_vector(rec: object, which: str, rnum: int) -> tuple[int, ...]:
        if not isinstance(rec, dict):
            raise NetworkSyntaxError(f"reaction {rnum}: '{which}' must be a mapping")
        vec = [0] * d
        for name, count in rec.items():
            if name not in index:
                raise NetworkSyntaxError(f"reaction {rnum}: unknown species {name!r}")
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise NetworkSyntaxError(
                    f"reaction {rnum}: negative stoichiometry for {name!r}"
                    if isinstance(count, int) and not isinstance(count, bool)
                    else f"reaction {rnum}: stoichiometry for {name!r} must be a nonnegative integer"
                )
            vec[index[name]] = count
        return tuple(vec)

    reactions = []
    for rnum, rec in enumerate(raw_reactions, start=1):
        if not isinstance(rec, dict):
            raise NetworkSyntaxError(f"reaction {rnum}: must be an object")
        c_in = complex_vector(rec.get("input", {}), "input", rnum)
        c_out = complex_vector(rec.get("output", {}), "output", rnum)
        kappa = rec.get("kappa", 1.0)
        if isinstance(kappa, bool) or not isinstance(kappa, (int, float)):
            raise NetworkSyntaxError(f"reaction {rnum}: kappa must be a number")
        if not kappa > 0:
            raise NetworkSyntaxError(f"reaction {rnum}: nonpositive rate constant")
        if c_in == c_out:
            raise NetworkSyntaxError(f"reaction {rnum}: zero reaction vector")
        reactions.append(Reaction(c_in=c_in, c_out=c_out, kappa=float(kappa)))
    return Network(
        d=d,
        reactions=tuple(reactions),
        species=tuple(species),
        name=str(doc.get("name", "")),
    )


def parse_network_file(path: str) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def falling_factorial(x: int, k: int) -> int:
    """x (x-1) ... (x-k+1) = C(x, k) k!, and 0 whenever k > x.  Exact."""
    if k < 0 or x < k:
        return 0
    out = 1
    for j in range(k):
        out *= x - j
    return out


def propensity(net: Network, r: int, x: Sequence[int]) -> float:
    """Exact jump rate of reaction ``r`` at integer state ``x``.

    Computed as an exact integer product of falling factorials (one per
    species) and only then multiplied by the float rate constant, so the
    combinatorics are bit-exact for any state the library handles.
    """
    reaction = net.reactions[r]
    prod = 1
    for xi, ci in zip(x, reaction.c_in):
        if ci:
            if xi < ci:
                return 0.0
            prod *= falling_factorial(int(xi), ci)
    return reaction.kappa * prod


def propensities(net: Network, x: Sequence[int]) -> np.ndarray:
    """All reaction propensities at ``x`` as a float vector."""
    return np.array(
        [propensity(net, r, x) for r in range(net.n_reactions)], dtype=np.float64
    )


def mass_action_rate(net: Network, r: int, x: Sequence[float]) -> float:
    """Deterministic monomial rate kappa * prod x_i^(c_in)_i, with 0^0 = 1."""
    reaction = net.reactions[r]
    rate = reaction.kappa
    for xi, ci in zip(x, reaction.c_in):
        if ci:
            rate *= float(xi) ** ci
    return rate


def reaction_vector(net: Network, r: int) -> np.ndarray:
    """Net state change of reaction ``r`` as an int vector."""
    return np.array(net.reactions[r].vector, dtype=np.int64)


def apply_generator(
    net: Network, f: Callable[[np.ndarray], float], x: Sequence[int]
) -> float:
    """Apply the jump-process generator to ``f`` at state ``x``.

    Returns ``sum_r rate_r(x) * (f(x + v_r) - f(x))``.  Terms with zero
    propensity are skipped, so ``f`` is never evaluated at states that the
    process cannot reach in one jump (in particular never at negative
    coordinates).
    """
    x_arr = np.asarray(x, dtype=np.int64)
    total = 0.0
    fx = None
    for r in range(net.n_reactions):
        rate = propensity(net, r, x_arr)
        if rate == 0.0:
            continue
        if fx is None:
            fx = float(f(x_arr))
        y = x_arr + reaction_vector(net, r)
        total += rate * (float(f(y)) - fx)
    return total


def propensity_grid(net: Network, r: int, states: np.ndarray) -> np.ndarray:
    """Vectorized propensity of reaction ``r`` over an (n, d) array of states.

    Float arithmetic; exact below 2^53, which covers every state the sweeps
    visit.
    """
    states = np.asarray(states, dtype=np.float64)
    reaction = net.reactions[r]
    out = np.full(states.shape[0], reaction.kappa, dtype=np.float64)
    for i, ci in enumerate(reaction.c_in):
        if not ci:
            continue
        col = states[:, i]
        fact = np.ones_like(col)
        for j in range(ci):
            fact *= col - j
        out *= np.where(col >= ci, fact, 0.0)
    return out
