"""Domain model for single-parameter downward-closed environments.

Private values are exact rationals. A feasibility set is stored as the
antichain of its maximal allocations; membership is domination testing
against that antichain, which makes the whole downward closure available
without enumerating it.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Iterator

from .errors import DimensionError, ParameterError

Rational = Fraction | int | str


@dataclass(frozen=True, slots=True)
class ValueLadder:
    """The ordered admissible private values a_1 < a_2 < ... < a_k.

    Two-value environments use k = 2 (low, high). Values are strictly
    positive exact rationals so that ratio thresholds such as high/low > n
    compare exactly.
    """

    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        vals = tuple(v if isinstance(v, Fraction) else Fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ParameterError("a value ladder needs at least two values")
        if vals[0] <= 0:
            raise ParameterError("ladder values must be strictly positive")
        for a, b in zip(vals, vals[1:]):
            if a >= b:
                raise ParameterError(
                    f"ladder values must be strictly increasing, got {a} before {b}"
                )

    @classmethod
    def of(cls, *values: Rational) -> "ValueLadder":
        return cls(tuple(Fraction(v) for v in values))

    @property
    def k(self) -> int:
        return len(self.values)

    @property
    def low(self) -> Fraction:
        return self.values[0]

    @property
    def high(self) -> Fraction:
        return self.values[-1]

    def value(self, level: int) -> Fraction:
        if not 0 <= level < len(self.values):
            raise ParameterError(f"level {level} outside ladder of {len(self.values)} values")
        return self.values[level]


@dataclass(frozen=True, slots=True)
class ValuationVector:
    """One input to an allocation rule: per-agent level indices into a ladder.

    Levels are trusted to be in range for the ladder in use; parsers and
    harness entry points validate untrusted data with `validate_levels`.
    """

    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.levels, tuple):
            object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def n(self) -> int:
        return len(self.levels)

    def with_level(self, agent: int, level: int) -> "ValuationVector":
        lv = list(self.levels)
        lv[agent] = level
        return ValuationVector(tuple(lv))

    def values(self, ladder: ValueLadder) -> tuple[Fraction, ...]:
        return tuple(ladder.values[lv] for lv in self.levels)


@dataclass(frozen=True, slots=True)
class Allocation:
    """A binary allocation: bit i says whether agent i receives its unit."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        bits = self.bits if isinstance(self.bits, tuple) else tuple(self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ParameterError("allocation bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def zeros(cls, n: int) -> "Allocation":
        return cls((0,) * n)

    @classmethod
    def full(cls, n: int) -> "Allocation":
        return cls((1,) * n)

    @classmethod
    def from_string(cls, text: str) -> "Allocation":
        if any(c not in "01" for c in text):
            raise ParameterError(f"allocation string must be over 0/1, got {text!r}")
        return cls(tuple(int(c) for c in text))

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def count(self) -> int:
        return sum(self.bits)

    def dominated_by(self, other: "Allocation") -> bool:
        """Coordinatewise self <= other."""
        if len(self.bits) != len(other.bits):
            raise DimensionError(
                f"cannot compare allocations of lengths {len(self.bits)} and {len(other.bits)}"
            )
        return all(a <= b for a, b in zip(self.bits, other.bits))


@dataclass(frozen=True)
class FeasibilitySet:
    """A downward-closed feasibility set, stored as its maximal antichain.

    An allocation is feasible iff some maximal element dominates it, so the
    all-zero allocation is feasible whenever the set is nonempty. The
    constructor rejects non-antichain inputs; use `normalize_antichain` to
    build one from an arbitrary collection.
    """

    n: int
    maximal: frozenset[Allocation]

    def __post_init__(self) -> None:
        maximal = self.maximal if isinstance(self.maximal, frozenset) else frozenset(self.maximal)
        object.__setattr__(self, "maximal", maximal)
        for a in maximal:
            if a.n != self.n:
                raise DimensionError(f"maximal allocation of length {a.n} in a set over n={self.n}")
        for a, b in itertools.combinations(maximal, 2):
            if a.dominated_by(b) or b.dominated_by(a):
                raise ParameterError(
                    f"maximal elements must form an antichain: {a.to_string()} vs {b.to_string()}"
                )

    def sorted_maximal(self) -> list[Allocation]:
        """Maximal elements in canonical (lexicographic bit) order."""
        return sorted(self.maximal, key=lambda a: a.bits)


@dataclass(frozen=True)
class Environment:
    """Agent count, value ladder, and feasibility set bundled together."""

    n: int
    ladder: ValueLadder
    feasibility: FeasibilitySet

    def __post_init__(self) -> None:
        if self.feasibility.n != self.n:
            raise DimensionError(
                f"feasibility set over {self.feasibility.n} agents in an environment with n={self.n}"
            )

    @property
    def k(self) -> int:
        return self.ladder.k

    def input_count(self) -> int:
        return self.ladder.k ** self.n

    def inputs(self) -> Iterator[ValuationVector]:
        return all_inputs(self.n, self.ladder.k)


def welfare(v: ValuationVector, x: Allocation, ladder: ValueLadder) -> Fraction:
    """Welfare of allocation x at input v: the dot product of values and bits."""
    if v.n != x.n:
        raise DimensionError(f"input of length {v.n} vs allocation of length {x.n}")
    vals = ladder.values
    total = Fraction(0)
    for lvl, bit in zip(v.levels, x.bits):
        if bit:
            total += vals[lvl]
    return total


def is_feasible(x: Allocation, feasibility: FeasibilitySet) -> bool:
    """Membership in the downward closure: x is dominated by a maximal element."""
    if x.n != feasibility.n:
        raise DimensionError(f"allocation of length {x.n} vs feasibility over n={feasibility.n}")
    return any(x.dominated_by(m) for m in feasibility.maximal)


def opt_welfare(v: ValuationVector, feasibility: FeasibilitySet, ladder: ValueLadder) -> Fraction:
    """Maximum welfare at v over the feasibility set.

    Because all ladder values are strictly positive, an optimum is attained
    at a maximal element, so scanning the antichain suffices. An empty set
    yields 0 with a warning (degenerate inputs must not crash sweeps).
    """
    if v.n != feasibility.n:
        raise DimensionError(f"input of length {v.n} vs feasibility over n={feasibility.n}")
    if not feasibility.maximal:
        warnings.warn("optimal welfare over an empty feasibility set is 0", stacklevel=2)
        return Fraction(0)
    return max(welfare(v, m, ladder) for m in feasibility.maximal)


def normalize_antichain(allocs: Iterable[Allocation], n: int | None = None) -> FeasibilitySet:
    """Drop dominated allocations; the downward closure is unchanged.

    The agent count is inferred from the allocations; pass `n` explicitly
    to build an empty set.
    """
    unique = list(dict.fromkeys(allocs))
    if not unique:
        if n is None:
            raise ParameterError("cannot infer the agent count from an empty collection")
        return FeasibilitySet(n, frozenset())
    length = unique[0].n
    if n is not None and n != length:
        raise DimensionError(f"allocations of length {length} but n={n} requested")
    for a in unique:
        if a.n != length:
            raise DimensionError("allocations must all have the same length")
    keep = [
        a
        for a in unique
        if not any(a is not b and a != b and a.dominated_by(b) for b in unique)
    ]
    return FeasibilitySet(length, frozenset(keep))


def all_inputs(n: int, k: int) -> Iterator[ValuationVector]:
    """Every input in lexicographic order over level tuples."""
    for levels in itertools.product(range(k), repeat=n):
        yield ValuationVector(levels)


def validate_levels(v: ValuationVector, ladder: ValueLadder) -> None:
    """Reject level indices outside [0, k); used at parse/CLI boundaries."""
    for lvl in v.levels:
        if not 0 <= lvl < ladder.k:
            raise ParameterError(f"level {lvl} outside ladder of {ladder.k} values")


class ScaledWelfare:
    """Integer-scaled welfare evaluation for enumeration-heavy loops.

    Multiplies every ladder value by the common denominator so that welfare
    sums are plain integers; ratios of scaled welfares equal ratios of the
    exact values because the scale cancels.
    """

    def __init__(self, ladder: ValueLadder):
        self.denominator = lcm(*(v.denominator for v in ladder.values))
        self.weights = tuple(int(v * self.denominator) for v in ladder.values)

    def of(self, levels: tuple[int, ...], bits: tuple[int, ...]) -> int:
        w = self.weights
        return sum(w[lvl] for lvl, bit in zip(levels, bits) if bit)

    def fraction(self, scaled: int) -> Fraction:
        return Fraction(scaled, self.denominator)
