"""Verification engine: monotonicity, welfare preservation, approximation
ratios, and critical-value payments.

All metrics are exact; enumeration is exhaustive up to a configurable bound
on rule evaluations, and falls back to seeded sampling above it (counts are
reported as observed, with no statistical extrapolation). Reports merge
deterministically: violations are sorted canonically before emission.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from .model import (
    Allocation,
    Environment,
    ScaledWelfare,
    ValueLadder,
    ValuationVector,
    all_inputs,
)

DEFAULT_ENUM_BOUND = 2_000_000

AllocationRule = Callable[[ValuationVector], Allocation]


class CachedRule:
    """Memoizes a deterministic allocation rule; single-worker use."""

    def __init__(self, rule: AllocationRule):
        self.rule = rule
        self.cache: dict[tuple[int, ...], Allocation] = {}

    def __call__(self, v: ValuationVector) -> Allocation:
        x = self.cache.get(v.levels)
        if x is None:
            x = self.rule(v)
            self.cache[v.levels] = x
        return x


def _sampled_inputs(n: int, k: int, count: int, rng: random.Random) -> Iterator[ValuationVector]:
    for _ in range(count):
        yield ValuationVector(tuple(rng.randrange(k) for _ in range(n)))


@dataclass(frozen=True)
class MonotonicityViolation:
    """One failed level raise: the agent held a 1 at the lower level and a 0
    at the higher level, all other coordinates equal."""

    input: ValuationVector  # the input carrying the lower level
    agent: int
    level_low: int
    level_high: int
    bit_low: int = 1
    bit_high: int = 0

    def sort_key(self):
        return (self.input.levels, self.agent, self.level_low, self.level_high)


@dataclass
class MonotonicityReport:
    violations: list[MonotonicityViolation]
    checked_pairs: int
    evaluations: int
    sampled: bool = False
    seed: int | None = None

    @property
    def is_monotone(self) -> bool:
        return not self.violations


def check_monotone(
    rule: AllocationRule,
    env: Environment,
    *,
    enum_bound: int = DEFAULT_ENUM_BOUND,
    seed: int = 0,
) -> MonotonicityReport:
    """Check every single-agent level raise j -> j' with j < j' (all pairs,
    not only adjacent levels).

    Exhaustive while k^n stays within the enumeration bound; above it,
    seeded sampling of random raise pairs with the report flagged as
    sampled.
    """
    k, n = env.ladder.k, env.n
    total = k**n
    violations: list[MonotonicityViolation] = []
    if total <= enum_bound:
        table: dict[tuple[int, ...], Allocation] = {}
        for v in all_inputs(n, k):
            table[v.levels] = rule(v)
        checked = 0
        for levels, x in table.items():
            for i, lvl in enumerate(levels):
                if lvl == k - 1:
                    continue
                bit_low = x.bits[i]
                for hi in range(lvl + 1, k):
                    checked += 1
                    if bit_low == 1:
                        raised = table[levels[:i] + (hi,) + levels[i + 1 :]]
                        if raised.bits[i] == 0:
                            violations.append(
                                MonotonicityViolation(ValuationVector(levels), i, lvl, hi)
                            )
        violations.sort(key=MonotonicityViolation.sort_key)
        return MonotonicityReport(violations, checked, total)
    rng = random.Random(seed)
    pairs = max(1, enum_bound // 2)
    evaluations = 0
    for _ in range(pairs):
        levels = tuple(rng.randrange(k) for _ in range(n))
        i = rng.randrange(n)
        lo = rng.randrange(k - 1)
        hi = rng.randrange(lo + 1, k)
        base = levels[:i] + (lo,) + levels[i + 1 :]
        raised = levels[:i] + (hi,) + levels[i + 1 :]
        x = rule(ValuationVector(base))
        y = rule(ValuationVector(raised))
        evaluations += 2
        if x.bits[i] == 1 and y.bits[i] == 0:
            violations.append(MonotonicityViolation(ValuationVector(base), i, lo, hi))
    violations.sort(key=MonotonicityViolation.sort_key)
    return MonotonicityReport(violations, pairs, evaluations, sampled=True, seed=seed)


@dataclass
class WelfareReport:
    """Welfare comparison of a rule against the original algorithm.

    `pointwise_min_fraction` is the minimum of rule welfare / original
    welfare over inputs where the original welfare is positive; inputs with
    zero original welfare are excluded from the minimum and counted in
    `zero_original_count`. `full_welfare_count` counts inputs where the rule
    is at least as good as the original. The sum fields compare expected
    welfare under the uniform input distribution (the uniform weight scales
    both sides equally). Approximation ratios are None when every input has
    zero optimal welfare.
    """

    pointwise_min_fraction: Fraction | None
    full_welfare_count: int
    total_inputs: int
    zero_original_count: int
    sum_welfare_rule: Fraction
    sum_welfare_original: Fraction
    approx_ratio_rule: Fraction | None
    approx_ratio_original: Fraction | None
    opt_zero_count: int
    sampled: bool = False
    seed: int | None = None


class _MinRatio:
    """Running exact minimum of nonnegative fractions num/den (den > 0)."""

    def __init__(self) -> None:
        self.num: int | None = None
        self.den: int | None = None

    def offer(self, num: int, den: int) -> None:
        if self.num is None or num * self.den < self.num * den:
            self.num, self.den = num, den

    def value(self) -> Fraction | None:
        if self.num is None:
            return None
        return Fraction(self.num, self.den)


def welfare_report(
    rule: AllocationRule,
    original: AllocationRule,
    env: Environment,
    *,
    enum_bound: int = DEFAULT_ENUM_BOUND,
    seed: int = 0,
) -> WelfareReport:
    """Enumerate all inputs (or a seeded sample above the bound) and compare
    rule welfare against original welfare and against the optimum."""
    k, n = env.ladder.k, env.n
    scaled = ScaledWelfare(env.ladder)
    maximal_bits = [m.bits for m in env.feasibility.sorted_maximal()]
    total = k**n
    sampled = total > enum_bound
    if sampled:
        count = max(1, enum_bound // 2)
        inputs: Iterable[ValuationVector] = _sampled_inputs(n, k, count, random.Random(seed))
    else:
        count = total
        inputs = all_inputs(n, k)

    full = 0
    zero_original = 0
    opt_zero = 0
    sum_rule = 0
    sum_original = 0
    min_fraction = _MinRatio()
    min_ratio_rule = _MinRatio()
    min_ratio_original = _MinRatio()
    for v in inputs:
        levels = v.levels
        w_rule = scaled.of(levels, rule(v).bits)
        w_orig = scaled.of(levels, original(v).bits)
        sum_rule += w_rule
        sum_original += w_orig
        if w_rule >= w_orig:
            full += 1
        if w_orig == 0:
            zero_original += 1
        else:
            min_fraction.offer(w_rule, w_orig)
        opt = max((scaled.of(levels, mb) for mb in maximal_bits), default=0)
        if opt == 0:
            opt_zero += 1
        else:
            min_ratio_rule.offer(w_rule, opt)
            min_ratio_original.offer(w_orig, opt)
    return WelfareReport(
        pointwise_min_fraction=min_fraction.value(),
        full_welfare_count=full,
        total_inputs=count,
        zero_original_count=zero_original,
        sum_welfare_rule=scaled.fraction(sum_rule),
        sum_welfare_original=scaled.fraction(sum_original),
        approx_ratio_rule=min_ratio_rule.value(),
        approx_ratio_original=min_ratio_original.value(),
        opt_zero_count=opt_zero,
        sampled=sampled,
        seed=seed if sampled else None,
    )


def approx_ratio(
    rule: AllocationRule,
    env: Environment,
    *,
    enum_bound: int = DEFAULT_ENUM_BOUND,
    seed: int = 0,
) -> Fraction | None:
    """Exact minimum over inputs of rule welfare / optimal welfare.

    Inputs with zero optimum are skipped; returns None if every optimum is
    zero. Above the enumeration bound the minimum is taken over a seeded
    sample and a warning is emitted (use welfare_report for a flagged
    record).
    """
    k, n = env.ladder.k, env.n
    scaled = ScaledWelfare(env.ladder)
    maximal_bits = [m.bits for m in env.feasibility.sorted_maximal()]
    total = k**n
    if total > enum_bound:
        warnings.warn(
            f"approx_ratio sampling {max(1, enum_bound)} of {total} inputs (seed={seed})",
            stacklevel=2,
        )
        inputs: Iterable[ValuationVector] = _sampled_inputs(
            n, k, max(1, enum_bound), random.Random(seed)
        )
    else:
        inputs = all_inputs(n, k)
    best = _MinRatio()
    for v in inputs:
        levels = v.levels
        opt = max((scaled.of(levels, mb) for mb in maximal_bits), default=0)
        if opt == 0:
            continue
        best.offer(scaled.of(levels, rule(v).bits), opt)
    return best.value()


def fraction_full_welfare(
    rule: AllocationRule,
    original: AllocationRule,
    env: Environment,
    *,
    enum_bound: int = DEFAULT_ENUM_BOUND,
    seed: int = 0,
) -> Fraction:
    """Fraction of inputs where the rule's welfare is at least the original's."""
    report = welfare_report(rule, original, env, enum_bound=enum_bound, seed=seed)
    return Fraction(report.full_welfare_count, report.total_inputs)


def myerson_payments(
    rule: AllocationRule, v: ValuationVector, ladder: ValueLadder
) -> list[Fraction]:
    """Critical-value payments at v: each winner pays the smallest ladder
    value it could have declared and still won; losers pay 0.

    For a monotone rule this is the unique payment rule making truth-telling
    optimal. The scan is well defined for any rule (the declared level
    always wins), but prices from a non-monotone rule carry no truthfulness
    guarantee; callers wanting a guarantee must check monotonicity first.
    """
    x = rule(v)
    payments: list[Fraction] = []
    for agent, bit in enumerate(x.bits):
        if not bit:
            payments.append(Fraction(0))
            continue
        critical = v.levels[agent]
        for level in range(v.levels[agent]):
            if rule(v.with_level(agent, level)).bits[agent] == 1:
                critical = level
                break
        payments.append(ladder.value(critical))
    return payments
