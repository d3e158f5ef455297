"""Generators for adversarial constructions and baseline algorithms.

The worst-case constructions share a shape: a single hidden "special" input
is mapped to a special allocation, every other input to a canonical default,
and the feasibility set is the downward closure of the named allocations
(plus, for the hidden-allocation construction, "fake" maximal allocations
that make unsuccessful membership probes uninformative). The baselines
(all-ones, knapsack, seeded random) serve as panels for positive
verification sweeps.

All randomness flows through `stable_rng`, so identical parameters and seed
reproduce identical algorithms bit for bit, across runs and platforms.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .blackbox import Algorithm, CaseTable
from .errors import ParameterError
from .model import (
    Allocation,
    Environment,
    FeasibilitySet,
    Rational,
    ScaledWelfare,
    ValueLadder,
    ValuationVector,
    all_inputs,
    normalize_antichain,
)

DEFAULT_LADDER = ValueLadder.of(1, 2)

GENERATOR_NAMES = ("thm1", "block", "hamming", "all-ones", "knapsack", "random")

POLICY_GREEDY = "greedy-by-value-density"
POLICY_OPTIMAL = "brute-force-optimal"


def stable_rng(*parts) -> random.Random:
    """Seeded RNG whose stream depends only on the stringified parts.

    String seeding hashes via SHA-512, so the stream is stable across
    platforms, processes, and interpreter versions.
    """
    return random.Random(":".join(str(p) for p in parts))


@dataclass(frozen=True)
class Thm1Instance:
    """Hidden-special-allocation construction at n = 4m (m even).

    Before permutation, the special input is high everywhere except the last
    m positions; its special allocation has m+1 randomized 1s in the first
    2m positions, zeros in the middle m, and 1s in the last m. Every other
    input maps to the default allocation (1s exactly on the last 2m
    positions). Fake maximal allocations with m/2 - 1 ones in the first 2m
    positions and 1s in the last m keep unsuccessful membership probes
    uninformative. The last 3m/2 positions are then permuted; both
    coordinate frames are stored so block structure can be asserted in
    canonical coordinates.
    """

    m: int
    seed: int
    permutation: tuple[int, ...]  # permutation[i] = image of index i
    special_input_pre: ValuationVector
    special_allocation_pre: Allocation
    default_allocation_pre: Allocation
    fakes_pre: tuple[Allocation, ...]
    special_input: ValuationVector
    special_allocation: Allocation
    default_allocation: Allocation
    fakes: tuple[Allocation, ...]
    environment: Environment
    algorithm: Algorithm

    @property
    def n(self) -> int:
        return 4 * self.m

    @property
    def feasibility(self) -> FeasibilitySet:
        return self.environment.feasibility


def gen_thm1(m: int, seed: int, ladder: ValueLadder = DEFAULT_LADDER) -> Thm1Instance:
    if m < 2 or m % 2:
        raise ParameterError("m must be an even integer >= 2")
    if ladder.k != 2:
        raise ParameterError("this construction uses a two-value ladder")
    n = 4 * m
    rng = stable_rng("thm1", m, seed)
    one_positions = sorted(rng.sample(range(2 * m), m + 1))
    moved = list(range(n - 3 * m // 2, n))
    images = rng.sample(moved, len(moved))
    permutation = list(range(n))
    for src, dst in zip(moved, images):
        permutation[src] = dst

    def permute(seq):
        out = [None] * n
        for i, value in enumerate(seq):
            out[permutation[i]] = value
        return tuple(out)

    special_input_pre = ValuationVector((1,) * (3 * m) + (0,) * m)
    c_bits = [0] * n
    for i in one_positions:
        c_bits[i] = 1
    for i in range(3 * m, n):
        c_bits[i] = 1
    special_allocation_pre = Allocation(tuple(c_bits))
    default_pre = Allocation((0,) * (2 * m) + (1,) * (2 * m))
    fakes_pre = []
    for combo in itertools.combinations(range(2 * m), m // 2 - 1):
        bits = [0] * n
        for i in combo:
            bits[i] = 1
        for i in range(3 * m, n):
            bits[i] = 1
        fakes_pre.append(Allocation(tuple(bits)))

    special_input = ValuationVector(permute(special_input_pre.levels))
    special_allocation = Allocation(permute(special_allocation_pre.bits))
    default_allocation = Allocation(permute(default_pre.bits))
    fakes = tuple(Allocation(permute(f.bits)) for f in fakes_pre)

    feasibility = normalize_antichain([special_allocation, default_allocation, *fakes], n)
    environment = Environment(n, ladder, feasibility)
    special_levels = special_input.levels

    def rule(v: ValuationVector) -> Allocation:
        return special_allocation if v.levels == special_levels else default_allocation

    table = CaseTable(n, ((special_input, special_allocation),), default_allocation)
    algorithm = Algorithm(environment, rule, name=f"thm1(m={m},seed={seed})", table=table)
    return Thm1Instance(
        m=m,
        seed=seed,
        permutation=tuple(permutation),
        special_input_pre=special_input_pre,
        special_allocation_pre=special_allocation_pre,
        default_allocation_pre=default_pre,
        fakes_pre=tuple(fakes_pre),
        special_input=special_input,
        special_allocation=special_allocation,
        default_allocation=default_allocation,
        fakes=fakes,
        environment=environment,
        algorithm=algorithm,
    )


@dataclass(frozen=True)
class BlockAdversaryInstance:
    """Three-block construction with a forcing chain.

    The input splits into a leading high block of length L1 - L2, a middle
    block of length L2, and a trailing block of length L3 (so n = L1 + L3).
    The special input is low exactly on the middle block; its special
    allocation hides `ones_count` 1s at chosen middle positions, while every
    other input maps to the default allocation covering the trailing block.
    The chain B_1..B_t raises the chosen positions to high one at a time,
    always leaving at least one chosen position low.
    """

    lengths: tuple[int, int, int]  # (L1, L2, L3)
    ones_count: int
    seed: int | None
    chosen_positions: tuple[int, ...]
    special_input: ValuationVector
    special_allocation: Allocation
    default_allocation: Allocation
    chain: tuple[ValuationVector, ...]
    environment: Environment
    algorithm: Algorithm

    @property
    def n(self) -> int:
        return self.lengths[0] + self.lengths[2]

    @property
    def feasibility(self) -> FeasibilitySet:
        return self.environment.feasibility


def gen_block_adversary(
    L1: int,
    L2: int,
    L3: int,
    ones_count: int,
    *,
    seed: int | None = None,
    positions=None,
    ladder: ValueLadder = DEFAULT_LADDER,
) -> BlockAdversaryInstance:
    if not (L1 > L2 > ones_count > L3 >= 1):
        raise ParameterError(
            f"block parameters must satisfy L1 > L2 > ones_count > L3 >= 1, "
            f"got L1={L1}, L2={L2}, ones_count={ones_count}, L3={L3}"
        )
    if ladder.k != 2:
        raise ParameterError("this construction uses a two-value ladder")
    n = L1 + L3
    offset = L1 - L2
    if positions is not None:
        chosen = tuple(sorted(int(p) for p in positions))
        if len(set(chosen)) != ones_count:
            raise ParameterError(f"need {ones_count} distinct positions, got {positions!r}")
        if any(not offset <= p < L1 for p in chosen):
            raise ParameterError(f"positions must lie in the middle block [{offset}, {L1})")
    else:
        if seed is None:
            raise ParameterError("provide a seed or explicit middle-block positions")
        rng = stable_rng("block", L1, L2, L3, ones_count, seed)
        chosen = tuple(sorted(rng.sample(range(offset, L1), ones_count)))

    base_levels = (1,) * offset + (0,) * L2 + (1,) * L3
    special_input = ValuationVector(base_levels)
    c_bits = [0] * n
    for p in chosen:
        c_bits[p] = 1
    special_allocation = Allocation(tuple(c_bits))
    default_allocation = Allocation((0,) * L1 + (1,) * L3)

    chain = [special_input]
    levels = list(base_levels)
    for p in chosen[: ones_count - 1]:  # keep at least one chosen position low
        levels[p] = 1
        chain.append(ValuationVector(tuple(levels)))

    feasibility = normalize_antichain([special_allocation, default_allocation], n)
    environment = Environment(n, ladder, feasibility)
    special_levels = special_input.levels

    def rule(v: ValuationVector) -> Allocation:
        return special_allocation if v.levels == special_levels else default_allocation

    table = CaseTable(n, ((special_input, special_allocation),), default_allocation)
    algorithm = Algorithm(
        environment, rule, name=f"block(L1={L1},L2={L2},L3={L3},ones={ones_count})", table=table
    )
    return BlockAdversaryInstance(
        lengths=(L1, L2, L3),
        ones_count=ones_count,
        seed=seed if positions is None else None,
        chosen_positions=chosen,
        special_input=special_input,
        special_allocation=special_allocation,
        default_allocation=default_allocation,
        chain=tuple(chain),
        environment=environment,
        algorithm=algorithm,
    )


@dataclass(frozen=True)
class HammingAdversaryInstance:
    """Threshold construction defeating distance-restricted transformations.

    At n = 2m, inputs with at most m + f high values map to the allocation
    covering the second half; everything else maps to the first half. The
    worst approximation ratio, low/high exactly, is attained at the input
    that is high on the first half and low on the second.
    """

    m: int
    f: int
    threshold: int
    low_side_allocation: Allocation  # 1s on the second half
    high_side_allocation: Allocation  # 1s on the first half
    environment: Environment
    algorithm: Algorithm

    @property
    def n(self) -> int:
        return 2 * self.m

    @property
    def feasibility(self) -> FeasibilitySet:
        return self.environment.feasibility


def gen_hamming_adversary(
    m: int, f_value: int, ladder: ValueLadder = DEFAULT_LADDER
) -> HammingAdversaryInstance:
    if m < 1:
        raise ParameterError("m must be >= 1")
    if not 0 <= f_value <= m:
        raise ParameterError(f"f must lie in [0, m], got f={f_value} with m={m}")
    if ladder.k != 2:
        raise ParameterError("this construction uses a two-value ladder")
    n = 2 * m
    threshold = m + f_value
    second_half = Allocation((0,) * m + (1,) * m)
    first_half = Allocation((1,) * m + (0,) * m)

    def rule(v: ValuationVector) -> Allocation:
        return second_half if sum(v.levels) <= threshold else first_half

    table = None
    if 2**n <= 65536:
        cases = tuple(
            (v, first_half) for v in all_inputs(n, 2) if sum(v.levels) > threshold
        )
        table = CaseTable(n, cases, second_half)
    feasibility = normalize_antichain([second_half, first_half], n)
    environment = Environment(n, ladder, feasibility)
    algorithm = Algorithm(environment, rule, name=f"hamming(m={m},f={f_value})", table=table)
    return HammingAdversaryInstance(
        m=m,
        f=f_value,
        threshold=threshold,
        low_side_allocation=second_half,
        high_side_allocation=first_half,
        environment=environment,
        algorithm=algorithm,
    )


def gen_all_ones(n: int, ladder: ValueLadder = DEFAULT_LADDER) -> Algorithm:
    """The constant algorithm allocating to everyone; feasibility is the full cube."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    everyone = Allocation.full(n)
    environment = Environment(n, ladder, FeasibilitySet(n, frozenset({everyone})))
    table = CaseTable(n, (), everyone)
    return Algorithm(environment, lambda v: everyone, name="all-ones", table=table)


def gen_knapsack(
    weights,
    capacity: Rational,
    policy: str = POLICY_GREEDY,
    ladder: ValueLadder = DEFAULT_LADDER,
) -> Algorithm:
    """Knapsack environment: public sizes, public capacity, private values.

    Feasible allocations are the subsets fitting the capacity; the stored
    antichain holds the maximal fitting subsets. Policies:

    - greedy-by-value-density: scan agents by declared value / weight
      (descending, ties by agent index) and take whatever still fits.
    - brute-force-optimal: welfare-maximizing allocation, which lies at a
      maximal subset because values are positive; welfare ties break toward
      the lexicographically largest bit string (lower agent indices win).
    """
    weights = tuple(Fraction(w) for w in weights)
    if any(w <= 0 for w in weights):
        raise ParameterError("weights must be strictly positive")
    capacity = Fraction(capacity)
    if capacity < 0:
        raise ParameterError("capacity must be nonnegative")
    n = len(weights)
    if not 1 <= n <= 16:
        raise ParameterError("knapsack generator supports 1 <= n <= 16 (explicit antichain)")
    if policy not in (POLICY_GREEDY, POLICY_OPTIMAL):
        raise ParameterError(f"unknown policy {policy!r}")

    maximal = []
    for mask in range(2**n):
        members = [i for i in range(n) if mask >> i & 1]
        total = sum(weights[i] for i in members)
        if total > capacity:
            continue
        if any(mask >> i & 1 == 0 and total + weights[i] <= capacity for i in range(n)):
            continue
        maximal.append(Allocation(tuple(mask >> i & 1 for i in range(n))))
    feasibility = FeasibilitySet(n, frozenset(maximal))
    environment = Environment(n, ladder, feasibility)

    if policy == POLICY_GREEDY:
        values = ladder.values

        def rule(v: ValuationVector) -> Allocation:
            order = sorted(range(n), key=lambda i: (-(values[v.levels[i]] / weights[i]), i))
            remaining = capacity
            bits = [0] * n
            for i in order:
                if weights[i] <= remaining:
                    bits[i] = 1
                    remaining -= weights[i]
            return Allocation(tuple(bits))

        name = "knapsack-greedy"
    else:
        scaled = ScaledWelfare(ladder)
        candidates = [(a, a.bits) for a in sorted(maximal, key=lambda a: a.bits)]

        def rule(v: ValuationVector) -> Allocation:
            levels = v.levels
            best = None
            best_key = None
            for a, bits in candidates:
                key = (scaled.of(levels, bits), bits)
                if best_key is None or key > best_key:
                    best, best_key = a, key
            return best if best is not None else Allocation.zeros(n)

        name = "knapsack-optimal"
    return Algorithm(environment, rule, name=name)


def gen_random_algorithm(env: Environment, seed: int) -> Algorithm:
    """Deterministic pseudorandom rule for fuzzing sweeps.

    Per input, a seeded choice picks one maximal allocation and keeps each
    of its 1s with probability 3/4; the whole map is reproducible from the
    seed and every output is feasible by construction.
    """
    maximal = env.feasibility.sorted_maximal()
    n = env.n

    def rule(v: ValuationVector) -> Allocation:
        if not maximal:
            return Allocation.zeros(n)
        rng = stable_rng("random-alg", seed, v.levels)
        base = maximal[rng.randrange(len(maximal))]
        bits = tuple(1 if b and rng.random() < 0.75 else 0 for b in base.bits)
        return Allocation(bits)

    return Algorithm(env, rule, name=f"random-{seed}")


def gen_random_environment(n: int, ladder: ValueLadder, seed: int) -> Environment:
    """Random downward-closed environment: a few random nonzero maximal
    allocations, normalized to an antichain. Reproducible from the seed."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = stable_rng("random-env", seed, n)
    count = rng.randint(1, 5)
    picked = []
    while len(picked) < count:
        bits = tuple(rng.randint(0, 1) for _ in range(n))
        if any(bits):
            picked.append(Allocation(bits))
    return Environment(n, ladder, normalize_antichain(picked, n))
