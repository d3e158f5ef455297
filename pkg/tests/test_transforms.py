"""Transformations: classification, step traces, locality, determinism."""

import pytest

from dcbox import (
    Allocation,
    Environment,
    FeasibilitySet,
    InstrumentedBlackBox,
    ParameterError,
    ProvisionalState,
    Transformation,
    TransformedRule,
    ValueLadder,
    ValuationVector,
    classify_allocation,
    gen_all_ones,
    gen_random_algorithm,
    gen_random_environment,
    hamming_distance,
    higher_than,
    inputs_at_distance,
    is_feasible,
    t_const,
    t_multi,
    t_two,
    t_two_plus,
)
from dcbox.blackbox import Algorithm

LAD2 = ValueLadder.of(1, 100)
LAD3 = ValueLadder.of(1, 10, 100)


def bits(text):
    return Allocation.from_string(text)


def vec(*levels):
    return ValuationVector(tuple(levels))


def constant_algorithm(n, allocation, maximal, ladder=LAD2, name="const-alg"):
    feas = FeasibilitySet(n, frozenset(maximal))
    env = Environment(n, ladder, feas)
    return Algorithm(env, lambda v: allocation, name=name)


class TestScanOrder:
    def test_distance_one_flips_positions_in_order(self):
        got = [u.levels for u in inputs_at_distance(vec(0, 0, 0), 1, 2)]
        assert got == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]

    def test_distance_two_pairs_lexicographic(self):
        got = [u.levels for u in inputs_at_distance(vec(0, 0, 0), 2, 2)]
        assert got == [(1, 1, 0), (1, 0, 1), (0, 1, 1)]

    def test_multilevel_replacements_ascend(self):
        got = [u.levels for u in inputs_at_distance(vec(1, 1), 1, 3)]
        assert got == [(0, 1), (2, 1), (1, 0), (1, 2)]

    def test_exact_distance(self):
        v = vec(0, 1, 2, 0)
        for d in (1, 2, 3):
            for u in inputs_at_distance(v, d, 3):
                assert hamming_distance(u, v) == d


class TestClassification:
    def test_high_class_wins(self):
        assert classify_allocation(bits("11"), vec(1, 0)) == 1

    def test_empty_allocation(self):
        assert classify_allocation(bits("000"), vec(1, 0, 1)) is None

    def test_mid_class(self):
        # highest level under a 1 is the middle one
        assert classify_allocation(bits("011"), vec(2, 1, 0), LAD3) == 1

    def test_higher_than_more_on_high(self):
        assert higher_than(bits("110"), bits("100"), vec(1, 1, 0), LAD2)

    def test_higher_than_irreflexive(self):
        assert not higher_than(bits("101"), bits("101"), vec(1, 1, 0), LAD2)

    def test_higher_than_lexicographic(self):
        # counts (h:1, m:0, l:1) vs (h:1, m:1, l:0): equal on high, fewer mid
        assert not higher_than(bits("101"), bits("110"), vec(2, 1, 0), LAD3)
        assert higher_than(bits("110"), bits("101"), vec(2, 1, 0), LAD3)


class TestTConst:
    def test_constant_behavior(self):
        alg = gen_all_ones(4, LAD2)
        bb = InstrumentedBlackBox(alg)
        assert t_const(bb, vec(1, 1, 1, 1)) == bits("1111")

    def test_output_ignores_input(self):
        # A(llll) = 0011; t_const returns it even at the all-high input
        low_answer = bits("0011")
        alg = constant_algorithm(4, low_answer, {low_answer})
        bb = InstrumentedBlackBox(alg)
        assert t_const(bb, vec(1, 1, 1, 1)) == low_answer

    def test_single_query_at_all_lowest(self):
        alg = gen_all_ones(3, LAD2)
        bb = InstrumentedBlackBox(alg)
        t_const(bb, vec(1, 0, 1))
        assert len(bb.log) == 1
        assert bb.log[0][0] == vec(0, 0, 0)


class TestTTwo:
    def test_all_ones_keeps_extremes_only(self):
        alg = gen_all_ones(3, LAD2)
        rule = TransformedRule("two", alg)
        full = {v.levels for v in alg.env.inputs() if rule(v) == bits("111")}
        assert full == {(1, 1, 1), (0, 0, 0)}

    def test_zeroes_lows_when_high_present(self):
        alg = gen_all_ones(2, LAD2)
        bb = InstrumentedBlackBox(alg)
        assert t_two(bb, vec(1, 0)) == bits("10")

    def test_pass_through_when_no_candidate(self):
        # A constant at (0,1) never yields a 1 on the high position of (h,l)
        alg = constant_algorithm(2, bits("01"), {bits("01"), bits("10")})
        bb = InstrumentedBlackBox(alg)
        assert t_two(bb, vec(1, 0)) == bits("01")

    def test_adopts_neighbor_allocation(self):
        # high answer only at (h,h); at (h,l) step 2 adopts it and zeroes lows
        def rule(v):
            return bits("11") if v.levels == (1, 1) else bits("01")

        feas = FeasibilitySet(2, frozenset({bits("11")}))
        alg = Algorithm(Environment(2, LAD2, feas), rule)
        bb = InstrumentedBlackBox(alg)
        assert t_two(bb, vec(1, 0)) == bits("10")

    def test_queries_stay_within_distance_two(self):
        for seed in range(5):
            env = gen_random_environment(5, LAD2, seed)
            alg = gen_random_algorithm(env, seed + 30)
            for v in env.inputs():
                bb = InstrumentedBlackBox(alg)
                t_two(bb, v)
                assert bb.max_radius_from(v) <= 2

    def test_rejects_wider_ladders(self):
        alg = gen_all_ones(2, LAD3)
        with pytest.raises(ParameterError):
            t_two(InstrumentedBlackBox(alg), vec(0, 0))

    def test_deterministic_logs(self):
        env = gen_random_environment(4, LAD2, 7)
        alg = gen_random_algorithm(env, 77)
        for v in env.inputs():
            first = InstrumentedBlackBox(alg)
            second = InstrumentedBlackBox(alg)
            assert t_two(first, v) == t_two(second, v)
            assert first.log == second.log


class TestTTwoPlus:
    def test_all_high_input_unchanged(self):
        alg = gen_all_ones(3, LAD2)
        bb = InstrumentedBlackBox(alg)
        assert t_two_plus(bb, vec(1, 1, 1)) == bits("111")

    def test_keeps_low_when_no_conflict(self):
        # contrast with t_two: the raised neighbor's provisional allocation
        # keeps the bit, so the low position is not zeroed
        alg = gen_all_ones(2, LAD2)
        bb = InstrumentedBlackBox(alg)
        assert t_two_plus(bb, vec(1, 0)) == bits("11")

    def test_all_ones_preserves_everything(self):
        alg = gen_all_ones(4, LAD2)
        rule = TransformedRule("two-plus", alg)
        for v in alg.env.inputs():
            assert rule(v) == bits("1111")

    def test_shared_and_fresh_state_agree(self):
        env = gen_random_environment(4, LAD2, 11)
        alg = gen_random_algorithm(env, 111)
        shared = TransformedRule("two-plus", alg, shared_state=True)
        fresh = TransformedRule("two-plus", alg, shared_state=False)
        for v in env.inputs():
            assert shared(v) == fresh(v)

    def test_memo_is_stable(self):
        env = gen_random_environment(4, LAD2, 13)
        alg = gen_random_algorithm(env, 131)
        state = ProvisionalState()
        v = vec(1, 0, 1, 0)
        first = t_two_plus(InstrumentedBlackBox(alg), v, state)
        again = t_two_plus(InstrumentedBlackBox(alg), v, state)
        assert first == again
        assert state.stage[v.levels] in {"original", "upgraded", "zeroed"}

    def test_queries_stay_within_distance_five(self):
        for seed in range(4):
            env = gen_random_environment(4, LAD2, seed + 20)
            alg = gen_random_algorithm(env, seed + 40)
            for v in env.inputs():
                bb = InstrumentedBlackBox(alg)
                t_two_plus(bb, v)
                assert bb.max_radius_from(v) <= 5

    def test_rejects_wider_ladders(self):
        alg = gen_all_ones(2, LAD3)
        with pytest.raises(ParameterError):
            t_two_plus(InstrumentedBlackBox(alg), vec(0, 0))


class TestTMulti:
    def test_zeroes_below_top_class(self):
        alg = gen_all_ones(3, LAD3)
        bb = InstrumentedBlackBox(alg)
        assert t_multi(bb, vec(2, 1, 0)) == bits("100")

    def test_all_low_input_untouched(self):
        alg = gen_all_ones(3, LAD3)
        bb = InstrumentedBlackBox(alg)
        assert t_multi(bb, vec(0, 0, 0)) == bits("111")

    def test_upgrades_to_high_class(self):
        # (2,2,0) at distance 1 answers with a high-class allocation; the
        # class-raising first step adopts it and the lows are zeroed
        def rule(v):
            if sum(v.levels) >= 4:
                return bits("100")
            return bits("001")

        feas = FeasibilitySet(3, frozenset({bits("101")}))
        alg = Algorithm(Environment(3, LAD3, feas), rule)
        out = t_multi(InstrumentedBlackBox(alg), vec(2, 0, 0))
        assert out == bits("100")

    def test_four_value_ladder(self):
        lad4 = ValueLadder.of(1, 10, 100, 1000)
        alg = gen_all_ones(4, lad4)
        bb = InstrumentedBlackBox(alg)
        assert t_multi(bb, vec(3, 2, 1, 0)) == bits("1000")

    def test_queries_stay_within_distance_five_for_three_values(self):
        for seed in range(3):
            env = gen_random_environment(4, LAD3, seed + 60)
            alg = gen_random_algorithm(env, seed + 90)
            for v in env.inputs():
                bb = InstrumentedBlackBox(alg)
                t_multi(bb, v)
                assert bb.max_radius_from(v) <= 5

    def test_rejects_two_value_ladders(self):
        alg = gen_all_ones(2, LAD2)
        with pytest.raises(ParameterError):
            t_multi(InstrumentedBlackBox(alg), vec(0, 0))


def _literal_two_plus(alg, v):
    """Independent oracle: eager, unmemoized reimplementation of the
    provisional transformation, recomputing every simulation from scratch."""

    def high_count(x, u):
        return sum(1 for lvl, b in zip(u.levels, x.bits) if b and lvl == 1)

    def zero_lows(x, u):
        return Allocation(tuple(b if lvl == 1 else 0 for b, lvl in zip(x.bits, u.levels)))

    def step1(u):
        x = alg(u)
        hc = high_count(x, u)
        if hc:
            for w in inputs_at_distance(u, 1, 2):
                c = alg(w)
                if high_count(c, u) > hc:
                    return c
        return x

    def steps_1_to_5(u):
        original = alg(u)
        cur = step1(u)
        if high_count(cur, u) == 0:
            for w in inputs_at_distance(u, 1, 2):
                c = step1(w)
                if high_count(c, u):
                    cur = c
                    break
        if high_count(cur, u) == 0:
            for w in inputs_at_distance(u, 2, 2):
                c = step1(w)
                if high_count(c, u):
                    cur = c
                    break
        if high_count(cur, u) > high_count(original, u):
            cur = zero_lows(cur, u)
        return cur

    cur = steps_1_to_5(v)
    result = list(cur.bits)
    for i, lvl in enumerate(v.levels):
        if lvl == 0 and result[i] == 1:
            if steps_1_to_5(v.with_level(i, 1)).bits[i] == 0:
                result[i] = 0
    return Allocation(tuple(result))


def _literal_multi3(alg, v):
    """Independent oracle for the three-value ladder: the five scans written
    out one by one, no caching, no scan skipping."""

    def classify(x, u):
        best = -1
        for lvl, b in zip(u.levels, x.bits):
            if b and lvl > best:
                best = lvl
        return max(best, 0)

    cur = alg(v)
    c0 = classify(cur, v)
    for u in inputs_at_distance(v, 1, 3):  # class increase
        if classify(alg(u), v) > c0:
            cur = alg(u)
            break
    if classify(cur, v) == 0:
        for u in inputs_at_distance(v, 2, 3):  # low -> mid
            if classify(alg(u), v) == 1:
                cur = alg(u)
                break
    if classify(cur, v) != 2:
        for u in inputs_at_distance(v, 3, 3):  # below-high -> high
            if classify(alg(u), v) == 2:
                cur = alg(u)
                break
    if classify(cur, v) == 1:
        for u in inputs_at_distance(v, 4, 3):  # mid -> high
            if classify(alg(u), v) == 2:
                cur = alg(u)
                break
    if classify(cur, v) == 0:
        for u in inputs_at_distance(v, 5, 3):  # low -> high
            if classify(alg(u), v) == 2:
                cur = alg(u)
                break
    cls = classify(cur, v)
    return Allocation(tuple(b if lvl >= cls else 0 for b, lvl in zip(cur.bits, v.levels)))


class TestLiteralOracles:
    def test_two_plus_matches_unmemoized_oracle(self):
        ladder = ValueLadder.of(1, 9)
        for seed in range(4):
            env = gen_random_environment(4, ladder, 5000 + seed)
            alg = gen_random_algorithm(env, 5100 + seed)
            rule = TransformedRule("two-plus", alg)
            for v in env.inputs():
                assert rule(v) == _literal_two_plus(alg, v)

    def test_multi_matches_unmemoized_oracle(self):
        ladder = ValueLadder.of(1, 5, 25)
        for seed in range(3):
            env = gen_random_environment(4, ladder, 6000 + seed)
            alg = gen_random_algorithm(env, 6100 + seed)
            rule = TransformedRule("multi", alg)
            for v in env.inputs():
                assert rule(v) == _literal_multi3(alg, v)


class TestFeasibilityInvariant:
    def test_output_is_subset_of_a_queried_allocation(self):
        # stronger than plain feasibility: the result never contains a 1
        # that no query returned at that position
        for seed in range(4):
            env = gen_random_environment(4, LAD2, seed + 1000)
            alg = gen_random_algorithm(env, seed + 1100)
            for v in env.inputs():
                for fn in (t_two, t_two_plus, t_const):
                    bb = InstrumentedBlackBox(alg)
                    out = fn(bb, v)
                    assert any(out.dominated_by(answer) for _, answer in bb.log)
        for seed in range(2):
            env = gen_random_environment(3, LAD3, seed + 1200)
            alg = gen_random_algorithm(env, seed + 1300)
            for v in env.inputs():
                bb = InstrumentedBlackBox(alg)
                out = t_multi(bb, v)
                assert any(out.dominated_by(answer) for _, answer in bb.log)

    # every transformation output is feasible in its environment
    def test_outputs_feasible_two_values(self):
        for seed in range(6):
            env = gen_random_environment(4, LAD2, seed + 500)
            alg = gen_random_algorithm(env, seed + 600)
            for kind in ("const", "two", "two-plus"):
                rule = TransformedRule(kind, alg, check_feasible=True)
                for v in env.inputs():
                    assert is_feasible(rule(v), env.feasibility)

    def test_outputs_feasible_three_values(self):
        for seed in range(4):
            env = gen_random_environment(3, LAD3, seed + 700)
            alg = gen_random_algorithm(env, seed + 800)
            rule = TransformedRule("multi", alg, check_feasible=True)
            for v in env.inputs():
                assert is_feasible(rule(v), env.feasibility)


class TestTransformedRule:
    def test_registry_rejects_unknown_kind(self):
        with pytest.raises(ParameterError):
            Transformation("frobnicate")
        with pytest.raises(ParameterError):
            TransformedRule("frobnicate", gen_all_ones(2, LAD2))

    def test_bind(self):
        alg = gen_all_ones(2, LAD2)
        rule = Transformation("two").bind(alg)
        assert rule(vec(1, 0)) == bits("10")

    def test_identity_kind(self):
        alg = gen_all_ones(2, LAD2)
        rule = TransformedRule("identity", alg)
        assert rule(vec(0, 1)) == bits("11")
        assert rule.max_queries == 1
        assert rule.max_radius == 0

    def test_radius_statistics(self):
        alg = gen_all_ones(4, LAD2)
        rule = TransformedRule("two", alg)
        for v in alg.env.inputs():
            rule(v)
        assert rule.max_radius <= 2

    def test_runs_under_radius_restriction(self):
        # t_two needs distance <= 2, so a strict limit of 3 never trips
        env = gen_random_environment(4, LAD2, 900)
        alg = gen_random_algorithm(env, 901)
        rule = TransformedRule("two", alg, hamming_radius=3, shared_state=False)
        for v in env.inputs():
            rule(v)
        assert rule.max_radius <= 2
