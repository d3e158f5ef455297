"""Experiment harness: config-driven verification runs and regime sweeps.

A config document selects an algorithm source (a generator by name, or an
adversary document on disk), a transformation, a ladder, and budgets; the
harness runs the verification engine and renders line-oriented result
documents. Identical config and seed reproduce byte-identical documents
except for the trailing duration line. Sweep cells may fan out to worker
processes; output order is deterministic regardless of completion order.
"""

from __future__ import annotations

import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import adversaries
from .adversaries import (
    POLICY_GREEDY,
    POLICY_OPTIMAL,
    gen_all_ones,
    gen_block_adversary,
    gen_hamming_adversary,
    gen_knapsack,
    gen_random_algorithm,
    gen_random_environment,
    gen_thm1,
    stable_rng,
)
from .blackbox import Algorithm, tabulate
from .errors import NonMonotoneRuleError, ParameterError, ParseError
from .model import ValueLadder, opt_welfare, validate_levels
from .serialize import (
    CONFIG_HEADER,
    PAYMENTS_HEADER,
    RESULT_HEADER,
    SWEEP_HEADER,
    _check_header,
    adversary_document_for,
    dump_adversary,
    format_input,
    format_rational,
    load_adversary,
    load_environment,
    parse_input,
    parse_rational,
)
from .transforms import TRANSFORMATION_IDS, TransformedRule
from .verify import (
    DEFAULT_ENUM_BOUND,
    CachedRule,
    MonotonicityReport,
    WelfareReport,
    check_monotone,
    myerson_payments,
    welfare_report,
)

_RANDOMIZED_GENERATORS = frozenset({"thm1", "random"})


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run bit for bit."""

    transformation: str | None = None
    generator: str | None = None
    params: tuple[tuple[str, str], ...] = ()
    algorithm_path: str | None = None
    environment_path: str | None = None
    ladder: ValueLadder | None = None
    seed: int | None = None
    enum_bound: int = DEFAULT_ENUM_BOUND
    query_budget: tuple[int, int] | None = None  # (c, d): budget c * n^d per evaluation
    hamming_radius: int | None = None
    sweep_n: tuple[int, ...] = ()
    sweep_ratios: tuple[str, ...] = ()
    panel_random: int = 20
    threshold: Fraction = Fraction(1, 2)
    input_text: str | None = None
    workers: int = 1
    output: str | None = None

    def param(self, key: str) -> str | None:
        for k, v in self.params:
            if k == key:
                return v
        return None

    def echo_lines(self) -> list[str]:
        """Config echo for result documents; sufficient to reproduce the run."""
        lines = []
        if self.transformation is not None:
            lines.append(f"config.transformation {self.transformation}")
        if self.generator is not None:
            lines.append(f"config.generator {self.generator}")
        for key, value in self.params:
            lines.append(f"config.param.{key} {value}")
        if self.algorithm_path is not None:
            lines.append(f"config.algorithm {self.algorithm_path}")
        if self.environment_path is not None:
            lines.append(f"config.environment {self.environment_path}")
        if self.ladder is not None:
            lines.append("config.ladder " + " ".join(format_rational(v) for v in self.ladder.values))
        if self.seed is not None:
            lines.append(f"config.seed {self.seed}")
        lines.append(f"config.enum-bound {self.enum_bound}")
        if self.query_budget is not None:
            lines.append(f"config.query-budget {self.query_budget[0]} {self.query_budget[1]}")
        if self.hamming_radius is not None:
            lines.append(f"config.hamming-radius {self.hamming_radius}")
        if self.sweep_n:
            lines.append("config.sweep-n " + " ".join(str(n) for n in self.sweep_n))
        if self.sweep_ratios:
            lines.append("config.sweep-ratio " + " ".join(self.sweep_ratios))
        if self.sweep_n or self.sweep_ratios:
            lines.append(f"config.panel-random {self.panel_random}")
            lines.append(f"config.threshold {format_rational(self.threshold)}")
        if self.input_text is not None:
            lines.append(f"config.input {self.input_text}")
        return lines


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    config = ExperimentConfig()
    params: list[tuple[str, str]] = []
    for number, fields in _check_header(text, CONFIG_HEADER, source):
        key, args = fields[0], fields[1:]

        def need(count: int, what: str) -> None:
            if len(args) != count:
                raise ParseError(f"{key} takes {what}", source=source, line=number)

        if key == "transformation":
            need(1, "one identifier")
            config.transformation = args[0]
        elif key == "generator":
            need(1, "one generator name")
            config.generator = args[0]
        elif key == "param":
            if len(args) < 2:
                raise ParseError("param takes a key and a value", source=source, line=number)
            params.append((args[0], " ".join(args[1:])))
        elif key == "algorithm":
            need(1, "one path")
            config.algorithm_path = args[0]
        elif key == "environment":
            need(1, "one path")
            config.environment_path = args[0]
        elif key == "ladder":
            values = [parse_rational(t, source=source, line=number) for t in args]
            try:
                config.ladder = ValueLadder(tuple(values))
            except ParameterError as exc:
                raise ParseError(f"ladder: {exc}", source=source, line=number) from exc
        elif key == "seed":
            need(1, "one integer")
            config.seed = _parse_int(args[0], key, source, number)
        elif key == "enum-bound":
            need(1, "one integer")
            config.enum_bound = _parse_int(args[0], key, source, number)
        elif key == "query-budget":
            need(2, "two integers c and d (budget c * n^d)")
            config.query_budget = (
                _parse_int(args[0], key, source, number),
                _parse_int(args[1], key, source, number),
            )
        elif key == "hamming-radius":
            need(1, "one integer")
            config.hamming_radius = _parse_int(args[0], key, source, number)
        elif key == "sweep-n":
            if not args:
                raise ParseError("sweep-n needs at least one value", source=source, line=number)
            config.sweep_n = tuple(_parse_int(a, key, source, number) for a in args)
        elif key == "sweep-ratio":
            if not args:
                raise ParseError("sweep-ratio needs at least one token", source=source, line=number)
            config.sweep_ratios = tuple(args)
        elif key == "panel-random":
            need(1, "one integer")
            config.panel_random = _parse_int(args[0], key, source, number)
        elif key == "threshold":
            need(1, "one rational")
            config.threshold = parse_rational(args[0], source=source, line=number)
        elif key == "input":
            need(1, "one input string")
            config.input_text = args[0]
        elif key == "workers":
            need(1, "one integer")
            config.workers = _parse_int(args[0], key, source, number)
        elif key == "output":
            need(1, "one path")
            config.output = args[0]
        else:
            raise ParseError(f"unknown key {key!r}", source=source, line=number)
    config.params = tuple(params)
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def _parse_int(token: str, key: str, source: str, line: int) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise ParseError(f"{key}: not an integer: {token!r}", source=source, line=line) from exc


_RATIO_PATTERN = re.compile(r"^(\d*)n(?:\^(\d+))?(?:\+(\d+))?$")


def ratio_value(token: str, n: int) -> Fraction:
    """Evaluate a high/low ratio token at agent count n.

    Tokens are exact rationals ("5", "7/2") or formulas in n: "n", "2n",
    "n^2", "n+1", "2n+1".
    """
    match = _RATIO_PATTERN.match(token)
    if match:
        coefficient = int(match.group(1)) if match.group(1) else 1
        exponent = int(match.group(2)) if match.group(2) else 1
        addend = int(match.group(3)) if match.group(3) else 0
        return Fraction(coefficient * n**exponent + addend)
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"bad ratio token {token!r}") from exc


def ladder_for_ratio(token: str, n: int) -> ValueLadder:
    ratio = ratio_value(token, n)
    if ratio <= 1:
        raise ParameterError(f"ratio {token!r} evaluates to {ratio} at n={n}; must exceed 1")
    return ValueLadder.of(1, ratio)


def _require_param(config: ExperimentConfig, key: str) -> str:
    value = config.param(key)
    if value is None:
        raise ParameterError(f"generator {config.generator!r} needs param {key!r}")
    return value


def build_algorithm(config: ExperimentConfig) -> Algorithm:
    """Resolve the configured algorithm source: generator or adversary document."""
    if (config.generator is None) == (config.algorithm_path is None):
        raise ParameterError("exactly one of 'generator' and 'algorithm' must be configured")
    if config.algorithm_path is not None:
        if config.ladder is not None:
            raise ParameterError("ladder comes from the algorithm document; drop the ladder key")
        doc = load_adversary(
            Path(config.algorithm_path).read_text(encoding="utf-8"), source=config.algorithm_path
        )
        return doc.build_algorithm()
    name = config.generator
    if name not in adversaries.GENERATOR_NAMES:
        raise ParameterError(
            f"unknown generator {name!r}; known: {', '.join(adversaries.GENERATOR_NAMES)}"
        )
    if name in _RANDOMIZED_GENERATORS and config.seed is None:
        raise ParameterError(f"generator {name!r} is randomized and needs a seed")
    ladder = config.ladder if config.ladder is not None else adversaries.DEFAULT_LADDER
    if name == "thm1":
        m = int(_require_param(config, "m"))
        return gen_thm1(m, config.seed, ladder).algorithm
    if name == "block":
        L1 = int(_require_param(config, "L1"))
        L2 = int(_require_param(config, "L2"))
        L3 = int(_require_param(config, "L3"))
        ones = int(_require_param(config, "ones"))
        positions_text = config.param("positions")
        positions = (
            [int(p) for p in positions_text.split(",")] if positions_text is not None else None
        )
        if positions is None and config.seed is None:
            raise ParameterError("generator 'block' needs a seed or explicit positions")
        return gen_block_adversary(
            L1, L2, L3, ones, seed=config.seed, positions=positions, ladder=ladder
        ).algorithm
    if name == "hamming":
        m = int(_require_param(config, "m"))
        f_value = int(_require_param(config, "f"))
        return gen_hamming_adversary(m, f_value, ladder).algorithm
    if name == "all-ones":
        return gen_all_ones(int(_require_param(config, "n")), ladder)
    if name == "knapsack":
        weights = [Fraction(w) for w in _require_param(config, "weights").split(",")]
        capacity = Fraction(_require_param(config, "capacity"))
        policy_key = config.param("policy") or "greedy"
        policy = {"greedy": POLICY_GREEDY, "optimal": POLICY_OPTIMAL}.get(policy_key)
        if policy is None:
            raise ParameterError(f"knapsack policy must be greedy or optimal, got {policy_key!r}")
        return gen_knapsack(weights, capacity, policy, ladder)
    # name == "random"
    n = int(_require_param(config, "n"))
    env = gen_random_environment(n, ladder, config.seed)
    return gen_random_algorithm(env, config.seed + 1)


def standard_panel(
    n: int,
    ladder: ValueLadder,
    seed: int,
    *,
    random_count: int = 20,
    include_optimal: bool = False,
) -> list[Algorithm]:
    """The sweep panel: all-ones, knapsack-greedy (optionally the optimal
    policy too), and `random_count` seeded random algorithms over seeded
    random environments. Deterministic in (n, ladder, seed)."""
    rng = stable_rng("panel", n, seed)
    weights = [rng.randint(1, 3) for _ in range(n)]
    capacity = max(1, sum(weights) // 2)
    panel = [
        gen_all_ones(n, ladder),
        gen_knapsack(weights, capacity, POLICY_GREEDY, ladder),
    ]
    if include_optimal:
        panel.append(gen_knapsack(weights, capacity, POLICY_OPTIMAL, ladder))
    for i in range(random_count):
        env = gen_random_environment(n, ladder, seed + 1000 + i)
        panel.append(gen_random_algorithm(env, seed + 2000 + i))
    return panel


@dataclass
class VerifyEntry:
    """Verification results for one (algorithm, transformation) pair."""

    algorithm: str
    n: int
    k: int
    monotone: MonotonicityReport
    welfare: WelfareReport
    max_queries: int
    max_radius: int

    def lines(self, prefix: str = "") -> list[str]:
        mono, wf = self.monotone, self.welfare

        def rational(x) -> str:
            return "none" if x is None else format_rational(x)

        out = [
            f"{prefix}algorithm {self.algorithm}",
            f"{prefix}n {self.n}",
            f"{prefix}k {self.k}",
            f"{prefix}monotone.sampled {str(mono.sampled).lower()}",
            f"{prefix}monotone.checked-pairs {mono.checked_pairs}",
            f"{prefix}monotone.evaluations {mono.evaluations}",
            f"{prefix}monotone.violations {len(mono.violations)}",
        ]
        for violation in mono.violations:
            out.append(
                f"{prefix}violation {format_input(violation.input)} agent {violation.agent} "
                f"raise {violation.level_low} {violation.level_high}"
            )
        out.extend(
            [
                f"{prefix}welfare.sampled {str(wf.sampled).lower()}",
                f"{prefix}welfare.total-inputs {wf.total_inputs}",
                f"{prefix}welfare.full-count {wf.full_welfare_count}",
                f"{prefix}welfare.zero-original {wf.zero_original_count}",
                f"{prefix}welfare.pointwise-min {rational(wf.pointwise_min_fraction)}",
                f"{prefix}welfare.sum-rule {format_rational(wf.sum_welfare_rule)}",
                f"{prefix}welfare.sum-original {format_rational(wf.sum_welfare_original)}",
                f"{prefix}welfare.opt-zero {wf.opt_zero_count}",
                f"{prefix}approx.rule {rational(wf.approx_ratio_rule)}",
                f"{prefix}approx.original {rational(wf.approx_ratio_original)}",
                f"{prefix}queries.max-per-eval {self.max_queries}",
                f"{prefix}queries.max-radius {self.max_radius}",
            ]
        )
        return out


@dataclass
class ResultRecord:
    """One verification run (or one sweep cell): config echo plus entries."""

    config_lines: list[str]
    entries: list[VerifyEntry]
    cell: tuple[int, str] | None = None  # (n, ratio token) for sweep cells
    duration_ms: int = 0

    @property
    def total_violations(self) -> int:
        return sum(len(e.monotone.violations) for e in self.entries)

    def min_pointwise(self) -> Fraction | None:
        fractions = [
            e.welfare.pointwise_min_fraction
            for e in self.entries
            if e.welfare.pointwise_min_fraction is not None
        ]
        return min(fractions) if fractions else None

    def body_lines(self, prefix: str = "") -> list[str]:
        lines: list[str] = []
        if self.cell is not None:
            lines.append(f"{prefix}cell.n {self.cell[0]}")
            lines.append(f"{prefix}cell.ratio {self.cell[1]}")
        for entry in self.entries:
            lines.extend(entry.lines(prefix))
        return lines

    def to_document(self) -> str:
        lines = [RESULT_HEADER, *self.config_lines, *self.body_lines(), f"duration-ms {self.duration_ms}"]
        return "\n".join(lines) + "\n"


def _budget_for(config: ExperimentConfig, n: int) -> int | None:
    if config.query_budget is None:
        return None
    c, d = config.query_budget
    return c * n**d


def _verify_entry(
    config: ExperimentConfig, algorithm: Algorithm, transformation: str
) -> VerifyEntry:
    env = algorithm.env
    # A Hamming restriction forces fresh per-evaluation state so that every
    # query of every evaluation actually reaches the restricted black box.
    rule = TransformedRule(
        transformation,
        algorithm,
        query_budget=_budget_for(config, env.n),
        hamming_radius=config.hamming_radius,
        shared_state=config.hamming_radius is None,
    )
    cached = CachedRule(rule)
    seed = config.seed if config.seed is not None else 0
    monotone = check_monotone(cached, env, enum_bound=config.enum_bound, seed=seed)
    welfare = welfare_report(cached, algorithm, env, enum_bound=config.enum_bound, seed=seed)
    return VerifyEntry(
        algorithm=algorithm.name,
        n=env.n,
        k=env.k,
        monotone=monotone,
        welfare=welfare,
        max_queries=rule.max_queries,
        max_radius=rule.max_radius,
    )


def _validate_transformation(config: ExperimentConfig) -> str:
    if config.transformation is None:
        raise ParameterError("config needs a transformation")
    if config.transformation not in TRANSFORMATION_IDS:
        raise ParameterError(
            f"unknown transformation {config.transformation!r}; known: {', '.join(TRANSFORMATION_IDS)}"
        )
    return config.transformation


def cmd_verify(config: ExperimentConfig) -> ResultRecord:
    """Run check_monotone + welfare_report + approximation ratios for the
    configured (transformation, algorithm, environment)."""
    started = time.monotonic()
    transformation = _validate_transformation(config)
    algorithm = build_algorithm(config)
    entry = _verify_entry(config, algorithm, transformation)
    record = ResultRecord(
        config_lines=config.echo_lines(),
        entries=[entry],
        duration_ms=int((time.monotonic() - started) * 1000),
    )
    if config.output:
        Path(config.output).write_text(record.to_document(), encoding="utf-8")
    return record


def _sweep_cell(config: ExperimentConfig, n: int, ratio_token: str) -> ResultRecord:
    started = time.monotonic()
    transformation = _validate_transformation(config)
    ladder = ladder_for_ratio(ratio_token, n)
    seed = config.seed if config.seed is not None else 0
    panel = standard_panel(n, ladder, seed, random_count=config.panel_random)
    entries = [_verify_entry(config, algorithm, transformation) for algorithm in panel]
    return ResultRecord(
        config_lines=config.echo_lines(),
        entries=entries,
        cell=(n, ratio_token),
        duration_ms=int((time.monotonic() - started) * 1000),
    )


def _sweep_cell_job(args: tuple[ExperimentConfig, int, str]) -> ResultRecord:
    return _sweep_cell(*args)


def cmd_regime_sweep(config: ExperimentConfig) -> tuple[list[ResultRecord], str]:
    """Run cmd_verify for every (n, ratio) cell against the standard panel.

    Returns the records in deterministic (n, ratio, algorithm) order plus
    the rendered sweep document.
    """
    started = time.monotonic()
    _validate_transformation(config)
    if not config.sweep_n or not config.sweep_ratios:
        raise ParameterError("sweep needs nonempty sweep-n and sweep-ratio ranges")
    cells = [(n, token) for n in config.sweep_n for token in config.sweep_ratios]
    if config.workers > 1:
        jobs = [(config, n, token) for n, token in cells]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_sweep_cell_job, jobs))
    else:
        records = [_sweep_cell(config, n, token) for n, token in cells]

    lines = [SWEEP_HEADER, *config.echo_lines()]
    for record in records:
        lines.extend(record.body_lines())
    for record in records:
        n, token = record.cell
        minimum = record.min_pointwise()
        meets = minimum is not None and minimum >= config.threshold
        lines.append(
            f"summary n {n} ratio {token} monotone {str(record.total_violations == 0).lower()} "
            f"pointwise-min {'none' if minimum is None else format_rational(minimum)} "
            f"meets-threshold {str(meets).lower()}"
        )
    lines.append(f"duration-ms {int((time.monotonic() - started) * 1000)}")
    document = "\n".join(lines) + "\n"
    if config.output:
        Path(config.output).write_text(document, encoding="utf-8")
    return records, document


def cmd_payments(config: ExperimentConfig) -> str:
    """Allocation and critical-value payments at one input.

    Refuses (NonMonotoneRuleError, carrying the report) when the configured
    rule is not monotone.
    """
    transformation = _validate_transformation(config)
    if config.input_text is None:
        raise ParameterError("payments needs an input")
    algorithm = build_algorithm(config)
    env = algorithm.env
    v = parse_input(config.input_text, env.k)
    if v.n != env.n:
        raise ParameterError(f"input has {v.n} agents, environment has {env.n}")
    validate_levels(v, env.ladder)
    rule = CachedRule(
        TransformedRule(transformation, algorithm, query_budget=_budget_for(config, env.n))
    )
    seed = config.seed if config.seed is not None else 0
    monotone = check_monotone(rule, env, enum_bound=config.enum_bound, seed=seed)
    if not monotone.is_monotone:
        raise NonMonotoneRuleError(monotone)
    allocation = rule(v)
    payments = myerson_payments(rule, v, env.ladder)
    lines = [
        PAYMENTS_HEADER,
        *config.echo_lines(),
        f"input {format_input(v)}",
        f"allocation {allocation.to_string()}",
    ]
    for agent, (bit, payment) in enumerate(zip(allocation.bits, payments)):
        lines.append(f"agent {agent} bit {bit} payment {format_rational(payment)}")
    document = "\n".join(lines) + "\n"
    if config.output:
        Path(config.output).write_text(document, encoding="utf-8")
    return document


def cmd_adversary(config: ExperimentConfig) -> str:
    """Generate an adversary document: environment plus case-table algorithm,
    reloadable by cmd_verify."""
    if config.generator is None:
        raise ParameterError("adversary generation needs a generator")
    algorithm = build_algorithm(config)
    if algorithm.table is None:
        algorithm = Algorithm(algorithm.env, algorithm.rule, algorithm.name, tabulate(algorithm))
    doc = adversary_document_for(
        algorithm,
        generator=config.generator,
        seed=config.seed,
        params=config.params,
    )
    text = dump_adversary(doc)
    if config.output:
        Path(config.output).write_text(text, encoding="utf-8")
    return text


def cmd_opt(config: ExperimentConfig) -> Fraction:
    """Direct optimal-welfare query against an environment document or a
    generated algorithm's environment."""
    if config.input_text is None:
        raise ParameterError("opt needs an input")
    if config.environment_path is not None:
        env = load_environment(
            Path(config.environment_path).read_text(encoding="utf-8"),
            source=config.environment_path,
        )
    else:
        env = build_algorithm(config).env
    v = parse_input(config.input_text, env.k)
    if v.n != env.n:
        raise ParameterError(f"input has {v.n} agents, environment has {env.n}")
    validate_levels(v, env.ladder)
    return opt_welfare(v, env.feasibility, env.ladder)
