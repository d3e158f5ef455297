"""dcbox: build, transform, and exhaustively verify allocation algorithms
in downward-closed single-parameter environments."""

from .adversaries import (
    BlockAdversaryInstance,
    HammingAdversaryInstance,
    Thm1Instance,
    gen_all_ones,
    gen_block_adversary,
    gen_hamming_adversary,
    gen_knapsack,
    gen_random_algorithm,
    gen_random_environment,
    gen_thm1,
)
from .blackbox import (
    Algorithm,
    CaseTable,
    FeasibilityOracle,
    InstrumentedBlackBox,
    feasibility_query,
    hamming_distance,
    tabulate,
)
from .errors import (
    DcboxError,
    DimensionError,
    HammingRestrictionViolation,
    InfeasibleOutputError,
    NonMonotoneRuleError,
    ParameterError,
    ParseError,
    QueryBudgetExceeded,
)
from .model import (
    Allocation,
    Environment,
    FeasibilitySet,
    ValueLadder,
    ValuationVector,
    all_inputs,
    is_feasible,
    normalize_antichain,
    opt_welfare,
    welfare,
)
from .transforms import (
    TRANSFORMATION_IDS,
    ProvisionalState,
    Transformation,
    TransformedRule,
    classify_allocation,
    higher_than,
    inputs_at_distance,
    t_const,
    t_multi,
    t_two,
    t_two_plus,
)
from .verify import (
    DEFAULT_ENUM_BOUND,
    CachedRule,
    MonotonicityReport,
    MonotonicityViolation,
    WelfareReport,
    approx_ratio,
    check_monotone,
    fraction_full_welfare,
    myerson_payments,
    welfare_report,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "Allocation",
    "BlockAdversaryInstance",
    "CachedRule",
    "CaseTable",
    "DcboxError",
    "DEFAULT_ENUM_BOUND",
    "DimensionError",
    "Environment",
    "FeasibilityOracle",
    "FeasibilitySet",
    "HammingAdversaryInstance",
    "HammingRestrictionViolation",
    "InfeasibleOutputError",
    "InstrumentedBlackBox",
    "MonotonicityReport",
    "MonotonicityViolation",
    "NonMonotoneRuleError",
    "ParameterError",
    "ParseError",
    "ProvisionalState",
    "QueryBudgetExceeded",
    "Thm1Instance",
    "TRANSFORMATION_IDS",
    "Transformation",
    "TransformedRule",
    "ValueLadder",
    "ValuationVector",
    "WelfareReport",
    "all_inputs",
    "approx_ratio",
    "check_monotone",
    "classify_allocation",
    "feasibility_query",
    "fraction_full_welfare",
    "gen_all_ones",
    "gen_block_adversary",
    "gen_hamming_adversary",
    "gen_knapsack",
    "gen_random_algorithm",
    "gen_random_environment",
    "gen_thm1",
    "hamming_distance",
    "higher_than",
    "inputs_at_distance",
    "is_feasible",
    "myerson_payments",
    "normalize_antichain",
    "opt_welfare",
    "t_const",
    "t_multi",
    "t_two",
    "t_two_plus",
    "tabulate",
    "welfare",
    "welfare_report",
]
