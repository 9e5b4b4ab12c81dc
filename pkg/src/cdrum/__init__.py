"""Consumption-dependent random utility: axioms, recovery, feasibility tests and logit special cases."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FLOAT,
    RATIONAL,
    ConditionalChoiceSystem,
    ObservationDomain,
    RandomJointChoiceRule,
    Universe,
    from_conditional,
    marginal_table,
    rule_from_array,
    to_conditional,
    validate_rjcr,
)
from .errors import (  # noqa: E402
    CdrumError,
    ChoiceOutsideMenu,
    ConservationViolated,
    DomainIncomplete,
    MarginalityViolated,
    NegativeCapacity,
    NegativeProbability,
    NormalizationFailure,
    NotCdrum,
    ParseError,
    PositivityViolated,
    SolverStalled,
    UniverseTooLarge,
    ValidationError,
)
from .io import dumps_dataset, load_dataset, load_domain, loads_dataset, save_dataset  # noqa: E402
from .mobius import MobiusTable, collapse, mobius_inverse, mobius_reconstruct, mobius_tables, truncated_mobius  # noqa: E402
from .axioms import (  # noqa: E402
    AxiomReport,
    Verdict,
    check_all,
    check_cdrum,
    check_choice_set_independence,
    check_complete_monotonicity,
    check_increasing_differences,
    check_marginality,
    check_recursivity,
    check_regularity,
    check_si_cdrum,
)
from .recovery import (  # noqa: E402
    CdrumRepresentation,
    FlowGraph,
    LinearOrder,
    PreferenceDistribution,
    TransitionFunction,
    build_flow_graph,
    decompose,
    evaluate_representation,
    implied_mobius,
    recover_representation,
    verify_representation,
)
from .lptest import (  # noqa: E402
    FacetSystem,
    QuadraticTestResult,
    VertexMatrix,
    build_E,
    build_F,
    matrix_sizes,
    oracle_agreement,
    test_cdrum,
    test_cdrum_facet,
    test_cdrum_vertex,
)
from .parametric import (  # noqa: E402
    HabitLogitParams,
    LearningLogitParams,
    StreakSignature,
    check_parametric_axioms,
    classify,
    eval_habit_logit,
    eval_learning_logit,
    identify_habit_logit,
    identify_learning_logit,
    stationary_distribution,
    streak,
)
from .simulate import RNG_ALGORITHM, make_rng, perturb, random_mixture, sample_choices  # noqa: E402
